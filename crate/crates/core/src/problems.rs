//! Stochastic problems with known expected objectives.
//!
//! The closed-form problems expose `f`, `x*`, `ḡ(x)` and a noise variance
//! proxy so that regret and oracle clip regions can be computed exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::sync::Arc;

use rand::seq::index;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::clipmath::Vector;
use crate::error::{invalid, Error, Result};
use crate::transform::sign;

/// Noise variance proxy and coordinate gradient bound for bounded-noise problems.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseProxy {
    pub variance: f64,
    pub grad_bound: f64,
}

#[derive(Clone, Debug)]
pub enum StochasticProblem {
    /// `f(x) = ‖x‖₁`, `g = sign(x) + U[-l, l]` per coordinate.
    AbsUniform { halfwidth: f64, dim: usize },
    /// Gradient `x-3` or `x+3`, each with probability ½; `f(x) = ¼(x-3)² + ¼(x+3)²`.
    QuadraticMixture,
    /// `4·sign(4x-1)` w.p. ¼, `sign(x+1)` w.p. ¾; `f(x) = ¼|4x-1| + ¾|x+1|`.
    AliasingPiecewise,
    /// Minibatch logistic regression on a synthetic separable dataset.
    LogisticSynthetic {
        dataset: Arc<SyntheticDataset>,
        batch_size: usize,
    },
}

impl StochasticProblem {
    pub fn abs_uniform(halfwidth: f64, dim: usize) -> Result<Self> {
        if !(halfwidth.is_finite() && halfwidth >= 0.0) {
            return Err(invalid(format!("noise half-width must be >= 0, got {halfwidth}")));
        }
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        Ok(StochasticProblem::AbsUniform { halfwidth, dim })
    }

    /// Abs problem whose proxy `σ² = (2l)²/4` equals `variance`.
    pub fn abs_uniform_with_variance(variance: f64, dim: usize) -> Result<Self> {
        if !(variance.is_finite() && variance >= 0.0) {
            return Err(invalid(format!("noise variance must be >= 0, got {variance}")));
        }
        Self::abs_uniform(variance.sqrt(), dim)
    }

    pub fn logistic(dataset: Arc<SyntheticDataset>, batch_size: usize) -> Result<Self> {
        if batch_size == 0 || batch_size > dataset.len() {
            return Err(invalid(format!(
                "batch size must lie in 1..={}, got {batch_size}",
                dataset.len()
            )));
        }
        Ok(StochasticProblem::LogisticSynthetic { dataset, batch_size })
    }

    pub fn name(&self) -> &'static str {
        match self {
            StochasticProblem::AbsUniform { .. } => "abs_uniform",
            StochasticProblem::QuadraticMixture => "quadratic_mixture",
            StochasticProblem::AliasingPiecewise => "aliasing",
            StochasticProblem::LogisticSynthetic { .. } => "logistic",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            StochasticProblem::AbsUniform { dim, .. } => *dim,
            StochasticProblem::QuadraticMixture | StochasticProblem::AliasingPiecewise => 1,
            StochasticProblem::LogisticSynthetic { dataset, .. } => dataset.param_dim(),
        }
    }

    pub fn sample_subgradient<R: Rng + ?Sized>(&self, x: &Vector, rng: &mut R) -> Result<Vector> {
        x.ensure_dim(self.dim())?;
        match self {
            StochasticProblem::AbsUniform { halfwidth, .. } => {
                let l = *halfwidth;
                Vector::new(
                    x.iter()
                        .map(|&xj| sign(xj) + l * (2.0 * rng.random::<f64>() - 1.0))
                        .collect(),
                )
            }
            StochasticProblem::QuadraticMixture => {
                let shift = if rng.random::<bool>() { 3.0 } else { -3.0 };
                x.map(|xj| xj - shift)
            }
            StochasticProblem::AliasingPiecewise => {
                let first = rng.random::<f64>() < 0.25;
                x.map(|xj| {
                    if first {
                        4.0 * sign(4.0 * xj - 1.0)
                    } else {
                        sign(xj + 1.0)
                    }
                })
            }
            StochasticProblem::LogisticSynthetic { dataset, batch_size } => {
                let picks = index::sample(rng, dataset.len(), *batch_size).into_vec();
                dataset.batch_gradient(x, &picks)
            }
        }
    }

    /// One independent sample per simulated device.
    pub fn sharded_sample<R: Rng + ?Sized>(
        &self,
        x: &Vector,
        shards: usize,
        rng: &mut R,
    ) -> Result<Vec<Vector>> {
        if shards == 0 {
            return Err(invalid("shard count must be at least 1"));
        }
        (0..shards).map(|_| self.sample_subgradient(x, rng)).collect()
    }

    /// `ḡ(x) = E[g | x]`.
    pub fn mean_gradient(&self, x: &Vector) -> Result<Vector> {
        x.ensure_dim(self.dim())?;
        match self {
            StochasticProblem::AbsUniform { .. } => Ok(x.map(sign)?),
            StochasticProblem::QuadraticMixture => Ok(x.clone()),
            StochasticProblem::AliasingPiecewise => {
                x.map(|xj| sign(4.0 * xj - 1.0) + 0.75 * sign(xj + 1.0))
            }
            StochasticProblem::LogisticSynthetic { .. } => Err(Error::Unsupported(
                "logistic problem has no closed-form conditional mean gradient".into(),
            )),
        }
    }

    /// Per-coordinate sub-Gaussian proxy `(range of g)² / 4` at `x`.
    pub fn noise_variance(&self, x: &Vector) -> Result<Vector> {
        x.ensure_dim(self.dim())?;
        match self {
            StochasticProblem::AbsUniform { halfwidth, dim } => {
                Vector::filled(*dim, halfwidth * halfwidth)
            }
            StochasticProblem::QuadraticMixture => Vector::scalar(9.0),
            StochasticProblem::AliasingPiecewise => x.map(|xj| {
                let range = 4.0 * sign(4.0 * xj - 1.0) - sign(xj + 1.0);
                range * range / 4.0
            }),
            StochasticProblem::LogisticSynthetic { .. } => Err(Error::Unsupported(
                "logistic problem has no closed-form noise proxy".into(),
            )),
        }
    }

    /// Expected objective; full-batch loss for the logistic problem.
    pub fn expected_objective(&self, x: &Vector) -> Result<f64> {
        x.ensure_dim(self.dim())?;
        Ok(match self {
            StochasticProblem::AbsUniform { .. } => x.norm_l1(),
            StochasticProblem::QuadraticMixture => {
                let x = x[0];
                0.25 * (x - 3.0).powi(2) + 0.25 * (x + 3.0).powi(2)
            }
            StochasticProblem::AliasingPiecewise => {
                let x = x[0];
                0.25 * (4.0 * x - 1.0).abs() + 0.75 * (x + 1.0).abs()
            }
            StochasticProblem::LogisticSynthetic { dataset, .. } => dataset.loss(x)?,
        })
    }

    /// `(x*, f(x*))` for the closed-form problems.
    pub fn minimizer(&self) -> Result<(Vector, f64)> {
        match self {
            StochasticProblem::AbsUniform { dim, .. } => Ok((Vector::zeros(*dim), 0.0)),
            StochasticProblem::QuadraticMixture => Ok((Vector::zeros(1), 4.5)),
            StochasticProblem::AliasingPiecewise => Ok((Vector::scalar(0.25)?, 15.0 / 16.0)),
            StochasticProblem::LogisticSynthetic { .. } => Err(Error::Unsupported(
                "logistic problem has no closed-form minimizer".into(),
            )),
        }
    }

    /// `σ² = l²` and `G = 1 + l` for the abs problem.
    pub fn noise_proxy(&self) -> Result<NoiseProxy> {
        match self {
            StochasticProblem::AbsUniform { halfwidth, .. } => Ok(NoiseProxy {
                variance: halfwidth * halfwidth,
                grad_bound: 1.0 + halfwidth,
            }),
            other => Err(Error::Unsupported(format!(
                "noise proxy is only defined for abs_uniform, not {}",
                other.name()
            ))),
        }
    }
}

/// Generation parameters for [`SyntheticDataset`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DatasetParams {
    pub n: usize,
    pub dim: usize,
    /// Distance between the two blob centres.
    pub separation: f64,
    pub noise_std: f64,
    /// Points closer than this to the separating hyperplane are redrawn.
    pub margin: f64,
    pub seed: u64,
}

impl Default for DatasetParams {
    fn default() -> Self {
        DatasetParams {
            n: 1000,
            dim: 20,
            separation: 1.0,
            noise_std: 1.0,
            margin: 0.05,
            seed: 7,
        }
    }
}

/// Two Gaussian blobs, separable through the origin by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticDataset {
    dim: usize,
    features: Vec<f64>,
    labels: Vec<bool>,
    margin: Option<f64>,
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn logistic_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl SyntheticDataset {
    pub fn generate(params: &DatasetParams) -> Result<Self> {
        let DatasetParams {
            n,
            dim,
            separation,
            noise_std,
            margin,
            seed,
        } = *params;
        if n == 0 || dim == 0 {
            return Err(invalid("dataset needs at least one point and one feature"));
        }
        if !(separation >= 0.0 && noise_std > 0.0 && margin > 0.0) {
            return Err(invalid(format!("bad dataset parameters {params:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut direction: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let len = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
        direction.iter_mut().for_each(|d| *d /= len);

        let mut features = Vec::with_capacity(n * dim);
        let mut labels = Vec::with_capacity(n);
        let mut observed = f64::INFINITY;
        let mut point = vec![0.0; dim];
        while labels.len() < n {
            let positive: bool = rng.random();
            let y = if positive { 1.0 } else { -1.0 };
            for (p, d) in point.iter_mut().zip(&direction) {
                let z: f64 = rng.sample(StandardNormal);
                *p = y * 0.5 * separation * d + noise_std * z;
            }
            let signed: f64 = y * point.iter().zip(&direction).map(|(p, d)| p * d).sum::<f64>();
            if signed >= margin {
                observed = observed.min(signed);
                features.extend_from_slice(&point);
                labels.push(positive);
            }
        }
        Ok(SyntheticDataset {
            dim,
            features,
            labels,
            margin: Some(observed),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.dim
    }

    /// Weights plus a trailing bias.
    pub fn param_dim(&self) -> usize {
        self.dim + 1
    }

    /// Smallest signed distance to the generating hyperplane; unknown for
    /// datasets loaded from CSV.
    pub fn margin(&self) -> Option<f64> {
        self.margin
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> bool {
        self.labels[i]
    }

    fn signed_label(&self, i: usize) -> f64 {
        if self.labels[i] {
            1.0
        } else {
            -1.0
        }
    }

    fn score(&self, w: &Vector, i: usize) -> f64 {
        let ws = w.as_slice();
        let (weights, bias) = ws.split_at(self.dim);
        self.row(i).iter().zip(weights).map(|(a, b)| a * b).sum::<f64>() + bias[0]
    }

    /// Mean logistic loss over the whole dataset.
    pub fn loss(&self, w: &Vector) -> Result<f64> {
        w.ensure_dim(self.param_dim())?;
        let total: f64 = (0..self.len())
            .map(|i| softplus(-self.signed_label(i) * self.score(w, i)))
            .sum();
        Ok(total / self.len() as f64)
    }

    pub fn accuracy(&self, w: &Vector) -> Result<f64> {
        w.ensure_dim(self.param_dim())?;
        let correct = (0..self.len())
            .filter(|&i| self.signed_label(i) * self.score(w, i) > 0.0)
            .count();
        Ok(correct as f64 / self.len() as f64)
    }

    /// Mean logistic-loss gradient over the rows in `indices`.
    pub fn batch_gradient(&self, w: &Vector, indices: &[usize]) -> Result<Vector> {
        w.ensure_dim(self.param_dim())?;
        if indices.is_empty() {
            return Err(Error::EmptyInput("batch"));
        }
        let mut grad = vec![0.0; self.param_dim()];
        for &i in indices {
            if i >= self.len() {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: self.len(),
                });
            }
            let y = self.signed_label(i);
            let coef = -y * logistic_sigmoid(-y * self.score(w, i));
            for (gj, xj) in grad.iter_mut().zip(self.row(i)) {
                *gj += coef * xj;
            }
            grad[self.dim] += coef;
        }
        let n = indices.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        Vector::new(grad)
    }

    pub fn full_gradient(&self, w: &Vector) -> Result<Vector> {
        let all: Vec<usize> = (0..self.len()).collect();
        self.batch_gradient(w, &all)
    }

    /// Writes `x0,…,x{d-1},label` rows with a header.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        let mut header: Vec<String> = (0..self.dim).map(|j| format!("x{j}")).collect();
        header.push("label".into());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.row(i).iter().map(|x| format!("{x:.16e}")).collect();
            rec.push(if self.labels[i] { "1" } else { "0" }.into());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut r = csv::Reader::from_reader(BufReader::new(file));
        let header = r.headers()?.clone();
        if header.len() < 2 || &header[header.len() - 1] != "label" {
            return Err(Error::Config(format!(
                "{}: expected feature columns followed by `label`",
                path.display()
            )));
        }
        let dim = header.len() - 1;
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            for field in rec.iter().take(dim) {
                let x: f64 = field
                    .parse()
                    .map_err(|_| Error::Config(format!("bad feature value `{field}`")))?;
                if !x.is_finite() {
                    return Err(Error::NonFinite("dataset feature"));
                }
                features.push(x);
            }
            labels.push(match &rec[dim] {
                "1" => true,
                "0" => false,
                other => return Err(Error::Config(format!("bad label `{other}`"))),
            });
        }
        if labels.is_empty() {
            return Err(Error::EmptyInput("dataset"));
        }
        Ok(SyntheticDataset {
            dim,
            features,
            labels,
            margin: None,
        })
    }
}
