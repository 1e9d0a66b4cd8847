//! Experiment configuration and its flat `key = value` file format.
//!
//! Each experiment kind starts from built-in defaults (the reference
//! validation setups); a config file overrides individual fields. Lines are
//! `key = value`, `#` starts a comment, and unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::clipmath::ClipRegion;
use crate::error::{Error, Result};
use crate::optimizers::OptimizerConfig;
use crate::problems::{DatasetParams, StochasticProblem, SyntheticDataset};
use crate::regions::{Estimator, RegionPolicy, DEFAULT_GAMMA_FLOOR};
use crate::theory::BoundInputs;
use crate::transform::TransformMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Aliasing,
    ValidateCarry,
    ValidateAdaptive,
    ValidateRegret,
    Sharded,
    TrainToy,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Aliasing => "aliasing",
            ExperimentKind::ValidateCarry => "validate-carry",
            ExperimentKind::ValidateAdaptive => "validate-adaptive",
            ExperimentKind::ValidateRegret => "validate-regret",
            ExperimentKind::Sharded => "sharded",
            ExperimentKind::TrainToy => "train-toy",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "aliasing" => ExperimentKind::Aliasing,
            "validate-carry" => ExperimentKind::ValidateCarry,
            "validate-adaptive" => ExperimentKind::ValidateAdaptive,
            "validate-regret" => ExperimentKind::ValidateRegret,
            "sharded" => ExperimentKind::Sharded,
            "train-toy" => ExperimentKind::TrainToy,
            other => return Err(Error::Config(format!("unknown experiment kind `{other}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSpec {
    AbsUniform { noise_variance: f64, dim: usize },
    QuadraticMixture,
    Aliasing,
    Logistic { dataset: DatasetParams, batch_size: usize },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<StochasticProblem> {
        match self {
            ProblemSpec::AbsUniform { noise_variance, dim } => {
                StochasticProblem::abs_uniform_with_variance(*noise_variance, *dim)
            }
            ProblemSpec::QuadraticMixture => Ok(StochasticProblem::QuadraticMixture),
            ProblemSpec::Aliasing => Ok(StochasticProblem::AliasingPiecewise),
            ProblemSpec::Logistic { dataset, batch_size } => StochasticProblem::logistic(
                Arc::new(SyntheticDataset::generate(dataset)?),
                *batch_size,
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EstimatorSpec {
    Welford,
    Ewma { decay: f64 },
}

impl EstimatorSpec {
    fn build(&self, dim: usize) -> Result<Estimator> {
        match *self {
            EstimatorSpec::Welford => Ok(Estimator::welford(dim)),
            EstimatorSpec::Ewma { decay } => Estimator::ewma(decay, dim),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RegionSpec {
    Unbounded,
    Component { gamma: f64 },
    Norm { gamma: f64 },
    OracleAdditive { alpha: f64 },
    OracleVariance { beta: f64 },
    OracleProportional { c: f64 },
    Proportional { estimator: EstimatorSpec, c: f64 },
    AdaptiveAb { estimator: EstimatorSpec, a: f64, b: f64 },
}

impl RegionSpec {
    pub fn name(&self) -> &'static str {
        match self {
            RegionSpec::Unbounded => "unbounded",
            RegionSpec::Component { .. } => "component",
            RegionSpec::Norm { .. } => "norm",
            RegionSpec::OracleAdditive { .. } => "oracle_additive",
            RegionSpec::OracleVariance { .. } => "oracle_variance",
            RegionSpec::OracleProportional { .. } => "oracle_proportional",
            RegionSpec::Proportional { .. } => "proportional",
            RegionSpec::AdaptiveAb { .. } => "adaptive",
        }
    }

    pub fn build(&self, dim: usize, floor: f64) -> Result<RegionPolicy> {
        let policy = match *self {
            RegionSpec::Unbounded => RegionPolicy::Fixed(ClipRegion::Unbounded),
            RegionSpec::Component { gamma } => RegionPolicy::Fixed(ClipRegion::component(gamma)?),
            RegionSpec::Norm { gamma } => RegionPolicy::Fixed(ClipRegion::norm(gamma)?),
            RegionSpec::OracleAdditive { alpha } => RegionPolicy::oracle_additive(alpha)?,
            RegionSpec::OracleVariance { beta } => RegionPolicy::oracle_variance(beta)?,
            RegionSpec::OracleProportional { c } => RegionPolicy::OracleProportional { c, floor },
            RegionSpec::Proportional { estimator, c } => RegionPolicy::Proportional {
                estimator: estimator.build(dim)?,
                c,
                floor,
            },
            RegionSpec::AdaptiveAb { estimator, a, b } => RegionPolicy::AdaptiveAb {
                estimator: estimator.build(dim)?,
                a,
                b,
                floor,
            },
        };
        policy.validate()?;
        Ok(policy)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridParam {
    Alpha,
    Beta,
    NoiseVariance,
    Gamma,
    Lr,
}

impl GridParam {
    pub fn name(&self) -> &'static str {
        match self {
            GridParam::Alpha => "alpha",
            GridParam::Beta => "beta",
            GridParam::NoiseVariance => "noise_variance",
            GridParam::Gamma => "gamma",
            GridParam::Lr => "lr",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "alpha" => GridParam::Alpha,
            "beta" => GridParam::Beta,
            "noise_variance" => GridParam::NoiseVariance,
            "gamma" => GridParam::Gamma,
            "lr" => GridParam::Lr,
            other => return Err(Error::Config(format!("unknown grid parameter `{other}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub param: GridParam,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Key for the random streams; defaults to the kind name.
    pub experiment_id: String,
    pub problem: ProblemSpec,
    pub optimizer: OptimizerConfig,
    pub transform: TransformMode,
    pub region: RegionSpec,
    pub gamma_floor: f64,
    /// `T`.
    pub steps: u64,
    /// Initial value for every coordinate of `x₁`.
    pub init: f64,
    pub seeds: Vec<u64>,
    pub grid: Option<Grid>,
    pub delta: f64,
    pub out: PathBuf,
    pub full_trace: bool,
    pub threads: Option<usize>,
    pub shards: usize,
    pub max_epochs: usize,
    /// Base optimizers swept by `train-toy`.
    pub toy_optimizers: Vec<OptimizerConfig>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

impl ExperimentConfig {
    /// Built-in defaults for `kind`.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let abs = ProblemSpec::AbsUniform {
            noise_variance: 0.1,
            dim: 1,
        };
        let base = ExperimentConfig {
            kind,
            experiment_id: kind.name().to_string(),
            problem: abs.clone(),
            optimizer: OptimizerConfig::sgd(0.1),
            transform: TransformMode::UClip,
            region: RegionSpec::OracleAdditive { alpha: 0.1 },
            gamma_floor: DEFAULT_GAMMA_FLOOR,
            steps: 10_000,
            init: 100.0,
            seeds: (1..=100).collect(),
            grid: None,
            delta: 0.01,
            out: PathBuf::from("results"),
            full_trace: false,
            threads: None,
            shards: 4,
            max_epochs: 100,
            toy_optimizers: vec![
                OptimizerConfig::sgd(0.05),
                OptimizerConfig::momentum(0.005, 0.9),
                OptimizerConfig::adam(0.005, 0.9, 0.999),
            ],
        };
        match kind {
            ExperimentKind::Aliasing => ExperimentConfig {
                problem: ProblemSpec::Aliasing,
                optimizer: OptimizerConfig::sgd(0.01),
                region: RegionSpec::Component { gamma: 2.0 },
                steps: 1500,
                init: 2.0,
                seeds: (1..=20).collect(),
                full_trace: true,
                ..base
            },
            ExperimentKind::ValidateCarry => ExperimentConfig {
                seeds: (1..=1000).collect(),
                grid: Some(Grid {
                    param: GridParam::Alpha,
                    values: (1..=10).map(|i| i as f64 / 10.0).collect(),
                }),
                ..base
            },
            ExperimentKind::ValidateAdaptive => ExperimentConfig {
                region: RegionSpec::OracleVariance { beta: 0.25 },
                seeds: (1..=1000).collect(),
                grid: Some(Grid {
                    param: GridParam::Beta,
                    values: linspace(0.5, 3.0, 6),
                }),
                ..base
            },
            ExperimentKind::ValidateRegret => base,
            ExperimentKind::Sharded => base,
            ExperimentKind::TrainToy => ExperimentConfig {
                problem: ProblemSpec::Logistic {
                    dataset: DatasetParams::default(),
                    batch_size: 10,
                },
                optimizer: OptimizerConfig::sgd(0.05),
                region: RegionSpec::Norm { gamma: 0.5 },
                init: 0.0,
                seeds: (1..=5).collect(),
                ..base
            },
        }
    }

    pub fn from_file(kind: ExperimentKind, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(kind, &text)
    }

    /// Parses `key = value` text over the defaults for `kind`.
    pub fn parse(kind: ExperimentKind, text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let k = k.trim().to_string();
            if !KNOWN_KEYS.contains(&k.as_str()) {
                return Err(Error::Config(format!("line {}: unknown key `{k}`", lineno + 1)));
            }
            if kv.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{k}`", lineno + 1)));
            }
        }
        let mut kv = Keys(kv);
        let kind = match kv.take("kind") {
            Some(k) => {
                let parsed = ExperimentKind::parse(&k)?;
                if parsed != kind {
                    return Err(Error::Config(format!(
                        "config is for `{}` but was given to `{}`",
                        parsed.name(),
                        kind.name()
                    )));
                }
                parsed
            }
            None => kind,
        };
        let mut cfg = Self::defaults(kind);
        cfg.apply(&mut kv)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, kv: &mut Keys) -> Result<()> {
        if let Some(id) = kv.take("experiment_id") {
            self.experiment_id = id;
        }

        // Problem.
        let problem_name = kv.take("problem");
        let mut problem = match problem_name.as_deref() {
            None => self.problem.clone(),
            Some("abs_uniform") => match &self.problem {
                p @ ProblemSpec::AbsUniform { .. } => p.clone(),
                _ => ProblemSpec::AbsUniform {
                    noise_variance: 0.1,
                    dim: 1,
                },
            },
            Some("quadratic_mixture") => ProblemSpec::QuadraticMixture,
            Some("aliasing") => ProblemSpec::Aliasing,
            Some("logistic") => match &self.problem {
                p @ ProblemSpec::Logistic { .. } => p.clone(),
                _ => ProblemSpec::Logistic {
                    dataset: DatasetParams::default(),
                    batch_size: 10,
                },
            },
            Some(other) => return Err(Error::Config(format!("unknown problem `{other}`"))),
        };
        match &mut problem {
            ProblemSpec::AbsUniform { noise_variance, dim } => {
                kv.f64_into("noise_variance", noise_variance)?;
                kv.usize_into("dim", dim)?;
            }
            ProblemSpec::Logistic { dataset, batch_size } => {
                kv.usize_into("batch_size", batch_size)?;
                kv.usize_into("dataset_size", &mut dataset.n)?;
                kv.usize_into("dataset_dim", &mut dataset.dim)?;
                kv.f64_into("separation", &mut dataset.separation)?;
                kv.f64_into("noise_std", &mut dataset.noise_std)?;
                kv.f64_into("margin", &mut dataset.margin)?;
                kv.u64_into("dataset_seed", &mut dataset.seed)?;
            }
            _ => {}
        }
        self.problem = problem;

        // Optimizer.
        let mut lr = self.optimizer.lr();
        kv.f64_into("lr", &mut lr)?;
        let (mut decay, mut beta1, mut beta2, mut eps) = match self.optimizer {
            OptimizerConfig::Momentum { decay, .. } | OptimizerConfig::Nesterov { decay, .. } => {
                (decay, 0.9, 0.999, 1e-8)
            }
            OptimizerConfig::Adam {
                beta1, beta2, eps, ..
            } => (0.9, beta1, beta2, eps),
            OptimizerConfig::Sgd { .. } => (0.9, 0.9, 0.999, 1e-8),
        };
        kv.f64_into("momentum", &mut decay)?;
        kv.f64_into("beta1", &mut beta1)?;
        kv.f64_into("beta2", &mut beta2)?;
        kv.f64_into("eps", &mut eps)?;
        let opt_name = kv.take("optimizer");
        self.optimizer = match opt_name.as_deref().unwrap_or(self.optimizer.name()) {
            "sgd" => OptimizerConfig::Sgd { lr },
            "momentum" => OptimizerConfig::Momentum { lr, decay },
            "nesterov" => OptimizerConfig::Nesterov { lr, decay },
            "adam" => OptimizerConfig::Adam {
                lr,
                beta1,
                beta2,
                eps,
            },
            other => return Err(Error::Config(format!("unknown optimizer `{other}`"))),
        };

        if let Some(t) = kv.take("transform") {
            self.transform = TransformMode::parse(&t)?;
        }

        // Region.
        let (mut gamma, mut alpha, mut beta, mut c, mut a, mut b) = (1.0, 0.1, 0.25, 10.0, 1.0, 2.0);
        let mut estimator = EstimatorSpec::Welford;
        match self.region {
            RegionSpec::Component { gamma: g } | RegionSpec::Norm { gamma: g } => gamma = g,
            RegionSpec::OracleAdditive { alpha: x } => alpha = x,
            RegionSpec::OracleVariance { beta: x } => beta = x,
            RegionSpec::OracleProportional { c: x } => c = x,
            RegionSpec::Proportional { estimator: e, c: x } => {
                estimator = e;
                c = x;
            }
            RegionSpec::AdaptiveAb {
                estimator: e,
                a: x,
                b: y,
            } => {
                estimator = e;
                a = x;
                b = y;
            }
            RegionSpec::Unbounded => {}
        }
        kv.f64_into("gamma", &mut gamma)?;
        kv.f64_into("alpha", &mut alpha)?;
        kv.f64_into("beta", &mut beta)?;
        kv.f64_into("c", &mut c)?;
        kv.f64_into("a", &mut a)?;
        kv.f64_into("b", &mut b)?;
        let mut decay = match estimator {
            EstimatorSpec::Ewma { decay } => decay,
            EstimatorSpec::Welford => 0.95,
        };
        kv.f64_into("ewma_decay", &mut decay)?;
        if let Some(e) = kv.take("estimator") {
            estimator = match e.as_str() {
                "welford" => EstimatorSpec::Welford,
                "ewma" => EstimatorSpec::Ewma { decay },
                other => return Err(Error::Config(format!("unknown estimator `{other}`"))),
            };
        } else if let EstimatorSpec::Ewma { .. } = estimator {
            estimator = EstimatorSpec::Ewma { decay };
        }
        let region_name = kv.take("region");
        self.region = match region_name.as_deref().unwrap_or(self.region.name()) {
            "unbounded" => RegionSpec::Unbounded,
            "component" => RegionSpec::Component { gamma },
            "norm" => RegionSpec::Norm { gamma },
            "oracle_additive" => RegionSpec::OracleAdditive { alpha },
            "oracle_variance" => RegionSpec::OracleVariance { beta },
            "oracle_proportional" => RegionSpec::OracleProportional { c },
            "proportional" => RegionSpec::Proportional { estimator, c },
            "adaptive" => RegionSpec::AdaptiveAb { estimator, a, b },
            other => return Err(Error::Config(format!("unknown region `{other}`"))),
        };
        kv.f64_into("gamma_floor", &mut self.gamma_floor)?;

        kv.u64_into("steps", &mut self.steps)?;
        kv.f64_into("init", &mut self.init)?;
        if let Some(s) = kv.take("seeds") {
            self.seeds = parse_seeds(&s)?;
        }
        let grid_param = kv.take("grid_param");
        let grid_values = kv.take("grid_values");
        match (grid_param, grid_values) {
            (Some(p), Some(v)) => {
                self.grid = Some(Grid {
                    param: GridParam::parse(&p)?,
                    values: parse_f64_list(&v)?,
                })
            }
            (Some(p), None) if p == "none" => self.grid = None,
            (None, None) => {}
            _ => {
                return Err(Error::Config(
                    "grid_param and grid_values must be given together".into(),
                ))
            }
        }
        kv.f64_into("delta", &mut self.delta)?;
        if let Some(o) = kv.take("out") {
            self.out = PathBuf::from(o);
        }
        if let Some(f) = kv.take("full_trace") {
            self.full_trace = parse_bool(&f)?;
        }
        if let Some(t) = kv.take("threads") {
            self.threads = Some(parse_num(&t, "threads")?);
        }
        kv.usize_into("shards", &mut self.shards)?;
        kv.usize_into("max_epochs", &mut self.max_epochs)?;

        for (key, idx) in [("sgd_lr", 0usize), ("momentum_lr", 1), ("adam_lr", 2)] {
            if let Some(v) = kv.take(key) {
                let lr: f64 = parse_num(&v, key)?;
                if let Some(opt) = self.toy_optimizers.get_mut(idx) {
                    *opt = match *opt {
                        OptimizerConfig::Sgd { .. } => OptimizerConfig::Sgd { lr },
                        OptimizerConfig::Momentum { decay, .. } => OptimizerConfig::Momentum { lr, decay },
                        OptimizerConfig::Nesterov { decay, .. } => OptimizerConfig::Nesterov { lr, decay },
                        OptimizerConfig::Adam {
                            beta1, beta2, eps, ..
                        } => OptimizerConfig::Adam {
                            lr,
                            beta1,
                            beta2,
                            eps,
                        },
                    };
                }
            }
        }

        if let Some(k) = kv.0.keys().next() {
            return Err(Error::Config(format!(
                "key `{k}` does not apply to problem `{}`",
                self.problem_name()
            )));
        }
        Ok(())
    }

    fn problem_name(&self) -> &'static str {
        match self.problem {
            ProblemSpec::AbsUniform { .. } => "abs_uniform",
            ProblemSpec::QuadraticMixture => "quadratic_mixture",
            ProblemSpec::Aliasing => "aliasing",
            ProblemSpec::Logistic { .. } => "logistic",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must be non-empty".into()));
        }
        if self.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        if self.shards == 0 {
            return Err(Error::Config("shards must be at least 1".into()));
        }
        if !self.init.is_finite() {
            return Err(Error::Config("init must be finite".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        self.optimizer.validate()?;
        for opt in &self.toy_optimizers {
            opt.validate()?;
        }
        let dim = match self.problem {
            ProblemSpec::AbsUniform { dim, .. } => dim,
            ProblemSpec::Logistic { dataset, .. } => dataset.dim + 1,
            _ => 1,
        };
        self.region.build(dim, self.gamma_floor)?;
        if let Some(grid) = &self.grid {
            if grid.values.is_empty() {
                return Err(Error::Config("grid_values must be non-empty".into()));
            }
            for &v in &grid.values {
                self.at_grid_value(grid.param, v)?;
            }
        }
        Ok(())
    }

    /// A copy of this config with one grid parameter overridden.
    pub fn at_grid_value(&self, param: GridParam, value: f64) -> Result<Self> {
        let mut cfg = self.clone();
        match (param, &mut cfg.region, &mut cfg.problem) {
            (GridParam::Alpha, RegionSpec::OracleAdditive { alpha }, _) => *alpha = value,
            (GridParam::Beta, RegionSpec::OracleVariance { beta }, _) => *beta = value,
            (GridParam::Gamma, RegionSpec::Component { gamma } | RegionSpec::Norm { gamma }, _) => {
                *gamma = value
            }
            (GridParam::NoiseVariance, _, ProblemSpec::AbsUniform { noise_variance, .. }) => {
                *noise_variance = value
            }
            (GridParam::Lr, _, _) => {
                cfg.optimizer = match cfg.optimizer {
                    OptimizerConfig::Sgd { .. } => OptimizerConfig::Sgd { lr: value },
                    OptimizerConfig::Momentum { decay, .. } => OptimizerConfig::Momentum { lr: value, decay },
                    OptimizerConfig::Nesterov { decay, .. } => OptimizerConfig::Nesterov { lr: value, decay },
                    OptimizerConfig::Adam {
                        beta1, beta2, eps, ..
                    } => OptimizerConfig::Adam {
                        lr: value,
                        beta1,
                        beta2,
                        eps,
                    },
                }
            }
            (p, r, _) => {
                return Err(Error::Config(format!(
                    "grid parameter `{}` does not apply to region `{}` / problem `{}`",
                    p.name(),
                    r.name(),
                    self.problem_name()
                )))
            }
        }
        cfg.grid = None;
        cfg.optimizer.validate()?;
        cfg.problem_checked()?;
        cfg.region.build(1, cfg.gamma_floor).map_err(|e| match cfg.region {
            RegionSpec::OracleAdditive { alpha: 0.0 } => Error::Config(
                "alpha = 0 grid points are rejected: the carry bound is undefined".into(),
            ),
            _ => e,
        })?;
        Ok(cfg)
    }

    fn problem_checked(&self) -> Result<()> {
        if let ProblemSpec::AbsUniform { noise_variance, .. } = self.problem {
            if !(noise_variance.is_finite() && noise_variance >= 0.0) {
                return Err(Error::Config(format!(
                    "noise_variance must be >= 0, got {noise_variance}"
                )));
            }
        }
        Ok(())
    }

    /// The grid to sweep; a single point (the config itself) when none is set.
    pub fn grid_points(&self) -> Result<Vec<(Option<f64>, ExperimentConfig)>> {
        match &self.grid {
            None => Ok(vec![(None, self.clone())]),
            Some(g) => g
                .values
                .iter()
                .map(|&v| Ok((Some(v), self.at_grid_value(g.param, v)?)))
                .collect(),
        }
    }
}

/// Inputs for the `bounds` report, read from the same `key = value` format.
/// Keys are the [`BoundInputs`] field names plus `delta`, `eps` and `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundsConfig {
    pub inputs: BoundInputs,
    pub delta: f64,
    pub eps: f64,
    pub t: u64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            inputs: BoundInputs {
                grad_bound: 1.0,
                alpha: 1.0,
                beta: 1.0,
                sigma_min_sq: 1.0,
                gamma_plus: 1.0,
                gamma: 1.0,
                gamma_mean: 1.0,
                gamma_sq_mean: 1.0,
                dim: 1,
                horizon: 10_000,
                lr: 0.01,
                carry_bound: 1.0,
                update_bound_sum: 10_000.0,
                update_bound_sq_sum: 10_000.0,
                initial_distance: 1.0,
                iterate_radius: 1.0,
                noise_sigma: 1.0,
            },
            delta: 0.01,
            eps: 1.0,
            t: 10_000,
        }
    }
}

impl BoundsConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = BoundsConfig::default();
        let mut seen = std::collections::BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (k, v) = (k.trim(), v.trim());
            if !seen.insert(k.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key `{k}`", lineno + 1)));
            }
            let inp = &mut cfg.inputs;
            match k {
                "grad_bound" => inp.grad_bound = parse_num(v, k)?,
                "alpha" => inp.alpha = parse_num(v, k)?,
                "beta" => inp.beta = parse_num(v, k)?,
                "sigma_min_sq" => inp.sigma_min_sq = parse_num(v, k)?,
                "gamma_plus" => inp.gamma_plus = parse_num(v, k)?,
                "gamma" => inp.gamma = parse_num(v, k)?,
                "gamma_mean" => inp.gamma_mean = parse_num(v, k)?,
                "gamma_sq_mean" => inp.gamma_sq_mean = parse_num(v, k)?,
                "dim" => inp.dim = parse_num(v, k)?,
                "horizon" => inp.horizon = parse_num(v, k)?,
                "lr" => inp.lr = parse_num(v, k)?,
                "carry_bound" => inp.carry_bound = parse_num(v, k)?,
                "update_bound_sum" => inp.update_bound_sum = parse_num(v, k)?,
                "update_bound_sq_sum" => inp.update_bound_sq_sum = parse_num(v, k)?,
                "initial_distance" => inp.initial_distance = parse_num(v, k)?,
                "iterate_radius" => inp.iterate_radius = parse_num(v, k)?,
                "noise_sigma" => inp.noise_sigma = parse_num(v, k)?,
                "delta" => cfg.delta = parse_num(v, k)?,
                "eps" => cfg.eps = parse_num(v, k)?,
                "t" => cfg.t = parse_num(v, k)?,
                other => {
                    return Err(Error::Config(format!("line {}: unknown key `{other}`", lineno + 1)))
                }
            }
        }
        Ok(cfg)
    }
}

const KNOWN_KEYS: &[&str] = &[
    "kind",
    "experiment_id",
    "problem",
    "noise_variance",
    "dim",
    "batch_size",
    "dataset_size",
    "dataset_dim",
    "separation",
    "noise_std",
    "margin",
    "dataset_seed",
    "optimizer",
    "lr",
    "momentum",
    "beta1",
    "beta2",
    "eps",
    "transform",
    "region",
    "gamma",
    "alpha",
    "beta",
    "c",
    "a",
    "b",
    "estimator",
    "ewma_decay",
    "gamma_floor",
    "steps",
    "init",
    "seeds",
    "grid_param",
    "grid_values",
    "delta",
    "out",
    "full_trace",
    "threads",
    "shards",
    "max_epochs",
    "sgd_lr",
    "momentum_lr",
    "adam_lr",
];

struct Keys(BTreeMap<String, String>);

impl Keys {
    fn take(&mut self, k: &str) -> Option<String> {
        self.0.remove(k)
    }

    fn f64_into(&mut self, k: &str, slot: &mut f64) -> Result<()> {
        if let Some(v) = self.take(k) {
            *slot = parse_num(&v, k)?;
        }
        Ok(())
    }

    fn u64_into(&mut self, k: &str, slot: &mut u64) -> Result<()> {
        if let Some(v) = self.take(k) {
            *slot = parse_num(&v, k)?;
        }
        Ok(())
    }

    fn usize_into(&mut self, k: &str, slot: &mut usize) -> Result<()> {
        if let Some(v) = self.take(k) {
            *slot = parse_num(&v, k)?;
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(v: &str, key: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`")))
}

fn parse_bool(v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::Config(format!("bad boolean `{other}`"))),
    }
}

fn parse_f64_list(v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(|s| parse_num::<f64>(s, "grid_values"))
        .collect()
}

/// `1..100` (inclusive) or `1,2,5`.
pub fn parse_seeds(v: &str) -> Result<Vec<u64>> {
    if let Some((lo, hi)) = v.split_once("..") {
        let lo: u64 = parse_num(lo, "seeds")?;
        let hi: u64 = parse_num(hi.trim_start_matches('='), "seeds")?;
        if hi < lo {
            return Err(Error::Config(format!("empty seed range `{v}`")));
        }
        return Ok((lo..=hi).collect());
    }
    v.split(',').map(|s| parse_num(s, "seeds")).collect()
}
