//! Dense vectors and the clipping operators.
//!
//! Component clipping projects each coordinate onto `[-γ_j, γ_j]`; norm
//! clipping projects the whole vector onto the Euclidean ball of radius `γ`.
//! Every public operation rejects non-finite inputs and never produces a
//! non-finite output.

use std::fmt;
use std::ops::Index;

use smallvec::SmallVec;

use crate::error::{invalid, Error, Result};

type Storage = SmallVec<[f64; 4]>;

/// A dense, finite, fixed-dimension real vector.
#[derive(Clone, PartialEq)]
pub struct Vector(Storage);

impl Vector {
    /// Builds a vector, rejecting empty or non-finite input.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::from_slice(&values)
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("vector"));
        }
        let v = Vector(Storage::from_slice(values));
        v.check_finite("vector")?;
        Ok(v)
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "vector dimension must be at least 1");
        Vector(smallvec::smallvec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyInput("vector"));
        }
        if !value.is_finite() {
            return Err(Error::NonFinite("vector"));
        }
        Ok(Vector(smallvec::smallvec![value; dim]))
    }

    /// Single-coordinate convenience constructor.
    pub fn scalar(value: f64) -> Result<Self> {
        Self::filled(1, value)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.to_vec()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    fn check_finite(&self, ctx: &'static str) -> Result<()> {
        if self.0.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(ctx))
        }
    }

    pub(crate) fn ensure_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                found: self.dim(),
            })
        }
    }

    /// Coordinate-wise map; fails if the map produces a non-finite value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Vector> {
        let out = Vector(self.0.iter().map(|&x| f(x)).collect());
        out.check_finite("map")?;
        Ok(out)
    }

    /// Coordinate-wise combination of two equal-dimension vectors.
    pub fn zip_map(&self, other: &Vector, f: impl Fn(f64, f64) -> f64) -> Result<Vector> {
        other.ensure_dim(self.dim())?;
        let out = Vector(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        );
        out.check_finite("zip_map")?;
        Ok(out)
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, k: f64) -> Result<Vector> {
        self.map(|x| k * x)
    }

    /// `self - k * other`, the shape of every parameter update.
    pub fn sub_scaled(&self, k: f64, other: &Vector) -> Result<Vector> {
        self.zip_map(other, |a, b| a - k * b)
    }

    pub fn abs(&self) -> Vector {
        Vector(self.0.iter().map(|x| x.abs()).collect())
    }

    pub fn dot(&self, other: &Vector) -> Result<f64> {
        other.ensure_dim(self.dim())?;
        Ok(self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum())
    }

    /// Euclidean norm, rescaled internally when the plain sum of squares
    /// would overflow or underflow.
    pub fn norm(&self) -> f64 {
        let ss: f64 = self.0.iter().map(|x| x * x).sum();
        if ss.is_finite() && ss > f64::MIN_POSITIVE {
            return ss.sqrt();
        }
        let m = self.norm_inf();
        if m == 0.0 {
            return 0.0;
        }
        let scaled: f64 = self.0.iter().map(|x| (x / m) * (x / m)).sum();
        m * scaled.sqrt()
    }

    pub fn norm_l1(&self) -> f64 {
        self.0.iter().map(|x| x.abs()).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Arithmetic mean of a non-empty set of equal-dimension vectors.
    ///
    /// Sums in slice order, then divides by the count.
    pub fn mean_of(vectors: &[Vector]) -> Result<Vector> {
        let first = vectors.first().ok_or(Error::EmptyInput("mean_of"))?;
        let mut acc = first.0.clone();
        for v in &vectors[1..] {
            v.ensure_dim(first.dim())?;
            for (a, b) in acc.iter_mut().zip(v.0.iter()) {
                *a += b;
            }
        }
        let n = vectors.len() as f64;
        let out = Vector(acc.into_iter().map(|a| a / n).collect());
        out.check_finite("mean_of")?;
        Ok(out)
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

impl<'a> IntoIterator for &'a Vector {
    type Item = &'a f64;
    type IntoIter = std::slice::Iter<'a, f64>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// The set a clipped update is projected onto.
#[derive(Clone, Debug, PartialEq)]
pub enum ClipRegion {
    /// The same bound `γ` on every coordinate.
    ComponentConstant(f64),
    /// Coordinate-specific bounds `γ_j`.
    PerCoordinate(Vector),
    /// Euclidean ball of radius `γ`.
    Norm(f64),
    /// No clipping.
    Unbounded,
}

impl ClipRegion {
    pub fn component(gamma: f64) -> Result<Self> {
        let r = ClipRegion::ComponentConstant(gamma);
        r.validate(None)?;
        Ok(r)
    }

    pub fn per_coordinate(gamma: Vector) -> Result<Self> {
        let r = ClipRegion::PerCoordinate(gamma);
        r.validate(None)?;
        Ok(r)
    }

    pub fn norm(gamma: f64) -> Result<Self> {
        let r = ClipRegion::Norm(gamma);
        r.validate(None)?;
        Ok(r)
    }

    /// Checks positivity of every bound and, when `dim` is given, that a
    /// per-coordinate region matches it.
    pub fn validate(&self, dim: Option<usize>) -> Result<()> {
        let positive = |g: f64| g.is_finite() && g > 0.0;
        match self {
            ClipRegion::ComponentConstant(g) | ClipRegion::Norm(g) => {
                if !positive(*g) {
                    return Err(invalid(format!("clip region must be positive, got {g}")));
                }
            }
            ClipRegion::PerCoordinate(gs) => {
                if let Some(g) = gs.iter().find(|&&g| !positive(g)) {
                    return Err(invalid(format!("clip region must be positive, got {g}")));
                }
                if let Some(d) = dim {
                    gs.ensure_dim(d)?;
                }
            }
            ClipRegion::Unbounded => {}
        }
        Ok(())
    }

    /// Bound on the Euclidean norm of anything clipped into this region in
    /// dimension `dim`; infinite for [`ClipRegion::Unbounded`].
    pub fn euclidean_bound(&self, dim: usize) -> f64 {
        match self {
            ClipRegion::ComponentConstant(g) => g * (dim as f64).sqrt(),
            ClipRegion::PerCoordinate(gs) => gs.norm(),
            ClipRegion::Norm(g) => *g,
            ClipRegion::Unbounded => f64::INFINITY,
        }
    }

    /// Largest single bound in the region (`γ₊` for one step).
    pub fn sup(&self) -> f64 {
        match self {
            ClipRegion::ComponentConstant(g) | ClipRegion::Norm(g) => *g,
            ClipRegion::PerCoordinate(gs) => gs.norm_inf(),
            ClipRegion::Unbounded => f64::INFINITY,
        }
    }

    pub fn is_norm(&self) -> bool {
        matches!(self, ClipRegion::Norm(_))
    }
}

fn clip_scalar(x: f64, gamma: f64) -> f64 {
    x.min(gamma).max(-gamma)
}

/// Element-wise clipping to `[-γ_j, γ_j]`.
pub fn clip_component(x: &Vector, region: &ClipRegion) -> Result<Vector> {
    x.check_finite("clip input")?;
    region.validate(Some(x.dim()))?;
    let out = match region {
        ClipRegion::ComponentConstant(g) => Vector(x.0.iter().map(|&v| clip_scalar(v, *g)).collect()),
        ClipRegion::PerCoordinate(gs) => Vector(
            x.0.iter()
                .zip(gs.0.iter())
                .map(|(&v, &g)| clip_scalar(v, g))
                .collect(),
        ),
        other => {
            return Err(invalid(format!(
                "component clipping needs a component region, got {other:?}"
            )))
        }
    };
    Ok(out)
}

/// Norm clipping `min{1, γ/‖x‖}·x`.
///
/// Inputs already inside the ball (including the zero vector) are returned
/// unchanged. Otherwise the scale factor is nudged down until the rounded
/// result lies inside the ball, which makes the operator exactly idempotent.
pub fn clip_norm(x: &Vector, region: &ClipRegion) -> Result<Vector> {
    x.check_finite("clip input")?;
    region.validate(Some(x.dim()))?;
    let gamma = match region {
        ClipRegion::Norm(g) => *g,
        other => {
            return Err(invalid(format!(
                "norm clipping needs a norm region, got {other:?}"
            )))
        }
    };
    let n = x.norm();
    if n <= gamma {
        return Ok(x.clone());
    }
    let mut factor = gamma / n;
    loop {
        let y = Vector(x.0.iter().map(|&v| v * factor).collect());
        if y.norm() <= gamma {
            return Ok(y);
        }
        factor = factor.next_down();
    }
}

/// Dispatches on the region variant; [`ClipRegion::Unbounded`] is the identity.
pub fn clip(x: &Vector, region: &ClipRegion) -> Result<Vector> {
    match region {
        ClipRegion::ComponentConstant(_) | ClipRegion::PerCoordinate(_) => clip_component(x, region),
        ClipRegion::Norm(_) => clip_norm(x, region),
        ClipRegion::Unbounded => {
            x.check_finite("clip input")?;
            Ok(x.clone())
        }
    }
}
