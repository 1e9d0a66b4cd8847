//! Clip-region policies.
//!
//! Oracle policies read the true conditional mean gradient (and noise proxy)
//! from the problem. Adaptive policies read running per-coordinate gradient
//! statistics that are fed only with gradients from earlier steps.

use crate::clipmath::{ClipRegion, Vector};
use crate::error::{invalid, Error, Result};

/// Lower bound applied to estimator-driven regions before any data arrives.
pub const DEFAULT_GAMMA_FLOOR: f64 = 1e-8;

/// Per-coordinate running mean and sum of squared deviations.
#[derive(Clone, Debug, PartialEq)]
pub struct WelfordEstimator {
    count: u64,
    mean: Vector,
    m2: Vector,
}

impl WelfordEstimator {
    pub fn new(dim: usize) -> Self {
        WelfordEstimator {
            count: 0,
            mean: Vector::zeros(dim),
            m2: Vector::zeros(dim),
        }
    }

    pub fn ingest(&self, g: &Vector) -> Result<Self> {
        g.ensure_dim(self.mean.dim())?;
        let count = self.count + 1;
        let n = count as f64;
        let mean = self.mean.zip_map(g, |m, x| m + (x - m) / n)?;
        let m2 = Vector::new(
            (0..g.dim())
                .map(|j| {
                    let s = self.m2[j] + (g[j] - self.mean[j]) * (g[j] - mean[j]);
                    s.max(0.0)
                })
                .collect(),
        )?;
        Ok(WelfordEstimator { count, mean, m2 })
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &Vector {
        &self.mean
    }

    pub fn m2(&self) -> &Vector {
        &self.m2
    }

    /// Sample variance `m2 / (n - 1)`; zero while fewer than two samples.
    pub fn variance(&self) -> Vector {
        if self.count < 2 {
            return Vector::zeros(self.mean.dim());
        }
        let denom = (self.count - 1) as f64;
        Vector::new(self.m2.iter().map(|s| s / denom).collect()).expect("finite")
    }

    pub fn std_dev(&self) -> Vector {
        Vector::new(self.variance().iter().map(|v| v.sqrt()).collect()).expect("finite")
    }
}

/// Exponentially weighted first and second raw moments, without bias correction.
#[derive(Clone, Debug, PartialEq)]
pub struct EwmaEstimator {
    decay: f64,
    m1: Vector,
    m2: Vector,
}

impl EwmaEstimator {
    pub fn new(decay: f64, dim: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&decay) {
            return Err(invalid(format!("ewma decay must lie in [0, 1), got {decay}")));
        }
        Ok(EwmaEstimator {
            decay,
            m1: Vector::zeros(dim),
            m2: Vector::zeros(dim),
        })
    }

    pub fn ingest(&self, g: &Vector) -> Result<Self> {
        let d = self.decay;
        let m1 = self.m1.zip_map(g, |m, x| d * m + (1.0 - d) * x)?;
        let m2 = self.m2.zip_map(g, |m, x| d * m + (1.0 - d) * x * x)?;
        Ok(EwmaEstimator { decay: d, m1, m2 })
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn mean(&self) -> &Vector {
        &self.m1
    }

    pub fn second_moment(&self) -> &Vector {
        &self.m2
    }

    /// `sqrt(second moment)`.
    pub fn std_dev(&self) -> Vector {
        Vector::new(self.m2.iter().map(|v| v.sqrt()).collect()).expect("finite")
    }
}

/// Either estimator, behind one interface.
#[derive(Clone, Debug, PartialEq)]
pub enum Estimator {
    Welford(WelfordEstimator),
    Ewma(EwmaEstimator),
}

impl Estimator {
    pub fn welford(dim: usize) -> Self {
        Estimator::Welford(WelfordEstimator::new(dim))
    }

    pub fn ewma(decay: f64, dim: usize) -> Result<Self> {
        Ok(Estimator::Ewma(EwmaEstimator::new(decay, dim)?))
    }

    pub fn ingest(&self, g: &Vector) -> Result<Self> {
        Ok(match self {
            Estimator::Welford(e) => Estimator::Welford(e.ingest(g)?),
            Estimator::Ewma(e) => Estimator::Ewma(e.ingest(g)?),
        })
    }

    pub fn mean(&self) -> &Vector {
        match self {
            Estimator::Welford(e) => e.mean(),
            Estimator::Ewma(e) => e.mean(),
        }
    }

    pub fn std_dev(&self) -> Vector {
        match self {
            Estimator::Welford(e) => e.std_dev(),
            Estimator::Ewma(e) => e.std_dev(),
        }
    }
}

/// What a policy may look at when choosing the region for step `t`.
#[derive(Clone, Copy, Debug, Default)]
pub struct RegionContext<'a> {
    pub step: u64,
    /// `ḡ_t = E[g_t | x_t]`, when the problem has it in closed form.
    pub mean_gradient: Option<&'a Vector>,
    /// Per-coordinate noise variance proxy `σ_t²`.
    pub noise_variance: Option<&'a Vector>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RegionPolicy {
    Fixed(ClipRegion),
    /// `γ_t = |ḡ_t| + α`.
    OracleAdditive { alpha: f64 },
    /// `γ_t = |ḡ_t| + β σ_t²`.
    OracleVariance { beta: f64 },
    /// `γ_t = c |ḡ_t|`, floored.
    OracleProportional { c: f64, floor: f64 },
    /// `γ_t = c |m̂_t|`, floored.
    Proportional { estimator: Estimator, c: f64, floor: f64 },
    /// `γ_t = a |m̂_t| + b ŝ_t`, floored.
    AdaptiveAb {
        estimator: Estimator,
        a: f64,
        b: f64,
        floor: f64,
    },
}

fn require_positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {x}")))
    }
}

fn require_nonneg(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be non-negative, got {x}")))
    }
}

fn floored(values: impl Iterator<Item = f64>, floor: f64) -> Result<ClipRegion> {
    ClipRegion::per_coordinate(Vector::new(values.map(|g| g.max(floor)).collect())?)
}

impl RegionPolicy {
    pub fn oracle_additive(alpha: f64) -> Result<Self> {
        require_positive("alpha", alpha)?;
        Ok(RegionPolicy::OracleAdditive { alpha })
    }

    pub fn oracle_variance(beta: f64) -> Result<Self> {
        require_positive("beta", beta)?;
        Ok(RegionPolicy::OracleVariance { beta })
    }

    pub fn proportional(estimator: Estimator, c: f64) -> Result<Self> {
        require_positive("c", c)?;
        Ok(RegionPolicy::Proportional {
            estimator,
            c,
            floor: DEFAULT_GAMMA_FLOOR,
        })
    }

    pub fn adaptive_ab(estimator: Estimator, a: f64, b: f64) -> Result<Self> {
        let p = RegionPolicy::AdaptiveAb {
            estimator,
            a,
            b,
            floor: DEFAULT_GAMMA_FLOOR,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RegionPolicy::Fixed(r) => r.validate(None),
            RegionPolicy::OracleAdditive { alpha } => require_positive("alpha", *alpha),
            RegionPolicy::OracleVariance { beta } => require_positive("beta", *beta),
            RegionPolicy::OracleProportional { c, floor }
            | RegionPolicy::Proportional { c, floor, .. } => {
                require_positive("c", *c)?;
                require_positive("gamma floor", *floor)
            }
            RegionPolicy::AdaptiveAb { a, b, floor, .. } => {
                require_nonneg("a", *a)?;
                require_nonneg("b", *b)?;
                require_positive("gamma floor", *floor)
            }
        }
    }

    /// Whether the policy needs the problem's closed-form `ḡ_t`.
    pub fn needs_oracle(&self) -> bool {
        matches!(
            self,
            RegionPolicy::OracleAdditive { .. }
                | RegionPolicy::OracleVariance { .. }
                | RegionPolicy::OracleProportional { .. }
        )
    }

    /// Region for the current step. Must be called before [`Self::observe`]
    /// is given this step's gradient.
    pub fn region_for_step(&self, ctx: &RegionContext<'_>) -> Result<ClipRegion> {
        let mean = || {
            ctx.mean_gradient.ok_or_else(|| {
                Error::Unsupported("oracle clip region needs a closed-form mean gradient".into())
            })
        };
        match self {
            RegionPolicy::Fixed(r) => Ok(r.clone()),
            RegionPolicy::OracleAdditive { alpha } => {
                floored(mean()?.iter().map(|g| g.abs() + alpha), DEFAULT_GAMMA_FLOOR)
            }
            RegionPolicy::OracleVariance { beta } => {
                let gbar = mean()?;
                let var = ctx.noise_variance.ok_or_else(|| {
                    Error::Unsupported("oracle variance region needs a noise variance proxy".into())
                })?;
                var.ensure_dim(gbar.dim())?;
                floored(
                    gbar.iter().zip(var.iter()).map(|(g, s2)| g.abs() + beta * s2),
                    DEFAULT_GAMMA_FLOOR,
                )
            }
            RegionPolicy::OracleProportional { c, floor } => {
                floored(mean()?.iter().map(|g| c * g.abs()), *floor)
            }
            RegionPolicy::Proportional { estimator, c, floor } => {
                floored(estimator.mean().iter().map(|m| c * m.abs()), *floor)
            }
            RegionPolicy::AdaptiveAb {
                estimator,
                a,
                b,
                floor,
            } => {
                let s = estimator.std_dev();
                floored(
                    estimator
                        .mean()
                        .iter()
                        .zip(s.iter())
                        .map(|(m, s)| a * m.abs() + b * s),
                    *floor,
                )
            }
        }
    }

    /// Feeds this step's raw gradient to the policy's estimator, if any.
    pub fn observe(&mut self, g: &Vector) -> Result<()> {
        match self {
            RegionPolicy::Proportional { estimator, .. } | RegionPolicy::AdaptiveAb { estimator, .. } => {
                *estimator = estimator.ingest(g)?;
            }
            _ => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_slice(xs).unwrap()
    }

    fn coords(r: &ClipRegion) -> Vec<f64> {
        match r {
            ClipRegion::PerCoordinate(g) => g.to_vec(),
            other => panic!("expected per-coordinate region, got {other:?}"),
        }
    }

    #[test]
    fn welford_small_sequences() {
        let mut w = WelfordEstimator::new(1);
        for x in [1.0, 2.0, 3.0] {
            w = w.ingest(&v(&[x])).unwrap();
        }
        assert_eq!(w.mean()[0], 2.0);
        assert_eq!(w.variance()[0], 1.0);

        let once = WelfordEstimator::new(1).ingest(&v(&[4.5])).unwrap();
        assert_eq!(once.mean()[0], 4.5);
        assert_eq!(once.std_dev()[0], 0.0);

        let mut c = WelfordEstimator::new(1);
        for _ in 0..50 {
            c = c.ingest(&v(&[0.3])).unwrap();
        }
        assert_eq!(c.variance()[0], 0.0);
        assert_eq!(c.count(), 50);
    }

    #[test]
    fn ewma_recurrence() {
        let e = EwmaEstimator::new(0.95, 1).unwrap().ingest(&v(&[1.0])).unwrap();
        assert!((e.mean()[0] - 0.05).abs() < 1e-16);
        assert!(EwmaEstimator::new(1.0, 1).is_err());
    }

    #[test]
    fn oracle_additive_on_abs() {
        let p = RegionPolicy::oracle_additive(0.1).unwrap();
        let gbar = v(&[1.0]);
        let ctx = RegionContext {
            mean_gradient: Some(&gbar),
            ..Default::default()
        };
        assert!((coords(&p.region_for_step(&ctx).unwrap())[0] - 1.1).abs() < 1e-15);
    }

    #[test]
    fn oracle_variance_value() {
        let p = RegionPolicy::oracle_variance(0.25).unwrap();
        let (gbar, var) = (v(&[1.0]), v(&[0.2]));
        let ctx = RegionContext {
            mean_gradient: Some(&gbar),
            noise_variance: Some(&var),
            ..Default::default()
        };
        assert!((coords(&p.region_for_step(&ctx).unwrap())[0] - 1.05).abs() < 1e-15);
    }

    #[test]
    fn oracle_without_mean_is_unsupported() {
        let p = RegionPolicy::oracle_additive(0.1).unwrap();
        assert!(matches!(
            p.region_for_step(&RegionContext::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn adaptive_ab_value() {
        // Welford over {0.2, 0.4}: mean 0.3, sample sd sqrt(0.02).
        let mut p = RegionPolicy::adaptive_ab(Estimator::welford(1), 1.0, 2.0).unwrap();
        p.observe(&v(&[0.2])).unwrap();
        p.observe(&v(&[0.4])).unwrap();
        let g = coords(&p.region_for_step(&RegionContext::default()).unwrap())[0];
        assert!((g - (0.3 + 2.0 * 0.02f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn adaptive_ab_formula() {
        let est = Estimator::Ewma(EwmaEstimator {
            decay: 0.95,
            m1: v(&[0.3]),
            m2: v(&[0.01]),
        });
        let p = RegionPolicy::adaptive_ab(est, 1.0, 2.0).unwrap();
        let g = coords(&p.region_for_step(&RegionContext::default()).unwrap())[0];
        assert!((g - 0.5).abs() < 1e-15);
    }

    #[test]
    fn adaptive_floor_before_data() {
        let p = RegionPolicy::adaptive_ab(Estimator::ewma(0.95, 3).unwrap(), 1.0, 2.0).unwrap();
        let r = p.region_for_step(&RegionContext::default()).unwrap();
        assert_eq!(coords(&r), vec![DEFAULT_GAMMA_FLOOR; 3]);
        let q = RegionPolicy::proportional(Estimator::welford(1), 10.0).unwrap();
        assert_eq!(coords(&q.region_for_step(&RegionContext::default()).unwrap()), vec![DEFAULT_GAMMA_FLOOR]);
    }

    #[test]
    fn parameter_validation() {
        assert!(RegionPolicy::oracle_additive(0.0).is_err());
        assert!(RegionPolicy::oracle_variance(-1.0).is_err());
        assert!(RegionPolicy::proportional(Estimator::welford(1), 0.0).is_err());
        assert!(RegionPolicy::adaptive_ab(Estimator::welford(1), -1.0, 0.0).is_err());
        assert!(RegionPolicy::adaptive_ab(Estimator::welford(1), 0.0, 0.0).is_ok());
    }
}
