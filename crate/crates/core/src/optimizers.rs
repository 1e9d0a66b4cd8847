//! Base optimizers. They take whatever gradient they are handed and never
//! clip on their own; all clipping happens upstream in [`crate::transform`].

use crate::clipmath::Vector;
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OptimizerConfig {
    Sgd { lr: f64 },
    Momentum { lr: f64, decay: f64 },
    /// Deep-learning style Nesterov: no lookahead evaluation of the gradient.
    Nesterov { lr: f64, decay: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerConfig {
    pub fn sgd(lr: f64) -> Self {
        OptimizerConfig::Sgd { lr }
    }

    pub fn momentum(lr: f64, decay: f64) -> Self {
        OptimizerConfig::Momentum { lr, decay }
    }

    pub fn nesterov(lr: f64, decay: f64) -> Self {
        OptimizerConfig::Nesterov { lr, decay }
    }

    /// Adam with `eps = 1e-8`.
    pub fn adam(lr: f64, beta1: f64, beta2: f64) -> Self {
        OptimizerConfig::Adam {
            lr,
            beta1,
            beta2,
            eps: 1e-8,
        }
    }

    pub fn lr(&self) -> f64 {
        match *self {
            OptimizerConfig::Sgd { lr }
            | OptimizerConfig::Momentum { lr, .. }
            | OptimizerConfig::Nesterov { lr, .. }
            | OptimizerConfig::Adam { lr, .. } => lr,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OptimizerConfig::Sgd { .. } => "sgd",
            OptimizerConfig::Momentum { .. } => "momentum",
            OptimizerConfig::Nesterov { .. } => "nesterov",
            OptimizerConfig::Adam { .. } => "adam",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lr = self.lr();
        if !(lr.is_finite() && lr > 0.0) {
            return Err(invalid(format!("learning rate must be positive, got {lr}")));
        }
        let unit = |name: &str, x: f64| {
            if (0.0..1.0).contains(&x) {
                Ok(())
            } else {
                Err(invalid(format!("{name} must lie in [0, 1), got {x}")))
            }
        };
        match *self {
            OptimizerConfig::Sgd { .. } => Ok(()),
            OptimizerConfig::Momentum { decay, .. } | OptimizerConfig::Nesterov { decay, .. } => {
                unit("momentum decay", decay)
            }
            OptimizerConfig::Adam {
                beta1, beta2, eps, ..
            } => {
                unit("beta1", beta1)?;
                unit("beta2", beta2)?;
                if eps.is_finite() && eps > 0.0 {
                    Ok(())
                } else {
                    Err(invalid(format!("adam eps must be positive, got {eps}")))
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Moments {
    None,
    Velocity(Vector),
    Adam { m: Vector, v: Vector },
}

/// Optimizer configuration plus its internal statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    config: OptimizerConfig,
    dim: usize,
    step_count: u64,
    moments: Moments,
}

impl OptimizerState {
    pub fn new(config: OptimizerConfig, dim: usize) -> Result<Self> {
        config.validate()?;
        if dim == 0 {
            return Err(invalid("optimizer dimension must be at least 1"));
        }
        let moments = match config {
            OptimizerConfig::Sgd { .. } => Moments::None,
            OptimizerConfig::Momentum { .. } | OptimizerConfig::Nesterov { .. } => {
                Moments::Velocity(Vector::zeros(dim))
            }
            OptimizerConfig::Adam { .. } => Moments::Adam {
                m: Vector::zeros(dim),
                v: Vector::zeros(dim),
            },
        };
        Ok(OptimizerState {
            config,
            dim,
            step_count: 0,
            moments,
        })
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Applies one update with `gradient` and returns the advanced state and
    /// the new parameters.
    pub fn step(self, params: &Vector, gradient: &Vector) -> Result<(OptimizerState, Vector)> {
        params.ensure_dim(self.dim)?;
        gradient.ensure_dim(self.dim)?;
        let OptimizerState {
            config,
            dim,
            step_count,
            moments,
        } = self;
        let (moments, params) = match (config, moments) {
            (OptimizerConfig::Sgd { lr }, m) => (m, params.sub_scaled(lr, gradient)?),
            (OptimizerConfig::Momentum { lr, decay }, Moments::Velocity(buf)) => {
                let buf = buf.zip_map(gradient, |b, g| decay * b + g)?;
                let next = params.sub_scaled(lr, &buf)?;
                (Moments::Velocity(buf), next)
            }
            (OptimizerConfig::Nesterov { lr, decay }, Moments::Velocity(buf)) => {
                let buf = buf.zip_map(gradient, |b, g| decay * b + g)?;
                let look = buf.zip_map(gradient, |b, g| decay * b + g)?;
                let next = params.sub_scaled(lr, &look)?;
                (Moments::Velocity(buf), next)
            }
            (
                OptimizerConfig::Adam {
                    lr,
                    beta1,
                    beta2,
                    eps,
                },
                Moments::Adam { m, v },
            ) => {
                let t = (step_count + 1) as i32;
                let m = m.zip_map(gradient, |m, g| beta1 * m + (1.0 - beta1) * g)?;
                let v = v.zip_map(gradient, |v, g| beta2 * v + (1.0 - beta2) * g * g)?;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                let dir = m.zip_map(&v, |m, v| (m / c1) / ((v / c2).sqrt() + eps))?;
                let next = params.sub_scaled(lr, &dir)?;
                (Moments::Adam { m, v }, next)
            }
            _ => unreachable!("moment buffers always match the configuration"),
        };
        Ok((
            OptimizerState {
                config,
                dim,
                step_count: step_count + 1,
                moments,
            },
            params,
        ))
    }
}

/// Free-function form of [`OptimizerState::step`].
pub fn opt_step(
    state: OptimizerState,
    params: &Vector,
    input_gradient: &Vector,
) -> Result<(OptimizerState, Vector)> {
    state.step(params, input_gradient)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_slice(xs).unwrap()
    }

    #[test]
    fn sgd_step() {
        let s = OptimizerState::new(OptimizerConfig::sgd(0.1), 1).unwrap();
        let (s, p) = s.step(&v(&[1.0]), &v(&[2.0])).unwrap();
        assert_eq!(p, v(&[0.8]));
        assert_eq!(s.step_count(), 1);
        let (_, q) = s.step(&p, &v(&[0.0])).unwrap();
        assert_eq!(q, p);
    }

    #[test]
    fn adam_first_step() {
        let s = OptimizerState::new(OptimizerConfig::adam(0.1, 0.9, 0.999), 1).unwrap();
        let (_, p) = s.step(&v(&[0.0]), &v(&[1.0])).unwrap();
        let expected = -0.1 / (1.0 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-12, "{p:?}");
    }

    #[test]
    fn adam_first_step_is_scale_free() {
        for g in [1e-3, 0.5, 3.0, 1e4] {
            let s = OptimizerState::new(OptimizerConfig::adam(0.1, 0.9, 0.999), 1).unwrap();
            let (_, p) = s.step(&v(&[0.0]), &v(&[-g])).unwrap();
            assert!(p[0] > 0.0);
            assert!((p[0] - 0.1).abs() <= 0.1 * (1e-8 / g) + 1e-12);
        }
    }

    #[test]
    fn momentum_accumulates() {
        let s = OptimizerState::new(OptimizerConfig::momentum(1.0, 0.5), 1).unwrap();
        let (s, p) = s.step(&v(&[0.0]), &v(&[1.0])).unwrap();
        assert_eq!(p, v(&[-1.0]));
        let (_, p) = s.step(&p, &v(&[1.0])).unwrap();
        assert_eq!(p, v(&[-2.5]));
    }

    #[test]
    fn nesterov_uses_lookahead_buffer() {
        let s = OptimizerState::new(OptimizerConfig::nesterov(1.0, 0.5), 1).unwrap();
        // buf = 1, step = 0.5 * 1 + 1
        let (s, p) = s.step(&v(&[0.0]), &v(&[1.0])).unwrap();
        assert_eq!(p, v(&[-1.5]));
        // buf = 1.5, step = 0.75 + 1
        let (_, p) = s.step(&p, &v(&[1.0])).unwrap();
        assert_eq!(p, v(&[-3.25]));
    }

    #[test]
    fn decay_zero_momentum_matches_sgd() {
        let grads = [[0.3, -1.2], [2.0, 0.1], [-0.4, 0.7]];
        let mut a = OptimizerState::new(OptimizerConfig::sgd(0.05), 2).unwrap();
        let mut b = OptimizerState::new(OptimizerConfig::momentum(0.05, 0.0), 2).unwrap();
        let (mut pa, mut pb) = (v(&[1.0, -1.0]), v(&[1.0, -1.0]));
        for g in grads {
            let g = v(&g);
            (a, pa) = a.step(&pa, &g).unwrap();
            (b, pb) = b.step(&pb, &g).unwrap();
            assert_eq!(pa, pb);
        }
    }

    #[test]
    fn rejects_invalid() {
        assert!(OptimizerState::new(OptimizerConfig::sgd(0.0), 1).is_err());
        assert!(OptimizerState::new(OptimizerConfig::momentum(0.1, 1.0), 1).is_err());
        assert!(OptimizerState::new(
            OptimizerConfig::Adam {
                lr: 0.1,
                beta1: 0.9,
                beta2: 0.999,
                eps: 0.0
            },
            1
        )
        .is_err());
        let s = OptimizerState::new(OptimizerConfig::sgd(0.1), 2).unwrap();
        assert!(s.step(&v(&[1.0]), &v(&[1.0])).is_err());
    }
}
