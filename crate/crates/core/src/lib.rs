//! Carry-buffer gradient clipping (U-Clip) over black-box optimizers.
//!
//! U-Clip clips `g_t + Δ_t` instead of `g_t` and keeps the clipped-away
//! remainder in a carry `Δ_{t+1}`, so the updates fed to the optimizer are
//! unbiased on average while each one stays inside the clip region.
//!
//! ```
//! use uclip::{ClipRegion, OptimizerConfig, OptimizerState, UClipState, Vector};
//!
//! let inner = OptimizerState::new(OptimizerConfig::sgd(0.1), 1).unwrap();
//! let state = UClipState::new(inner);
//! let x = Vector::scalar(1.0).unwrap();
//! let g = Vector::scalar(3.0).unwrap();
//! let region = ClipRegion::component(2.0).unwrap();
//! let (state, x, record) = state.step(&x, &g, &region).unwrap();
//! assert_eq!(record.update.as_slice(), &[2.0]);
//! assert_eq!(state.carry().as_slice(), &[1.0]);
//! assert!((x[0] - 0.8).abs() < 1e-15);
//! ```

pub mod clipmath;
pub mod error;
pub mod harness;
pub mod optimizers;
pub mod problems;
pub mod regions;
pub mod theory;
pub mod transform;

pub use clipmath::{clip, clip_component, clip_norm, ClipRegion, Vector};
pub use error::{Error, Result};
pub use optimizers::{opt_step, OptimizerConfig, OptimizerState};
pub use problems::{DatasetParams, NoiseProxy, StochasticProblem, SyntheticDataset};
pub use regions::{
    Estimator, EwmaEstimator, RegionContext, RegionPolicy, WelfordEstimator, DEFAULT_GAMMA_FLOOR,
};
pub use theory::{BoundInputs, BoundTerms};
pub use transform::{
    average_bias, clip_only_step, uclip_step, usign_step, ClipEvent, PerShardUClip, StepRecord,
    TransformMode, Transformed, UClipState,
};
