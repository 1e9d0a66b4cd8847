//! The carry-buffer gradient transformation.
//!
//! Each step forms `v = g + Δ`, hands `u = clip(v, γ)` to the base optimizer
//! and keeps the clipped-away remainder `Δ' = v - u` for the next step. The
//! sign variant replaces `clip` with an element-wise sign.

use smallvec::SmallVec;

use crate::clipmath::{clip, ClipRegion, Vector};
use crate::error::{Error, Result};
use crate::optimizers::OptimizerState;

/// Which transformation sits between the raw gradient and the optimizer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TransformMode {
    /// Raw gradients straight to the optimizer.
    None,
    /// `u = clip(g, γ)`, no carry.
    ClipOnly,
    /// `u = clip(g + Δ, γ)`, carry kept.
    UClip,
    /// `u = sign(g + Δ)`, carry kept.
    USign,
}

impl TransformMode {
    pub fn name(&self) -> &'static str {
        match self {
            TransformMode::None => "none",
            TransformMode::ClipOnly => "clip",
            TransformMode::UClip => "uclip",
            TransformMode::USign => "usign",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(TransformMode::None),
            "clip" | "clip-only" | "clip_only" => Ok(TransformMode::ClipOnly),
            "uclip" => Ok(TransformMode::UClip),
            "usign" => Ok(TransformMode::USign),
            other => Err(Error::Config(format!("unknown transform mode `{other}`"))),
        }
    }

    pub fn keeps_carry(&self) -> bool {
        matches!(self, TransformMode::UClip | TransformMode::USign)
    }
}

/// Which coordinates (or, in norm mode, whether the vector) got clipped.
#[derive(Clone, Debug, PartialEq)]
pub enum ClipEvent {
    Coordinates(SmallVec<[bool; 4]>),
    Norm(bool),
}

impl ClipEvent {
    pub fn any(&self) -> bool {
        match self {
            ClipEvent::Coordinates(c) => c.iter().any(|&b| b),
            ClipEvent::Norm(b) => *b,
        }
    }

    fn between(before: &Vector, after: &Vector, region: &ClipRegion) -> Self {
        if region.is_norm() {
            ClipEvent::Norm(before != after)
        } else {
            ClipEvent::Coordinates(
                before
                    .iter()
                    .zip(after.iter())
                    .map(|(a, b)| a.to_bits() != b.to_bits())
                    .collect(),
            )
        }
    }
}

/// What one transformed step saw and produced.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub raw_gradient: Vector,
    pub update: Vector,
    pub carry_after: Vector,
    pub clipped: ClipEvent,
}

/// Carry buffer plus the wrapped optimizer.
#[derive(Clone, Debug, PartialEq)]
pub struct UClipState {
    carry: Vector,
    inner: OptimizerState,
}

impl UClipState {
    /// Wraps `inner` with a zero carry.
    pub fn new(inner: OptimizerState) -> Self {
        UClipState {
            carry: Vector::zeros(inner.dim()),
            inner,
        }
    }

    pub fn carry(&self) -> &Vector {
        &self.carry
    }

    pub fn inner(&self) -> &OptimizerState {
        &self.inner
    }

    pub fn into_inner(self) -> OptimizerState {
        self.inner
    }

    /// One U-Clip step with region `region`.
    pub fn step(
        self,
        params: &Vector,
        g: &Vector,
        region: &ClipRegion,
    ) -> Result<(UClipState, Vector, StepRecord)> {
        g.ensure_dim(self.carry.dim())?;
        let pending = g.add(&self.carry)?;
        let update = clip(&pending, region)?;
        let carry = pending.sub(&update)?;
        let (inner, params) = self.inner.step(params, &update)?;
        let record = StepRecord {
            raw_gradient: g.clone(),
            clipped: ClipEvent::between(&pending, &update, region),
            update,
            carry_after: carry.clone(),
        };
        Ok((UClipState { carry, inner }, params, record))
    }

    /// One U-Sign step; `sign(0) = 0`.
    pub fn sign_step(self, params: &Vector, g: &Vector) -> Result<(UClipState, Vector, StepRecord)> {
        g.ensure_dim(self.carry.dim())?;
        let pending = g.add(&self.carry)?;
        let update = pending.map(sign)?;
        let carry = pending.sub(&update)?;
        let (inner, params) = self.inner.step(params, &update)?;
        let record = StepRecord {
            raw_gradient: g.clone(),
            clipped: ClipEvent::Coordinates(pending.iter().map(|&x| x != sign(x)).collect()),
            update,
            carry_after: carry.clone(),
        };
        Ok((UClipState { carry, inner }, params, record))
    }
}

/// Sign with `sign(0) = 0`.
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn uclip_step(
    state: UClipState,
    params: &Vector,
    g: &Vector,
    region: &ClipRegion,
) -> Result<(UClipState, Vector, StepRecord)> {
    state.step(params, g, region)
}

pub fn usign_step(
    state: UClipState,
    params: &Vector,
    g: &Vector,
) -> Result<(UClipState, Vector, StepRecord)> {
    state.sign_step(params, g)
}

/// Plain clipped step: `u = clip(g, γ)` and nothing is remembered.
pub fn clip_only_step(
    inner: OptimizerState,
    params: &Vector,
    g: &Vector,
    region: &ClipRegion,
) -> Result<(OptimizerState, Vector, StepRecord)> {
    let update = clip(g, region)?;
    let (inner, params) = inner.step(params, &update)?;
    let record = StepRecord {
        raw_gradient: g.clone(),
        clipped: ClipEvent::between(g, &update, region),
        carry_after: Vector::zeros(g.dim()),
        update,
    };
    Ok((inner, params, record))
}

/// Single-run estimate of the average bias `Δ_t / t`, with `t` 1-based.
pub fn average_bias(trace: &[StepRecord], t: usize) -> Result<Vector> {
    if t == 0 || t > trace.len() {
        return Err(Error::IndexOutOfRange {
            index: t,
            len: trace.len(),
        });
    }
    trace[t - 1].carry_after.scale(1.0 / t as f64)
}

/// A transformation bound to one trajectory, dispatching on [`TransformMode`].
#[derive(Clone, Debug)]
pub enum Transformed {
    Bare(OptimizerState),
    ClipOnly(OptimizerState),
    UClip(UClipState),
    USign(UClipState),
}

impl Transformed {
    pub fn new(mode: TransformMode, inner: OptimizerState) -> Self {
        match mode {
            TransformMode::None => Transformed::Bare(inner),
            TransformMode::ClipOnly => Transformed::ClipOnly(inner),
            TransformMode::UClip => Transformed::UClip(UClipState::new(inner)),
            TransformMode::USign => Transformed::USign(UClipState::new(inner)),
        }
    }

    pub fn mode(&self) -> TransformMode {
        match self {
            Transformed::Bare(_) => TransformMode::None,
            Transformed::ClipOnly(_) => TransformMode::ClipOnly,
            Transformed::UClip(_) => TransformMode::UClip,
            Transformed::USign(_) => TransformMode::USign,
        }
    }

    /// Current carry; zero for modes without one.
    pub fn carry(&self) -> Vector {
        match self {
            Transformed::Bare(s) | Transformed::ClipOnly(s) => Vector::zeros(s.dim()),
            Transformed::UClip(s) | Transformed::USign(s) => s.carry().clone(),
        }
    }

    /// Steps the underlying optimizer; `region` is ignored by the bare and
    /// sign modes.
    pub fn step(self, params: &Vector, g: &Vector, region: &ClipRegion) -> Result<(Self, Vector, StepRecord)> {
        Ok(match self {
            Transformed::Bare(s) => {
                let (s, p) = s.step(params, g)?;
                let record = StepRecord {
                    raw_gradient: g.clone(),
                    update: g.clone(),
                    carry_after: Vector::zeros(g.dim()),
                    clipped: ClipEvent::Coordinates(smallvec::smallvec![false; g.dim()]),
                };
                (Transformed::Bare(s), p, record)
            }
            Transformed::ClipOnly(s) => {
                let (s, p, r) = clip_only_step(s, params, g, region)?;
                (Transformed::ClipOnly(s), p, r)
            }
            Transformed::UClip(s) => {
                let (s, p, r) = s.step(params, g, region)?;
                (Transformed::UClip(s), p, r)
            }
            Transformed::USign(s) => {
                let (s, p, r) = s.sign_step(params, g)?;
                (Transformed::USign(s), p, r)
            }
        })
    }
}

/// One carry per simulated device; the devices' clipped updates are averaged
/// before a single optimizer step.
#[derive(Clone, Debug, PartialEq)]
pub struct PerShardUClip {
    carries: Vec<Vector>,
    inner: OptimizerState,
}

impl PerShardUClip {
    pub fn new(inner: OptimizerState, shards: usize) -> Result<Self> {
        if shards == 0 {
            return Err(crate::error::invalid("shard count must be at least 1"));
        }
        Ok(PerShardUClip {
            carries: vec![Vector::zeros(inner.dim()); shards],
            inner,
        })
    }

    pub fn carries(&self) -> &[Vector] {
        &self.carries
    }

    pub fn inner(&self) -> &OptimizerState {
        &self.inner
    }

    /// Clips each shard's `g_k + Δ_k`, then steps the optimizer with the
    /// mean update. Returns one record per shard.
    pub fn step(
        self,
        params: &Vector,
        grads: &[Vector],
        region: &ClipRegion,
    ) -> Result<(PerShardUClip, Vector, Vec<StepRecord>)> {
        if grads.len() != self.carries.len() {
            return Err(Error::DimensionMismatch {
                expected: self.carries.len(),
                found: grads.len(),
            });
        }
        let mut carries = Vec::with_capacity(grads.len());
        let mut records = Vec::with_capacity(grads.len());
        for (g, carry) in grads.iter().zip(&self.carries) {
            g.ensure_dim(carry.dim())?;
            let pending = g.add(carry)?;
            let update = clip(&pending, region)?;
            let next = pending.sub(&update)?;
            records.push(StepRecord {
                raw_gradient: g.clone(),
                clipped: ClipEvent::between(&pending, &update, region),
                update,
                carry_after: next.clone(),
            });
            carries.push(next);
        }
        let updates: Vec<Vector> = records.iter().map(|r| r.update.clone()).collect();
        let mean = Vector::mean_of(&updates)?;
        let (inner, params) = self.inner.step(params, &mean)?;
        Ok((PerShardUClip { carries, inner }, params, records))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::OptimizerConfig;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_slice(xs).unwrap()
    }

    fn state_with_carry(c: f64) -> UClipState {
        let inner = OptimizerState::new(OptimizerConfig::sgd(0.1), 1).unwrap();
        UClipState {
            carry: v(&[c]),
            inner,
        }
    }

    #[test]
    fn uclip_examples() {
        let r = ClipRegion::component(2.0).unwrap();
        let (s, _, rec) = state_with_carry(0.0).step(&v(&[0.0]), &v(&[3.0]), &r).unwrap();
        assert_eq!(rec.update, v(&[2.0]));
        assert_eq!(s.carry(), &v(&[1.0]));
        assert!(rec.clipped.any());

        let (s, _, rec) = state_with_carry(1.0).step(&v(&[0.0]), &v(&[3.0]), &r).unwrap();
        assert_eq!(rec.update, v(&[2.0]));
        assert_eq!(s.carry(), &v(&[2.0]));

        let (s, p, rec) = state_with_carry(0.5).step(&v(&[0.0]), &v(&[0.5]), &r).unwrap();
        assert_eq!(rec.update, v(&[1.0]));
        assert_eq!(s.carry(), &v(&[0.0]));
        assert!(!rec.clipped.any());
        assert_eq!(p, v(&[-0.1]));
    }

    #[test]
    fn usign_examples() {
        let (s, _, rec) = state_with_carry(0.0).sign_step(&v(&[0.0]), &v(&[0.3])).unwrap();
        assert_eq!(rec.update, v(&[1.0]));
        assert!((s.carry()[0] + 0.7).abs() < 1e-15);

        let (s, _, rec) = state_with_carry(0.0).sign_step(&v(&[0.0]), &v(&[0.0])).unwrap();
        assert_eq!(rec.update, v(&[0.0]));
        assert_eq!(s.carry(), &v(&[0.0]));

        let (s, _, rec) = state_with_carry(-0.7).sign_step(&v(&[0.0]), &v(&[0.3])).unwrap();
        assert_eq!(rec.update, v(&[-1.0]));
        assert!((s.carry()[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn average_bias_examples() {
        let rec = |c: f64| StepRecord {
            raw_gradient: v(&[0.0]),
            update: v(&[0.0]),
            carry_after: v(&[c]),
            clipped: ClipEvent::Coordinates(smallvec::smallvec![false]),
        };
        let mut trace: Vec<_> = (0..9).map(|_| rec(1.0)).collect();
        trace.push(rec(5.0));
        assert_eq!(average_bias(&trace, 10).unwrap(), v(&[0.5]));
        assert_eq!(average_bias(&[rec(0.0)], 1).unwrap(), v(&[0.0]));
        assert!(average_bias(&trace, 0).is_err());
        assert!(average_bias(&trace, 11).is_err());
    }

    #[test]
    fn norm_mode_reports_scalar_event() {
        let inner = OptimizerState::new(OptimizerConfig::sgd(0.1), 2).unwrap();
        let s = UClipState::new(inner);
        let r = ClipRegion::norm(1.0).unwrap();
        let (s, _, rec) = s.step(&v(&[0.0, 0.0]), &v(&[3.0, 4.0]), &r).unwrap();
        assert_eq!(rec.clipped, ClipEvent::Norm(true));
        assert!(rec.update.norm() <= 1.0);
        let sum = rec.update.add(s.carry()).unwrap();
        assert_eq!(sum, v(&[3.0, 4.0]));
    }

    #[test]
    fn clip_only_forgets() {
        let inner = OptimizerState::new(OptimizerConfig::sgd(1.0), 1).unwrap();
        let r = ClipRegion::component(1.0).unwrap();
        let (_, p, rec) = clip_only_step(inner, &v(&[0.0]), &v(&[5.0]), &r).unwrap();
        assert_eq!(p, v(&[-1.0]));
        assert!(rec.carry_after.is_zero());
    }

    #[test]
    fn dimension_mismatch_propagates() {
        let inner = OptimizerState::new(OptimizerConfig::sgd(0.1), 2).unwrap();
        let s = UClipState::new(inner);
        assert!(s
            .step(&v(&[0.0, 0.0]), &v(&[1.0]), &ClipRegion::Unbounded)
            .is_err());
    }
}
