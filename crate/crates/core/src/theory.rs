//! Closed-form carry and regret bounds.
//!
//! Notation: `G` bounds every gradient coordinate, `α = inf_t(γ_t - |ḡ_t|)`,
//! `γ₊ = sup_t γ_t`, `d` is the dimension and `T` the horizon. Multi-term
//! bounds return their terms individually so callers can see which term
//! dominates.

use crate::error::{invalid, Result};

/// Everything the bound evaluators may read. Each evaluator validates only
/// the fields it uses.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundInputs {
    /// `G`, coordinate-wise gradient bound.
    pub grad_bound: f64,
    /// `α`, margin between the clip region and `|ḡ_t|`.
    pub alpha: f64,
    /// `β` of the variance-adaptive region.
    pub beta: f64,
    /// `σ_min²`.
    pub sigma_min_sq: f64,
    /// `γ₊`.
    pub gamma_plus: f64,
    /// Constant clip region `γ`.
    pub gamma: f64,
    /// `γ̄ = (1/T) Σ γ_t`.
    pub gamma_mean: f64,
    /// `γ̃ = (1/T) Σ γ_t²`.
    pub gamma_sq_mean: f64,
    pub dim: usize,
    pub horizon: u64,
    pub lr: f64,
    /// `D_{T+1}`, carry bound.
    pub carry_bound: f64,
    /// `Σ_t Γ_t` for update-norm bounds `‖u_t‖ ≤ Γ_t`.
    pub update_bound_sum: f64,
    /// `Σ_t Γ_t²`.
    pub update_bound_sq_sum: f64,
    /// `‖x₁ - x*‖`.
    pub initial_distance: f64,
    /// `R ≥ sup_t ‖x_t - x*‖`.
    pub iterate_radius: f64,
    /// Noise sub-Gaussian proxy `σ` (not squared).
    pub noise_sigma: f64,
}

/// A bound split into named additive terms.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundTerms {
    pub terms: Vec<(&'static str, f64)>,
}

impl BoundTerms {
    fn new(terms: Vec<(&'static str, f64)>) -> Self {
        BoundTerms { terms }
    }

    pub fn total(&self) -> f64 {
        self.terms.iter().map(|(_, v)| v).sum()
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {x}")))
    }
}

fn nonneg(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be non-negative, got {x}")))
    }
}

fn probability(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("failure probability must lie in (0, 1], got {delta}")))
    }
}

/// `ln(e^z - 1)` for `z > 0`, stable at both ends.
fn ln_expm1(z: f64) -> f64 {
    if z > 1.0 {
        z + (-(-z).exp()).ln_1p()
    } else {
        z.exp_m1().ln()
    }
}

fn margin_inputs(inp: &BoundInputs) -> Result<(f64, f64)> {
    if inp.alpha == 0.0 {
        return Err(invalid(
            "alpha = 0: the carry is an unbiased random walk and the bound is undefined",
        ));
    }
    positive("alpha", inp.alpha)?;
    positive("G", inp.grad_bound)?;
    Ok((inp.alpha, inp.grad_bound))
}

/// `ln c_α` with `c_α = (exp(α²/2G²) - 1)⁻¹`.
pub fn ln_c_alpha(alpha: f64, grad_bound: f64) -> Result<f64> {
    positive("alpha", alpha)?;
    positive("G", grad_bound)?;
    Ok(-ln_expm1(alpha * alpha / (2.0 * grad_bound * grad_bound)))
}

pub fn c_alpha(alpha: f64, grad_bound: f64) -> Result<f64> {
    Ok(ln_c_alpha(alpha, grad_bound)?.exp())
}

/// `P(|Δ_t| ≥ ε + G + γ₊) ≤ 2 c_α exp(-(ε² + 2αεt) / (2G²t))`, capped at 1.
pub fn carry_tail_bound(inp: &BoundInputs, eps: f64, t: u64) -> Result<f64> {
    let (alpha, g) = margin_inputs(inp)?;
    nonneg("epsilon", eps)?;
    if t == 0 {
        return Err(invalid("t must be at least 1"));
    }
    let t = t as f64;
    let exponent = -(eps * eps + 2.0 * alpha * eps * t) / (2.0 * g * g * t);
    let ln_bound = std::f64::consts::LN_2 + ln_c_alpha(alpha, g)? + exponent;
    Ok(ln_bound.exp().min(1.0))
}

/// `E|Δ_t| ≤ 2 c_α G²/α + G + γ₊`.
pub fn carry_expectation_bound(inp: &BoundInputs) -> Result<f64> {
    let (alpha, g) = margin_inputs(inp)?;
    nonneg("gamma_plus", inp.gamma_plus)?;
    let ln_first = std::f64::consts::LN_2 + ln_c_alpha(alpha, g)? + 2.0 * g.ln() - alpha.ln();
    Ok(ln_first.exp() + g + inp.gamma_plus)
}

/// With probability `1 - δ`, `|Δ_t| ≤ (G²/α²) ln(4G²/(α²δ)) + 2G`.
pub fn carry_highprob_bound(inp: &BoundInputs, delta: f64) -> Result<f64> {
    let (alpha, g) = margin_inputs(inp)?;
    probability(delta)?;
    let ratio = (g * g) / (alpha * alpha);
    Ok(ratio * (4.0 * ratio / delta).ln() + 2.0 * g)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptiveCarryBounds {
    pub high_prob: f64,
    pub expectation: f64,
    /// `m_t = min{t, β⁻² σ_min⁻² / 2}`.
    pub m_t: f64,
}

/// Carry bounds for `γ_t = |ḡ_t| + β σ_t²`.
pub fn adaptive_carry_bounds(inp: &BoundInputs, delta: f64, t: u64) -> Result<AdaptiveCarryBounds> {
    positive("beta", inp.beta)?;
    positive("sigma_min^2", inp.sigma_min_sq)?;
    nonneg("G", inp.grad_bound)?;
    probability(delta)?;
    if t == 0 {
        return Err(invalid("t must be at least 1"));
    }
    let (beta, s2, g) = (inp.beta, inp.sigma_min_sq, inp.grad_bound);
    let m_t = (t as f64).min(1.0 / (2.0 * beta * beta * s2));
    Ok(AdaptiveCarryBounds {
        high_prob: (2.0 / beta) * (2.0 * m_t / delta).ln() + (2.0 + beta) * g,
        expectation: 8.0 / (beta.powi(3) * s2) + (2.0 + beta) * g,
        m_t,
    })
}

fn regret_common(inp: &BoundInputs) -> Result<(f64, f64)> {
    positive("lr", inp.lr)?;
    nonneg("carry bound", inp.carry_bound)?;
    nonneg("sum of update bounds", inp.update_bound_sum)?;
    nonneg("sum of squared update bounds", inp.update_bound_sq_sum)?;
    nonneg("initial distance", inp.initial_distance)?;
    if inp.horizon == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    Ok((inp.lr, inp.horizon as f64))
}

/// Expected average regret of any additive update rule whose carry is
/// bounded by `D_{T+1}` in expectation.
pub fn regret_bound_lemma1(inp: &BoundInputs) -> Result<BoundTerms> {
    let (eta, t) = regret_common(inp)?;
    let d = inp.carry_bound;
    let r0 = inp.initial_distance;
    Ok(BoundTerms::new(vec![
        ("carry_x_updates", 2.0 * eta * d * inp.update_bound_sum / t),
        ("update_sq", eta * inp.update_bound_sq_sum / (2.0 * t)),
        ("initial_distance_sq", r0 * r0 / (2.0 * eta * t)),
        ("carry_x_distance", d * r0 / t),
    ]))
}

/// High-probability companion of [`regret_bound_lemma1`]: holds with
/// probability `1 - 2δ` when the carry bound holds with probability `1 - δ`.
pub fn regret_bound_lemma1_highprob(inp: &BoundInputs, delta: f64) -> Result<BoundTerms> {
    probability(delta)?;
    nonneg("iterate radius", inp.iterate_radius)?;
    nonneg("noise sigma", inp.noise_sigma)?;
    let mut b = regret_bound_lemma1(inp)?;
    let t = inp.horizon as f64;
    b.terms.push((
        "noise_concentration",
        std::f64::consts::SQRT_2 * inp.iterate_radius * inp.noise_sigma * (2.0 / delta).ln() / t.sqrt(),
    ));
    Ok(b)
}

fn horizon_and_dim(inp: &BoundInputs) -> Result<(f64, f64)> {
    if inp.horizon == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    if inp.dim == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    nonneg("initial distance", inp.initial_distance)?;
    Ok((inp.horizon as f64, inp.dim as f64))
}

/// Constant-region convergence bound with `η = 1/√T`.
pub fn regret_bound_thm1(inp: &BoundInputs) -> Result<BoundTerms> {
    let (alpha, g) = margin_inputs(inp)?;
    positive("gamma", inp.gamma)?;
    let (t, d) = horizon_and_dim(inp)?;
    let (gamma, r0) = (inp.gamma, inp.initial_distance);
    let sd = d.sqrt();
    let g4_a3 = g.powi(4) / alpha.powi(3);
    Ok(BoundTerms::new(vec![
        ("carry", 8.0 * g4_a3 * d.powf(1.5) * gamma / t.sqrt()),
        (
            "descent",
            (4.0 * g * sd * gamma + (4.0 * sd + d) * gamma * gamma + r0 * r0) / (2.0 * t.sqrt()),
        ),
        ("distance", (4.0 * d * g4_a3 + g + gamma) * r0 / t),
    ]))
}

/// Variance-adaptive convergence bound with `η = 1/√T`.
pub fn regret_bound_thm2(inp: &BoundInputs) -> Result<BoundTerms> {
    positive("beta", inp.beta)?;
    if inp.sigma_min_sq == 0.0 {
        return Err(invalid("sigma_min = 0 makes the adaptive bound undefined"));
    }
    positive("sigma_min^2", inp.sigma_min_sq)?;
    positive("G", inp.grad_bound)?;
    let (t, d) = horizon_and_dim(inp)?;
    let (beta, s2, g, r0) = (inp.beta, inp.sigma_min_sq, inp.grad_bound, inp.initial_distance);
    let sd = d.sqrt();
    Ok(BoundTerms::new(vec![
        ("carry", 16.0 * d.powf(1.5) * g / (beta.powi(3) * s2 * t.sqrt())),
        (
            "descent",
            (4.0 * (2.0 + beta) * sd * g * g + d * g * g + r0 * r0) / (2.0 * t.sqrt()),
        ),
        ("distance", (8.0 * d / (beta.powi(3) * s2) + (2.0 + beta) * g) * r0 / t),
    ]))
}

/// Time-varying-region convergence bound with `η = 1/√T`, in terms of
/// `γ̄`, `γ̃` and `γ₊`.
pub fn regret_bound_thm_a1(inp: &BoundInputs) -> Result<BoundTerms> {
    let (alpha, g) = margin_inputs(inp)?;
    positive("gamma_mean", inp.gamma_mean)?;
    positive("gamma_sq_mean", inp.gamma_sq_mean)?;
    positive("gamma_plus", inp.gamma_plus)?;
    let (t, d) = horizon_and_dim(inp)?;
    let (gbar, gtilde, gplus, r0) = (inp.gamma_mean, inp.gamma_sq_mean, inp.gamma_plus, inp.initial_distance);
    let sd = d.sqrt();
    let g4_a3 = g.powi(4) / alpha.powi(3);
    Ok(BoundTerms::new(vec![
        ("carry", 8.0 * g4_a3 * d.powf(1.5) * gbar / t.sqrt()),
        (
            "descent",
            (4.0 * (g + gplus) * sd * gbar + d * gtilde + r0 * r0) / (2.0 * t.sqrt()),
        ),
        ("distance", (4.0 * d * g4_a3 + g + gplus) * r0 / t),
    ]))
}
