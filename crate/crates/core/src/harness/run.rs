use rand::Rng;

use crate::clipmath::Vector;
use crate::error::{Error, Result};
use crate::optimizers::OptimizerState;
use crate::problems::StochasticProblem;
use crate::regions::{RegionContext, RegionPolicy};
use crate::transform::{StepRecord, Transformed};

use super::config::ExperimentConfig;
use super::output::{Cell, Table};
use super::{geometric_checkpoints, percentile, trajectory_rng};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Log every step instead of geometric checkpoints.
    pub full_trace: bool,
    /// Keep `‖Δ_{t+1}‖` for every step.
    pub carry_series: bool,
    /// Keep every [`StepRecord`].
    pub keep_records: bool,
}

/// One logged step. Values describe step `t`: `iterate` is `x_t`, the carry
/// and update columns are what step `t` produced.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub t: u64,
    pub iterate: Vector,
    /// `f(x_t) - f(x*)`.
    pub suboptimality: f64,
    /// `R_t = (1/t) Σ_{s≤t} (f(x_s) - f(x*))`.
    pub avg_regret: f64,
    /// `f(x̄_t) - f(x*)` for the running mean `x̄_t` of `x_1..x_t`.
    pub avg_iterate_regret: f64,
    /// `‖Δ_{t+1}‖₂`.
    pub carry_norm: f64,
    /// `‖Δ_{t+1}‖_∞`.
    pub carry_abs: f64,
    pub update_norm: f64,
    pub clipped: bool,
    /// `Σ_{s≤t} Γ_s`, with `Γ_s` the Euclidean radius of the clip region
    /// (the actual `‖u_s‖` when the region is unbounded).
    pub gamma_sum: f64,
    /// `Σ_{s≤t} Γ_s²`.
    pub gamma_sq_sum: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub seed: u64,
    pub steps: u64,
    /// `x_{T+1}`.
    pub final_iterate: Vector,
    pub avg_regret: f64,
    /// `Δ_{T+1}`.
    pub final_carry: Vector,
    /// `max_t ‖Δ_t‖₂`.
    pub max_carry: f64,
    /// 99th percentile over time of `‖Δ_t‖₂` within this run.
    pub carry_p99_over_time: f64,
    /// `sup_t` of the largest region bound used.
    pub gamma_plus: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
    pub summary: RunSummary,
    pub carry_series: Option<Vec<f64>>,
    pub records: Option<Vec<StepRecord>>,
}

impl RunTrace {
    pub const HEADER: [&'static str; 12] = [
        "seed",
        "t",
        "x0",
        "suboptimality",
        "avg_regret",
        "avg_iterate_regret",
        "carry_norm",
        "carry_abs",
        "update_norm",
        "clipped",
        "gamma_sum",
        "gamma_sq_sum",
    ];

    /// Appends this trace's rows to `table`, which must use [`Self::HEADER`].
    pub fn append_rows(&self, table: &mut Table) {
        for r in &self.rows {
            table.push(vec![
                Cell::from(self.summary.seed),
                r.t.into(),
                r.iterate[0].into(),
                r.suboptimality.into(),
                r.avg_regret.into(),
                r.avg_iterate_regret.into(),
                r.carry_norm.into(),
                r.carry_abs.into(),
                r.update_norm.into(),
                (r.clipped as u64).into(),
                r.gamma_sum.into(),
                r.gamma_sq_sum.into(),
            ]);
        }
    }
}

/// Runs one trajectory of `cfg` under the random stream for
/// (`cfg.experiment_id`, `grid_point`, `seed`).
pub fn run_trajectory(
    cfg: &ExperimentConfig,
    grid_point: u64,
    seed: u64,
    options: RunOptions,
) -> Result<RunTrace> {
    let problem = cfg.problem.build()?;
    run_on(cfg, &problem, grid_point, seed, options)
}

pub(crate) fn run_on(
    cfg: &ExperimentConfig,
    problem: &StochasticProblem,
    grid_point: u64,
    seed: u64,
    options: RunOptions,
) -> Result<RunTrace> {
    let mut rng = trajectory_rng(&cfg.experiment_id, grid_point, seed);
    let dim = problem.dim();
    let policy = cfg.region.build(dim, cfg.gamma_floor)?;
    let inner = OptimizerState::new(cfg.optimizer, dim)?;
    let state = Transformed::new(cfg.transform, inner);
    let x1 = Vector::filled(dim, cfg.init)?;
    drive(cfg.steps, problem, policy, state, x1, seed, &mut rng, options)
}

/// Optimal value used for regret. The separable logistic loss has infimum 0.
fn optimal_value(problem: &StochasticProblem) -> Result<f64> {
    match problem.minimizer() {
        Ok((_, f)) => Ok(f),
        Err(Error::Unsupported(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn drive<R: Rng + ?Sized>(
    steps: u64,
    problem: &StochasticProblem,
    mut policy: RegionPolicy,
    mut state: Transformed,
    x1: Vector,
    seed: u64,
    rng: &mut R,
    options: RunOptions,
) -> Result<RunTrace> {
    let dim = problem.dim();
    let f_star = optimal_value(problem)?;
    let checkpoints = if options.full_trace {
        Vec::new()
    } else {
        geometric_checkpoints(steps)
    };
    let mut next_checkpoint = checkpoints.iter().peekable();

    let mut x = x1;
    let mut x_sum = Vector::zeros(dim);
    let mut regret_sum = 0.0;
    let mut gamma_sum = 0.0;
    let mut gamma_sq_sum = 0.0;
    let mut gamma_plus: f64 = 0.0;
    let mut carry_norms = Vec::with_capacity(steps as usize);
    let mut rows = Vec::new();
    let mut records = options.keep_records.then(Vec::new);

    for t in 1..=steps {
        let diverged = |reason: String| Error::Diverged { step: t, reason };
        let suboptimality = problem.expected_objective(&x)? - f_star;
        regret_sum += suboptimality;
        x_sum = x_sum.add(&x).map_err(|e| diverged(e.to_string()))?;

        let (mean, var) = if policy.needs_oracle() {
            (Some(problem.mean_gradient(&x)?), Some(problem.noise_variance(&x)?))
        } else {
            (None, None)
        };
        let region = policy.region_for_step(&RegionContext {
            step: t,
            mean_gradient: mean.as_ref(),
            noise_variance: var.as_ref(),
        })?;
        let g = problem.sample_subgradient(&x, rng)?;
        let (next_state, next_x, record) = state.step(&x, &g, &region).map_err(|e| match e {
            Error::NonFinite(what) => diverged(format!(
                "non-finite {what} at x = {:?}, g = {:?}",
                x.as_slice(),
                g.as_slice()
            )),
            other => other,
        })?;
        policy.observe(&g)?;

        let update_norm = record.update.norm();
        let radius = region.euclidean_bound(dim);
        let radius = if radius.is_finite() { radius } else { update_norm };
        gamma_sum += radius;
        gamma_sq_sum += radius * radius;
        gamma_plus = gamma_plus.max(region.sup());
        let carry_norm = record.carry_after.norm();
        carry_norms.push(carry_norm);

        let log_now = options.full_trace || next_checkpoint.next_if_eq(&&t).is_some();
        if log_now {
            let mean_x = x_sum.scale(1.0 / t as f64)?;
            rows.push(TraceRow {
                t,
                iterate: x.clone(),
                suboptimality,
                avg_regret: regret_sum / t as f64,
                avg_iterate_regret: problem.expected_objective(&mean_x)? - f_star,
                carry_norm,
                carry_abs: record.carry_after.norm_inf(),
                update_norm,
                clipped: record.clipped.any(),
                gamma_sum,
                gamma_sq_sum,
            });
        }
        if let Some(r) = records.as_mut() {
            r.push(record);
        }
        state = next_state;
        x = next_x;
    }

    let max_carry = carry_norms.iter().copied().fold(0.0, f64::max);
    let carry_p99_over_time = percentile(&carry_norms, 0.99)?;
    let summary = RunSummary {
        seed,
        steps,
        final_iterate: x,
        avg_regret: regret_sum / steps as f64,
        final_carry: state.carry(),
        max_carry,
        carry_p99_over_time,
        gamma_plus,
    };
    Ok(RunTrace {
        rows,
        summary,
        carry_series: options.carry_series.then_some(carry_norms),
        records,
    })
}
