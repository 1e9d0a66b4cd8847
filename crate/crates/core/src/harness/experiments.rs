use std::sync::Arc;

use rayon::prelude::*;

use crate::clipmath::Vector;
use crate::error::{Error, Result};
use crate::optimizers::{OptimizerConfig, OptimizerState};
use crate::problems::{StochasticProblem, SyntheticDataset};
use crate::regions::RegionContext;
use crate::theory::{self, BoundInputs};
use crate::transform::{PerShardUClip, TransformMode, Transformed};

use super::config::{ExperimentConfig, ProblemSpec, RegionSpec};
use super::output::{Cell, Table};
use super::run::{run_on, RunOptions, RunSummary, RunTrace};
use super::{percentile, trajectory_rng};

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs every seed of `cfg` at one grid point, in seed order.
fn run_seeds(
    cfg: &ExperimentConfig,
    problem: &StochasticProblem,
    grid_point: u64,
    options: RunOptions,
) -> Result<Vec<RunTrace>> {
    cfg.seeds
        .par_iter()
        .map(|&seed| run_on(cfg, problem, grid_point, seed, options))
        .collect()
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

// ---------------------------------------------------------------- aliasing

/// Final iterates and trajectories of bare, clip-only and U-Clip SGD on the
/// aliasing problem. All three modes share each seed's noise stream.
#[derive(Clone, Debug, PartialEq)]
pub struct AliasingReport {
    pub modes: Vec<TransformMode>,
    /// `finals[m][k]` is `x_{T+1}` for mode `m` and seed `cfg.seeds[k]`.
    pub finals: Vec<Vec<f64>>,
    pub seeds: Vec<u64>,
    /// Per-step `x_t` when the config asks for a full trace.
    pub trajectories: Option<Vec<Vec<Vec<f64>>>>,
}

impl AliasingReport {
    pub fn finals_for(&self, mode: TransformMode) -> Option<&[f64]> {
        let i = self.modes.iter().position(|m| *m == mode)?;
        Some(&self.finals[i])
    }

    pub fn finals_table(&self) -> Table {
        let mut t = Table::new(vec!["mode", "seed", "final_x"]);
        for (m, finals) in self.modes.iter().zip(&self.finals) {
            for (seed, x) in self.seeds.iter().zip(finals) {
                t.push(vec![m.name().into(), (*seed).into(), (*x).into()]);
            }
        }
        t
    }

    pub fn trajectory_table(&self) -> Option<Table> {
        let trajs = self.trajectories.as_ref()?;
        let mut t = Table::new(vec!["mode", "seed", "t", "x"]);
        for (m, per_seed) in self.modes.iter().zip(trajs) {
            for (seed, xs) in self.seeds.iter().zip(per_seed) {
                for (i, x) in xs.iter().enumerate() {
                    t.push(vec![m.name().into(), (*seed).into(), (i + 1).into(), (*x).into()]);
                }
            }
        }
        Some(t)
    }

    /// The expected objective on `[-2, 2.5]`, for plotting.
    pub fn objective_table() -> Result<Table> {
        let p = StochasticProblem::AliasingPiecewise;
        let mut t = Table::new(vec!["x", "f"]);
        for i in 0..=450 {
            let x = -2.0 + i as f64 / 100.0;
            t.push(vec![x.into(), p.expected_objective(&Vector::scalar(x)?)?.into()]);
        }
        Ok(t)
    }
}

pub fn aliasing(cfg: &ExperimentConfig) -> Result<AliasingReport> {
    let modes = vec![TransformMode::None, TransformMode::ClipOnly, TransformMode::UClip];
    let problem = cfg.problem.build()?;
    let options = RunOptions {
        full_trace: cfg.full_trace,
        ..Default::default()
    };
    let runs = in_pool(cfg.threads, || {
        modes
            .par_iter()
            .map(|&mode| {
                let mut c = cfg.clone();
                c.transform = mode;
                run_seeds(&c, &problem, 0, options)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let finals = runs
        .iter()
        .map(|traces| traces.iter().map(|t| t.summary.final_iterate[0]).collect())
        .collect();
    let trajectories = cfg.full_trace.then(|| {
        runs.iter()
            .map(|traces| {
                traces
                    .iter()
                    .map(|t| {
                        let mut xs: Vec<f64> = t.rows.iter().map(|r| r.iterate[0]).collect();
                        xs.push(t.summary.final_iterate[0]);
                        xs
                    })
                    .collect()
            })
            .collect()
    });
    Ok(AliasingReport {
        modes,
        finals,
        seeds: cfg.seeds.clone(),
        trajectories,
    })
}

// ------------------------------------------------------------ carry sweeps

/// One grid point of a carry-bound sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct CarryRow {
    pub grid_value: f64,
    /// `α` for the additive region, `β` for the variance region.
    pub region_param: f64,
    pub noise_variance: f64,
    pub grad_bound: f64,
    pub gamma_plus: f64,
    /// 99th percentile across seeds of `|Δ_{T+1}|`.
    pub p99_final: f64,
    /// 99th percentile across seeds of `max_t |Δ_t|`.
    pub p99_run_max: f64,
    /// Mean across seeds of `|Δ_{T+1}|`.
    pub mean_final: f64,
    pub highprob_bound: f64,
    pub expectation_bound: f64,
    pub seeds: usize,
}

impl CarryRow {
    pub fn table(grid_name: &'static str, rows: &[CarryRow]) -> Table {
        let mut t = Table::new(vec![
            "grid_param",
            "grid_value",
            "region_param",
            "noise_variance",
            "grad_bound",
            "gamma_plus",
            "p99_final",
            "p99_run_max",
            "mean_final",
            "highprob_bound",
            "expectation_bound",
            "seeds",
        ]);
        for r in rows {
            t.push(vec![
                grid_name.into(),
                r.grid_value.into(),
                r.region_param.into(),
                r.noise_variance.into(),
                r.grad_bound.into(),
                r.gamma_plus.into(),
                r.p99_final.into(),
                r.p99_run_max.into(),
                r.mean_final.into(),
                r.highprob_bound.into(),
                r.expectation_bound.into(),
                r.seeds.into(),
            ]);
        }
        t
    }
}

fn abs_uniform_noise(cfg: &ExperimentConfig, what: &str) -> Result<f64> {
    match cfg.problem {
        ProblemSpec::AbsUniform { noise_variance, .. } => Ok(noise_variance),
        _ => Err(Error::Unsupported(format!("{what} needs the abs_uniform problem"))),
    }
}

fn carry_sweep(
    cfg: &ExperimentConfig,
    what: &str,
    bounds: impl Fn(&ExperimentConfig, f64, f64, f64) -> Result<(f64, f64, f64)> + Sync,
) -> Result<Vec<CarryRow>> {
    let points = cfg.grid_points()?;
    in_pool(cfg.threads, || {
        points
            .iter()
            .enumerate()
            .map(|(i, (value, point))| {
                let sigma_sq = abs_uniform_noise(point, what)?;
                let problem = point.problem.build()?;
                let g = problem.noise_proxy()?.grad_bound;
                let traces = run_seeds(point, &problem, i as u64, RunOptions::default())?;
                let summaries: Vec<&RunSummary> = traces.iter().map(|t| &t.summary).collect();
                let finals: Vec<f64> = summaries.iter().map(|s| s.final_carry.norm()).collect();
                let maxes: Vec<f64> = summaries.iter().map(|s| s.max_carry).collect();
                let gamma_plus = summaries.iter().map(|s| s.gamma_plus).fold(0.0, f64::max);
                let (param, hp, ex) = bounds(point, g, sigma_sq, gamma_plus)?;
                Ok(CarryRow {
                    grid_value: value.unwrap_or(param),
                    region_param: param,
                    noise_variance: sigma_sq,
                    grad_bound: g,
                    gamma_plus,
                    p99_final: percentile(&finals, 0.99)?,
                    p99_run_max: percentile(&maxes, 0.99)?,
                    mean_final: mean(finals.iter().copied()),
                    highprob_bound: hp,
                    expectation_bound: ex,
                    seeds: finals.len(),
                })
            })
            .collect()
    })?
}

/// Constant-margin region `γ_t = |ḡ_t| + α` against the margin carry bounds.
pub fn validate_carry(cfg: &ExperimentConfig) -> Result<Vec<CarryRow>> {
    carry_sweep(cfg, "validate-carry", |point, g, _, gamma_plus| {
        let RegionSpec::OracleAdditive { alpha } = point.region else {
            return Err(Error::Unsupported(
                "validate-carry needs the oracle_additive region".into(),
            ));
        };
        let inp = BoundInputs {
            grad_bound: g,
            alpha,
            gamma_plus,
            ..Default::default()
        };
        Ok((
            alpha,
            theory::carry_highprob_bound(&inp, point.delta)?,
            theory::carry_expectation_bound(&inp)?,
        ))
    })
}

/// Variance-adaptive region `γ_t = |ḡ_t| + βσ_t²` against its carry bounds.
pub fn validate_adaptive(cfg: &ExperimentConfig) -> Result<Vec<CarryRow>> {
    carry_sweep(cfg, "validate-adaptive", |point, g, sigma_sq, _| {
        let RegionSpec::OracleVariance { beta } = point.region else {
            return Err(Error::Unsupported(
                "validate-adaptive needs the oracle_variance region".into(),
            ));
        };
        let inp = BoundInputs {
            grad_bound: g,
            beta,
            sigma_min_sq: sigma_sq,
            ..Default::default()
        };
        let b = theory::adaptive_carry_bounds(&inp, point.delta, point.steps)?;
        Ok((beta, b.high_prob, b.expectation))
    })
}

/// Per-step rows for every seed at the first grid point of `cfg`.
pub fn full_traces(cfg: &ExperimentConfig) -> Result<Table> {
    let (_, point) = cfg
        .grid_points()?
        .into_iter()
        .next()
        .ok_or(Error::EmptyInput("grid"))?;
    let problem = point.problem.build()?;
    let options = RunOptions {
        full_trace: true,
        ..Default::default()
    };
    let traces = in_pool(cfg.threads, || run_seeds(&point, &problem, 0, options))??;
    let mut table = Table::new(RunTrace::HEADER.to_vec());
    for t in &traces {
        t.append_rows(&mut table);
    }
    Ok(table)
}

// ------------------------------------------------------------------ regret

/// Seed-averaged regret at one checkpoint against the gradient-transformation
/// regret bound.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretRow {
    pub t: u64,
    pub empirical_regret: f64,
    pub empirical_iterate_regret: f64,
    /// `max_{s≤t+1}` of the seed-mean `|Δ_s|`.
    pub observed_carry: f64,
    /// `max_{s≤t+1}` of `|Δ_s|` over every seed.
    pub observed_carry_max: f64,
    /// Expectation bound on the carry.
    pub predicted_carry: f64,
    pub bound_observed: f64,
    pub bound_observed_max: f64,
    pub bound_predicted: f64,
}

impl RegretRow {
    pub fn table(rows: &[RegretRow]) -> Table {
        let mut t = Table::new(vec![
            "t",
            "empirical_regret",
            "empirical_iterate_regret",
            "observed_carry",
            "observed_carry_max",
            "predicted_carry",
            "bound_observed",
            "bound_observed_max",
            "bound_predicted",
        ]);
        for r in rows {
            t.push(vec![
                r.t.into(),
                r.empirical_regret.into(),
                r.empirical_iterate_regret.into(),
                r.observed_carry.into(),
                r.observed_carry_max.into(),
                r.predicted_carry.into(),
                r.bound_observed.into(),
                r.bound_observed_max.into(),
                r.bound_predicted.into(),
            ]);
        }
        t
    }
}

pub fn validate_regret(cfg: &ExperimentConfig) -> Result<Vec<RegretRow>> {
    let sigma_sq = abs_uniform_noise(cfg, "validate-regret")?;
    let problem = cfg.problem.build()?;
    let g = problem.noise_proxy()?.grad_bound;
    let options = RunOptions {
        carry_series: true,
        ..Default::default()
    };
    let traces = in_pool(cfg.threads, || run_seeds(cfg, &problem, 0, options))??;
    let gamma_plus = traces.iter().map(|t| t.summary.gamma_plus).fold(0.0, f64::max);
    let predicted_carry = match cfg.region {
        RegionSpec::OracleAdditive { alpha } => theory::carry_expectation_bound(&BoundInputs {
            grad_bound: g,
            alpha,
            gamma_plus,
            ..Default::default()
        })?,
        RegionSpec::OracleVariance { beta } => {
            theory::adaptive_carry_bounds(
                &BoundInputs {
                    grad_bound: g,
                    beta,
                    sigma_min_sq: sigma_sq,
                    ..Default::default()
                },
                cfg.delta,
                cfg.steps,
            )?
            .expectation
        }
        other => {
            return Err(Error::Unsupported(format!(
                "validate-regret has no carry bound for region `{}`",
                other.name()
            )))
        }
    };

    let steps = cfg.steps as usize;
    let series: Vec<&Vec<f64>> = traces
        .iter()
        .map(|t| t.carry_series.as_ref().expect("carry series requested"))
        .collect();
    let mut running_mean = Vec::with_capacity(steps);
    let mut running_max = Vec::with_capacity(steps);
    let (mut best_mean, mut best_max) = (0.0f64, 0.0f64);
    for s in 0..steps {
        best_mean = best_mean.max(mean(series.iter().map(|c| c[s])));
        best_max = best_max.max(series.iter().map(|c| c[s]).fold(0.0, f64::max));
        running_mean.push(best_mean);
        running_max.push(best_max);
    }

    let (x1, x_star) = (Vector::filled(problem.dim(), cfg.init)?, problem.minimizer()?.0);
    let initial_distance = x1.sub(&x_star)?.norm();
    let rows_per_trace = traces[0].rows.len();
    (0..rows_per_trace)
        .map(|k| {
            let t = traces[0].rows[k].t;
            let at = |f: fn(&super::run::TraceRow) -> f64| mean(traces.iter().map(|tr| f(&tr.rows[k])));
            let lemma = |carry: f64| -> Result<f64> {
                Ok(theory::regret_bound_lemma1(&BoundInputs {
                    horizon: t,
                    lr: cfg.optimizer.lr(),
                    carry_bound: carry,
                    update_bound_sum: at(|r| r.gamma_sum),
                    update_bound_sq_sum: at(|r| r.gamma_sq_sum),
                    initial_distance,
                    ..Default::default()
                })?
                .total())
            };
            let observed = running_mean[t as usize - 1];
            let observed_max = running_max[t as usize - 1];
            Ok(RegretRow {
                t,
                empirical_regret: at(|r| r.avg_regret),
                empirical_iterate_regret: at(|r| r.avg_iterate_regret),
                observed_carry: observed,
                observed_carry_max: observed_max,
                predicted_carry,
                bound_observed: lemma(observed)?,
                bound_observed_max: lemma(observed_max)?,
                bound_predicted: lemma(predicted_carry)?,
            })
        })
        .collect()
}

// ----------------------------------------------------------------- sharded

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShardMode {
    /// One carry per shard; the shards' clipped updates are averaged.
    PerShardClip,
    /// Raw shard gradients are averaged, then one transformed step is taken.
    AggregateThenClip,
}

impl ShardMode {
    pub fn name(&self) -> &'static str {
        match self {
            ShardMode::PerShardClip => "per_shard_clip",
            ShardMode::AggregateThenClip => "aggregate_then_clip",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShardedRow {
    pub seed: u64,
    pub shards: usize,
    pub mode: ShardMode,
    pub final_iterate: Vector,
    pub avg_regret: f64,
    /// Mean over shards of `‖Δ_{T+1}‖`; the single carry in aggregate mode.
    pub final_carry_norm: f64,
}

impl ShardedRow {
    pub fn table(rows: &[ShardedRow]) -> Table {
        let mut t = Table::new(vec!["seed", "shards", "mode", "final_x0", "avg_regret", "final_carry_norm"]);
        for r in rows {
            t.push(vec![
                r.seed.into(),
                r.shards.into(),
                r.mode.name().into(),
                r.final_iterate[0].into(),
                r.avg_regret.into(),
                r.final_carry_norm.into(),
            ]);
        }
        t
    }
}

enum Sharded {
    PerShard(PerShardUClip),
    Aggregate(Transformed),
}

fn sharded_trajectory(cfg: &ExperimentConfig, problem: &StochasticProblem, mode: ShardMode, seed: u64) -> Result<ShardedRow> {
    let mut rng = trajectory_rng(&cfg.experiment_id, 0, seed);
    let dim = problem.dim();
    let mut policy = cfg.region.build(dim, cfg.gamma_floor)?;
    let inner = OptimizerState::new(cfg.optimizer, dim)?;
    let mut state = match mode {
        ShardMode::PerShardClip => {
            if cfg.transform != TransformMode::UClip {
                return Err(Error::Unsupported("per-shard clipping needs the uclip transform".into()));
            }
            Sharded::PerShard(PerShardUClip::new(inner, cfg.shards)?)
        }
        ShardMode::AggregateThenClip => Sharded::Aggregate(Transformed::new(cfg.transform, inner)),
    };
    let f_star = problem.minimizer()?.1;
    let mut x = Vector::filled(dim, cfg.init)?;
    let mut regret_sum = 0.0;
    for t in 1..=cfg.steps {
        regret_sum += problem.expected_objective(&x)? - f_star;
        let (mean_g, var) = if policy.needs_oracle() {
            (Some(problem.mean_gradient(&x)?), Some(problem.noise_variance(&x)?))
        } else {
            (None, None)
        };
        let region = policy.region_for_step(&RegionContext {
            step: t,
            mean_gradient: mean_g.as_ref(),
            noise_variance: var.as_ref(),
        })?;
        let grads = problem.sharded_sample(&x, cfg.shards, &mut rng)?;
        let aggregated = Vector::mean_of(&grads)?;
        let (next, next_x) = match state {
            Sharded::PerShard(s) => {
                let (s, p, _) = s.step(&x, &grads, &region)?;
                (Sharded::PerShard(s), p)
            }
            Sharded::Aggregate(s) => {
                let (s, p, _) = s.step(&x, &aggregated, &region)?;
                (Sharded::Aggregate(s), p)
            }
        };
        policy.observe(&aggregated)?;
        state = next;
        x = next_x;
    }
    let final_carry_norm = match &state {
        Sharded::PerShard(s) => mean(s.carries().iter().map(Vector::norm)),
        Sharded::Aggregate(s) => s.carry().norm(),
    };
    Ok(ShardedRow {
        seed,
        shards: cfg.shards,
        mode,
        final_iterate: x,
        avg_regret: regret_sum / cfg.steps as f64,
        final_carry_norm,
    })
}

pub fn run_sharded(cfg: &ExperimentConfig, mode: ShardMode) -> Result<Vec<ShardedRow>> {
    let problem = cfg.problem.build()?;
    in_pool(cfg.threads, || {
        cfg.seeds
            .par_iter()
            .map(|&seed| sharded_trajectory(cfg, &problem, mode, seed))
            .collect()
    })?
}

// --------------------------------------------------------------- train-toy

/// One seed of one (optimizer, transform, region) combination.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyRow {
    pub optimizer: &'static str,
    pub transform: TransformMode,
    pub region: &'static str,
    pub seed: u64,
    /// Epochs until 99% training accuracy, `None` if never reached.
    pub epochs: Option<usize>,
    pub final_accuracy: f64,
    pub final_loss: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToySummaryRow {
    pub optimizer: &'static str,
    pub transform: TransformMode,
    pub region: &'static str,
    pub median_epochs: Option<usize>,
    pub min_epochs: Option<usize>,
    pub max_epochs: Option<usize>,
    pub reached: usize,
    pub seeds: usize,
}

/// Sentinel written for "never reached".
const NEVER: i64 = -1;

fn epochs_cell(e: Option<usize>) -> Cell {
    Cell::Int(e.map_or(NEVER, |e| e as i64))
}

impl ToyRow {
    pub fn table(rows: &[ToyRow]) -> Table {
        let mut t = Table::new(vec![
            "optimizer",
            "transform",
            "region",
            "seed",
            "epochs_to_99",
            "final_accuracy",
            "final_loss",
        ]);
        for r in rows {
            t.push(vec![
                r.optimizer.into(),
                r.transform.name().into(),
                r.region.into(),
                r.seed.into(),
                epochs_cell(r.epochs),
                r.final_accuracy.into(),
                r.final_loss.into(),
            ]);
        }
        t
    }
}

impl ToySummaryRow {
    pub fn table(rows: &[ToySummaryRow]) -> Table {
        let mut t = Table::new(vec![
            "optimizer",
            "transform",
            "region",
            "median_epochs",
            "min_epochs",
            "max_epochs",
            "reached",
            "seeds",
        ]);
        for r in rows {
            t.push(vec![
                r.optimizer.into(),
                r.transform.name().into(),
                r.region.into(),
                epochs_cell(r.median_epochs),
                epochs_cell(r.min_epochs),
                epochs_cell(r.max_epochs),
                r.reached.into(),
                r.seeds.into(),
            ]);
        }
        t
    }
}

fn summarize_toy(rows: &[ToyRow]) -> Result<ToySummaryRow> {
    let first = &rows[0];
    let as_f = |e: Option<usize>| e.map_or(f64::INFINITY, |e| e as f64);
    let back = |x: f64| x.is_finite().then_some(x as usize);
    let epochs: Vec<f64> = rows.iter().map(|r| as_f(r.epochs)).collect();
    Ok(ToySummaryRow {
        optimizer: first.optimizer,
        transform: first.transform,
        region: first.region,
        median_epochs: back(percentile(&epochs, 0.5)?),
        min_epochs: back(percentile(&epochs, 0.0)?),
        max_epochs: back(percentile(&epochs, 1.0)?),
        reached: rows.iter().filter(|r| r.epochs.is_some()).count(),
        seeds: rows.len(),
    })
}

/// The combinations swept by [`train_toy`]: bare, then clip-only and U-Clip
/// under each region, then U-Clip with no region.
fn toy_variants(cfg: &ExperimentConfig) -> Vec<(TransformMode, RegionSpec)> {
    let gamma = match cfg.region {
        RegionSpec::Component { gamma } | RegionSpec::Norm { gamma } => gamma,
        _ => 0.5,
    };
    let mut v = vec![(TransformMode::None, RegionSpec::Unbounded)];
    for mode in [TransformMode::ClipOnly, TransformMode::UClip] {
        v.push((mode, RegionSpec::Component { gamma }));
        v.push((mode, RegionSpec::Norm { gamma }));
    }
    v.push((TransformMode::UClip, RegionSpec::Unbounded));
    v
}

fn toy_trajectory(
    cfg: &ExperimentConfig,
    problem: &StochasticProblem,
    dataset: &SyntheticDataset,
    optimizer: (usize, OptimizerConfig),
    variant: (TransformMode, RegionSpec),
    seed: u64,
) -> Result<ToyRow> {
    // The stream depends on the optimizer only, so every transform sees the
    // same minibatches.
    let mut rng = trajectory_rng(&cfg.experiment_id, optimizer.0 as u64, seed);
    let dim = problem.dim();
    let region = variant.1.build(dim, cfg.gamma_floor)?.region_for_step(&RegionContext::default())?;
    let mut state = Transformed::new(variant.0, OptimizerState::new(optimizer.1, dim)?);
    let mut w = Vector::filled(dim, cfg.init)?;
    let steps_per_epoch = dataset.len().div_ceil(batch_size(cfg)?);
    let mut epochs = None;
    for epoch in 1..=cfg.max_epochs {
        for _ in 0..steps_per_epoch {
            let g = problem.sample_subgradient(&w, &mut rng)?;
            let (s, next, _) = state.step(&w, &g, &region)?;
            state = s;
            w = next;
        }
        if dataset.accuracy(&w)? >= 0.99 {
            epochs = Some(epoch);
            break;
        }
    }
    Ok(ToyRow {
        optimizer: optimizer.1.name(),
        transform: variant.0,
        region: variant.1.name(),
        seed,
        epochs,
        final_accuracy: dataset.accuracy(&w)?,
        final_loss: dataset.loss(&w)?,
    })
}

fn batch_size(cfg: &ExperimentConfig) -> Result<usize> {
    match cfg.problem {
        ProblemSpec::Logistic { batch_size, .. } => Ok(batch_size),
        _ => Err(Error::Unsupported("train-toy needs the logistic problem".into())),
    }
}

/// Epochs to 99% training accuracy on the synthetic logistic task for every
/// base optimizer, transform and region. Training stops at the first epoch
/// that reaches the target.
pub fn train_toy(cfg: &ExperimentConfig) -> Result<(Vec<ToyRow>, Vec<ToySummaryRow>)> {
    let ProblemSpec::Logistic { dataset, batch_size } = cfg.problem else {
        return Err(Error::Unsupported("train-toy needs the logistic problem".into()));
    };
    let data = Arc::new(SyntheticDataset::generate(&dataset)?);
    let problem = StochasticProblem::logistic(Arc::clone(&data), batch_size)?;
    let variants = toy_variants(cfg);
    let mut jobs = Vec::new();
    for opt in cfg.toy_optimizers.iter().copied().enumerate() {
        for &variant in &variants {
            jobs.push((opt, variant));
        }
    }
    let groups: Vec<Vec<ToyRow>> = in_pool(cfg.threads, || {
        jobs.par_iter()
            .map(|&(opt, variant)| {
                cfg.seeds
                    .iter()
                    .map(|&seed| toy_trajectory(cfg, &problem, &data, opt, variant, seed))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let summaries = groups.iter().map(|g| summarize_toy(g)).collect::<Result<Vec<_>>>()?;
    Ok((groups.into_iter().flatten().collect(), summaries))
}

// ------------------------------------------------------------------ bounds

/// Every bound evaluator applied to `inp`. Bounds whose inputs are invalid
/// are listed with an empty value and the reason in `note`.
pub fn bounds_report(inp: &BoundInputs, delta: f64, eps: f64, t: u64) -> Table {
    let mut table = Table::new(vec!["bound", "term", "value", "note"]);
    let mut emit = |bound: &str, result: Result<Vec<(&str, f64)>>| match result {
        Ok(terms) => {
            for (term, v) in terms {
                table.push(vec![bound.into(), term.into(), v.into(), "".into()]);
            }
        }
        Err(e) => table.push(vec![bound.into(), "".into(), "".into(), e.to_string().into()]),
    };
    let total = |b: theory::BoundTerms| {
        let mut terms = b.terms.clone();
        terms.push(("total", b.total()));
        terms
    };
    emit(
        "c_alpha",
        theory::c_alpha(inp.alpha, inp.grad_bound).map(|v| vec![("value", v)]),
    );
    emit(
        "carry_tail",
        theory::carry_tail_bound(inp, eps, t).map(|v| vec![("probability", v)]),
    );
    emit(
        "carry_expectation",
        theory::carry_expectation_bound(inp).map(|v| vec![("value", v)]),
    );
    emit(
        "carry_highprob",
        theory::carry_highprob_bound(inp, delta).map(|v| vec![("value", v)]),
    );
    emit(
        "adaptive_carry",
        theory::adaptive_carry_bounds(inp, delta, t).map(|b| {
            vec![("high_prob", b.high_prob), ("expectation", b.expectation), ("m_t", b.m_t)]
        }),
    );
    emit("regret_lemma1", theory::regret_bound_lemma1(inp).map(total));
    emit(
        "regret_lemma1_highprob",
        theory::regret_bound_lemma1_highprob(inp, delta).map(total),
    );
    emit("regret_const_region", theory::regret_bound_thm1(inp).map(total));
    emit("regret_adaptive_region", theory::regret_bound_thm2(inp).map(total));
    emit("regret_varying_region", theory::regret_bound_thm_a1(inp).map(total));
    table
}
