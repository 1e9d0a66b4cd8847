#![allow(dead_code, clippy::excessive_precision)]

use uclip::theory::{self, BoundInputs};

/// Values from `oracles/theory_oracle.py` (mpmath, 50 digits), rounded to 25.
pub const ORACLES: &[(&str, f64)] = &[
    ("c_alpha_1_1", 1.541494082536798284131103),
    ("c_alpha_0p1_1p3", 337.5002465482875033156973),
    ("tail_1_1_2_1e9", 0.4172370757008858839727544),
    ("tail_0p5_1_6_100", 0.6246509690999054676242956),
    ("expectation_1_1_1", 5.082988165073596568262207),
    ("expectation_0p1_1p5_1p1", 20230.10833333264746235774),
    ("highprob_1_1_0p01", 7.991464547107981986870447),
    ("highprob_0p3_1p7_0p05", 255.5116786038974754115243),
    ("adaptive_hp_1_1_1", 12.21034037197618273607197),
    ("adaptive_ex_2_1_1", 5.0),
    ("adaptive_hp_small_t", 58.41204223185709641643179),
    ("lemma1", 5.2215),
    ("lemma1_hp", 7.469385683258740371050049),
    ("thm1_unit_T1e4", 0.125),
    ("thm1_general", 72.23657462591572066477064),
    ("thm2_general", 20.78917457787486988800176),
    ("thm_a1_general", 66.39492014615567500606411),
];

fn margin(alpha: f64, g: f64, gamma_plus: f64) -> BoundInputs {
    BoundInputs {
        alpha,
        grad_bound: g,
        gamma_plus,
        ..Default::default()
    }
}

fn adaptive(beta: f64, s2: f64, g: f64) -> BoundInputs {
    BoundInputs {
        beta,
        sigma_min_sq: s2,
        grad_bound: g,
        ..Default::default()
    }
}

fn lemma_inputs() -> BoundInputs {
    BoundInputs {
        lr: 0.1,
        carry_bound: 0.7,
        update_bound_sum: 11000.0,
        update_bound_sq_sum: 12100.0,
        initial_distance: 100.0,
        horizon: 10_000,
        iterate_radius: 100.0,
        noise_sigma: 0.3,
        ..Default::default()
    }
}

/// The library's value for each oracle case.
pub fn library_value(name: &str) -> f64 {
    let v = match name {
        "c_alpha_1_1" => theory::c_alpha(1.0, 1.0),
        "c_alpha_0p1_1p3" => theory::c_alpha(0.1, 1.3),
        "tail_1_1_2_1e9" => theory::carry_tail_bound(&margin(1.0, 1.0, 0.0), 2.0, 1_000_000_000),
        "tail_0p5_1_6_100" => theory::carry_tail_bound(&margin(0.5, 1.0, 0.0), 6.0, 100),
        "expectation_1_1_1" => theory::carry_expectation_bound(&margin(1.0, 1.0, 1.0)),
        "expectation_0p1_1p5_1p1" => theory::carry_expectation_bound(&margin(0.1, 1.5, 1.1)),
        "highprob_1_1_0p01" => theory::carry_highprob_bound(&margin(1.0, 1.0, 0.0), 0.01),
        "highprob_0p3_1p7_0p05" => theory::carry_highprob_bound(&margin(0.3, 1.7, 0.0), 0.05),
        "adaptive_hp_1_1_1" => {
            theory::adaptive_carry_bounds(&adaptive(1.0, 1.0, 1.0), 0.01, 1_000_000).map(|b| b.high_prob)
        }
        "adaptive_ex_2_1_1" => {
            theory::adaptive_carry_bounds(&adaptive(2.0, 1.0, 1.0), 0.01, 1_000_000).map(|b| b.expectation)
        }
        "adaptive_hp_small_t" => {
            theory::adaptive_carry_bounds(&adaptive(0.25, 0.2, 1.4), 0.01, 5).map(|b| b.high_prob)
        }
        "lemma1" => theory::regret_bound_lemma1(&lemma_inputs()).map(|b| b.total()),
        "lemma1_hp" => theory::regret_bound_lemma1_highprob(&lemma_inputs(), 0.01).map(|b| b.total()),
        "thm1_unit_T1e4" => theory::regret_bound_thm1(&BoundInputs {
            grad_bound: 1.0,
            alpha: 1.0,
            gamma: 1.0,
            dim: 1,
            initial_distance: 0.0,
            horizon: 10_000,
            ..Default::default()
        })
        .map(|b| b.total()),
        "thm1_general" => theory::regret_bound_thm1(&BoundInputs {
            grad_bound: 1.3,
            alpha: 0.4,
            gamma: 1.2,
            dim: 3,
            initial_distance: 2.5,
            horizon: 1000,
            ..Default::default()
        })
        .map(|b| b.total()),
        "thm2_general" => theory::regret_bound_thm2(&BoundInputs {
            beta: 0.5,
            sigma_min_sq: 0.3,
            grad_bound: 1.2,
            dim: 2,
            initial_distance: 1.5,
            horizon: 5000,
            ..Default::default()
        })
        .map(|b| b.total()),
        "thm_a1_general" => theory::regret_bound_thm_a1(&BoundInputs {
            grad_bound: 1.3,
            alpha: 0.4,
            gamma_mean: 1.1,
            gamma_sq_mean: 1.5,
            gamma_plus: 1.6,
            dim: 3,
            initial_distance: 2.5,
            horizon: 1000,
            ..Default::default()
        })
        .map(|b| b.total()),
        other => panic!("no oracle case {other}"),
    };
    v.unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

/// Largest relative error over the oracle table.
pub fn worst_oracle_error() -> (&'static str, f64) {
    ORACLES
        .iter()
        .map(|&(name, want)| (name, rel_err(library_value(name), want)))
        .fold(("", 0.0), |acc, x| if x.1 > acc.1 { x } else { acc })
}

/// Time-varying regret bound at a constant schedule against the constant-region bound, worst relative gap over a grid.
pub fn special_case_gap() -> f64 {
    let mut worst: f64 = 0.0;
    for &(g, alpha, gamma, d, r0, t) in &[
        (1.0, 1.0, 1.0, 1usize, 0.0, 10_000u64),
        (1.3, 0.4, 1.2, 3, 2.5, 1000),
        (4.9, 0.1, 5.0, 20, 100.0, 100_000),
        (0.5, 2.0, 0.3, 7, 1e-3, 7),
    ] {
        let base = BoundInputs {
            grad_bound: g,
            alpha,
            gamma,
            gamma_mean: gamma,
            gamma_sq_mean: gamma * gamma,
            gamma_plus: gamma,
            dim: d,
            initial_distance: r0,
            horizon: t,
            ..Default::default()
        };
        let a = theory::regret_bound_thm1(&base).unwrap().total();
        let b = theory::regret_bound_thm_a1(&base).unwrap().total();
        worst = worst.max(rel_err(b, a));
    }
    worst
}

/// `c_α ≤ 2G²/α²` over a 10 × 10 grid; returns the number of violations.
pub fn c_alpha_violations() -> usize {
    let mut bad = 0;
    for i in 1..=10 {
        for j in 1..=10 {
            let alpha = 0.05 * i as f64 * j as f64;
            let g = 0.5 * j as f64;
            let c = theory::c_alpha(alpha, g).unwrap();
            if c > 2.0 * g * g / (alpha * alpha) {
                bad += 1;
            }
        }
    }
    bad
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uclip::{
    ClipRegion, OptimizerConfig, OptimizerState, PerShardUClip, StepRecord, UClipState, Vector,
};

/// Heavy-tailed gradients and a fresh random region at every step.
pub fn random_trajectory(seed: u64, len: usize, dim: usize) -> (Vec<Vector>, Vec<ClipRegion>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grads = Vec::with_capacity(len);
    let mut regions = Vec::with_capacity(len);
    for _ in 0..len {
        let g: Vec<f64> = (0..dim)
            .map(|_| {
                let u: f64 = rng.random_range(-1.0..1.0);
                let tail: f64 = rng.random_range(0.05..1.0);
                u / tail.powi(2)
            })
            .collect();
        grads.push(Vector::new(g).unwrap());
        let region = match rng.random_range(0..4) {
            0 => ClipRegion::component(rng.random_range(0.1..3.0)).unwrap(),
            1 => ClipRegion::per_coordinate(
                Vector::new((0..dim).map(|_| rng.random_range(0.1..3.0)).collect()).unwrap(),
            )
            .unwrap(),
            2 => ClipRegion::norm(rng.random_range(0.1..3.0)).unwrap(),
            _ => ClipRegion::Unbounded,
        };
        regions.push(region);
    }
    (grads, regions)
}

/// Runs U-Clip (or U-Sign) over the trajectory and returns the records.
pub fn replay(config: OptimizerConfig, grads: &[Vector], regions: &[ClipRegion], sign: bool) -> Vec<StepRecord> {
    let dim = grads[0].dim();
    let mut state = UClipState::new(OptimizerState::new(config, dim).unwrap());
    let mut x = Vector::zeros(dim);
    let mut out = Vec::with_capacity(grads.len());
    for (g, r) in grads.iter().zip(regions) {
        let (s, nx, rec) = if sign {
            state.sign_step(&x, g).unwrap()
        } else {
            state.step(&x, g, r).unwrap()
        };
        state = s;
        x = nx;
        out.push(rec);
    }
    out
}

/// `max_j |Δ_{T+1,j} + Σu_j − Σg_j| / Σ‖g_i‖₁` for one record sequence.
pub fn conservation_ratio(records: &[StepRecord]) -> f64 {
    let dim = records[0].update.dim();
    let mut sum_u = vec![0.0; dim];
    let mut sum_g = vec![0.0; dim];
    let mut l1 = 0.0;
    for r in records {
        for j in 0..dim {
            sum_u[j] += r.update[j];
            sum_g[j] += r.raw_gradient[j];
        }
        l1 += r.raw_gradient.norm_l1();
    }
    let carry = &records.last().unwrap().carry_after;
    (0..dim)
        .map(|j| (carry[j] + sum_u[j] - sum_g[j]).abs() / l1)
        .fold(0.0, f64::max)
}

/// Worst conservation ratio over `n` random trajectories of length `len`.
pub fn conservation_worst(n: u64, len: usize, sign: bool) -> f64 {
    (0..n)
        .map(|seed| {
            let dim = 1 + (seed % 4) as usize;
            let (g, r) = random_trajectory(seed, len, dim);
            conservation_ratio(&replay(OptimizerConfig::sgd(0.01), &g, &r, sign))
        })
        .fold(0.0, f64::max)
}

pub fn all_optimizers() -> [OptimizerConfig; 4] {
    [
        OptimizerConfig::sgd(0.05),
        OptimizerConfig::momentum(0.05, 0.9),
        OptimizerConfig::nesterov(0.05, 0.9),
        OptimizerConfig::adam(0.01, 0.9, 0.999),
    ]
}

/// U-Clip with an unbounded region against the bare optimizer, bitwise.
/// Returns a description of the first mismatch.
pub fn noop_mismatch(len: usize) -> Option<String> {
    for config in all_optimizers() {
        for seed in 0..5u64 {
            let dim = 1 + seed as usize;
            let (grads, _) = random_trajectory(100 + seed, len, dim);
            let mut bare = OptimizerState::new(config, dim).unwrap();
            let mut wrapped = UClipState::new(OptimizerState::new(config, dim).unwrap());
            let (mut xb, mut xw) = (Vector::filled(dim, 1.0).unwrap(), Vector::filled(dim, 1.0).unwrap());
            for (t, g) in grads.iter().enumerate() {
                let (b, nb) = bare.step(&xb, g).unwrap();
                let (w, nw, _) = wrapped.step(&xw, g, &ClipRegion::Unbounded).unwrap();
                bare = b;
                wrapped = w;
                xb = nb;
                xw = nw;
                let same = xb.iter().zip(xw.iter()).all(|(a, b)| a.to_bits() == b.to_bits());
                if !same || !wrapped.carry().iter().all(|c| c.to_bits() == 0) {
                    return Some(format!("{} seed {seed} step {t}", config.name()));
                }
            }
        }
    }
    None
}

/// Aggregate-then-clip against single-device U-Clip on the mean gradient,
/// and per-shard conservation. Returns a description of the first failure.
pub fn sharded_mismatch(len: usize, shards: usize) -> Option<String> {
    use uclip::problems::StochasticProblem;
    let problem = StochasticProblem::abs_uniform_with_variance(0.5, 2).unwrap();
    let region = ClipRegion::component(1.1).unwrap();
    let config = OptimizerConfig::sgd(0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(shards as u64);
    let mut agg = uclip::Transformed::new(
        uclip::TransformMode::UClip,
        OptimizerState::new(config, 2).unwrap(),
    );
    let mut single = UClipState::new(OptimizerState::new(config, 2).unwrap());
    let mut per = PerShardUClip::new(OptimizerState::new(config, 2).unwrap(), shards).unwrap();
    let x0 = Vector::filled(2, 5.0).unwrap();
    let (mut xa, mut xs, mut xp) = (x0.clone(), x0.clone(), x0);
    let mut shard_records: Vec<Vec<StepRecord>> = vec![Vec::new(); shards];
    for t in 0..len {
        let grads = problem.sharded_sample(&xa, shards, &mut rng).unwrap();
        let mean = Vector::mean_of(&grads).unwrap();
        let (a, na, _) = agg.step(&xa, &mean, &region).unwrap();
        let (s, ns, _) = single.step(&xs, &mean, &region).unwrap();
        agg = a;
        single = s;
        xa = na;
        xs = ns;
        if xa.iter().zip(xs.iter()).any(|(a, b)| a.to_bits() != b.to_bits()) {
            return Some(format!("aggregate mode diverges from single device at step {t}"));
        }
        let pgrads = problem.sharded_sample(&xp, shards, &mut rng).unwrap();
        let (p, np, recs) = per.step(&xp, &pgrads, &region).unwrap();
        per = p;
        xp = np;
        for (k, r) in recs.into_iter().enumerate() {
            shard_records[k].push(r);
        }
    }
    for (k, recs) in shard_records.iter().enumerate() {
        let ratio = conservation_ratio(recs);
        if ratio > 1e-9 {
            return Some(format!("shard {k} conservation ratio {ratio:e}"));
        }
        if recs.last().unwrap().carry_after != per.carries()[k] {
            return Some(format!("shard {k} carry does not match its records"));
        }
    }
    None
}

/// Worst `|welford − two_pass| / (1 + |two_pass|)` for means and variances
/// over `n` random sequences.
pub fn welford_worst(n: u64) -> (f64, f64) {
    use uclip::WelfordEstimator;
    let mut worst = (0.0f64, 0.0f64);
    for seed in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        let dim = rng.random_range(1..=4);
        let len = rng.random_range(2..=400);
        let offset: f64 = rng.random_range(-1e3..1e3);
        let scale: f64 = 10f64.powf(rng.random_range(-3.0..3.0));
        let data: Vec<Vec<f64>> = (0..len)
            .map(|_| (0..dim).map(|_| offset + scale * rng.random_range(-1.0..1.0)).collect())
            .collect();
        let mut est = WelfordEstimator::new(dim);
        for row in &data {
            est = est.ingest(&Vector::from_slice(row).unwrap()).unwrap();
        }
        let var = est.variance();
        for j in 0..dim {
            let mean = data.iter().map(|r| r[j]).sum::<f64>() / len as f64;
            let v = data.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (len - 1) as f64;
            worst.0 = worst.0.max((est.mean()[j] - mean).abs() / (1.0 + mean.abs()));
            worst.1 = worst.1.max((var[j] - v).abs() / (1.0 + v.abs()));
        }
    }
    worst
}

/// Worst relative error of the EWMA moments against `c(1 − λᵗ)` and
/// `c²(1 − λᵗ)` for constant streams.
pub fn ewma_worst() -> f64 {
    use uclip::EwmaEstimator;
    let mut worst: f64 = 0.0;
    for &decay in &[0.0, 0.5, 0.9, 0.95, 0.999] {
        for &c in &[-3.5, 0.1, 1.0, 250.0] {
            let mut est = EwmaEstimator::new(decay, 2).unwrap();
            let g = Vector::filled(2, c).unwrap();
            for t in 1..=200 {
                est = est.ingest(&g).unwrap();
                let k = 1.0 - decay.powi(t);
                worst = worst.max(rel_err(est.mean()[0], c * k));
                worst = worst.max(rel_err(est.second_moment()[1], c * c * k));
            }
        }
    }
    worst
}
