//! Clip regions learned online from the gradient stream: Welford and EWMA
//! estimates of mean and spread feed `γ_t = a|m̂_t| + b ŝ_t`.

use uclip::problems::StochasticProblem;
use uclip::{
    Estimator, OptimizerConfig, OptimizerState, RegionContext, RegionPolicy, UClipState, Vector,
};

fn run(name: &str, mut policy: RegionPolicy) -> uclip::Result<()> {
    let problem = StochasticProblem::abs_uniform_with_variance(2.0, 1)?;
    let mut rng = uclip::harness::trajectory_rng("adaptive-regions", 0, 3);
    let mut state = UClipState::new(OptimizerState::new(OptimizerConfig::sgd(0.05), 1)?);
    let mut x = Vector::scalar(20.0)?;
    let mut clipped = 0;
    for step in 1..=5000 {
        let region = policy.region_for_step(&RegionContext {
            step,
            ..Default::default()
        })?;
        let g = problem.sample_subgradient(&x, &mut rng)?;
        let (next, nx, record) = state.step(&x, &g, &region)?;
        policy.observe(&g)?;
        clipped += usize::from(record.clipped.any());
        state = next;
        x = nx;
    }
    println!("{name:<8} x={:+.4} carry={:+.4} clipped {clipped}/5000", x[0], state.carry()[0]);
    Ok(())
}

fn main() -> uclip::Result<()> {
    run("welford", RegionPolicy::adaptive_ab(Estimator::welford(1), 1.0, 1.0)?)?;
    run("ewma", RegionPolicy::adaptive_ab(Estimator::ewma(0.95, 1)?, 1.0, 1.0)?)?;
    run("prop", RegionPolicy::proportional(Estimator::ewma(0.95, 1)?, 2.0)?)?;
    Ok(())
}
