//! U-Sign: the update is `sign(g + Δ)` and the carry keeps the rest, so the
//! optimizer only ever sees −1, 0 or 1 per coordinate.

use uclip::problems::StochasticProblem;
use uclip::{usign_step, OptimizerConfig, OptimizerState, UClipState, Vector};

fn main() -> uclip::Result<()> {
    let problem = StochasticProblem::abs_uniform_with_variance(1.0, 1)?;
    let mut rng = uclip::harness::trajectory_rng("usign-example", 0, 1);
    let mut state = UClipState::new(OptimizerState::new(OptimizerConfig::sgd(0.05), 1)?);
    let mut x = Vector::scalar(5.0)?;
    for t in 1..=2000 {
        let g = problem.sample_subgradient(&x, &mut rng)?;
        let (next, nx, record) = usign_step(state, &x, &g)?;
        state = next;
        x = nx;
        if t % 400 == 0 {
            println!("t={t:4}  x={:+.4}  u={:+}  carry={:+.4}", x[0], record.update[0], state.carry()[0]);
        }
    }
    Ok(())
}
