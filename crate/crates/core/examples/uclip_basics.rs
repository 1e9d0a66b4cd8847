//! One U-Clip trajectory by hand: heavy-tailed gradients, a fixed component
//! region and Adam underneath. The carry keeps the running sum of updates
//! equal to the running sum of gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uclip::{ClipRegion, OptimizerConfig, OptimizerState, UClipState, Vector};

fn main() -> uclip::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let region = ClipRegion::component(1.0)?;
    let mut state = UClipState::new(OptimizerState::new(OptimizerConfig::adam(0.01, 0.9, 0.999), 2)?);
    let mut x = Vector::filled(2, 0.0)?;
    let (mut sum_g, mut sum_u) = (Vector::zeros(2), Vector::zeros(2));

    for t in 1..=1000 {
        let g: Vec<f64> = (0..2)
            .map(|_| rng.random_range(-1.0..1.0) / rng.random_range(0.05f64..1.0).powi(2))
            .collect();
        let g = Vector::new(g)?;
        let (next, nx, record) = state.step(&x, &g, &region)?;
        sum_g = sum_g.add(&g)?;
        sum_u = sum_u.add(&record.update)?;
        state = next;
        x = nx;
        if t % 200 == 0 {
            println!(
                "t={t:4}  |carry|={:8.4}  |sum g - sum u - carry|={:.2e}",
                state.carry().norm(),
                sum_g.sub(&sum_u)?.sub(state.carry())?.norm()
            );
        }
    }
    println!("x = {:?}", x.as_slice());
    Ok(())
}
