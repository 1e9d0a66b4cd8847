//! The variance-adaptive region `γ_t = |ḡ_t| + βσ_t²` with its carry bounds,
//! first over β and then over the noise level.

use uclip::harness::{self, ExperimentConfig, ExperimentKind, Grid, GridParam, RegionSpec};

fn main() -> uclip::Result<()> {
    let mut beta = ExperimentConfig::defaults(ExperimentKind::ValidateAdaptive);
    beta.seeds = (1..=200).collect();
    let mut noise = beta.clone();
    noise.region = RegionSpec::OracleVariance { beta: 0.25 };
    noise.grid = Some(Grid {
        param: GridParam::NoiseVariance,
        values: vec![0.1, 1.0, 5.0, 15.0],
    });

    for (label, cfg) in [("beta", &beta), ("sigma^2", &noise)] {
        for r in harness::validate_adaptive(cfg)? {
            println!(
                "{label}={:<5}  p99={:.4} <= {:.3}   mean={:.4} <= {:.3}",
                r.grid_value, r.p99_final, r.highprob_bound, r.mean_final, r.expectation_bound
            );
        }
    }
    Ok(())
}
