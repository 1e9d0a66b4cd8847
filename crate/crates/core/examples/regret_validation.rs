//! Seed-averaged regret of SGD with U-Clip against the regret bound, using
//! both the observed carry and the predicted expected carry.

use uclip::harness::{self, ExperimentConfig, ExperimentKind};

fn main() -> uclip::Result<()> {
    let cfg = ExperimentConfig::defaults(ExperimentKind::ValidateRegret);
    println!("{:>6} {:>12} {:>12} {:>12}", "t", "regret", "bound(obs)", "bound(pred)");
    for r in harness::validate_regret(&cfg)? {
        println!(
            "{:>6} {:>12.5} {:>12.5} {:>12.2}",
            r.t, r.empirical_regret, r.bound_observed, r.bound_predicted
        );
    }
    Ok(())
}
