//! Carry percentiles under the margin region `γ_t = |ḡ_t| + α` against the
//! high-probability and expectation carry bounds, over the α grid.

use uclip::harness::{self, CarryRow, ExperimentConfig, ExperimentKind};

fn main() -> uclip::Result<()> {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::ValidateCarry);
    cfg.seeds = (1..=200).collect();
    let rows = harness::validate_carry(&cfg)?;
    for r in &rows {
        println!(
            "alpha={:.1}  p99={:.4}  bound={:.2}  mean={:.4}  E-bound={:.2}",
            r.region_param, r.p99_final, r.highprob_bound, r.mean_final, r.expectation_bound
        );
    }
    print!("{}", CarryRow::table("alpha", &rows).to_csv_string()?);
    Ok(())
}
