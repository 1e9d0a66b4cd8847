//! Epochs to 99% training accuracy on a separable synthetic logistic task,
//! for each base optimizer with and without clipping.

use uclip::harness::{self, ExperimentConfig, ExperimentKind};

fn main() -> uclip::Result<()> {
    let cfg = ExperimentConfig::defaults(ExperimentKind::TrainToy);
    let (_, summary) = harness::train_toy(&cfg)?;
    for s in summary {
        let median = s.median_epochs.map_or("never".to_string(), |e| e.to_string());
        println!(
            "{:<9} {:<6} {:<10} median epochs {median:>5} ({}/{} reached)",
            s.optimizer,
            s.transform.name(),
            s.region,
            s.reached,
            s.seeds
        );
    }
    Ok(())
}
