//! Data-parallel U-Clip on simulated shards: one carry per shard against
//! averaging first and clipping once.

use uclip::harness::{self, ExperimentConfig, ExperimentKind, ShardMode};

fn main() -> uclip::Result<()> {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::Sharded);
    cfg.seeds = (1..=20).collect();
    for mode in [ShardMode::PerShardClip, ShardMode::AggregateThenClip] {
        let rows = harness::run_sharded(&cfg, mode)?;
        let n = rows.len() as f64;
        let regret = rows.iter().map(|r| r.avg_regret).sum::<f64>() / n;
        let carry = rows.iter().map(|r| r.final_carry_norm).sum::<f64>() / n;
        println!("{:<20} shards={} regret={regret:.5} |carry|={carry:.4}", mode.name(), cfg.shards);
    }
    Ok(())
}
