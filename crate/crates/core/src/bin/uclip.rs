use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use uclip::harness::{
    self, parse_seeds, AliasingReport, BoundsConfig, CarryRow, ExperimentConfig, ExperimentKind,
    RegretRow, ShardMode, ShardedRow, ToyRow, ToySummaryRow,
};

#[derive(Parser)]
#[command(name = "uclip", about = "Carry-buffer gradient clipping experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bare, clip-only and U-Clip SGD on the aliasing problem.
    Aliasing(Common),
    /// Carry percentiles against the constant-margin carry bounds.
    ValidateCarry(Common),
    /// Carry percentiles against the variance-adaptive carry bounds.
    ValidateAdaptive(Common),
    /// Average regret against the regret bound.
    ValidateRegret(Common),
    /// Per-shard clipping against aggregate-then-clip.
    Sharded(Common),
    /// Epochs to 99% accuracy on the synthetic logistic task.
    TrainToy(Common),
    /// Evaluate every bound for the given inputs and print CSV.
    Bounds {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed list, `1..100` or `1,2,3`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
    /// Log every step.
    #[arg(long)]
    full_trace: bool,
}

impl Common {
    fn load(&self, kind: ExperimentKind) -> uclip::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(kind, path)?,
            None => ExperimentConfig::defaults(kind),
        };
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if let Some(s) = &self.seeds {
            cfg.seeds = parse_seeds(s)?;
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        cfg.full_trace |= self.full_trace;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn report(path: PathBuf) {
    println!("wrote {}", path.display());
}

fn run(cli: Cli) -> uclip::Result<()> {
    match cli.command {
        Command::Aliasing(c) => {
            let cfg = c.load(ExperimentKind::Aliasing)?;
            let r = harness::aliasing(&cfg)?;
            report(r.finals_table().write(&cfg.out, "aliasing_final.csv")?);
            report(AliasingReport::objective_table()?.write(&cfg.out, "aliasing_objective.csv")?);
            if let Some(t) = r.trajectory_table() {
                report(t.write(&cfg.out, "aliasing_trajectory.csv")?);
            }
            for (mode, finals) in r.modes.iter().zip(&r.finals) {
                let mean = finals.iter().sum::<f64>() / finals.len() as f64;
                println!("{:<10} mean final x = {mean:.4}", mode.name());
            }
        }
        Command::ValidateCarry(c) => {
            let cfg = c.load(ExperimentKind::ValidateCarry)?;
            let rows = harness::validate_carry(&cfg)?;
            report(CarryRow::table(grid_name(&cfg), &rows).write(&cfg.out, "carry.csv")?);
            traces(&cfg)?;
        }
        Command::ValidateAdaptive(c) => {
            let cfg = c.load(ExperimentKind::ValidateAdaptive)?;
            let rows = harness::validate_adaptive(&cfg)?;
            report(CarryRow::table(grid_name(&cfg), &rows).write(&cfg.out, "adaptive.csv")?);
            traces(&cfg)?;
        }
        Command::ValidateRegret(c) => {
            let cfg = c.load(ExperimentKind::ValidateRegret)?;
            let rows = harness::validate_regret(&cfg)?;
            report(RegretRow::table(&rows).write(&cfg.out, "regret.csv")?);
            traces(&cfg)?;
        }
        Command::Sharded(c) => {
            let cfg = c.load(ExperimentKind::Sharded)?;
            let mut rows = harness::run_sharded(&cfg, ShardMode::PerShardClip)?;
            rows.extend(harness::run_sharded(&cfg, ShardMode::AggregateThenClip)?);
            report(ShardedRow::table(&rows).write(&cfg.out, "sharded.csv")?);
        }
        Command::TrainToy(c) => {
            let cfg = c.load(ExperimentKind::TrainToy)?;
            let (rows, summary) = harness::train_toy(&cfg)?;
            report(ToyRow::table(&rows).write(&cfg.out, "toy_runs.csv")?);
            report(ToySummaryRow::table(&summary).write(&cfg.out, "toy_summary.csv")?);
        }
        Command::Bounds { config, out } => {
            let b = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|source| uclip::Error::Io { path, source })?;
                    BoundsConfig::parse(&text)?
                }
                None => BoundsConfig::default(),
            };
            let table = harness::bounds_report(&b.inputs, b.delta, b.eps, b.t);
            match out {
                Some(dir) => report(table.write(&dir, "bounds.csv")?),
                None => print!("{}", table.to_csv_string()?),
            }
        }
    }
    Ok(())
}

fn grid_name(cfg: &ExperimentConfig) -> &'static str {
    cfg.grid.as_ref().map_or("none", |g| g.param.name())
}

fn traces(cfg: &ExperimentConfig) -> uclip::Result<()> {
    if cfg.full_trace {
        report(harness::full_traces(cfg)?.write(&cfg.out, "trace.csv")?);
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
