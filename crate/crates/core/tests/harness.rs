use std::process::Command;

use uclip::harness::{
    self, CarryRow, ExperimentConfig, ExperimentKind, Grid, GridParam, RegretRow, RunOptions,
};

fn quick(kind: ExperimentKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults(kind);
    cfg.steps = 400;
    cfg.seeds = (1..=12).collect();
    cfg
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let mut cfg = quick(ExperimentKind::ValidateRegret);
    let mut csvs = Vec::new();
    for threads in [1, 2, 5] {
        cfg.threads = Some(threads);
        let rows = harness::validate_regret(&cfg).unwrap();
        csvs.push(RegretRow::table(&rows).to_csv_string().unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(csvs[0], csvs[2]);

    let mut cfg = quick(ExperimentKind::ValidateAdaptive);
    cfg.grid = Some(Grid {
        param: GridParam::NoiseVariance,
        values: vec![0.1, 3.0],
    });
    cfg.threads = Some(1);
    let a = CarryRow::table("noise_variance", &harness::validate_adaptive(&cfg).unwrap());
    cfg.threads = Some(4);
    let b = CarryRow::table("noise_variance", &harness::validate_adaptive(&cfg).unwrap());
    assert_eq!(a.to_csv_string().unwrap(), b.to_csv_string().unwrap());
}

#[test]
fn seed_order_does_not_change_statistics() {
    let mut cfg = quick(ExperimentKind::ValidateCarry);
    cfg.grid = Some(Grid {
        param: GridParam::Alpha,
        values: vec![0.1],
    });
    let a = harness::validate_carry(&cfg).unwrap();
    cfg.seeds.reverse();
    let b = harness::validate_carry(&cfg).unwrap();
    assert_eq!(a[0].p99_final, b[0].p99_final);
    assert_eq!(a[0].p99_run_max, b[0].p99_run_max);
    assert!((a[0].mean_final - b[0].mean_final).abs() <= 1e-12 * a[0].mean_final.abs().max(1.0));
}

#[test]
fn regret_recomputes_from_full_trace() {
    for kind in [ExperimentKind::ValidateRegret, ExperimentKind::Aliasing] {
        let cfg = quick(kind);
        let options = RunOptions {
            full_trace: true,
            ..Default::default()
        };
        let trace = harness::run_trajectory(&cfg, 0, 4, options).unwrap();
        let r: f64 = trace.rows.iter().map(|r| r.suboptimality).sum::<f64>() / trace.rows.len() as f64;
        let want = trace.summary.avg_regret;
        assert!((r - want).abs() <= 1e-9 * want.abs(), "{r} vs {want}");
    }
}

#[test]
fn same_seed_same_trace() {
    let cfg = quick(ExperimentKind::ValidateAdaptive);
    let a = harness::run_trajectory(&cfg, 2, 9, RunOptions::default()).unwrap();
    let b = harness::run_trajectory(&cfg, 2, 9, RunOptions::default()).unwrap();
    assert_eq!(a, b);
    let c = harness::run_trajectory(&cfg, 3, 9, RunOptions::default()).unwrap();
    assert_ne!(a.summary.final_iterate, c.summary.final_iterate);
}

#[test]
fn config_errors() {
    let bad = [
        "nonsense = 3",
        "lr = fast",
        "seeds = ",
        "steps = 0",
        "grid_param = alpha",
        "grid_param = beta\ngrid_values = 1",
        "region = oracle_additive\nalpha = 0",
        "delta = 1.5",
        "optimizer = lbfgs",
        "transform = sometimes",
    ];
    for text in bad {
        assert!(
            ExperimentConfig::parse(ExperimentKind::ValidateCarry, text).is_err(),
            "accepted `{text}`"
        );
    }
    let ok = ExperimentConfig::parse(ExperimentKind::ValidateCarry, "# only a comment\n\n").unwrap();
    assert_eq!(ok, ExperimentConfig::defaults(ExperimentKind::ValidateCarry));
}

fn read_csv(path: &std::path::Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn cli_writes_schema_valid_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("quick.cfg");
    std::fs::write(&cfg_path, "steps = 300\ngrid_param = alpha\ngrid_values = 0.2, 0.9\n").unwrap();
    let exe = env!("CARGO_BIN_EXE_uclip");
    let runs: Vec<Vec<&str>> = vec![
        vec!["aliasing", "--seeds", "1..3"],
        vec!["validate-carry", "--seeds", "1..20", "--config", cfg_path.to_str().unwrap()],
        vec!["validate-regret", "--seeds", "1,2,3", "--threads", "2", "--full-trace"],
        vec!["sharded", "--seeds", "1..2"],
        vec!["train-toy", "--seeds", "1..2"],
        vec!["bounds"],
    ];
    for args in runs {
        let out = Command::new(exe)
            .args(&args)
            .arg("--out")
            .arg(dir.path())
            .output()
            .unwrap();
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    for name in [
        "aliasing_final.csv",
        "aliasing_trajectory.csv",
        "aliasing_objective.csv",
        "carry.csv",
        "regret.csv",
        "trace.csv",
        "sharded.csv",
        "toy_runs.csv",
        "toy_summary.csv",
        "bounds.csv",
    ] {
        let (header, rows) = read_csv(&dir.path().join(name));
        assert!(!rows.is_empty(), "{name} is empty");
        for row in &rows {
            assert_eq!(row.len(), header.len());
            for cell in row {
                if let Ok(v) = cell.parse::<f64>() {
                    assert!(v.is_finite(), "{name}: {cell}");
                }
            }
        }
    }
    let (_, rows) = read_csv(&dir.path().join("aliasing_trajectory.csv"));
    assert_eq!(rows.len(), 3 * 3 * 1501);
}

#[test]
fn cli_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.cfg");
    std::fs::write(&cfg_path, "stpes = 10\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_uclip"))
        .args(["aliasing", "--config", cfg_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("stpes"));
}

#[test]
fn floats_round_trip_through_csv() {
    let cfg = quick(ExperimentKind::ValidateRegret);
    let rows = harness::validate_regret(&cfg).unwrap();
    let text = RegretRow::table(&rows).to_csv_string().unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    for (rec, row) in r.records().zip(&rows) {
        let v: f64 = rec.unwrap()[1].parse().unwrap();
        assert_eq!(v.to_bits(), row.empirical_regret.to_bits());
    }
}
