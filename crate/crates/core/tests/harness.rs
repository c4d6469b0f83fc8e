use std::fs;

use qbid_core::agent::{read_curve_csv, Variant};
use qbid_core::harness::*;
use qbid_core::market::RivalStrategy;

/// Tiny but complete experiment.
fn small(dir: &std::path::Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.apply_text(
        "episodes = 6\nepisode_steps = 48\nwarmup = 200\nbuffer_capacity = 2000\n\
         forecast_units = 4\nforecast_epochs = 2\nbatch_size = 16\nseeds = 1,2,3\n",
    )
    .unwrap();
    cfg.output_dir = dir.to_path_buf();
    cfg
}

fn read_dir_bytes(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&small(a.path())).unwrap();
    run_experiment(&small(b.path())).unwrap();
    let first = read_dir_bytes(a.path());
    let second = read_dir_bytes(b.path());
    assert_eq!(first.len(), second.len());
    for ((na, ba), (nb, bb)) in first.iter().zip(&second) {
        assert_eq!(na, nb);
        // manifests record their own output directory
        if na != "manifest.txt" {
            assert_eq!(ba, bb, "{na} differs");
        }
    }
}

#[test]
fn summary_recomputes_from_curves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path());
    let result = run_experiment(&cfg).unwrap();
    let window = cfg.window();
    let means: Vec<f64> = cfg
        .seeds
        .iter()
        .map(|s| {
            let curve = read_curve_csv(fs::File::open(dir.path().join(format!("curve_seed{s}.csv"))).unwrap()).unwrap();
            assert_eq!(curve.len(), 6);
            converged(&curve, window).0
        })
        .collect();
    let (mu, sigma) = mean_std(&means);
    let mut r = csv::Reader::from_path(dir.path().join("summary.csv")).unwrap();
    let row: ExperimentSummary = r.deserialize().next().unwrap().unwrap();
    assert!((row.mu - mu).abs() < 1e-9 && (row.sigma - sigma).abs() < 1e-9);
    assert_eq!(row, result.summary);
}

#[test]
fn single_seed_has_zero_sigma_and_forced_true_cost_has_zero_mu() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.set("seeds", "4").unwrap();
    assert_eq!(run_experiment(&cfg).unwrap().summary.sigma, 0.0);
    cfg.set("seeds", "4,5").unwrap();
    cfg.set("policy_override", "1,1").unwrap();
    let s = run_experiment(&cfg).unwrap().summary;
    assert_eq!((s.mu, s.sigma), (0.0, 0.0));
}

#[test]
fn matrix_is_a_cross_product() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.set("seeds", "1").unwrap();
    cfg.set("episodes", "2").unwrap();
    let tables = run_matrix(&cfg, &[2, 5], &[RivalStrategy::B1, RivalStrategy::B2], &[Variant::Nfq1, Variant::Nfq2]).unwrap();
    assert_eq!(tables.len(), 4);
    assert_eq!(tables.iter().map(|t| t.cells.len()).sum::<usize>(), 8);
    let text = fs::read_to_string(dir.path().join("table_B1_NFQ-2.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "row,2,5");
    assert!(lines[1].starts_with("mu,") && lines[2].starts_with("sigma,"));
    assert!(run_matrix(&cfg, &[2], &[RivalStrategy::B1], &[]).is_err());
}

#[test]
fn bad_learner_cell_is_recorded_and_others_continue() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.set("seeds", "1").unwrap();
    cfg.set("episodes", "2").unwrap();
    let tables = run_matrix(&cfg, &[9, 3], &[RivalStrategy::B2], &[Variant::Nfq2]).unwrap();
    assert!(tables[0].cells[0].outcome.is_err());
    assert!(tables[0].cells[1].outcome.is_ok());
}

#[test]
fn sweep_writes_one_curve_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.set("seeds", "1").unwrap();
    let values: Vec<String> = ["0.05", "0.3", "0.9"].iter().map(|s| s.to_string()).collect();
    let points = sweep(&cfg, "gamma".parse().unwrap(), &values).unwrap();
    assert_eq!(points.len(), 3);
    let text = fs::read_to_string(dir.path().join("sweep_gamma.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "episode,gamma=0.05,gamma=0.3,gamma=0.9");
    assert_eq!(text.lines().count(), 7);
    assert!("alpha".parse::<SweepParameter>().is_err());
}

#[test]
fn trace_windows() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.set("seeds", "1").unwrap();
    run_experiment(&cfg).unwrap();
    let path = trace_path(dir.path(), 1);
    let mut out = Vec::new();
    emit_trace(fs::File::open(&path).unwrap(), 10, 20, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,qg_1,qg_2,qg_3,qg_4,qg_5,qg_6");
    assert_eq!(lines.len(), 21);
    assert!(lines[1].starts_with("10,"));
    let mut out = Vec::new();
    emit_trace(fs::File::open(&path).unwrap(), 0, 48, &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 49);
    let mut out = Vec::new();
    emit_trace(fs::File::open(&path).unwrap(), 5, 0, &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 1);
    assert!(emit_trace(fs::File::open(&path).unwrap(), 40, 20, Vec::new()).is_err());
}
