//! Experiment-harness contracts: identical splits across methods, table row
//! counts, stats round-trips, and the 1x1-grid-equals-tuned-point identity.

use std::collections::HashSet;
use std::fs;

use svmtune::harness::{
    run_experiment, DatasetSpec, ExperimentConfig, GridSpec, TuneBudget, BASELINE_METHOD,
};
use svmtune::dataio::SyntheticKind;
use svmtune::solvers::SolverKind;
use svmtune::stats::TestReport;

fn small_config(out: std::path::PathBuf) -> ExperimentConfig {
    ExperimentConfig {
        datasets: vec![
            DatasetSpec::Synthetic {
                kind: SyntheticKind::TwoGaussians,
                n: 120,
                noise: 0.05,
                seed: 1,
            },
            DatasetSpec::Synthetic {
                kind: SyntheticKind::Checkerboard,
                n: 120,
                noise: 0.05,
                seed: 2,
            },
        ],
        solvers: vec![SolverKind::Smo, SolverKind::Bsgd],
        tune: TuneBudget {
            initial_design_size: 5,
            iterations: 1,
            batch_size: 2,
            lambda_mean: 1.0,
        },
        // 3 per axis: the 2x2 grid has only the extreme corners, which can
        // all be degenerate on hard datasets.
        grid_size: 3,
        grid: None,
        final_deadline: Some(2.0),
        seeds: vec![0, 1],
        output_dir: out,
        time_scale: 0.02,
        workers: 1,
    }
}

#[test]
fn experiment_bookkeeping_contracts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path().join("out"));
    let report = run_experiment(&cfg).unwrap();

    // 2 datasets x (2 solvers + baseline) x 2 seeds.
    assert_eq!(report.cells.len(), 12);
    assert!(report.failed_cells.is_empty());

    // All methods of one (dataset, seed) consumed identical splits.
    for cell in &report.cells {
        let mates: HashSet<u64> = report
            .cells
            .iter()
            .filter(|c| c.dataset == cell.dataset && c.seed == cell.seed)
            .map(|c| c.split_hash)
            .collect();
        assert_eq!(mates.len(), 1, "split hash differs within {}", cell.dataset);
    }

    // errors.csv: header + N*k + N baseline rows.
    let errors = fs::read_to_string(cfg.output_dir.join("errors.csv")).unwrap();
    assert_eq!(errors.lines().count(), 1 + 2 * 2 + 2);
    let baseline_rows = errors
        .lines()
        .filter(|l| l.contains(&format!(",{BASELINE_METHOD},")))
        .count();
    assert_eq!(baseline_rows, 2);

    // Timing factors exist for non-baseline summaries and are finite.
    for s in &report.summaries {
        if s.method == BASELINE_METHOD {
            assert!(s.timing_factor.is_none());
        } else {
            assert!(s.timing_factor.unwrap().is_finite());
        }
    }

    // stats.json round-trips through the stats module's reader.
    let text = fs::read_to_string(cfg.output_dir.join("stats.json")).unwrap();
    let parsed = TestReport::from_json(&text).unwrap();
    assert_eq!(Some(parsed), report.stats);

    // Per-run artifacts exist.
    assert!(cfg
        .output_dir
        .join("runs/two-gaussians-120/smo/1/history.csv")
        .is_file());
    assert!(cfg
        .output_dir
        .join("runs/checkerboard-120/grid/0/model.json")
        .is_file());
}

#[test]
fn one_by_one_grid_at_tuned_point_matches_tuned_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path().join("first"));
    cfg.datasets.truncate(1);
    cfg.seeds = vec![0];
    let report = run_experiment(&cfg).unwrap();
    let tuned = report
        .cells
        .iter()
        .find(|c| c.method == "smo")
        .unwrap()
        .clone();

    // Re-run with the baseline pinned to the tuned best point: identical
    // final training (same split, point, deadline, seed) => identical error.
    let mut cfg2 = cfg.clone();
    cfg2.output_dir = dir.path().join("second");
    cfg2.solvers = vec![SolverKind::Smo];
    cfg2.grid = Some(GridSpec {
        log2_c: vec![tuned.best_log2_c],
        log2_gamma: vec![tuned.best_log2_gamma],
    });
    let report2 = run_experiment(&cfg2).unwrap();
    let baseline = report2
        .cells
        .iter()
        .find(|c| c.method == BASELINE_METHOD)
        .unwrap();
    assert_eq!(baseline.best_log2_c, tuned.best_log2_c);
    assert_eq!(baseline.test_error, tuned.test_error);
}
