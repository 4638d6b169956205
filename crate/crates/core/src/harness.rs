//! End-to-end experiment driver: tune each solver on each dataset with the
//! time-limit heuristic, run the untruncated grid baseline on the same
//! splits, and aggregate error rates, timing factors and significance tests.

use std::collections::hash_map::DefaultHasher;
use std::fs;
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataio::{self, Dataset, LabelRule, SplitSpec, SyntheticKind};
use crate::error::{Error, Result};
use crate::solvers::{validation_error, SolverKind};
use crate::stats::{self, ResultMatrix, TestReport};
use crate::tuner::{self, TuneConfig, TuneResult};

pub const BASELINE_METHOD: &str = "grid";

/// T = 2^(log10(n) + 1) seconds, optionally scaled.
pub fn time_limit_heuristic(n: usize) -> f64 {
    assert!(n >= 1);
    ((n as f64).log10() + 1.0).exp2()
}

/// Where a dataset comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum DatasetSpec {
    Synthetic {
        kind: SyntheticKind,
        n: usize,
        #[serde(default)]
        noise: f64,
        #[serde(default)]
        seed: u64,
    },
    File {
        path: PathBuf,
        name: String,
        /// One-vs-rest binarization class for multiclass files.
        #[serde(default)]
        binarize: Option<f64>,
        /// Rescale features to [0,1] per feature.
        #[serde(default)]
        scale: bool,
    },
}

impl DatasetSpec {
    pub fn name(&self) -> String {
        match self {
            DatasetSpec::Synthetic { kind, n, .. } => format!("{kind}-{n}"),
            DatasetSpec::File { name, .. } => name.clone(),
        }
    }

    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSpec::Synthetic { kind, n, noise, seed } => {
                dataio::make_synthetic(*kind, *n, *noise, *seed)
            }
            DatasetSpec::File {
                path,
                name,
                binarize,
                scale,
            } => {
                let file = fs::File::open(path)?;
                let rule = binarize.map_or(LabelRule::Sign, LabelRule::OneVsRest);
                let ds = dataio::parse_libsvm(std::io::BufReader::new(file), rule, name)?;
                Ok(if *scale { dataio::scale_unit(&ds) } else { ds })
            }
        }
    }
}

fn default_grid_size() -> usize {
    11
}

fn default_final_deadline() -> Option<f64> {
    Some(300.0)
}

fn default_time_scale() -> f64 {
    1.0
}

fn default_workers() -> usize {
    1
}

/// Declarative experiment configuration (JSON on disk).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSpec>,
    pub solvers: Vec<SolverKind>,
    #[serde(default)]
    pub tune: TuneBudget,
    /// Baseline grid resolution per axis.
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    /// Explicit baseline grid axes; overrides `grid_size` when set.
    #[serde(default)]
    pub grid: Option<GridSpec>,
    /// Final retraining deadline in seconds; null = untruncated.
    #[serde(default = "default_final_deadline")]
    pub final_deadline: Option<f64>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Multiplier on the per-evaluation time-limit heuristic.
    #[serde(default = "default_time_scale")]
    pub time_scale: f64,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

/// Explicit baseline grid axes in log2 space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub log2_c: Vec<f64>,
    pub log2_gamma: Vec<f64>,
}

/// EGO budget knobs of the experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneBudget {
    pub initial_design_size: usize,
    pub iterations: usize,
    pub batch_size: usize,
    pub lambda_mean: f64,
}

impl Default for TuneBudget {
    fn default() -> Self {
        Self {
            initial_design_size: 20,
            iterations: 10,
            batch_size: 20,
            lambda_mean: 1.0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() || self.solvers.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config(
                "experiment needs non-empty datasets, solvers and seeds".into(),
            ));
        }
        if self.grid_size == 0 {
            return Err(Error::Config("grid size must be >= 1".into()));
        }
        if let Some(g) = &self.grid {
            if g.log2_c.is_empty() || g.log2_gamma.is_empty() {
                return Err(Error::Config("explicit grid axes must be non-empty".into()));
            }
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Raw result of one (dataset, method, seed) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub dataset: String,
    pub method: String,
    pub seed: u64,
    pub best_log2_c: f64,
    pub best_log2_gamma: f64,
    pub test_error: f64,
    /// Model-selection wall seconds plus final retraining.
    pub total_seconds: f64,
    /// Sum of per-evaluation train+validate seconds inside tuning.
    pub evaluation_seconds: f64,
    pub final_train_seconds: f64,
    /// Hash of the split assignment; equal across methods of one seed.
    pub split_hash: u64,
}

/// Median aggregate of one (dataset, method) over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub dataset: String,
    pub method: String,
    pub median_test_error: f64,
    pub median_total_seconds: f64,
    /// log10(baseline seconds / method seconds); None for the baseline row.
    pub timing_factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub cells: Vec<CellResult>,
    pub summaries: Vec<MethodSummary>,
    pub stats: Option<TestReport>,
    /// (dataset, method) cells that failed on every seed.
    pub failed_cells: Vec<(String, String)>,
}

struct CellOutcome {
    result: CellResult,
    tune: TuneResult,
    model_json: String,
}

fn split_hash(train: &Dataset, val: &Dataset, test: &Dataset) -> u64 {
    let mut h = DefaultHasher::new();
    for part in [train, val, test] {
        part.len().hash(&mut h);
        for (x, y) in part.examples.iter().zip(&part.labels) {
            y.hash(&mut h);
            for &(i, v) in x.entries() {
                i.hash(&mut h);
                v.to_bits().hash(&mut h);
            }
        }
    }
    h.finish()
}

fn run_cell(
    full: &Dataset,
    dataset_name: &str,
    method: &str,
    solver: SolverKind,
    seed: u64,
    cfg: &ExperimentConfig,
) -> Result<CellOutcome> {
    let (train, val, test) = dataio::split(full, &SplitSpec::two_one_one(seed))?;
    let hash = split_hash(&train, &val, &test);
    let wall = Instant::now();
    let tune = if method == BASELINE_METHOD {
        let (cs, gammas) = match &cfg.grid {
            Some(g) => (g.log2_c.clone(), g.log2_gamma.clone()),
            None => {
                let axis = tuner::log_grid(cfg.grid_size);
                (axis.clone(), axis)
            }
        };
        tuner::grid_search(&train, &val, &cs, &gammas, solver, None, seed)?
    } else {
        let tune_cfg = TuneConfig {
            initial_design_size: cfg.tune.initial_design_size,
            iterations: cfg.tune.iterations,
            batch_size: cfg.tune.batch_size,
            lambda_mean: cfg.tune.lambda_mean,
            seed,
            solver,
            deadline: Some(time_limit_heuristic(train.len()) * cfg.time_scale),
        };
        tuner::ego_tune(&train, &val, &tune_cfg)?
    };
    let t_final = Instant::now();
    let model = tuner::retrain_final(&train, tune.best_point, solver, cfg.final_deadline, seed)?;
    let final_train_seconds = t_final.elapsed().as_secs_f64();
    let test_error = validation_error(&model, &test)?;
    Ok(CellOutcome {
        result: CellResult {
            dataset: dataset_name.to_string(),
            method: method.to_string(),
            seed,
            best_log2_c: tune.best_point.log2_c,
            best_log2_gamma: tune.best_point.log2_gamma,
            test_error,
            total_seconds: wall.elapsed().as_secs_f64(),
            evaluation_seconds: tune.evaluation_seconds(),
            final_train_seconds,
            split_hash: hash,
        },
        tune,
        model_json: model.to_json()?,
    })
}

fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Runs the full protocol and persists raw records under
/// `<output_dir>/runs/<dataset>/<method>/<seed>/`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    // Baseline uses the first configured solver with untruncated training.
    let baseline_solver = cfg.solvers[0];
    let mut methods: Vec<(String, SolverKind)> = cfg
        .solvers
        .iter()
        .map(|&s| (s.name().to_string(), s))
        .collect();
    methods.push((BASELINE_METHOD.to_string(), baseline_solver));

    // Validate eagerly: load every dataset before any training runs.
    let datasets: Vec<(String, Dataset)> = cfg
        .datasets
        .iter()
        .map(|spec| Ok((spec.name(), spec.load()?)))
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize, u64)> = datasets
        .iter()
        .enumerate()
        .flat_map(|(d, _)| {
            methods
                .iter()
                .enumerate()
                .flat_map(move |(m, _)| cfg.seeds.iter().map(move |&s| (d, m, s)))
        })
        .collect();

    let run_one = |&(d, m, seed): &(usize, usize, u64)| {
        let (name, ds) = &datasets[d];
        let (method, solver) = &methods[m];
        run_cell(ds, name, method, *solver, seed, cfg)
    };
    let outcomes: Vec<(usize, Result<CellOutcome>)> = if cfg.workers <= 1 {
        jobs.iter().enumerate().map(|(i, j)| (i, run_one(j))).collect()
    } else {
        run_parallel(&jobs, cfg.workers, run_one)
    };

    let mut cells = Vec::new();
    let mut failures: Vec<(usize, usize, String)> = Vec::new();
    for (idx, outcome) in outcomes {
        let (d, m, seed) = jobs[idx];
        match outcome {
            Ok(out) => {
                persist_cell(&cfg.output_dir, &out, seed)?;
                cells.push(out.result);
            }
            Err(e) => failures.push((d, m, format!("seed {seed}: {e}"))),
        }
    }

    // Aggregate medians per (dataset, method); a cell is failed when no seed
    // succeeded.
    let mut summaries = Vec::new();
    let mut failed_cells = Vec::new();
    for (_, name) in datasets.iter().map(|(n, _)| ((), n.clone())) {
        let baseline_median = {
            let mut secs: Vec<f64> = cells
                .iter()
                .filter(|c| c.dataset == name && c.method == BASELINE_METHOD)
                .map(|c| c.total_seconds)
                .collect();
            (!secs.is_empty()).then(|| median(&mut secs))
        };
        for (method, _) in &methods {
            let subset: Vec<&CellResult> = cells
                .iter()
                .filter(|c| c.dataset == name && &c.method == method)
                .collect();
            if subset.is_empty() {
                failed_cells.push((name.clone(), method.clone()));
                continue;
            }
            let mut errs: Vec<f64> = subset.iter().map(|c| c.test_error).collect();
            let mut secs: Vec<f64> = subset.iter().map(|c| c.total_seconds).collect();
            let med_secs = median(&mut secs);
            let timing_factor = if method == BASELINE_METHOD {
                None
            } else {
                baseline_median
                    .filter(|&b| b > 0.0 && med_secs > 0.0)
                    .map(|b| (b / med_secs).log10())
            };
            summaries.push(MethodSummary {
                dataset: name.clone(),
                method: method.clone(),
                median_test_error: median(&mut errs),
                median_total_seconds: med_secs,
                timing_factor,
            });
        }
    }
    for (d, m, msg) in &failures {
        eprintln!(
            "warning: cell ({}, {}) failed: {msg}",
            datasets[*d].0, methods[*m].0
        );
    }

    let stats = build_stats(&summaries, &datasets, &methods);
    let report = ExperimentReport {
        cells,
        summaries,
        stats,
        failed_cells,
    };
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(
        cfg.output_dir.join("report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    report_tables(&report, &cfg.output_dir)?;
    Ok(report)
}

fn run_parallel<F>(jobs: &[(usize, usize, u64)], workers: usize, run_one: F) -> Vec<(usize, Result<CellOutcome>)>
where
    F: Fn(&(usize, usize, u64)) -> Result<CellOutcome> + Sync,
{
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, Result<CellOutcome>)>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..workers.min(jobs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= jobs.len() {
                    break;
                }
                let out = run_one(&jobs[i]);
                results.lock().unwrap().push((i, out));
            });
        }
    });
    let mut results = results.into_inner().unwrap();
    results.sort_by_key(|&(i, _)| i);
    results
}

fn build_stats(
    summaries: &[MethodSummary],
    datasets: &[(String, Dataset)],
    methods: &[(String, SolverKind)],
) -> Option<TestReport> {
    if datasets.len() < 2 || methods.len() < 2 {
        return None;
    }
    let mut values = Vec::new();
    for (name, _) in datasets {
        let mut row = Vec::new();
        for (method, _) in methods {
            let cell = summaries
                .iter()
                .find(|s| &s.dataset == name && &s.method == method)?;
            row.push(cell.median_test_error);
        }
        values.push(row);
    }
    let matrix = ResultMatrix::new(
        datasets.iter().map(|(n, _)| n.clone()).collect(),
        methods.iter().map(|(m, _)| m.clone()).collect(),
        values,
    )
    .ok()?;
    stats::analyze(&matrix, BASELINE_METHOD, 0.05).ok()
}

fn persist_cell(output_dir: &Path, out: &CellOutcome, seed: u64) -> Result<()> {
    let dir = output_dir
        .join("runs")
        .join(&out.result.dataset)
        .join(&out.result.method)
        .join(seed.to_string());
    fs::create_dir_all(&dir)?;
    let mut history = fs::File::create(dir.join("history.csv"))?;
    out.tune.write_history_csv(&mut history)?;
    fs::write(dir.join("model.json"), &out.model_json)?;
    fs::write(dir.join("result.json"), serde_json::to_string_pretty(&out.tune)?)?;
    Ok(())
}

/// Writes errors.csv, timings.csv, the wide error matrix and stats.json.
/// Byte-identical output for identical reports.
pub fn report_tables(report: &ExperimentReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut errors = Vec::new();
    writeln!(errors, "dataset,method,test_error")?;
    for s in &report.summaries {
        writeln!(errors, "{},{},{}", s.dataset, s.method, s.median_test_error)?;
    }
    fs::write(dir.join("errors.csv"), errors)?;

    let mut timings = Vec::new();
    writeln!(timings, "dataset,method,total_seconds,timing_factor")?;
    for s in &report.summaries {
        writeln!(
            timings,
            "{},{},{},{}",
            s.dataset,
            s.method,
            s.median_total_seconds,
            s.timing_factor.map_or(String::new(), |f| f.to_string())
        )?;
    }
    fs::write(dir.join("timings.csv"), timings)?;

    if let Some(matrix) = summaries_matrix(report) {
        let mut buf = Vec::new();
        matrix.write_csv(&mut buf)?;
        fs::write(dir.join("errors_matrix.csv"), buf)?;
    }
    if let Some(stats) = &report.stats {
        fs::write(dir.join("stats.json"), stats.to_json()?)?;
    }
    Ok(())
}

fn summaries_matrix(report: &ExperimentReport) -> Option<ResultMatrix> {
    let mut datasets: Vec<String> = Vec::new();
    let mut methods: Vec<String> = Vec::new();
    for s in &report.summaries {
        if !datasets.contains(&s.dataset) {
            datasets.push(s.dataset.clone());
        }
        if !methods.contains(&s.method) {
            methods.push(s.method.clone());
        }
    }
    let mut values = Vec::new();
    for d in &datasets {
        let mut row = Vec::new();
        for m in &methods {
            let cell = report
                .summaries
                .iter()
                .find(|s| &s.dataset == d && &s.method == m)?;
            row.push(cell.median_test_error);
        }
        values.push(row);
    }
    ResultMatrix::new(datasets, methods, values).ok()
}

/// Reloads a persisted report and regenerates the tables without rerunning
/// anything. Errors list the missing pieces.
pub fn regenerate_tables(dir: &Path) -> Result<()> {
    let path = dir.join("report.json");
    if !path.exists() {
        return Err(Error::Config(format!(
            "no report.json under {}; run the experiment first",
            dir.display()
        )));
    }
    let report: ExperimentReport = serde_json::from_str(&fs::read_to_string(path)?)?;
    report_tables(&report, dir)
}
