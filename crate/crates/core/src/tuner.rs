//! EGO tuning loop with batch lambda-LCB proposals, the grid-search
//! baseline, and evaluation bookkeeping.

use std::io::Write;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::solvers::{self, predict, SolverKind, SvmModel, TrainConfig};
use crate::surrogate::{self, HyperPoint, Surrogate, BOX_HALF_WIDTH};

/// One hyperparameter evaluation: the point, the measured validation error
/// (or a failure marker) and the wall-clock costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub point: HyperPoint,
    /// `None` marks a failed (degenerate) evaluation.
    pub validation_error: Option<f64>,
    pub train_seconds: f64,
    pub validate_seconds: f64,
    pub solver: String,
    pub deadline_used: Option<f64>,
    /// 0 for the initial design, then 1-based EGO iteration.
    pub iteration: usize,
}

impl EvalRecord {
    pub fn failed(&self) -> bool {
        self.validation_error.is_none()
    }

    /// Error value fed to the surrogate; failures are imputed as 1.0 so the
    /// model stays aware of bad regions.
    pub fn surrogate_value(&self) -> f64 {
        self.validation_error.unwrap_or(1.0)
    }
}

/// EGO budget and proposal settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneConfig {
    pub initial_design_size: usize,
    pub iterations: usize,
    pub batch_size: usize,
    /// Mean of the exponential distribution the LCB lambdas are drawn from.
    pub lambda_mean: f64,
    pub seed: u64,
    pub solver: SolverKind,
    /// Per-evaluation training deadline in seconds; `None` = untruncated.
    pub deadline: Option<f64>,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            initial_design_size: 20,
            iterations: 10,
            batch_size: 20,
            lambda_mean: 1.0,
            seed: 0,
            solver: SolverKind::Lasvm,
            deadline: None,
        }
    }
}

impl TuneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.initial_design_size < 2 {
            return Err(Error::Config("initial design size must be >= 2".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch size must be >= 1".into()));
        }
        if !(self.lambda_mean > 0.0) {
            return Err(Error::Config("lambda mean must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of a tuning run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best_point: HyperPoint,
    pub best_error: f64,
    pub history: Vec<EvalRecord>,
    pub total_tune_seconds: f64,
}

impl TuneResult {
    /// Sum of per-evaluation training and validation seconds.
    pub fn evaluation_seconds(&self) -> f64 {
        self.history
            .iter()
            .map(|r| r.train_seconds + r.validate_seconds)
            .sum()
    }

    pub fn write_history_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "iter,log2C,log2gamma,error,train_s,validate_s,failed")?;
        for r in &self.history {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.iteration,
                r.point.log2_c,
                r.point.log2_gamma,
                r.validation_error.map_or(String::new(), |e| e.to_string()),
                r.train_seconds,
                r.validate_seconds,
                r.failed()
            )?;
        }
        Ok(())
    }
}

/// Deterministic per-evaluation seed from the master seed and point index.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the combined state.
    let mut z = master ^ (index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Maximin Latin hypercube over the box [-15,15]^2: of 100 seeded LHC draws,
/// keep the one maximizing the minimal pairwise distance.
pub fn initial_design(k: usize, seed: u64) -> Vec<HyperPoint> {
    assert!(k >= 2, "initial design needs k >= 2");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<[f64; 2]>, f64)> = None;
    for _ in 0..100 {
        let mut perms: [Vec<usize>; 2] = [(0..k).collect(), (0..k).collect()];
        perms[0].shuffle(&mut rng);
        perms[1].shuffle(&mut rng);
        let pts: Vec<[f64; 2]> = (0..k)
            .map(|i| {
                let u0 = (perms[0][i] as f64 + rng.gen::<f64>()) / k as f64;
                let u1 = (perms[1][i] as f64 + rng.gen::<f64>()) / k as f64;
                [u0, u1]
            })
            .collect();
        let mut min_d2 = f64::INFINITY;
        for i in 0..k {
            for j in i + 1..k {
                let d2 = (pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2);
                min_d2 = min_d2.min(d2);
            }
        }
        if best.as_ref().is_none_or(|&(_, b)| min_d2 > b) {
            best = Some((pts, min_d2));
        }
    }
    best.expect("100 draws")
        .0
        .into_iter()
        .map(HyperPoint::from_unit)
        .collect()
}

/// Starts that survive the screening pass and get full coordinate descent.
const REFINED_STARTS: usize = 4;

/// Minimizes `lambda`-LCB over the box by multi-start local search:
/// 16 random starts plus extra candidates (design points / coarse grid).
/// All starts are screened by value and only the best few are refined by
/// coordinate descent with step halving. Deterministic given the RNG state.
fn minimize_lcb(s: &Surrogate, lambda: f64, rng: &mut ChaCha8Rng, starts_extra: &[[f64; 2]]) -> [f64; 2] {
    let eval = |u: [f64; 2]| s.lcb(HyperPoint::from_unit(u), lambda);
    let mut starts: Vec<[f64; 2]> = (0..16).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
    starts.extend_from_slice(starts_extra);
    let mut scored: Vec<([f64; 2], f64)> = starts.into_iter().map(|u| (u, eval(u))).collect();
    scored.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    scored.truncate(REFINED_STARTS.max(1));
    let mut best: Option<([f64; 2], f64)> = None;
    for (start, start_val) in scored {
        let mut u = start;
        let mut fu = start_val;
        let mut step = 0.25;
        while step >= 1e-4 {
            let mut improved = false;
            for d in 0..2 {
                for sgn in [1.0, -1.0] {
                    let mut cand = u;
                    cand[d] = (cand[d] + sgn * step).clamp(0.0, 1.0);
                    if cand[d] == u[d] {
                        continue;
                    }
                    let f = eval(cand);
                    if f < fu {
                        u = cand;
                        fu = f;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if best.as_ref().is_none_or(|&(_, b)| fu < b) {
            best = Some((u, fu));
        }
    }
    best.expect("at least 16 starts").0
}

/// Standalone lambda-LCB argmin (coarse-grid starts instead of the design
/// points); exposed so tests can compare against a dense-grid oracle.
pub fn lcb_argmin(s: &Surrogate, lambda: f64, seed: u64) -> HyperPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid: Vec<[f64; 2]> = (0..5)
        .flat_map(|i| (0..5).map(move |j| [i as f64 / 4.0, j as f64 / 4.0]))
        .collect();
    HyperPoint::from_unit(minimize_lcb(s, lambda, &mut rng, &grid))
}

fn unit_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Draws `batch_size` lambdas, minimizes each lambda-LCB independently, and
/// deduplicates proposals against each other and the design.
pub fn propose_batch(
    s: &Surrogate,
    cfg: &TuneConfig,
    rng: &mut ChaCha8Rng,
    design: &[HyperPoint],
) -> Vec<HyperPoint> {
    let design_units: Vec<[f64; 2]> = design.iter().map(|p| p.to_unit()).collect();
    let mut chosen: Vec<[f64; 2]> = Vec::with_capacity(cfg.batch_size);
    for _ in 0..cfg.batch_size {
        let lambda = sample_lambda(cfg.lambda_mean, rng);
        let mut u = minimize_lcb(s, lambda, rng, &design_units);
        let clashes = |u: [f64; 2], chosen: &[[f64; 2]]| {
            chosen.iter().chain(design_units.iter()).any(|&v| unit_dist(u, v) < 1e-3)
        };
        if clashes(u, &chosen) {
            // One lambda re-sample, then a uniform jitter within a 1e-2 ball.
            let lambda = sample_lambda(cfg.lambda_mean, rng);
            u = minimize_lcb(s, lambda, rng, &design_units);
            while clashes(u, &chosen) {
                let angle = rng.gen::<f64>() * std::f64::consts::TAU;
                let radius = 1e-2 * rng.gen::<f64>().sqrt();
                u = [
                    (u[0] + radius * angle.cos()).clamp(0.0, 1.0),
                    (u[1] + radius * angle.sin()).clamp(0.0, 1.0),
                ];
            }
        }
        chosen.push(u);
    }
    chosen.into_iter().map(HyperPoint::from_unit).collect()
}

fn sample_lambda(mean: f64, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    -mean * u.ln()
}

/// Result of evaluating one hyperparameter point.
#[derive(Debug, Clone, Copy)]
pub struct EvalOutcome {
    /// `None` = degenerate/failed evaluation.
    pub error: Option<f64>,
    pub train_seconds: f64,
    pub validate_seconds: f64,
}

/// The EGO loop over an arbitrary objective. `objective` receives the point
/// and a per-evaluation seed derived from the master seed and point index.
pub fn ego_minimize<F>(mut objective: F, cfg: &TuneConfig, solver_name: &str) -> Result<TuneResult>
where
    F: FnMut(HyperPoint, u64) -> EvalOutcome,
{
    cfg.validate()?;
    let wall = Instant::now();
    let mut history: Vec<EvalRecord> = Vec::new();
    let mut evaluate = |p: HyperPoint, iteration: usize, history: &mut Vec<EvalRecord>| {
        let seed = derive_seed(cfg.seed, history.len() as u64);
        let out = objective(p, seed);
        history.push(EvalRecord {
            point: p,
            validation_error: out.error,
            train_seconds: out.train_seconds,
            validate_seconds: out.validate_seconds,
            solver: solver_name.to_string(),
            deadline_used: cfg.deadline,
            iteration,
        });
    };

    for p in initial_design(cfg.initial_design_size, cfg.seed) {
        evaluate(p, 0, &mut history);
    }
    if history.iter().all(EvalRecord::failed) {
        return Err(Error::Tune("all initial-design evaluations failed".into()));
    }

    // Separate proposal stream so evaluation count does not perturb it.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x51F3_B8A2_9C04_D7E6);
    for iter in 1..=cfg.iterations {
        let records: Vec<(HyperPoint, f64)> =
            history.iter().map(|r| (r.point, r.surrogate_value())).collect();
        let s = surrogate::fit(&records)?;
        let design: Vec<HyperPoint> = history.iter().map(|r| r.point).collect();
        let batch = propose_batch(&s, cfg, &mut rng, &design);
        for p in batch {
            evaluate(p, iter, &mut history);
        }
    }

    finish_result(history, wall.elapsed().as_secs_f64())
}

fn finish_result(history: Vec<EvalRecord>, total_tune_seconds: f64) -> Result<TuneResult> {
    let best = history
        .iter()
        .filter(|r| !r.failed())
        .min_by(|a, b| {
            a.surrogate_value()
                .partial_cmp(&b.surrogate_value())
                .unwrap()
        })
        .ok_or_else(|| Error::Tune("no successful evaluations".into()))?;
    Ok(TuneResult {
        best_point: best.point,
        best_error: best.surrogate_value(),
        history: history.clone(),
        total_tune_seconds,
    })
}

/// Trains at `point` with the configured deadline and measures validation
/// error. A degenerate model (single predicted class on validation while the
/// error is at least the majority-class rate) counts as a failure.
pub fn evaluate_point(
    train: &Dataset,
    validation: &Dataset,
    solver: SolverKind,
    point: HyperPoint,
    deadline: Option<f64>,
    seed: u64,
) -> EvalOutcome {
    let Ok(mut cfg) = TrainConfig::new(point.c(), point.gamma()) else {
        return EvalOutcome {
            error: None,
            train_seconds: 0.0,
            validate_seconds: 0.0,
        };
    };
    cfg.deadline = deadline;
    cfg.seed = seed;
    let t0 = Instant::now();
    let model = solvers::train(solver, train, &cfg);
    let train_seconds = t0.elapsed().as_secs_f64();
    let Ok(model) = model else {
        return EvalOutcome {
            error: None,
            train_seconds,
            validate_seconds: 0.0,
        };
    };
    let t1 = Instant::now();
    let preds: Vec<i8> = validation.examples.iter().map(|x| predict(&model, x)).collect();
    let validate_seconds = t1.elapsed().as_secs_f64();
    let n = validation.len() as f64;
    let wrong = preds
        .iter()
        .zip(&validation.labels)
        .filter(|(&p, &y)| p != y)
        .count() as f64;
    let error = wrong / n;
    let single_class = preds.windows(2).all(|w| w[0] == w[1]);
    let pos = validation.labels.iter().filter(|&&y| y == 1).count() as f64;
    let majority_rate = (pos / n).max(1.0 - pos / n);
    let failed = single_class && error >= majority_rate;
    EvalOutcome {
        error: (!failed).then_some(error),
        train_seconds,
        validate_seconds,
    }
}

/// EGO tuning of a real SVM solver on a train/validation pair.
pub fn ego_tune(train: &Dataset, validation: &Dataset, cfg: &TuneConfig) -> Result<TuneResult> {
    let solver = cfg.solver;
    let deadline = cfg.deadline;
    ego_minimize(
        |p, seed| evaluate_point(train, validation, solver, p, deadline, seed),
        cfg,
        solver.name(),
    )
}

/// Exhaustive baseline over `{log2_C} x {log2_gamma}`, evaluated in
/// lexicographic order. Ties break by smaller train time, then point order.
pub fn grid_search(
    train: &Dataset,
    validation: &Dataset,
    log2_c_values: &[f64],
    log2_gamma_values: &[f64],
    solver: SolverKind,
    deadline: Option<f64>,
    seed: u64,
) -> Result<TuneResult> {
    if log2_c_values.is_empty() || log2_gamma_values.is_empty() {
        return Err(Error::Config("grid must be non-empty".into()));
    }
    let wall = Instant::now();
    let mut history = Vec::new();
    for &lc in log2_c_values {
        for &lg in log2_gamma_values {
            let point = HyperPoint::new(lc, lg)?;
            let eval_seed = derive_seed(seed, history.len() as u64);
            let out = evaluate_point(train, validation, solver, point, deadline, eval_seed);
            history.push(EvalRecord {
                point,
                validation_error: out.error,
                train_seconds: out.train_seconds,
                validate_seconds: out.validate_seconds,
                solver: solver.name().to_string(),
                deadline_used: deadline,
                iteration: 0,
            });
        }
    }
    let wall_seconds = wall.elapsed().as_secs_f64();
    // Argmin with tie-breaking by train time, then evaluation (point) order.
    let mut best: Option<&EvalRecord> = None;
    for r in history.iter().filter(|r| !r.failed()) {
        let better = match best {
            None => true,
            Some(b) => {
                let (e, be) = (r.surrogate_value(), b.surrogate_value());
                e < be || (e == be && r.train_seconds < b.train_seconds)
            }
        };
        if better {
            best = Some(r);
        }
    }
    let best = best.ok_or_else(|| Error::Tune("all grid evaluations failed".into()))?;
    Ok(TuneResult {
        best_point: best.point,
        best_error: best.surrogate_value(),
        history: history.clone(),
        total_tune_seconds: wall_seconds,
    })
}

/// Convenience: n logarithmically spaced values across the box.
pub fn log_grid(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n)
        .map(|i| -BOX_HALF_WIDTH + 2.0 * BOX_HALF_WIDTH * i as f64 / (n - 1) as f64)
        .collect()
}

/// Single training run at the selected point with an extended deadline.
pub fn retrain_final(
    train: &Dataset,
    best_point: HyperPoint,
    solver: SolverKind,
    final_deadline: Option<f64>,
    seed: u64,
) -> Result<SvmModel> {
    let mut cfg = TrainConfig::new(best_point.c(), best_point.gamma())?;
    cfg.deadline = final_deadline;
    cfg.seed = seed;
    solvers::train(solver, train, &cfg)
}
