//! Anytime SVM solvers: batch SMO on the dual, LASVM-style online SMO and
//! budgeted primal SGD. Every solver honors a hard wall-clock deadline and
//! returns a usable model when interrupted.

mod bsgd;
mod lasvm;
mod smo;

use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::dataio::{Dataset, SparseVector};
use crate::error::{Error, Result};
use crate::kernel::{rbf, KernelParams, DEFAULT_CACHE_BYTES};

pub use bsgd::train_bsgd;
pub use lasvm::train_lasvm;
pub use smo::train_smo;

/// Which training algorithm to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Smo,
    Lasvm,
    Bsgd,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [SolverKind::Smo, SolverKind::Lasvm, SolverKind::Bsgd];

    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Smo => "smo",
            SolverKind::Lasvm => "lasvm",
            SolverKind::Bsgd => "bsgd",
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smo" => Ok(SolverKind::Smo),
            "lasvm" => Ok(SolverKind::Lasvm),
            "bsgd" => Ok(SolverKind::Bsgd),
            other => Err(Error::Config(format!("unknown solver `{other}`"))),
        }
    }
}

/// Training configuration shared by all solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Regularization parameter C > 0.
    pub c: f64,
    pub kernel: KernelParams,
    /// Wall-clock deadline in seconds; `None` means unlimited.
    pub deadline: Option<f64>,
    /// KKT tolerance for the dual solvers.
    pub epsilon: f64,
    pub seed: u64,
    /// Support-set cap, BSGD only.
    pub budget: usize,
    /// Epoch cap, BSGD only.
    pub max_epochs: usize,
    /// Kernel cache byte budget for one training run.
    pub cache_bytes: usize,
}

impl TrainConfig {
    pub fn new(c: f64, gamma: f64) -> Result<Self> {
        let cfg = Self {
            c,
            kernel: KernelParams::new(gamma)?,
            deadline: None,
            epsilon: 1e-3,
            seed: 0,
            budget: 2048,
            max_epochs: 10,
            cache_bytes: DEFAULT_CACHE_BYTES,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_deadline(mut self, seconds: f64) -> Self {
        self.deadline = Some(seconds);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be positive and finite, got {}", self.c)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if self.budget < 1 {
            return Err(Error::Config("budget must be >= 1".into()));
        }
        if let Some(d) = self.deadline {
            if !(d >= 0.0) {
                return Err(Error::Config("deadline must be nonnegative".into()));
            }
        }
        Ok(())
    }
}

/// Monotonic wall-clock deadline for one training run.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Deadline {
    start: Instant,
    limit: Option<Duration>,
}

impl Deadline {
    pub fn start(limit_seconds: Option<f64>) -> Self {
        Self {
            start: Instant::now(),
            limit: limit_seconds.map(Duration::from_secs_f64),
        }
    }

    pub fn expired(&self) -> bool {
        self.limit.is_some_and(|l| self.start.elapsed() >= l)
    }

    pub fn elapsed_seconds(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

/// Bookkeeping attached to a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub solver: String,
    pub c: f64,
    pub iterations: u64,
    pub elapsed_seconds: f64,
    pub dual_objective: Option<f64>,
    pub converged: bool,
}

/// Support-vector expansion with bias; the decision function is
/// `sum_i coeff_i * k(sv_i, x) + bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_vectors: Vec<SparseVector>,
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub kernel: KernelParams,
    pub meta: ModelMeta,
}

impl SvmModel {
    pub fn num_support_vectors(&self) -> usize {
        self.support_vectors.len()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Dispatches to the solver named in `kind`.
pub fn train(kind: SolverKind, ds: &Dataset, cfg: &TrainConfig) -> Result<SvmModel> {
    match kind {
        SolverKind::Smo => train_smo(ds, cfg),
        SolverKind::Lasvm => train_lasvm(ds, cfg),
        SolverKind::Bsgd => train_bsgd(ds, cfg),
    }
}

pub(crate) fn check_train_preconditions(ds: &Dataset, cfg: &TrainConfig) -> Result<()> {
    cfg.validate()?;
    if !ds.has_both_classes() {
        return Err(Error::Train(format!(
            "training set `{}` must contain both classes",
            ds.name
        )));
    }
    Ok(())
}

/// `sum_i coeff_i * k(sv_i, x) + bias`.
pub fn decision_value(m: &SvmModel, x: &SparseVector) -> f64 {
    let mut acc = m.bias;
    for (sv, &coeff) in m.support_vectors.iter().zip(&m.coefficients) {
        acc += coeff * rbf(sv, x, m.kernel);
    }
    acc
}

/// Predicted class; a decision value of exactly 0 maps to +1.
pub fn predict(m: &SvmModel, x: &SparseVector) -> i8 {
    if decision_value(m, x) >= 0.0 {
        1
    } else {
        -1
    }
}

/// Fraction of misclassified examples.
pub fn validation_error(m: &SvmModel, ds: &Dataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::Config("validation on an empty dataset".into()));
    }
    let wrong = ds
        .examples
        .iter()
        .zip(&ds.labels)
        .filter(|(x, &y)| predict(m, x) != y)
        .count();
    Ok(wrong as f64 / ds.len() as f64)
}
