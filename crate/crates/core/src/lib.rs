//! Anytime SVM training and fast hyperparameter selection.
//!
//! The crate turns three kernel SVM solvers (batch SMO, online LASVM,
//! budgeted primal SGD) into anytime algorithms by enforcing a hard
//! wall-clock deadline, and drives them with an EGO tuner (Kriging
//! surrogate, batch lambda-LCB proposals) over the `(log2 C, log2 gamma)`
//! box. A grid-search baseline, a Friedman/Holm statistics module and an
//! end-to-end experiment harness round out the pipeline.

pub mod dataio;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod solvers;
pub mod stats;
pub mod surrogate;
pub mod tuner;

pub use dataio::{Dataset, SparseVector, SplitSpec, SyntheticKind};
pub use error::{Error, Result};
pub use kernel::{KernelCache, KernelParams};
pub use solvers::{SolverKind, SvmModel, TrainConfig};
pub use surrogate::{HyperPoint, Surrogate};
pub use tuner::{EvalRecord, TuneConfig, TuneResult};
