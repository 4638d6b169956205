//! Shared fixtures for the criterion benchmarks.

use svmtune::dataio::{make_synthetic, Dataset, SyntheticKind};

pub fn checkerboard(n: usize) -> Dataset {
    make_synthetic(SyntheticKind::Checkerboard, n, 0.05, 42).expect("valid synthetic config")
}
