//! RBF kernel evaluation and a bounded per-run row cache.

use std::borrow::Cow;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataio::{Dataset, SparseVector};
use crate::error::{Error, Result};

/// RBF bandwidth parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub gamma: f64,
}

impl KernelParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be positive and finite, got {gamma}")));
        }
        Ok(Self { gamma })
    }
}

/// Squared Euclidean distance via a merge-walk over the sparse entries.
/// Avoids the cancellation of the norm-expansion formula for near-duplicates.
pub fn squared_distance(x: &SparseVector, x2: &SparseVector) -> f64 {
    let a = x.entries();
    let b = x2.entries();
    let (mut i, mut j) = (0, 0);
    let mut acc = 0.0;
    while i < a.len() && j < b.len() {
        let (ai, av) = a[i];
        let (bj, bv) = b[j];
        let d = match ai.cmp(&bj) {
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
                av - bv
            }
            std::cmp::Ordering::Less => {
                i += 1;
                av
            }
            std::cmp::Ordering::Greater => {
                j += 1;
                -bv
            }
        };
        acc += d * d;
    }
    for &(_, v) in &a[i..] {
        acc += v * v;
    }
    for &(_, v) in &b[j..] {
        acc += v * v;
    }
    acc
}

/// `k(x, x') = exp(-gamma * ||x - x'||^2)`, in (0, 1].
pub fn rbf(x: &SparseVector, x2: &SparseVector, p: KernelParams) -> f64 {
    (-p.gamma * squared_distance(x, x2)).exp()
}

/// LRU cache of kernel rows for a single training run.
///
/// A row `i` holds `k(x_i, x_j)` for all `j`. Cached values are exact: the
/// cache is transparent with respect to recomputation.
pub struct KernelCache {
    capacity_bytes: usize,
    rows: HashMap<usize, (Vec<f64>, u64)>,
    tick: u64,
    hits: u64,
    misses: u64,
}

pub const DEFAULT_CACHE_BYTES: usize = 256 << 20;

impl KernelCache {
    pub fn new(capacity_bytes: usize) -> Self {
        Self {
            capacity_bytes,
            rows: HashMap::new(),
            tick: 0,
            hits: 0,
            misses: 0,
        }
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }

    /// Returns the kernel row for example `i`, computing and caching on miss.
    /// Rows that do not fit in the byte budget are handed out owned and
    /// never stored.
    pub fn row(&mut self, ds: &Dataset, i: usize, p: KernelParams) -> Cow<'_, [f64]> {
        self.tick += 1;
        let tick = self.tick;
        let row_bytes = ds.len() * std::mem::size_of::<f64>();
        if self.rows.contains_key(&i) {
            self.hits += 1;
            let entry = self.rows.get_mut(&i).unwrap();
            entry.1 = tick;
            return Cow::Borrowed(&self.rows[&i].0);
        }
        self.misses += 1;
        let row = compute_row(ds, i, p);
        if row_bytes > self.capacity_bytes {
            return Cow::Owned(row);
        }
        while (self.rows.len() + 1) * row_bytes > self.capacity_bytes {
            // Evict the least recently used row.
            let oldest = self
                .rows
                .iter()
                .min_by_key(|(_, (_, t))| *t)
                .map(|(&k, _)| k)
                .expect("non-empty when over capacity");
            self.rows.remove(&oldest);
        }
        self.rows.insert(i, (row, tick));
        Cow::Borrowed(&self.rows[&i].0)
    }
}

fn compute_row(ds: &Dataset, i: usize, p: KernelParams) -> Vec<f64> {
    let xi = &ds.examples[i];
    ds.examples.iter().map(|xj| rbf(xi, xj, p)).collect()
}
