//! Sparse dataset parsing, synthetic benchmark generation and
//! reproducible train/validation/test splits.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse feature vector: strictly increasing 1-based indices, finite values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Builds a sparse vector, validating the index/value invariants.
    pub fn new(entries: Vec<(u32, f64)>) -> Result<Self> {
        let mut prev = 0u32;
        for &(idx, val) in &entries {
            if idx == 0 || idx <= prev {
                return Err(Error::Config(format!("non-increasing index {idx}")));
            }
            if !val.is_finite() {
                return Err(Error::Config(format!("non-finite value at index {idx}")));
            }
            prev = idx;
        }
        Ok(Self { entries })
    }

    /// Dense 2-d helper used by the synthetic generators.
    pub fn from_dense2(x1: f64, x2: f64) -> Self {
        let mut entries = Vec::with_capacity(2);
        if x1 != 0.0 {
            entries.push((1, x1));
        }
        if x2 != 0.0 {
            entries.push((2, x2));
        }
        Self { entries }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn max_index(&self) -> u32 {
        self.entries.last().map_or(0, |&(i, _)| i)
    }

    /// Dense coordinate lookup (0 when absent).
    pub fn get(&self, index: u32) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map_or(0.0, |pos| self.entries[pos].1)
    }

    /// `a * x + b * y` over the union of the two index sets.
    pub fn linear_combination(a: f64, x: &SparseVector, b: f64, y: &SparseVector) -> SparseVector {
        let mut entries = Vec::with_capacity(x.entries.len() + y.entries.len());
        let (mut i, mut j) = (0, 0);
        while i < x.entries.len() || j < y.entries.len() {
            let v = match (x.entries.get(i), y.entries.get(j)) {
                (Some(&(xi, xv)), Some(&(yi, yv))) if xi == yi => {
                    i += 1;
                    j += 1;
                    (xi, a * xv + b * yv)
                }
                (Some(&(xi, xv)), Some(&(yi, _))) if xi < yi => {
                    i += 1;
                    (xi, a * xv)
                }
                (Some(_), Some(&(yi, yv))) => {
                    j += 1;
                    (yi, b * yv)
                }
                (Some(&(xi, xv)), None) => {
                    i += 1;
                    (xi, a * xv)
                }
                (None, Some(&(yi, yv))) => {
                    j += 1;
                    (yi, b * yv)
                }
                (None, None) => unreachable!(),
            };
            if v.1 != 0.0 {
                entries.push(v);
            }
        }
        SparseVector { entries }
    }
}

/// Binary-labeled sparse dataset with a name for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub examples: Vec<SparseVector>,
    pub labels: Vec<i8>,
    pub dimension: u32,
    pub name: String,
}

impl Dataset {
    pub fn new(examples: Vec<SparseVector>, labels: Vec<i8>, name: impl Into<String>) -> Result<Self> {
        if examples.is_empty() || examples.len() != labels.len() {
            return Err(Error::Config(format!(
                "dataset needs |examples| = |labels| >= 1, got {} / {}",
                examples.len(),
                labels.len()
            )));
        }
        if labels.iter().any(|&y| y != 1 && y != -1) {
            return Err(Error::Config("labels must be +1 or -1".into()));
        }
        let dimension = examples.iter().map(SparseVector::max_index).max().unwrap_or(0);
        Ok(Self {
            examples,
            labels,
            dimension,
            name: name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn has_both_classes(&self) -> bool {
        self.labels.iter().any(|&y| y == 1) && self.labels.iter().any(|&y| y == -1)
    }

    fn subset(&self, indices: &[usize], suffix: &str) -> Dataset {
        Dataset {
            examples: indices.iter().map(|&i| self.examples[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            dimension: self.dimension,
            name: format!("{}/{suffix}", self.name),
        }
    }
}

/// How raw numeric labels map onto {-1, +1}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LabelRule {
    /// `label > 0` maps to +1, `label <= 0` maps to -1.
    Sign,
    /// One-vs-rest: the chosen class maps to +1, everything else to -1.
    OneVsRest(f64),
}

/// Parses the LIBSVM sparse text format: `<label> <idx>:<val> ...` per line,
/// `#` starts a comment, LF or CRLF endings.
pub fn parse_libsvm<R: BufRead>(reader: R, rule: LabelRule, name: &str) -> Result<Dataset> {
    let mut examples = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let content = line.split('#').next().unwrap_or("").trim_end_matches('\r');
        let mut tokens = content.split_whitespace();
        let Some(label_tok) = tokens.next() else {
            continue;
        };
        let raw: f64 = label_tok.parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("malformed label `{label_tok}`"),
        })?;
        let label = match rule {
            LabelRule::Sign => {
                if raw > 0.0 {
                    1
                } else {
                    -1
                }
            }
            LabelRule::OneVsRest(class) => {
                if raw == class {
                    1
                } else {
                    -1
                }
            }
        };
        let mut entries = Vec::new();
        let mut prev = 0u32;
        for tok in tokens {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("malformed token `{tok}`"),
            })?;
            let idx: u32 = idx_s.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("malformed index `{idx_s}`"),
            })?;
            let val: f64 = val_s.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("malformed value `{val_s}`"),
            })?;
            if idx == 0 || idx <= prev {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("non-increasing index at line {lineno}"),
                });
            }
            if !val.is_finite() {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("non-finite value at line {lineno}"),
                });
            }
            prev = idx;
            entries.push((idx, val));
        }
        examples.push(SparseVector { entries });
        labels.push(label);
    }
    Dataset::new(examples, labels, name)
}

/// Writes a dataset back out in LIBSVM sparse text format.
pub fn write_libsvm<W: Write>(writer: &mut W, ds: &Dataset) -> Result<()> {
    for (x, &y) in ds.examples.iter().zip(&ds.labels) {
        write!(writer, "{}", if y > 0 { "+1" } else { "-1" })?;
        for &(idx, val) in x.entries() {
            write!(writer, " {idx}:{val}")?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

/// Train/validation/test split ratios plus the shuffling seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub ratios: (f64, f64, f64),
    pub seed: u64,
}

impl SplitSpec {
    /// The paper-style 2:1:1 split.
    pub fn two_one_one(seed: u64) -> Self {
        Self {
            ratios: (2.0, 1.0, 1.0),
            seed,
        }
    }
}

/// Splits a dataset into disjoint train/validation/test parts.
///
/// Sizes round down for validation and test; the remainder goes to train.
/// Identical `(ds, spec)` always reproduces the identical split.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    let (rt, rv, rs) = spec.ratios;
    if rt <= 0.0 || rv <= 0.0 || rs <= 0.0 {
        return Err(Error::Config("split ratios must be positive".into()));
    }
    let total = rt + rv + rs;
    let n = ds.len();
    let n_val = ((n as f64) * rv / total).floor() as usize;
    let n_test = ((n as f64) * rs / total).floor() as usize;
    let n_train = n - n_val - n_test;
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(Error::Config(format!(
            "dataset of size {n} too small for ratios {rt}:{rv}:{rs}"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    indices.shuffle(&mut rng);
    let train = ds.subset(&indices[..n_train], "train");
    let val = ds.subset(&indices[n_train..n_train + n_val], "val");
    let test = ds.subset(&indices[n_train + n_val..], "test");
    Ok((train, val, test))
}

/// Synthetic binary benchmark families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticKind {
    /// Two Gaussian blobs in disjoint half-planes; linearly separable at noise 0.
    TwoGaussians,
    /// 4x4 checkerboard on [0,4)^2 labeled by cell parity.
    Checkerboard,
    /// Two concentric rings crossed with quadrant parity (XOR structure).
    XorRings,
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SyntheticKind::TwoGaussians => "two-gaussians",
            SyntheticKind::Checkerboard => "checkerboard",
            SyntheticKind::XorRings => "xor-rings",
        };
        f.write_str(s)
    }
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-gaussians" => Ok(SyntheticKind::TwoGaussians),
            "checkerboard" => Ok(SyntheticKind::Checkerboard),
            "xor-rings" => Ok(SyntheticKind::XorRings),
            other => Err(Error::Config(format!("unknown synthetic kind `{other}`"))),
        }
    }
}

impl SyntheticKind {
    /// The noise-free generating rule, used as a labeling oracle in tests.
    pub fn rule_label(&self, x: &SparseVector) -> i8 {
        let (x1, x2) = (x.get(1), x.get(2));
        match self {
            SyntheticKind::TwoGaussians => {
                if x1 > 0.0 {
                    1
                } else {
                    -1
                }
            }
            SyntheticKind::Checkerboard => {
                let parity = (x1.floor() as i64 + x2.floor() as i64).rem_euclid(2);
                if parity == 0 {
                    1
                } else {
                    -1
                }
            }
            SyntheticKind::XorRings => {
                let r = (x1 * x1 + x2 * x2).sqrt();
                let theta = x2.atan2(x1).rem_euclid(std::f64::consts::TAU);
                let quadrant = (theta / std::f64::consts::FRAC_PI_2).floor() as i64 % 4;
                let outer = r > 1.5;
                if outer ^ (quadrant % 2 == 0) {
                    1
                } else {
                    -1
                }
            }
        }
    }
}

/// Generates a balanced synthetic dataset.
///
/// Labels alternate (+1 first) so |#pos - #neg| <= 1 always holds. `noise`
/// is the probability that a point's features are drawn from the opposite
/// class region while the label stays fixed, so the Bayes error of the
/// resulting task is about the noise level.
pub fn make_synthetic(kind: SyntheticKind, n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n < 4 {
        return Err(Error::Config(format!("synthetic datasets need n >= 4, got {n}")));
    }
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::Config(format!("noise must lie in [0,1], got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut examples = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label: i8 = if i % 2 == 0 { 1 } else { -1 };
        let flipped = rng.gen::<f64>() < noise;
        let region = if flipped { -label } else { label };
        let x = sample_region(kind, region, &mut rng);
        examples.push(x);
        labels.push(label);
    }
    Dataset::new(examples, labels, format!("{kind}-n{n}-s{seed}"))
}

fn sample_region(kind: SyntheticKind, region: i8, rng: &mut ChaCha8Rng) -> SparseVector {
    match kind {
        SyntheticKind::TwoGaussians => {
            let g1: f64 = standard_normal(rng);
            let g2: f64 = standard_normal(rng);
            let x1 = f64::from(region) * (1.5 + g1.abs());
            let x2 = 2.0 * g2;
            SparseVector::from_dense2(x1, x2)
        }
        SyntheticKind::Checkerboard => loop {
            let x1 = rng.gen::<f64>() * 4.0;
            let x2 = rng.gen::<f64>() * 4.0;
            let x = SparseVector::from_dense2(x1, x2);
            if kind.rule_label(&x) == region {
                return x;
            }
        },
        SyntheticKind::XorRings => {
            // Pick a (ring, quadrant) combination consistent with the region,
            // then jitter radius and angle inside safe bands.
            let outer = rng.gen::<bool>();
            let even_quadrant = (region == 1) != outer;
            let quadrant = if even_quadrant {
                2 * i64::from(rng.gen::<bool>())
            } else {
                2 * i64::from(rng.gen::<bool>()) + 1
            };
            let base_r = if outer { 2.0 } else { 1.0 };
            let r = (base_r + 0.15 * standard_normal(rng)).clamp(
                if outer { 1.6 } else { 0.5 },
                if outer { 2.5 } else { 1.4 },
            );
            let u = 0.02 + 0.96 * rng.gen::<f64>();
            let theta = (quadrant as f64 + u) * std::f64::consts::FRAC_PI_2;
            SparseVector::from_dense2(r * theta.cos(), r * theta.sin())
        }
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; two uniforms per draw keeps the stream layout simple.
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Rescales every feature to [0,1] using per-feature min/max over `ds`.
/// Constant features map to 0.
pub fn scale_unit(ds: &Dataset) -> Dataset {
    let dim = ds.dimension as usize;
    let mut min = vec![f64::INFINITY; dim + 1];
    let mut max = vec![f64::NEG_INFINITY; dim + 1];
    for x in &ds.examples {
        // Implicit zeros participate in the ranges.
        let mut seen = vec![false; dim + 1];
        for &(i, v) in x.entries() {
            let i = i as usize;
            min[i] = min[i].min(v);
            max[i] = max[i].max(v);
            seen[i] = true;
        }
        for i in 1..=dim {
            if !seen[i] {
                min[i] = min[i].min(0.0);
                max[i] = max[i].max(0.0);
            }
        }
    }
    let examples = ds
        .examples
        .iter()
        .map(|x| {
            let entries = x
                .entries()
                .iter()
                .filter_map(|&(i, v)| {
                    let iu = i as usize;
                    let range = max[iu] - min[iu];
                    if range <= 0.0 {
                        return None;
                    }
                    let scaled = (v - min[iu]) / range;
                    (scaled != 0.0).then_some((i, scaled))
                })
                .collect();
            SparseVector { entries }
        })
        .collect();
    Dataset {
        examples,
        labels: ds.labels.clone(),
        dimension: ds.dimension,
        name: ds.name.clone(),
    }
}
