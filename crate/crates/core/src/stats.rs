//! Friedman omnibus test and Holm step-down post-hoc comparisons over a
//! datasets x methods error matrix.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Normal};

use crate::error::{Error, Result};

/// Error rates: one row per dataset, one column per method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultMatrix {
    pub datasets: Vec<String>,
    pub methods: Vec<String>,
    /// values[row][col] in [0,1].
    pub values: Vec<Vec<f64>>,
}

impl ResultMatrix {
    pub fn new(datasets: Vec<String>, methods: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if datasets.len() < 2 || methods.len() < 2 {
            return Err(Error::Stats("need >= 2 datasets and >= 2 methods".into()));
        }
        if values.len() != datasets.len() || values.iter().any(|r| r.len() != methods.len()) {
            return Err(Error::Stats("matrix shape mismatch".into()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Stats("matrix has missing or non-finite cells".into()));
        }
        Ok(Self {
            datasets,
            methods,
            values,
        })
    }

    /// Reads the CSV the harness emits: `dataset,<method>,...` header.
    pub fn from_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let methods: Vec<String> = rdr
            .headers()?
            .iter()
            .skip(1)
            .map(str::to_string)
            .collect();
        let mut datasets = Vec::new();
        let mut values = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let mut it = record.iter();
            let name = it.next().unwrap_or("").to_string();
            let row: std::result::Result<Vec<f64>, _> = it.map(str::parse).collect();
            let row = row.map_err(|e| Error::Stats(format!("bad cell in row `{name}`: {e}")))?;
            datasets.push(name);
            values.push(row);
        }
        Self::new(datasets, methods, values)
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        write!(w, "dataset")?;
        for m in &self.methods {
            write!(w, ",{m}")?;
        }
        writeln!(w)?;
        for (name, row) in self.datasets.iter().zip(&self.values) {
            write!(w, "{name}")?;
            for v in row {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// One Holm step-down comparison against the control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolmEntry {
    pub comparison: String,
    pub raw_p: f64,
    pub adjusted_threshold: f64,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub friedman_statistic: f64,
    pub p_value: f64,
    pub mean_ranks: Vec<(String, f64)>,
    pub holm: Vec<HolmEntry>,
}

impl TestReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Average ranks within one row; ties share the mean of their positions.
fn row_ranks(row: &[f64]) -> Vec<f64> {
    let k = row.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| row[a].partial_cmp(&row[b]).unwrap());
    let mut ranks = vec![0.0; k];
    let mut i = 0;
    while i < k {
        let mut j = i;
        while j + 1 < k && row[order[j + 1]] == row[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) tie; average 1-based rank.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn mean_ranks(m: &ResultMatrix) -> Vec<f64> {
    let k = m.methods.len();
    let n = m.datasets.len() as f64;
    let mut sums = vec![0.0; k];
    for row in &m.values {
        for (s, r) in sums.iter_mut().zip(row_ranks(row)) {
            *s += r;
        }
    }
    sums.iter().map(|s| s / n).collect()
}

/// Friedman chi-squared statistic, its p-value from chi2(k-1), and the
/// per-method mean ranks.
pub fn friedman(m: &ResultMatrix) -> Result<(f64, f64, Vec<f64>)> {
    let k = m.methods.len() as f64;
    let n = m.datasets.len() as f64;
    let ranks = mean_ranks(m);
    let center = (k + 1.0) / 2.0;
    let stat = 12.0 * n / (k * (k + 1.0)) * ranks.iter().map(|r| (r - center).powi(2)).sum::<f64>();
    let dist = ChiSquared::new(k - 1.0).map_err(|e| Error::Stats(e.to_string()))?;
    let p = 1.0 - dist.cdf(stat);
    Ok((stat, p, ranks))
}

/// Iman-Davenport F correction of the Friedman statistic (optional variant).
pub fn friedman_iman_davenport(m: &ResultMatrix) -> Result<(f64, f64)> {
    let (chi2, _, _) = friedman(m)?;
    let k = m.methods.len() as f64;
    let n = m.datasets.len() as f64;
    let denom = n * (k - 1.0) - chi2;
    if denom <= 0.0 {
        return Ok((f64::INFINITY, 0.0));
    }
    let f = (n - 1.0) * chi2 / denom;
    let dist = FisherSnedecor::new(k - 1.0, (k - 1.0) * (n - 1.0))
        .map_err(|e| Error::Stats(e.to_string()))?;
    Ok((f, 1.0 - dist.cdf(f)))
}

/// Holm step-down comparisons of every method against `control`:
/// z = (Rbar_c - Rbar_j) / sqrt(k(k+1)/(6N)), two-sided p-values, rejections
/// while p_(i) <= alpha/(h-i), stopping at the first failure.
pub fn holm_posthoc(m: &ResultMatrix, control: &str, alpha: f64) -> Result<Vec<HolmEntry>> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::Stats(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let c_idx = m
        .methods
        .iter()
        .position(|name| name == control)
        .ok_or_else(|| Error::Stats(format!("control `{control}` not found")))?;
    let k = m.methods.len() as f64;
    let n = m.datasets.len() as f64;
    let ranks = mean_ranks(m);
    let se = (k * (k + 1.0) / (6.0 * n)).sqrt();
    let std_normal = Normal::new(0.0, 1.0).map_err(|e| Error::Stats(e.to_string()))?;

    let mut entries: Vec<HolmEntry> = m
        .methods
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != c_idx)
        .map(|(j, name)| {
            let z = (ranks[c_idx] - ranks[j]) / se;
            let raw_p = 2.0 * (1.0 - std_normal.cdf(z.abs()));
            HolmEntry {
                comparison: format!("{control} vs {name}"),
                raw_p,
                adjusted_threshold: 0.0,
                rejected: false,
            }
        })
        .collect();
    entries.sort_by(|a, b| a.raw_p.partial_cmp(&b.raw_p).unwrap());
    let h = entries.len();
    let mut still_rejecting = true;
    for (i, e) in entries.iter_mut().enumerate() {
        e.adjusted_threshold = alpha / (h - i) as f64;
        e.rejected = still_rejecting && e.raw_p <= e.adjusted_threshold;
        if !e.rejected {
            still_rejecting = false;
        }
    }
    Ok(entries)
}

/// Applies the Friedman test and a Holm post-hoc against `control`.
pub fn analyze(m: &ResultMatrix, control: &str, alpha: f64) -> Result<TestReport> {
    let (stat, p, ranks) = friedman(m)?;
    let holm = holm_posthoc(m, control, alpha)?;
    Ok(TestReport {
        friedman_statistic: stat,
        p_value: p,
        mean_ranks: m.methods.iter().cloned().zip(ranks).collect(),
        holm,
    })
}
