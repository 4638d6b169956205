//! Kriging (Gaussian-process) regression over the 2-D hyperparameter box,
//! with expected-improvement and lower-confidence-bound acquisitions.
//!
//! Covariance is an anisotropic squared exponential over coordinates
//! normalized to [0,1]^2, with a constant mean equal to the average
//! observation. Length-scales are fitted by maximizing the profile log
//! marginal likelihood with a deterministic 8-start coordinate search;
//! the signal variance is profiled out in closed form.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Half-width of the (log2 C, log2 gamma) search box.
pub const BOX_HALF_WIDTH: f64 = 15.0;

/// A point in the hyperparameter search box [-15, 15]^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperPoint {
    pub log2_c: f64,
    pub log2_gamma: f64,
}

impl HyperPoint {
    pub fn new(log2_c: f64, log2_gamma: f64) -> Result<Self> {
        let p = Self { log2_c, log2_gamma };
        if !p.in_box() {
            return Err(Error::Config(format!(
                "hyperpoint ({log2_c}, {log2_gamma}) outside [-15,15]^2"
            )));
        }
        Ok(p)
    }

    pub fn in_box(&self) -> bool {
        self.log2_c.abs() <= BOX_HALF_WIDTH
            && self.log2_gamma.abs() <= BOX_HALF_WIDTH
            && self.log2_c.is_finite()
            && self.log2_gamma.is_finite()
    }

    pub fn c(&self) -> f64 {
        self.log2_c.exp2()
    }

    pub fn gamma(&self) -> f64 {
        self.log2_gamma.exp2()
    }

    /// Normalized coordinates in [0,1]^2.
    pub fn to_unit(self) -> [f64; 2] {
        [
            (self.log2_c + BOX_HALF_WIDTH) / (2.0 * BOX_HALF_WIDTH),
            (self.log2_gamma + BOX_HALF_WIDTH) / (2.0 * BOX_HALF_WIDTH),
        ]
    }

    pub fn from_unit(u: [f64; 2]) -> Self {
        Self {
            log2_c: u[0] * 2.0 * BOX_HALF_WIDTH - BOX_HALF_WIDTH,
            log2_gamma: u[1] * 2.0 * BOX_HALF_WIDTH - BOX_HALF_WIDTH,
        }
    }
}

/// Fitted GP hyperparameters (normalized-coordinate scale).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpHyperParams {
    pub signal_variance: f64,
    pub length_scales: [f64; 2],
    pub nugget: f64,
}

/// An immutable fitted Kriging model.
pub struct Surrogate {
    design: Vec<[f64; 2]>,
    observations: Vec<f64>,
    mean: f64,
    params: GpHyperParams,
    chol: Cholesky<f64, Dyn>,
    /// (R + nugget I)^-1 (y - mean), correlation scale.
    weights: DVector<f64>,
}

const LENGTH_SCALE_MIN: f64 = 1e-2;
const LENGTH_SCALE_MAX: f64 = 10.0;
const NUGGET_MIN: f64 = 1e-8;
const NUGGET_MAX: f64 = 1e-2;

fn correlation(a: &[f64; 2], b: &[f64; 2], ls: [f64; 2]) -> f64 {
    let d0 = (a[0] - b[0]) / ls[0];
    let d1 = (a[1] - b[1]) / ls[1];
    (-0.5 * (d0 * d0 + d1 * d1)).exp()
}

fn correlation_matrix(design: &[[f64; 2]], ls: [f64; 2], nugget: f64) -> DMatrix<f64> {
    let n = design.len();
    DMatrix::from_fn(n, n, |i, j| {
        let r = correlation(&design[i], &design[j], ls);
        if i == j {
            r + nugget
        } else {
            r
        }
    })
}

/// Profile log marginal likelihood up to constants: -n ln(sigma2_hat) - ln det R.
/// Returns `None` when the Cholesky factorization fails.
fn profile_lml(design: &[[f64; 2]], resid: &DVector<f64>, ls: [f64; 2], nugget: f64) -> Option<f64> {
    let n = design.len() as f64;
    let rt = correlation_matrix(design, ls, nugget);
    let chol = Cholesky::new(rt)?;
    let solved = chol.solve(resid);
    let sigma2 = (resid.dot(&solved) / n).max(1e-12);
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    Some(-n * sigma2.ln() - log_det)
}

/// Fits a Kriging model to `(point, observation)` records.
///
/// Numerically singular covariances escalate the nugget by factors of 10
/// up to 1e-2 before failing.
pub fn fit(records: &[(HyperPoint, f64)]) -> Result<Surrogate> {
    if records.len() < 2 {
        return Err(Error::Config(format!(
            "surrogate fit needs >= 2 records, got {}",
            records.len()
        )));
    }
    for (p, v) in records {
        if !p.in_box() || !v.is_finite() {
            return Err(Error::Config("surrogate fit needs in-box points and finite errors".into()));
        }
    }
    let design: Vec<[f64; 2]> = records.iter().map(|(p, _)| p.to_unit()).collect();
    let ys: Vec<f64> = records.iter().map(|&(_, v)| v).collect();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let resid = DVector::from_iterator(ys.len(), ys.iter().map(|&v| v - mean));

    let mut nugget = NUGGET_MIN;
    loop {
        if let Some(s) = fit_with_nugget(&design, &ys, mean, &resid, nugget) {
            return Ok(s);
        }
        nugget *= 10.0;
        if nugget > NUGGET_MAX * 1.0001 {
            return Err(Error::Numerical(
                "covariance stayed singular up to the maximum nugget".into(),
            ));
        }
    }
}

fn fit_with_nugget(
    design: &[[f64; 2]],
    ys: &[f64],
    mean: f64,
    resid: &DVector<f64>,
    nugget: f64,
) -> Option<Surrogate> {
    // Deterministic multi-start coordinate search in log length-scale space.
    let starts: [[f64; 2]; 8] = [
        [0.05, 0.05],
        [0.2, 0.2],
        [0.7, 0.7],
        [2.0, 2.0],
        [0.2, 2.0],
        [2.0, 0.2],
        [0.05, 0.7],
        [0.7, 0.05],
    ];
    let (lo, hi) = (LENGTH_SCALE_MIN.ln(), LENGTH_SCALE_MAX.ln());
    let mut best: Option<([f64; 2], f64)> = None;
    for start in starts {
        let mut x = [start[0].ln(), start[1].ln()];
        let mut fx = profile_lml(design, resid, [x[0].exp(), x[1].exp()], nugget)?;
        let mut step = 0.8;
        let mut evals = 0;
        while step > 1e-2 && evals < 40 {
            let mut improved = false;
            for d in 0..2 {
                for sgn in [1.0, -1.0] {
                    let mut cand = x;
                    cand[d] = (cand[d] + sgn * step).clamp(lo, hi);
                    if cand[d] == x[d] {
                        continue;
                    }
                    let Some(f) = profile_lml(design, resid, [cand[0].exp(), cand[1].exp()], nugget)
                    else {
                        return None;
                    };
                    evals += 1;
                    if f > fx {
                        x = cand;
                        fx = f;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if best.is_none() || fx > best.unwrap().1 {
            best = Some((x, fx));
        }
    }
    let (lx, _) = best?;
    let ls = [lx[0].exp(), lx[1].exp()];
    let chol = Cholesky::new(correlation_matrix(design, ls, nugget))?;
    let weights = chol.solve(resid);
    let sigma2 = (resid.dot(&weights) / design.len() as f64).max(1e-12);
    Some(Surrogate {
        design: design.to_vec(),
        observations: ys.to_vec(),
        mean,
        params: GpHyperParams {
            signal_variance: sigma2,
            length_scales: ls,
            nugget,
        },
        chol,
        weights,
    })
}

impl Surrogate {
    pub fn params(&self) -> GpHyperParams {
        self.params
    }

    pub fn design_len(&self) -> usize {
        self.design.len()
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    /// GP posterior mean and standard deviation at `x`.
    pub fn posterior(&self, x: HyperPoint) -> (f64, f64) {
        let u = x.to_unit();
        let ls = self.params.length_scales;
        let r = DVector::from_iterator(
            self.design.len(),
            self.design.iter().map(|d| correlation(d, &u, ls)),
        );
        let mean = self.mean + r.dot(&self.weights);
        let solved = self.chol.solve(&r);
        let var = self.params.signal_variance * (1.0 + self.params.nugget - r.dot(&solved));
        (mean, var.max(0.0).sqrt())
    }

    /// Expected improvement below `incumbent` (minimization).
    pub fn ei(&self, x: HyperPoint, incumbent: f64) -> f64 {
        let (mu, sigma) = self.posterior(x);
        expected_improvement(mu, sigma, incumbent)
    }

    /// Lower confidence bound `mu - lambda * sigma`.
    pub fn lcb(&self, x: HyperPoint, lambda: f64) -> f64 {
        let (mu, sigma) = self.posterior(x);
        mu - lambda * sigma
    }
}

/// EI for minimization: (f* - mu) Phi(z) + sigma phi(z), z = (f* - mu)/sigma.
pub fn expected_improvement(mu: f64, sigma: f64, incumbent: f64) -> f64 {
    if sigma <= 0.0 {
        return (incumbent - mu).max(0.0);
    }
    let std_normal = Normal::new(0.0, 1.0).expect("valid parameters");
    let z = (incumbent - mu) / sigma;
    ((incumbent - mu) * std_normal.cdf(z) + sigma * std_normal.pdf(z)).max(0.0)
}
