//! Budgeted primal stochastic subgradient descent (Pegasos-style schedule,
//! learning rate 1/(lambda t) with lambda = 1/(C n)). The support set is
//! capped at `cfg.budget`; on overflow the two nearest support vectors among
//! a sampled candidate set are merged on their connecting line, preserving
//! the projected coefficient mass.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::dataio::{Dataset, SparseVector};
use crate::error::Result;
use crate::kernel::{rbf, squared_distance};
use crate::solvers::{check_train_preconditions, Deadline, ModelMeta, SvmModel, TrainConfig};

const MERGE_CANDIDATE_PAIRS: usize = 64;

struct BudgetModel {
    vectors: Vec<SparseVector>,
    /// Unscaled weights; the effective coefficient is `scale * weights[p]`.
    weights: Vec<f64>,
    scale: f64,
}

impl BudgetModel {
    fn decision(&self, x: &SparseVector, gamma: f64) -> f64 {
        let p = crate::kernel::KernelParams { gamma };
        self.scale
            * self
                .vectors
                .iter()
                .zip(&self.weights)
                .map(|(v, &w)| w * rbf(v, x, p))
                .sum::<f64>()
    }

    fn renormalize(&mut self) {
        if self.scale < 1e-9 {
            for w in &mut self.weights {
                *w *= self.scale;
            }
            self.scale = 1.0;
        }
    }

    fn prune_zeros(&mut self) {
        let mut p = 0;
        while p < self.vectors.len() {
            if self.weights[p] == 0.0 {
                self.vectors.swap_remove(p);
                self.weights.swap_remove(p);
            } else {
                p += 1;
            }
        }
    }

    /// Merges the closest pair among sampled candidates. Deterministic given
    /// the RNG state.
    fn merge_closest(&mut self, gamma: f64, rng: &mut ChaCha8Rng) {
        let n = self.vectors.len();
        if n < 2 {
            return;
        }
        let mut best: Option<(usize, usize, f64)> = None;
        for _ in 0..MERGE_CANDIDATE_PAIRS {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            let d = squared_distance(&self.vectors[a], &self.vectors[b]);
            if best.is_none_or(|(_, _, bd)| d < bd) {
                best = Some((a.min(b), a.max(b), d));
            }
        }
        let (a, b, _) = best.expect("n >= 2");
        let (wa, wb) = (self.weights[a], self.weights[b]);
        let (na, nb) = (wa.abs(), wb.abs());
        if na + nb == 0.0 {
            // Both dead; drop one, the other goes with the next prune.
            self.vectors.swap_remove(b);
            self.weights.swap_remove(b);
            return;
        }
        let h = na / (na + nb);
        let z = SparseVector::linear_combination(h, &self.vectors[a], 1.0 - h, &self.vectors[b]);
        let p = crate::kernel::KernelParams { gamma };
        let wz = wa * rbf(&self.vectors[a], &z, p) + wb * rbf(&self.vectors[b], &z, p);
        // Remove b first (b > a) so a's position stays valid.
        self.vectors.swap_remove(b);
        self.weights.swap_remove(b);
        self.vectors.swap_remove(a);
        self.weights.swap_remove(a);
        if wz != 0.0 {
            self.vectors.push(z);
            self.weights.push(wz);
        }
    }
}

pub fn train_bsgd(ds: &Dataset, cfg: &TrainConfig) -> Result<SvmModel> {
    check_train_preconditions(ds, cfg)?;
    let deadline = Deadline::start(cfg.deadline);
    let n = ds.len();
    let gamma = cfg.kernel.gamma;
    let lambda = 1.0 / (cfg.c * n as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = BudgetModel {
        vectors: Vec::new(),
        weights: Vec::new(),
        scale: 1.0,
    };
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0u64;

    'outer: for _epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        for &k in &order {
            if deadline.expired() {
                break 'outer;
            }
            t += 1;
            // Regularizer step shrinks all coefficients by (1 - 1/t).
            if t > 1 {
                model.scale *= 1.0 - 1.0 / t as f64;
            }
            let margin = f64::from(ds.labels[k]) * model.decision(&ds.examples[k], gamma);
            if margin < 1.0 {
                let step = f64::from(ds.labels[k]) / (lambda * t as f64);
                model.vectors.push(ds.examples[k].clone());
                model.weights.push(step / model.scale);
                while model.vectors.len() > cfg.budget {
                    model.merge_closest(gamma, &mut rng);
                    model.prune_zeros();
                }
            }
            model.renormalize();
            debug_assert!(model.vectors.len() <= cfg.budget);
        }
    }
    // "Converged" here means the full epoch budget ran before the deadline.
    let converged = t == (cfg.max_epochs * n) as u64;

    model.prune_zeros();
    let mut coefficients: Vec<f64> = model.weights.iter().map(|&w| w * model.scale).collect();
    let mut support_vectors = model.vectors;
    // Drop coefficients that underflowed to zero after scaling.
    let mut p = 0;
    while p < coefficients.len() {
        if coefficients[p] == 0.0 {
            coefficients.swap_remove(p);
            support_vectors.swap_remove(p);
        } else {
            p += 1;
        }
    }
    Ok(SvmModel {
        support_vectors,
        coefficients,
        bias: 0.0,
        kernel: cfg.kernel,
        meta: ModelMeta {
            solver: "bsgd".into(),
            c: cfg.c,
            iterations: t,
            elapsed_seconds: deadline.elapsed_seconds(),
            dual_objective: None,
            converged,
        },
    })
}
