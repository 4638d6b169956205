//! Online SMO in the LASVM style: one PROCESS step (insert the most
//! violating new candidate pair) followed by one REPROCESS step per arriving
//! example, epochs over reseeded shuffles, and a FINISHING phase (REPROCESS
//! to tolerance) once an epoch completes without insertions.
//!
//! Coefficients are kept in the signed convention `a_s in [A_s, B_s]` with
//! `A_s = min(0, C y_s)`, `B_s = max(0, C y_s)`; the signed value equals
//! `alpha_s * y_s` of the standard dual, so `sum_s a_s = 0` is the equality
//! constraint and is preserved by every pair update.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::dataio::Dataset;
use crate::error::Result;
use crate::kernel::rbf;
use crate::solvers::{check_train_preconditions, Deadline, ModelMeta, SvmModel, TrainConfig};

/// Support set with an incrementally maintained S x S kernel matrix and
/// gradients g_s = y_s - sum_t a_t K_st.
struct SupportSet<'a> {
    ds: &'a Dataset,
    cfg: &'a TrainConfig,
    /// Example ids of current members.
    ids: Vec<usize>,
    /// Signed coefficients, aligned with `ids`.
    alpha: Vec<f64>,
    grad: Vec<f64>,
    /// kmat[p][q] = k(x_ids[p], x_ids[q]).
    kmat: Vec<Vec<f64>>,
    /// Position of each example in `ids`, or usize::MAX.
    pos: Vec<usize>,
}

impl<'a> SupportSet<'a> {
    fn new(ds: &'a Dataset, cfg: &'a TrainConfig) -> Self {
        Self {
            ds,
            cfg,
            ids: Vec::new(),
            alpha: Vec::new(),
            grad: Vec::new(),
            kmat: Vec::new(),
            pos: vec![usize::MAX; ds.len()],
        }
    }

    fn contains(&self, k: usize) -> bool {
        self.pos[k] != usize::MAX
    }

    fn y(&self, p: usize) -> f64 {
        f64::from(self.ds.labels[self.ids[p]])
    }

    fn upper(&self, p: usize) -> f64 {
        (self.cfg.c * self.y(p)).max(0.0)
    }

    fn lower(&self, p: usize) -> f64 {
        (self.cfg.c * self.y(p)).min(0.0)
    }

    /// Gradient of a candidate example not yet in S.
    fn gradient_of(&self, k: usize) -> f64 {
        let xk = &self.ds.examples[k];
        let mut g = f64::from(self.ds.labels[k]);
        for p in 0..self.ids.len() {
            if self.alpha[p] != 0.0 {
                g -= self.alpha[p] * rbf(&self.ds.examples[self.ids[p]], xk, self.cfg.kernel);
            }
        }
        g
    }

    /// Inserts example `k` with a = 0; returns its position.
    fn insert(&mut self, k: usize, grad: f64) -> usize {
        let xk = &self.ds.examples[k];
        let col: Vec<f64> = self
            .ids
            .iter()
            .map(|&id| rbf(&self.ds.examples[id], xk, self.cfg.kernel))
            .collect();
        for (row, &v) in self.kmat.iter_mut().zip(&col) {
            row.push(v);
        }
        let mut new_row = col;
        new_row.push(rbf(xk, xk, self.cfg.kernel));
        self.kmat.push(new_row);
        self.ids.push(k);
        self.alpha.push(0.0);
        self.grad.push(grad);
        self.pos[k] = self.ids.len() - 1;
        self.ids.len() - 1
    }

    fn remove(&mut self, p: usize) {
        let last = self.ids.len() - 1;
        self.pos[self.ids[p]] = usize::MAX;
        self.ids.swap_remove(p);
        self.alpha.swap_remove(p);
        self.grad.swap_remove(p);
        self.kmat.swap_remove(p);
        for row in &mut self.kmat {
            row.swap_remove(p);
        }
        if p != last {
            self.pos[self.ids[p]] = p;
        }
    }

    /// argmax g over members with a < B (feasible ascent as "i").
    fn arg_max_up(&self) -> Option<usize> {
        let mut best = None;
        let mut best_g = f64::NEG_INFINITY;
        for p in 0..self.ids.len() {
            if self.alpha[p] < self.upper(p) && self.grad[p] > best_g {
                best_g = self.grad[p];
                best = Some(p);
            }
        }
        best
    }

    /// argmin g over members with a > A (feasible descent as "j").
    fn arg_min_down(&self) -> Option<usize> {
        let mut best = None;
        let mut best_g = f64::INFINITY;
        for p in 0..self.ids.len() {
            if self.alpha[p] > self.lower(p) && self.grad[p] < best_g {
                best_g = self.grad[p];
                best = Some(p);
            }
        }
        best
    }

    /// Pair update along (i up, j down): a_i += lambda, a_j -= lambda.
    fn pair_update(&mut self, i: usize, j: usize) {
        let eta = (self.kmat[i][i] + self.kmat[j][j] - 2.0 * self.kmat[i][j]).max(1e-12);
        let lambda = ((self.grad[i] - self.grad[j]) / eta)
            .min(self.upper(i) - self.alpha[i])
            .min(self.alpha[j] - self.lower(j));
        self.alpha[i] += lambda;
        self.alpha[j] -= lambda;
        for p in 0..self.ids.len() {
            self.grad[p] -= lambda * (self.kmat[i][p] - self.kmat[j][p]);
        }
        debug_assert!(self.alpha[i] >= self.lower(i) - 1e-9 && self.alpha[i] <= self.upper(i) + 1e-9);
        debug_assert!(self.alpha[j] >= self.lower(j) - 1e-9 && self.alpha[j] <= self.upper(j) + 1e-9);
        debug_assert!(self.alpha.iter().sum::<f64>().abs() < 1e-6 * self.cfg.c);
    }

    /// Dual objective W = 1/2 (sum_s a_s y_s + sum_s a_s g_s).
    fn objective(&self) -> f64 {
        let mut acc = 0.0;
        for p in 0..self.ids.len() {
            acc += self.alpha[p] * (self.y(p) + self.grad[p]);
        }
        0.5 * acc
    }
}

/// PROCESS(k): insert example k if it forms an epsilon-violating pair with
/// the current support set, then take one pair step. Returns true on insert.
fn process(s: &mut SupportSet, k: usize, epsilon: f64) -> bool {
    if s.contains(k) {
        return false;
    }
    let gk = s.gradient_of(k);
    let yk = s.ds.labels[k];
    let violating = if yk > 0 {
        // k plays "i": needs a partner j with g_k - g_j > epsilon.
        s.arg_min_down().is_some_and(|j| gk - s.grad[j] > epsilon)
    } else {
        s.arg_max_up().is_some_and(|i| s.grad[i] - gk > epsilon)
    };
    if !violating {
        return false;
    }
    let p = s.insert(k, gk);
    if yk > 0 {
        let j = s.arg_min_down().expect("checked above");
        s.pair_update(p, j);
    } else {
        let i = s.arg_max_up().expect("checked above");
        s.pair_update(i, p);
    }
    true
}

/// One REPROCESS step: optimize the most violating pair inside S, clean
/// blatant non support vectors, and return the current KKT gap.
fn reprocess(s: &mut SupportSet, epsilon: f64) -> f64 {
    let (Some(i), Some(j)) = (s.arg_max_up(), s.arg_min_down()) else {
        return 0.0;
    };
    let gap = s.grad[i] - s.grad[j];
    if gap <= epsilon {
        return gap;
    }
    s.pair_update(i, j);
    let (Some(i), Some(j)) = (s.arg_max_up(), s.arg_min_down()) else {
        return 0.0;
    };
    let (gi, gj) = (s.grad[i], s.grad[j]);
    let mut p = 0;
    while p < s.ids.len() {
        if s.alpha[p] == 0.0
            && ((s.y(p) < 0.0 && s.grad[p] >= gi) || (s.y(p) > 0.0 && s.grad[p] <= gj))
        {
            s.remove(p);
        } else {
            p += 1;
        }
    }
    gi - gj
}

pub fn train_lasvm(ds: &Dataset, cfg: &TrainConfig) -> Result<SvmModel> {
    check_train_preconditions(ds, cfg)?;
    let deadline = Deadline::start(cfg.deadline);
    let n = ds.len();
    let mut s = SupportSet::new(ds, cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut iterations = 0u64;
    let mut converged = false;
    let mut order: Vec<usize> = (0..n).collect();

    // Seed with the first example of each class (a = 0).
    if !deadline.expired() {
        for target in [1i8, -1i8] {
            if let Some(k) = (0..n).find(|&k| ds.labels[k] == target) {
                let g = s.gradient_of(k);
                s.insert(k, g);
            }
        }
    }

    'outer: while !deadline.expired() {
        order.shuffle(&mut rng);
        let mut insertions = 0usize;
        for &k in &order {
            if deadline.expired() {
                break 'outer;
            }
            if process(&mut s, k, cfg.epsilon) {
                insertions += 1;
            }
            reprocess(&mut s, cfg.epsilon);
            iterations += 1;
        }
        if insertions == 0 {
            // FINISHING: reprocess to tolerance if the deadline allows.
            loop {
                if deadline.expired() {
                    break 'outer;
                }
                let gap = reprocess(&mut s, cfg.epsilon);
                iterations += 1;
                if gap <= cfg.epsilon {
                    converged = true;
                    break 'outer;
                }
            }
        }
    }

    // Bias from the current most violating pair.
    let bias = match (s.arg_max_up(), s.arg_min_down()) {
        (Some(i), Some(j)) => (s.grad[i] + s.grad[j]) / 2.0,
        _ => 0.0,
    };
    let objective = s.objective();
    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for p in 0..s.ids.len() {
        if s.alpha[p] != 0.0 {
            support_vectors.push(ds.examples[s.ids[p]].clone());
            coefficients.push(s.alpha[p]);
        }
    }
    let bias = if support_vectors.is_empty() { 0.0 } else { bias };
    Ok(SvmModel {
        support_vectors,
        coefficients,
        bias,
        kernel: cfg.kernel,
        meta: ModelMeta {
            solver: "lasvm".into(),
            c: cfg.c,
            iterations,
            elapsed_seconds: deadline.elapsed_seconds(),
            dual_objective: Some(objective),
            converged,
        },
    })
}
