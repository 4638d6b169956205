//! Batch SMO on the standard SVM dual with most-violating-pair selection.
//!
//! Minimizes f(a) = 1/2 a'Qa - e'a subject to 0 <= a_i <= C and
//! sum_i a_i y_i = 0, with Q_ij = y_i y_j k(x_i, x_j). The full gradient is
//! maintained; each pair update costs two kernel rows.

use crate::dataio::Dataset;
use crate::error::Result;
use crate::kernel::KernelCache;
use crate::solvers::{check_train_preconditions, Deadline, ModelMeta, SvmModel, TrainConfig};

pub fn train_smo(ds: &Dataset, cfg: &TrainConfig) -> Result<SvmModel> {
    check_train_preconditions(ds, cfg)?;
    let deadline = Deadline::start(cfg.deadline);
    let n = ds.len();
    let y: Vec<f64> = ds.labels.iter().map(|&v| f64::from(v)).collect();
    let c = cfg.c;

    let mut alpha = vec![0.0f64; n];
    // Gradient of the minimization objective; -1 at alpha = 0.
    let mut grad = vec![-1.0f64; n];
    let mut cache = KernelCache::new(cfg.cache_bytes);
    let mut iterations = 0u64;
    let mut converged = false;

    loop {
        if deadline.expired() {
            break;
        }
        // Most violating pair: i maximizes -y g over the "up" set,
        // j minimizes -y g over the "down" set.
        let mut i = usize::MAX;
        let mut j = usize::MAX;
        let mut m_val = f64::NEG_INFINITY;
        let mut min_val = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let up = if y[t] > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
            let down = if y[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
            if up && v > m_val {
                m_val = v;
                i = t;
            }
            if down && v < min_val {
                min_val = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || m_val - min_val < cfg.epsilon {
            converged = i != usize::MAX && j != usize::MAX;
            break;
        }

        let row_i = cache.row(ds, i, cfg.kernel).into_owned();
        let row_j = cache.row(ds, j, cfg.kernel).into_owned();
        let eta = (row_i[i] + row_j[j] - 2.0 * row_i[j]).max(1e-12);
        // Step along alpha_i += y_i t, alpha_j -= y_j t, clipped to the box.
        let mut step = (m_val - min_val) / eta;
        step = step.min(if y[i] > 0.0 { c - alpha[i] } else { alpha[i] });
        step = step.min(if y[j] > 0.0 { alpha[j] } else { c - alpha[j] });
        alpha[i] += y[i] * step;
        alpha[j] -= y[j] * step;
        // Numerical guard at the box boundary.
        alpha[i] = alpha[i].clamp(0.0, c);
        alpha[j] = alpha[j].clamp(0.0, c);
        for t in 0..n {
            grad[t] += y[t] * step * (row_i[t] - row_j[t]);
        }
        iterations += 1;
        debug_assert!(alpha[i] >= 0.0 && alpha[i] <= c);
        debug_assert!(alpha[j] >= 0.0 && alpha[j] <= c);
    }

    Ok(build_model(ds, cfg, &alpha, &grad, &y, iterations, converged, &deadline))
}

#[allow(clippy::too_many_arguments)]
fn build_model(
    ds: &Dataset,
    cfg: &TrainConfig,
    alpha: &[f64],
    grad: &[f64],
    y: &[f64],
    iterations: u64,
    converged: bool,
    deadline: &Deadline,
) -> SvmModel {
    let n = ds.len();
    let c = cfg.c;

    // b from free support vectors, else the midpoint of the violating bounds.
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut m_val = f64::NEG_INFINITY;
    let mut min_val = f64::INFINITY;
    for t in 0..n {
        let v = -y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += v;
            free_count += 1;
        }
        let up = if y[t] > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
        let down = if y[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
        if up {
            m_val = m_val.max(v);
        }
        if down {
            min_val = min_val.min(v);
        }
    }
    let bias = if free_count > 0 {
        free_sum / free_count as f64
    } else if m_val.is_finite() && min_val.is_finite() {
        (m_val + min_val) / 2.0
    } else {
        0.0
    };

    // Dual (max) objective from the maintained gradient:
    // W = 1/2 sum_i a_i (1 - g_i).
    let objective = 0.5
        * alpha
            .iter()
            .zip(grad)
            .map(|(&a, &g)| a * (1.0 - g))
            .sum::<f64>();

    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support_vectors.push(ds.examples[t].clone());
            coefficients.push(alpha[t] * y[t]);
        }
    }
    let bias = if support_vectors.is_empty() { 0.0 } else { bias };
    SvmModel {
        support_vectors,
        coefficients,
        bias,
        kernel: cfg.kernel,
        meta: ModelMeta {
            solver: "smo".into(),
            c,
            iterations,
            elapsed_seconds: deadline.elapsed_seconds(),
            dual_objective: Some(objective),
            converged,
        },
    }
}
