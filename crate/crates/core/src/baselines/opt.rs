//! Offline optimum `f* = min f`, the reference for suboptimality.
//!
//! Gradient descent with backtracking warms up; serial SVRG epochs then drive
//! the gradient norm below the tolerance. Both use the same objective code as
//! every other algorithm.

use log::debug;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::objective::LogisticObjective;
use crate::sparse::DenseModel;

use super::gd::{gd_round, GdStep};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimumConfig {
    /// Stop once `‖∇f(w)‖ ≤ tol`.
    pub tol: f64,
    /// Gradient-evaluation budget, counted in full-gradient equivalents.
    pub max_evaluations: usize,
    pub warmup_iters: usize,
    pub seed: u64,
}

impl OptimumConfig {
    pub fn with_tol(tol: f64) -> Self {
        OptimumConfig {
            tol,
            max_evaluations: 1_000_000,
            warmup_iters: 50,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Optimum {
    pub w: DenseModel,
    pub value: f64,
    pub grad_norm: f64,
    /// Full-gradient equivalents spent.
    pub evaluations: usize,
}

fn norm(g: &[f64]) -> f64 {
    g.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// One serial SVRG epoch of `m` steps from snapshot `w̃` with `∇f(w̃) = g`.
pub fn serial_svrg_epoch(
    obj: &LogisticObjective,
    w_tilde: &[f64],
    g: &[f64],
    h: f64,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let n = obj.num_examples();
    let lambda = obj.lambda();
    let mut w = w_tilde.to_vec();
    for _ in 0..m {
        let i = rng.random_range(0..n);
        let diff = obj.loss_coefficient(i, &w) - obj.loss_coefficient(i, w_tilde);
        for j in 0..w.len() {
            w[j] -= h * (g[j] + lambda * (w[j] - w_tilde[j]));
        }
        obj.add_example(i, -h * diff, &mut w);
    }
    w
}

pub fn solve_optimum(obj: &LogisticObjective, cfg: &OptimumConfig) -> Result<Optimum> {
    if !(obj.lambda() > 0.0) {
        return Err(Error::Config("the optimum solver needs lambda > 0".into()));
    }
    let n = obj.num_examples();
    let mut evals = 0usize;
    let mut w = DenseModel::zeros(obj.dim());
    let mut g = obj.full_gradient(&w)?;
    evals += 1;

    let mut eta = 1.0;
    for _ in 0..cfg.warmup_iters {
        if norm(&g) <= cfg.tol {
            break;
        }
        let before = w.as_slice()[..].to_vec();
        w = gd_round(obj, &w, &GdStep::backtracking(2.0 * eta))?;
        // recover the accepted step from any moved coordinate
        if let Some(j) = g.iter().position(|v| v.abs() > 0.0) {
            eta = (before[j] - w.as_slice()[j]) / g[j];
        }
        g = obj.full_gradient(&w)?;
        evals += 2;
    }

    let l_max = (0..n)
        .map(|i| obj.example_squared_norm(i))
        .fold(0.0, f64::max)
        / 4.0
        + obj.lambda();
    let mut h = 0.2 / l_max;
    let m = 2 * n;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut f = obj.value(&w)?;
    while norm(&g) > cfg.tol {
        if evals >= cfg.max_evaluations {
            return Err(Error::IterationCap {
                evaluations: evals,
                grad_norm: norm(&g),
            });
        }
        let cand = DenseModel::from(serial_svrg_epoch(obj, w.as_slice(), &g, h, m, &mut rng));
        evals += 1 + 2 * m / n;
        let f_cand = obj.value(&cand)?;
        let g_cand = obj.full_gradient(&cand)?;
        evals += 1;
        if f_cand.is_finite() && (f_cand <= f || norm(&g_cand) < norm(&g)) {
            debug!("svrg epoch: f = {f_cand:e}, |g| = {:e}", norm(&g_cand));
            w = cand;
            g = g_cand;
            f = f_cand;
        } else {
            h *= 0.5;
        }
    }
    let grad_norm = norm(&g);
    Ok(Optimum {
        value: obj.value(&w)?,
        w,
        grad_norm,
        evaluations: evals,
    })
}
