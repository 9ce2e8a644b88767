//! CoCoA with a local dual coordinate ascent solver.
//!
//! Dual of the regularized logistic objective, with `b_i = y_i α_i ∈ [0, 1]`:
//!
//! `D(α) = (1/n) Σ_i H(b_i) − (λ/2)‖v‖²`,  `v = (1/(λn)) Σ_i α_i x_i`,
//!
//! where `H(b) = −b ln b − (1−b) ln(1−b)`. The primal iterate is `v`.
//!
//! Each round every node runs `H` coordinate steps on its own dual variables
//! against a private copy of `v`. Node changes are combined with weight
//! `γ = 1/K` (average) or `γ = 1` (add); the local subproblem's quadratic term
//! is scaled by `σ'`, which defaults to `1` for averaging and `K` for adding.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::RoundSink;
use crate::objective::LogisticObjective;
use crate::partition::Partition;
use crate::rng::stream_rng;
use crate::sparse::DenseModel;

/// Keeps `b` away from the boundary of `[0, 1]`, where the entropy's slope is infinite.
pub const FEASIBILITY_GUARD: f64 = 1e-12;
const SCALAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CocoaAggregation {
    Average,
    Add,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CocoaConfig {
    /// Coordinate steps per node per round (`H`).
    pub local_iters: usize,
    pub aggregation: CocoaAggregation,
    pub sigma_prime: Option<f64>,
    pub rounds: usize,
    pub seed: u64,
}

impl CocoaConfig {
    pub fn averaging(local_iters: usize, rounds: usize, seed: u64) -> Self {
        CocoaConfig {
            local_iters,
            aggregation: CocoaAggregation::Average,
            sigma_prime: None,
            rounds,
            seed,
        }
    }

    fn gamma(&self, k: usize) -> f64 {
        match self.aggregation {
            CocoaAggregation::Average => 1.0 / k as f64,
            CocoaAggregation::Add => 1.0,
        }
    }

    fn resolved_sigma_prime(&self, k: usize) -> f64 {
        self.sigma_prime.unwrap_or(match self.aggregation {
            CocoaAggregation::Average => 1.0,
            CocoaAggregation::Add => k as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub alpha: Vec<f64>,
    pub v: Vec<f64>,
}

impl DualState {
    pub fn zeros(obj: &LogisticObjective) -> Self {
        DualState {
            alpha: vec![0.0; obj.num_examples()],
            v: vec![0.0; obj.dim()],
        }
    }

    pub fn primal(&self) -> DenseModel {
        DenseModel::from(self.v.clone())
    }

    /// `(1/(λn)) Σ_i α_i x_i` recomputed from scratch.
    pub fn implied_v(&self, obj: &LogisticObjective) -> Vec<f64> {
        let n = obj.num_examples();
        let scale = 1.0 / (obj.lambda() * n as f64);
        obj.exec().chunked_sum(n, obj.dim(), |i, acc| {
            if self.alpha[i] != 0.0 {
                obj.add_example(i, scale * self.alpha[i], acc);
            }
        })
    }

    /// Largest coordinate gap between `v` and the `v` implied by `α`.
    pub fn consistency_error(&self, obj: &LogisticObjective) -> f64 {
        self.implied_v(obj)
            .iter()
            .zip(&self.v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Whether every `y_i α_i` lies in `[0, 1]`.
    pub fn is_feasible(&self, obj: &LogisticObjective) -> bool {
        self.alpha.iter().enumerate().all(|(i, &a)| {
            let b = obj.data().example(i).y() * a;
            (0.0..=1.0).contains(&b)
        })
    }
}

fn entropy(b: f64) -> f64 {
    let t = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
    t(b) + t(1.0 - b)
}

/// `D(α)`.
pub fn dual_value(obj: &LogisticObjective, dual: &DualState) -> f64 {
    let n = obj.num_examples();
    let ent = obj
        .exec()
        .chunked_scalar_sum(n, |i| entropy(obj.data().example(i).y() * dual.alpha[i]));
    let vv: f64 = dual.v.iter().map(|x| x * x).sum();
    ent / n as f64 - 0.5 * obj.lambda() * vv
}

/// `f(v) − D(α)`.
pub fn duality_gap(obj: &LogisticObjective, dual: &DualState) -> Result<f64> {
    Ok(obj.value(&dual.primal())? - dual_value(obj, dual))
}

/// Maximizes the concave scalar `H(b) − (y z) b − (q/2)(b − b0)²` over `b ∈ (0, 1)`
/// by safeguarded Newton on its derivative `ln((1−b)/b) − y z − q (b − b0)`.
pub(crate) fn solve_coordinate(yz: f64, q: f64, b0: f64) -> f64 {
    let deriv = |b: f64| ((1.0 - b) / b).ln() - yz - q * (b - b0);
    let (mut lo, mut hi) = (FEASIBILITY_GUARD, 1.0 - FEASIBILITY_GUARD);
    if deriv(lo) <= 0.0 {
        return lo;
    }
    if deriv(hi) >= 0.0 {
        return hi;
    }
    let mut b = b0.clamp(lo, hi);
    for _ in 0..200 {
        let d = deriv(b);
        if d > 0.0 {
            lo = b;
        } else {
            hi = b;
        }
        let curv = -1.0 / b - 1.0 / (1.0 - b) - q;
        let newton = b - d / curv;
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - b).abs() <= SCALAR_TOL * b.min(1.0 - b) || hi - lo <= 4.0 * f64::EPSILON {
            return next;
        }
        b = next;
    }
    b
}

/// Node-local result of one round: sparse dual changes and `Δv`.
struct LocalDual {
    dalpha: Vec<(usize, f64)>,
    dv: Vec<f64>,
}

/// One communication round.
pub fn cocoa_round(
    obj: &LogisticObjective,
    part: &Partition,
    dual: &DualState,
    cfg: &CocoaConfig,
    round: usize,
) -> Result<DualState> {
    let lambda = obj.lambda();
    if lambda <= 0.0 {
        return Err(Error::Config("CoCoA needs lambda > 0".into()));
    }
    let n = obj.num_examples();
    let k_nodes = part.num_nodes();
    let lambda_n = lambda * n as f64;
    let sigma = cfg.resolved_sigma_prime(k_nodes);
    let gamma = cfg.gamma(k_nodes);
    let dim = obj.dim();

    let locals = obj.exec().map_indexed(k_nodes, |k| {
        let rows = part.node(k).expect("k < K");
        let mut rng = stream_rng(cfg.seed, round, k);
        let mut v_local = dual.v.clone();
        let mut dv = vec![0.0; dim];
        let mut dalpha: Vec<f64> = vec![0.0; rows.len()];
        for _ in 0..cfg.local_iters {
            let r = rng.random_range(0..rows.len());
            let i = rows[r];
            let y = obj.data().example(i).y();
            let a = dual.alpha[i] + dalpha[r];
            let z = obj.margin(i, &v_local);
            let q = sigma * obj.example_squared_norm(i) / lambda_n;
            let b = solve_coordinate(y * z, q, y * a);
            let delta = y * b - a;
            if delta != 0.0 {
                dalpha[r] += delta;
                obj.add_example(i, sigma * delta / lambda_n, &mut v_local);
                obj.add_example(i, delta / lambda_n, &mut dv);
            }
        }
        LocalDual {
            dalpha: rows.iter().copied().zip(dalpha).filter(|(_, d)| *d != 0.0).collect(),
            dv,
        }
    });

    let mut next = dual.clone();
    for local in &locals {
        for &(i, d) in &local.dalpha {
            let y = obj.data().example(i).y();
            let b = (y * (next.alpha[i] + gamma * d)).clamp(0.0, 1.0);
            next.alpha[i] = y * b;
        }
        for (v, d) in next.v.iter_mut().zip(&local.dv) {
            *v += gamma * d;
        }
    }
    if next.v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Diverged {
            round: round + 1,
            node: None,
            step: None,
        });
    }
    Ok(next)
}

#[derive(Debug, Clone)]
pub struct CocoaOutcome {
    pub model: DenseModel,
    pub dual: DualState,
    /// Duality gap at the start and after every round.
    pub gaps: Vec<f64>,
}

/// Runs `cfg.rounds` rounds from `α = 0`.
pub fn run(
    obj: &LogisticObjective,
    part: &Partition,
    cfg: &CocoaConfig,
    sink: &mut dyn RoundSink,
) -> Result<CocoaOutcome> {
    part.check_dataset(obj.data())?;
    let mut dual = DualState::zeros(obj);
    let mut gaps = vec![duality_gap(obj, &dual)?];
    for s in 0..cfg.rounds {
        dual = cocoa_round(obj, part, &dual, cfg, s)?;
        let model = dual.primal();
        let f = obj.value(&model)?;
        gaps.push(f - dual_value(obj, &dual));
        sink.record(s + 1, &model, f);
    }
    Ok(CocoaOutcome {
        model: dual.primal(),
        dual,
        gaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::opt::{solve_optimum, OptimumConfig};
    use crate::sparse::Label;
    use crate::testutil::{dataset, random_dataset};

    #[test]
    fn scalar_solver_hits_stationarity() {
        for &(yz, q, b0) in &[(0.0, 0.0, 0.0), (3.0, 2.0, 0.1), (-5.0, 10.0, 0.9), (0.5, 1e4, 0.3), (40.0, 0.1, 0.5)] {
            let b = solve_coordinate(yz, q, b0);
            assert!(b > 0.0 && b < 1.0);
            let d = ((1.0 - b) / b).ln() - yz - q * (b - b0);
            if b > 1e-9 && b < 1.0 - 1e-9 {
                assert!(d.abs() < 1e-6, "yz={yz} q={q} b={b} d={d}");
            }
        }
        // without the quadratic term the maximizer is σ(−yz)
        let b = solve_coordinate(1.3, 0.0, 0.2);
        assert!((b - 1.0 / (1.0 + 1.3f64.exp())).abs() < 1e-10);
    }

    #[test]
    fn zero_local_iters_change_nothing() {
        let data = random_dataset(30, 5, 0.4, 0);
        let obj = LogisticObjective::new(&data, 0.1).unwrap();
        let part = Partition::from_groups(&(0..30).map(|i| i % 3).collect::<Vec<_>>()).unwrap();
        let dual = DualState::zeros(&obj);
        let next = cocoa_round(&obj, &part, &dual, &CocoaConfig::averaging(0, 1, 0), 0).unwrap();
        assert_eq!(next, dual);
    }

    #[test]
    fn single_example_matches_direct_minimization() {
        let data = dataset(&[(&[0, 1], &[1.0, -0.5], Label::Pos)], 2);
        let obj = LogisticObjective::new(&data, 0.5).unwrap();
        let part = Partition::single_node(1);
        let out = run(&obj, &part, &CocoaConfig::averaging(1, 20, 0), &mut Vec::new()).unwrap();
        // primal optimum: w = t·x with t = σ(−t‖x‖²)/λ
        let xx = 1.25;
        let (mut lo, mut hi) = (0.0f64, 10.0f64);
        for _ in 0..200 {
            let t = 0.5 * (lo + hi);
            if t - 1.0 / (1.0 + (t * xx).exp()) / 0.5 > 0.0 { hi = t } else { lo = t }
        }
        let t = 0.5 * (lo + hi);
        let w = out.model.as_slice();
        assert!((w[0] - t).abs() < 1e-6 && (w[1] + 0.5 * t).abs() < 1e-6, "{w:?} vs t={t}");
    }

    #[test]
    fn gap_nonnegative_and_shrinking_with_consistent_dual() {
        for seed in 0..5 {
            let data = random_dataset(200, 15, 0.2, seed);
            let obj = LogisticObjective::new(&data, 0.01).unwrap();
            let part = Partition::from_groups(&(0..200).map(|i| i % 5).collect::<Vec<_>>()).unwrap();
            let cfg = CocoaConfig::averaging(40, 25, seed);
            let mut rows = Vec::new();
            let out = run(&obj, &part, &cfg, &mut rows).unwrap();
            assert!(out.gaps.iter().all(|&g| g >= -1e-10));
            assert!(out.gaps.last().unwrap() < &out.gaps[0]);
            assert!(out.dual.consistency_error(&obj) < 1e-10);
            assert!(out.dual.is_feasible(&obj));
            let opt = solve_optimum(&obj, &OptimumConfig::with_tol(1e-9)).unwrap();
            for (_, f) in rows {
                assert!(f >= opt.value - 1e-12);
            }
            assert!(dual_value(&obj, &out.dual) <= opt.value + 1e-12);
        }
    }

    #[test]
    fn adding_mode_converges_faster_per_round() {
        let data = random_dataset(300, 20, 0.2, 4);
        let obj = LogisticObjective::new(&data, 0.01).unwrap();
        let part = Partition::from_groups(&(0..300).map(|i| i % 6).collect::<Vec<_>>()).unwrap();
        let avg = run(&obj, &part, &CocoaConfig::averaging(50, 10, 1), &mut Vec::new()).unwrap();
        let add_cfg = CocoaConfig { aggregation: CocoaAggregation::Add, ..CocoaConfig::averaging(50, 10, 1) };
        let add = run(&obj, &part, &add_cfg, &mut Vec::new()).unwrap();
        assert!(add.gaps.last() < avg.gaps.last());
        assert!(add.dual.is_feasible(&obj));
    }

    #[test]
    fn requires_positive_lambda() {
        let data = random_dataset(10, 3, 0.5, 0);
        let obj = LogisticObjective::new(&data, 0.0).unwrap();
        let part = Partition::single_node(10);
        assert!(cocoa_round(&obj, &part, &DualState::zeros(&obj), &CocoaConfig::averaging(5, 1, 0), 0).is_err());
    }
}
