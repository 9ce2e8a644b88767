//! Distributed SVRG over a simulated federation.
//!
//! Every communication round broadcasts the shared iterate `w̃` together with
//! `∇f(w̃)`. Each node then runs `m` variance-reduced stochastic steps on its
//! own examples, starting from `w̃`, and the nodes' displacements are folded
//! back into `w̃`.
//!
//! The [`Variant::Naive`] local step is
//! `w ← w − h (∇f_i(w) − ∇f_i(w̃) + ∇f(w̃))`, and updates are averaged with
//! weight `1/K`.
//!
//! [`Variant::Modified`] targets sparse, unbalanced, non-IID data:
//! - the stepsize `h_k` is inversely proportional to `n_k` ([`StepsizeRule::InverseNk`]),
//! - the data-gradient difference is rescaled by the node's local scaling
//!   ([`PartitionStats::local_scaling`]),
//! - updates are weighted by `n_k/n` and then multiplied coordinate-wise by the
//!   aggregation scaling `K/ω_j` ([`PartitionStats::aggregation_scaling`]).
//!
//! The regularizer difference `λ(w − w̃)` is added unscaled unless
//! [`FedSvrgConfig::scale_regularizer`] is set, in which case the modified
//! variant applies the local scaling to it as well.

use log::debug;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::RoundSink;
use crate::objective::{GradientVector, LogisticObjective};
use crate::partition::{DiagonalScaling, Partition, PartitionStats};
use crate::rng::stream_rng;
use crate::sparse::DenseModel;

/// Nodes processed per parallel batch; bounds memory held in pending updates.
const NODE_BATCH: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Naive,
    Modified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepsizeRule {
    /// Every node uses `h`.
    FixedH,
    /// Node `k` uses `h · (n/K) / n_k`.
    InverseNk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FedSvrgConfig {
    /// Stochastic steps per node per round; `None` means the mean node size.
    pub local_steps: Option<usize>,
    /// Base stepsize `h`.
    pub stepsize: f64,
    pub variant: Variant,
    pub stepsize_rule: StepsizeRule,
    pub rounds: usize,
    pub seed: u64,
    /// A round whose objective exceeds this multiple of the starting objective
    /// counts as divergence.
    pub divergence_factor: f64,
    /// Modified variant only: also scale `λ(w − w̃)` by the local scaling.
    #[serde(default)]
    pub scale_regularizer: bool,
}

impl FedSvrgConfig {
    /// Plain distributed SVRG: fixed stepsize, uniform averaging.
    pub fn naive(stepsize: f64, rounds: usize, seed: u64) -> Self {
        FedSvrgConfig {
            local_steps: None,
            stepsize,
            variant: Variant::Naive,
            stepsize_rule: StepsizeRule::FixedH,
            rounds,
            seed,
            divergence_factor: 1e3,
            scale_regularizer: false,
        }
    }

    /// The federated variant with all three modifications enabled.
    pub fn modified(stepsize: f64, rounds: usize, seed: u64) -> Self {
        FedSvrgConfig {
            variant: Variant::Modified,
            stepsize_rule: StepsizeRule::InverseNk,
            ..Self::naive(stepsize, rounds, seed)
        }
    }

    pub fn with_local_steps(mut self, m: usize) -> Self {
        self.local_steps = Some(m);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.stepsize > 0.0 && self.stepsize.is_finite()) {
            return Err(Error::Config(format!("stepsize must be > 0, got {}", self.stepsize)));
        }
        if self.local_steps == Some(0) {
            return Err(Error::Config("local_steps must be >= 1".into()));
        }
        if !(self.divergence_factor > 1.0) {
            return Err(Error::Config("divergence_factor must exceed 1".into()));
        }
        Ok(())
    }

    /// `m`, defaulting to the mean node size (rounded, at least 1).
    pub fn resolved_local_steps(&self, stats: &PartitionStats) -> usize {
        self.local_steps
            .unwrap_or_else(|| (stats.mean_node_size().round() as usize).max(1))
    }
}

/// What the server broadcasts at the start of a round.
#[derive(Debug, Clone)]
pub struct RoundState {
    pub w_tilde: DenseModel,
    pub full_grad: GradientVector,
    /// Zero-based index of the round this state starts.
    pub round: usize,
}

impl RoundState {
    pub fn broadcast(obj: &LogisticObjective, w_tilde: DenseModel, round: usize) -> Result<Self> {
        let full_grad = obj.full_gradient(&w_tilde)?;
        Ok(RoundState {
            w_tilde,
            full_grad,
            round,
        })
    }
}

/// `w_k − w̃` reported by node `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeUpdate {
    pub node: usize,
    pub delta: Vec<f64>,
}

/// Local stepsize of node `k`.
pub fn stepsize(cfg: &FedSvrgConfig, stats: &PartitionStats, k: usize) -> f64 {
    match cfg.stepsize_rule {
        StepsizeRule::FixedH => cfg.stepsize,
        StepsizeRule::InverseNk => {
            cfg.stepsize * stats.mean_node_size() / stats.node_sizes()[k] as f64
        }
    }
}

/// Dense step direction at `w_k` for example `i`:
/// `scaling ⊙ (∇ℓ_i(w_k) − ∇ℓ_i(w̃)) + λ(w_k − w̃) + ∇f(w̃)`, with no scaling
/// for the naive step. With `scale_regularizer` the scaling also multiplies
/// the `λ(w_k − w̃)` term.
pub fn step_direction(
    obj: &LogisticObjective,
    scaling: Option<&DiagonalScaling>,
    scale_regularizer: bool,
    i: usize,
    w_k: &[f64],
    state: &RoundState,
) -> Vec<f64> {
    let wt = state.w_tilde.as_slice();
    let diff = obj.loss_coefficient(i, w_k) - obj.loss_coefficient(i, wt);
    let mut data = vec![0.0; obj.dim()];
    obj.add_example(i, diff, &mut data);
    (0..obj.dim())
        .map(|j| {
            let s = scaling.map_or(1.0, |s| s[j]);
            let r = if scale_regularizer { s } else { 1.0 };
            s * data[j] + r * obj.lambda() * (w_k[j] - wt[j]) + state.full_grad[j]
        })
        .collect()
}

/// Runs node `k`'s local epoch and returns its displacement.
pub fn local_epoch(
    obj: &LogisticObjective,
    part: &Partition,
    stats: &PartitionStats,
    k: usize,
    state: &RoundState,
    cfg: &FedSvrgConfig,
    rng: &mut ChaCha8Rng,
) -> Result<NodeUpdate> {
    let m = cfg.resolved_local_steps(stats);
    local_epoch_steps(obj, part, stats, k, state, cfg, m, rng)
}

/// [`local_epoch`] with an explicit step count (which may be zero).
#[allow(clippy::too_many_arguments)]
pub fn local_epoch_steps(
    obj: &LogisticObjective,
    part: &Partition,
    stats: &PartitionStats,
    k: usize,
    state: &RoundState,
    cfg: &FedSvrgConfig,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Result<NodeUpdate> {
    let rows = part.node(k).ok_or(Error::IndexOutOfRange {
        index: k,
        len: part.num_nodes(),
    })?;
    let dim = obj.dim();
    let wt = state.w_tilde.as_slice();
    let g = state.full_grad.as_slice();
    obj.check_dim(wt)?;
    obj.check_dim(g)?;

    let h = stepsize(cfg, stats, k);
    let lambda = obj.lambda();
    let scaling = match cfg.variant {
        Variant::Naive => None,
        Variant::Modified => Some(stats.local_scaling(k, obj.use_bias())),
    };
    // per-coordinate regularizer weight, only materialized when scaled
    let reg: Option<Vec<f64>> = match (&scaling, cfg.scale_regularizer) {
        (Some(s), true) => Some(s.as_slice().iter().map(|v| lambda * v).collect()),
        _ => None,
    };
    let data = obj.data();
    let d = data.num_features();
    let diverged = |t: usize| Error::Diverged {
        round: state.round + 1,
        node: Some(k),
        step: Some(t),
    };

    let mut w = wt.to_vec();
    for t in 0..m {
        let i = rows[rng.random_range(0..rows.len())];
        let diff = obj.loss_coefficient(i, &w) - obj.loss_coefficient(i, wt);
        if !diff.is_finite() {
            return Err(diverged(t));
        }
        match &reg {
            None => {
                for j in 0..dim {
                    w[j] -= h * (g[j] + lambda * (w[j] - wt[j]));
                }
            }
            Some(r) => {
                for j in 0..dim {
                    w[j] -= h * (g[j] + r[j] * (w[j] - wt[j]));
                }
            }
        }
        let ex = data.example(i);
        match &scaling {
            None => obj.add_example(i, -h * diff, &mut w),
            Some(s) => {
                let s = s.as_slice();
                for (&j, &v) in ex.indices().iter().zip(ex.values()) {
                    let j = j as usize;
                    w[j] -= h * s[j] * diff * v;
                }
                if obj.use_bias() {
                    w[d] -= h * s[d] * diff;
                }
            }
        }
    }
    if let Some(j) = w.iter().position(|v| !v.is_finite()) {
        debug!("node {k}: coordinate {j} non-finite after local epoch");
        return Err(diverged(m));
    }
    let delta = w.iter().zip(wt).map(|(a, b)| a - b).collect();
    Ok(NodeUpdate { node: k, delta })
}

/// Folds node updates into the new shared iterate, in ascending node order.
pub struct Aggregator<'a> {
    base: &'a DenseModel,
    stats: &'a PartitionStats,
    variant: Variant,
    sum: Vec<f64>,
    next: usize,
}

impl<'a> Aggregator<'a> {
    pub fn new(base: &'a DenseModel, stats: &'a PartitionStats, variant: Variant) -> Self {
        Aggregator {
            base,
            stats,
            variant,
            sum: vec![0.0; base.len()],
            next: 0,
        }
    }

    /// Updates must arrive as nodes `0, 1, …, K−1`.
    pub fn add(&mut self, update: &NodeUpdate) -> Result<()> {
        if update.node != self.next {
            return Err(Error::InvalidPartition(if update.node < self.next {
                format!("duplicate update from node {}", update.node)
            } else {
                format!("missing update from node {}", self.next)
            }));
        }
        if update.delta.len() != self.sum.len() {
            return Err(Error::DimensionMismatch {
                expected: self.sum.len(),
                got: update.delta.len(),
            });
        }
        let weight = match self.variant {
            Variant::Naive => 1.0,
            Variant::Modified => {
                self.stats.node_sizes()[update.node] as f64 / self.stats.num_examples() as f64
            }
        };
        for (s, d) in self.sum.iter_mut().zip(&update.delta) {
            *s += weight * d;
        }
        self.next += 1;
        Ok(())
    }

    pub fn finish(self) -> Result<DenseModel> {
        let k = self.stats.num_nodes();
        if self.next != k {
            return Err(Error::InvalidPartition(format!(
                "missing update from node {}",
                self.next
            )));
        }
        let base = self.base.as_slice();
        let w: Vec<f64> = match self.variant {
            Variant::Naive => {
                let inv_k = 1.0 / k as f64;
                base.iter().zip(&self.sum).map(|(b, s)| b + inv_k * s).collect()
            }
            Variant::Modified => {
                let use_bias = base.len() > self.stats.num_features();
                let a = self.stats.aggregation_scaling(use_bias);
                base.iter()
                    .zip(&self.sum)
                    .zip(a.as_slice())
                    .map(|((b, s), a)| b + a * s)
                    .collect()
            }
        };
        Ok(DenseModel::from(w))
    }
}

/// New shared iterate from one update per node (any order).
pub fn aggregate(
    state: &RoundState,
    updates: &[NodeUpdate],
    stats: &PartitionStats,
    variant: Variant,
) -> Result<DenseModel> {
    let mut order: Vec<&NodeUpdate> = updates.iter().collect();
    order.sort_by_key(|u| u.node);
    let mut agg = Aggregator::new(&state.w_tilde, stats, variant);
    for u in order {
        agg.add(u)?;
    }
    agg.finish()
}

/// Runs `cfg.rounds` communication rounds from `w̃_0 = 0`, reporting each new
/// iterate to `sink`. Returns the final iterate.
pub fn run(
    obj: &LogisticObjective,
    part: &Partition,
    cfg: &FedSvrgConfig,
    sink: &mut dyn RoundSink,
) -> Result<DenseModel> {
    run_from(obj, part, cfg, DenseModel::zeros(obj.dim()), sink)
}

pub fn run_from(
    obj: &LogisticObjective,
    part: &Partition,
    cfg: &FedSvrgConfig,
    start: DenseModel,
    sink: &mut dyn RoundSink,
) -> Result<DenseModel> {
    cfg.validate()?;
    obj.check_dim(start.as_slice())?;
    let stats = PartitionStats::compute_with(obj.data(), part, obj.exec())?;
    let m = cfg.resolved_local_steps(&stats);
    let k_nodes = part.num_nodes();
    let exec = obj.exec();

    let f0 = obj.value(&start)?;
    let mut w = start;
    for s in 0..cfg.rounds {
        let state = RoundState::broadcast(obj, w, s)?;
        let mut agg = Aggregator::new(&state.w_tilde, &stats, cfg.variant);
        for batch_start in (0..k_nodes).step_by(NODE_BATCH) {
            let batch_len = NODE_BATCH.min(k_nodes - batch_start);
            let updates = exec.map_indexed(batch_len, |b| {
                let k = batch_start + b;
                let mut rng = stream_rng(cfg.seed, s, k);
                local_epoch_steps(obj, part, &stats, k, &state, cfg, m, &mut rng)
            });
            for u in updates {
                agg.add(&u?)?;
            }
        }
        w = agg.finish()?;
        let f = obj.value(&w)?;
        if !f.is_finite() || f > cfg.divergence_factor * f0 {
            return Err(Error::Diverged {
                round: s + 1,
                node: None,
                step: None,
            });
        }
        debug!("round {}: f = {f:e}", s + 1);
        sink.record(s + 1, &w, f);
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Exec;
    use crate::metrics::NullSink;
    use crate::sparse::Label;
    use crate::testutil::{dataset, random_dataset, random_w};
    use rand::SeedableRng;

    fn state_at(obj: &LogisticObjective, w: DenseModel) -> RoundState {
        RoundState::broadcast(obj, w, 0).unwrap()
    }

    #[test]
    fn zero_steps_give_zero_delta() {
        let data = random_dataset(20, 5, 0.4, 0);
        let obj = LogisticObjective::new(&data, 0.1).unwrap();
        let part = Partition::from_groups(&(0..20).map(|i| i % 3).collect::<Vec<_>>()).unwrap();
        let stats = PartitionStats::compute(&data, &part).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let w0 = random_w(5, 1.0, &mut rng);
        let state = state_at(&obj, w0);
        let cfg = FedSvrgConfig::modified(0.5, 1, 0);
        let u = local_epoch_steps(&obj, &part, &stats, 1, &state, &cfg, 0, &mut rng).unwrap();
        assert_eq!(u.delta, vec![0.0; 5]);
    }

    #[test]
    fn hand_traced_single_step() {
        // one node, two examples, m = 1
        let data = dataset(
            &[(&[0], &[1.0], Label::Pos), (&[0, 1], &[2.0, -1.0], Label::Neg)],
            2,
        );
        let lambda = 0.1;
        let h = 0.5;
        let obj = LogisticObjective::new(&data, lambda).unwrap();
        let part = Partition::single_node(2);
        let stats = PartitionStats::compute(&data, &part).unwrap();
        let w_tilde = DenseModel::from(vec![0.3, -0.2]);
        let state = state_at(&obj, w_tilde.clone());
        let cfg = FedSvrgConfig::naive(h, 1, 0);

        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let i = rng.clone().random_range(0..2usize);
        let u = local_epoch_steps(&obj, &part, &stats, 0, &state, &cfg, 1, &mut rng).unwrap();

        // by hand: w_k starts at w̃, so the data difference vanishes and the
        // step is -h ∇f(w̃)
        let sig = |t: f64| 1.0 / (1.0 + (-t).exp());
        let z0 = 0.3;
        let z1 = 2.0 * 0.3 - 1.0 * (-0.2);
        let c0 = -sig(-z0);
        let c1 = sig(z1);
        let g = [
            (c0 * 1.0 + c1 * 2.0) / 2.0 + lambda * 0.3,
            -c1 / 2.0 + lambda * -0.2,
        ];
        assert!(i < 2);
        for j in 0..2 {
            assert!((u.delta[j] - (-h * g[j])).abs() < 1e-15, "{:?} vs {:?}", u.delta, g);
        }
    }

    #[test]
    fn two_step_trace_matches_direction_oracle() {
        let data = random_dataset(30, 6, 0.5, 3);
        let obj = LogisticObjective::new(&data, 0.01).unwrap();
        let part = Partition::from_groups(&(0..30).map(|i| i % 2).collect::<Vec<_>>()).unwrap();
        let stats = PartitionStats::compute(&data, &part).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let state = state_at(&obj, random_w(6, 1.0, &mut rng));
        let scaled_reg = FedSvrgConfig {
            scale_regularizer: true,
            ..FedSvrgConfig::modified(0.3, 1, 0)
        };
        for cfg in [FedSvrgConfig::naive(0.3, 1, 0), FedSvrgConfig::modified(0.3, 1, 0), scaled_reg] {
            let k = 1;
            let mut sampler = ChaCha8Rng::seed_from_u64(9);
            let mut epoch_rng = sampler.clone();
            let u = local_epoch_steps(&obj, &part, &stats, k, &state, &cfg, 3, &mut epoch_rng).unwrap();

            let rows = part.node(k).unwrap();
            let scaling = (cfg.variant == Variant::Modified).then(|| stats.local_scaling(k, false));
            let h = stepsize(&cfg, &stats, k);
            let mut w = state.w_tilde.as_slice().to_vec();
            for _ in 0..3 {
                let i = rows[sampler.random_range(0..rows.len())];
                let dir = step_direction(&obj, scaling.as_ref(), cfg.scale_regularizer, i, &w, &state);
                for j in 0..6 {
                    w[j] -= h * dir[j];
                }
            }
            for ((d, wj), tj) in u.delta.iter().zip(&w).zip(state.w_tilde.as_slice()) {
                assert!((d - (wj - tj)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn direction_at_snapshot_is_full_gradient() {
        let data = random_dataset(40, 8, 0.3, 5);
        let obj = LogisticObjective::new(&data, 0.02).unwrap().with_bias(true);
        let part = Partition::single_node(40);
        let stats = PartitionStats::compute(&data, &part).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let state = state_at(&obj, random_w(9, 1.0, &mut rng));
        let s = stats.local_scaling(0, true);
        for i in 0..40 {
            for scaling in [None, Some(&s)] {
                let dir = step_direction(&obj, scaling, false, i, state.w_tilde.as_slice(), &state);
                assert_eq!(dir, state.full_grad);
            }
        }
    }

    #[test]
    fn stepsize_rules() {
        let data = random_dataset(12, 3, 0.5, 0);
        let balanced = Partition::from_groups(&(0..12).map(|i| i % 3).collect::<Vec<_>>()).unwrap();
        let stats = PartitionStats::compute(&data, &balanced).unwrap();
        let cfg = FedSvrgConfig::modified(0.7, 1, 0);
        for k in 0..3 {
            assert_eq!(stepsize(&cfg, &stats, k), 0.7);
        }
        // node 0 holds 8 of 12 examples over 3 nodes: twice the mean of 4
        let groups = [0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 2, 2];
        let stats = PartitionStats::compute(&data, &Partition::from_groups(&groups).unwrap()).unwrap();
        assert_eq!(stepsize(&cfg, &stats, 0), 0.35);
        assert_eq!(stepsize(&FedSvrgConfig::naive(0.7, 1, 0), &stats, 0), 0.7);
    }

    #[test]
    fn stepsize_spread_over_node_size_range() {
        // node sizes from 75 to 9,000: local stepsizes differ by 9000/75 = 120
        let sizes = [75usize, 216, 9000];
        let n: usize = sizes.iter().sum();
        let groups: Vec<usize> = sizes.iter().enumerate().flat_map(|(k, &s)| std::iter::repeat_n(k, s)).collect();
        let data = random_dataset(n, 2, 0.5, 0);
        let stats = PartitionStats::compute(&data, &Partition::from_groups(&groups).unwrap()).unwrap();
        let cfg = FedSvrgConfig::modified(1.0, 1, 0);
        let ratio = stepsize(&cfg, &stats, 0) / stepsize(&cfg, &stats, 2);
        assert!((ratio - 120.0).abs() < 1e-12);
    }

    #[test]
    fn aggregate_edge_cases() {
        let data = dataset(
            &[(&[0], &[1.0], Label::Pos), (&[1], &[1.0], Label::Neg)],
            2,
        );
        let obj = LogisticObjective::new(&data, 0.0).unwrap();
        let part = Partition::new(vec![vec![0], vec![1]]).unwrap();
        let stats = PartitionStats::compute(&data, &part).unwrap();
        let state = state_at(&obj, DenseModel::from(vec![1.0, 2.0]));

        let zeros = [
            NodeUpdate { node: 0, delta: vec![0.0, 0.0] },
            NodeUpdate { node: 1, delta: vec![0.0, 0.0] },
        ];
        for v in [Variant::Naive, Variant::Modified] {
            assert_eq!(aggregate(&state, &zeros, &stats, v).unwrap(), state.w_tilde);
        }

        // disjoint supports, equal n_k: modified sums, naive averages
        let ups = [
            NodeUpdate { node: 1, delta: vec![0.0, 0.5] },
            NodeUpdate { node: 0, delta: vec![0.25, 0.0] },
        ];
        let m = aggregate(&state, &ups, &stats, Variant::Modified).unwrap();
        assert_eq!(m.as_slice(), &[1.25, 2.5]);
        let nv = aggregate(&state, &ups, &stats, Variant::Naive).unwrap();
        assert_eq!(nv.as_slice(), &[1.125, 2.25]);

        assert!(aggregate(&state, &ups[..1], &stats, Variant::Naive).is_err());
        let dup = [ups[1].clone(), ups[1].clone()];
        assert!(aggregate(&state, &dup, &stats, Variant::Naive).is_err());
    }

    #[test]
    fn single_node_aggregation_adds_delta() {
        let data = random_dataset(10, 4, 0.5, 2);
        let obj = LogisticObjective::new(&data, 0.0).unwrap();
        let part = Partition::single_node(10);
        let stats = PartitionStats::compute(&data, &part).unwrap();
        let state = state_at(&obj, DenseModel::from(vec![1.0, -1.0, 0.5, 0.0]));
        let delta = vec![0.1, 0.2, -0.3, 0.4];
        let up = [NodeUpdate { node: 0, delta: delta.clone() }];
        for v in [Variant::Naive, Variant::Modified] {
            let w = aggregate(&state, &up, &stats, v).unwrap();
            for ((got, base), d) in w.as_slice().iter().zip(state.w_tilde.as_slice()).zip(&delta) {
                assert_eq!(*got, base + d);
            }
        }
    }

    #[test]
    fn zero_rounds_return_start() {
        let data = random_dataset(10, 4, 0.5, 2);
        let obj = LogisticObjective::new(&data, 0.1).unwrap();
        let mut rows = Vec::new();
        let w = run(&obj, &Partition::single_node(10), &FedSvrgConfig::modified(0.1, 0, 0), &mut rows).unwrap();
        assert_eq!(w, DenseModel::zeros(4));
        assert!(rows.is_empty());
    }

    #[test]
    fn deterministic_across_exec_modes() {
        let data = random_dataset(300, 20, 0.2, 7);
        let groups: Vec<usize> = (0..300).map(|i| (i * 7 + i / 5) % 13).collect();
        let part = Partition::from_groups(&groups).unwrap();
        let cfg = FedSvrgConfig::modified(0.5, 4, 11);
        let seq = LogisticObjective::new(&data, 1e-3).unwrap().with_exec(Exec::Sequential);
        let par = seq.with_exec(Exec::Parallel);
        let mut a = Vec::new();
        let mut b = Vec::new();
        let wa = run(&seq, &part, &cfg, &mut a).unwrap();
        let wb = run(&par, &part, &cfg, &mut b).unwrap();
        assert_eq!(wa, wb);
        assert_eq!(a, b);
    }

    #[test]
    fn converges_on_small_problem() {
        let data = random_dataset(400, 15, 0.3, 9);
        let groups: Vec<usize> = (0..400).map(|i| i % 8).collect();
        let part = Partition::from_groups(&groups).unwrap();
        let obj = LogisticObjective::new(&data, 1e-2).unwrap();
        let mut rows = Vec::new();
        run(&obj, &part, &FedSvrgConfig::modified(0.2, 15, 3), &mut rows).unwrap();
        let first = rows[0].1;
        let last = rows.last().unwrap().1;
        assert!(last < first);
        assert!(last < std::f64::consts::LN_2);
    }

    #[test]
    fn huge_stepsize_reports_divergence() {
        let data = random_dataset(100, 10, 0.5, 1);
        let obj = LogisticObjective::new(&data, 1.0).unwrap();
        let part = Partition::from_groups(&(0..100).map(|i| i % 4).collect::<Vec<_>>()).unwrap();
        let err = run(&obj, &part, &FedSvrgConfig::naive(1e6, 5, 0), &mut NullSink).unwrap_err();
        assert!(err.is_divergence(), "{err}");
    }

    #[test]
    fn invalid_config_rejected() {
        let data = random_dataset(10, 4, 0.5, 2);
        let obj = LogisticObjective::new(&data, 0.1).unwrap();
        let part = Partition::single_node(10);
        let bad = FedSvrgConfig::modified(0.0, 1, 0);
        assert!(run(&obj, &part, &bad, &mut NullSink).is_err());
        let bad = FedSvrgConfig::modified(0.1, 1, 0).with_local_steps(0);
        assert!(run(&obj, &part, &bad, &mut NullSink).is_err());
    }
}
