//! Synthetic author-clustered datasets: sparse bag-of-features examples,
//! power-law node sizes, node-specific feature distributions and label
//! shifts.
//!
//! Every node draws its feature distribution from a Dirichlet centred on a
//! shared Zipf base measure; `node_skew` is the Dirichlet concentration per
//! feature (relative to `d`), so small values give strongly non-IID nodes and
//! large values approach IID. Examples carry binary features normalized to
//! unit length; labels come from a planted logistic model plus a per-node
//! bias. The first 75% of each node's examples (in generation order) are
//! training data, the rest test data.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::libsvm::save_libsvm;
use crate::objective::sigmoid;
use crate::partition::{Partition, PartitionStats};
use crate::rng::derive_seed;
use crate::sparse::{DenseModel, Label, SparseDataset, SparseExample};

const STREAM_SIZES: u64 = u64::MAX;
const STREAM_WEIGHTS: u64 = u64::MAX - 1;
const STREAM_NODE: u64 = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub num_nodes: usize,
    pub num_features: usize,
    /// Bounds and target mean of the truncated power law for training
    /// examples per node.
    pub min_node_size: usize,
    pub max_node_size: usize,
    pub mean_node_size: f64,
    /// Poisson mean of distinct features drawn per example (at least one is kept).
    pub features_per_example: f64,
    /// Exponent `s` of the Zipf base measure `p_j ∝ (j+1)^-s`.
    pub zipf_exponent: f64,
    /// Dirichlet concentration per feature, relative to `d`.
    pub node_skew: f64,
    /// Standard deviation of the planted weights.
    pub weight_scale: f64,
    /// Node label biases are uniform in `[-label_shift, label_shift]`.
    pub label_shift: f64,
    /// Share of each node's examples held out for testing.
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            num_nodes: 100,
            num_features: 2000,
            min_node_size: 75,
            max_node_size: 1000,
            mean_node_size: 200.0,
            features_per_example: 12.0,
            zipf_exponent: 0.7,
            node_skew: 0.1,
            weight_scale: 0.7,
            label_shift: 0.5,
            test_fraction: 0.25,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: GenConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.num_nodes == 0 {
            return bad("num_nodes must be >= 1".into());
        }
        if self.num_features < 2 {
            return bad("num_features must be >= 2".into());
        }
        if self.min_node_size == 0 {
            return bad("min_node_size must be >= 1 (nodes cannot be empty)".into());
        }
        if self.max_node_size < self.min_node_size {
            return bad("max_node_size < min_node_size".into());
        }
        let (lo, hi) = (self.min_node_size as f64, self.max_node_size as f64);
        if !(self.mean_node_size >= lo && self.mean_node_size <= hi) {
            return bad(format!("mean_node_size {} outside [{lo}, {hi}]", self.mean_node_size));
        }
        if !(self.node_skew > 0.0 && self.node_skew.is_finite()) {
            return bad("node_skew must be > 0".into());
        }
        if !(self.features_per_example > 0.0) || !(self.weight_scale >= 0.0) || !(self.label_shift >= 0.0) {
            return bad("features_per_example must be > 0; weight_scale, label_shift >= 0".into());
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return bad("test_fraction must be in [0, 1)".into());
        }
        Ok(())
    }
}

/// Mean of the continuous power law with density `∝ x^-(a+1)` on `[lo, hi]`.
fn truncated_power_law_mean(a: f64, lo: f64, hi: f64) -> f64 {
    let r = hi / lo;
    if a.abs() < 1e-9 {
        return (hi - lo) / r.ln();
    }
    if (a - 1.0).abs() < 1e-9 {
        return lo * r.ln() / (1.0 - 1.0 / r);
    }
    // ∫ x·x^-(a+1) / ∫ x^-(a+1)
    let num = (hi.powf(1.0 - a) - lo.powf(1.0 - a)) / (1.0 - a);
    let den = (lo.powf(-a) - hi.powf(-a)) / a;
    num / den
}

/// Exponent whose truncated power law on `[lo, hi]` has mean `mean`.
fn power_law_exponent(lo: f64, hi: f64, mean: f64) -> f64 {
    if lo == hi {
        return 1.0;
    }
    // the mean decreases monotonically in the exponent
    let (mut a_lo, mut a_hi) = (-60.0, 60.0);
    for _ in 0..200 {
        let mid = 0.5 * (a_lo + a_hi);
        if truncated_power_law_mean(mid, lo, hi) > mean {
            a_lo = mid;
        } else {
            a_hi = mid;
        }
    }
    0.5 * (a_lo + a_hi)
}

fn sample_power_law(a: f64, lo: f64, hi: f64, u: f64) -> f64 {
    if lo == hi {
        return lo;
    }
    if a.abs() < 1e-9 {
        return lo * (hi / lo).powf(u);
    }
    // inverse CDF
    let tail = (lo / hi).powf(a);
    lo * (1.0 - u * (1.0 - tail)).powf(-1.0 / a)
}

/// Per-node training sizes drawn from the truncated power law.
pub fn sample_node_sizes(cfg: &GenConfig, rng: &mut impl Rng) -> Vec<usize> {
    let (lo, hi) = (cfg.min_node_size as f64, cfg.max_node_size as f64);
    let a = power_law_exponent(lo, hi, cfg.mean_node_size);
    (0..cfg.num_nodes)
        .map(|_| {
            let x = sample_power_law(a, lo, hi, rng.random::<f64>());
            (x.round() as usize).clamp(cfg.min_node_size, cfg.max_node_size)
        })
        .collect()
}

fn zipf_base(d: usize, s: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..d).map(|j| (j as f64 + 1.0).powf(-s)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / total).collect()
}

fn dirichlet_around(base: &[f64], concentration: f64, rng: &mut impl Rng) -> Vec<f64> {
    let mut q: Vec<f64> = base
        .iter()
        .map(|&p| {
            let shape = (concentration * p).max(f64::MIN_POSITIVE);
            Gamma::new(shape, 1.0).map_or(0.0, |g| g.sample(rng))
        })
        .collect();
    let total: f64 = q.iter().sum();
    if total > 0.0 && total.is_finite() {
        q.iter_mut().for_each(|v| *v /= total);
        q
    } else {
        base.to_vec()
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedData {
    pub config: GenConfig,
    pub train: SparseDataset,
    pub test: SparseDataset,
    /// Node of every training example.
    pub partition: Partition,
    /// Node of every test example.
    pub test_nodes: Vec<usize>,
    pub w_true: DenseModel,
    pub node_bias: Vec<f64>,
    /// Feature distribution each node sampled from.
    pub node_feature_dists: Vec<Vec<f64>>,
}

struct NodeSamples {
    dist: Vec<f64>,
    bias: f64,
    train: Vec<SparseExample>,
    test: Vec<SparseExample>,
}

fn generate_node(
    cfg: &GenConfig,
    k: usize,
    n_train: usize,
    base: &[f64],
    w_true: &[f64],
) -> Result<NodeSamples> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_NODE, k as u64));
    let d = cfg.num_features;
    let dist = dirichlet_around(base, cfg.node_skew * d as f64, &mut rng);
    let bias = if cfg.label_shift > 0.0 {
        rng.random_range(-cfg.label_shift..=cfg.label_shift)
    } else {
        0.0
    };
    let sampler = WeightedIndex::new(&dist).map_err(|e| Error::Config(format!("node {k}: {e}")))?;
    let poisson = Poisson::new(cfg.features_per_example)
        .map_err(|e| Error::Config(format!("features_per_example: {e}")))?;
    let n_test = (n_train as f64 * cfg.test_fraction / (1.0 - cfg.test_fraction)).round() as usize;

    let draw = |rng: &mut ChaCha8Rng| -> SparseExample {
        let draws = (poisson.sample(rng) as usize).max(1);
        let mut idx: Vec<u32> = (0..draws).map(|_| sampler.sample(rng) as u32).collect();
        idx.sort_unstable();
        idx.dedup();
        let v = 1.0 / (idx.len() as f64).sqrt();
        let z: f64 = idx.iter().map(|&j| v * w_true[j as usize]).sum::<f64>() + bias;
        let label = if rng.random::<f64>() < sigmoid(z) { Label::Pos } else { Label::Neg };
        let vals = vec![v; idx.len()];
        SparseExample::new(idx, vals, label).expect("sorted unique nonzero")
    };
    let train = (0..n_train).map(|_| draw(&mut rng)).collect();
    let test = (0..n_test).map(|_| draw(&mut rng)).collect();
    Ok(NodeSamples {
        dist,
        bias,
        train,
        test,
    })
}

pub fn generate(cfg: &GenConfig) -> Result<GeneratedData> {
    generate_with(cfg, Exec::default())
}

pub fn generate_with(cfg: &GenConfig, exec: Exec) -> Result<GeneratedData> {
    cfg.validate()?;
    let d = cfg.num_features;
    let mut size_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_SIZES, 0));
    let sizes = sample_node_sizes(cfg, &mut size_rng);
    let mut w_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_WEIGHTS, 0));
    let normal = Normal::new(0.0, cfg.weight_scale).map_err(|e| Error::Config(e.to_string()))?;
    let w_true: Vec<f64> = (0..d).map(|_| normal.sample(&mut w_rng)).collect();
    let base = zipf_base(d, cfg.zipf_exponent);

    let nodes = exec.map_indexed(cfg.num_nodes, |k| generate_node(cfg, k, sizes[k], &base, &w_true));

    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut groups = Vec::new();
    let mut test_nodes = Vec::new();
    let mut node_bias = Vec::with_capacity(cfg.num_nodes);
    let mut node_feature_dists = Vec::with_capacity(cfg.num_nodes);
    for (k, node) in nodes.into_iter().enumerate() {
        let node = node?;
        groups.extend(std::iter::repeat_n(k, node.train.len()));
        test_nodes.extend(std::iter::repeat_n(k, node.test.len()));
        train.extend(node.train);
        test.extend(node.test);
        node_bias.push(node.bias);
        node_feature_dists.push(node.dist);
    }
    let train = SparseDataset::new(train, d)?;
    let test = SparseDataset::new(test, d)
        .map_err(|_| Error::Config("configuration produces an empty test set".into()))?;
    let partition = Partition::from_groups(&groups)?;
    Ok(GeneratedData {
        config: cfg.clone(),
        train,
        test,
        partition,
        test_nodes,
        w_true: DenseModel::from(w_true),
        node_bias,
        node_feature_dists,
    })
}

/// Shape statistics of a partitioned dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub num_examples: usize,
    pub num_features: usize,
    pub num_nodes: usize,
    pub node_size_min: usize,
    pub node_size_mean: f64,
    pub node_size_max: usize,
    pub nnz: usize,
    /// `nnz / (n·d)`.
    pub density: f64,
    pub mean_nnz_per_example: f64,
    pub positive_rate: f64,
    /// Entry `c` counts features present on exactly `c` nodes; sums to `d`.
    pub omega_histogram: Vec<usize>,
}

impl DatasetSummary {
    pub fn compute(data: &SparseDataset, part: &Partition) -> Result<Self> {
        let stats = PartitionStats::compute(data, part)?;
        let sizes = stats.node_sizes();
        let n = data.num_examples();
        let d = data.num_features();
        let nnz = data.nnz();
        let mut omega_histogram = vec![0usize; part.num_nodes() + 1];
        for &w in stats.omega() {
            omega_histogram[w] += 1;
        }
        let positives = data.examples().iter().filter(|e| e.label() == Label::Pos).count();
        Ok(DatasetSummary {
            num_examples: n,
            num_features: d,
            num_nodes: part.num_nodes(),
            node_size_min: sizes.iter().copied().min().unwrap_or(0),
            node_size_mean: stats.mean_node_size(),
            node_size_max: sizes.iter().copied().max().unwrap_or(0),
            nnz,
            density: nnz as f64 / (n as f64 * d as f64),
            mean_nnz_per_example: nnz as f64 / n as f64,
            positive_rate: positives as f64 / n as f64,
            omega_histogram,
        })
    }
}

/// Summary of the generated training set.
pub fn summarize(data: &GeneratedData) -> Result<DatasetSummary> {
    DatasetSummary::compute(&data.train, &data.partition)
}

#[derive(Serialize)]
struct Metadata<'a> {
    config: &'a GenConfig,
    summary: DatasetSummary,
    test_examples: usize,
    node_bias: &'a [f64],
}

impl GeneratedData {
    /// Writes `train.libsvm`, `test.libsvm`, `partition.txt`,
    /// `test_partition.txt` and `metadata.json` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        save_libsvm(&self.train, dir.join("train.libsvm"))?;
        save_libsvm(&self.test, dir.join("test.libsvm"))?;
        self.partition.save(dir.join("partition.txt"))?;
        Partition::from_groups(&self.test_nodes)
            .map(|p| p.save(dir.join("test_partition.txt")))
            .unwrap_or(Ok(()))?;
        let meta = Metadata {
            config: &self.config,
            summary: summarize(self)?,
            test_examples: self.test.num_examples(),
            node_bias: &self.node_bias,
        };
        let path = dir.join("metadata.json");
        fs::write(&path, serde_json::to_string_pretty(&meta)? + "\n").map_err(|e| Error::io(path, e))
    }
}
