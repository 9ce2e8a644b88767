//! Assignment of examples to nodes, per-node feature statistics, and the
//! diagonal scalings derived from them.
//!
//! For feature `j` and node `k`:
//! - `n_j`: examples (globally) with feature `j` nonzero,
//! - `n_jk`: examples on node `k` with feature `j` nonzero,
//! - `ω_j`: nodes with `n_jk > 0`.
//!
//! The local scaling rescales node-local stochastic gradients so a feature's
//! local appearance frequency `n_jk/n_k` is corrected to the global one
//! `n_j/n`. The aggregation scaling `K/ω_j` sums (rather than averages) the
//! updates of features that live on few nodes.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::sparse::SparseDataset;

/// `{P_k}`: disjoint, non-empty node example lists covering `0..n`. Each list
/// is kept sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    nodes: Vec<Vec<usize>>,
    num_examples: usize,
}

impl Partition {
    pub fn new(mut nodes: Vec<Vec<usize>>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidPartition("no nodes".into()));
        }
        let n: usize = nodes.iter().map(Vec::len).sum();
        let mut seen = vec![false; n];
        for (k, rows) in nodes.iter_mut().enumerate() {
            if rows.is_empty() {
                return Err(Error::InvalidPartition(format!("node {k} is empty")));
            }
            rows.sort_unstable();
            for &i in rows.iter() {
                if i >= n {
                    return Err(Error::InvalidPartition(format!(
                        "example {i} out of range for {n} examples"
                    )));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidPartition(format!("example {i} assigned twice")));
                }
            }
        }
        Ok(Partition {
            nodes,
            num_examples: n,
        })
    }

    pub fn single_node(n: usize) -> Self {
        Partition::new(vec![(0..n).collect()]).expect("n >= 1")
    }

    /// Node `k` holds the examples with `groups[i] == k`; `K = max + 1`.
    pub fn from_groups(groups: &[usize]) -> Result<Self> {
        let k = groups
            .iter()
            .max()
            .map(|m| m + 1)
            .ok_or_else(|| Error::InvalidPartition("no examples".into()))?;
        let mut nodes = vec![Vec::new(); k];
        for (i, &g) in groups.iter().enumerate() {
            nodes[g].push(i);
        }
        if let Some(empty) = nodes.iter().position(Vec::is_empty) {
            return Err(Error::InvalidPartition(format!("group {empty} has no examples")));
        }
        Partition::new(nodes)
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_examples(&self) -> usize {
        self.num_examples
    }

    pub fn node(&self, k: usize) -> Option<&[usize]> {
        self.nodes.get(k).map(Vec::as_slice)
    }

    pub fn nodes(&self) -> &[Vec<usize>] {
        &self.nodes
    }

    pub fn node_sizes(&self) -> Vec<usize> {
        self.nodes.iter().map(Vec::len).collect()
    }

    /// Node id of every example.
    pub fn assignments(&self) -> Vec<usize> {
        let mut out = vec![0; self.num_examples];
        for (k, rows) in self.nodes.iter().enumerate() {
            for &i in rows {
                out[i] = k;
            }
        }
        out
    }

    /// Same node sizes, examples dealt out by a seeded uniform permutation.
    pub fn reshuffle(&self, seed: u64) -> Partition {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..self.num_examples).collect();
        order.shuffle(&mut rng);
        let mut rest = order.as_slice();
        let nodes = self
            .nodes
            .iter()
            .map(|rows| {
                let (head, tail) = rest.split_at(rows.len());
                rest = tail;
                head.to_vec()
            })
            .collect();
        Partition::new(nodes).expect("sizes preserved")
    }

    pub fn check_dataset(&self, dataset: &SparseDataset) -> Result<()> {
        if self.num_examples != dataset.num_examples() {
            return Err(Error::InvalidPartition(format!(
                "partition covers {} examples, dataset has {}",
                self.num_examples,
                dataset.num_examples()
            )));
        }
        Ok(())
    }

    /// Writes one `<example_index> <node_id>` line per example.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, k) in self.assignments().into_iter().enumerate() {
            writeln!(out, "{i} {k}")?;
        }
        out.flush()
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut pairs = Vec::new();
        for (no, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse {
                line: no + 1,
                msg: e.to_string(),
            })?;
            let text = line.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let mut toks = text.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<usize> {
                tok.and_then(|t| t.parse().ok()).ok_or_else(|| Error::Parse {
                    line: no + 1,
                    msg: format!("expected `<example_index> <node_id>`, got {text:?}"),
                })
            };
            let i = parse(toks.next())?;
            let k = parse(toks.next())?;
            pairs.push((i, k));
        }
        let n = pairs.len();
        let mut groups = vec![usize::MAX; n];
        for (i, k) in pairs {
            if i >= n {
                return Err(Error::InvalidPartition(format!(
                    "example index {i} out of range for {n} lines"
                )));
            }
            if groups[i] != usize::MAX {
                return Err(Error::InvalidPartition(format!("example {i} listed twice")));
            }
            groups[i] = k;
        }
        Partition::from_groups(&groups)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Partition::read(BufReader::new(file))
    }
}

/// One node per group id, nodes ordered by group id.
pub fn partition_by_group(dataset: &SparseDataset, group_of_example: &[usize]) -> Result<Partition> {
    if group_of_example.len() != dataset.num_examples() {
        return Err(Error::InvalidPartition(format!(
            "{} group ids for {} examples",
            group_of_example.len(),
            dataset.num_examples()
        )));
    }
    Partition::from_groups(group_of_example)
}

/// Nonnegative diagonal matrix over the model coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalScaling {
    diag: Vec<f64>,
}

impl DiagonalScaling {
    pub fn identity(dim: usize) -> Self {
        DiagonalScaling {
            diag: vec![1.0; dim],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.diag
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }
}

impl std::ops::Index<usize> for DiagonalScaling {
    type Output = f64;
    fn index(&self, j: usize) -> &f64 {
        &self.diag[j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionStats {
    num_examples: usize,
    num_features: usize,
    node_sizes: Vec<usize>,
    feature_counts: Vec<usize>,
    /// Per node: `(feature, n_jk)` for features with `n_jk > 0`, sorted by feature.
    node_feature_counts: Vec<Vec<(u32, usize)>>,
    omega: Vec<usize>,
}

impl PartitionStats {
    pub fn compute(dataset: &SparseDataset, part: &Partition) -> Result<Self> {
        Self::compute_with(dataset, part, Exec::default())
    }

    pub fn compute_with(dataset: &SparseDataset, part: &Partition, exec: Exec) -> Result<Self> {
        part.check_dataset(dataset)?;
        let d = dataset.num_features();
        let node_feature_counts = exec.map_indexed(part.num_nodes(), |k| {
            let mut feats: Vec<u32> = part.nodes[k]
                .iter()
                .flat_map(|&i| dataset.example(i).indices().iter().copied())
                .collect();
            feats.sort_unstable();
            let mut counts: Vec<(u32, usize)> = Vec::new();
            for j in feats {
                match counts.last_mut() {
                    Some((last, c)) if *last == j => *c += 1,
                    _ => counts.push((j, 1)),
                }
            }
            counts
        });
        let mut feature_counts = vec![0usize; d];
        let mut omega = vec![0usize; d];
        for counts in &node_feature_counts {
            for &(j, c) in counts {
                feature_counts[j as usize] += c;
                omega[j as usize] += 1;
            }
        }
        Ok(PartitionStats {
            num_examples: dataset.num_examples(),
            num_features: d,
            node_sizes: part.node_sizes(),
            feature_counts,
            node_feature_counts,
            omega,
        })
    }

    pub fn num_examples(&self) -> usize {
        self.num_examples
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_nodes(&self) -> usize {
        self.node_sizes.len()
    }

    /// `n_k` for every node.
    pub fn node_sizes(&self) -> &[usize] {
        &self.node_sizes
    }

    /// `n_j` for every feature.
    pub fn feature_counts(&self) -> &[usize] {
        &self.feature_counts
    }

    /// `ω_j` for every feature.
    pub fn omega(&self) -> &[usize] {
        &self.omega
    }

    /// Nonzero `(feature, n_jk)` pairs of node `k`.
    pub fn node_feature_counts(&self, k: usize) -> &[(u32, usize)] {
        &self.node_feature_counts[k]
    }

    /// `n_jk`.
    pub fn local_feature_count(&self, k: usize, j: usize) -> usize {
        let counts = &self.node_feature_counts[k];
        counts
            .binary_search_by_key(&(j as u32), |&(f, _)| f)
            .map_or(0, |pos| counts[pos].1)
    }

    pub fn mean_node_size(&self) -> f64 {
        self.num_examples as f64 / self.num_nodes() as f64
    }

    /// Diagonal `(n_j/n) / (n_jk/n_k)` for features present on node `k`, zero
    /// for features absent there; the bias coordinate (if any) gets 1.
    ///
    /// Evaluated as `(n_j·n_k) / (n·n_jk)` with exact integer products, so each
    /// entry is the correctly rounded ratio while the products stay below 2^53.
    pub fn local_scaling(&self, k: usize, use_bias: bool) -> DiagonalScaling {
        let n = self.num_examples as u128;
        let nk = self.node_sizes[k] as u128;
        let mut diag = vec![0.0; self.num_features + usize::from(use_bias)];
        for &(j, njk) in &self.node_feature_counts[k] {
            let num = self.feature_counts[j as usize] as u128 * nk;
            let den = n * njk as u128;
            diag[j as usize] = num as f64 / den as f64;
        }
        if use_bias {
            diag[self.num_features] = 1.0;
        }
        DiagonalScaling { diag }
    }

    /// Diagonal `K / ω_j`, with 1 for features no node holds and for the bias.
    pub fn aggregation_scaling(&self, use_bias: bool) -> DiagonalScaling {
        let k = self.num_nodes() as f64;
        let mut diag: Vec<f64> = self
            .omega
            .iter()
            .map(|&w| if w == 0 { 1.0 } else { k / w as f64 })
            .collect();
        if use_bias {
            diag.push(1.0);
        }
        DiagonalScaling { diag }
    }
}
