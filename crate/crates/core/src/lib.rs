//! Simulator for federated optimization of L2-regularized logistic
//! regression.
//!
//! The training set is split over `K` virtual nodes holding sparse,
//! unbalanced, non-IID partitions. The crate provides distributed SVRG in its
//! naive and federated (rescaled) forms, distributed gradient descent, CoCoA,
//! an offline optimum solver, a synthetic data generator, and an experiment
//! harness that records convergence per communication round.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default) and sequentially otherwise; both give identical results.

// `!(x > 0.0)` is used on purpose to reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod checkpoint;
pub mod error;
pub mod exec;
pub mod fed_svrg;
pub mod harness;
pub mod libsvm;
pub mod metrics;
pub mod objective;
pub mod partition;
pub mod rng;
pub mod sparse;
pub mod synth;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use exec::Exec;
pub use fed_svrg::{FedSvrgConfig, StepsizeRule, Variant};
pub use metrics::{MetricsRecorder, RoundMetrics, RoundSink};
pub use objective::LogisticObjective;
pub use partition::{DiagonalScaling, Partition, PartitionStats};
pub use sparse::{DenseModel, Label, SparseDataset, SparseExample};
