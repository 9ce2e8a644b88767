//! Execution policy for the data-parallel loops.
//!
//! Every parallel loop in the crate goes through [`Exec::map_indexed`] or
//! [`Exec::chunked_sum`]. Both return results in index order and reduce in a
//! fixed order, so parallel and sequential execution give bit-identical
//! output. Without the `parallel` feature, [`Exec::Parallel`] runs
//! sequentially.

use serde::{Deserialize, Serialize};

/// Rows per partial sum in [`Exec::chunked_sum`]. Fixed so the reduction tree
/// does not depend on the thread count.
pub const REDUCTION_CHUNK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// `(0..len).map(f).collect()`, possibly in parallel.
    pub fn map_indexed<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..len).into_par_iter().map(f).collect()
            }
            _ => (0..len).map(f).collect(),
        }
    }

    /// Sums `len` terms into a vector of length `dim`, where `add_term(i, acc)`
    /// accumulates term `i` into `acc`. Terms are grouped into fixed chunks of
    /// [`REDUCTION_CHUNK`] and the chunk partials are added in ascending order.
    pub fn chunked_sum<F>(self, len: usize, dim: usize, add_term: F) -> Vec<f64>
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        let chunks = len.div_ceil(REDUCTION_CHUNK);
        let partials = self.map_indexed(chunks, |c| {
            let mut acc = vec![0.0; dim];
            let start = c * REDUCTION_CHUNK;
            let end = (start + REDUCTION_CHUNK).min(len);
            for i in start..end {
                add_term(i, &mut acc);
            }
            acc
        });
        let mut total = vec![0.0; dim];
        for p in &partials {
            for (t, v) in total.iter_mut().zip(p) {
                *t += v;
            }
        }
        total
    }

    /// Scalar version of [`Exec::chunked_sum`].
    pub fn chunked_scalar_sum<F>(self, len: usize, term: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        let chunks = len.div_ceil(REDUCTION_CHUNK);
        self.map_indexed(chunks, |c| {
            let start = c * REDUCTION_CHUNK;
            let end = (start + REDUCTION_CHUNK).min(len);
            (start..end).map(&term).sum::<f64>()
        })
        .into_iter()
        .sum()
    }
}
