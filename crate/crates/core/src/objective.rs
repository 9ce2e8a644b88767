//! L2-regularized logistic regression:
//!
//! `f(w) = (1/n) Σ_i log(1 + exp(-y_i x_i·w)) + (λ/2)‖w‖²`
//!
//! With `use_bias` the model carries one extra coordinate at index `d` that
//! multiplies an implicit always-one feature. It is regularized like every
//! other coordinate.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::partition::Partition;
use crate::sparse::{DenseModel, SparseDataset, SparseExample};

pub type GradientVector = Vec<f64>;

/// `log(1 + exp(x))` without overflow.
#[inline]
pub fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Logistic function `1 / (1 + exp(-x))` without overflow.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Sparse data-part gradient of one example. The bias coordinate, when
/// present, is the last entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGradient {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct LogisticObjective<'a> {
    data: &'a SparseDataset,
    lambda: f64,
    use_bias: bool,
    exec: Exec,
}

impl<'a> LogisticObjective<'a> {
    pub fn new(data: &'a SparseDataset, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        Ok(LogisticObjective {
            data,
            lambda,
            use_bias: false,
            exec: Exec::default(),
        })
    }

    /// `λ = 1/n`.
    pub fn with_default_lambda(data: &'a SparseDataset) -> Self {
        Self::new(data, 1.0 / data.num_examples() as f64).expect("1/n is a valid lambda")
    }

    pub fn with_bias(mut self, use_bias: bool) -> Self {
        self.use_bias = use_bias;
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn data(&self) -> &'a SparseDataset {
        self.data
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn use_bias(&self) -> bool {
        self.use_bias
    }

    pub fn exec(&self) -> Exec {
        self.exec
    }

    pub fn num_examples(&self) -> usize {
        self.data.num_examples()
    }

    /// Model length: `d`, plus one with a bias term.
    pub fn dim(&self) -> usize {
        self.data.num_features() + usize::from(self.use_bias)
    }

    pub fn check_dim(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: w.len(),
            });
        }
        Ok(())
    }

    #[inline]
    fn margin_of(&self, ex: &SparseExample, w: &[f64]) -> f64 {
        let z = ex.dot(w);
        if self.use_bias {
            z + w[self.data.num_features()]
        } else {
            z
        }
    }

    /// `x_i · w` (plus bias).
    #[inline]
    pub fn margin(&self, i: usize, w: &[f64]) -> f64 {
        self.margin_of(self.data.example(i), w)
    }

    /// Scalar `c` such that the data-part gradient of example `i` is `c · x_i`
    /// (and `c` on the bias coordinate): `c = -y σ(-y x·w)`.
    #[inline]
    pub fn loss_coefficient(&self, i: usize, w: &[f64]) -> f64 {
        let ex = self.data.example(i);
        let y = ex.y();
        -y * sigmoid(-y * self.margin_of(ex, w))
    }

    #[inline]
    pub fn example_loss(&self, i: usize, w: &[f64]) -> f64 {
        let ex = self.data.example(i);
        log1p_exp(-ex.y() * self.margin_of(ex, w))
    }

    /// `w += alpha · x̂_i`, where `x̂_i` is `x_i` extended with the bias feature.
    #[inline]
    pub fn add_example(&self, i: usize, alpha: f64, w: &mut [f64]) {
        self.data.example(i).axpy(alpha, w);
        if self.use_bias {
            w[self.data.num_features()] += alpha;
        }
    }

    /// `‖x̂_i‖²`.
    pub fn example_squared_norm(&self, i: usize) -> f64 {
        self.data.example(i).squared_norm() + if self.use_bias { 1.0 } else { 0.0 }
    }

    fn regularizer(&self, w: &[f64]) -> f64 {
        0.5 * self.lambda * w.iter().map(|v| v * v).sum::<f64>()
    }

    /// Mean logistic loss without the regularizer.
    pub fn data_value(&self, w: &DenseModel) -> Result<f64> {
        let w = w.as_slice();
        self.check_dim(w)?;
        let n = self.num_examples();
        Ok(self.exec.chunked_scalar_sum(n, |i| self.example_loss(i, w)) / n as f64)
    }

    /// Full objective `f(w)`.
    pub fn value(&self, w: &DenseModel) -> Result<f64> {
        Ok(self.data_value(w)? + self.regularizer(w.as_slice()))
    }

    /// `(1/n) Σ_i ∇ℓ_i(w)` without the regularizer.
    pub fn data_gradient(&self, w: &DenseModel) -> Result<GradientVector> {
        let w = w.as_slice();
        self.check_dim(w)?;
        let n = self.num_examples();
        let mut g = self.exec.chunked_sum(n, self.dim(), |i, acc| {
            let c = self.loss_coefficient(i, w);
            self.add_example(i, c, acc);
        });
        let inv_n = 1.0 / n as f64;
        g.iter_mut().for_each(|v| *v *= inv_n);
        Ok(g)
    }

    /// `∇f(w)`.
    pub fn full_gradient(&self, w: &DenseModel) -> Result<GradientVector> {
        let mut g = self.data_gradient(w)?;
        for (gj, wj) in g.iter_mut().zip(w.as_slice()) {
            *gj += self.lambda * wj;
        }
        Ok(g)
    }

    /// Data-part gradient of example `i`, supported on its nonzero features.
    pub fn stochastic_gradient(&self, i: usize, w: &DenseModel) -> Result<SparseGradient> {
        if i >= self.num_examples() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.num_examples(),
            });
        }
        self.check_dim(w.as_slice())?;
        let c = self.loss_coefficient(i, w.as_slice());
        let ex = self.data.example(i);
        let mut indices: Vec<usize> = ex.indices().iter().map(|&j| j as usize).collect();
        let mut values: Vec<f64> = ex.values().iter().map(|v| c * v).collect();
        if self.use_bias {
            indices.push(self.data.num_features());
            values.push(c);
        }
        Ok(SparseGradient { indices, values })
    }

    /// Local empirical objective of node `k`: `(1/n_k) Σ_{i∈P_k} ℓ_i(w) + (λ/2)‖w‖²`.
    /// Weighting these by `n_k/n` and summing over nodes gives `f(w)`.
    pub fn local_value(&self, part: &Partition, k: usize, w: &DenseModel) -> Result<f64> {
        Ok(self.local_data_value(part, k, w)? + self.regularizer(w.as_slice()))
    }

    /// [`local_value`](Self::local_value) without the regularizer.
    pub fn local_data_value(&self, part: &Partition, k: usize, w: &DenseModel) -> Result<f64> {
        let w = w.as_slice();
        self.check_dim(w)?;
        if part.num_examples() != self.num_examples() {
            return Err(Error::InvalidPartition(format!(
                "partition covers {} examples, dataset has {}",
                part.num_examples(),
                self.num_examples()
            )));
        }
        let rows = part.node(k).ok_or(Error::IndexOutOfRange {
            index: k,
            len: part.num_nodes(),
        })?;
        if rows.is_empty() {
            return Err(Error::InvalidPartition(format!("node {k} is empty")));
        }
        let sum: f64 = rows.iter().map(|&i| self.example_loss(i, w)).sum();
        Ok(sum / rows.len() as f64)
    }

    /// Fraction of `test` misclassified by `sign(x·w)`, with `sign(0) = +1`.
    pub fn test_error(&self, w: &DenseModel, test: &SparseDataset) -> Result<f64> {
        let w = w.as_slice();
        self.check_dim(w)?;
        if test.num_examples() == 0 {
            return Err(Error::InvalidData("empty test set".into()));
        }
        let d = self.data.num_features();
        if test.num_features() > d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: test.num_features(),
            });
        }
        let wrong = test
            .examples()
            .iter()
            .filter(|ex| {
                let predicted = if self.margin_of(ex, w) >= 0.0 { 1.0 } else { -1.0 };
                predicted != ex.y()
            })
            .count();
        Ok(wrong as f64 / test.num_examples() as f64)
    }
}
