//! Row-sparse datasets with ±1 labels and the dense model they are scored
//! against.

use crate::error::{Error, Result};

/// Binary class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Neg,
    Pos,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Neg => -1.0,
            Label::Pos => 1.0,
        }
    }

    pub fn from_sign(s: f64) -> Self {
        if s < 0.0 {
            Label::Neg
        } else {
            Label::Pos
        }
    }
}

/// One example: sorted feature ids (0-based) with their nonzero values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseExample {
    indices: Vec<u32>,
    values: Vec<f64>,
    label: Label,
}

impl SparseExample {
    /// Builds an example, rejecting unsorted or duplicate indices, explicit
    /// zeros and non-finite values.
    pub fn new(indices: Vec<u32>, values: Vec<f64>, label: Label) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::InvalidData(format!(
                "{} indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        if let Some(w) = indices.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidData(format!(
                "indices not strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v == 0.0) {
            return Err(Error::InvalidData(format!("stored value {v} is zero or non-finite")));
        }
        Ok(SparseExample {
            indices,
            values,
            label,
        })
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn y(&self) -> f64 {
        self.label.sign()
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// One past the largest feature id, or 0 for an empty example.
    pub fn max_index_bound(&self) -> usize {
        self.indices.last().map_or(0, |&j| j as usize + 1)
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `x · w` without bounds reporting; panics if an index exceeds `w`.
    #[inline]
    pub fn dot(&self, w: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&j, &v)| v * w[j as usize])
            .sum()
    }

    /// `w += alpha * x`; panics if an index exceeds `w`.
    #[inline]
    pub fn axpy(&self, alpha: f64, w: &mut [f64]) {
        for (&j, &v) in self.indices.iter().zip(&self.values) {
            w[j as usize] += alpha * v;
        }
    }

    /// Dense copy of length `dim`.
    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        self.axpy(1.0, &mut out);
        out
    }
}

/// The global training (or test) set.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDataset {
    examples: Vec<SparseExample>,
    num_features: usize,
}

impl SparseDataset {
    pub fn new(examples: Vec<SparseExample>, num_features: usize) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::InvalidData("no examples".into()));
        }
        if num_features == 0 {
            return Err(Error::InvalidData("num_features must be at least 1".into()));
        }
        for (i, ex) in examples.iter().enumerate() {
            if ex.max_index_bound() > num_features {
                return Err(Error::InvalidData(format!(
                    "example {i} has feature {} but d = {num_features}",
                    ex.max_index_bound() - 1
                )));
            }
        }
        Ok(SparseDataset {
            examples,
            num_features,
        })
    }

    pub fn examples(&self) -> &[SparseExample] {
        &self.examples
    }

    pub fn example(&self, i: usize) -> &SparseExample {
        &self.examples[i]
    }

    pub fn num_examples(&self) -> usize {
        self.examples.len()
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn nnz(&self) -> usize {
        self.examples.iter().map(SparseExample::nnz).sum()
    }

    /// Sub-dataset with the given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let examples = rows
            .iter()
            .map(|&i| {
                self.examples.get(i).cloned().ok_or(Error::IndexOutOfRange {
                    index: i,
                    len: self.examples.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SparseDataset::new(examples, self.num_features)
    }
}

/// Weight vector shared by every algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseModel {
    weights: Vec<f64>,
}

impl DenseModel {
    pub fn zeros(dim: usize) -> Self {
        DenseModel {
            weights: vec![0.0; dim],
        }
    }

    pub fn from_vec(weights: Vec<f64>) -> Result<Self> {
        if let Some(j) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::InvalidData(format!("weight {j} is not finite")));
        }
        Ok(DenseModel { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.weights
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite())
    }

    pub fn norm_squared(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }
}

impl From<Vec<f64>> for DenseModel {
    /// Unchecked conversion; use [`DenseModel::from_vec`] to validate.
    fn from(weights: Vec<f64>) -> Self {
        DenseModel { weights }
    }
}

fn check_bounds(example: &SparseExample, len: usize) -> Result<()> {
    let bound = example.max_index_bound();
    if bound > len {
        return Err(Error::IndexOutOfRange {
            index: bound - 1,
            len,
        });
    }
    Ok(())
}

/// `Σ_j values[j] · w[indices[j]]`.
pub fn sparse_dot(example: &SparseExample, w: &DenseModel) -> Result<f64> {
    check_bounds(example, w.len())?;
    Ok(example.dot(w.as_slice()))
}

/// In-place `w += alpha · x`. Only coordinates in the example's support change.
pub fn axpy_sparse(alpha: f64, example: &SparseExample, w: &mut DenseModel) -> Result<()> {
    check_bounds(example, w.len())?;
    example.axpy(alpha, w.as_mut_slice());
    Ok(())
}
