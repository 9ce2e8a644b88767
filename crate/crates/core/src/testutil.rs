use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sparse::{DenseModel, Label, SparseDataset, SparseExample};

/// Random sparse dataset; every example has at least one feature.
pub fn random_dataset(n: usize, d: usize, density: f64, seed: u64) -> SparseDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let examples = (0..n)
        .map(|_| {
            let mut idx: Vec<u32> = (0..d as u32).filter(|_| rng.random_bool(density)).collect();
            if idx.is_empty() {
                idx.push(rng.random_range(0..d as u32));
            }
            let vals = idx.iter().map(|_| rng.random_range(-1.5..1.5)).collect();
            let label = if rng.random_bool(0.5) { Label::Pos } else { Label::Neg };
            SparseExample::new(idx, vals, label).unwrap()
        })
        .collect();
    SparseDataset::new(examples, d).unwrap()
}

pub fn random_w(dim: usize, scale: f64, rng: &mut ChaCha8Rng) -> DenseModel {
    DenseModel::from((0..dim).map(|_| rng.random_range(-scale..scale)).collect::<Vec<_>>())
}

pub fn dataset(rows: &[(&[u32], &[f64], Label)], d: usize) -> SparseDataset {
    let ex = rows
        .iter()
        .map(|(i, v, l)| SparseExample::new(i.to_vec(), v.to_vec(), *l).unwrap())
        .collect();
    SparseDataset::new(ex, d).unwrap()
}
