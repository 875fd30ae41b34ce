#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use covrank::{ComparisonGraph, ComparisonKind, FeatureTable, Matrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut rng(seed));
    p
}

/// Every pair compared, winner by `truth`.
pub fn tournament(truth: &[f64]) -> ComparisonGraph {
    let n = truth.len();
    let c = Matrix::from_fn(n, n, |i, j| sign(truth[i] - truth[j]));
    ComparisonGraph::from_matrix(c, ComparisonKind::Ordinal).unwrap()
}

/// Complete cardinal graph `C = r1ᵀ - 1rᵀ`.
pub fn cardinal_complete(truth: &[f64]) -> ComparisonGraph {
    let n = truth.len();
    let c = Matrix::from_fn(n, n, |i, j| truth[i] - truth[j]);
    ComparisonGraph::from_matrix(c, ComparisonKind::Cardinal).unwrap()
}

/// Each pair compared with probability `p`; ordinal outcomes by `truth`.
pub fn sparse_ordinal(truth: &[f64], p: f64, seed: u64) -> ComparisonGraph {
    let n = truth.len();
    let mut r = rng(seed);
    let mut c = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if r.random::<f64>() < p {
                c[(i, j)] = sign(truth[i] - truth[j]);
                c[(j, i)] = -c[(i, j)];
            }
        }
    }
    ComparisonGraph::from_matrix(c, ComparisonKind::Ordinal).unwrap()
}

pub fn uniform_features(n: usize, p: usize, seed: u64) -> FeatureTable {
    let mut r = rng(seed);
    FeatureTable::from_matrix(Matrix::from_fn(n, p, |_, _| r.random::<f64>())).unwrap()
}

pub fn column(values: &[f64]) -> FeatureTable {
    FeatureTable::from_matrix(Matrix::from_column_slice(values.len(), 1, values)).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).fold(0.0, f64::max)
}
