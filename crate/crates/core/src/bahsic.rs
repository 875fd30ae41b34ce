//! Backward feature elimination by HSIC dependence maximisation.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{hsic, kernel_matrix, median_rbf, KernelSpec};
use crate::Matrix;

/// Default fraction of the remaining features dropped per step.
pub const DEFAULT_DROP_FRACTION: f64 = 0.1;

// Above this many candidate subsets a step falls back to ranking single
// features by the HSIC left after removing each one.
const MAX_SUBSETS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FeatureKernel {
    /// RBF with the median-heuristic lengthscale of the candidate subset.
    MedianRbf,
    Fixed(KernelSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BahsicOptions {
    pub kernel: FeatureKernel,
    pub drop_fraction: f64,
    /// Z-score each column before building kernels.
    pub standardize: bool,
}

impl Default for BahsicOptions {
    fn default() -> Self {
        Self {
            kernel: FeatureKernel::MedianRbf,
            drop_fraction: DEFAULT_DROP_FRACTION,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliminationStep {
    pub removed: Vec<usize>,
    pub remaining: Vec<usize>,
    /// HSIC between the remaining features and the target after this step.
    pub hsic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BahsicResult {
    /// Retained column indices, ascending.
    pub retained: Vec<usize>,
    pub trace: Vec<EliminationStep>,
}

fn standardized(phi: &Matrix) -> Matrix {
    let n = phi.nrows() as f64;
    let mut out = phi.clone();
    for mut col in out.column_iter_mut() {
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        col.apply(|v| *v = (*v - mean) / sd);
    }
    out
}

fn subset_hsic(phi: &Matrix, cols: &[usize], target: &Matrix, kernel: &FeatureKernel) -> Result<f64> {
    let x = Matrix::from_fn(phi.nrows(), cols.len(), |r, c| phi[(r, cols[c])]);
    let k = match kernel {
        FeatureKernel::MedianRbf => median_rbf(&x)?,
        FeatureKernel::Fixed(spec) => kernel_matrix(&x, spec)?,
    };
    hsic(&k, target)
}

/// Drops features until `target_k` remain, each step removing the subset of
/// `⌈drop_fraction · remaining⌉` features whose removal leaves the highest
/// HSIC with `target` (an `n × n` kernel on the comparison data).
pub fn bahsic_select(phi: &Matrix, target: &Matrix, target_k: usize, opts: &BahsicOptions) -> Result<BahsicResult> {
    let p = phi.ncols();
    if target_k == 0 || target_k > p {
        return Err(Error::param("target_k", format!("must lie in 1..={p}, got {target_k}")));
    }
    if !(opts.drop_fraction > 0.0 && opts.drop_fraction <= 1.0) {
        return Err(Error::param("drop_fraction", "must lie in (0, 1]"));
    }
    if target.nrows() != phi.nrows() || target.ncols() != phi.nrows() {
        return Err(Error::DimensionMismatch {
            context: "target kernel size",
            expected: phi.nrows(),
            got: target.nrows(),
        });
    }
    let phi = if opts.standardize {
        standardized(phi)
    } else {
        phi.clone()
    };
    let mut remaining: Vec<usize> = (0..p).collect();
    let mut trace = Vec::new();
    while remaining.len() > target_k {
        let m = ((opts.drop_fraction * remaining.len() as f64).ceil() as usize)
            .max(1)
            .min(remaining.len() - target_k);
        let removed = if n_choose_k(remaining.len(), m) <= MAX_SUBSETS {
            best_subset_exhaustive(&phi, &remaining, m, target, &opts.kernel)?
        } else {
            best_subset_ranked(&phi, &remaining, m, target, &opts.kernel)?
        };
        remaining.retain(|c| !removed.contains(c));
        let score = subset_hsic(&phi, &remaining, target, &opts.kernel)?;
        trace.push(EliminationStep {
            removed,
            remaining: remaining.clone(),
            hsic: score,
        });
    }
    Ok(BahsicResult {
        retained: remaining,
        trace,
    })
}

fn n_choose_k(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
        if acc > MAX_SUBSETS {
            return usize::MAX;
        }
    }
    acc
}

fn best_subset_exhaustive(
    phi: &Matrix,
    remaining: &[usize],
    m: usize,
    target: &Matrix,
    kernel: &FeatureKernel,
) -> Result<Vec<usize>> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for drop in remaining.iter().copied().combinations(m) {
        let keep: Vec<usize> = remaining.iter().copied().filter(|c| !drop.contains(c)).collect();
        let score = subset_hsic(phi, &keep, target, kernel)?;
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, drop));
        }
    }
    Ok(best.map(|(_, d)| d).unwrap_or_default())
}

fn best_subset_ranked(
    phi: &Matrix,
    remaining: &[usize],
    m: usize,
    target: &Matrix,
    kernel: &FeatureKernel,
) -> Result<Vec<usize>> {
    let mut scored = Vec::with_capacity(remaining.len());
    for &c in remaining {
        let keep: Vec<usize> = remaining.iter().copied().filter(|&k| k != c).collect();
        scored.push((subset_hsic(phi, &keep, target, kernel)?, c));
    }
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
    });
    let mut drop: Vec<usize> = scored.into_iter().take(m).map(|(_, c)| c).collect();
    drop.sort_unstable();
    Ok(drop)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_feature_is_kept() {
        let phi = Matrix::from_fn(10, 1, |i, _| i as f64);
        let target = Matrix::identity(10, 10);
        let r = bahsic_select(&phi, &target, 1, &BahsicOptions::default()).unwrap();
        assert_eq!(r.retained, vec![0]);
        assert!(r.trace.is_empty());
    }

    #[test]
    fn rejects_bad_target_k() {
        let phi = Matrix::zeros(5, 3);
        let target = Matrix::identity(5, 5);
        assert!(bahsic_select(&phi, &target, 0, &BahsicOptions::default()).is_err());
        assert!(bahsic_select(&phi, &target, 4, &BahsicOptions::default()).is_err());
    }

    #[test]
    fn full_drop_keeps_best_singleton() {
        let n = 40;
        let phi = Matrix::from_fn(n, 4, |i, j| {
            let t = i as f64 / n as f64;
            match j {
                0 => (13.0 * t).sin(),
                1 => t + 0.05 * (7.0 * t * t).cos(),
                2 => (31.0 * t).cos(),
                _ => (t * 97.0).fract(),
            }
        });
        let truth = Matrix::from_fn(n, 1, |i, _| i as f64 / n as f64);
        let target = median_rbf(&truth).unwrap();
        let opts = BahsicOptions {
            drop_fraction: 1.0,
            ..Default::default()
        };
        let r = bahsic_select(&phi, &target, 1, &opts).unwrap();
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.trace[0].removed.len(), 3);

        let std_phi = standardized(&phi);
        let singles: Vec<f64> = (0..4)
            .map(|c| subset_hsic(&std_phi, &[c], &target, &FeatureKernel::MedianRbf).unwrap())
            .collect();
        let best = (0..4)
            .max_by(|&a, &b| singles[a].partial_cmp(&singles[b]).unwrap())
            .unwrap();
        assert_eq!(r.retained, vec![best]);
        assert_eq!(best, 1);
    }
}
