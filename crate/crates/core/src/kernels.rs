//! Kernel matrices, centering, HSIC and the permutation independence test.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::ComparisonGraph;
use crate::error::{Error, Result};
use crate::Matrix;

/// Multipliers of the median-heuristic lengthscale used for tuning.
pub const LENGTHSCALE_GRID: [f64; 7] = [0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 10.0];

/// Default number of permutations for [`hsic_test`].
pub const DEFAULT_PERMUTATIONS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum KernelSpec {
    /// `exp(-‖x - x'‖² / (2 d²))`
    Rbf { lengthscale: f64 },
    /// `⟨x, x'⟩`
    Linear,
}

impl KernelSpec {
    pub fn rbf(lengthscale: f64) -> Self {
        KernelSpec::Rbf { lengthscale }
    }

    pub fn validate(&self) -> Result<()> {
        if let KernelSpec::Rbf { lengthscale } = self {
            if !lengthscale.is_finite() || *lengthscale <= 0.0 {
                return Err(Error::param(
                    "lengthscale",
                    format!("must be positive and finite, got {lengthscale}"),
                ));
            }
        }
        Ok(())
    }

    fn eval_sq(&self, sq_dist: f64, dot: f64) -> f64 {
        match *self {
            KernelSpec::Rbf { lengthscale } => (-sq_dist / (2.0 * lengthscale * lengthscale)).exp(),
            KernelSpec::Linear => dot,
        }
    }
}

fn row_sq_dist_and_dot(a: &Matrix, i: usize, b: &Matrix, j: usize) -> (f64, f64) {
    let mut sq = 0.0;
    let mut dot = 0.0;
    for k in 0..a.ncols() {
        let (x, y) = (a[(i, k)], b[(j, k)]);
        sq += (x - y) * (x - y);
        dot += x * y;
    }
    (sq, dot)
}

/// Gram matrix `K[i, j] = k(x_i, x_j)` over the rows of `x`.
pub fn kernel_matrix(x: &Matrix, spec: &KernelSpec) -> Result<Matrix> {
    spec.validate()?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite kernel input".into()));
    }
    let n = x.nrows();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let (sq, dot) = row_sq_dist_and_dot(x, i, x, j);
            let v = spec.eval_sq(sq, dot);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// `m × n` matrix `k(new_i, train_j)`.
pub fn cross_kernel(new: &Matrix, train: &Matrix, spec: &KernelSpec) -> Result<Matrix> {
    spec.validate()?;
    if new.ncols() != train.ncols() {
        return Err(Error::DimensionMismatch {
            context: "kernel feature columns",
            expected: train.ncols(),
            got: new.ncols(),
        });
    }
    Ok(Matrix::from_fn(new.nrows(), train.nrows(), |i, j| {
        let (sq, dot) = row_sq_dist_and_dot(new, i, train, j);
        spec.eval_sq(sq, dot)
    }))
}

/// `H = I - 11ᵀ/n`.
pub fn centering_matrix(n: usize) -> Matrix {
    let mut h = Matrix::from_element(n, n, -1.0 / n as f64);
    for i in 0..n {
        h[(i, i)] += 1.0;
    }
    h
}

/// `H K H`, computed by subtracting row, column and grand means.
pub fn center(k: &Matrix) -> Matrix {
    let n = k.nrows();
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| k.row(i).sum() / nf).collect();
    let col_means: Vec<f64> = (0..k.ncols()).map(|j| k.column(j).sum() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    Matrix::from_fn(n, k.ncols(), |i, j| k[(i, j)] - row_means[i] - col_means[j] + grand)
}

/// `H X`: each column minus its mean.
pub fn center_columns(x: &Matrix) -> (Matrix, Vec<f64>) {
    let n = x.nrows() as f64;
    let means: Vec<f64> = x.column_iter().map(|c| c.sum() / n).collect();
    let centered = Matrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] - means[j]);
    (centered, means)
}

fn check_pair(k: &Matrix, g: &Matrix) -> Result<()> {
    if k.nrows() != k.ncols() || g.nrows() != g.ncols() || k.nrows() != g.nrows() {
        return Err(Error::DimensionMismatch {
            context: "HSIC kernel sizes",
            expected: k.nrows(),
            got: g.nrows(),
        });
    }
    if k.nrows() == 0 {
        return Err(Error::InvalidInput("HSIC of empty sample".into()));
    }
    Ok(())
}

/// Empirical HSIC `Tr(K H G H) / n²`.
pub fn hsic(k: &Matrix, g: &Matrix) -> Result<f64> {
    check_pair(k, g)?;
    let n = k.nrows() as f64;
    Ok(center(k).component_mul(g).sum() / (n * n))
}

/// Median of the pairwise Euclidean distances between rows.
///
/// Falls back to 1 when all rows coincide.
pub fn median_heuristic(x: &Matrix) -> f64 {
    let n = x.nrows();
    let mut dists = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            dists.push(row_sq_dist_and_dot(x, i, x, j).0.sqrt());
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let m = dists.len();
    let median = if m % 2 == 1 {
        dists[m / 2]
    } else {
        0.5 * (dists[m / 2 - 1] + dists[m / 2])
    };
    if median > 0.0 {
        median
    } else {
        dists.iter().copied().find(|d| *d > 0.0).unwrap_or(1.0)
    }
}

/// RBF kernel with the median-heuristic lengthscale.
pub fn median_rbf(x: &Matrix) -> Result<Matrix> {
    kernel_matrix(x, &KernelSpec::rbf(median_heuristic(x)))
}

/// Kernel on the rows of the comparison matrix (RBF, median heuristic).
pub fn comparison_kernel(g: &ComparisonGraph) -> Result<Matrix> {
    median_rbf(g.matrix())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HsicTestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_permutations: usize,
    pub alpha: f64,
    pub reject: bool,
}

/// Permutation test of independence between the rows of `x` and `z`.
///
/// Each permutation `b` draws from its own stream of the seeded generator, so
/// results do not depend on evaluation order.
pub fn hsic_test(
    x: &Matrix,
    z: &Matrix,
    spec_x: &KernelSpec,
    spec_z: &KernelSpec,
    n_perm: usize,
    alpha: f64,
    seed: u64,
) -> Result<HsicTestResult> {
    let k = kernel_matrix(x, spec_x)?;
    let g = kernel_matrix(z, spec_z)?;
    hsic_test_kernels(&k, &g, n_perm, alpha, seed)
}

/// [`hsic_test`] on precomputed kernels.
pub fn hsic_test_kernels(k: &Matrix, g: &Matrix, n_perm: usize, alpha: f64, seed: u64) -> Result<HsicTestResult> {
    check_pair(k, g)?;
    let n = k.nrows();
    if n < 5 {
        return Err(Error::InvalidInput(format!(
            "independence test needs at least 5 samples, got {n}"
        )));
    }
    if n_perm < 99 {
        return Err(Error::param("n_perm", "must be at least 99"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", "must lie in (0, 1)"));
    }
    let kc = center(k);
    let nn = (n * n) as f64;
    let stat_for = |perm: &[usize]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            let gi = perm[i];
            for j in 0..n {
                s += kc[(i, j)] * g[(gi, perm[j])];
            }
        }
        s / nn
    };
    let identity: Vec<usize> = (0..n).collect();
    let statistic = stat_for(&identity);
    let mut exceed = 0usize;
    let mut perm = identity;
    for b in 0..n_perm {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64 + 1);
        perm.sort_unstable();
        perm.shuffle(&mut rng);
        if stat_for(&perm) >= statistic {
            exceed += 1;
        }
    }
    let p_value = (1 + exceed) as f64 / (1 + n_perm) as f64;
    Ok(HsicTestResult {
        statistic,
        p_value,
        n_permutations: n_perm,
        alpha,
        reject: p_value <= alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn rbf_identical_rows_give_ones() {
        let x = Matrix::from_element(4, 2, 0.3);
        let k = kernel_matrix(&x, &KernelSpec::rbf(0.7)).unwrap();
        assert!(k.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn rbf_huge_lengthscale_tends_to_ones() {
        let x = Matrix::from_row_slice(3, 1, &[0., 1., 2.]);
        let k = kernel_matrix(&x, &KernelSpec::rbf(2e6)).unwrap();
        assert!(k.iter().all(|&v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn rbf_two_points() {
        let x = Matrix::from_row_slice(2, 1, &[0., 1.]);
        let k = kernel_matrix(&x, &KernelSpec::rbf(1.0)).unwrap();
        let e = (-0.5f64).exp();
        assert_abs_diff_eq!(k, Matrix::from_row_slice(2, 2, &[1., e, e, 1.]), epsilon = 1e-15);
        assert!(kernel_matrix(&x, &KernelSpec::rbf(0.0)).is_err());
        assert!(kernel_matrix(&x, &KernelSpec::rbf(-1.0)).is_err());
    }

    #[test]
    fn hsic_examples() {
        let ones = Matrix::from_element(4, 4, 1.0);
        let g = Matrix::identity(4, 4);
        assert_abs_diff_eq!(hsic(&ones, &g).unwrap(), 0.0, epsilon = 1e-15);
        let id = Matrix::identity(2, 2);
        // Tr(H) / n² = 1 / 4.
        assert_abs_diff_eq!(hsic(&id, &id).unwrap(), 0.25, epsilon = 1e-15);
        assert!(hsic(&id, &g).is_err());
    }

    #[test]
    fn centering_matrix_is_idempotent() {
        let h = centering_matrix(7);
        assert_abs_diff_eq!(&h * &h, h, epsilon = 1e-12);
        let k = Matrix::from_fn(7, 7, |i, j| ((i * j) as f64).cos() + (i + j) as f64);
        let k = (&k + k.transpose()) * 0.5;
        assert_abs_diff_eq!(center(&k), &h * &k * &h, epsilon = 1e-12);
    }

    #[test]
    fn permutation_test_smallest_p_value() {
        let x = Matrix::from_fn(30, 1, |i, _| i as f64);
        let r = hsic_test(&x, &x, &KernelSpec::rbf(3.0), &KernelSpec::rbf(3.0), 99, 0.05, 1).unwrap();
        assert_eq!(r.p_value, 0.01);
        assert!(r.reject);
        assert!(hsic_test(&x, &x, &KernelSpec::Linear, &KernelSpec::Linear, 50, 0.05, 1).is_err());
        let small = Matrix::zeros(4, 1);
        assert!(hsic_test(&small, &small, &KernelSpec::Linear, &KernelSpec::Linear, 99, 0.05, 1).is_err());
    }

    #[test]
    fn median_heuristic_simple() {
        let x = Matrix::from_row_slice(3, 1, &[0., 1., 3.]);
        assert_eq!(median_heuristic(&x), 2.0);
        assert_eq!(median_heuristic(&Matrix::zeros(3, 1)), 1.0);
    }

    proptest! {
        #[test]
        fn hsic_symmetric_nonnegative_and_permutation_invariant(
            xs in prop::collection::vec(-3.0f64..3.0, 8),
            zs in prop::collection::vec(-3.0f64..3.0, 8),
            shift in -10.0f64..10.0,
            rot in 1usize..8,
        ) {
            let x = Matrix::from_column_slice(8, 1, &xs);
            let z = Matrix::from_column_slice(8, 1, &zs);
            let spec = KernelSpec::rbf(1.3);
            let k = kernel_matrix(&x, &spec).unwrap();
            let g = kernel_matrix(&z, &spec).unwrap();
            let a = hsic(&k, &g).unwrap();
            prop_assert!(a >= -1e-12);
            prop_assert!((a - hsic(&g, &k).unwrap()).abs() < 1e-12);

            let perm: Vec<usize> = (0..8).map(|i| (i + rot) % 8).collect();
            let kp = Matrix::from_fn(8, 8, |i, j| k[(perm[i], perm[j])]);
            let gp = Matrix::from_fn(8, 8, |i, j| g[(perm[i], perm[j])]);
            prop_assert!((a - hsic(&kp, &gp).unwrap()).abs() < 1e-12);

            let shifted = x.map(|v| v + shift);
            let ks = kernel_matrix(&shifted, &spec).unwrap();
            prop_assert!((&ks - &k).amax() < 1e-12);
        }
    }
}
