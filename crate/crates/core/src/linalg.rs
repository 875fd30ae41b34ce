//! Dense spectral primitives shared by the rankers.
//!
//! Every eigenvector returned here is normalised to unit length and flipped
//! so that its largest-magnitude entry is positive. Rankers re-orient by
//! upsets afterwards; the sign rule only makes the raw output deterministic.

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Matrix, Vector};

/// Above this size the rankers switch from dense decompositions to power
/// iteration.
pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            seed: 0,
        }
    }
}

impl SpectralConfig {
    fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::param("tol", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::param("max_iter", "must be at least 1"));
        }
        Ok(())
    }
}

fn check_square(a: &Matrix) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            context: "square matrix",
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    Ok(())
}

/// Fails unless `a` is symmetric within `1e-10` relative to its largest entry.
pub fn check_symmetric(a: &Matrix) -> Result<()> {
    check_square(a)?;
    let n = a.nrows();
    let scale = a.amax().max(1.0);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if worst > 1e-10 * scale || worst.is_nan() {
        return Err(Error::NotSymmetric(worst));
    }
    Ok(())
}

fn symmetrized(a: &Matrix) -> Matrix {
    (a + a.transpose()) * 0.5
}

/// Flips `v` so its largest-magnitude entry (first one on ties) is positive.
pub fn canonical_sign(v: &mut Vector) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if !v.is_empty() && v[best] < 0.0 {
        v.neg_mut();
    }
}

fn unit(mut v: Vector) -> Vector {
    let norm = v.norm();
    if norm > 0.0 {
        v /= norm;
    }
    v
}

/// Full eigendecomposition of a symmetric matrix, ascending by eigenvalue.
pub fn dense_sym_eig(a: &Matrix) -> Result<Vec<EigenPair>> {
    check_symmetric(a)?;
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let eig = SymmetricEigen::new(symmetrized(a));
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&x, &y| {
        eig.eigenvalues[x]
            .partial_cmp(&eig.eigenvalues[y])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.cmp(&y))
    });
    Ok(order
        .into_iter()
        .map(|k| {
            let mut vector = unit(eig.eigenvectors.column(k).into_owned());
            canonical_sign(&mut vector);
            EigenPair {
                value: eig.eigenvalues[k],
                vector,
            }
        })
        .collect())
}

fn project_out(v: &mut Vector, against: &[Vector]) {
    for u in against {
        let d = u.dot(v);
        v.axpy(-d, u, 1.0);
    }
}

fn start_vector(n: usize, seed: u64, against: &[Vector]) -> Vector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0) + 0.5);
    project_out(&mut v, against);
    unit(v)
}

/// Dominant eigenpair of a symmetric PSD matrix by power iteration.
pub fn power_top_eigenvector(a: &Matrix, cfg: &SpectralConfig) -> Result<EigenPair> {
    power_top_eigenvector_deflated(a, cfg, &[])
}

/// Power iteration restricted to the orthogonal complement of `against`
/// (which must be orthonormal).
pub fn power_top_eigenvector_deflated(a: &Matrix, cfg: &SpectralConfig, against: &[Vector]) -> Result<EigenPair> {
    cfg.validate()?;
    check_symmetric(a)?;
    let n = a.nrows();
    if n == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    let mut v = start_vector(n, cfg.seed, against);
    if v.norm() == 0.0 {
        return Err(Error::Degenerate("deflation removed the whole space".into()));
    }
    let mut change = f64::INFINITY;
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        let mut w = a * &v;
        project_out(&mut w, against);
        let norm = w.norm();
        if norm == 0.0 {
            // v lies in the null space: eigenvalue zero
            converged = true;
            break;
        }
        w /= norm;
        change = (&w - &v).norm().min((&w + &v).norm());
        v = w;
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations: cfg.max_iter,
            residual: change,
        });
    }
    canonical_sign(&mut v);
    let value = v.dot(&(a * &v));
    Ok(EigenPair { value, vector: v })
}

/// The `k` algebraically largest eigenpairs, largest first.
///
/// Dense decomposition up to [`DENSE_LIMIT`]; beyond that, shifted power
/// iteration with deflation.
pub fn top_eigenpairs(a: &Matrix, k: usize, cfg: &SpectralConfig) -> Result<Vec<EigenPair>> {
    check_symmetric(a)?;
    let n = a.nrows();
    let k = k.min(n);
    if n <= DENSE_LIMIT {
        let all = dense_sym_eig(a)?;
        return Ok(all.into_iter().rev().take(k).collect());
    }
    let shift = gershgorin_bound(a);
    let mut shifted = symmetrized(a);
    for i in 0..n {
        shifted[(i, i)] += shift;
    }
    let mut found: Vec<EigenPair> = Vec::with_capacity(k);
    for _ in 0..k {
        let basis: Vec<Vector> = found.iter().map(|p| p.vector.clone()).collect();
        let mut pair = power_top_eigenvector_deflated(&shifted, cfg, &basis)?;
        pair.value -= shift;
        found.push(pair);
    }
    Ok(found)
}

fn gershgorin_bound(a: &Matrix) -> f64 {
    a.row_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Graph Laplacian `diag(S1) - S`.
pub fn laplacian(s: &Matrix) -> Matrix {
    let mut lap = -s.clone();
    for i in 0..s.nrows() {
        lap[(i, i)] += s.row(i).sum();
    }
    lap
}

/// Eigenvector of the smallest eigenvalue of a Laplacian among vectors
/// orthogonal to the constant vector.
pub fn fiedler_vector(lap: &Matrix) -> Result<EigenPair> {
    fiedler_vector_with(lap, &SpectralConfig::default())
}

pub fn fiedler_vector_with(lap: &Matrix, cfg: &SpectralConfig) -> Result<EigenPair> {
    check_symmetric(lap)?;
    let n = lap.nrows();
    if n < 2 {
        return Err(Error::InvalidInput("Fiedler vector needs at least two items".into()));
    }
    let ones = Vector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut vector = if n <= DENSE_LIMIT {
        // Lift the constant direction above the spectrum so the smallest
        // eigenvector of the shifted matrix is orthogonal to it.
        let lift = lap.trace().abs() + 1.0;
        let shifted = symmetrized(lap) + &ones * ones.transpose() * lift;
        dense_sym_eig(&shifted)?.swap_remove(0).vector
    } else {
        let sigma = gershgorin_bound(lap);
        let mut flipped = -symmetrized(lap);
        for i in 0..n {
            flipped[(i, i)] += sigma;
        }
        power_top_eigenvector_deflated(&flipped, cfg, std::slice::from_ref(&ones))?.vector
    };
    project_out(&mut vector, std::slice::from_ref(&ones));
    let mut vector = unit(vector);
    canonical_sign(&mut vector);
    let value = vector.dot(&(lap * &vector));
    Ok(EigenPair { value, vector })
}

/// Lower-triangular factor of `M + jitter·I`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    pub l: Matrix,
    pub jitter: f64,
}

impl CholeskyFactor {
    /// `L⁻¹ B`.
    pub fn solve_lower(&self, b: &Matrix) -> Matrix {
        self.l
            .solve_lower_triangular(b)
            .expect("factor has a positive diagonal")
    }

    /// `L⁻ᵀ b`.
    pub fn solve_upper(&self, b: &Vector) -> Vector {
        self.l
            .tr_solve_lower_triangular(b)
            .expect("factor has a positive diagonal")
    }
}

/// `1e-10 · trace(M) / n`, the starting jitter for [`cholesky_jitter`].
pub fn default_jitter(m: &Matrix) -> f64 {
    let n = m.nrows().max(1) as f64;
    (1e-10 * m.trace() / n).max(0.0)
}

// Pivots smaller than this fraction of the largest diagonal entry are
// treated as a failed factorisation.
const PIVOT_FLOOR: f64 = 1e-14;

fn try_cholesky(m: &Matrix, jitter: f64) -> Option<Matrix> {
    let n = m.nrows();
    let floor = PIVOT_FLOOR * m.diagonal().amax().max(jitter);
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)] + jitter;
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !d.is_finite() || d <= floor {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

/// Cholesky factorisation with escalating diagonal jitter.
///
/// Tries `δ = 0, jitter0, 10·jitter0, …, 10⁶·jitter0` and returns the first
/// that factorises.
pub fn cholesky_jitter(m: &Matrix, jitter0: f64) -> Result<CholeskyFactor> {
    check_symmetric(m)?;
    let m = symmetrized(m);
    let mut schedule = vec![0.0];
    if jitter0 > 0.0 && jitter0.is_finite() {
        schedule.extend((0..=6).map(|k| jitter0 * 10f64.powi(k)));
    }
    for &jitter in &schedule {
        if let Some(l) = try_cholesky(&m, jitter) {
            return Ok(CholeskyFactor { l, jitter });
        }
    }
    Err(Error::NotPositiveDefinite {
        jitter: *schedule.last().unwrap(),
    })
}

#[derive(Debug, Clone)]
pub struct GeneralizedEigen {
    pub pair: EigenPair,
    /// Jitter added to `B` before the reduction.
    pub jitter: f64,
}

/// Largest eigenvalue of `A x = λ B x` via Cholesky reduction of `B`.
pub fn generalized_top_eig(a: &Matrix, b: &Matrix) -> Result<GeneralizedEigen> {
    check_symmetric(a)?;
    check_symmetric(b)?;
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch {
            context: "generalized eigenproblem",
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    let chol = cholesky_jitter(b, default_jitter(b))?;
    let left = chol.solve_lower(&symmetrized(a));
    let reduced = symmetrized(&chol.solve_lower(&left.transpose()));
    let top = dense_sym_eig(&reduced)?
        .pop()
        .ok_or_else(|| Error::InvalidInput("empty matrix".into()))?;
    let mut x = unit(chol.solve_upper(&top.vector));
    canonical_sign(&mut x);
    Ok(GeneralizedEigen {
        pair: EigenPair {
            value: top.value,
            vector: x,
        },
        jitter: chol.jitter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn dense_diagonal() {
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![1., 2., 3.]));
        let pairs = dense_sym_eig(&a).unwrap();
        for (k, p) in pairs.iter().enumerate() {
            assert_abs_diff_eq!(p.value, (k + 1) as f64, epsilon = 1e-14);
            let mut e = Vector::zeros(3);
            e[k] = 1.0;
            assert_abs_diff_eq!(p.vector, e, epsilon = 1e-14);
        }
    }

    #[test]
    fn dense_two_by_two_swap() {
        let a = Matrix::from_row_slice(2, 2, &[0., 1., 1., 0.]);
        let pairs = dense_sym_eig(&a).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert_abs_diff_eq!(pairs[0].value, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(pairs[0].vector, Vector::from_vec(vec![h, -h]), epsilon = 1e-14);
        assert_abs_diff_eq!(pairs[1].value, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(pairs[1].vector, Vector::from_vec(vec![h, h]), epsilon = 1e-14);
    }

    #[test]
    fn dense_zero_and_nonsymmetric() {
        let pairs = dense_sym_eig(&Matrix::zeros(3, 3)).unwrap();
        assert!(pairs.iter().all(|p| p.value == 0.0));
        let bad = Matrix::from_row_slice(2, 2, &[0., 1., 0., 0.]);
        assert!(matches!(dense_sym_eig(&bad), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn power_diagonal_and_identity() {
        let cfg = SpectralConfig::default();
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![1., 2., 3.]));
        let p = power_top_eigenvector(&a, &cfg).unwrap();
        assert_abs_diff_eq!(p.value, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.vector[2].abs(), 1.0, epsilon = 1e-9);
        let p = power_top_eigenvector(&Matrix::identity(4, 4), &cfg).unwrap();
        assert_abs_diff_eq!(p.value, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.vector.norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn power_reports_non_convergence() {
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 0.999999]));
        let cfg = SpectralConfig {
            max_iter: 5,
            ..Default::default()
        };
        assert!(matches!(
            power_top_eigenvector(&a, &cfg),
            Err(Error::NoConvergence { iterations: 5, .. })
        ));
    }

    #[test]
    fn deflation_finds_second_pair() {
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![1., 5., 3.]));
        let cfg = SpectralConfig::default();
        let pairs = top_eigenpairs(&a, 2, &cfg).unwrap();
        assert_abs_diff_eq!(pairs[0].value, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pairs[1].value, 3.0, epsilon = 1e-12);
        let first = power_top_eigenvector(&a, &cfg).unwrap();
        let second = power_top_eigenvector_deflated(&a, &cfg, &[first.vector]).unwrap();
        assert_abs_diff_eq!(second.value, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn fiedler_path_graph() {
        let lap = Matrix::from_row_slice(3, 3, &[1., -1., 0., -1., 2., -1., 0., -1., 1.]);
        let f = fiedler_vector(&lap).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert_abs_diff_eq!(f.value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.vector, Vector::from_vec(vec![h, 0., -h]), epsilon = 1e-12);
    }

    #[test]
    fn fiedler_complete_graph_is_orthogonal_to_ones() {
        let lap = Matrix::from_row_slice(3, 3, &[2., -1., -1., -1., 2., -1., -1., -1., 2.]);
        let f = fiedler_vector(&lap).unwrap();
        assert_abs_diff_eq!(f.value, 3.0, epsilon = 1e-12);
        assert!(f.vector.sum().abs() < 1e-12);
        assert_eq!(fiedler_vector(&lap).unwrap(), f);
    }

    #[test]
    fn fiedler_two_components() {
        let s = Matrix::from_row_slice(4, 4, &[0., 1., 0., 0., 1., 0., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0.]);
        let f = fiedler_vector(&laplacian(&s)).unwrap();
        assert!(f.value.abs() < 1e-12);
        assert_abs_diff_eq!(f.vector[0], f.vector[1], epsilon = 1e-12);
        assert_abs_diff_eq!(f.vector[2], f.vector[3], epsilon = 1e-12);
        assert!(f.vector[0] * f.vector[2] < 0.0);
        assert!(fiedler_vector(&Matrix::zeros(1, 1)).is_err());
    }

    #[test]
    fn cholesky_examples() {
        let id = Matrix::identity(3, 3);
        let f = cholesky_jitter(&id, 1e-10).unwrap();
        assert_eq!(f.jitter, 0.0);
        assert_eq!(f.l, id);

        let ones = Matrix::from_element(2, 2, 1.0);
        let f = cholesky_jitter(&ones, 1e-10).unwrap();
        assert_eq!(f.jitter, 1e-10);
        let rebuilt = &f.l * f.l.transpose();
        assert_abs_diff_eq!(rebuilt, ones + Matrix::identity(2, 2) * 1e-10, epsilon = 1e-15);

        assert!(matches!(
            cholesky_jitter(&(-id), 1e-10),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn generalized_simple_cases() {
        let id = Matrix::identity(2, 2);
        let g = generalized_top_eig(&id, &id).unwrap();
        assert_abs_diff_eq!(g.pair.value, 1.0, epsilon = 1e-14);
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![2., 1.]));
        let g = generalized_top_eig(&a, &id).unwrap();
        assert_abs_diff_eq!(g.pair.value, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.pair.vector, Vector::from_vec(vec![1., 0.]), epsilon = 1e-14);
    }
}
