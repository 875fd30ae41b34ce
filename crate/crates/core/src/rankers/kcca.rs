use serde::{Deserialize, Serialize};

use crate::data::{ComparisonGraph, FeatureTable, RankResult};
use crate::error::{Error, Result};
use crate::kernels::{center, comparison_kernel, kernel_matrix, KernelSpec};
use crate::linalg::generalized_top_eig;
use crate::metrics::orient_ranking;
use crate::{Matrix, Vector};

use super::covariate::{covariate_names, rows};
use super::{sign_of, Algorithm, Coefficients, FittedModel};

/// Default regulariser, `1e-3 · n`.
pub fn default_epsilon(n: usize) -> f64 {
    1e-3 * n as f64
}

/// Which canonical function produced the returned ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KccaSide {
    /// `r₁ = K H α`, the covariate side.
    Covariates,
    /// `r₂ = G H β`, the comparison side.
    Comparisons,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KccaRank {
    /// The fewer-upset of the two oriented candidates.
    pub result: RankResult,
    pub covariate_side: RankResult,
    pub comparison_side: RankResult,
    pub chosen: KccaSide,
    /// Top generalised eigenvalue.
    pub correlation: f64,
    /// Covariate-side coefficients, oriented like `covariate_side`.
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

/// Kernel CCA between the covariate kernel `k` and the comparison kernel `gk`.
///
/// With `K̃ = HKH`, `G̃ = HGH` and `K* = K̃(K̃ + εI)/n`, solves
/// `[0, K̃G̃/n; G̃K̃/n, 0] x = ρ blockdiag(K*, G*) x` and scores with
/// `r₁ = KHα`, `r₂ = GHβ`.
pub fn kcca_rank(k: &Matrix, gk: &Matrix, epsilon: f64, g: &ComparisonGraph) -> Result<KccaRank> {
    let n = g.n();
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::param(
            "epsilon",
            format!("must be finite and > 0, got {epsilon}"),
        ));
    }
    for (m, what) in [(k, "covariate kernel size"), (gk, "comparison kernel size")] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: what,
                expected: n,
                got: m.nrows(),
            });
        }
    }
    let nf = n as f64;
    let kt = center(k);
    let gt = center(gk);
    let star = |m: &Matrix| {
        let s = (m * m + m * epsilon) / nf;
        (&s + s.transpose()) * 0.5
    };
    let cross = &kt * &gt / nf;
    let mut a = Matrix::zeros(2 * n, 2 * n);
    a.view_mut((0, n), (n, n)).copy_from(&cross);
    a.view_mut((n, 0), (n, n)).copy_from(&cross.transpose());
    let mut b = Matrix::zeros(2 * n, 2 * n);
    b.view_mut((0, 0), (n, n)).copy_from(&star(&kt));
    b.view_mut((n, n), (n, n)).copy_from(&star(&gt));
    let eig = generalized_top_eig(&a, &b)?;
    let x = &eig.pair.vector;
    let alpha = Vector::from_iterator(n, x.rows(0, n).iter().copied());
    let beta = Vector::from_iterator(n, x.rows(n, n).iter().copied());
    let r1 = k * centered(&alpha);
    let r2 = gk * centered(&beta);
    let covariate_side = orient_ranking(g, r1.as_slice())?;
    let comparison_side = orient_ranking(g, r2.as_slice())?;
    let chosen = if comparison_side.upsets < covariate_side.upsets {
        KccaSide::Comparisons
    } else {
        KccaSide::Covariates
    };
    let result = match chosen {
        KccaSide::Covariates => covariate_side.clone(),
        KccaSide::Comparisons => comparison_side.clone(),
    };
    let s1 = sign_of(covariate_side.orientation);
    let s2 = sign_of(comparison_side.orientation);
    Ok(KccaRank {
        result,
        covariate_side,
        comparison_side,
        chosen,
        correlation: eig.pair.value,
        alpha: alpha.iter().map(|v| v * s1).collect(),
        beta: beta.iter().map(|v| v * s2).collect(),
    })
}

fn centered(v: &Vector) -> Vector {
    let mean = v.mean();
    v.map(|x| x - mean)
}

/// [`kcca_rank`] with `K` from `spec` on the covariates and `G` the
/// median-heuristic RBF on the rows of `C`.
///
/// The model predicts with the covariate side only.
pub fn kcca_rank_features(
    g: &ComparisonGraph,
    features: &FeatureTable,
    spec: &KernelSpec,
    epsilon: f64,
) -> Result<(KccaRank, FittedModel)> {
    features.check_rows(g.n())?;
    let phi = features.covariates();
    if phi.ncols() == 0 {
        return Err(Error::InvalidInput("no non-sensitive covariate columns".into()));
    }
    let k = kernel_matrix(&phi, spec)?;
    let gk = comparison_kernel(g)?;
    let out = kcca_rank(&k, &gk, epsilon, g)?;
    // KHα evaluated at a new point is Σ (Hα)ᵢ k(φᵢ, ·).
    let alpha = centered(&Vector::from_column_slice(&out.alpha));
    let model = FittedModel {
        algo: Algorithm::Kcca,
        feature_names: covariate_names(features),
        coefficients: Coefficients::Kernel {
            alpha: alpha.iter().copied().collect(),
            kernel: *spec,
            train_features: rows(&phi),
            column_means: vec![0.0; g.n()],
        },
        gamma: out.alpha.clone(),
        lambda: Some(epsilon),
        train_scores: out.covariate_side.scores.clone(),
    };
    Ok((out, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ComparisonKind;
    use crate::metrics::kendall_tau;
    use crate::metrics::sign0;
    use approx::assert_relative_eq;

    #[test]
    fn noiseless_linear_scores() {
        let n = 40;
        let phi = Matrix::from_fn(n, 2, |i, j| (((i + 1) * (j + 3)) as f64 * 0.71).sin());
        let r: Vec<f64> = (0..n).map(|i| phi[(i, 0)] - 0.5 * phi[(i, 1)]).collect();
        let c = Matrix::from_fn(n, n, |i, j| r[i] - r[j]);
        let g = ComparisonGraph::from_matrix(c, ComparisonKind::Cardinal).unwrap();
        let f = FeatureTable::from_matrix(phi).unwrap();
        let (out, model) = kcca_rank_features(&g, &f, &KernelSpec::Linear, 1e-3).unwrap();
        assert!(kendall_tau(&out.result.scores, &r).unwrap() > 0.99);
        let again = model.score(f.values()).unwrap();
        for (a, b) in again.iter().zip(&out.covariate_side.scores) {
            assert_relative_eq!(a, b, epsilon = 1e-8 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn huge_epsilon_still_ranks() {
        let n = 12;
        let r: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let c = Matrix::from_fn(n, n, |i, j| sign0(r[i] - r[j]));
        let g = ComparisonGraph::from_matrix(c, ComparisonKind::Ordinal).unwrap();
        let f = FeatureTable::from_matrix(Matrix::from_fn(n, 1, |i, _| r[i])).unwrap();
        let (out, _) = kcca_rank_features(&g, &f, &KernelSpec::rbf(3.0), 1e6).unwrap();
        assert_eq!(out.result.scores.len(), n);
        assert!(kcca_rank_features(&g, &f, &KernelSpec::rbf(3.0), 0.0).is_err());
    }
}
