use serde::{Deserialize, Serialize};

use crate::data::{ComparisonGraph, FeatureTable, RankResult};
use crate::error::{Error, Result};
use crate::kernels::{center_columns, kernel_matrix, median_heuristic, KernelSpec};
use crate::linalg::{cholesky_jitter, default_jitter, top_eigenpairs, SpectralConfig};
use crate::metrics::orient_ranking;
use crate::{Matrix, Vector};

use super::{sign_of, Algorithm, Coefficients, FittedModel};

/// Fairness regulariser for SVDKFair-Rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessConfig {
    /// Penalty weight; `0` reduces to SVDKCov-Rank.
    pub lambda: f64,
    /// Kernel on the sensitive columns. Default median-heuristic RBF.
    pub sensitive_kernel: Option<KernelSpec>,
}

impl FairnessConfig {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            sensitive_kernel: None,
        }
    }
}

fn top_vector(psi: &Matrix) -> Result<Vector> {
    let mut pairs = top_eigenpairs(psi, 1, &SpectralConfig::default())?;
    Ok(pairs.remove(0).vector)
}

// Relative size below which centred covariates count as constant.
const DEGENERATE_TOL: f64 = 1e-24;

/// SVDCov-Rank: linear scores `r = HΦβ` maximising `‖Cᵀ HΦβ‖` subject to
/// `βᵀΦᵀHΦβ = 1`.
pub fn svdcov_rank(g: &ComparisonGraph, features: &FeatureTable) -> Result<(RankResult, FittedModel)> {
    features.check_rows(g.n())?;
    let phi = features.covariates();
    if phi.ncols() == 0 {
        return Err(Error::InvalidInput("no non-sensitive covariate columns".into()));
    }
    let (hphi, means) = center_columns(&phi);
    let cov = hphi.transpose() * &hphi;
    if cov.trace() <= DEGENERATE_TOL * phi.norm_squared().max(f64::MIN_POSITIVE) {
        return Err(Error::Degenerate("centred covariates are all zero".into()));
    }
    let chol = cholesky_jitter(&cov, default_jitter(&cov))?;
    let w = chol.solve_lower(&(hphi.transpose() * g.matrix()));
    let psi = &w * w.transpose();
    let gamma = top_vector(&psi)?;
    let beta = chol.solve_upper(&gamma);
    let r = &hphi * &beta;
    let result = orient_ranking(g, r.as_slice())?;
    let s = sign_of(result.orientation);
    let model = FittedModel {
        algo: Algorithm::SvdCov,
        feature_names: covariate_names(features),
        coefficients: Coefficients::Linear {
            beta: beta.iter().map(|b| b * s).collect(),
            feature_means: means,
        },
        gamma: gamma.iter().copied().collect(),
        lambda: None,
        train_scores: result.scores.clone(),
    };
    Ok((result, model))
}

/// SVDKCov-Rank: kernel scores `r = HKα` maximising `‖Cᵀ HKα‖` subject to
/// `αᵀKHKα = 1`.
pub fn svdkcov_rank(
    g: &ComparisonGraph,
    features: &FeatureTable,
    spec: &KernelSpec,
) -> Result<(RankResult, FittedModel)> {
    kernel_core(g, features, spec, None)
}

/// SVDKFair-Rank: SVDKCov-Rank with `CCᵀ` replaced by `CCᵀ - (λ/n²) G`, where
/// `G` is a kernel on the sensitive columns.
pub fn svdkfair_rank(
    g: &ComparisonGraph,
    features: &FeatureTable,
    spec: &KernelSpec,
    fair: &FairnessConfig,
) -> Result<(RankResult, FittedModel)> {
    if !fair.lambda.is_finite() || fair.lambda < 0.0 {
        return Err(Error::param(
            "fair_lambda",
            format!("must be finite and >= 0, got {}", fair.lambda),
        ));
    }
    if features.sensitive_columns().is_empty() {
        return Err(Error::param(
            "sensitive",
            "fairness regularisation needs at least one sensitive column",
        ));
    }
    kernel_core(g, features, spec, Some(fair))
}

fn kernel_core(
    g: &ComparisonGraph,
    features: &FeatureTable,
    spec: &KernelSpec,
    fair: Option<&FairnessConfig>,
) -> Result<(RankResult, FittedModel)> {
    features.check_rows(g.n())?;
    spec.validate()?;
    let phi = features.covariates();
    if phi.ncols() == 0 {
        return Err(Error::InvalidInput("no non-sensitive covariate columns".into()));
    }
    let n = g.n();
    let k = kernel_matrix(&phi, spec)?;
    // H K; K H K = (HK)ᵀ(HK) since H is idempotent.
    let (hk, column_means) = center_columns(&k);
    let khk = hk.transpose() * &hk;
    if khk.trace() <= DEGENERATE_TOL * k.norm_squared().max(f64::MIN_POSITIVE) {
        return Err(Error::Degenerate(
            "centred kernel matrix vanishes (constant kernel)".into(),
        ));
    }
    let chol = cholesky_jitter(&khk, default_jitter(&khk))?;
    let v = chol.solve_lower(&hk.transpose());
    let vc = &v * g.matrix();
    let mut psi = &vc * vc.transpose();
    let mut lambda = None;
    if let Some(fair) = fair {
        lambda = Some(fair.lambda);
        if fair.lambda > 0.0 {
            let z = features.sensitive();
            let gspec = fair
                .sensitive_kernel
                .unwrap_or_else(|| KernelSpec::rbf(median_heuristic(&z)));
            let gk = kernel_matrix(&z, &gspec)?;
            let penalty = &v * gk * v.transpose();
            psi -= penalty * (fair.lambda / (n * n) as f64);
            psi = (&psi + psi.transpose()) * 0.5;
        }
    }
    let gamma = top_vector(&psi)?;
    let alpha = chol.solve_upper(&gamma);
    let r = &hk * &alpha;
    let result = orient_ranking(g, r.as_slice())?;
    let s = sign_of(result.orientation);
    let algo = if fair.is_some() {
        Algorithm::SvdKFair
    } else {
        Algorithm::SvdKCov
    };
    let model = FittedModel {
        algo,
        feature_names: covariate_names(features),
        coefficients: Coefficients::Kernel {
            alpha: alpha.iter().map(|a| a * s).collect(),
            kernel: *spec,
            train_features: rows(&phi),
            column_means,
        },
        gamma: gamma.iter().copied().collect(),
        lambda,
        train_scores: result.scores.clone(),
    };
    Ok((result, model))
}

pub(super) fn covariate_names(features: &FeatureTable) -> Vec<String> {
    features
        .covariate_columns()
        .into_iter()
        .map(|c| features.column_names()[c].clone())
        .collect()
}

pub(super) fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ComparisonKind;
    use crate::metrics::kendall_tau;
    use approx::assert_relative_eq;

    fn linear_problem(n: usize) -> (ComparisonGraph, FeatureTable, Vec<f64>) {
        let phi = Matrix::from_fn(n, 3, |i, j| (((i + 1) * (j + 2)) as f64 * 0.37).sin());
        let r: Vec<f64> = (0..n)
            .map(|i| 2.0 * phi[(i, 0)] - phi[(i, 1)] + 0.5 * phi[(i, 2)])
            .collect();
        let c = Matrix::from_fn(n, n, |i, j| r[i] - r[j]);
        let g = ComparisonGraph::from_matrix(c, ComparisonKind::Cardinal).unwrap();
        (g, FeatureTable::from_matrix(phi).unwrap(), r)
    }

    #[test]
    fn svdcov_recovers_linear_scores() {
        let (g, f, r) = linear_problem(30);
        let (res, model) = svdcov_rank(&g, &f).unwrap();
        assert_relative_eq!(kendall_tau(&res.scores, &r).unwrap(), 1.0);
        let again = model.score(f.values()).unwrap();
        for (a, b) in again.iter().zip(&res.scores) {
            assert_relative_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn svdkcov_linear_kernel_recovers_linear_scores() {
        let (g, f, r) = linear_problem(30);
        let (res, model) = svdkcov_rank(&g, &f, &KernelSpec::Linear).unwrap();
        assert_relative_eq!(kendall_tau(&res.scores, &r).unwrap(), 1.0);
        let again = model.score(f.values()).unwrap();
        for (a, b) in again.iter().zip(&res.scores) {
            assert_relative_eq!(a, b, epsilon = 1e-8 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn constant_features_are_degenerate() {
        let (g, _, _) = linear_problem(10);
        let f = FeatureTable::from_matrix(Matrix::from_element(10, 2, 3.0)).unwrap();
        assert!(matches!(svdcov_rank(&g, &f), Err(Error::Degenerate(_))));
        assert!(matches!(
            svdkcov_rank(&g, &f, &KernelSpec::rbf(1.0)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn fair_with_zero_lambda_matches_kcov() {
        let (g, f, _) = linear_problem(20);
        let f = FeatureTable::from_matrix(f.values().clone())
            .unwrap()
            .with_sensitive(vec![2])
            .unwrap();
        let spec = KernelSpec::rbf(1.0);
        let (a, _) = svdkcov_rank(&g, &f, &spec).unwrap();
        let (b, _) = svdkfair_rank(&g, &f, &spec, &FairnessConfig::new(0.0)).unwrap();
        assert_eq!(a, b);
        assert!(svdkfair_rank(&g, &f, &spec, &FairnessConfig::new(-1.0)).is_err());
    }
}
