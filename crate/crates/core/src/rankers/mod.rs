//! Spectral ranking algorithms.
//!
//! Every ranker takes a [`ComparisonGraph`] (plus covariates where needed) and
//! returns a [`RankResult`] oriented to minimise upsets. The covariate-based
//! rankers also return a [`FittedModel`] that can score unseen items.
//!
//! Rankers learn from the non-sensitive columns of a [`FeatureTable`];
//! sensitive columns are only read by the fairness regulariser.

mod centrality;
mod covariate;
mod kcca;
mod serial;
mod svd;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use centrality::{probability_proxy, rank_centrality};
pub use covariate::{svdcov_rank, svdkcov_rank, svdkfair_rank, FairnessConfig};
pub use kcca::{default_epsilon, kcca_rank, kcca_rank_features, KccaRank, KccaSide};
pub use serial::{c_serial_rank, serial_rank};
pub use svd::svd_rank;

use crate::data::{similarity_matrix, ComparisonGraph, FeatureTable, Orientation, RankResult};
use crate::error::{Error, Result};
use crate::kernels::{cross_kernel, kernel_matrix, median_heuristic, KernelSpec};
use crate::metrics::descending_order;
use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "serial")]
    Serial,
    #[serde(rename = "cserial")]
    CSerial,
    #[serde(rename = "svd")]
    Svd,
    #[serde(rename = "svdn")]
    SvdNorm,
    #[serde(rename = "svdc")]
    SvdCov,
    #[serde(rename = "svdk")]
    SvdKCov,
    #[serde(rename = "svdkfair")]
    SvdKFair,
    #[serde(rename = "kcca")]
    Kcca,
    #[serde(rename = "rc")]
    RankCentrality,
}

impl Algorithm {
    pub const ALL: [Algorithm; 9] = [
        Algorithm::Serial,
        Algorithm::CSerial,
        Algorithm::Svd,
        Algorithm::SvdNorm,
        Algorithm::SvdCov,
        Algorithm::SvdKCov,
        Algorithm::SvdKFair,
        Algorithm::Kcca,
        Algorithm::RankCentrality,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Algorithm::Serial => "serial",
            Algorithm::CSerial => "cserial",
            Algorithm::Svd => "svd",
            Algorithm::SvdNorm => "svdn",
            Algorithm::SvdCov => "svdc",
            Algorithm::SvdKCov => "svdk",
            Algorithm::SvdKFair => "svdkfair",
            Algorithm::Kcca => "kcca",
            Algorithm::RankCentrality => "rc",
        }
    }

    pub fn needs_features(&self) -> bool {
        matches!(
            self,
            Algorithm::CSerial | Algorithm::SvdCov | Algorithm::SvdKCov | Algorithm::SvdKFair | Algorithm::Kcca
        )
    }

    /// Whether the fitted model can score items it has never seen compared.
    pub fn can_predict(&self) -> bool {
        matches!(
            self,
            Algorithm::SvdCov | Algorithm::SvdKCov | Algorithm::SvdKFair | Algorithm::Kcca
        )
    }

    /// Whether the algorithm has a feature-kernel lengthscale to tune.
    pub fn uses_kernel(&self) -> bool {
        matches!(
            self,
            Algorithm::CSerial | Algorithm::SvdKCov | Algorithm::SvdKFair | Algorithm::Kcca
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL.iter().copied().find(|a| a.tag() == s).ok_or_else(|| {
            Error::param(
                "algo",
                format!(
                    "unknown algorithm `{s}` (expected one of {})",
                    Algorithm::ALL.iter().map(|a| a.tag()).collect::<Vec<_>>().join(", ")
                ),
            )
        })
    }
}

/// Coefficients needed to score new items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coefficients {
    /// `score(φ) = (φ - μ)ᵀ β`.
    Linear { beta: Vec<f64>, feature_means: Vec<f64> },
    /// `score(φ) = Σᵢ αᵢ (k(φᵢ, φ) - mᵢ)`.
    Kernel {
        alpha: Vec<f64>,
        kernel: KernelSpec,
        train_features: Vec<Vec<f64>>,
        column_means: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub algo: Algorithm,
    pub feature_names: Vec<String>,
    pub coefficients: Coefficients,
    /// Top eigenvector of the reduced problem, kept for inspection.
    pub gamma: Vec<f64>,
    pub lambda: Option<f64>,
    /// Oriented training-item scores of the model's own function. For KCCA
    /// this is the covariate side even when the comparison side ranked.
    pub train_scores: Vec<f64>,
}

impl FittedModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Scores the rows of `phi` (columns as in `feature_names`).
    pub fn score(&self, phi: &Matrix) -> Result<Vec<f64>> {
        if phi.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                context: "model feature columns",
                expected: self.n_features(),
                got: phi.ncols(),
            });
        }
        match &self.coefficients {
            Coefficients::Linear { beta, feature_means } => Ok((0..phi.nrows())
                .map(|r| {
                    (0..phi.ncols())
                        .map(|c| (phi[(r, c)] - feature_means[c]) * beta[c])
                        .sum()
                })
                .collect()),
            Coefficients::Kernel {
                alpha,
                kernel,
                train_features,
                column_means,
            } => {
                if train_features.is_empty() || column_means.len() != alpha.len() {
                    return Err(Error::InvalidInput(
                        "kernel model is missing its training statistics".into(),
                    ));
                }
                let train = Matrix::from_fn(train_features.len(), phi.ncols(), |r, c| train_features[r][c]);
                let cross = cross_kernel(phi, &train, kernel)?;
                Ok((0..phi.nrows())
                    .map(|r| {
                        alpha
                            .iter()
                            .zip(column_means)
                            .enumerate()
                            .map(|(i, (a, m))| a * (cross[(r, i)] - m))
                            .sum()
                    })
                    .collect())
            }
        }
    }
}

/// Hyperparameters for [`rank`]. Unset values fall back to defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankParams {
    /// C-Serial-Rank weight on the feature kernel. Default `n / trace(K)`.
    pub lambda: Option<f64>,
    /// Feature kernel. Default RBF with the median-heuristic lengthscale.
    pub kernel: Option<KernelSpec>,
    /// KCCA regulariser. Default [`default_epsilon`].
    pub epsilon: Option<f64>,
    /// Required by SVDKFair-Rank.
    pub fairness: Option<FairnessConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOutput {
    pub algo: Algorithm,
    pub result: RankResult,
    pub model: Option<FittedModel>,
    /// Hyperparameters actually used.
    pub params: RankParams,
    pub kcca: Option<KccaDetails>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KccaDetails {
    pub correlation: f64,
    pub chosen: KccaSide,
}

/// Median-heuristic RBF on the non-sensitive columns.
pub fn default_kernel(features: &FeatureTable) -> KernelSpec {
    KernelSpec::rbf(median_heuristic(&features.covariates()))
}

/// `n / trace(K)`, the scale that makes `λK` commensurate with `S`.
pub fn lambda_scale(k: &Matrix) -> f64 {
    let tr = k.trace();
    if tr > 0.0 {
        k.nrows() as f64 / tr
    } else {
        1.0
    }
}

fn require_features(algo: Algorithm, f: Option<&FeatureTable>) -> Result<&FeatureTable> {
    f.ok_or_else(|| Error::param("features", format!("algorithm `{algo}` needs item covariates")))
}

/// Runs `algo` with the given (or default) hyperparameters.
pub fn rank(
    algo: Algorithm,
    g: &ComparisonGraph,
    features: Option<&FeatureTable>,
    params: &RankParams,
) -> Result<RankOutput> {
    let mut used = params.clone();
    let mut model = None;
    let mut kcca = None;
    if let Some(f) = features {
        f.check_rows(g.n())?;
        if algo.uses_kernel() && used.kernel.is_none() {
            used.kernel = Some(default_kernel(f));
        }
    }
    let result = match algo {
        Algorithm::Serial => serial_rank(g)?,
        Algorithm::CSerial => {
            let f = require_features(algo, features)?;
            let spec = used.kernel.expect("set above");
            let lambda = match used.lambda {
                Some(l) => l,
                None => lambda_scale(&kernel_matrix(&f.covariates(), &spec)?),
            };
            used.lambda = Some(lambda);
            c_serial_rank(g, f, &spec, lambda)?
        }
        Algorithm::Svd => svd_rank(g, false)?,
        Algorithm::SvdNorm => svd_rank(g, true)?,
        Algorithm::SvdCov => {
            let (r, m) = svdcov_rank(g, require_features(algo, features)?)?;
            model = Some(m);
            r
        }
        Algorithm::SvdKCov => {
            let spec = used.kernel.expect("set above");
            let (r, m) = svdkcov_rank(g, require_features(algo, features)?, &spec)?;
            model = Some(m);
            r
        }
        Algorithm::SvdKFair => {
            let f = require_features(algo, features)?;
            let spec = used.kernel.expect("set above");
            let fair = used
                .fairness
                .ok_or_else(|| Error::param("fair_lambda", "SVDKFair-Rank needs a fairness weight"))?;
            let (r, m) = svdkfair_rank(g, f, &spec, &fair)?;
            model = Some(m);
            r
        }
        Algorithm::Kcca => {
            let f = require_features(algo, features)?;
            let spec = used.kernel.expect("set above");
            let eps = used.epsilon.unwrap_or_else(|| default_epsilon(g.n()));
            used.epsilon = Some(eps);
            let (k, m) = kcca_rank_features(g, f, &spec, eps)?;
            kcca = Some(KccaDetails {
                correlation: k.correlation,
                chosen: k.chosen,
            });
            model = Some(m);
            k.result
        }
        Algorithm::RankCentrality => {
            let s = similarity_matrix(&g.signed())?;
            let p = probability_proxy(g, &s)?;
            rank_centrality(g, &p)?
        }
    };
    Ok(RankOutput {
        algo,
        result,
        model,
        params: used,
        kcca,
    })
}

/// Result for a graph with no observed comparisons: all-zero scores, index
/// order.
pub(crate) fn degenerate_result(g: &ComparisonGraph, algo: &str) -> RankResult {
    log::warn!("{algo}: no observed comparisons; returning index order");
    let scores = vec![0.0; g.n()];
    RankResult {
        ordering: descending_order(&scores),
        scores,
        upsets: 0,
        upset_fraction: 0.0,
        orientation: Orientation::AsIs,
    }
}

pub(crate) fn sign_of(o: Orientation) -> f64 {
    match o {
        Orientation::AsIs => 1.0,
        Orientation::Reversed => -1.0,
    }
}

pub(crate) fn check_min_items(g: &ComparisonGraph, min: usize, algo: &str) -> Result<()> {
    if g.n() < min {
        return Err(Error::InvalidInput(format!(
            "{algo} needs at least {min} items, got {}",
            g.n()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_tags_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.tag().parse::<Algorithm>().unwrap(), a);
            assert_eq!(serde_json::to_string(&a).unwrap(), format!("\"{}\"", a.tag()));
        }
        assert!("pagerank".parse::<Algorithm>().is_err());
    }
}
