//! Scoring unseen items from their covariates.

use serde::{Deserialize, Serialize};

use crate::data::ComparisonGraph;
use crate::error::{Error, Result};
use crate::metrics::{count_upsets, descending_order};
use crate::rankers::FittedModel;
use crate::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionResult {
    /// One score per row of the new feature matrix.
    pub scores: Vec<f64>,
    /// Descending order of `scores`.
    pub ordering: Vec<usize>,
    /// Training and new items ranked together. Indices `< n_train` are
    /// training items, the rest are `n_train + k` for new row `k`.
    pub combined_ordering: Option<Vec<usize>>,
}

/// Scores the rows of `phi_new` with a fitted model.
pub fn predict_unseen(model: &FittedModel, phi_new: &Matrix) -> Result<PredictionResult> {
    let scores = model.score(phi_new)?;
    let ordering = descending_order(&scores);
    let combined = if model.train_scores.is_empty() {
        None
    } else {
        let all: Vec<f64> = model.train_scores.iter().chain(&scores).copied().collect();
        Some(descending_order(&all))
    };
    Ok(PredictionResult {
        scores,
        ordering,
        combined_ordering: combined,
    })
}

/// Fraction of the observed pairs in `g_test` that `pred` gets wrong.
///
/// Item `k` of `g_test` is row `k` of the prediction.
pub fn predict_upset_fraction(g_test: &ComparisonGraph, pred: &PredictionResult) -> Result<f64> {
    if g_test.n() > pred.scores.len() {
        return Err(Error::DimensionMismatch {
            context: "test items vs predictions",
            expected: pred.scores.len(),
            got: g_test.n(),
        });
    }
    let observed = g_test.n_observed();
    if observed == 0 {
        return Err(Error::InvalidInput("no observed comparisons among test items".into()));
    }
    let upsets = count_upsets(g_test, &pred.scores[..g_test.n()])?;
    Ok(upsets as f64 / observed as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ComparisonKind;
    use crate::metrics::sign0;
    use crate::rankers::{Algorithm, Coefficients};

    fn linear_model(beta: Vec<f64>, means: Vec<f64>) -> FittedModel {
        FittedModel {
            algo: Algorithm::SvdCov,
            feature_names: (0..beta.len()).map(|i| format!("x{i}")).collect(),
            coefficients: Coefficients::Linear {
                beta,
                feature_means: means,
            },
            gamma: vec![],
            lambda: None,
            train_scores: vec![0.5, -0.5],
        }
    }

    fn consistent(n: usize) -> ComparisonGraph {
        let c = Matrix::from_fn(n, n, |i, j| sign0(j as f64 - i as f64));
        ComparisonGraph::from_matrix(c, ComparisonKind::Ordinal).unwrap()
    }

    #[test]
    fn linear_prediction_and_upsets() {
        let model = linear_model(vec![-1.0], vec![0.0]);
        let phi = Matrix::from_fn(10, 1, |i, _| i as f64);
        let pred = predict_unseen(&model, &phi).unwrap();
        assert_eq!(pred.ordering, (0..10).collect::<Vec<_>>());
        let combined = pred.combined_ordering.clone().unwrap();
        assert_eq!(combined.len(), 12);
        assert_eq!(predict_upset_fraction(&consistent(10), &pred).unwrap(), 0.0);

        let reversed = predict_unseen(&linear_model(vec![1.0], vec![0.0]), &phi).unwrap();
        assert_eq!(predict_upset_fraction(&consistent(10), &reversed).unwrap(), 1.0);
    }

    #[test]
    fn wrong_width_is_an_error() {
        let model = linear_model(vec![1.0, 2.0], vec![0.0, 0.0]);
        assert!(predict_unseen(&model, &Matrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn no_test_pairs_is_an_error() {
        let g = ComparisonGraph::from_matrix(Matrix::zeros(3, 3), ComparisonKind::Ordinal).unwrap();
        let pred = PredictionResult {
            scores: vec![1.0, 2.0, 3.0],
            ordering: vec![2, 1, 0],
            combined_ordering: None,
        };
        assert!(predict_upset_fraction(&g, &pred).is_err());
    }
}
