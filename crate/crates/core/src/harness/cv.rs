use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{ComparisonGraph, FeatureTable};
use crate::error::{Error, Result};
use crate::kernels::{kernel_matrix, median_heuristic, KernelSpec, LENGTHSCALE_GRID};
use crate::metrics::count_upsets;
use crate::rankers::{lambda_scale, rank, Algorithm, RankParams};
use crate::synth::stream_rng;

const STREAM_FOLDS: u64 = 3;

/// Default λ multipliers, applied to `n / trace(K)`.
pub const LAMBDA_GRID: [f64; 6] = [0.0, 1e-2, 1e-1, 1.0, 10.0, 1e2];

/// Cross-validation over held-out matches.
///
/// Grids are relative: λ values multiply `n / trace(K)`, lengthscales
/// multiply the median pairwise distance of the covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvPlan {
    pub folds: usize,
    pub lambda_grid: Vec<f64>,
    pub lengthscale_grid: Vec<f64>,
    pub seed: u64,
}

impl Default for CvPlan {
    fn default() -> Self {
        Self {
            folds: 10,
            lambda_grid: LAMBDA_GRID.to_vec(),
            lengthscale_grid: LENGTHSCALE_GRID.to_vec(),
            seed: 0,
        }
    }
}

impl CvPlan {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::param("folds", format!("need at least 2, got {}", self.folds)));
        }
        if self.lambda_grid.is_empty() || self.lengthscale_grid.is_empty() {
            return Err(Error::param("grid", "hyperparameter grids must be nonempty"));
        }
        if self.lambda_grid.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::param("lambda_grid", "entries must be finite and >= 0"));
        }
        if self.lengthscale_grid.iter().any(|d| !d.is_finite() || *d <= 0.0) {
            return Err(Error::param("lengthscale_grid", "entries must be finite and > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCell {
    /// Absolute λ, when tuned.
    pub lambda: Option<f64>,
    /// Absolute lengthscale, when tuned.
    pub lengthscale: Option<f64>,
    /// Held-out upset fraction per fold; `None` where the fit failed.
    pub fold_scores: Vec<Option<f64>>,
    /// Mean over folds; `None` if any fold failed.
    pub mean_upset_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub best: RankParams,
    pub best_cell: usize,
    pub cells: Vec<CvCell>,
}

/// Assigns observed pairs to folds after a seeded shuffle.
pub fn fold_assignment(g: &ComparisonGraph, folds: usize, seed: u64) -> Result<Vec<Vec<(usize, usize)>>> {
    let mut pairs: Vec<(usize, usize)> = g.observed_pairs().into_iter().map(|(i, j, _)| (i, j)).collect();
    if pairs.len() < folds {
        return Err(Error::InvalidInput(format!(
            "{} observed matches cannot fill {folds} folds",
            pairs.len()
        )));
    }
    pairs.shuffle(&mut stream_rng(seed, STREAM_FOLDS));
    let mut out = vec![Vec::new(); folds];
    for (k, p) in pairs.into_iter().enumerate() {
        out[k % folds].push(p);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

/// Whether `algo` has hyperparameters left unset in `p` that
/// [`cross_validate`] would tune.
pub fn has_tunables(algo: Algorithm, p: &RankParams) -> bool {
    (algo.uses_kernel() && p.kernel.is_none()) || (algo == Algorithm::CSerial && p.lambda.is_none())
}

/// Tunes the hyperparameters of `algo` left unset in `base`.
///
/// C-Serial-Rank tunes λ and the lengthscale; the other kernel methods tune
/// the lengthscale only. The winner minimises mean held-out upset fraction,
/// ties going to the smaller λ, then the smaller lengthscale.
pub fn cross_validate(
    g: &ComparisonGraph,
    features: Option<&FeatureTable>,
    algo: Algorithm,
    plan: &CvPlan,
    base: &RankParams,
) -> Result<CvResult> {
    plan.validate()?;
    let folds = fold_assignment(g, plan.folds, plan.seed)?;
    let tune_d = algo.uses_kernel() && base.kernel.is_none() && features.is_some();
    let tune_lambda = algo == Algorithm::CSerial && base.lambda.is_none() && features.is_some();

    let median = features.map(|f| median_heuristic(&f.covariates()));
    let ds: Vec<Option<f64>> = if tune_d {
        let m = median.expect("features present");
        plan.lengthscale_grid.iter().map(|s| Some(s * m)).collect()
    } else {
        vec![None]
    };
    let lambdas: Vec<Option<f64>> = if tune_lambda {
        plan.lambda_grid.iter().map(|&l| Some(l)).collect()
    } else {
        vec![None]
    };

    let mut candidates = Vec::new();
    for lam in &lambdas {
        for d in &ds {
            let mut params = base.clone();
            if let Some(d) = d {
                params.kernel = Some(KernelSpec::rbf(*d));
            }
            if let Some(mult) = lam {
                let f = features.expect("features present");
                let spec = params
                    .kernel
                    .unwrap_or_else(|| KernelSpec::rbf(median.expect("features present")));
                let k = kernel_matrix(&f.covariates(), &spec)?;
                params.lambda = Some(mult * lambda_scale(&k));
            }
            candidates.push(params);
        }
    }

    let mut cells = Vec::with_capacity(candidates.len());
    for params in &candidates {
        let mut fold_scores = Vec::with_capacity(folds.len());
        for held in &folds {
            let train = g.without_pairs(held);
            let test = g.restricted_to(held);
            let score = rank(algo, &train, features, params)
                .and_then(|out| count_upsets(&test, &out.result.scores))
                .map(|u| u as f64 / held.len() as f64);
            match score {
                Ok(s) => fold_scores.push(Some(s)),
                Err(e) => {
                    log::debug!("cv fold failed for {algo}: {e}");
                    fold_scores.push(None);
                }
            }
        }
        let mean = fold_scores
            .iter()
            .copied()
            .collect::<Option<Vec<f64>>>()
            .map(|v| v.iter().sum::<f64>() / v.len() as f64);
        cells.push(CvCell {
            lambda: if tune_lambda { params.lambda } else { None },
            lengthscale: if tune_d {
                params.kernel.and_then(|k| match k {
                    KernelSpec::Rbf { lengthscale } => Some(lengthscale),
                    KernelSpec::Linear => None,
                })
            } else {
                None
            },
            fold_scores,
            mean_upset_fraction: mean,
        });
    }

    // Cells are generated in increasing λ, then increasing d, so a strict
    // comparison implements the tie-break.
    let mut best: Option<(usize, f64)> = None;
    for (idx, cell) in cells.iter().enumerate() {
        if let Some(m) = cell.mean_upset_fraction {
            if best.is_none_or(|(_, b)| m < b) {
                best = Some((idx, m));
            }
        }
    }
    let (best_cell, _) =
        best.ok_or_else(|| Error::Degenerate(format!("every cross-validation cell failed for {algo}")))?;
    Ok(CvResult {
        best: candidates[best_cell].clone(),
        best_cell,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ComparisonKind;
    use crate::metrics::sign0;
    use crate::Matrix;

    fn consistent(n: usize) -> (ComparisonGraph, FeatureTable) {
        let c = Matrix::from_fn(n, n, |i, j| sign0(j as f64 - i as f64));
        let g = ComparisonGraph::from_matrix(c, ComparisonKind::Ordinal).unwrap();
        let f = FeatureTable::from_matrix(Matrix::from_fn(n, 1, |i, _| -(i as f64))).unwrap();
        (g, f)
    }

    #[test]
    fn folds_partition_matches() {
        let (g, _) = consistent(12);
        let folds = fold_assignment(&g, 5, 7).unwrap();
        let total: usize = folds.iter().map(|f| f.len()).sum();
        assert_eq!(total, g.n_observed());
        assert_eq!(folds, fold_assignment(&g, 5, 7).unwrap());
        for held in &folds {
            let train = g.without_pairs(held);
            for &(i, j) in held {
                assert_eq!(train.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn ties_go_to_smaller_lambda() {
        // Serial-Rank is not exact once matches are held out, but with the
        // covariates equal to the true order every λ > 0 cell is.
        let (g, f) = consistent(30);
        let plan = CvPlan {
            folds: 5,
            lambda_grid: vec![100.0, 1000.0, 10000.0],
            lengthscale_grid: vec![1.0],
            ..Default::default()
        };
        let cv = cross_validate(&g, Some(&f), Algorithm::CSerial, &plan, &RankParams::default()).unwrap();
        assert_eq!(cv.cells.len(), 3);
        assert!(
            cv.cells.iter().all(|c| c.mean_upset_fraction == Some(0.0)),
            "{:?}",
            cv.cells
        );
        assert_eq!(cv.best_cell, 0);
        assert_eq!(cv.best.lambda, cv.cells[0].lambda);

        let full = CvPlan {
            folds: 5,
            lengthscale_grid: vec![1.0],
            ..Default::default()
        };
        let cv = cross_validate(&g, Some(&f), Algorithm::CSerial, &full, &RankParams::default()).unwrap();
        assert!(cv.cells[0].mean_upset_fraction.unwrap() > cv.cells.last().unwrap().mean_upset_fraction.unwrap());
        let again = cross_validate(&g, Some(&f), Algorithm::CSerial, &full, &RankParams::default()).unwrap();
        assert_eq!(cv, again);
    }

    #[test]
    fn single_cell_grid() {
        let (g, f) = consistent(20);
        let plan = CvPlan {
            folds: 4,
            lambda_grid: vec![1.0],
            lengthscale_grid: vec![2.0],
            ..Default::default()
        };
        let cv = cross_validate(&g, Some(&f), Algorithm::CSerial, &plan, &RankParams::default()).unwrap();
        assert_eq!(cv.cells.len(), 1);
        assert_eq!(cv.best_cell, 0);
        assert!(cv.cells[0].mean_upset_fraction.is_some());
    }

    #[test]
    fn too_few_matches() {
        let (g, f) = consistent(4);
        let plan = CvPlan::default();
        assert!(cross_validate(&g, Some(&f), Algorithm::SvdKCov, &plan, &RankParams::default()).is_err());
    }
}
