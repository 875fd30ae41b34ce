use crate::data::{degree_normalize, ComparisonGraph, RankResult};
use crate::error::Result;
use crate::kernels::center_columns;
use crate::linalg::{top_eigenpairs, SpectralConfig};
use crate::metrics::orient_ranking;

use super::degenerate_result;

/// SVD-Rank, or SVD-Norm-Rank when `normalized` (rows divided by degree).
///
/// Takes the top two eigenvectors of `H M Mᵀ H` and keeps whichever, in
/// either orientation, has the fewest upsets (the leading one on ties).
pub fn svd_rank(g: &ComparisonGraph, normalized: bool) -> Result<RankResult> {
    let name = if normalized { "svd-norm-rank" } else { "svd-rank" };
    if g.is_empty() {
        return Ok(degenerate_result(g, name));
    }
    let m = if normalized {
        degree_normalize(g)?
    } else {
        g.matrix().clone()
    };
    let (hm, _) = center_columns(&m);
    let a = &hm * hm.transpose();
    let pairs = top_eigenpairs(&a, 2, &SpectralConfig::default())?;
    let mut best: Option<RankResult> = None;
    for p in pairs {
        let r = orient_ranking(g, p.vector.as_slice())?;
        if best.as_ref().is_none_or(|b| r.upsets < b.upsets) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one eigenpair"))
}
