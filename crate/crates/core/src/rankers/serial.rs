use crate::data::{similarity_matrix, ComparisonGraph, FeatureTable, RankResult};
use crate::error::{Error, Result};
use crate::kernels::{kernel_matrix, KernelSpec};
use crate::linalg::{fiedler_vector, laplacian};
use crate::metrics::orient_ranking;
use crate::Matrix;

use super::{check_min_items, degenerate_result};

/// Serial-Rank: Fiedler vector of the Laplacian of `S = (n11ᵀ + CCᵀ)/2`.
///
/// Cardinal graphs are reduced to signs first.
pub fn serial_rank(g: &ComparisonGraph) -> Result<RankResult> {
    check_min_items(g, 3, "serial-rank")?;
    if g.is_empty() {
        return Ok(degenerate_result(g, "serial-rank"));
    }
    let s = similarity_matrix(&g.signed())?;
    seriate(g, &s)
}

/// C-Serial-Rank: Fiedler vector of `L(S + λK)`, `K` a kernel on covariates.
pub fn c_serial_rank(
    g: &ComparisonGraph,
    features: &FeatureTable,
    spec: &KernelSpec,
    lambda: f64,
) -> Result<RankResult> {
    check_min_items(g, 3, "c-serial-rank")?;
    features.check_rows(g.n())?;
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::param("lambda", format!("must be finite and >= 0, got {lambda}")));
    }
    let mut s = similarity_matrix(&g.signed())?;
    if lambda > 0.0 {
        let k = kernel_matrix(&features.covariates(), spec)?;
        s += k * lambda;
    } else if g.is_empty() {
        return Ok(degenerate_result(g, "c-serial-rank"));
    }
    seriate(g, &s)
}

fn seriate(g: &ComparisonGraph, s: &Matrix) -> Result<RankResult> {
    let f = fiedler_vector(&laplacian(s))?;
    orient_ranking(g, f.vector.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ComparisonKind;
    use crate::metrics::kendall_tau;

    fn consistent(n: usize) -> ComparisonGraph {
        let c = Matrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Less => 1.0,
            std::cmp::Ordering::Greater => -1.0,
            _ => 0.0,
        });
        ComparisonGraph::from_matrix(c, ComparisonKind::Ordinal).unwrap()
    }

    #[test]
    fn recovers_consistent_tournament() {
        let g = consistent(10);
        let r = serial_rank(&g).unwrap();
        let truth: Vec<f64> = (0..10).map(|i| -(i as f64)).collect();
        assert_eq!(kendall_tau(&r.scores, &truth).unwrap(), 1.0);
        assert_eq!(r.ordering, (0..10).collect::<Vec<_>>());
        assert_eq!(r.upsets, 0);
    }

    #[test]
    fn too_few_items() {
        let c = Matrix::from_row_slice(2, 2, &[0., 1., -1., 0.]);
        let g = ComparisonGraph::from_matrix(c, ComparisonKind::Ordinal).unwrap();
        assert!(serial_rank(&g).is_err());
    }

    #[test]
    fn lambda_zero_matches_serial() {
        let g = consistent(8);
        let f = FeatureTable::from_matrix(Matrix::from_fn(8, 2, |i, j| ((i + 3 * j) as f64).sin())).unwrap();
        let a = serial_rank(&g).unwrap();
        let b = c_serial_rank(&g, &f, &KernelSpec::rbf(1.0), 0.0).unwrap();
        assert_eq!(a, b);
        assert!(c_serial_rank(&g, &f, &KernelSpec::rbf(1.0), -1.0).is_err());
    }

    #[test]
    fn empty_graph_gives_index_order() {
        let g = ComparisonGraph::from_matrix(Matrix::zeros(4, 4), ComparisonKind::Ordinal).unwrap();
        let r = serial_rank(&g).unwrap();
        assert_eq!(r.ordering, vec![0, 1, 2, 3]);
        assert_eq!(r.upsets, 0);
    }
}
