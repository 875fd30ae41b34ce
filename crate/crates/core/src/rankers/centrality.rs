use crate::data::{ComparisonGraph, RankResult};
use crate::error::{Error, Result};
use crate::metrics::orient_ranking;
use crate::Matrix;

const TOL: f64 = 1e-12;
const MAX_ITER: usize = 1_000_000;

/// Win-probability proxy from the similarity matrix.
///
/// `P̂[i,j] = 1 - S[i,j]/2n` if `i` beat `j`, `S[i,j]/2n` if `j` beat `i`,
/// and `1/2` for unobserved or tied pairs.
pub fn probability_proxy(g: &ComparisonGraph, s: &Matrix) -> Result<Matrix> {
    let n = g.n();
    if s.nrows() != n || s.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "similarity matrix size",
            expected: n,
            got: s.nrows(),
        });
    }
    let two_n = 2.0 * n as f64;
    let mut p = Matrix::from_element(n, n, 0.5);
    for (i, j, c) in g.observed_pairs() {
        let q = (s[(i, j)] / two_n).clamp(0.0, 1.0);
        let pij = if c > 0.0 {
            1.0 - q
        } else if c < 0.0 {
            q
        } else {
            0.5
        };
        p[(i, j)] = pij;
        p[(j, i)] = 1.0 - pij;
    }
    Ok(p)
}

/// Stationary distribution of the comparison random walk.
///
/// From `i` the walk moves to an observed opponent `j` with probability
/// `P̂[j,i] / d_max` and stays put otherwise.
pub fn rank_centrality(g: &ComparisonGraph, p_hat: &Matrix) -> Result<RankResult> {
    let n = g.n();
    if n < 2 {
        return Err(Error::InvalidInput("rank centrality needs at least 2 items".into()));
    }
    if p_hat.nrows() != n || p_hat.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "probability matrix size",
            expected: n,
            got: p_hat.nrows(),
        });
    }
    let components = g.n_components();
    if components > 1 {
        return Err(Error::Disconnected { components });
    }
    let d_max = *g.degrees().iter().max().unwrap_or(&0) as f64;
    let mut out_edges: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut stay = vec![1.0; n];
    for (i, j, _) in g.observed_pairs() {
        let to_j = p_hat[(j, i)] / d_max;
        let to_i = p_hat[(i, j)] / d_max;
        out_edges[i].push((j, to_j));
        out_edges[j].push((i, to_i));
        stay[i] -= to_j;
        stay[j] -= to_i;
    }
    // Lazy walk: same stationary law, no periodicity.
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..MAX_ITER {
        for (i, v) in next.iter_mut().enumerate() {
            *v = pi[i] * (1.0 + stay[i]) * 0.5;
        }
        for (i, edges) in out_edges.iter().enumerate() {
            for &(j, w) in edges {
                next[j] += 0.5 * pi[i] * w;
            }
        }
        let total: f64 = next.iter().sum();
        let mut delta = 0.0;
        for (a, b) in pi.iter_mut().zip(&next) {
            let v = b / total;
            delta += (v - *a).abs();
            *a = v;
        }
        if delta < TOL {
            return orient_ranking(g, &pi);
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITER,
        residual: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{similarity_matrix, ComparisonKind};
    use approx::assert_relative_eq;

    fn graph(c: &[f64], n: usize) -> ComparisonGraph {
        ComparisonGraph::from_matrix(Matrix::from_row_slice(n, n, c), ComparisonKind::Ordinal).unwrap()
    }

    #[test]
    fn proxy_endpoints() {
        let g = graph(&[0., 1., 0., -1., 0., 0., 0., 0., 0.], 3);
        let mut s = Matrix::zeros(3, 3);
        let p = probability_proxy(&g, &s).unwrap();
        assert_eq!(p[(0, 1)], 1.0);
        assert_eq!(p[(1, 0)], 0.0);
        assert_eq!(p[(0, 2)], 0.5);
        s[(0, 1)] = 3.0;
        s[(1, 0)] = 3.0;
        let p = probability_proxy(&g, &s).unwrap();
        assert_eq!(p[(0, 1)], 0.5);
        let s = similarity_matrix(&g).unwrap();
        let p = probability_proxy(&g, &s).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_relative_eq!(p[(i, j)] + p[(j, i)], 1.0);
                }
            }
        }
    }

    #[test]
    fn two_state_chain() {
        let g = graph(&[0., 1., -1., 0.], 2);
        let mut p = Matrix::from_element(2, 2, 0.5);
        p[(0, 1)] = 1.0;
        p[(1, 0)] = 0.0;
        let r = rank_centrality(&g, &p).unwrap();
        assert_eq!(r.ordering, vec![0, 1]);
        assert_relative_eq!(r.scores[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn uniform_proxy_is_uniform() {
        let g = graph(&[0., 1., -1., -1., 0., 1., 1., -1., 0.], 3);
        let p = Matrix::from_element(3, 3, 0.5);
        let r = rank_centrality(&g, &p).unwrap();
        for s in &r.scores {
            assert_relative_eq!(*s, 1.0 / 3.0, epsilon = 1e-12);
        }
        assert_eq!(r.upsets, 0);
        assert_eq!(r.ordering, vec![0, 1, 2]);
    }

    #[test]
    fn disconnected_is_an_error() {
        let g = graph(&[0., 1., 0., 0., -1., 0., 0., 0., 0., 0., 0., 1., 0., 0., -1., 0.], 4);
        let p = Matrix::from_element(4, 4, 0.5);
        assert!(matches!(
            rank_centrality(&g, &p),
            Err(Error::Disconnected { components: 2 })
        ));
    }
}
