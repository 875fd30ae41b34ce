//! Upsets, Kendall's tau and upset-minimising orientation.

use std::cmp::Ordering;

use crate::data::{ComparisonGraph, Orientation, RankResult};
use crate::error::{Error, Result};

fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { context, expected, got });
    }
    Ok(())
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Sign with `sign0(0) = 0`, unlike `f64::signum`.
pub(crate) fn sign0(v: f64) -> f64 {
    f64::from(sign(v))
}

/// Number of observed pairs whose outcome contradicts `scores`.
///
/// A pair counts when `sign(s_i - s_j) * sign(C[i, j]) = -1`; tied scores
/// never count.
pub fn count_upsets(g: &ComparisonGraph, scores: &[f64]) -> Result<usize> {
    check_len("scores", g.n(), scores.len())?;
    let c = g.matrix();
    let n = g.n();
    let mut upsets = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let cij = c[(i, j)];
            if cij != 0.0 && sign(scores[i] - scores[j]) * sign(cij) == -1 {
                upsets += 1;
            }
        }
    }
    Ok(upsets)
}

/// Kendall's tau-a: tied pairs add nothing to the numerator.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len("kendall tau inputs", a.len(), b.len())?;
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidInput("kendall tau needs at least two items".into()));
    }
    let mut score: i64 = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            score += (sign(a[i] - a[j]) * sign(b[i] - b[j])) as i64;
        }
    }
    Ok(score as f64 / (n * (n - 1) / 2) as f64)
}

/// Item indices sorted by descending score, ties by ascending index.
pub fn descending_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Picks the sign of `scores` with fewer upsets (as-is on a tie).
pub fn orient_ranking(g: &ComparisonGraph, scores: &[f64]) -> Result<RankResult> {
    check_len("scores", g.n(), scores.len())?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidInput("non-finite score".into()));
    }
    let forward = count_upsets(g, scores)?;
    let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
    let backward = count_upsets(g, &negated)?;
    let (scores, upsets, orientation) = if backward < forward {
        (negated, backward, Orientation::Reversed)
    } else {
        (scores.to_vec(), forward, Orientation::AsIs)
    };
    let observed = g.n_observed();
    let upset_fraction = if observed == 0 {
        0.0
    } else {
        upsets as f64 / observed as f64
    };
    Ok(RankResult {
        ordering: descending_order(&scores),
        scores,
        upsets,
        upset_fraction,
        orientation,
    })
}

/// Pearson correlation; zero when either input is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len("correlation inputs", a.len(), b.len())?;
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Ok(0.0);
    }
    Ok(sab / (saa * sbb).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ComparisonKind;
    use crate::Matrix;
    use proptest::prelude::*;

    fn tournament3() -> ComparisonGraph {
        let c = Matrix::from_row_slice(3, 3, &[0., 1., 1., -1., 0., 1., -1., -1., 0.]);
        ComparisonGraph::from_matrix(c, ComparisonKind::Ordinal).unwrap()
    }

    #[test]
    fn upsets_on_tournament() {
        let g = tournament3();
        assert_eq!(count_upsets(&g, &[3., 2., 1.]).unwrap(), 0);
        assert_eq!(count_upsets(&g, &[1., 2., 3.]).unwrap(), 3);
        assert_eq!(count_upsets(&g, &[2., 2., 1.]).unwrap(), 0);
        assert!(count_upsets(&g, &[1., 2.]).is_err());
    }

    #[test]
    fn tau_examples() {
        assert_eq!(kendall_tau(&[1., 2., 3.], &[1., 2., 3.]).unwrap(), 1.0);
        assert_eq!(kendall_tau(&[1., 2., 3.], &[3., 2., 1.]).unwrap(), -1.0);
        assert!((kendall_tau(&[1., 2., 3.], &[2., 1., 3.]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(kendall_tau(&[1.], &[1.]).is_err());
    }

    #[test]
    fn orientation_examples() {
        let g = tournament3();
        let r = orient_ranking(&g, &[-3., -2., -1.]).unwrap();
        assert_eq!(r.orientation, Orientation::Reversed);
        assert_eq!(r.upsets, 0);
        assert_eq!(r.ordering, vec![0, 1, 2]);
        let r = orient_ranking(&g, &[3., 2., 1.]).unwrap();
        assert_eq!(r.orientation, Orientation::AsIs);

        let c = Matrix::from_row_slice(2, 2, &[0., 1., -1., 0.]);
        let g = ComparisonGraph::from_matrix(c, ComparisonKind::Ordinal).unwrap();
        let r = orient_ranking(&g, &[0., 0.]).unwrap();
        assert_eq!(r.upsets, 0);
        assert_eq!(r.orientation, Orientation::AsIs);
        assert_eq!(r.ordering, vec![0, 1]);
        assert_eq!(r.ranks(), vec![1, 2]);
    }

    fn random_graph(n: usize, bits: &[i8]) -> ComparisonGraph {
        let mut c = Matrix::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = bits[k % bits.len()] as f64;
                c[(i, j)] = v;
                c[(j, i)] = -v;
                k += 1;
            }
        }
        ComparisonGraph::from_matrix(c, ComparisonKind::Ordinal).unwrap()
    }

    proptest! {
        #[test]
        fn upsets_partition_observed_pairs(
            bits in prop::collection::vec(-1i8..=1, 1..40),
            scores in prop::collection::vec(-3i32..3, 8),
        ) {
            let g = random_graph(8, &bits);
            let s: Vec<f64> = scores.iter().map(|&v| v as f64).collect();
            let neg: Vec<f64> = s.iter().map(|v| -v).collect();
            let ties = g.observed_pairs().iter().filter(|(i, j, _)| s[*i] == s[*j]).count();
            prop_assert_eq!(
                count_upsets(&g, &s).unwrap() + count_upsets(&g, &neg).unwrap() + ties,
                g.n_observed()
            );
            let r = orient_ranking(&g, &s).unwrap();
            prop_assert!(r.upsets <= count_upsets(&g, &neg).unwrap().max(count_upsets(&g, &s).unwrap()));
            prop_assert!(r.upsets <= count_upsets(&g, &neg.iter().map(|v| -v).collect::<Vec<_>>()).unwrap());
        }

        #[test]
        fn tau_symmetric_and_self_one(a in prop::collection::vec(-100.0f64..100.0, 2..20), seed in 0u64..1000) {
            let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| (v * 7.0 + (seed + i as u64) as f64).sin()).collect();
            prop_assert_eq!(kendall_tau(&a, &b).unwrap(), kendall_tau(&b, &a).unwrap());
            let mut distinct = a.clone();
            distinct.sort_by(|x, y| x.partial_cmp(y).unwrap());
            distinct.dedup();
            if distinct.len() == a.len() {
                prop_assert_eq!(kendall_tau(&a, &a).unwrap(), 1.0);
            }
        }

        #[test]
        fn upsets_invariant_under_relabeling(
            bits in prop::collection::vec(-1i8..=1, 1..40),
            scores in prop::collection::vec(-5.0f64..5.0, 7),
            rot in 0usize..7,
        ) {
            let g = random_graph(7, &bits);
            let perm: Vec<usize> = (0..7).map(|k| (k * 3 + rot) % 7).collect();
            let pg = g.permuted(&perm).unwrap();
            let ps: Vec<f64> = perm.iter().map(|&k| scores[k]).collect();
            prop_assert_eq!(count_upsets(&g, &scores).unwrap(), count_upsets(&pg, &ps).unwrap());
        }
    }
}
