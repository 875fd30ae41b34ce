//! Comparison graphs, covariate tables and ranking results.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Matrix;

/// Whether comparison outcomes are wins/losses or real-valued score gaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComparisonKind {
    /// Entries in {-1, 0, 1}.
    Ordinal,
    /// Real entries, typically `r_i - r_j`.
    Cardinal,
}

impl std::fmt::Display for ComparisonKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ComparisonKind::Ordinal => f.write_str("ordinal"),
            ComparisonKind::Cardinal => f.write_str("cardinal"),
        }
    }
}

/// Antisymmetric matrix of pairwise outcomes.
///
/// `C[i, j] > 0` means item `i` beat item `j` (or, for cardinal data, that
/// `i` scored higher by `C[i, j]`). Missing comparisons and draws are both
/// stored as an exact zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonGraph {
    kind: ComparisonKind,
    c: Matrix,
    item_ids: Vec<String>,
}

impl ComparisonGraph {
    pub fn new(c: Matrix, kind: ComparisonKind, item_ids: Vec<String>) -> Result<Self> {
        let n = c.nrows();
        if c.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "comparison matrix columns",
                expected: n,
                got: c.ncols(),
            });
        }
        if item_ids.len() != n {
            return Err(Error::DimensionMismatch {
                context: "item ids",
                expected: n,
                got: item_ids.len(),
            });
        }
        for i in 0..n {
            for j in i..n {
                let a = c[(i, j)];
                let b = c[(j, i)];
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::InvalidInput(format!("non-finite comparison at ({i}, {j})")));
                }
                if a != -b {
                    return Err(Error::NotAntisymmetric { i, j, a, b });
                }
                if kind == ComparisonKind::Ordinal && !(a == 0.0 || a == 1.0 || a == -1.0) {
                    return Err(Error::InvalidInput(format!(
                        "ordinal outcome {a} at ({i}, {j}) is not in {{-1, 0, 1}}"
                    )));
                }
            }
        }
        Ok(Self { kind, c, item_ids })
    }

    /// Builds a graph with item ids `"0"`, `"1"`, ...
    pub fn from_matrix(c: Matrix, kind: ComparisonKind) -> Result<Self> {
        let ids = (0..c.nrows()).map(|i| i.to_string()).collect();
        Self::new(c, kind, ids)
    }

    /// Builds a graph from `(i, j, outcome)` triples, one per observed pair.
    pub fn from_pairs(item_ids: Vec<String>, kind: ComparisonKind, pairs: &[(usize, usize, f64)]) -> Result<Self> {
        let n = item_ids.len();
        let mut c = Matrix::zeros(n, n);
        let mut seen = HashSet::new();
        for &(i, j, v) in pairs {
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!(
                    "pair ({i}, {j}) out of range for {n} items"
                )));
            }
            if i == j {
                return Err(Error::InvalidInput(format!(
                    "self-comparison for item `{}`",
                    item_ids[i]
                )));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidInput(format!(
                    "duplicate comparison between `{}` and `{}`",
                    item_ids[i], item_ids[j]
                )));
            }
            c[(i, j)] = v;
            c[(j, i)] = -v;
        }
        Self::new(c, kind, item_ids)
    }

    pub fn n(&self) -> usize {
        self.c.nrows()
    }

    pub fn kind(&self) -> ComparisonKind {
        self.kind
    }

    pub fn matrix(&self) -> &Matrix {
        &self.c
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.c[(i, j)]
    }

    /// Upper-triangle observed pairs `(i, j, C[i, j])` with `i < j`, row-major.
    pub fn observed_pairs(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = self.c[(i, j)];
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    pub fn n_observed(&self) -> usize {
        let n = self.n();
        (0..n)
            .map(|i| ((i + 1)..n).filter(|&j| self.c[(i, j)] != 0.0).count())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.c.iter().all(|&v| v == 0.0)
    }

    /// Fraction of observed pairs among all `n(n-1)/2`.
    pub fn sparsity(&self) -> f64 {
        let n = self.n();
        if n < 2 {
            return 0.0;
        }
        self.n_observed() as f64 / (n * (n - 1) / 2) as f64
    }

    /// Number of observed comparisons per item (out plus in degree).
    pub fn degrees(&self) -> Vec<usize> {
        self.c
            .row_iter()
            .map(|row| row.iter().filter(|&&v| v != 0.0).count())
            .collect()
    }

    /// Connected component label per item, labels assigned in index order.
    pub fn components(&self) -> Vec<usize> {
        let n = self.n();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                #[allow(clippy::needless_range_loop)]
                for v in 0..n {
                    if self.c[(u, v)] != 0.0 && label[v] == usize::MAX {
                        label[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn n_components(&self) -> usize {
        self.components().iter().max().map_or(0, |m| m + 1)
    }

    /// Entrywise sign, turning cardinal data into ordinal data.
    pub fn signed(&self) -> ComparisonGraph {
        let c = self.c.map(|v| {
            if v > 0.0 {
                1.0
            } else if v < 0.0 {
                -1.0
            } else {
                0.0
            }
        });
        ComparisonGraph {
            kind: ComparisonKind::Ordinal,
            c,
            item_ids: self.item_ids.clone(),
        }
    }

    /// Relabels items so that new item `k` is old item `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<ComparisonGraph> {
        check_permutation(perm, self.n())?;
        let n = self.n();
        let c = Matrix::from_fn(n, n, |a, b| self.c[(perm[a], perm[b])]);
        let item_ids = perm.iter().map(|&k| self.item_ids[k].clone()).collect();
        Ok(ComparisonGraph {
            kind: self.kind,
            c,
            item_ids,
        })
    }

    /// Subgraph induced by `items`, in the given order.
    pub fn induced(&self, items: &[usize]) -> ComparisonGraph {
        let m = items.len();
        let c = Matrix::from_fn(m, m, |a, b| self.c[(items[a], items[b])]);
        let item_ids = items.iter().map(|&k| self.item_ids[k].clone()).collect();
        ComparisonGraph {
            kind: self.kind,
            c,
            item_ids,
        }
    }

    /// Copy of the graph keeping only the listed pairs (given as `i < j`).
    pub fn restricted_to(&self, pairs: &[(usize, usize)]) -> ComparisonGraph {
        let n = self.n();
        let mut c = Matrix::zeros(n, n);
        for &(i, j) in pairs {
            c[(i, j)] = self.c[(i, j)];
            c[(j, i)] = self.c[(j, i)];
        }
        ComparisonGraph {
            kind: self.kind,
            c,
            item_ids: self.item_ids.clone(),
        }
    }

    /// Copy of the graph with the listed pairs zeroed.
    pub fn without_pairs(&self, pairs: &[(usize, usize)]) -> ComparisonGraph {
        let mut c = self.c.clone();
        for &(i, j) in pairs {
            c[(i, j)] = 0.0;
            c[(j, i)] = 0.0;
        }
        ComparisonGraph {
            kind: self.kind,
            c,
            item_ids: self.item_ids.clone(),
        }
    }

    /// Replaces the outcome of an existing pair, keeping antisymmetry.
    pub(crate) fn set_pair(&mut self, i: usize, j: usize, v: f64) {
        self.c[(i, j)] = v;
        self.c[(j, i)] = -v;
    }
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::DimensionMismatch {
            context: "permutation",
            expected: n,
            got: perm.len(),
        });
    }
    let mut seen = vec![false; n];
    for &k in perm {
        if k >= n || std::mem::replace(&mut seen[k], true) {
            return Err(Error::InvalidInput("not a permutation".into()));
        }
    }
    Ok(())
}

/// Serial-Rank similarity `S = (n 11ᵀ + C Cᵀ) / 2`.
///
/// `S[i, j]` counts the items on which `i` and `j` agree, with half weight for
/// missing comparisons. Only defined for ordinal graphs.
pub fn similarity_matrix(g: &ComparisonGraph) -> Result<Matrix> {
    if g.kind() != ComparisonKind::Ordinal {
        return Err(Error::CardinalInput);
    }
    let n = g.n();
    let c = g.matrix();
    let mut s = c * c.transpose();
    s.apply(|v| *v = 0.5 * (n as f64 + *v));
    Ok(s)
}

/// Row-normalised comparisons `D⁻¹C`, `D` the total degree of each item.
pub fn degree_normalize(g: &ComparisonGraph) -> Result<Matrix> {
    let degrees = g.degrees();
    let mut out = g.matrix().clone();
    for (i, &d) in degrees.iter().enumerate() {
        if d == 0 {
            return Err(Error::IsolatedItem(g.item_ids()[i].clone()));
        }
        let scale = 1.0 / d as f64;
        out.row_mut(i).apply(|v| *v *= scale);
    }
    Ok(out)
}

/// Covariates, one row per item, aligned with a [`ComparisonGraph`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    values: Matrix,
    column_names: Vec<String>,
    sensitive_columns: Vec<usize>,
}

impl FeatureTable {
    pub fn new(values: Matrix, column_names: Vec<String>, sensitive_columns: Vec<usize>) -> Result<Self> {
        if column_names.len() != values.ncols() {
            return Err(Error::DimensionMismatch {
                context: "feature column names",
                expected: values.ncols(),
                got: column_names.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (r, c) = (pos % values.nrows(), pos / values.nrows());
            return Err(Error::InvalidInput(format!(
                "non-finite feature value at row {r}, column `{}`",
                column_names[c]
            )));
        }
        for &k in &sensitive_columns {
            if k >= values.ncols() {
                return Err(Error::InvalidInput(format!("sensitive column index {k} out of range")));
            }
        }
        let mut sensitive_columns = sensitive_columns;
        sensitive_columns.sort_unstable();
        sensitive_columns.dedup();
        Ok(Self {
            values,
            column_names,
            sensitive_columns,
        })
    }

    /// Table with generated column names `x0`, `x1`, ... and no sensitive columns.
    pub fn from_matrix(values: Matrix) -> Result<Self> {
        let names = (0..values.ncols()).map(|k| format!("x{k}")).collect();
        Self::new(values, names, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn sensitive_columns(&self) -> &[usize] {
        &self.sensitive_columns
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    pub fn with_sensitive(mut self, columns: Vec<usize>) -> Result<Self> {
        let values = std::mem::replace(&mut self.values, Matrix::zeros(0, 0));
        Self::new(values, self.column_names, columns)
    }

    /// Columns not marked sensitive. These are what the rankers learn from.
    pub fn covariate_columns(&self) -> Vec<usize> {
        (0..self.p()).filter(|k| !self.sensitive_columns.contains(k)).collect()
    }

    /// Matrix of the non-sensitive columns.
    pub fn covariates(&self) -> Matrix {
        self.columns(&self.covariate_columns())
    }

    /// Matrix of the sensitive columns.
    pub fn sensitive(&self) -> Matrix {
        self.columns(&self.sensitive_columns)
    }

    pub fn columns(&self, cols: &[usize]) -> Matrix {
        Matrix::from_fn(self.n(), cols.len(), |r, c| self.values[(r, cols[c])])
    }

    /// New table with only the given columns (sensitive marks carried over).
    pub fn select_columns(&self, cols: &[usize]) -> FeatureTable {
        let names = cols.iter().map(|&k| self.column_names[k].clone()).collect();
        let sensitive = cols
            .iter()
            .enumerate()
            .filter(|(_, k)| self.sensitive_columns.contains(k))
            .map(|(new, _)| new)
            .collect();
        FeatureTable {
            values: self.columns(cols),
            column_names: names,
            sensitive_columns: sensitive,
        }
    }

    /// New table with only the given rows.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureTable {
        FeatureTable {
            values: Matrix::from_fn(rows.len(), self.p(), |r, c| self.values[(rows[r], c)]),
            column_names: self.column_names.clone(),
            sensitive_columns: self.sensitive_columns.clone(),
        }
    }

    pub(crate) fn check_rows(&self, n: usize) -> Result<()> {
        if self.n() != n {
            return Err(Error::DimensionMismatch {
                context: "feature rows vs comparison items",
                expected: n,
                got: self.n(),
            });
        }
        Ok(())
    }
}

/// Which sign of the score vector was kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    AsIs,
    Reversed,
}

/// Scores plus the induced ordering, oriented to minimise upsets.
///
/// `scores` are stored after orientation, so `ordering` is always the
/// descending sort of `scores` (ties by ascending index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankResult {
    pub scores: Vec<f64>,
    pub ordering: Vec<usize>,
    pub upsets: usize,
    pub upset_fraction: f64,
    pub orientation: Orientation,
}

impl RankResult {
    /// 1-based rank of each item (1 = best).
    pub fn ranks(&self) -> Vec<usize> {
        let mut ranks = vec![0; self.ordering.len()];
        for (pos, &item) in self.ordering.iter().enumerate() {
            ranks[item] = pos + 1;
        }
        ranks
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tournament3() -> ComparisonGraph {
        let c = Matrix::from_row_slice(3, 3, &[0., 1., 1., -1., 0., 1., -1., -1., 0.]);
        ComparisonGraph::from_matrix(c, ComparisonKind::Ordinal).unwrap()
    }

    #[test]
    fn similarity_of_empty_graph_is_half_n() {
        let g = ComparisonGraph::from_matrix(Matrix::zeros(3, 3), ComparisonKind::Ordinal).unwrap();
        let s = similarity_matrix(&g).unwrap();
        assert!(s.iter().all(|&v| v == 1.5));
    }

    #[test]
    fn similarity_of_consistent_tournament() {
        let s = similarity_matrix(&tournament3()).unwrap();
        let expected = Matrix::from_row_slice(3, 3, &[2.5, 2., 1., 2., 2.5, 2., 1., 2., 2.5]);
        assert_eq!(s, expected);
        assert_eq!(s, s.transpose());
    }

    #[test]
    fn similarity_rejects_cardinal() {
        let c = Matrix::from_row_slice(2, 2, &[0., 0.5, -0.5, 0.]);
        let g = ComparisonGraph::from_matrix(c, ComparisonKind::Cardinal).unwrap();
        assert!(matches!(similarity_matrix(&g), Err(Error::CardinalInput)));
        assert!(similarity_matrix(&g.signed()).is_ok());
    }

    #[test]
    fn degree_normalize_tournament_halves_rows() {
        let g = tournament3();
        let d = degree_normalize(&g).unwrap();
        assert_eq!(d, g.matrix() / 2.0);
    }

    #[test]
    fn degree_normalize_single_match_is_identity() {
        let g =
            ComparisonGraph::from_pairs(vec!["a".into(), "b".into()], ComparisonKind::Ordinal, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(&degree_normalize(&g).unwrap(), g.matrix());
    }

    #[test]
    fn degree_normalize_names_isolated_item() {
        let ids = vec!["a".into(), "b".into(), "c".into()];
        let g = ComparisonGraph::from_pairs(ids, ComparisonKind::Ordinal, &[(0, 1, 1.0)]).unwrap();
        match degree_normalize(&g) {
            Err(Error::IsolatedItem(id)) => assert_eq!(id, "c"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_non_antisymmetric_and_bad_ordinal() {
        let c = Matrix::from_row_slice(2, 2, &[0., 1., 1., 0.]);
        assert!(ComparisonGraph::from_matrix(c, ComparisonKind::Cardinal).is_err());
        let c = Matrix::from_row_slice(2, 2, &[0., 0.5, -0.5, 0.]);
        assert!(ComparisonGraph::from_matrix(c, ComparisonKind::Ordinal).is_err());
        let c = Matrix::from_row_slice(2, 2, &[1., 0., 0., 0.]);
        assert!(ComparisonGraph::from_matrix(c, ComparisonKind::Cardinal).is_err());
    }

    #[test]
    fn duplicate_pairs_rejected() {
        let ids = vec!["a".into(), "b".into()];
        let err = ComparisonGraph::from_pairs(ids, ComparisonKind::Ordinal, &[(0, 1, 1.0), (1, 0, 1.0)]);
        assert!(err.is_err());
    }

    #[test]
    fn sparsity_and_components() {
        let ids: Vec<String> = (0..4).map(|i| i.to_string()).collect();
        let g = ComparisonGraph::from_pairs(ids, ComparisonKind::Ordinal, &[(0, 1, 1.0), (2, 3, -1.0)]).unwrap();
        assert_eq!(g.sparsity(), 2.0 / 6.0);
        assert_eq!(g.components(), vec![0, 0, 1, 1]);
        assert_eq!(g.n_components(), 2);
    }

    #[test]
    fn feature_table_sensitive_split() {
        let v = Matrix::from_row_slice(2, 3, &[1., 2., 3., 4., 5., 6.]);
        let t = FeatureTable::new(v, vec!["a".into(), "b".into(), "z".into()], vec![2]).unwrap();
        assert_eq!(t.covariates(), Matrix::from_row_slice(2, 2, &[1., 2., 4., 5.]));
        assert_eq!(t.sensitive(), Matrix::from_row_slice(2, 1, &[3., 6.]));
        let bad = Matrix::from_row_slice(1, 1, &[f64::NAN]);
        assert!(FeatureTable::from_matrix(bad).is_err());
    }
}
