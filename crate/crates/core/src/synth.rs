//! Synthetic players, sparse comparison graphs and noise models.
//!
//! Randomness comes from one seed split into independent ChaCha streams:
//! players, graph sampling and outcome noise each use their own stream, so
//! changing the noise level never changes the underlying graph.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{ComparisonGraph, ComparisonKind, FeatureTable};
use crate::error::{Error, Result};
use crate::metrics::sign0;
use crate::Matrix;

const STREAM_PLAYERS: u64 = 0;
const STREAM_GRAPH: u64 = 1;
const STREAM_NOISE: u64 = 2;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Latent skill `sin(3πx) - 1.5x²`.
pub fn skill(x: f64) -> f64 {
    (3.0 * std::f64::consts::PI * x).sin() - 1.5 * x * x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    None,
    /// Negate each ordinal outcome with probability `p`.
    Flip {
        p: f64,
    },
    /// Replace each cardinal outcome with probability `eta` by `M·U`,
    /// `U ~ U[-1, 1]`, `M = max r - min r`.
    Ero {
        eta: f64,
    },
}

impl NoiseModel {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseModel::None => "none",
            NoiseModel::Flip { .. } => "flip",
            NoiseModel::Ero { .. } => "ero",
        }
    }

    pub fn level(&self) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::Flip { p } => p,
            NoiseModel::Ero { eta } => eta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    /// Probability that a given pair is compared.
    pub sparsity: f64,
    /// Standard deviation of the skill noise not explained by `x`.
    pub sigma: f64,
    pub noise: NoiseModel,
    pub kind: ComparisonKind,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 200,
            sparsity: 0.05,
            sigma: 0.0,
            noise: NoiseModel::None,
            kind: ComparisonKind::Ordinal,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::param("n", format!("need at least 2 items, got {}", self.n)));
        }
        if !(self.sparsity > 0.0 && self.sparsity <= 1.0) {
            return Err(Error::param(
                "sparsity",
                format!("must lie in (0, 1], got {}", self.sparsity),
            ));
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::param(
                "sigma",
                format!("must be finite and >= 0, got {}", self.sigma),
            ));
        }
        match (self.noise, self.kind) {
            (NoiseModel::Flip { p }, ComparisonKind::Ordinal) => check_prob("p", p),
            (NoiseModel::Ero { eta }, ComparisonKind::Cardinal) => check_prob("eta", eta),
            (NoiseModel::None, _) => Ok(()),
            (NoiseModel::Flip { .. }, _) => Err(Error::param("noise", "flip noise needs ordinal comparisons")),
            (NoiseModel::Ero { .. }, _) => Err(Error::param("noise", "ERO noise needs cardinal comparisons")),
        }
    }
}

fn check_prob(name: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::param(name, format!("must lie in [0, 1], got {p}")))
    }
}

/// Draws `x ~ U[0, 1]` and `r = skill(x) + σ·N(0, 1)` for each item.
pub fn generate_players(cfg: &SynthConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, STREAM_PLAYERS);
    let mut x = Vec::with_capacity(cfg.n);
    let mut r = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let xi: f64 = rng.random();
        let eps: f64 = StandardNormal.sample(&mut rng);
        x.push(xi);
        r.push(skill(xi) + cfg.sigma * eps);
    }
    Ok((x, r))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledGraph {
    pub graph: ComparisonGraph,
    /// Edges added to connect the sampled components.
    pub repair_edges: usize,
}

fn outcome(kind: ComparisonKind, ri: f64, rj: f64) -> f64 {
    match kind {
        ComparisonKind::Cardinal => ri - rj,
        ComparisonKind::Ordinal => sign0(ri - rj),
    }
}

/// Observes each pair independently with probability `cfg.sparsity`, then
/// joins the components with a uniformly random spanning tree.
pub fn sample_graph(r_true: &[f64], cfg: &SynthConfig) -> Result<SampledGraph> {
    cfg.validate()?;
    let n = r_true.len();
    if n != cfg.n {
        return Err(Error::DimensionMismatch {
            context: "skills vs config n",
            expected: cfg.n,
            got: n,
        });
    }
    if r_true.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("skills must be finite".into()));
    }
    let mut rng = stream_rng(cfg.seed, STREAM_GRAPH);
    let mut c = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < cfg.sparsity {
                let v = outcome(cfg.kind, r_true[i], r_true[j]);
                c[(i, j)] = v;
                c[(j, i)] = -v;
            }
        }
    }
    let mut graph = ComparisonGraph::from_matrix(c, cfg.kind)?;
    let labels = graph.components();
    let m = labels.iter().copied().max().map_or(0, |l| l + 1);
    let mut repair_edges = 0;
    if m > 1 {
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (i, &l) in labels.iter().enumerate() {
            members[l].push(i);
        }
        // Random walk on the complete graph of components; first-entrance
        // edges form a uniform spanning tree.
        let mut visited = vec![false; m];
        let mut current = rng.random_range(0..m);
        visited[current] = true;
        let mut remaining = m - 1;
        while remaining > 0 {
            let mut next = rng.random_range(0..m - 1);
            if next >= current {
                next += 1;
            }
            if !visited[next] {
                let a = members[current][rng.random_range(0..members[current].len())];
                let b = members[next][rng.random_range(0..members[next].len())];
                let (i, j) = (a.min(b), a.max(b));
                graph.set_pair(i, j, outcome(cfg.kind, r_true[i], r_true[j]));
                visited[next] = true;
                remaining -= 1;
                repair_edges += 1;
            }
            current = next;
        }
    }
    Ok(SampledGraph { graph, repair_edges })
}

/// Negates each observed ordinal outcome with probability `p`.
pub fn apply_flip(g: &ComparisonGraph, p: f64, seed: u64) -> Result<ComparisonGraph> {
    if g.kind() != ComparisonKind::Ordinal {
        return Err(Error::CardinalInput);
    }
    check_prob("p", p)?;
    let mut rng = stream_rng(seed, STREAM_NOISE);
    let mut out = g.clone();
    for (i, j, v) in g.observed_pairs() {
        if rng.random::<f64>() < p {
            out.set_pair(i, j, -v);
        }
    }
    Ok(out)
}

/// Replaces each observed cardinal outcome with probability `eta` by `M·U`,
/// `U ~ U[-1, 1]`, where `M = max_ij (r_i - r_j)`.
pub fn apply_ero(g: &ComparisonGraph, eta: f64, r_true: &[f64], seed: u64) -> Result<ComparisonGraph> {
    if g.kind() != ComparisonKind::Cardinal {
        return Err(Error::OrdinalInput);
    }
    check_prob("eta", eta)?;
    if r_true.len() != g.n() {
        return Err(Error::DimensionMismatch {
            context: "skills vs graph size",
            expected: g.n(),
            got: r_true.len(),
        });
    }
    let hi = r_true.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = r_true.iter().copied().fold(f64::INFINITY, f64::min);
    let m = hi - lo;
    let mut rng = stream_rng(seed, STREAM_NOISE);
    let mut out = g.clone();
    for (i, j, _) in g.observed_pairs() {
        if rng.random::<f64>() < eta {
            let u: f64 = rng.random_range(-1.0..=1.0);
            out.set_pair(i, j, m * u);
        }
    }
    Ok(out)
}

/// Everything one synthetic run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub config: SynthConfig,
    pub x: Vec<f64>,
    pub r_true: Vec<f64>,
    /// Noise-free comparisons.
    pub clean: ComparisonGraph,
    /// Comparisons after the noise model.
    pub graph: ComparisonGraph,
    /// One column, `x`.
    pub features: FeatureTable,
    pub repair_edges: usize,
}

pub fn simulate(cfg: &SynthConfig) -> Result<SyntheticData> {
    let (x, r_true) = generate_players(cfg)?;
    let sampled = sample_graph(&r_true, cfg)?;
    let graph = match cfg.noise {
        NoiseModel::None => sampled.graph.clone(),
        NoiseModel::Flip { p } => apply_flip(&sampled.graph, p, cfg.seed)?,
        NoiseModel::Ero { eta } => apply_ero(&sampled.graph, eta, &r_true, cfg.seed)?,
    };
    let features = FeatureTable::new(Matrix::from_column_slice(cfg.n, 1, &x), vec!["x".to_string()], vec![])?;
    Ok(SyntheticData {
        config: *cfg,
        x,
        r_true,
        clean: sampled.graph,
        graph,
        features,
        repair_edges: sampled.repair_edges,
    })
}

/// Synthetic data whose outcomes depend on a binary sensitive attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitiveData {
    /// Columns `x1`, `x2` and the sensitive `z`.
    pub features: FeatureTable,
    pub z: Vec<f64>,
    pub r_true: Vec<f64>,
    pub graph: ComparisonGraph,
}

/// Items with `z ~ Bernoulli(1/2)`, `x1 ~ U[0, 1]`, a proxy
/// `x2 = z + 0.3·N(0, 1)` and skill `r = x1 + z`; ordinal comparisons on a
/// graph of the given sparsity.
pub fn simulate_sensitive(n: usize, sparsity: f64, seed: u64) -> Result<SensitiveData> {
    let cfg = SynthConfig {
        n,
        sparsity,
        seed,
        ..Default::default()
    };
    cfg.validate()?;
    let mut rng = stream_rng(seed, STREAM_PLAYERS);
    let mut values = Vec::with_capacity(3 * n);
    let mut z = Vec::with_capacity(n);
    let mut r = Vec::with_capacity(n);
    for _ in 0..n {
        let zi = if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 };
        let x1: f64 = rng.random();
        let eps: f64 = StandardNormal.sample(&mut rng);
        values.extend([x1, zi + 0.3 * eps, zi]);
        z.push(zi);
        r.push(x1 + zi);
    }
    let graph = sample_graph(&r, &cfg)?.graph;
    let features = FeatureTable::new(
        Matrix::from_row_slice(n, 3, &values),
        vec!["x1".into(), "x2".into(), "z".into()],
        vec![2],
    )?;
    Ok(SensitiveData {
        features,
        z,
        r_true: r,
        graph,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn skill_values() {
        assert_abs_diff_eq!(skill(0.5), -1.375, epsilon = 1e-12);
        assert_abs_diff_eq!(skill(0.0), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn noiseless_players_follow_skill() {
        let cfg = SynthConfig {
            n: 50,
            ..Default::default()
        };
        let (x, r) = generate_players(&cfg).unwrap();
        for (xi, ri) in x.iter().zip(&r) {
            assert_eq!(*ri, skill(*xi));
            assert!((0.0..1.0).contains(xi));
        }
        assert_eq!(generate_players(&cfg).unwrap(), (x, r));
    }

    #[test]
    fn complete_graph_at_full_sparsity() {
        let cfg = SynthConfig {
            n: 20,
            sparsity: 1.0,
            ..Default::default()
        };
        let (_, r) = generate_players(&cfg).unwrap();
        let s = sample_graph(&r, &cfg).unwrap();
        assert_eq!(s.graph.n_observed(), 190);
        assert_eq!(s.repair_edges, 0);
    }

    #[test]
    fn sparse_graphs_are_connected() {
        for seed in 0..10 {
            let cfg = SynthConfig {
                n: 300,
                sparsity: 0.003,
                seed,
                ..Default::default()
            };
            let (_, r) = generate_players(&cfg).unwrap();
            let s = sample_graph(&r, &cfg).unwrap();
            assert_eq!(s.graph.n_components(), 1);
            assert!(s.repair_edges > 0);
        }
    }

    #[test]
    fn flip_extremes() {
        let cfg = SynthConfig {
            n: 30,
            sparsity: 0.3,
            ..Default::default()
        };
        let d = simulate(&cfg).unwrap();
        assert_eq!(apply_flip(&d.graph, 0.0, 1).unwrap(), d.graph);
        let all = apply_flip(&d.graph, 1.0, 1).unwrap();
        assert_eq!(all.matrix(), &(-d.graph.matrix()));
        assert!(matches!(
            apply_ero(&d.graph, 0.5, &d.r_true, 1),
            Err(Error::OrdinalInput)
        ));
    }

    #[test]
    fn ero_bounds_and_support() {
        let cfg = SynthConfig {
            n: 40,
            sparsity: 0.5,
            kind: ComparisonKind::Cardinal,
            noise: NoiseModel::Ero { eta: 1.0 },
            ..Default::default()
        };
        let d = simulate(&cfg).unwrap();
        let m = d.r_true.iter().copied().fold(f64::MIN, f64::max) - d.r_true.iter().copied().fold(f64::MAX, f64::min);
        assert_eq!(d.graph.n_observed(), d.clean.n_observed());
        for (i, j, v) in d.graph.observed_pairs() {
            assert!(v.abs() <= m);
            assert_ne!(d.clean.get(i, j), 0.0);
        }
        assert!(matches!(apply_flip(&d.graph, 0.5, 1), Err(Error::CardinalInput)));
        assert_eq!(apply_ero(&d.clean, 0.0, &d.r_true, 3).unwrap(), d.clean);
    }

    #[test]
    fn mismatched_noise_is_rejected() {
        let cfg = SynthConfig {
            noise: NoiseModel::Flip { p: 0.1 },
            kind: ComparisonKind::Cardinal,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
