//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every exported function returns a JSON string; errors surface as thrown
//! JavaScript strings.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use covrank::harness::{run_noise_sweep, NoiseKind, RunOptions, SweepGrid};
use covrank::metrics::pearson;
use covrank::rankers::{default_kernel, rank, svdkfair_rank, FairnessConfig};
use covrank::synth::{simulate, simulate_sensitive, SynthConfig};
use covrank::{kendall_tau, Algorithm, ComparisonKind, Error, RankParams, Result};

#[derive(Debug, Serialize)]
struct AlgoRun {
    algo: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    kendall_tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    upset_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scores: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct SimulateOutput {
    x: Vec<f64>,
    r_true: Vec<f64>,
    n_comparisons: usize,
    runs: Vec<AlgoRun>,
}

#[derive(Debug, Serialize)]
struct CurvePoint {
    algo: String,
    level: f64,
    mean_tau: Option<f64>,
    std_tau: Option<f64>,
    failed: usize,
}

#[derive(Debug, Serialize)]
struct FairPoint {
    fair_lambda: f64,
    upset_fraction: f64,
    abs_corr: f64,
}

fn parse_noise(noise: &str) -> Result<NoiseKind> {
    match noise {
        "none" => Ok(NoiseKind::None),
        "flip" => Ok(NoiseKind::Flip),
        "ero" => Ok(NoiseKind::Ero),
        other => Err(Error::param("noise", format!("unknown noise model `{other}`"))),
    }
}

fn kind_for(noise: NoiseKind) -> ComparisonKind {
    match noise {
        NoiseKind::Ero => ComparisonKind::Cardinal,
        _ => ComparisonKind::Ordinal,
    }
}

fn parse_list<T: std::str::FromStr>(name: &'static str, s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Error::param(name, format!("cannot parse `{t}`"))))
        .collect()
}

fn parse_algos(s: &str) -> Result<Vec<Algorithm>> {
    let algos: Vec<Algorithm> = parse_list("algos", s)?;
    if algos.is_empty() {
        return Err(Error::param("algos", "name at least one algorithm"));
    }
    if algos.contains(&Algorithm::SvdKFair) {
        return Err(Error::param("algos", "svdkfair needs a sensitive attribute"));
    }
    Ok(algos)
}

/// Simulates one dataset and ranks it with each algorithm.
pub fn simulate_and_rank_json(
    n: usize,
    sparsity: f64,
    noise: &str,
    level: f64,
    sigma: f64,
    seed: u64,
    algos: &str,
) -> Result<String> {
    let noise = parse_noise(noise)?;
    let algos = parse_algos(algos)?;
    let cfg = SynthConfig {
        n,
        sparsity,
        sigma,
        noise: noise.model(level),
        kind: kind_for(noise),
        seed,
    };
    let data = simulate(&cfg)?;
    let params = RankParams::default();
    let runs = algos
        .iter()
        .map(|&algo| {
            let features = algo.needs_features().then_some(&data.features);
            match rank(algo, &data.graph, features, &params)
                .and_then(|out| Ok((kendall_tau(&out.result.scores, &data.r_true)?, out.result)))
            {
                Ok((tau, res)) => AlgoRun {
                    algo: algo.tag().into(),
                    kendall_tau: Some(tau),
                    upset_fraction: Some(res.upset_fraction),
                    scores: Some(res.scores),
                    error: None,
                },
                Err(e) => AlgoRun {
                    algo: algo.tag().into(),
                    kendall_tau: None,
                    upset_fraction: None,
                    scores: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let out = SimulateOutput {
        x: data.x,
        r_true: data.r_true,
        n_comparisons: data.graph.n_observed(),
        runs,
    };
    Ok(serde_json::to_string(&out)?)
}

/// Mean Kendall's tau per algorithm and noise level over `seeds` datasets.
pub fn noise_curve_json(
    n: usize,
    sparsity: f64,
    noise: &str,
    levels: &str,
    seeds: usize,
    seed: u64,
    algos: &str,
) -> Result<String> {
    let noise = parse_noise(noise)?;
    let grid = SweepGrid {
        n,
        sparsity,
        kind: kind_for(noise),
        noise,
        levels: parse_list("levels", levels)?,
        sigmas: vec![0.0],
        seeds,
        base_seed: seed,
    };
    let opts = RunOptions {
        threads: 1,
        ..Default::default()
    };
    let report = run_noise_sweep(&grid, &parse_algos(algos)?, &opts)?;
    let points: Vec<CurvePoint> = report
        .aggregates
        .iter()
        .map(|a| CurvePoint {
            algo: a.algo.clone(),
            level: a.noise_level,
            mean_tau: a.kendall_tau.as_ref().map(|s| s.mean),
            std_tau: a.kendall_tau.as_ref().map(|s| s.std),
            failed: a.failed,
        })
        .collect();
    Ok(serde_json::to_string(&points)?)
}

/// Upset fraction against |corr(scores, z)| for SVDKFair-Rank over a range
/// of penalty weights, on data where skill depends on a binary attribute `z`.
pub fn fairness_tradeoff_json(n: usize, sparsity: f64, seed: u64, fair_lambdas: &str) -> Result<String> {
    let data = simulate_sensitive(n, sparsity, seed)?;
    let spec = default_kernel(&data.features);
    let points = parse_list::<f64>("fair_lambdas", fair_lambdas)?
        .into_iter()
        .map(|lambda| {
            let (res, _) = svdkfair_rank(&data.graph, &data.features, &spec, &FairnessConfig::new(lambda))?;
            Ok(FairPoint {
                fair_lambda: lambda,
                upset_fraction: res.upset_fraction,
                abs_corr: pearson(&res.scores, &data.z)?.abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(serde_json::to_string(&points)?)
}

fn to_js(r: Result<String>) -> std::result::Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen]
pub fn simulate_and_rank(
    n: usize,
    sparsity: f64,
    noise: &str,
    level: f64,
    sigma: f64,
    seed: u32,
    algos: &str,
) -> std::result::Result<String, JsValue> {
    to_js(simulate_and_rank_json(
        n,
        sparsity,
        noise,
        level,
        sigma,
        seed.into(),
        algos,
    ))
}

#[wasm_bindgen]
pub fn noise_curve(
    n: usize,
    sparsity: f64,
    noise: &str,
    levels: &str,
    seeds: usize,
    seed: u32,
    algos: &str,
) -> std::result::Result<String, JsValue> {
    to_js(noise_curve_json(n, sparsity, noise, levels, seeds, seed.into(), algos))
}

#[wasm_bindgen]
pub fn fairness_tradeoff(
    n: usize,
    sparsity: f64,
    seed: u32,
    fair_lambdas: &str,
) -> std::result::Result<String, JsValue> {
    to_js(fairness_tradeoff_json(n, sparsity, seed.into(), fair_lambdas))
}
