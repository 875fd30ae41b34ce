use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{ComparisonGraph, ComparisonKind, FeatureTable};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::metrics::{count_upsets, kendall_tau};
use crate::predict::predict_unseen;
use crate::rankers::{rank, Algorithm, FittedModel, RankParams};
use crate::synth::{simulate, stream_rng, NoiseModel, SynthConfig};

use super::cv::{cross_validate, has_tunables, CvPlan};
use super::report::{ExperimentRecord, ExperimentReport};

const STREAM_SPLITS: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    Flip,
    Ero,
}

impl NoiseKind {
    pub fn model(&self, level: f64) -> NoiseModel {
        match self {
            NoiseKind::None => NoiseModel::None,
            NoiseKind::Flip => NoiseModel::Flip { p: level },
            NoiseKind::Ero => NoiseModel::Ero { eta: level },
        }
    }
}

/// Grid of synthetic settings for [`run_noise_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub n: usize,
    pub sparsity: f64,
    pub kind: ComparisonKind,
    pub noise: NoiseKind,
    pub levels: Vec<f64>,
    pub sigmas: Vec<f64>,
    /// Seeds `base_seed .. base_seed + seeds`.
    pub seeds: usize,
    pub base_seed: u64,
}

/// Settings shared by the experiment runners.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Tune unset hyperparameters per run; `None` uses defaults.
    pub cv: Option<CvPlan>,
    pub params: RankParams,
    /// Record wall-clock times. Off by default so reports are reproducible.
    pub timing: bool,
    /// Worker threads; 0 picks the available parallelism.
    pub threads: usize,
}

struct Fit {
    scores: Vec<f64>,
    model: Option<FittedModel>,
    params: RankParams,
}

fn fit(
    algo: Algorithm,
    g: &ComparisonGraph,
    features: Option<&FeatureTable>,
    opts: &RunOptions,
    cv_seed: u64,
) -> Result<Fit> {
    let params = match &opts.cv {
        Some(plan) if features.is_some() && has_tunables(algo, &opts.params) => {
            let plan = CvPlan {
                seed: cv_seed,
                ..plan.clone()
            };
            cross_validate(g, features, algo, &plan, &opts.params)?.best
        }
        _ => opts.params.clone(),
    };
    let out = rank(algo, g, features, &params)?;
    Ok(Fit {
        scores: out.result.scores,
        model: out.model,
        params: out.params,
    })
}

fn lengthscale_of(p: &RankParams) -> Option<f64> {
    match p.kernel {
        Some(KernelSpec::Rbf { lengthscale }) => Some(lengthscale),
        _ => None,
    }
}

fn parallel_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = if threads == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        threads
    }
    .min(items.len().max(1));
    if threads <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let out: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= items.len() {
                    break;
                }
                let r = f(&items[k]);
                out.lock().expect("worker panicked")[k] = Some(r);
            });
        }
    });
    out.into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|r| r.expect("every item processed"))
        .collect()
}

/// Generates, corrupts and ranks every (level, σ, seed) cell with every
/// algorithm, scoring Kendall's tau against the true skills.
///
/// Failures are recorded per run rather than aborting the sweep.
pub fn run_noise_sweep(grid: &SweepGrid, algos: &[Algorithm], opts: &RunOptions) -> Result<ExperimentReport> {
    if grid.levels.is_empty() || grid.sigmas.is_empty() || grid.seeds == 0 || algos.is_empty() {
        return Err(Error::param(
            "grid",
            "levels, sigmas, seeds and algorithms must be nonempty",
        ));
    }
    let mut cells = Vec::new();
    for &level in &grid.levels {
        for &sigma in &grid.sigmas {
            for s in 0..grid.seeds as u64 {
                let cfg = SynthConfig {
                    n: grid.n,
                    sparsity: grid.sparsity,
                    sigma,
                    noise: grid.noise.model(level),
                    kind: grid.kind,
                    seed: grid.base_seed.wrapping_add(s),
                };
                cfg.validate()?;
                cells.push(cfg);
            }
        }
    }
    let per_cell = parallel_map(&cells, opts.threads, |cfg| sweep_cell(cfg, grid.noise, algos, opts));
    Ok(ExperimentReport::from_records(per_cell.into_iter().flatten().collect()))
}

fn sweep_cell(cfg: &SynthConfig, noise: NoiseKind, algos: &[Algorithm], opts: &RunOptions) -> Vec<ExperimentRecord> {
    let data = simulate(cfg);
    algos
        .iter()
        .map(|&algo| {
            let mut rec = ExperimentRecord {
                algo: algo.tag().to_string(),
                noise_kind: format!("{noise:?}").to_lowercase(),
                noise_level: cfg.noise.level(),
                sigma: cfg.sigma,
                seed: cfg.seed,
                kendall_tau: None,
                upset_fraction: None,
                wall_time_ms: None,
                lambda: None,
                lengthscale: None,
                error: None,
            };
            let start = opts.timing.then(Instant::now);
            let outcome = match &data {
                Err(e) => Err(e.to_string()),
                Ok(d) => (|| -> Result<_> {
                    let features = algo.needs_features().then_some(&d.features);
                    let f = fit(algo, &d.graph, features, opts, cfg.seed)?;
                    let tau = kendall_tau(&f.scores, &d.r_true)?;
                    let upsets = count_upsets(&d.graph, &f.scores)?;
                    let observed = d.graph.n_observed().max(1);
                    Ok((tau, upsets as f64 / observed as f64, f.params))
                })()
                .map_err(|e| e.to_string()),
            };
            rec.wall_time_ms = start.map(|t| t.elapsed().as_secs_f64() * 1e3);
            match outcome {
                Ok((tau, uf, params)) => {
                    rec.kendall_tau = Some(tau);
                    rec.upset_fraction = Some(uf);
                    if opts.cv.is_some() {
                        rec.lambda = params.lambda;
                        rec.lengthscale = lengthscale_of(&params);
                    }
                }
                Err(e) => {
                    log::warn!("{algo} failed at seed {}: {e}", cfg.seed);
                    rec.error = Some(e);
                }
            }
            rec
        })
        .collect()
}

/// Item-level train/test split for repeat `k`: (train, test), each ascending.
pub fn split_items(n: usize, split: f64, seed: u64, k: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(split > 0.0 && split < 1.0) {
        return Err(Error::param("split", format!("must lie in (0, 1), got {split}")));
    }
    let mut items: Vec<usize> = (0..n).collect();
    items.shuffle(&mut stream_rng(seed.wrapping_add(k as u64), STREAM_SPLITS));
    let n_train = ((split * n as f64).round() as usize).clamp(1, n.saturating_sub(1));
    let mut train = items[..n_train].to_vec();
    let mut test = items[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Trains on a random `split` fraction of items and scores the rest from
/// covariates alone, `repeats` times. All algorithms share each split.
///
/// Records carry `noise_kind = "holdout"`, `noise_level = split` and the
/// repeat index as `seed`. Kendall's tau is filled only when `truth` is given.
#[allow(clippy::too_many_arguments)]
pub fn run_prediction_experiment(
    g: &ComparisonGraph,
    features: &FeatureTable,
    truth: Option<&[f64]>,
    algos: &[Algorithm],
    repeats: usize,
    split: f64,
    seed: u64,
    opts: &RunOptions,
) -> Result<ExperimentReport> {
    features.check_rows(g.n())?;
    if let Some(t) = truth {
        if t.len() != g.n() {
            return Err(Error::DimensionMismatch {
                context: "ground truth length",
                expected: g.n(),
                got: t.len(),
            });
        }
    }
    if repeats == 0 {
        return Err(Error::param("repeats", "must be at least 1"));
    }
    if let Some(a) = algos.iter().find(|a| !a.can_predict()) {
        return Err(Error::param(
            "algo",
            format!("`{a}` cannot score unseen items; use svdc, svdk, svdkfair or kcca"),
        ));
    }
    let mut splits = Vec::with_capacity(repeats);
    for k in 0..repeats {
        let (train, test) = split_items(g.n(), split, seed, k)?;
        if g.induced(&train).is_empty() {
            return Err(Error::InvalidInput(format!(
                "repeat {k}: training subgraph has no comparisons"
            )));
        }
        splits.push((k, train, test));
    }
    let per_split = parallel_map(&splits, opts.threads, |(k, train, test)| {
        algos
            .iter()
            .map(|&algo| holdout_run(g, features, truth, algo, split, seed, *k, train, test, opts))
            .collect::<Vec<_>>()
    });
    Ok(ExperimentReport::from_records(
        per_split.into_iter().flatten().collect(),
    ))
}

#[allow(clippy::too_many_arguments)]
fn holdout_run(
    g: &ComparisonGraph,
    features: &FeatureTable,
    truth: Option<&[f64]>,
    algo: Algorithm,
    split: f64,
    seed: u64,
    k: usize,
    train: &[usize],
    test: &[usize],
    opts: &RunOptions,
) -> ExperimentRecord {
    let mut rec = ExperimentRecord {
        algo: algo.tag().to_string(),
        noise_kind: "holdout".into(),
        noise_level: split,
        sigma: 0.0,
        seed: k as u64,
        kendall_tau: None,
        upset_fraction: None,
        wall_time_ms: None,
        lambda: None,
        lengthscale: None,
        error: None,
    };
    let start = opts.timing.then(Instant::now);
    let outcome = (|| -> Result<(Option<f64>, Option<f64>, RankParams)> {
        let g_train = g.induced(train);
        let f_train = features.select_rows(train);
        let fitted = fit(algo, &g_train, Some(&f_train), opts, seed.wrapping_add(k as u64))?;
        let model = fitted.model.expect("predictive algorithms return a model");
        let pred = predict_unseen(&model, &features.select_rows(test).covariates())?;
        let g_test = g.induced(test);
        let uf = if g_test.n_observed() > 0 {
            Some(count_upsets(&g_test, &pred.scores)? as f64 / g_test.n_observed() as f64)
        } else {
            None
        };
        let tau = match truth {
            Some(t) if test.len() >= 2 => {
                let t_test: Vec<f64> = test.iter().map(|&i| t[i]).collect();
                Some(kendall_tau(&pred.scores, &t_test)?)
            }
            _ => None,
        };
        Ok((tau, uf, fitted.params))
    })();
    rec.wall_time_ms = start.map(|t| t.elapsed().as_secs_f64() * 1e3);
    match outcome {
        Ok((tau, uf, params)) => {
            rec.kendall_tau = tau;
            rec.upset_fraction = uf;
            if opts.cv.is_some() {
                rec.lambda = params.lambda;
                rec.lengthscale = lengthscale_of(&params);
            }
        }
        Err(e) => {
            log::warn!("{algo} failed on repeat {k}: {e}");
            rec.error = Some(e.to_string());
        }
    }
    rec
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_row_count() {
        let grid = SweepGrid {
            n: 30,
            sparsity: 0.3,
            kind: ComparisonKind::Ordinal,
            noise: NoiseKind::Flip,
            levels: vec![0.0, 0.2],
            sigmas: vec![0.0],
            seeds: 3,
            base_seed: 5,
        };
        let algos = [Algorithm::Serial, Algorithm::Svd];
        let report = run_noise_sweep(&grid, &algos, &RunOptions::default()).unwrap();
        assert_eq!(report.records.len(), 2 * 2 * 3);
        assert_eq!(report.aggregates.len(), 4);
        let again = run_noise_sweep(&grid, &algos, &RunOptions::default()).unwrap();
        assert_eq!(report, again);
    }

    #[test]
    fn splits_are_disjoint_and_reproducible() {
        let (tr, te) = split_items(10, 0.7, 3, 0).unwrap();
        assert_eq!(tr.len(), 7);
        assert_eq!(te.len(), 3);
        assert!(tr.iter().all(|i| !te.contains(i)));
        assert_eq!(split_items(10, 0.7, 3, 0).unwrap(), (tr, te));
        assert!(split_items(10, 1.0, 3, 0).is_err());
    }

    #[test]
    fn prediction_rejects_non_predictive_algorithms() {
        let cfg = SynthConfig {
            n: 20,
            sparsity: 0.5,
            ..Default::default()
        };
        let d = simulate(&cfg).unwrap();
        let r = run_prediction_experiment(
            &d.graph,
            &d.features,
            None,
            &[Algorithm::Serial],
            2,
            0.7,
            0,
            &RunOptions::default(),
        );
        assert!(r.is_err());
    }
}
