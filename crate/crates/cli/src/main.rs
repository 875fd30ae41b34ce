mod args;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde::Serialize;

use covrank::bahsic::{bahsic_select, BahsicOptions};
use covrank::harness::{
    cross_validate, has_tunables, run_noise_sweep, run_prediction_experiment, CvPlan, CvResult, NoiseKind, RunOptions,
    SweepGrid, LAMBDA_GRID,
};
use covrank::io;
use covrank::kernels::{comparison_kernel, hsic_test_kernels, median_rbf, LENGTHSCALE_GRID};
use covrank::metrics::pearson;
use covrank::predict::predict_unseen;
use covrank::rankers::{rank, svdkfair_rank, FairnessConfig};
use covrank::synth::{simulate, NoiseModel, SynthConfig};
use covrank::{
    Algorithm, ComparisonGraph, ComparisonKind, Error, ErrorClass, FeatureTable, KernelSpec, RankParams, Result,
};

use args::*;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Usage => 1,
                ErrorClass::Data => 2,
                ErrorClass::Numerical => 3,
            })
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Rank(a) => cmd_rank(cli, a),
        Command::Predict(a) => cmd_predict(cli, a),
        Command::Simulate(a) => cmd_simulate(cli, a),
        Command::Sweep(a) => cmd_sweep(cli, a),
        Command::Cv(a) => cmd_cv(cli, a),
        Command::SelectFeatures(a) => cmd_select(cli, a),
        Command::HsicTest(a) => cmd_hsic(cli, a),
        Command::Fair(a) => cmd_fair(cli, a),
        Command::Holdout(a) => cmd_holdout(cli, a),
    }
}

fn kind_of(k: KindArg) -> Option<ComparisonKind> {
    match k {
        KindArg::Auto => None,
        KindArg::Ordinal => Some(ComparisonKind::Ordinal),
        KindArg::Cardinal => Some(ComparisonKind::Cardinal),
    }
}

fn load(d: &DataArgs) -> Result<(ComparisonGraph, Option<FeatureTable>)> {
    if !d.sensitive.is_empty() && d.features.is_none() {
        return Err(Error::param("sensitive", "needs --features"));
    }
    io::load_dataset(&d.comparisons, d.features.as_deref(), kind_of(d.kind), &d.sensitive)
}

fn need_features(f: Option<FeatureTable>) -> Result<FeatureTable> {
    f.ok_or_else(|| Error::param("features", "this command needs --features"))
}

fn out_dir(cli: &Cli) -> Result<&Path> {
    fs::create_dir_all(&cli.out)?;
    Ok(&cli.out)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn parse_algos(tags: &[String]) -> Result<Vec<Algorithm>> {
    tags.iter().map(|t| t.parse()).collect()
}

fn base_params(h: &HyperArgs) -> RankParams {
    let kernel = if h.linear {
        Some(KernelSpec::Linear)
    } else {
        h.lengthscale.map(KernelSpec::rbf)
    };
    RankParams {
        lambda: h.lambda,
        kernel,
        epsilon: h.epsilon,
        fairness: h.fair_lambda.map(|l| FairnessConfig {
            lambda: l,
            sensitive_kernel: h.sensitive_lengthscale.map(KernelSpec::rbf),
        }),
    }
}

fn cv_plan(h: &HyperArgs, seed: u64) -> CvPlan {
    CvPlan {
        folds: h.folds,
        seed,
        ..CvPlan::default()
    }
}

/// Cross-validates unset hyperparameters when possible.
fn tuned_params(
    algo: Algorithm,
    g: &ComparisonGraph,
    f: Option<&FeatureTable>,
    h: &HyperArgs,
    plan: CvPlan,
) -> Result<(RankParams, Option<CvResult>)> {
    let base = base_params(h);
    if h.no_cv || f.is_none() || !has_tunables(algo, &base) {
        return Ok((base, None));
    }
    if g.n_observed() < plan.folds {
        log::warn!(
            "only {} observed matches for {} folds; using default hyperparameters",
            g.n_observed(),
            plan.folds
        );
        return Ok((base, None));
    }
    let cv = cross_validate(g, f, algo, &plan, &base)?;
    Ok((cv.best.clone(), Some(cv)))
}

#[derive(Serialize)]
struct RankSummary<'a> {
    algo: Algorithm,
    kind: ComparisonKind,
    n_items: usize,
    n_observed: usize,
    upsets: usize,
    upset_fraction: f64,
    orientation: covrank::Orientation,
    params: &'a RankParams,
    kcca: &'a Option<covrank::rankers::KccaDetails>,
    cv: Option<&'a CvResult>,
}

fn cmd_rank(cli: &Cli, a: &RankArgs) -> Result<()> {
    let algo: Algorithm = a.algo.parse()?;
    let (g, f) = load(&a.data)?;
    let (params, cv) = tuned_params(algo, &g, f.as_ref(), &a.hyper, cv_plan(&a.hyper, cli.seed))?;
    let out = rank(algo, &g, f.as_ref(), &params)?;
    let dir = out_dir(cli)?;
    io::write_rank_result(g.item_ids(), &out.result, create(dir, "ranking.csv")?)?;
    if let Some(model) = &out.model {
        io::write_model(model, &dir.join("model.json"))?;
    }
    let summary = RankSummary {
        algo,
        kind: g.kind(),
        n_items: g.n(),
        n_observed: g.n_observed(),
        upsets: out.result.upsets,
        upset_fraction: out.result.upset_fraction,
        orientation: out.result.orientation,
        params: &out.params,
        kcca: &out.kcca,
        cv: cv.as_ref(),
    };
    io::write_json(&summary, &dir.join("summary.json"))?;
    Ok(())
}

fn cmd_predict(cli: &Cli, a: &PredictArgs) -> Result<()> {
    let model = io::read_model(&a.model)?;
    let (ids, table) = io::read_features_raw(&a.features, &[])?;
    let mut cols = Vec::with_capacity(model.feature_names.len());
    for name in &model.feature_names {
        cols.push(table.column_index(name).ok_or_else(|| {
            Error::InvalidInput(format!("features file has no column `{name}` required by the model"))
        })?);
    }
    let pred = predict_unseen(&model, &table.columns(&cols))?;
    let dir = out_dir(cli)?;
    io::write_ranking(&ids, &pred.scores, &pred.ordering, create(dir, "predictions.csv")?)?;
    Ok(())
}

fn noise_model(noise: NoiseArg, level: f64) -> NoiseModel {
    match noise {
        NoiseArg::None => NoiseModel::None,
        NoiseArg::Flip => NoiseModel::Flip { p: level },
        NoiseArg::Ero => NoiseModel::Ero { eta: level },
    }
}

fn sim_kind(noise: NoiseArg, kind: Option<KindArg>) -> ComparisonKind {
    match kind.and_then(kind_of) {
        Some(k) => k,
        None if noise == NoiseArg::Ero => ComparisonKind::Cardinal,
        None => ComparisonKind::Ordinal,
    }
}

#[derive(Serialize)]
struct SimulateSummary {
    config: SynthConfig,
    n_observed: usize,
    realized_sparsity: f64,
    repair_edges: usize,
}

fn cmd_simulate(cli: &Cli, a: &SimulateArgs) -> Result<()> {
    let cfg = SynthConfig {
        n: a.n,
        sparsity: a.sparsity,
        sigma: a.sigma,
        noise: noise_model(a.noise, a.level),
        kind: sim_kind(a.noise, a.kind),
        seed: cli.seed,
    };
    let d = simulate(&cfg)?;
    let dir = out_dir(cli)?;
    let ids = d.graph.item_ids().to_vec();
    io::write_comparisons(&d.graph, create(dir, "comparisons.csv")?)?;
    io::write_features(&ids, &d.features, create(dir, "features.csv")?)?;
    io::write_column(&ids, "r_true", &d.r_true, create(dir, "truth.csv")?)?;
    let summary = SimulateSummary {
        config: cfg,
        n_observed: d.graph.n_observed(),
        realized_sparsity: d.graph.sparsity(),
        repair_edges: d.repair_edges,
    };
    io::write_json(&summary, &dir.join("simulate.json"))?;
    Ok(())
}

fn run_options(h: &HyperArgs, timing: bool, threads: usize) -> RunOptions {
    RunOptions {
        cv: if h.no_cv { None } else { Some(cv_plan(h, 0)) },
        params: base_params(h),
        timing,
        threads,
    }
}

fn cmd_sweep(cli: &Cli, a: &SweepArgs) -> Result<()> {
    let algos = parse_algos(&a.algos)?;
    let grid = SweepGrid {
        n: a.n,
        sparsity: a.sparsity,
        kind: sim_kind(a.noise, a.kind),
        noise: match a.noise {
            NoiseArg::None => NoiseKind::None,
            NoiseArg::Flip => NoiseKind::Flip,
            NoiseArg::Ero => NoiseKind::Ero,
        },
        levels: a.levels.clone(),
        sigmas: a.sigmas.clone(),
        seeds: a.seeds,
        base_seed: cli.seed,
    };
    let report = run_noise_sweep(&grid, &algos, &run_options(&a.hyper, a.timing, a.threads))?;
    report.write_dir(out_dir(cli)?)
}

fn cmd_cv(cli: &Cli, a: &CvArgs) -> Result<()> {
    let algo: Algorithm = a.algo.parse()?;
    let (g, f) = load(&a.data)?;
    let plan = CvPlan {
        folds: a.hyper.folds,
        lambda_grid: if a.lambda_grid.is_empty() {
            LAMBDA_GRID.to_vec()
        } else {
            a.lambda_grid.clone()
        },
        lengthscale_grid: if a.lengthscale_grid.is_empty() {
            LENGTHSCALE_GRID.to_vec()
        } else {
            a.lengthscale_grid.clone()
        },
        seed: cli.seed,
    };
    let cv = cross_validate(&g, f.as_ref(), algo, &plan, &base_params(&a.hyper))?;
    io::write_json(&cv, &out_dir(cli)?.join("cv.json"))
}

#[derive(Serialize)]
struct SelectStep {
    removed: Vec<String>,
    hsic: f64,
}

#[derive(Serialize)]
struct SelectSummary {
    retained: Vec<String>,
    trace: Vec<SelectStep>,
}

fn cmd_select(cli: &Cli, a: &SelectArgs) -> Result<()> {
    let (g, f) = load(&a.data)?;
    let f = need_features(f)?;
    let cols = f.covariate_columns();
    let names: Vec<String> = cols.iter().map(|&c| f.column_names()[c].clone()).collect();
    let target = comparison_kernel(&g)?;
    let opts = BahsicOptions {
        drop_fraction: a.drop_fraction,
        ..BahsicOptions::default()
    };
    let res = bahsic_select(&f.covariates(), &target, a.k, &opts)?;
    let pick = |idx: &[usize]| idx.iter().map(|&k| names[k].clone()).collect::<Vec<_>>();
    let summary = SelectSummary {
        retained: pick(&res.retained),
        trace: res
            .trace
            .iter()
            .map(|s| SelectStep {
                removed: pick(&s.removed),
                hsic: s.hsic,
            })
            .collect(),
    };
    io::write_json(&summary, &out_dir(cli)?.join("selection.json"))
}

#[derive(Serialize)]
struct HsicSummary {
    columns: Vec<String>,
    #[serde(flatten)]
    test: covrank::kernels::HsicTestResult,
}

fn cmd_hsic(cli: &Cli, a: &HsicArgs) -> Result<()> {
    let (g, f) = load(&a.data)?;
    let f = need_features(f)?;
    let cols: Vec<usize> = if a.columns.is_empty() {
        f.covariate_columns()
    } else {
        a.columns
            .iter()
            .map(|c| {
                f.column_index(c)
                    .ok_or_else(|| Error::param("columns", format!("no column `{c}`")))
            })
            .collect::<Result<_>>()?
    };
    let k = median_rbf(&f.columns(&cols))?;
    let gk = comparison_kernel(&g)?;
    let test = hsic_test_kernels(&k, &gk, a.permutations, a.alpha, cli.seed)?;
    let summary = HsicSummary {
        columns: cols.iter().map(|&c| f.column_names()[c].clone()).collect(),
        test,
    };
    io::write_json(&summary, &out_dir(cli)?.join("hsic.json"))
}

fn cmd_fair(cli: &Cli, a: &FairArgs) -> Result<()> {
    let (g, f) = load(&a.data)?;
    let f = need_features(f)?;
    if f.sensitive_columns().is_empty() {
        return Err(Error::param("sensitive", "name at least one sensitive column"));
    }
    let plan = cv_plan(&a.hyper, cli.seed);
    let (params, _) = tuned_params(Algorithm::SvdKCov, &g, Some(&f), &a.hyper, plan)?;
    let spec = params.kernel.unwrap_or_else(|| covrank::rankers::default_kernel(&f));
    let z = f
        .values()
        .column(f.sensitive_columns()[0])
        .iter()
        .copied()
        .collect::<Vec<_>>();
    let dir = out_dir(cli)?;
    let mut w = csv::Writer::from_writer(create(dir, "fairness.csv")?);
    w.write_record(["fair_lambda", "upsets", "upset_fraction", "abs_corr"])?;
    for &lambda in &a.fair_lambdas {
        let fair = FairnessConfig {
            lambda,
            sensitive_kernel: a.hyper.sensitive_lengthscale.map(KernelSpec::rbf),
        };
        let (res, _) = svdkfair_rank(&g, &f, &spec, &fair)?;
        let corr = pearson(&res.scores, &z)?.abs();
        w.write_record([
            lambda.to_string(),
            res.upsets.to_string(),
            res.upset_fraction.to_string(),
            corr.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_holdout(cli: &Cli, a: &HoldoutArgs) -> Result<()> {
    let algos = parse_algos(&a.algos)?;
    let (g, f) = load(&a.data)?;
    let f = need_features(f)?;
    let truth = match &a.truth {
        Some(p) => {
            let (ids, t) = io::read_features_raw(p, &[])?;
            let t = io::align_features(&ids, &t, g.item_ids())?;
            let col = t
                .column_index("r_true")
                .ok_or_else(|| Error::InvalidInput("truth file needs an `r_true` column".into()))?;
            Some(t.values().column(col).iter().copied().collect::<Vec<f64>>())
        }
        None => None,
    };
    let report = run_prediction_experiment(
        &g,
        &f,
        truth.as_deref(),
        &algos,
        a.repeats,
        a.split,
        cli.seed,
        &run_options(&a.hyper, a.timing, a.threads),
    )?;
    report.write_dir(out_dir(cli)?)
}
