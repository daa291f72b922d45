use exactfp::analysis::mean_sd;
use exactfp::data::{subsample_with, Record};
use exactfp::fingerprints::Encoding;
use exactfp::rng::{trial_seed, ExperimentRng};
use exactfp::{
    apply_split, default_hyperparams, load_dataset, optimize_hyperparams, regression_metrics, Fingerprint, GpModel,
    Hyperparams, OptimizerConfig, RegressionMetrics, SparseFingerprint,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{check_radius, hyper_json, parse_encoding, report_warnings, sparse_fingerprints, warnings_json};
use crate::error::CliError;
use crate::output::{write_atomic, RunContext};
use crate::{HyperMode, RegressArgs};

struct Side<'a> {
    records: Vec<&'a Record>,
    fps: Vec<SparseFingerprint>,
}

impl<'a> Side<'a> {
    fn new(records: Vec<&'a Record>, radius: usize) -> Result<Self, CliError> {
        let fps = sparse_fingerprints(&records.iter().map(|r| &r.mol).collect::<Vec<_>>(), radius)?;
        Ok(Self { records, fps })
    }

    fn take(&self, idx: &[usize], encoding: &Encoding) -> (Vec<Fingerprint>, Vec<f64>) {
        idx.iter()
            .map(|&i| (encoding.encode(&self.fps[i]), self.records[i].value))
            .unzip()
    }
}

struct TrialResult {
    trial: usize,
    seed: u64,
    n_train: usize,
    n_test: usize,
    initial: Hyperparams,
    hyper: Hyperparams,
    optimizer: Value,
    jitter: f64,
    metrics: RegressionMetrics,
}

fn run_trial(
    args: &RegressArgs,
    trial: usize,
    train: &Side,
    test: &Side,
    sizes: (usize, usize),
    encoding: &Encoding,
) -> Result<TrialResult, CliError> {
    let seed = trial_seed(args.seed, trial as u64);
    let mut rng = ExperimentRng::new(seed);
    let train_idx = subsample_with(&(0..train.records.len()).collect::<Vec<_>>(), sizes.0, &mut rng)?;
    let test_idx: Vec<usize> = if sizes.1 < test.records.len() {
        subsample_with(&(0..test.records.len()).collect::<Vec<_>>(), sizes.1, &mut rng)?
    } else {
        (0..test.records.len()).collect()
    };
    let (x, y) = train.take(&train_idx, encoding);
    let (xq, yq) = test.take(&test_idx, encoding);

    let initial = default_hyperparams(&y)?;
    let (hyper, optimizer) = match args.hyper {
        HyperMode::Fixed => (initial, Value::Null),
        HyperMode::Optimized => {
            let cfg = OptimizerConfig {
                learning_rate: args.learning_rate,
                max_iterations: args.max_iterations,
                optimize_mean: !args.fixed_mean,
                ..OptimizerConfig::default()
            };
            let (h, report) = optimize_hyperparams(&x, &y, initial, &cfg)?;
            let report = json!({
                "iterations": report.iterations,
                "initial_mll": report.initial_mll,
                "final_mll": report.final_mll,
                "final_grad_norm": report.final_grad_norm,
                "converged": report.converged,
                "reverted_to_initial": report.reverted_to_initial,
            });
            (h, report)
        }
    };
    let model = GpModel::fit(x, y, hyper)?;
    let pred = model.predict(&xq, false)?;
    let metrics = regression_metrics(&yq, &pred.means)?;
    Ok(TrialResult {
        trial,
        seed,
        n_train: train_idx.len(),
        n_test: test_idx.len(),
        initial,
        hyper,
        optimizer,
        jitter: model.jitter(),
        metrics,
    })
}

/// Writes `metrics.csv`: one row per trial followed by a `summary` row with
/// the mean and sample standard deviation of each metric.
pub fn run(args: &RegressArgs) -> Result<(), CliError> {
    check_radius(args.radius)?;
    if args.trials == 0 || args.train_size < 2 {
        return Err(CliError::usage("--trials must be positive and --train-size at least 2"));
    }
    if args.test_size == Some(0) || !(args.learning_rate > 0.0) {
        return Err(CliError::usage("--test-size and --learning-rate must be positive"));
    }
    let mut ctx = RunContext::new("regress", args, &args.output_dir)?;
    ctx.master_seed = Some(args.seed);
    let encoding = parse_encoding(&args.encoding, &mut ctx)?;
    ctx.add_input(&args.input)?;

    let primary = load_dataset(&args.input, &args.target)?;
    let (primary, secondary) = match (&args.split, &args.test) {
        (Some(split), _) => {
            ctx.add_input(split)?;
            (apply_split(primary, split)?, None)
        }
        (None, Some(test)) => {
            ctx.add_input(test)?;
            let secondary = load_dataset(test, &args.target)?;
            report_warnings(&secondary.warnings, test);
            (primary, Some(secondary))
        }
        (None, None) => return Err(CliError::usage("one of --split or --test is required")),
    };
    report_warnings(&primary.warnings, &args.input);
    let (train, test) = match &secondary {
        None => {
            let (tr, te) = primary.partition();
            (
                tr.iter().map(|&i| &primary.records[i]).collect::<Vec<_>>(),
                te.iter().map(|&i| &primary.records[i]).collect::<Vec<_>>(),
            )
        }
        Some(t) => (primary.records.iter().collect(), t.records.iter().collect()),
    };
    if train.len() < 2 || test.is_empty() {
        return Err(CliError::input(format!(
            "need at least 2 training and 1 test record, got {} and {}",
            train.len(),
            test.len()
        )));
    }
    let n_train = args.train_size.min(train.len());
    let n_test = match args.test_size {
        Some(n) if n > test.len() => {
            return Err(CliError::usage(format!("--test-size {n} exceeds the {} test records", test.len())))
        }
        Some(n) => n,
        None => test.len(),
    };
    let train = Side::new(train, args.radius)?;
    let test = Side::new(test, args.radius)?;

    let results: Vec<TrialResult> = (0..args.trials)
        .into_par_iter()
        .map(|t| run_trial(args, t, &train, &test, (n_train, n_test), &encoding))
        .collect::<Result<_, _>>()?;

    let column = |f: fn(&RegressionMetrics) -> f64| mean_sd(&results.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>());
    let (r2, mse, mae) = (column(|m| m.r2), column(|m| m.mse), column(|m| m.mae));
    write_atomic(&ctx.output("metrics.csv"), |out| {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "trial",
            "seed",
            "n_train",
            "n_test",
            "amplitude_sq",
            "noise_sq",
            "mean_const",
            "r2",
            "mse",
            "mae",
            "r2_sd",
            "mse_sd",
            "mae_sd",
        ])?;
        for r in &results {
            let h = &r.hyper;
            let m = &r.metrics;
            w.write_record([
                r.trial.to_string(),
                r.seed.to_string(),
                r.n_train.to_string(),
                r.n_test.to_string(),
                h.amplitude_sq.to_string(),
                h.noise_sq.to_string(),
                h.mean_const.to_string(),
                m.r2.to_string(),
                m.mse.to_string(),
                m.mae.to_string(),
                String::new(),
                String::new(),
                String::new(),
            ])?;
        }
        let blank = String::new;
        w.write_record([
            "summary".to_string(),
            blank(),
            n_train.to_string(),
            n_test.to_string(),
            blank(),
            blank(),
            blank(),
            r2.0.to_string(),
            mse.0.to_string(),
            mae.0.to_string(),
            r2.1.to_string(),
            mse.1.to_string(),
            mae.1.to_string(),
        ])?;
        w.flush()?;
        Ok(())
    })?;

    ctx.trial_seeds = results.iter().map(|r| r.seed).collect();
    ctx.records = json!({
        "train_records": train.records.len(),
        "test_records": test.records.len(),
        "skipped": warnings_json(&primary.warnings),
        "skipped_test_file": secondary.as_ref().map(|s| warnings_json(&s.warnings)),
    });
    ctx.results = json!({
        "encoding": encoding.to_string(),
        "trials": results.iter().map(|r| json!({
            "trial": r.trial,
            "seed": r.seed,
            "n_train": r.n_train,
            "n_test": r.n_test,
            "fixed_hyperparams": hyper_json(&r.initial),
            "hyperparams": hyper_json(&r.hyper),
            "optimizer": r.optimizer,
            "jitter": r.jitter,
            "r2": r.metrics.r2,
            "mse": r.metrics.mse,
            "mae": r.metrics.mae,
        })).collect::<Vec<_>>(),
        "summary": {
            "r2": {"mean": r2.0, "sd": r2.1},
            "mse": {"mean": mse.0, "sd": mse.1},
            "mae": {"mean": mae.0, "sd": mae.1},
        },
    });
    ctx.finish()
}
