use exactfp::analysis::mean_sd;
use exactfp::bo::{initial_design, BoTrajectory};
use exactfp::rng::trial_seed;
use exactfp::{
    default_hyperparams, load_dataset, optimize_hyperparams, run_bo, subsample, BoConfig, Fingerprint,
    OptimizerConfig,
};
use rayon::prelude::*;
use serde_json::json;

use super::{check_radius, hyper_json, parse_encoding, report_warnings, sparse_fingerprints, warnings_json};
use crate::error::CliError;
use crate::output::{write_atomic, write_json, RunContext};
use crate::{BoArgs, HyperMode};

/// Trial offset reserved for the shared pool subsample seed.
const POOL_STREAM: u64 = u64::MAX;

fn run_trial(
    args: &BoArgs,
    trial: usize,
    pool: &[Fingerprint],
    values: &[f64],
) -> Result<(u64, BoTrajectory<f64>), CliError> {
    let seed = trial_seed(args.seed, trial as u64);
    let cfg = BoConfig {
        init_size: args.init_size,
        budget: args.budget,
        init_percentile: args.init_fraction,
        direction: args.direction.into(),
        refit_hyperparams: args.refit,
        seed,
    };
    let hyper = match args.hyper {
        HyperMode::Fixed => None,
        HyperMode::Optimized => {
            let init = initial_design(values, &cfg)?;
            let x: Vec<Fingerprint> = init.iter().map(|&i| pool[i].clone()).collect();
            let y: Vec<f64> = init.iter().map(|&i| values[i]).collect();
            let start = default_hyperparams(&y)?;
            Some(optimize_hyperparams(&x, &y, start, &OptimizerConfig::default())?.0)
        }
    };
    Ok((seed, run_bo(pool, values, &cfg, hyper)?))
}

/// Writes `trajectory_<trial>.csv` per trial and `summary.json` with the
/// per-trial and mean/sd best-observed AUC.
pub fn run(args: &BoArgs) -> Result<(), CliError> {
    check_radius(args.radius)?;
    if args.trials == 0 {
        return Err(CliError::usage("--trials must be positive"));
    }
    if !(args.init_fraction > 0.0 && args.init_fraction <= 1.0) {
        return Err(CliError::usage("--init-fraction must be in (0, 1]"));
    }
    let mut ctx = RunContext::new("bo", args, &args.output_dir)?;
    ctx.master_seed = Some(args.seed);
    let encoding = parse_encoding(&args.encoding, &mut ctx)?;
    ctx.add_input(&args.input)?;
    let ds = load_dataset(&args.input, &args.target)?;
    report_warnings(&ds.warnings, &args.input);

    let all: Vec<usize> = (0..ds.len()).collect();
    let members = match args.pool_size {
        Some(n) => {
            let mut idx = subsample(&all, n, trial_seed(args.seed, POOL_STREAM))?;
            idx.sort_unstable();
            idx
        }
        None => all,
    };
    let records: Vec<_> = members.iter().map(|&i| &ds.records[i]).collect();
    let sparse = sparse_fingerprints(&records.iter().map(|r| &r.mol).collect::<Vec<_>>(), args.radius)?;
    let pool: Vec<Fingerprint> = sparse.iter().map(|fp| encoding.encode(fp)).collect();
    let values: Vec<f64> = records.iter().map(|r| r.value).collect();

    let runs: Vec<(u64, BoTrajectory<f64>)> = (0..args.trials)
        .into_par_iter()
        .map(|t| run_trial(args, t, &pool, &values))
        .collect::<Result<_, _>>()?;

    for (t, (_, traj)) in runs.iter().enumerate() {
        write_atomic(&ctx.output(&format!("trajectory_{t}.csv")), |out| {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["iteration", "pool_index", "id", "value", "best", "expected_improvement"])?;
            for &i in &traj.initial {
                w.write_record(["0", &i.to_string(), &records[i].id, &values[i].to_string(), "", ""])?;
            }
            for (a, best) in traj.acquired.iter().zip(&traj.best_curve) {
                w.write_record([
                    a.iteration.to_string(),
                    a.pool_index.to_string(),
                    records[a.pool_index].id.clone(),
                    a.value.to_string(),
                    best.to_string(),
                    a.expected_improvement.to_string(),
                ])?;
            }
            w.flush()?;
            Ok(())
        })?;
    }

    let aucs: Vec<f64> = runs.iter().map(|(_, t)| t.auc).collect();
    let (auc_mean, auc_sd) = mean_sd(&aucs);
    let (pool_best, pool_worst) = runs
        .first()
        .map(|(_, t)| (t.pool_best, t.pool_worst))
        .expect("at least one trial");
    let summary = json!({
        "pool_size": pool.len(),
        "direction": args.direction,
        "pool_best": pool_best,
        "pool_worst": pool_worst,
        "auc_mean": auc_mean,
        "auc_sd": auc_sd,
        "trials": runs.iter().enumerate().map(|(t, (seed, traj))| json!({
            "trial": t,
            "seed": seed,
            "auc": traj.auc,
            "final_best": traj.best_curve.last(),
            "hyperparams": hyper_json(&traj.hyperparams),
        })).collect::<Vec<_>>(),
    });
    write_json(&ctx.output("summary.json"), &summary)?;

    ctx.trial_seeds = runs.iter().map(|(s, _)| *s).collect();
    ctx.records = json!({
        "records": ds.len(),
        "pool": pool.len(),
        "skipped": warnings_json(&ds.warnings),
    });
    ctx.results = json!({
        "encoding": encoding.to_string(),
        "auc_mean": auc_mean,
        "auc_sd": auc_sd,
    });
    ctx.finish()
}
