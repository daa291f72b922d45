use exactfp::analysis::{pair_records, sample_pairs, summarize};
use exactfp::load_molecules;
use exactfp::rng::ExperimentRng;
use serde_json::json;

use super::{check_radius, report_warnings, sparse_fingerprints, warnings_json};
use crate::error::CliError;
use crate::output::{write_atomic, RunContext};
use crate::CollisionsArgs;

/// Writes `collisions.csv` (one row per dim) and, with `--per-pair`,
/// `pairs.csv` with one row per (pair, dim).
pub fn run(args: &CollisionsArgs) -> Result<(), CliError> {
    check_radius(args.radius)?;
    if args.dims.is_empty() || args.dims.contains(&0) {
        return Err(CliError::usage("--dims needs one or more positive dimensions"));
    }
    if args.pairs == 0 {
        return Err(CliError::usage("--pairs must be positive"));
    }
    let mut ctx = RunContext::new("collisions", args, &args.output_dir)?;
    ctx.master_seed = Some(args.seed);
    ctx.add_input(&args.input)?;
    let table = load_molecules(&args.input)?;
    report_warnings(&table.warnings, &args.input);
    let fps = sparse_fingerprints(&table.molecules.iter().map(|m| &m.mol).collect::<Vec<_>>(), args.radius)?;

    let mut rng = ExperimentRng::new(args.seed);
    let index_pairs = sample_pairs(fps.len(), args.pairs, &mut rng)?;
    let pairs: Vec<_> = index_pairs.iter().map(|&(i, j)| (&fps[i], &fps[j])).collect();
    let records = pair_records(&pairs, &args.dims)?;
    let reports = summarize(&records, &args.dims, pairs.len());

    write_atomic(&ctx.output("collisions.csv"), |out| {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "dim",
            "mean_pairwise_collisions",
            "mean_exact_tanimoto",
            "mean_folded_tanimoto",
            "mean_overestimation",
            "pair_count",
        ])?;
        for r in &reports {
            w.write_record([
                r.dim.to_string(),
                r.mean_pairwise_collisions.to_string(),
                r.mean_exact_tanimoto.to_string(),
                r.mean_folded_tanimoto.to_string(),
                r.mean_overestimation.to_string(),
                r.pair_count.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;

    if args.per_pair {
        write_atomic(&ctx.output("pairs.csv"), |out| {
            let mut w = csv::Writer::from_writer(out);
            w.write_record([
                "pair",
                "id_a",
                "id_b",
                "dim",
                "collisions",
                "exact_tanimoto",
                "folded_tanimoto",
                "overestimation",
            ])?;
            for r in &records {
                let (i, j) = index_pairs[r.pair];
                w.write_record([
                    r.pair.to_string(),
                    table.molecules[i].id.clone(),
                    table.molecules[j].id.clone(),
                    r.dim.to_string(),
                    r.collisions.to_string(),
                    r.exact_tanimoto.to_string(),
                    r.folded_tanimoto.to_string(),
                    (r.folded_tanimoto - r.exact_tanimoto).to_string(),
                ])?;
            }
            w.flush()?;
            Ok(())
        })?;
    }

    ctx.records = json!({
        "molecules": table.molecules.len(),
        "skipped": warnings_json(&table.warnings),
    });
    ctx.results = json!({
        "collision_definition": "distinct identifier pairs in the union of both fingerprints sharing a slot",
        "mean_overestimation": reports.iter().map(|r| (r.dim.to_string(), json!(r.mean_overestimation))).collect::<serde_json::Map<_, _>>(),
    });
    ctx.finish()
}
