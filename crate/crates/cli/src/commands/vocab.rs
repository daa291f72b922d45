use exactfp::{load_molecules, sortslice_fit};
use serde_json::json;

use super::{check_radius, report_warnings, sparse_fingerprints, warnings_json};
use crate::error::CliError;
use crate::output::{write_atomic, RunContext};
use crate::FitVocabArgs;

pub fn run(args: &FitVocabArgs) -> Result<(), CliError> {
    check_radius(args.radius)?;
    if args.dim == 0 {
        return Err(CliError::usage("--dim must be positive"));
    }
    let mut ctx = RunContext::new("fit-vocab", args, &args.output_dir)?;
    ctx.add_input(&args.input)?;
    let table = load_molecules(&args.input)?;
    report_warnings(&table.warnings, &args.input);
    let fps = sparse_fingerprints(&table.molecules.iter().map(|m| &m.mol).collect::<Vec<_>>(), args.radius)?;

    let name = args
        .input
        .file_name()
        .map_or_else(|| args.input.display().to_string(), |n| n.to_string_lossy().into_owned());
    let vocab = sortslice_fit(&fps, args.dim, &format!("{name} radius={}", args.radius))?;
    write_atomic(&ctx.output("vocab.txt"), |out| Ok(vocab.write_to(out)?))?;

    ctx.records = json!({
        "molecules": table.molecules.len(),
        "skipped": warnings_json(&table.warnings),
    });
    ctx.results = json!({
        "dim": vocab.dim(),
        "requested_dim": args.dim,
        "provenance": vocab.provenance(),
    });
    ctx.finish()
}
