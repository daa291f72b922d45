use std::io::Write;

use exactfp::load_molecules;
use serde_json::json;

use super::{check_radius, parse_encoding, report_warnings, sparse_fingerprints, warnings_json};
use crate::error::CliError;
use crate::output::{write_atomic, RunContext};
use crate::FingerprintArgs;

/// Writes `fingerprints.txt` (one line per kept molecule) and
/// `molecules.csv` mapping line numbers to record ids.
pub fn run(args: &FingerprintArgs) -> Result<(), CliError> {
    check_radius(args.radius)?;
    let mut ctx = RunContext::new("fingerprint", args, &args.output_dir)?;
    let encoding = parse_encoding(&args.encoding, &mut ctx)?;
    ctx.add_input(&args.input)?;
    let table = load_molecules(&args.input)?;
    report_warnings(&table.warnings, &args.input);
    let fps = sparse_fingerprints(&table.molecules.iter().map(|m| &m.mol).collect::<Vec<_>>(), args.radius)?;

    write_atomic(&ctx.output("fingerprints.txt"), |out| {
        for fp in &fps {
            writeln!(out, "{}", encoding.encode(fp))?;
        }
        Ok(())
    })?;
    write_atomic(&ctx.output("molecules.csv"), |out| {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["line", "id", "smiles"])?;
        for (i, m) in table.molecules.iter().enumerate() {
            w.write_record([(i + 1).to_string().as_str(), &m.id, &m.smiles])?;
        }
        w.flush()?;
        Ok(())
    })?;

    ctx.records = json!({
        "molecules": table.molecules.len(),
        "skipped": warnings_json(&table.warnings),
    });
    ctx.results = json!({ "encoding": encoding.to_string() });
    ctx.finish()
}
