pub mod bo;
pub mod collisions;
pub mod fingerprint;
pub mod regress;
pub mod vocab;

use std::path::Path;

use exactfp::data::DataWarning;
use exactfp::fingerprints::{Encoding, MAX_RADIUS};
use exactfp::{morgan_sparse, MolGraph, SparseFingerprint};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::output::RunContext;

/// Warning messages kept verbatim in the manifest; the rest are only counted.
const WARNINGS_SHOWN: usize = 20;

pub fn check_radius(radius: usize) -> Result<(), CliError> {
    if radius > MAX_RADIUS {
        return Err(CliError::usage(format!("--radius {radius} exceeds the maximum of {MAX_RADIUS}")));
    }
    Ok(())
}

/// Parses `--encoding`, registering a Sort&Slice vocabulary file as an input.
pub fn parse_encoding(spec: &str, ctx: &mut RunContext) -> Result<Encoding, CliError> {
    let encoding = Encoding::parse(spec)?;
    if let Some(path) = spec.strip_prefix("sortslice:") {
        ctx.add_input(Path::new(path))?;
    }
    Ok(encoding)
}

pub fn sparse_fingerprints(mols: &[&MolGraph], radius: usize) -> Result<Vec<SparseFingerprint>, CliError> {
    let fps: Result<Vec<_>, _> = mols.par_iter().map(|m| morgan_sparse(m, radius)).collect();
    Ok(fps?)
}

/// Per-kind counts plus the first few warning messages.
pub fn warnings_json(warnings: &[DataWarning]) -> Value {
    let (mut target, mut smiles, mut dup, mut split) = (0, 0, 0, 0);
    for w in warnings {
        match w {
            DataWarning::MissingTarget { .. } => target += 1,
            DataWarning::BadSmiles { .. } => smiles += 1,
            DataWarning::DuplicateId { .. } => dup += 1,
            DataWarning::UnknownSplitId { .. } => split += 1,
        }
    }
    json!({
        "missing_target": target,
        "bad_smiles": smiles,
        "duplicate_id": dup,
        "unknown_split_id": split,
        "examples": warnings.iter().take(WARNINGS_SHOWN).map(|w| w.to_string()).collect::<Vec<_>>(),
    })
}

pub fn report_warnings(warnings: &[DataWarning], source: &Path) {
    if !warnings.is_empty() {
        eprintln!(
            "exactfp: {}: skipped {} row(s); see manifest.json for details",
            source.display(),
            warnings.len()
        );
    }
}

/// Hyperparameters as a JSON object.
pub fn hyper_json(h: &exactfp::Hyperparams) -> Value {
    json!({
        "amplitude_sq": h.amplitude_sq,
        "noise_sq": h.noise_sq,
        "mean_const": h.mean_const,
    })
}
