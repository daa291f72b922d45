//! Regenerates the bundled test corpus.
//!
//! Molecules are assembled from ring, linker and substituent fragments into
//! valid SMILES, deduplicated by exact radius-2 fingerprint, and given a
//! smooth synthetic target drawn from a GP prior with the exact Tanimoto
//! kernel plus small observation noise.
//!
//! ```text
//! cargo run --release -p exactfp --example make_fixtures -- [count] [seed] [out]
//! ```

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};

use exactfp::kernel::tanimoto_gram;
use exactfp::linalg::Cholesky;
use exactfp::rng::ExperimentRng;
use exactfp::{morgan_sparse, parse_smiles, Fingerprint};

/// Ring atoms in order; `true` marks atoms that may carry a substituent or
/// serve as an attachment point.
const RINGS: &[&[(&str, bool)]] = &[
    &[("c", true), ("c", true), ("c", true), ("c", true), ("c", true), ("c", true)],
    &[("c", true), ("c", true), ("c", true), ("n", false), ("c", true), ("c", true)],
    &[("c", true), ("n", false), ("c", true), ("n", false), ("c", true), ("c", true)],
    &[("c", true), ("c", true), ("c", true), ("s", false), ("c", true)],
    &[("c", true), ("c", true), ("c", true), ("o", false), ("c", true)],
    &[("c", true), ("c", true), ("c", true), ("[nH]", false), ("c", true)],
    &[("c", true), ("n", false), ("c", true), ("[nH]", false), ("c", true)],
    &[("C", true), ("C", true), ("C", true), ("C", true), ("C", true), ("C", true)],
    &[("C", true), ("C", true), ("C", true), ("C", true), ("C", true)],
    &[("C", true), ("C", true), ("N", true), ("C", true), ("C", true), ("C", true)],
    &[("C", true), ("N", true), ("C", true), ("C", true), ("N", true), ("C", true)],
    &[("C", true), ("C", true), ("O", false), ("C", true), ("C", true), ("N", true)],
    &[("C", true), ("C", true), ("N", true), ("C", true)],
];

const LINKERS: &[&str] = &[
    "", "", "C", "CC", "C(=O)N", "NC(=O)", "O", "OC", "CO", "S(=O)(=O)N", "C(=O)", "N", "CCN", "C=C",
];
const AROMATIC_SUBS: &[&str] = &[
    "F", "Cl", "Br", "C", "CC", "OC", "C(F)(F)F", "C#N", "N", "O", "C(=O)O", "C(=O)N", "C(C)C", "S(C)(=O)=O",
    "[N+](=O)[O-]", "OCC",
];
const ALIPHATIC_C_SUBS: &[&str] = &["C", "O", "F", "=O", "N", "CC", "C(=O)O"];
const N_SUBS: &[&str] = &["C", "CC", "C(=O)C", "S(=O)(=O)C", "CC(=O)O"];
const HEADS: &[&str] = &["", "", "", "C", "CC", "CO", "N#CC", "CC(C)", "OC(=O)C", "CCCC", "CN(C)C"];

fn pick<'a>(rng: &mut ExperimentRng, items: &[&'a str]) -> &'a str {
    items[rng.below(items.len() as u64) as usize]
}

fn chance(rng: &mut ExperimentRng, p: f64) -> bool {
    rng.unit_f64() < p
}

/// One ring, entered at its first written atom; may continue to a further
/// block through a branch at another atom. With `keep_last_free` the last
/// written atom gets no branch, leaving room for a trailing group. Returns
/// whether that atom can take one.
fn block(rng: &mut ExperimentRng, depth: usize, max_depth: usize, keep_last_free: bool, out: &mut String) -> bool {
    let template = RINGS[rng.below(RINGS.len() as u64) as usize];
    let open: Vec<usize> = (0..template.len()).filter(|&i| template[i].1).collect();
    let start = open[rng.below(open.len() as u64) as usize];
    let atoms: Vec<(&str, bool)> = (0..template.len()).map(|k| template[(start + k) % template.len()]).collect();
    let digit = depth + 1;
    let last = atoms.len() - 1;
    let branchable = |i: usize| atoms[i].1 && !(keep_last_free && i == last);
    let exit = if depth < max_depth {
        let candidates: Vec<usize> = (1..atoms.len()).filter(|&i| branchable(i)).collect();
        Some(candidates[rng.below(candidates.len() as u64) as usize])
    } else {
        None
    };
    for (i, &(symbol, _)) in atoms.iter().enumerate() {
        out.push_str(symbol);
        if i == 0 || i == last {
            out.push_str(&digit.to_string());
        }
        if i == 0 || !branchable(i) {
            continue;
        }
        if Some(i) == exit {
            out.push('(');
            out.push_str(pick(rng, LINKERS));
            block(rng, depth + 1, max_depth, false, out);
            out.push(')');
        } else if chance(rng, 0.25) {
            let subs = match symbol {
                "c" => AROMATIC_SUBS,
                "N" => N_SUBS,
                _ => ALIPHATIC_C_SUBS,
            };
            out.push('(');
            out.push_str(pick(rng, subs));
            out.push(')');
        }
    }
    atoms[last].1
}

fn molecule(rng: &mut ExperimentRng) -> String {
    let mut s = String::from(pick(rng, HEADS));
    let max_depth = rng.below(3) as usize;
    let tail = chance(rng, 0.3);
    if block(rng, 0, max_depth, tail, &mut s) && tail {
        s.push_str(pick(rng, &["C(=O)O", "N", "OC", "C#N", "CC", "C(N)=O"]));
    }
    s
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let count: usize = args.first().map_or(Ok(5000), |a| a.parse())?;
    let seed: u64 = args.get(1).map_or(Ok(20240501), |a| a.parse())?;
    let out = args
        .get(2)
        .cloned()
        .unwrap_or_else(|| "crates/core/tests/fixtures/synthetic_5000.tsv".into());

    let mut rng = ExperimentRng::new(seed);
    let mut seen = HashSet::new();
    let mut smiles = Vec::with_capacity(count);
    let mut fps = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while smiles.len() < count {
        attempts += 1;
        let s = molecule(&mut rng);
        let mol = parse_smiles(&s).map_err(|e| format!("generated invalid SMILES {s}: {e}"))?;
        let fp = morgan_sparse(&mol, 2)?;
        if seen.insert(fp.clone()) {
            smiles.push(s);
            fps.push(Fingerprint::Sparse(fp));
        }
    }
    eprintln!("{count} unique molecules from {attempts} attempts");

    let mut gram = tanimoto_gram::<f64>(&fps)?;
    gram.add_diagonal(1e-6);
    let chol = Cholesky::factor(&gram)?;
    let z: Vec<f64> = (0..count).map(|_| rng.standard_normal()).collect();
    let mut writer = BufWriter::new(File::create(&out)?);
    writeln!(writer, "id\tsmiles\ttarget")?;
    for (i, s) in smiles.iter().enumerate() {
        let row = chol.row(i);
        let latent: f64 = row.iter().zip(&z).map(|(l, z)| l * z).sum();
        let y = latent + 0.1 * rng.standard_normal();
        writeln!(writer, "mol{i:05}\t{s}\t{y:.6}")?;
    }
    writer.flush()?;
    eprintln!("wrote {out}");
    Ok(())
}
