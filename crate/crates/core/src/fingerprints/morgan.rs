use std::collections::HashMap;

use crate::hash::StableHasher;
use crate::smiles::MolGraph;

use super::{FingerprintError, SparseFingerprint};

pub const MAX_RADIUS: usize = 10;

/// Morgan/ECFP count fingerprint up to `radius`.
///
/// Iteration 0 contributes every atom's initial invariant. Iteration `r`
/// replaces each atom identifier with the hash of `(r, own identifier,
/// sorted (bond code, neighbor identifier) pairs)` and records the set of
/// bonds the environment covers. Environments from iterations `r >= 1` are
/// deduplicated by covered bond set across all atoms and iterations: the
/// smallest identifier per bond set is retained, and environments covering
/// no bonds are dropped.
pub fn morgan_sparse(mol: &MolGraph, radius: usize) -> Result<SparseFingerprint, FingerprintError> {
    if radius > MAX_RADIUS {
        return Err(FingerprintError::RadiusTooLarge(radius));
    }
    let n = mol.atom_count();
    let mut ids = mol.initial_atom_invariants();
    let mut counts: HashMap<u64, u32> = HashMap::with_capacity(n * (radius + 1));
    for &id in &ids {
        *counts.entry(id).or_insert(0) += 1;
    }
    if radius == 0 || n == 0 {
        return Ok(SparseFingerprint::from_counts(counts));
    }

    let words = mol.bond_count().div_ceil(64).max(1);
    let mut coverage = vec![vec![0u64; words]; n];
    let mut retained: HashMap<Vec<u64>, u64> = HashMap::new();
    let mut pairs: Vec<(u64, u64)> = Vec::new();

    for r in 1..=radius {
        let mut next_ids = Vec::with_capacity(n);
        let mut next_coverage = coverage.clone();
        for atom in 0..n {
            pairs.clear();
            pairs.extend(
                mol.neighbors(atom)
                    .iter()
                    .map(|&(nbr, bond)| (mol.bonds()[bond].order.code(), ids[nbr])),
            );
            pairs.sort_unstable();
            let mut h = StableHasher::new();
            h.write_u64(r as u64).write_u64(ids[atom]);
            for &(code, nid) in &pairs {
                h.write_u64(code).write_u64(nid);
            }
            next_ids.push(h.finish());

            let cov = &mut next_coverage[atom];
            for &(nbr, bond) in mol.neighbors(atom) {
                cov[bond / 64] |= 1 << (bond % 64);
                for (w, &x) in cov.iter_mut().zip(&coverage[nbr]) {
                    *w |= x;
                }
            }
        }
        for (cov, &id) in next_coverage.iter().zip(&next_ids) {
            if cov.iter().all(|&w| w == 0) {
                continue;
            }
            retained
                .entry(cov.clone())
                .and_modify(|best| *best = (*best).min(id))
                .or_insert(id);
        }
        ids = next_ids;
        coverage = next_coverage;
    }

    for id in retained.into_values() {
        *counts.entry(id).or_insert(0) += 1;
    }
    Ok(SparseFingerprint::from_counts(counts))
}
