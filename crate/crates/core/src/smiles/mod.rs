//! SMILES parsing into heavy-atom molecular graphs.
//!
//! Supported subset: organic-subset bare atoms (`B C N O P S F Cl Br I`),
//! aromatic lowercase atoms (`b c n o p s`), bracket atoms with isotope,
//! element, chirality (discarded), H-count, charge and atom class, bond
//! symbols `- = # :` plus `/ \` (treated as single), branches, ring closures
//! including `%nn`, and `.`-separated components.
//!
//! Hydrogens never become graph nodes: bare atoms get implicit hydrogens from
//! fixed standard valences, bracket atoms carry their written H-count, and an
//! explicit `[H]` bonded to exactly one heavy atom is folded into that atom's
//! count. No aromaticity perception or kekulization is performed.

mod elements;
mod graph;

use std::collections::HashMap;

use thiserror::Error;

pub use elements::{atomic_number, symbol};
pub use graph::{AtomRecord, BondOrder, BondRecord, MolGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesErrorKind {
    #[error("empty input")]
    Empty,
    #[error("non-ASCII input")]
    NonAscii,
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("unknown element symbol {0:?}")]
    UnknownElement(String),
    #[error("ring-closure {0} never closed")]
    UnclosedRing(u32),
    #[error("ring-closure {0} bonds an atom to itself")]
    RingSelfBond(u32),
    #[error("conflicting bond symbols on ring-closure {0}")]
    RingBondConflict(u32),
    #[error("unmatched '('")]
    UnclosedBranch,
    #[error("unmatched ')'")]
    UnopenedBranch,
    #[error("malformed bracket atom: {0}")]
    BracketAtom(&'static str),
    #[error("bond symbol not followed by an atom")]
    DanglingBond,
    #[error("duplicate bond between atoms {0} and {1}")]
    DuplicateBond(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("SMILES error at position {position}: {kind}")]
pub struct SmilesError {
    pub position: usize,
    pub kind: SmilesErrorKind,
}

/// Parses a SMILES string into a [`MolGraph`].
pub fn parse_smiles(text: &str) -> Result<MolGraph, SmilesError> {
    Parser::new(text)?.run()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BondSymbol {
    Single,
    Double,
    Triple,
    Aromatic,
    // `/` and `\`: single bonds carrying discarded stereo.
    Directional,
}

impl BondSymbol {
    fn order(self) -> BondOrder {
        match self {
            BondSymbol::Single | BondSymbol::Directional => BondOrder::Single,
            BondSymbol::Double => BondOrder::Double,
            BondSymbol::Triple => BondOrder::Triple,
            BondSymbol::Aromatic => BondOrder::Aromatic,
        }
    }
}

struct ParsedAtom {
    record: AtomRecord,
    // Bare organic-subset atoms get implicit hydrogens after parsing.
    implicit: bool,
}

struct RingOpening {
    atom: usize,
    bond: Option<BondSymbol>,
    position: usize,
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    atoms: Vec<ParsedAtom>,
    bonds: Vec<BondRecord>,
    bond_set: HashMap<(usize, usize), usize>,
    rings: HashMap<u32, RingOpening>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Result<Self, SmilesError> {
        if text.is_empty() {
            return Err(SmilesError {
                position: 0,
                kind: SmilesErrorKind::Empty,
            });
        }
        if let Some(p) = text.bytes().position(|b| !b.is_ascii()) {
            return Err(SmilesError {
                position: p,
                kind: SmilesErrorKind::NonAscii,
            });
        }
        Ok(Self {
            bytes: text.as_bytes(),
            pos: 0,
            atoms: Vec::new(),
            bonds: Vec::new(),
            bond_set: HashMap::new(),
            rings: HashMap::new(),
        })
    }

    fn err<T>(&self, position: usize, kind: SmilesErrorKind) -> Result<T, SmilesError> {
        Err(SmilesError { position, kind })
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn run(mut self) -> Result<MolGraph, SmilesError> {
        let mut prev: Option<usize> = None;
        let mut pending: Option<(BondSymbol, usize)> = None;
        let mut branches: Vec<(Option<usize>, usize)> = Vec::new();

        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                b'(' => {
                    if prev.is_none() || pending.is_some() {
                        return self.err(start, SmilesErrorKind::UnexpectedChar('('));
                    }
                    branches.push((prev, start));
                    self.pos += 1;
                }
                b')' => {
                    if pending.is_some() {
                        return self.err(start, SmilesErrorKind::DanglingBond);
                    }
                    match branches.pop() {
                        Some((p, _)) => prev = p,
                        None => return self.err(start, SmilesErrorKind::UnopenedBranch),
                    }
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if pending.is_some() || prev.is_none() {
                        return self.err(start, SmilesErrorKind::UnexpectedChar(c as char));
                    }
                    let sym = match c {
                        b'-' => BondSymbol::Single,
                        b'=' => BondSymbol::Double,
                        b'#' => BondSymbol::Triple,
                        b':' => BondSymbol::Aromatic,
                        _ => BondSymbol::Directional,
                    };
                    pending = Some((sym, start));
                    self.pos += 1;
                }
                b'.' => {
                    if pending.is_some() {
                        return self.err(start, SmilesErrorKind::DanglingBond);
                    }
                    if prev.is_none() {
                        return self.err(start, SmilesErrorKind::UnexpectedChar('.'));
                    }
                    prev = None;
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => {
                    let Some(atom) = prev else {
                        return self.err(start, SmilesErrorKind::UnexpectedChar(c as char));
                    };
                    let label = self.ring_label()?;
                    let bond = pending.take().map(|(s, _)| s);
                    self.ring_closure(label, atom, bond, start)?;
                }
                _ => {
                    let atom = self.atom()?;
                    if let Some(p) = prev {
                        let sym = pending.take().map(|(s, _)| s);
                        let order = self.bond_order(p, atom, sym);
                        self.add_bond(p, atom, order, start)?;
                    } else if let Some((_, p)) = pending {
                        return self.err(p, SmilesErrorKind::DanglingBond);
                    }
                    prev = Some(atom);
                }
            }
        }

        if let Some((_, p)) = pending {
            return self.err(p, SmilesErrorKind::DanglingBond);
        }
        if let Some(&(_, p)) = branches.last() {
            return self.err(p, SmilesErrorKind::UnclosedBranch);
        }
        if let Some((&label, open)) = self.rings.iter().min_by_key(|(_, o)| o.position) {
            return self.err(open.position, SmilesErrorKind::UnclosedRing(label));
        }
        if self.atoms.is_empty() {
            return self.err(0, SmilesErrorKind::Empty);
        }
        Ok(self.finish())
    }

    fn ring_label(&mut self) -> Result<u32, SmilesError> {
        let start = self.pos;
        if self.peek() == Some(b'%') {
            self.pos += 1;
            let digits = self.bytes.get(self.pos..self.pos + 2);
            match digits {
                Some(d) if d.iter().all(u8::is_ascii_digit) => {
                    self.pos += 2;
                    Ok(u32::from(d[0] - b'0') * 10 + u32::from(d[1] - b'0'))
                }
                _ => self.err(start, SmilesErrorKind::UnexpectedChar('%')),
            }
        } else {
            let d = self.bytes[self.pos] - b'0';
            self.pos += 1;
            Ok(u32::from(d))
        }
    }

    fn ring_closure(
        &mut self,
        label: u32,
        atom: usize,
        bond: Option<BondSymbol>,
        position: usize,
    ) -> Result<(), SmilesError> {
        match self.rings.remove(&label) {
            None => {
                self.rings.insert(
                    label,
                    RingOpening {
                        atom,
                        bond,
                        position,
                    },
                );
                Ok(())
            }
            Some(open) => {
                if open.atom == atom {
                    return self.err(position, SmilesErrorKind::RingSelfBond(label));
                }
                let sym = match (open.bond, bond) {
                    (Some(a), Some(b)) if a.order() != b.order() => {
                        return self.err(position, SmilesErrorKind::RingBondConflict(label));
                    }
                    (a, b) => a.or(b),
                };
                let order = self.bond_order(open.atom, atom, sym);
                self.add_bond(open.atom, atom, order, position)
            }
        }
    }

    fn bond_order(&self, a: usize, b: usize, sym: Option<BondSymbol>) -> BondOrder {
        match sym {
            Some(s) => s.order(),
            None if self.atoms[a].record.is_aromatic && self.atoms[b].record.is_aromatic => {
                BondOrder::Aromatic
            }
            None => BondOrder::Single,
        }
    }

    fn add_bond(
        &mut self,
        a: usize,
        b: usize,
        order: BondOrder,
        position: usize,
    ) -> Result<(), SmilesError> {
        let key = (a.min(b), a.max(b));
        if self.bond_set.contains_key(&key) {
            return self.err(position, SmilesErrorKind::DuplicateBond(key.0, key.1));
        }
        self.bond_set.insert(key, self.bonds.len());
        self.bonds.push(BondRecord {
            endpoints: key,
            order,
        });
        Ok(())
    }

    fn atom(&mut self) -> Result<usize, SmilesError> {
        let start = self.pos;
        let c = self.bytes[self.pos];
        let parsed = if c == b'[' {
            self.bracket_atom()?
        } else {
            let (symbol, aromatic) = match (c, self.bytes.get(self.pos + 1)) {
                (b'C', Some(b'l')) => ("Cl", false),
                (b'B', Some(b'r')) => ("Br", false),
                (b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I', _) => {
                    (std::str::from_utf8(&self.bytes[start..start + 1]).unwrap(), false)
                }
                (b'b', _) => ("B", true),
                (b'c', _) => ("C", true),
                (b'n', _) => ("N", true),
                (b'o', _) => ("O", true),
                (b'p', _) => ("P", true),
                (b's', _) => ("S", true),
                _ if c.is_ascii_alphabetic() || c == b'*' => {
                    return self.err(start, SmilesErrorKind::UnknownElement((c as char).to_string()));
                }
                _ => return self.err(start, SmilesErrorKind::UnexpectedChar(c as char)),
            };
            self.pos += if symbol.len() == 2 { 2 } else { 1 };
            ParsedAtom {
                record: AtomRecord {
                    atomic_number: atomic_number(symbol).expect("organic subset symbol"),
                    formal_charge: 0,
                    explicit_h_count: 0,
                    is_aromatic: aromatic,
                    isotope: None,
                },
                implicit: true,
            }
        };
        self.atoms.push(parsed);
        Ok(self.atoms.len() - 1)
    }

    fn digits(&mut self) -> Option<u32> {
        let start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return None;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()?
            .parse()
            .ok()
    }

    fn bracket_atom(&mut self) -> Result<ParsedAtom, SmilesError> {
        let open = self.pos;
        self.pos += 1;

        let isotope = match self.digits() {
            Some(0) => return self.err(open, SmilesErrorKind::BracketAtom("zero isotope")),
            Some(m) => Some(
                u16::try_from(m)
                    .or_else(|_| self.err(open, SmilesErrorKind::BracketAtom("isotope too large")))?,
            ),
            None => None,
        };

        let sym_start = self.pos;
        let (atomic, aromatic) = match self.peek() {
            Some(c) if c.is_ascii_uppercase() => {
                let two = self
                    .bytes
                    .get(self.pos..self.pos + 2)
                    .filter(|s| s[1].is_ascii_lowercase())
                    .and_then(|s| std::str::from_utf8(s).ok())
                    .and_then(atomic_number);
                match two {
                    Some(z) => {
                        self.pos += 2;
                        (z, false)
                    }
                    None => {
                        let one = std::str::from_utf8(&self.bytes[self.pos..self.pos + 1]).unwrap();
                        match atomic_number(one) {
                            Some(z) => {
                                self.pos += 1;
                                (z, false)
                            }
                            None => {
                                let end = (self.pos + 2).min(self.bytes.len());
                                let text = String::from_utf8_lossy(&self.bytes[self.pos..end]);
                                return self.err(sym_start, SmilesErrorKind::UnknownElement(text.into()));
                            }
                        }
                    }
                }
            }
            Some(c) if c.is_ascii_lowercase() => {
                let two = self.bytes.get(self.pos..self.pos + 2);
                let (sym, len) = match two {
                    Some(b"se") => ("Se", 2),
                    Some(b"as") => ("As", 2),
                    Some(b"te") => ("Te", 2),
                    _ => match c {
                        b'b' => ("B", 1),
                        b'c' => ("C", 1),
                        b'n' => ("N", 1),
                        b'o' => ("O", 1),
                        b'p' => ("P", 1),
                        b's' => ("S", 1),
                        _ => {
                            return self.err(
                                sym_start,
                                SmilesErrorKind::UnknownElement((c as char).to_string()),
                            )
                        }
                    },
                };
                self.pos += len;
                (atomic_number(sym).unwrap(), true)
            }
            Some(b'*') => {
                return self.err(sym_start, SmilesErrorKind::UnknownElement("*".into()));
            }
            _ => return self.err(open, SmilesErrorKind::BracketAtom("missing element symbol")),
        };

        // Chirality: @, @@, or @TH1/@AL2/@SP3/@TB10/@OH25 forms. Discarded.
        while self.peek() == Some(b'@') {
            self.pos += 1;
        }
        if let Some(tag) = self.bytes.get(self.pos..self.pos + 2) {
            if matches!(tag, b"TH" | b"AL" | b"SP" | b"TB" | b"OH") && self.bytes[self.pos - 1] == b'@'
            {
                self.pos += 2;
                self.digits();
            }
        }

        let mut h_count = 0u32;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            h_count = self.digits().unwrap_or(1);
        }

        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let unit = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            if let Some(mag) = self.digits() {
                charge = unit * mag as i32;
            } else {
                charge = unit;
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    charge += unit;
                }
            }
        }
        let formal_charge = i8::try_from(charge)
            .or_else(|_| self.err(open, SmilesErrorKind::BracketAtom("charge out of range")))?;

        if self.peek() == Some(b':') {
            self.pos += 1;
            if self.digits().is_none() {
                return self.err(open, SmilesErrorKind::BracketAtom("empty atom class"));
            }
        }

        if self.peek() != Some(b']') {
            return self.err(open, SmilesErrorKind::BracketAtom("expected ']'"));
        }
        self.pos += 1;

        let explicit_h_count = u8::try_from(h_count)
            .or_else(|_| self.err(open, SmilesErrorKind::BracketAtom("H-count too large")))?;
        Ok(ParsedAtom {
            record: AtomRecord {
                atomic_number: atomic,
                formal_charge,
                explicit_h_count,
                is_aromatic: aromatic,
                isotope,
            },
            implicit: false,
        })
    }

    fn finish(self) -> MolGraph {
        let n = self.atoms.len();
        let mut valence = vec![0u32; n];
        for b in &self.bonds {
            valence[b.endpoints.0] += u32::from(b.order.valence());
            valence[b.endpoints.1] += u32::from(b.order.valence());
        }

        let mut atoms: Vec<AtomRecord> = self
            .atoms
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                let mut rec = p.record;
                if p.implicit {
                    rec.explicit_h_count = implicit_hydrogens(&rec, valence[i]);
                }
                rec
            })
            .collect();
        let mut bonds = self.bonds;

        // Fold explicit hydrogens bonded to a single heavy atom into that atom.
        let mut degree = vec![0usize; n];
        for b in &bonds {
            degree[b.endpoints.0] += 1;
            degree[b.endpoints.1] += 1;
        }
        let mut absorbed = vec![false; n];
        for b in &bonds {
            let (u, v) = b.endpoints;
            for (h, heavy) in [(u, v), (v, u)] {
                if atoms[h].atomic_number == 1 && degree[h] == 1 && atoms[heavy].atomic_number != 1 {
                    absorbed[h] = true;
                    let extra = atoms[h].explicit_h_count.saturating_add(1);
                    atoms[heavy].explicit_h_count = atoms[heavy].explicit_h_count.saturating_add(extra);
                }
            }
        }
        if absorbed.iter().any(|&a| a) {
            let mut remap = vec![usize::MAX; n];
            let mut kept = Vec::with_capacity(n);
            for (i, atom) in atoms.into_iter().enumerate() {
                if !absorbed[i] {
                    remap[i] = kept.len();
                    kept.push(atom);
                }
            }
            atoms = kept;
            bonds = bonds
                .into_iter()
                .filter(|b| !absorbed[b.endpoints.0] && !absorbed[b.endpoints.1])
                .map(|b| {
                    let (u, v) = (remap[b.endpoints.0], remap[b.endpoints.1]);
                    BondRecord {
                        endpoints: (u.min(v), u.max(v)),
                        order: b.order,
                    }
                })
                .collect();
        }

        MolGraph::new(atoms, bonds)
    }
}

/// Implicit hydrogens for a bare organic-subset atom.
///
/// Non-aromatic atoms take the lowest standard valence that fits the bond
/// order sum. Aromatic atoms count each aromatic bond as 1 plus one extra for
/// the aromatic system and use only their lowest valence, so a ring-degree-2
/// aromatic carbon gets one hydrogen. Overfull atoms clamp at zero.
fn implicit_hydrogens(atom: &AtomRecord, bond_valence: u32) -> u8 {
    let valences = elements::default_valences(atom.atomic_number);
    let Some(&lowest) = valences.first() else {
        return 0;
    };
    let h = if atom.is_aromatic {
        i64::from(lowest) - i64::from(bond_valence) - 1
    } else {
        match valences.iter().find(|&&v| u32::from(v) >= bond_valence) {
            Some(&v) => i64::from(v) - i64::from(bond_valence),
            None => 0,
        }
    };
    h.clamp(0, i64::from(u8::MAX)) as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h_counts(smiles: &str) -> Vec<u8> {
        parse_smiles(smiles)
            .unwrap()
            .atoms()
            .iter()
            .map(|a| a.explicit_h_count)
            .collect()
    }

    fn kind(smiles: &str) -> SmilesErrorKind {
        parse_smiles(smiles).unwrap_err().kind
    }

    #[test]
    fn aspirin_counts() {
        let mol = parse_smiles("CC(=O)OC1=CC=CC=C1C(=O)O").unwrap();
        assert_eq!(mol.atom_count(), 13);
        assert_eq!(mol.bond_count(), 13);
        assert_eq!(mol.cycle_rank(), 1);
        let ring_atoms = (0..13).filter(|&i| mol.atom_in_ring(i)).count();
        assert_eq!(ring_atoms, 6);
        let ring_bonds = (0..13).filter(|&i| mol.bond_in_ring(i)).count();
        assert_eq!(ring_bonds, 6);
    }

    #[test]
    fn methane() {
        let mol = parse_smiles("C").unwrap();
        assert_eq!(mol.atom_count(), 1);
        assert_eq!(mol.bond_count(), 0);
        assert_eq!(mol.atoms()[0].explicit_h_count, 4);
        assert_eq!(mol.atoms()[0].atomic_number, 6);
    }

    #[test]
    fn cyclopropane_all_ring() {
        let mol = parse_smiles("C1CC1").unwrap();
        assert_eq!((mol.atom_count(), mol.bond_count()), (3, 3));
        assert!((0..3).all(|i| mol.atom_in_ring(i) && mol.bond_in_ring(i)));
        assert_eq!(h_counts("C1CC1"), vec![2, 2, 2]);
    }

    #[test]
    fn unmatched_ring_closure() {
        assert_eq!(kind("C1CC"), SmilesErrorKind::UnclosedRing(1));
        assert_eq!(parse_smiles("C1CC").unwrap_err().position, 1);
    }

    #[test]
    fn syntax_errors_are_positioned() {
        assert_eq!(kind(""), SmilesErrorKind::Empty);
        assert_eq!(kind("C(C"), SmilesErrorKind::UnclosedBranch);
        assert_eq!(kind("CC)C"), SmilesErrorKind::UnopenedBranch);
        assert_eq!(kind("C="), SmilesErrorKind::DanglingBond);
        assert_eq!(kind("Xx"), SmilesErrorKind::UnknownElement("X".into()));
        assert_eq!(kind("[Xx]"), SmilesErrorKind::UnknownElement("Xx".into()));
        assert!(matches!(kind("[C"), SmilesErrorKind::BracketAtom(_)));
        assert!(matches!(kind("[]"), SmilesErrorKind::BracketAtom(_)));
        assert_eq!(kind("C11"), SmilesErrorKind::RingSelfBond(1));
        assert_eq!(kind("C12CC12"), SmilesErrorKind::DuplicateBond(0, 2));
        assert_eq!(kind("C=1CC#1"), SmilesErrorKind::RingBondConflict(1));
        assert_eq!(kind("CC\u{e9}"), SmilesErrorKind::NonAscii);
        let e = parse_smiles("CCC(C)C)").unwrap_err();
        assert_eq!(e.position, 7);
        assert!(e.to_string().contains("position 7"));
    }

    #[test]
    fn percent_ring_labels() {
        let a = parse_smiles("C%10CC%10").unwrap();
        let b = parse_smiles("C1CC1").unwrap();
        assert_eq!(a, b);
        assert_eq!(kind("C%1"), SmilesErrorKind::UnexpectedChar('%'));
    }

    #[test]
    fn ring_closure_bond_order() {
        let mol = parse_smiles("C=1CCCCC1").unwrap();
        let double = mol.bonds().iter().filter(|b| b.order == BondOrder::Double).count();
        assert_eq!(double, 1);
        let mol = parse_smiles("C1CCCCC=1").unwrap();
        assert!(mol.bonds().iter().any(|b| b.order == BondOrder::Double && b.endpoints == (0, 5)));
    }

    #[test]
    fn bracket_atoms() {
        let mol = parse_smiles("[13CH3:2][NH3+].[O-2]").unwrap();
        let a = mol.atoms();
        assert_eq!(a[0].isotope, Some(13));
        assert_eq!(a[0].explicit_h_count, 3);
        assert_eq!(a[1].formal_charge, 1);
        assert_eq!(a[1].explicit_h_count, 3);
        assert_eq!(a[2].formal_charge, -2);
        assert_eq!(mol.component_count(), 2);
        let mol = parse_smiles("[Fe+++]").unwrap();
        assert_eq!(mol.atoms()[0].formal_charge, 3);
        assert_eq!(mol.atoms()[0].atomic_number, 26);
        let mol = parse_smiles("[nH]1cccc1").unwrap();
        assert_eq!(h_counts("[nH]1cccc1"), vec![1, 1, 1, 1, 1]);
        assert!(mol.atoms()[0].is_aromatic);
        let mol = parse_smiles("[se]1cccc1").unwrap();
        assert_eq!(mol.atoms()[0].atomic_number, 34);
        assert_eq!(parse_smiles("[Sc]").unwrap().atoms()[0].atomic_number, 21);
    }

    #[test]
    fn stereo_is_discarded() {
        let a = parse_smiles("N[C@@H](C)C(=O)O").unwrap();
        let b = parse_smiles("N[CH](C)C(=O)O").unwrap();
        assert_eq!(a, b);
        let c = parse_smiles("F/C=C/F").unwrap();
        let d = parse_smiles("FC=CF").unwrap();
        assert_eq!(c, d);
        let e = parse_smiles("[C@TH1H](F)(Cl)Br").unwrap();
        assert_eq!(e.atoms()[0].explicit_h_count, 1);
    }

    #[test]
    fn implicit_hydrogens_follow_standard_valences() {
        assert_eq!(h_counts("CC(=O)O"), vec![3, 0, 0, 1]);
        assert_eq!(h_counts("C#N"), vec![1, 0]);
        assert_eq!(h_counts("CS(=O)(=O)C"), vec![3, 0, 0, 0, 3]);
        assert_eq!(h_counts("CS(=O)C"), vec![3, 0, 0, 3]);
        assert_eq!(h_counts("OP(=O)(O)O"), vec![1, 0, 0, 1, 1]);
        assert_eq!(h_counts("ClCBr"), vec![0, 2, 0]);
        assert_eq!(h_counts("c1ccccc1"), vec![1; 6]);
        assert_eq!(h_counts("c1ccncc1"), vec![1, 1, 1, 0, 1, 1]);
        assert_eq!(h_counts("c1ccsc1"), vec![1, 1, 1, 0, 1]);
        assert_eq!(h_counts("Cc1ccccc1"), vec![3, 0, 1, 1, 1, 1, 1]);
        // Overfull valence clamps at zero.
        assert_eq!(h_counts("CN(=O)=O"), vec![3, 0, 0, 0]);
        assert_eq!(h_counts("FC(F)(F)(F)F"), vec![0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn aromatic_bonds() {
        let mol = parse_smiles("c1ccccc1-c1ccccc1").unwrap();
        let aromatic = mol.bonds().iter().filter(|b| b.order == BondOrder::Aromatic).count();
        assert_eq!(aromatic, 12);
        let mol = parse_smiles("C:C").unwrap();
        assert_eq!(mol.bonds()[0].order, BondOrder::Aromatic);
    }

    #[test]
    fn explicit_hydrogens_fold_into_heavy_atoms() {
        let a = parse_smiles("[H]C([H])([H])[H]").unwrap();
        assert_eq!(a.atom_count(), 1);
        assert_eq!(a.atoms()[0].explicit_h_count, 4);
        let b = parse_smiles("[H]OC").unwrap();
        assert_eq!(b, parse_smiles("OC").unwrap());
        // Molecular hydrogen has no heavy atom to absorb into.
        assert_eq!(parse_smiles("[H][H]").unwrap().atom_count(), 2);
    }

    #[test]
    fn dot_components_retained() {
        let mol = parse_smiles("CC.O.[Na+]").unwrap();
        assert_eq!(mol.atom_count(), 4);
        assert_eq!(mol.component_count(), 3);
        assert_eq!(kind(".C"), SmilesErrorKind::UnexpectedChar('.'));
    }

    #[test]
    fn fused_rings() {
        let mol = parse_smiles("c1ccc2ccccc2c1").unwrap();
        assert_eq!(mol.cycle_rank(), 2);
        assert!((0..mol.atom_count()).all(|i| mol.atom_in_ring(i)));
        let fusion: Vec<u8> = mol.atoms().iter().map(|a| a.explicit_h_count).collect();
        assert_eq!(fusion.iter().filter(|&&h| h == 0).count(), 2);
    }

    #[test]
    fn bridge_bonds_are_not_ring_bonds() {
        let mol = parse_smiles("C1CC1CC1CC1").unwrap();
        // The linker CH2 and its two bonds are acyclic.
        assert!(!mol.atom_in_ring(3));
        let acyclic = (0..mol.bond_count()).filter(|&b| !mol.bond_in_ring(b)).count();
        assert_eq!(acyclic, 2);
    }

    #[test]
    fn ring_vs_chain_invariants_differ() {
        let ring = parse_smiles("C1CCCCC1").unwrap().initial_atom_invariants();
        let chain = parse_smiles("CCCCCC").unwrap().initial_atom_invariants();
        // Interior chain CH2 and ring CH2 share every field except ring membership.
        assert_ne!(ring[0], chain[2]);
        assert!(ring.iter().all(|&x| x == ring[0]));
    }

    #[test]
    fn invariants_symmetric_and_element_sensitive() {
        let cc = parse_smiles("CC").unwrap().initial_atom_invariants();
        assert_eq!(cc[0], cc[1]);
        let co = parse_smiles("CO").unwrap().initial_atom_invariants();
        assert_ne!(co[0], co[1]);
    }

    #[test]
    fn invariants_are_permutation_covariant() {
        for (a, b) in [
            ("OCC", "CCO"),
            ("c1ccccc1O", "Oc1ccccc1"),
            ("CC(=O)OC1=CC=CC=C1C(=O)O", "OC(=O)C1=CC=CC=C1OC(C)=O"),
            ("N1CCOCC1", "C1COCCN1"),
        ] {
            let mut x = parse_smiles(a).unwrap().initial_atom_invariants();
            let mut y = parse_smiles(b).unwrap().initial_atom_invariants();
            x.sort_unstable();
            y.sort_unstable();
            assert_eq!(x, y, "{a} vs {b}");
        }
    }
}
