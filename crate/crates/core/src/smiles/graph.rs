use crate::hash::StableHasher;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomRecord {
    pub atomic_number: u8,
    pub formal_charge: i8,
    /// Total attached hydrogens: bracket H-spec, implicit filling, or
    /// absorbed explicit `[H]` neighbors.
    pub explicit_h_count: u8,
    pub is_aromatic: bool,
    pub isotope: Option<u16>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Fixed code mixed into neighbor hashes during Morgan refinement.
    pub fn code(self) -> u64 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }

    /// Contribution to an atom's valence. Aromatic bonds count as 1; the
    /// extra aromatic electron is accounted for per atom.
    pub(crate) fn valence(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BondRecord {
    /// Endpoint indices, smaller first.
    pub endpoints: (usize, usize),
    pub order: BondOrder,
}

impl BondRecord {
    pub fn other(&self, atom: usize) -> usize {
        if self.endpoints.0 == atom {
            self.endpoints.1
        } else {
            self.endpoints.0
        }
    }
}

/// Heavy-atom molecular graph. Built only by the SMILES parser and never
/// mutated afterwards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MolGraph {
    atoms: Vec<AtomRecord>,
    bonds: Vec<BondRecord>,
    adjacency: Vec<Vec<(usize, usize)>>,
    atom_in_ring: Vec<bool>,
    bond_in_ring: Vec<bool>,
    components: usize,
}

impl MolGraph {
    /// Assembles the graph and derives adjacency, ring membership and
    /// component count. Callers guarantee valid, distinct endpoints.
    pub(crate) fn new(atoms: Vec<AtomRecord>, bonds: Vec<BondRecord>) -> Self {
        let n = atoms.len();
        let mut adjacency = vec![Vec::new(); n];
        for (bi, b) in bonds.iter().enumerate() {
            let (u, v) = b.endpoints;
            adjacency[u].push((v, bi));
            adjacency[v].push((u, bi));
        }
        let bond_in_ring = ring_bonds(n, &bonds, &adjacency);
        let mut atom_in_ring = vec![false; n];
        for (b, &ring) in bonds.iter().zip(&bond_in_ring) {
            if ring {
                atom_in_ring[b.endpoints.0] = true;
                atom_in_ring[b.endpoints.1] = true;
            }
        }
        let components = count_components(n, &adjacency);
        Self {
            atoms,
            bonds,
            adjacency,
            atom_in_ring,
            bond_in_ring,
            components,
        }
    }

    pub fn atoms(&self) -> &[AtomRecord] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[BondRecord] {
        &self.bonds
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `(neighbor, bond index)` pairs of an atom.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn atom_in_ring(&self, atom: usize) -> bool {
        self.atom_in_ring[atom]
    }

    pub fn bond_in_ring(&self, bond: usize) -> bool {
        self.bond_in_ring[bond]
    }

    pub fn ring_membership(&self) -> (&[bool], &[bool]) {
        (&self.atom_in_ring, &self.bond_in_ring)
    }

    pub fn component_count(&self) -> usize {
        self.components
    }

    /// Number of independent cycles: bonds − atoms + components.
    pub fn cycle_rank(&self) -> usize {
        self.bonds.len() + self.components - self.atoms.len()
    }

    /// Radius-0 Morgan identifiers, one per atom.
    ///
    /// Hash of `(atomic number, heavy degree, total H, formal charge,
    /// aromatic, in ring)` with the field encoding of [`crate::hash`].
    pub fn initial_atom_invariants(&self) -> Vec<u64> {
        (0..self.atoms.len())
            .map(|i| {
                let a = &self.atoms[i];
                StableHasher::new()
                    .write_u64(u64::from(a.atomic_number))
                    .write_u64(self.degree(i) as u64)
                    .write_u64(u64::from(a.explicit_h_count))
                    .write_i64(i64::from(a.formal_charge))
                    .write_bool(a.is_aromatic)
                    .write_bool(self.atom_in_ring[i])
                    .finish()
            })
            .collect()
    }
}

/// A bond lies on a ring iff it is not a bridge. Iterative Tarjan lowlink.
fn ring_bonds(n: usize, bonds: &[BondRecord], adjacency: &[Vec<(usize, usize)>]) -> Vec<bool> {
    let mut in_ring = vec![true; bonds.len()];
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut timer = 0;
    // (atom, bond used to reach it, next adjacency position)
    let mut stack: Vec<(usize, Option<usize>, usize)> = Vec::new();
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        stack.push((root, None, 0));
        while let Some(&mut (u, parent_bond, ref mut pos)) = stack.last_mut() {
            if let Some(&(v, bi)) = adjacency[u].get(*pos) {
                *pos += 1;
                if Some(bi) == parent_bond {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = timer;
                    low[v] = timer;
                    timer += 1;
                    stack.push((v, Some(bi), 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let (Some(bi), Some(&(p, _, _))) = (parent_bond, stack.last()) {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        in_ring[bi] = false;
                    }
                }
            }
        }
    }
    in_ring
}

fn count_components(n: usize, adjacency: &[Vec<(usize, usize)>]) -> usize {
    let mut seen = vec![false; n];
    let mut components = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(u) = stack.pop() {
            for &(v, _) in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    components
}
