//! Morgan count fingerprints and their three encodings: exact (sparse),
//! modulo-folded dense, and Sort&Slice dense.

mod morgan;
mod sortslice;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use morgan::{morgan_sparse, MAX_RADIUS};
pub use sortslice::{sortslice_encode, sortslice_fit, SortSliceVocabulary};

#[derive(Debug, Error)]
pub enum FingerprintError {
    #[error("radius {0} exceeds the supported maximum of {MAX_RADIUS}")]
    RadiusTooLarge(usize),
    #[error("fingerprint dimension must be at least 1")]
    ZeroDim,
    #[error("Sort&Slice corpus is empty")]
    EmptyCorpus,
    #[error("vocabulary file line {line}: {message}")]
    VocabFormat { line: usize, message: String },
    #[error("unknown encoding {0:?} (expected exact, folded:<dim> or sortslice:<vocab file>)")]
    UnknownEncoding(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Exact count fingerprint: substructure identifier to multiplicity.
///
/// Entries are kept sorted by identifier with every count at least 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct SparseFingerprint {
    entries: Vec<(u64, u32)>,
    total: u64,
}

impl SparseFingerprint {
    /// Builds from `(identifier, count)` pairs; repeated identifiers are
    /// summed and zero counts dropped.
    pub fn from_counts<I: IntoIterator<Item = (u64, u32)>>(pairs: I) -> Self {
        let mut entries: Vec<(u64, u32)> = pairs.into_iter().filter(|&(_, c)| c > 0).collect();
        entries.sort_unstable_by_key(|&(id, _)| id);
        entries.dedup_by(|next, kept| {
            if next.0 == kept.0 {
                kept.1 += next.1;
                true
            } else {
                false
            }
        });
        let total = entries.iter().map(|&(_, c)| u64::from(c)).sum();
        Self { entries, total }
    }

    pub fn entries(&self) -> &[(u64, u32)] {
        &self.entries
    }

    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|&(id, _)| id)
    }

    pub fn get(&self, id: u64) -> u32 {
        self.entries
            .binary_search_by_key(&id, |&(k, _)| k)
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    /// Number of distinct identifiers.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of all counts.
    pub fn total(&self) -> u64 {
        self.total
    }
}

/// `id:count` pairs, space separated, identifiers ascending.
impl fmt::Display for SparseFingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (id, c)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{id}:{c}")?;
        }
        Ok(())
    }
}

/// Fixed-length count vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DenseFingerprint {
    counts: Vec<u32>,
    total: u64,
}

impl DenseFingerprint {
    pub fn from_counts(counts: Vec<u32>) -> Result<Self, FingerprintError> {
        if counts.is_empty() {
            return Err(FingerprintError::ZeroDim);
        }
        let total = counts.iter().map(|&c| u64::from(c)).sum();
        Ok(Self { counts, total })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn nonzero(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c > 0)
            .map(|(i, &c)| (i, c))
    }

    /// Folds this vector further by `index mod dim`.
    pub fn refold(&self, dim: usize) -> DenseFingerprint {
        assert!(dim >= 1, "refold to zero dimension");
        let mut counts = vec![0u32; dim];
        for (i, c) in self.nonzero() {
            counts[i % dim] += c;
        }
        DenseFingerprint {
            counts,
            total: self.total,
        }
    }
}

/// `slot:count` pairs for non-zero slots, ascending.
impl fmt::Display for DenseFingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (i, c)) in self.nonzero().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{i}:{c}")?;
        }
        Ok(())
    }
}

/// Folds an exact fingerprint to `dim` slots by `identifier mod dim`,
/// summing counts of colliding identifiers. Panics if `dim == 0`.
pub fn fold(fp: &SparseFingerprint, dim: usize) -> DenseFingerprint {
    assert!(dim >= 1, "fold to zero dimension");
    let mut counts = vec![0u32; dim];
    for &(id, c) in fp.entries() {
        counts[(id % dim as u64) as usize] += c;
    }
    DenseFingerprint {
        counts,
        total: fp.total(),
    }
}

/// A fingerprint in any of the supported encodings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fingerprint {
    Sparse(SparseFingerprint),
    Dense(DenseFingerprint),
}

impl Fingerprint {
    pub fn total(&self) -> u64 {
        match self {
            Fingerprint::Sparse(fp) => fp.total(),
            Fingerprint::Dense(fp) => fp.total(),
        }
    }

    pub fn kind(&self) -> FingerprintKind {
        match self {
            Fingerprint::Sparse(_) => FingerprintKind::Sparse,
            Fingerprint::Dense(fp) => FingerprintKind::Dense(fp.dim()),
        }
    }
}

impl From<SparseFingerprint> for Fingerprint {
    fn from(fp: SparseFingerprint) -> Self {
        Fingerprint::Sparse(fp)
    }
}

impl From<DenseFingerprint> for Fingerprint {
    fn from(fp: DenseFingerprint) -> Self {
        Fingerprint::Dense(fp)
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fingerprint::Sparse(fp) => fp.fmt(f),
            Fingerprint::Dense(fp) => fp.fmt(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FingerprintKind {
    Sparse,
    Dense(usize),
}

impl fmt::Display for FingerprintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FingerprintKind::Sparse => f.write_str("sparse"),
            FingerprintKind::Dense(d) => write!(f, "dense[{d}]"),
        }
    }
}

/// How exact fingerprints are turned into kernel inputs.
#[derive(Debug, Clone)]
pub enum Encoding {
    Exact,
    Folded(usize),
    SortSlice(Arc<SortSliceVocabulary>),
}

impl Encoding {
    pub fn encode(&self, fp: &SparseFingerprint) -> Fingerprint {
        match self {
            Encoding::Exact => Fingerprint::Sparse(fp.clone()),
            Encoding::Folded(dim) => Fingerprint::Dense(fold(fp, *dim)),
            Encoding::SortSlice(vocab) => Fingerprint::Dense(sortslice_encode(fp, vocab)),
        }
    }

    /// Parses `exact`, `folded:<dim>` or `sortslice:<vocab path>`, loading
    /// the vocabulary from disk for the last form.
    pub fn parse(spec: &str) -> Result<Self, FingerprintError> {
        if spec == "exact" {
            return Ok(Encoding::Exact);
        }
        if let Some(dim) = spec.strip_prefix("folded:") {
            let dim: usize = dim
                .parse()
                .map_err(|_| FingerprintError::UnknownEncoding(spec.to_string()))?;
            if dim == 0 {
                return Err(FingerprintError::ZeroDim);
            }
            return Ok(Encoding::Folded(dim));
        }
        if let Some(path) = spec.strip_prefix("sortslice:") {
            let vocab = SortSliceVocabulary::load(path)?;
            return Ok(Encoding::SortSlice(Arc::new(vocab)));
        }
        Err(FingerprintError::UnknownEncoding(spec.to_string()))
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Encoding::Exact => f.write_str("exact"),
            Encoding::Folded(d) => write!(f, "folded:{d}"),
            Encoding::SortSlice(v) => write!(f, "sortslice[{}]", v.dim()),
        }
    }
}
