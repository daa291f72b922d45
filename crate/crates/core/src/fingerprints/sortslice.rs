use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{DenseFingerprint, FingerprintError, SparseFingerprint};

/// Ordered list of the corpus-most-frequent identifiers; slot `i` of an
/// encoded vector holds the count of `ordered_ids[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortSliceVocabulary {
    ordered_ids: Vec<u64>,
    slots: HashMap<u64, usize>,
    provenance: String,
}

impl SortSliceVocabulary {
    fn from_ids(ordered_ids: Vec<u64>, provenance: String) -> Result<Self, FingerprintError> {
        let mut slots = HashMap::with_capacity(ordered_ids.len());
        for (i, &id) in ordered_ids.iter().enumerate() {
            if slots.insert(id, i).is_some() {
                return Err(FingerprintError::VocabFormat {
                    line: i + 3,
                    message: format!("duplicate identifier {id}"),
                });
            }
        }
        if ordered_ids.is_empty() {
            return Err(FingerprintError::ZeroDim);
        }
        Ok(Self {
            ordered_ids,
            slots,
            provenance,
        })
    }

    pub fn ordered_ids(&self) -> &[u64] {
        &self.ordered_ids
    }

    pub fn dim(&self) -> usize {
        self.ordered_ids.len()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn slot(&self, id: u64) -> Option<usize> {
        self.slots.get(&id).copied()
    }

    /// Writes the line-oriented vocabulary format:
    ///
    /// ```text
    /// dim=<n>
    /// corpus=<provenance>
    /// <identifier>      (n lines, vocabulary order)
    /// ```
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "dim={}", self.dim())?;
        writeln!(out, "corpus={}", self.provenance)?;
        for id in &self.ordered_ids {
            writeln!(out, "{id}")?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(input: R) -> Result<Self, FingerprintError> {
        let bad = |line: usize, message: &str| FingerprintError::VocabFormat {
            line,
            message: message.to_string(),
        };
        let mut lines = BufReader::new(input).lines();
        let dim_line = lines.next().ok_or_else(|| bad(1, "missing dim header"))??;
        let dim: usize = dim_line
            .trim_end()
            .strip_prefix("dim=")
            .and_then(|d| d.parse().ok())
            .ok_or_else(|| bad(1, "expected dim=<n>"))?;
        let corpus_line = lines.next().ok_or_else(|| bad(2, "missing corpus header"))??;
        let provenance = corpus_line
            .trim_end_matches(['\r', '\n'])
            .strip_prefix("corpus=")
            .ok_or_else(|| bad(2, "expected corpus=<description>"))?
            .to_string();
        let mut ids = Vec::with_capacity(dim);
        for (i, line) in lines.enumerate() {
            let line = line?;
            let text = line.trim();
            if text.is_empty() {
                continue;
            }
            let id = text
                .parse::<u64>()
                .map_err(|_| bad(i + 3, "identifier is not an unsigned 64-bit integer"))?;
            ids.push(id);
        }
        if ids.len() != dim {
            return Err(bad(
                ids.len() + 3,
                &format!("header says dim={dim} but {} identifiers follow", ids.len()),
            ));
        }
        Self::from_ids(ids, provenance)
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<(), FingerprintError> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self, FingerprintError> {
        Self::read_from(File::open(path)?)
    }
}

/// Selects the `dim` identifiers present in the most corpus fingerprints.
///
/// Support counts presence per fingerprint, not summed multiplicity. Ties
/// break by ascending identifier. When the corpus has fewer than `dim`
/// distinct identifiers the vocabulary shrinks to what is available and the
/// provenance string records the adjustment.
pub fn sortslice_fit<'a, I>(
    corpus: I,
    dim: usize,
    description: &str,
) -> Result<SortSliceVocabulary, FingerprintError>
where
    I: IntoIterator<Item = &'a SparseFingerprint>,
{
    if dim == 0 {
        return Err(FingerprintError::ZeroDim);
    }
    let mut support: HashMap<u64, u64> = HashMap::new();
    let mut molecules = 0usize;
    for fp in corpus {
        molecules += 1;
        for id in fp.ids() {
            *support.entry(id).or_insert(0) += 1;
        }
    }
    if molecules == 0 {
        return Err(FingerprintError::EmptyCorpus);
    }
    if support.is_empty() {
        return Err(FingerprintError::VocabFormat {
            line: 0,
            message: "corpus contains no identifiers".into(),
        });
    }
    let mut ranked: Vec<(u64, u64)> = support.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let available = ranked.len();
    ranked.truncate(dim);
    let description = description.replace(['\n', '\r'], " ");
    let mut provenance = format!("{description} (molecules={molecules})");
    if available < dim {
        provenance.push_str(&format!(" (requested dim {dim}, only {available} identifiers)"));
    }
    SortSliceVocabulary::from_ids(ranked.into_iter().map(|(id, _)| id).collect(), provenance)
}

/// Slot `i` holds `fp`'s count for the vocabulary's `i`-th identifier;
/// identifiers outside the vocabulary are dropped.
pub fn sortslice_encode(fp: &SparseFingerprint, vocab: &SortSliceVocabulary) -> DenseFingerprint {
    let mut counts = vec![0u32; vocab.dim()];
    for &(id, c) in fp.entries() {
        if let Some(slot) = vocab.slot(id) {
            counts[slot] = c;
        }
    }
    DenseFingerprint::from_counts(counts).expect("vocabulary is non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sfp(pairs: &[(u64, u32)]) -> SparseFingerprint {
        SparseFingerprint::from_counts(pairs.iter().copied())
    }

    #[test]
    fn ties_break_by_ascending_identifier() {
        let (a, b) = (11, 42);
        let corpus = [sfp(&[(a, 5)]), sfp(&[(a, 1), (b, 1)]), sfp(&[(b, 2)])];
        let vocab = sortslice_fit(&corpus, 1, "t").unwrap();
        assert_eq!(vocab.ordered_ids(), &[a]);
        let corpus = [sfp(&[(b, 5)]), sfp(&[(a, 1), (b, 1)]), sfp(&[(a, 2)])];
        assert_eq!(sortslice_fit(&corpus, 1, "t").unwrap().ordered_ids(), &[a]);
    }

    #[test]
    fn support_is_presence_not_multiplicity() {
        let n = 6;
        let mut corpus: Vec<SparseFingerprint> = (0..n - 1).map(|_| sfp(&[(1, 1), (2, 100)])).collect();
        corpus.push(sfp(&[(1, 1)]));
        let vocab = sortslice_fit(&corpus, 1, "t").unwrap();
        assert_eq!(vocab.ordered_ids(), &[1]);
        let vocab = sortslice_fit(&corpus, 2, "t").unwrap();
        assert_eq!(vocab.ordered_ids(), &[1, 2]);
    }

    #[test]
    fn shrinks_when_corpus_is_small() {
        let vocab = sortslice_fit(&[sfp(&[(7, 1)])], 4, "tiny").unwrap();
        assert_eq!(vocab.ordered_ids(), &[7]);
        assert_eq!(vocab.dim(), 1);
        assert!(vocab.provenance().contains("requested dim 4"));
    }

    #[test]
    fn empty_corpus_rejected() {
        let empty: [SparseFingerprint; 0] = [];
        assert!(matches!(
            sortslice_fit(&empty, 4, "x"),
            Err(FingerprintError::EmptyCorpus)
        ));
        assert!(matches!(
            sortslice_fit(&[sfp(&[(1, 1)])], 0, "x"),
            Err(FingerprintError::ZeroDim)
        ));
    }

    #[test]
    fn encode_drops_out_of_vocabulary() {
        let vocab = SortSliceVocabulary::from_ids(vec![3, 9], "x".into()).unwrap();
        let dense = sortslice_encode(&sfp(&[(3, 2), (1000, 7)]), &vocab);
        assert_eq!(dense.counts(), &[2, 0]);
        let dense = sortslice_encode(&sfp(&[(3, 2), (9, 1)]), &vocab);
        assert_eq!(dense.total(), 3);
        let dense = sortslice_encode(&SparseFingerprint::default(), &vocab);
        assert_eq!(dense.counts(), &[0, 0]);
    }

    #[test]
    fn file_round_trip() {
        let corpus = [sfp(&[(u64::MAX, 1), (5, 2)]), sfp(&[(5, 1), (17, 1)])];
        let vocab = sortslice_fit(&corpus, 3, "unit\ntest corpus").unwrap();
        let mut buf = Vec::new();
        vocab.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("dim=3\ncorpus=unit test corpus (molecules=2)\n5\n"));
        let back = SortSliceVocabulary::read_from(&buf[..]).unwrap();
        assert_eq!(back, vocab);
    }

    #[test]
    fn malformed_files_rejected() {
        for text in [
            "",
            "dim=2\n",
            "dims=1\ncorpus=x\n1\n",
            "dim=2\ncorpus=x\n1\n",
            "dim=1\ncorpus=x\n-4\n",
            "dim=2\ncorpus=x\n4\n4\n",
            "dim=1\nsource=x\n1\n",
        ] {
            assert!(
                SortSliceVocabulary::read_from(text.as_bytes()).is_err(),
                "{text:?}"
            );
        }
    }
}
