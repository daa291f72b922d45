//! Delimited dataset ingestion, train/test splits and seeded subsampling.
//!
//! Input tables are tab- or comma-separated with a header row. The delimiter
//! is a tab if the header line contains one, otherwise a comma. Required
//! columns: a SMILES column (`smiles`, any case) and the selected target.
//! The record id is taken from the first of `id`, `record_id`, `inchikey`
//! or `name` that is present; without one, the 1-based data row number is
//! used.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::bo::Direction;
use crate::rng::ExperimentRng;
use crate::scalar::Scalar;
use crate::smiles::{parse_smiles, MolGraph, SmilesError};

const ID_COLUMNS: [&str; 4] = ["id", "record_id", "inchikey", "name"];
const LABEL_COLUMNS: [&str; 3] = ["split", "label", "set"];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("malformed table: {0}")]
    Csv(#[from] csv::Error),
    #[error("input is empty")]
    EmptyInput,
    #[error("no column {name:?}; available columns: {}", available.join(", "))]
    MissingColumn { name: String, available: Vec<String> },
    #[error("no usable records ({dropped} dropped)")]
    NoRecords { dropped: usize },
    #[error("split file line {line}: {message}")]
    SplitFormat { line: usize, message: String },
    #[error("cannot sample {requested} of {available} items")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("no values to rank")]
    EmptyValues,
    #[error("fraction must be in (0, 1], got {0}")]
    BadFraction(f64),
    #[error("non-finite value at index {0}")]
    NonFiniteValue(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Some(Split::Train),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Record {
    pub id: String,
    pub smiles: String,
    pub mol: MolGraph,
    pub value: f64,
    pub split: Option<Split>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataWarning {
    MissingTarget { row: usize, id: String },
    BadSmiles { row: usize, id: String, error: SmilesError },
    DuplicateId { row: usize, id: String },
    UnknownSplitId { line: usize, id: String },
}

impl fmt::Display for DataWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataWarning::MissingTarget { row, id } => write!(f, "row {row} ({id}): missing or non-finite target"),
            DataWarning::BadSmiles { row, id, error } => write!(f, "row {row} ({id}): {error}"),
            DataWarning::DuplicateId { row, id } => write!(f, "row {row}: duplicate id {id}"),
            DataWarning::UnknownSplitId { line, id } => write!(f, "split line {line}: id {id} not in dataset"),
        }
    }
}

/// Per-kind warning totals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WarningCounts {
    pub missing_target: usize,
    pub bad_smiles: usize,
    pub duplicate_id: usize,
    pub unknown_split_id: usize,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub target: String,
    pub records: Vec<Record>,
    pub warnings: Vec<DataWarning>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.value).collect()
    }

    pub fn warning_counts(&self) -> WarningCounts {
        let mut c = WarningCounts::default();
        for w in &self.warnings {
            match w {
                DataWarning::MissingTarget { .. } => c.missing_target += 1,
                DataWarning::BadSmiles { .. } => c.bad_smiles += 1,
                DataWarning::DuplicateId { .. } => c.duplicate_id += 1,
                DataWarning::UnknownSplitId { .. } => c.unknown_split_id += 1,
            }
        }
        c
    }

    /// Indices of records labeled train and test, in record order.
    pub fn partition(&self) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, r) in self.records.iter().enumerate() {
            match r.split {
                Some(Split::Train) => train.push(i),
                Some(Split::Test) => test.push(i),
                None => {}
            }
        }
        (train, test)
    }
}

fn sniff_delimiter(header: &str) -> u8 {
    if header.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

fn find_column(headers: &[String], wanted: &str) -> Option<usize> {
    headers
        .iter()
        .position(|h| h == wanted)
        .or_else(|| headers.iter().position(|h| h.eq_ignore_ascii_case(wanted)))
}

fn parse_value(text: &str) -> Option<f64> {
    text.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads the whole input and splits off the header line for sniffing.
fn read_table<R: Read>(input: R) -> Result<(u8, Vec<u8>), DataError> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    if reader.read_line(&mut first)? == 0 || first.trim().is_empty() {
        return Err(DataError::EmptyInput);
    }
    let delimiter = sniff_delimiter(&first);
    let mut bytes = first.into_bytes();
    reader.read_to_end(&mut bytes)?;
    Ok((delimiter, bytes))
}

pub fn load_dataset<P: AsRef<Path>>(path: P, target: &str) -> Result<Dataset, DataError> {
    read_dataset(File::open(path)?, target)
}

/// Parses a dataset table; see the module documentation for the format.
/// Rows with a missing target, an unparsable SMILES or a repeated id are
/// dropped and reported in [`Dataset::warnings`]. Record order follows the
/// file.
pub fn read_dataset<R: Read>(input: R, target: &str) -> Result<Dataset, DataError> {
    let table = read_rows(input, Some(target))?;
    let records = table
        .rows
        .into_iter()
        .map(|(m, value)| Record {
            id: m.id,
            smiles: m.smiles,
            mol: m.mol,
            value: value.expect("target rows carry a value"),
            split: None,
        })
        .collect();
    Ok(Dataset {
        target: table.target.expect("target requested"),
        records,
        warnings: table.warnings,
    })
}

/// A structure without a target value.
#[derive(Debug, Clone)]
pub struct Molecule {
    pub id: String,
    pub smiles: String,
    pub mol: MolGraph,
}

/// Structures read from a table that need not carry any target column.
#[derive(Debug, Clone)]
pub struct MoleculeTable {
    pub molecules: Vec<Molecule>,
    pub warnings: Vec<DataWarning>,
}

pub fn load_molecules<P: AsRef<Path>>(path: P) -> Result<MoleculeTable, DataError> {
    read_molecules(File::open(path)?)
}

/// Like [`read_dataset`] but only the SMILES column (and id, when present)
/// is required. Unparsable SMILES and repeated ids are dropped with warnings.
pub fn read_molecules<R: Read>(input: R) -> Result<MoleculeTable, DataError> {
    let table = read_rows(input, None)?;
    Ok(MoleculeTable {
        molecules: table.rows.into_iter().map(|(m, _)| m).collect(),
        warnings: table.warnings,
    })
}

struct Rows {
    target: Option<String>,
    rows: Vec<(Molecule, Option<f64>)>,
    warnings: Vec<DataWarning>,
}

fn read_rows<R: Read>(input: R, target: Option<&str>) -> Result<Rows, DataError> {
    let (delimiter, bytes) = read_table(input)?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(false)
        .from_reader(&bytes[..]);
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let missing = |name: &str| DataError::MissingColumn {
        name: name.to_string(),
        available: headers.clone(),
    };
    let smiles_col = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case("smiles"))
        .ok_or_else(|| missing("smiles"))?;
    let target_col = match target {
        Some(name) => Some(find_column(&headers, name).ok_or_else(|| missing(name))?),
        None => None,
    };
    let id_col = ID_COLUMNS
        .iter()
        .find_map(|name| headers.iter().position(|h| h.eq_ignore_ascii_case(name)));

    struct Raw {
        row: usize,
        id: String,
        smiles: String,
        // Outer None: no usable target in a table that needs one.
        value: Option<Option<f64>>,
    }
    let mut raw = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        raw.push(Raw {
            row,
            id: id_col.map_or_else(|| row.to_string(), |c| rec[c].trim().to_string()),
            smiles: rec[smiles_col].trim().to_string(),
            value: match target_col {
                Some(c) => parse_value(&rec[c]).map(Some),
                None => Some(None),
            },
        });
    }
    if raw.is_empty() {
        return Err(DataError::NoRecords { dropped: 0 });
    }

    let parsed: Vec<Option<Result<MolGraph, SmilesError>>> = raw
        .par_iter()
        .map(|r| r.value.map(|_| parse_smiles(&r.smiles)))
        .collect();

    let mut rows = Vec::with_capacity(raw.len());
    let mut warnings = Vec::new();
    let mut seen = HashSet::with_capacity(raw.len());
    for (r, mol) in raw.into_iter().zip(parsed) {
        let (row, id) = (r.row, r.id);
        match mol {
            None => warnings.push(DataWarning::MissingTarget { row, id }),
            Some(Err(error)) => warnings.push(DataWarning::BadSmiles { row, id, error }),
            Some(Ok(mol)) => {
                if !seen.insert(id.clone()) {
                    warnings.push(DataWarning::DuplicateId { row, id });
                    continue;
                }
                let value = r.value.expect("parsed only when usable");
                rows.push((
                    Molecule {
                        id,
                        smiles: r.smiles,
                        mol,
                    },
                    value,
                ));
            }
        }
    }
    if rows.is_empty() {
        return Err(DataError::NoRecords {
            dropped: warnings.len(),
        });
    }
    Ok(Rows {
        target: target_col.map(|c| headers[c].clone()),
        rows,
        warnings,
    })
}

pub fn apply_split<P: AsRef<Path>>(dataset: Dataset, split_path: P) -> Result<Dataset, DataError> {
    apply_split_from(dataset, File::open(split_path)?)
}

/// Attaches train/test labels from a delimited split table and drops records
/// it does not mention. The table is either two headerless columns
/// `(id, label)` or has a header naming an id column and a
/// `split`/`label`/`set` column; any further columns are ignored.
pub fn apply_split_from<R: Read>(mut dataset: Dataset, input: R) -> Result<Dataset, DataError> {
    let (delimiter, bytes) = read_table(input)?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(&bytes[..]);
    let mut rows = reader.records();
    let first = rows.next().ok_or(DataError::EmptyInput)??;
    let first: Vec<String> = first.iter().map(|s| s.trim().to_string()).collect();
    if first.len() < 2 {
        return Err(DataError::SplitFormat {
            line: 1,
            message: "expected at least two columns".into(),
        });
    }

    let mut pending = Vec::new();
    let (id_col, label_col) = if Split::parse(&first[1]).is_some() {
        pending.push((1, first[0].clone(), first[1].clone()));
        (0, 1)
    } else {
        let find = |names: &[&str]| {
            names
                .iter()
                .find_map(|n| first.iter().position(|h| h.eq_ignore_ascii_case(n)))
        };
        let label = find(&LABEL_COLUMNS).ok_or_else(|| DataError::SplitFormat {
            line: 1,
            message: format!("no split/label column in header {first:?}"),
        })?;
        (find(&ID_COLUMNS).unwrap_or(0), label)
    };

    let mut labels: HashMap<String, (usize, Split)> = HashMap::new();
    let mut insert = |line: usize, id: String, label: &str| -> Result<(), DataError> {
        let split = Split::parse(label).ok_or_else(|| DataError::SplitFormat {
            line,
            message: format!("label {label:?} is neither train nor test"),
        })?;
        labels.insert(id, (line, split));
        Ok(())
    };
    for (line, id, label) in pending {
        insert(line, id, &label)?;
    }
    for (i, rec) in rows.enumerate() {
        let rec = rec?;
        let line = i + 2;
        let (Some(id), Some(label)) = (rec.get(id_col), rec.get(label_col)) else {
            return Err(DataError::SplitFormat {
                line,
                message: "missing column".into(),
            });
        };
        insert(line, id.trim().to_string(), label)?;
    }

    let mut used = HashSet::with_capacity(labels.len());
    dataset.records.retain_mut(|r| match labels.get(&r.id) {
        Some(&(_, split)) => {
            r.split = Some(split);
            used.insert(r.id.clone());
            true
        }
        None => false,
    });
    let mut unknown: Vec<(usize, String)> = labels
        .into_iter()
        .filter(|(id, _)| !used.contains(id))
        .map(|(id, (line, _))| (line, id))
        .collect();
    unknown.sort_unstable();
    dataset
        .warnings
        .extend(unknown.into_iter().map(|(line, id)| DataWarning::UnknownSplitId { line, id }));
    Ok(dataset)
}

/// Uniform sample of `n` items without replacement, in sampled order.
pub fn subsample(indices: &[usize], n: usize, seed: u64) -> Result<Vec<usize>, DataError> {
    subsample_with(indices, n, &mut ExperimentRng::new(seed))
}

pub fn subsample_with(indices: &[usize], n: usize, rng: &mut ExperimentRng) -> Result<Vec<usize>, DataError> {
    if n > indices.len() {
        return Err(DataError::SampleTooLarge {
            requested: n,
            available: indices.len(),
        });
    }
    let mut pool = indices.to_vec();
    rng.partial_shuffle(&mut pool, n);
    pool.truncate(n);
    Ok(pool)
}

/// Indices of the worst `⌈fraction · n⌉` values in the optimization
/// direction (largest first when minimizing), ties by ascending index.
/// Returned in ascending index order.
pub fn bottom_fraction<T: Scalar>(values: &[T], fraction: f64, direction: Direction) -> Result<Vec<usize>, DataError> {
    if values.is_empty() {
        return Err(DataError::EmptyValues);
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(DataError::BadFraction(fraction));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(DataError::NonFiniteValue(i));
    }
    let n = values.len();
    // Shave a relative 1e-12 so that e.g. 0.7 · 10 counts as 7, not 8.
    let k = ((fraction * n as f64) * (1.0 - 1e-12)).ceil().clamp(1.0, n as f64) as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        direction
            .worst_first(values[a], values[b])
            .then(a.cmp(&b))
    });
    let mut picked = order[..k].to_vec();
    picked.sort_unstable();
    Ok(picked)
}
