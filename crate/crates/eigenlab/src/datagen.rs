//! Materializes ensembles + codecs into reproducible datasets.
//!
//! On-disk format (bit-exact): UTF-8 text, one record per line — input token
//! surfaces space-separated, a single `|` with one space on each side, target
//! token surfaces space-separated, `\n` terminator. A sidecar `manifest.json`
//! records the generating spec, the SHA-256 of the data file, and the number
//! of discarded draws.
//!
//! Generation is a pure function of (spec, index): workers may render
//! disjoint index ranges in parallel and the concatenation is byte-identical
//! to a single-worker build. Singular draws and encoding overflows are
//! discarded; the index deterministically rehashes into a retry stream
//! disjoint from ordinary indices (high bit set), bounded at 100 attempts.

use crate::codec::{self, CodecError, Scheme, Solution, TaskKind, TokenSequence};
use crate::ensembles::{sample_matrix, EnsembleConfig, EnsembleError};
use crate::linalg::{self, eig_sym, LinalgError, Matrix, SymMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

const MANIFEST_VERSION: u32 = 1;
const MAX_RETRIES: u64 = 100;
const RETRY_BIT: u64 = 1 << 63;
/// Keeps `index * 128 + retry` clear of the retry bit.
const MAX_COUNT: u64 = 1 << 55;

pub const DATA_FILE: &str = "data.txt";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("invalid dataset spec: {0}")]
    InvalidSpec(String),
    #[error("could not generate example {index}: no valid draw within {attempts} attempts")]
    RetryExhausted { index: u64, attempts: u64 },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record at line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("manifest mismatch: {0}")]
    ManifestMismatch(String),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, DatagenError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatagenError + '_ {
    move |source| DatagenError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Everything needed to regenerate a dataset. `seed` is authoritative: it
/// must equal `ensemble.seed` so a record is a function of one seed only.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DatasetSpec {
    pub task: TaskKind,
    pub ensemble: EnsembleConfig,
    pub input_scheme: Scheme,
    pub target_scheme: Scheme,
    pub count: u64,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn new(
        task: TaskKind,
        mut ensemble: EnsembleConfig,
        input_scheme: Scheme,
        target_scheme: Scheme,
        count: u64,
        seed: u64,
    ) -> Self {
        ensemble.seed = seed;
        Self {
            task,
            ensemble,
            input_scheme,
            target_scheme,
            count,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ensemble.validate()?;
        if self.count == 0 {
            return Err(DatagenError::InvalidSpec("count must be >= 1".into()));
        }
        if self.count > MAX_COUNT {
            return Err(DatagenError::InvalidSpec(format!(
                "count must be <= {MAX_COUNT}"
            )));
        }
        if self.seed != self.ensemble.seed {
            return Err(DatagenError::InvalidSpec(format!(
                "spec seed {} != ensemble seed {}",
                self.seed, self.ensemble.seed
            )));
        }
        if self.task != TaskKind::Inversion && !self.ensemble.kind.is_symmetric() {
            return Err(DatagenError::InvalidSpec(format!(
                "task {} requires a symmetric ensemble, got {}",
                self.task, self.ensemble.kind
            )));
        }
        Ok(())
    }
}

/// Input-derived statistics: the condition number of the (decoded) input and
/// its smallest eigenvalue — smallest singular value for non-symmetric inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordAux {
    pub cond_m: f64,
    pub min_eig: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub index: u64,
    pub input: TokenSequence,
    pub target: TokenSequence,
    pub aux: RecordAux,
}

impl DatasetRecord {
    /// The canonical one-line file form.
    pub fn to_line(&self) -> String {
        format!("{} | {}", self.input.to_text(), self.target.to_text())
    }
}

/// Statistics recomputed from the matrix the model actually sees.
fn aux_for_input(input: &Matrix, symmetric: bool) -> Result<RecordAux> {
    if symmetric {
        let eig = eig_sym(&SymMatrix::mirror_upper(input))?;
        let max_abs = eig
            .spectrum
            .values()
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        let min_abs = eig
            .spectrum
            .values()
            .iter()
            .fold(f64::INFINITY, |a, v| a.min(v.abs()));
        let cond_m = if min_abs < 1e-300 {
            f64::INFINITY
        } else {
            max_abs / min_abs
        };
        Ok(RecordAux {
            cond_m,
            min_eig: eig.spectrum.min(),
        })
    } else {
        let cond_m = linalg::cond(input)?;
        let n = input.n();
        let mut gram = Matrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += input.get(k, i) * input.get(k, j);
                }
                gram.set(i, j, acc);
            }
        }
        let sigma_min = eig_sym(&SymMatrix::mirror_upper(&gram))?
            .spectrum
            .min()
            .max(0.0)
            .sqrt();
        Ok(RecordAux {
            cond_m,
            min_eig: sigma_min,
        })
    }
}

enum Attempt {
    Record(Box<DatasetRecord>),
    Discard,
}

fn attempt(spec: &DatasetSpec, index: u64, draw_index: u64) -> Result<Attempt> {
    let sample = match sample_matrix(&spec.ensemble, draw_index) {
        Ok(s) => s,
        Err(EnsembleError::Solver(_)) => return Ok(Attempt::Discard),
        Err(e) => return Err(e.into()),
    };
    let solution = match spec.task {
        TaskKind::Eigenvalues => {
            let sym = sample.symmetric().expect("validated symmetric kind");
            match eig_sym(sym) {
                Ok(eig) => Solution::from_eigen(&eig.spectrum),
                Err(_) => return Ok(Attempt::Discard),
            }
        }
        TaskKind::Diagonalization => {
            let sym = sample.symmetric().expect("validated symmetric kind");
            match eig_sym(sym) {
                Ok(eig) => Solution::Diagonalization {
                    values: eig.spectrum.values().to_vec(),
                    basis: eig.basis,
                },
                Err(_) => return Ok(Attempt::Discard),
            }
        }
        TaskKind::Inversion => match linalg::invert(sample.as_matrix()) {
            Ok(p) => Solution::Inversion(p),
            Err(LinalgError::Singular { .. }) => return Ok(Attempt::Discard),
            Err(e) => return Err(e.into()),
        },
    };
    let input = match codec::encode_input(sample.as_matrix(), spec.input_scheme) {
        Ok(seq) => seq,
        Err(CodecError::EncodeRange { .. }) => return Ok(Attempt::Discard),
        Err(e) => return Err(e.into()),
    };
    let target = match codec::encode_target(spec.task, &solution, spec.target_scheme) {
        Ok(seq) => seq,
        Err(CodecError::EncodeRange { .. }) => return Ok(Attempt::Discard),
        Err(e) => return Err(e.into()),
    };
    let decoded_input = codec::decode_input(&input.ids, spec.input_scheme)?;
    let aux = aux_for_input(&decoded_input, spec.ensemble.kind.is_symmetric())?;
    Ok(Attempt::Record(Box::new(DatasetRecord {
        index,
        input,
        target,
        aux,
    })))
}

/// Deterministically produces the `i`-th record. Returns the record plus the
/// number of discarded draws it took.
pub fn example_for_index(spec: &DatasetSpec, index: u64) -> Result<(DatasetRecord, u64)> {
    if index >= spec.count {
        return Err(DatagenError::InvalidSpec(format!(
            "index {index} out of range for count {}",
            spec.count
        )));
    }
    match attempt(spec, index, index)? {
        Attempt::Record(r) => return Ok((*r, 0)),
        Attempt::Discard => {}
    }
    for retry in 1..=MAX_RETRIES {
        let draw_index = RETRY_BIT | (index * 128 + retry);
        match attempt(spec, index, draw_index)? {
            Attempt::Record(r) => return Ok((*r, retry)),
            Attempt::Discard => {}
        }
    }
    Err(DatagenError::RetryExhausted {
        index,
        attempts: MAX_RETRIES + 1,
    })
}

/// Renders the lines for `range` as one text chunk, returning the chunk and
/// its total retry count. Building `0..count` in any partition and
/// concatenating yields byte-identical data.
pub fn render_records(spec: &DatasetSpec, range: std::ops::Range<u64>) -> Result<(String, u64)> {
    let mut text = String::new();
    let mut retries = 0;
    for i in range {
        let (record, r) = example_for_index(spec, i)?;
        text.push_str(&record.to_line());
        text.push('\n');
        retries += r;
    }
    Ok((text, retries))
}

/// Streams records without touching disk (fresh-sample training).
pub fn stream_records(spec: &DatasetSpec) -> impl Iterator<Item = Result<DatasetRecord>> + '_ {
    (0..spec.count).map(move |i| example_for_index(spec, i).map(|(r, _)| r))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub version: u32,
    pub task: TaskKind,
    pub ensemble: EnsembleConfig,
    pub input_scheme: Scheme,
    pub target_scheme: Scheme,
    pub count: u64,
    pub sha256: String,
    pub retries: u64,
}

impl Manifest {
    pub fn matches_spec(&self, spec: &DatasetSpec) -> Result<()> {
        let same = self.task == spec.task
            && self.ensemble == spec.ensemble
            && self.input_scheme == spec.input_scheme
            && self.target_scheme == spec.target_scheme
            && self.count == spec.count;
        if same {
            Ok(())
        } else {
            Err(DatagenError::ManifestMismatch(format!(
                "manifest was built from a different spec (manifest task {}, kind {}, n {}, count {})",
                self.task, self.ensemble.kind, self.ensemble.n, self.count
            )))
        }
    }

    pub fn spec(&self) -> DatasetSpec {
        DatasetSpec {
            task: self.task,
            ensemble: self.ensemble.clone(),
            input_scheme: self.input_scheme,
            target_scheme: self.target_scheme,
            count: self.count,
            seed: self.ensemble.seed,
        }
    }
}

/// Builds `dir/data.txt` and `dir/manifest.json`. Index ranges are rendered
/// in parallel on the current rayon pool; output is identical for any worker
/// count.
pub fn build_dataset(spec: &DatasetSpec, dir: &Path) -> Result<Manifest> {
    spec.validate()?;
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;

    let workers = rayon::current_num_threads().max(1) as u64;
    let chunk = spec.count.div_ceil(workers * 4).max(1);
    let ranges: Vec<std::ops::Range<u64>> = (0..spec.count)
        .step_by(chunk as usize)
        .map(|start| start..(start + chunk).min(spec.count))
        .collect();
    let chunks: Vec<(String, u64)> = ranges
        .into_par_iter()
        .map(|r| render_records(spec, r))
        .collect::<Result<_>>()?;

    let mut hasher = Sha256::new();
    let data_path = dir.join(DATA_FILE);
    let file = std::fs::File::create(&data_path).map_err(io_err(&data_path))?;
    let mut out = std::io::BufWriter::new(file);
    let mut retries = 0;
    for (text, r) in &chunks {
        hasher.update(text.as_bytes());
        out.write_all(text.as_bytes()).map_err(io_err(&data_path))?;
        retries += r;
    }
    out.flush().map_err(io_err(&data_path))?;

    let manifest = Manifest {
        version: MANIFEST_VERSION,
        task: spec.task,
        ensemble: spec.ensemble.clone(),
        input_scheme: spec.input_scheme,
        target_scheme: spec.target_scheme,
        count: spec.count,
        sha256: format!("{:x}", hasher.finalize()),
        retries,
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&manifest_path, json.as_bytes()).map_err(io_err(&manifest_path))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let mut text = String::new();
    std::fs::File::open(&path)
        .map_err(io_err(&path))?
        .read_to_string(&mut text)
        .map_err(io_err(&path))?;
    serde_json::from_str(&text)
        .map_err(|e| DatagenError::ManifestMismatch(format!("unreadable manifest: {e}")))
}

/// Streaming reader. Yields records in file order; each line is validated
/// against the manifest's schemes and task grammar, and aux statistics are
/// recomputed from the decoded input.
pub struct DatasetReader {
    manifest: Manifest,
    reader: BufReader<std::fs::File>,
    next_index: u64,
    done: bool,
}

impl DatasetReader {
    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    fn parse_line(&self, line: &str, index: u64) -> Result<DatasetRecord> {
        let line_no = index + 1;
        let malformed = |reason: String| DatagenError::Malformed {
            line: line_no,
            reason,
        };
        let (left, right) = line
            .split_once(" | ")
            .ok_or_else(|| malformed("missing ` | ` separator".into()))?;
        let input = TokenSequence::from_text(self.manifest.input_scheme, left)
            .map_err(|e| malformed(format!("input: {e}")))?;
        let target = TokenSequence::from_text(self.manifest.target_scheme, right)
            .map_err(|e| malformed(format!("target: {e}")))?;
        let matrix = codec::decode_input(&input.ids, self.manifest.input_scheme)
            .map_err(|e| malformed(format!("input: {e}")))?;
        if matrix.n() != self.manifest.ensemble.n {
            return Err(malformed(format!(
                "dimension {} does not match manifest n {}",
                matrix.n(),
                self.manifest.ensemble.n
            )));
        }
        codec::decode_target(
            self.manifest.task,
            &target.ids,
            matrix.n(),
            self.manifest.target_scheme,
        )
        .map_err(|e| malformed(format!("target: {e}")))?;
        let aux = aux_for_input(&matrix, self.manifest.ensemble.kind.is_symmetric())?;
        Ok(DatasetRecord {
            index,
            input,
            target,
            aux,
        })
    }
}

impl Iterator for DatasetReader {
    type Item = Result<DatasetRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut line = String::new();
        let read = match self.reader.read_line(&mut line) {
            Ok(k) => k,
            Err(e) => {
                self.done = true;
                return Some(Err(DatagenError::Io {
                    path: DATA_FILE.into(),
                    source: e,
                }));
            }
        };
        let index = self.next_index;
        if read == 0 {
            self.done = true;
            if index < self.manifest.count {
                return Some(Err(DatagenError::Malformed {
                    line: index + 1,
                    reason: format!(
                        "data ends after {index} records, manifest says {}",
                        self.manifest.count
                    ),
                }));
            }
            return None;
        }
        if index >= self.manifest.count {
            self.done = true;
            return Some(Err(DatagenError::Malformed {
                line: index + 1,
                reason: format!(
                    "more records than the manifest count {}",
                    self.manifest.count
                ),
            }));
        }
        if !line.ends_with('\n') {
            self.done = true;
            return Some(Err(DatagenError::Malformed {
                line: index + 1,
                reason: "truncated final line (missing newline)".into(),
            }));
        }
        self.next_index += 1;
        let result = self.parse_line(line.trim_end_matches('\n'), index);
        if result.is_err() {
            self.done = true;
        }
        Some(result)
    }
}

/// Opens a dataset directory for streaming.
pub fn read_dataset(dir: &Path) -> Result<DatasetReader> {
    let manifest = read_manifest(dir)?;
    let path = dir.join(DATA_FILE);
    let file = std::fs::File::open(&path).map_err(io_err(&path))?;
    Ok(DatasetReader {
        manifest,
        reader: BufReader::new(file),
        next_index: 0,
        done: false,
    })
}

/// Collects a whole dataset into memory (small test sets).
pub fn load_dataset(dir: &Path) -> Result<(Manifest, Vec<DatasetRecord>)> {
    let reader = read_dataset(dir)?;
    let manifest = reader.manifest().clone();
    let records: Vec<DatasetRecord> = reader.collect::<Result<_>>()?;
    Ok((manifest, records))
}
