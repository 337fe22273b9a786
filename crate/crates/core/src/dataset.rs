//! Training-set files.
//!
//! Layout (version 1, all integers little-endian):
//!
//! ```text
//! magic     8 bytes  "SLDSET\0\x01"
//! hlen      u32      length of the JSON header
//! header    hlen     UTF-8 JSON (`DatasetHeader`: config echo, seed, counts)
//! records   n_samples times:
//!   flags     u8          bit 0 = empty window, bit 1 = validation split
//!   n_real    u16         rows holding real picks
//!   n_events  u16         events drawn for this window
//!   features  n_p*5 f32   row-major [x, y, t_norm, phase, pad]
//!   labels    n_p u8
//!   event_id  n_p i16     ground-truth event per row, -1 for false picks and pads
//! ```
//!
//! Sample `i` is drawn from a ChaCha8 stream keyed by `(seed, i)`, so the
//! file content does not depend on how generation is parallelized. The first
//! `n_train` records form the training split, the rest validation.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::Region;
use crate::synth::{Generator, SynthConfig, SynthSample};
use crate::window::N_FEATURES;

pub const MAGIC: &[u8; 8] = b"SLDSET\0\x01";
pub const FORMAT_VERSION: u32 = 1;
pub const TRAIN_FRACTION: f64 = 0.75;

const FLAG_EMPTY: u8 = 1;
const FLAG_VALIDATION: u8 = 2;
const CHUNK: usize = 2048;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub version: u32,
    pub seed: u64,
    pub n_samples: usize,
    pub n_train: usize,
    pub n_p: usize,
    pub n_features: usize,
    pub n_stations: usize,
    pub region: Region,
    pub synth: SynthConfig,
    /// Free-form provenance (command-line config echo).
    #[serde(default)]
    pub provenance: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub features: Vec<f32>,
    pub labels: Vec<u8>,
    pub event_ids: Vec<i16>,
    pub n_real: u16,
    pub n_events: u16,
    pub empty: bool,
    pub validation: bool,
}

impl Record {
    pub fn from_sample(gen: &Generator, sample: &SynthSample, validation: bool) -> Self {
        let n_p = gen.config().n_p;
        let rows = gen.featurizer().rows(&sample.picks);
        let mut event_ids = vec![-1i16; n_p];
        for (slot, p) in event_ids.iter_mut().zip(&sample.picks) {
            if let Some(e) = p.event {
                *slot = e as i16;
            }
        }
        Self {
            features: rows.iter().flatten().map(|&v| v as f32).collect(),
            labels: sample.labels.clone(),
            event_ids,
            n_real: sample.picks.len() as u16,
            n_events: sample.truth.events.len() as u16,
            empty: sample.empty,
            validation,
        }
    }

    pub fn features_f64(&self) -> Vec<f64> {
        self.features.iter().map(|&v| f64::from(v)).collect()
    }

    pub fn labels_f64(&self) -> Vec<f64> {
        self.labels.iter().map(|&v| f64::from(v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub records: Vec<Record>,
}

impl Dataset {
    pub fn train(&self) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(|r| !r.validation)
    }

    pub fn validation(&self) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(|r| r.validation)
    }

    /// Fraction of label-1 rows over all rows of non-empty windows.
    pub fn positive_fraction(&self) -> f64 {
        let (ones, total) =
            self.records.iter().filter(|r| !r.empty).fold((0usize, 0usize), |(o, t), r| {
                (o + r.labels.iter().filter(|&&l| l == 1).count(), t + r.labels.len())
            });
        if total == 0 {
            0.0
        } else {
            ones as f64 / total as f64
        }
    }
}

/// RNG for sample `index` of a dataset with the given seed.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn n_train(n_samples: usize) -> usize {
    (n_samples as f64 * TRAIN_FRACTION).round() as usize
}

fn header_for(gen: &Generator, n_samples: usize, seed: u64, provenance: serde_json::Value) -> DatasetHeader {
    let cfg = gen.config();
    DatasetHeader {
        version: FORMAT_VERSION,
        seed,
        n_samples,
        n_train: n_train(n_samples),
        n_p: cfg.n_p,
        n_features: N_FEATURES,
        n_stations: gen.n_stations(),
        region: *gen.region(),
        synth: cfg.clone(),
        provenance,
    }
}

fn make_records(gen: &Generator, seed: u64, range: std::ops::Range<usize>, n_train: usize) -> Vec<Record> {
    range
        .into_par_iter()
        .map(|i| {
            let sample = gen.subsequence(&mut sample_rng(seed, i as u64));
            Record::from_sample(gen, &sample, i >= n_train)
        })
        .collect()
}

/// Draws a dataset without touching the filesystem.
pub fn generate_in_memory(gen: &Generator, n_samples: usize, seed: u64) -> Dataset {
    let header = header_for(gen, n_samples, seed, serde_json::Value::Null);
    let records = make_records(gen, seed, 0..n_samples, header.n_train);
    Dataset { header, records }
}

/// Generates `n_samples` windows and writes them to `path`.
pub fn generate_dataset(
    gen: &Generator,
    n_samples: usize,
    seed: u64,
    path: impl AsRef<Path>,
    provenance: serde_json::Value,
) -> Result<DatasetHeader, DatasetError> {
    let path = path.as_ref();
    let io = |source| DatasetError::Io { path: path.display().to_string(), source };
    let header = header_for(gen, n_samples, seed, provenance);
    let mut w = BufWriter::new(std::fs::File::create(path).map_err(io)?);
    let json = serde_json::to_vec(&header).expect("header serializes");
    w.write_all(MAGIC).map_err(io)?;
    w.write_all(&(json.len() as u32).to_le_bytes()).map_err(io)?;
    w.write_all(&json).map_err(io)?;
    let mut start = 0;
    while start < n_samples {
        let end = (start + CHUNK).min(n_samples);
        for r in make_records(gen, seed, start..end, header.n_train) {
            write_record(&mut w, &r).map_err(io)?;
        }
        start = end;
    }
    w.flush().map_err(io)?;
    Ok(header)
}

fn write_record(w: &mut impl Write, r: &Record) -> std::io::Result<()> {
    let flags = if r.empty { FLAG_EMPTY } else { 0 } | if r.validation { FLAG_VALIDATION } else { 0 };
    w.write_all(&[flags])?;
    w.write_all(&r.n_real.to_le_bytes())?;
    w.write_all(&r.n_events.to_le_bytes())?;
    let mut buf = Vec::with_capacity(r.features.len() * 4 + r.labels.len() * 3);
    for v in &r.features {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&r.labels);
    for e in &r.event_ids {
        buf.extend_from_slice(&e.to_le_bytes());
    }
    w.write_all(&buf)
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    let path = path.as_ref();
    let p = path.display().to_string();
    let io = |source| DatasetError::Io { path: p.clone(), source };
    let bad = |msg: String| DatasetError::Format { path: p.clone(), msg };
    let mut r = BufReader::new(std::fs::File::open(path).map_err(io)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(bad("not a dataset file (bad magic)".into()));
    }
    let mut u32b = [0u8; 4];
    r.read_exact(&mut u32b).map_err(io)?;
    let mut json = vec![0u8; u32::from_le_bytes(u32b) as usize];
    r.read_exact(&mut json).map_err(io)?;
    let header: DatasetHeader = serde_json::from_slice(&json).map_err(|e| bad(format!("header: {e}")))?;
    if header.version != FORMAT_VERSION {
        return Err(bad(format!("unsupported version {}", header.version)));
    }
    if header.n_features != N_FEATURES {
        return Err(bad(format!("expected {N_FEATURES} features, header says {}", header.n_features)));
    }
    let n_p = header.n_p;
    let rec_len = 5 + n_p * N_FEATURES * 4 + n_p + n_p * 2;
    let mut buf = vec![0u8; rec_len];
    let mut records = Vec::with_capacity(header.n_samples);
    for i in 0..header.n_samples {
        r.read_exact(&mut buf).map_err(|e| bad(format!("record {i}: {e}")))?;
        let flags = buf[0];
        let n_real = u16::from_le_bytes([buf[1], buf[2]]);
        let n_events = u16::from_le_bytes([buf[3], buf[4]]);
        let mut off = 5;
        let features = buf[off..off + n_p * N_FEATURES * 4]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        off += n_p * N_FEATURES * 4;
        let labels = buf[off..off + n_p].to_vec();
        off += n_p;
        let event_ids = buf[off..off + 2 * n_p].chunks_exact(2).map(|c| i16::from_le_bytes([c[0], c[1]])).collect();
        records.push(Record {
            features,
            labels,
            event_ids,
            n_real,
            n_events,
            empty: flags & FLAG_EMPTY != 0,
            validation: flags & FLAG_VALIDATION != 0,
        });
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe).map_err(io)? != 0 {
        return Err(bad("trailing bytes after the last record".into()));
    }
    Ok(Dataset { header, records })
}
