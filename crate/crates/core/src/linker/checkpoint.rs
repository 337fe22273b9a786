//! Self-describing model files.
//!
//! Layout: magic `SLMODEL\x01`, a little-endian `u32` header length, a JSON
//! header, then every parameter as a little-endian `f64` in layout order.
//! Parameters round-trip bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{LinkerError, LinkerModel, TensorInfo};

const MAGIC: &[u8; 8] = b"SLMODEL\x01";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("checkpoint header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("checkpoint declares {declared} parameters but the layout needs {expected}")]
    Count { declared: usize, expected: usize },
    #[error("checkpoint tensor table does not match the model layout at {0}")]
    Tensors(String),
    #[error("checkpoint truncated: expected {expected} parameter bytes")]
    Truncated { expected: usize },
    #[error(transparent)]
    Model(#[from] LinkerError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub input: usize,
    pub hidden: usize,
    pub n_params: usize,
    pub tensors: Vec<TensorInfo>,
    /// Window length the model was trained for.
    pub n_p: usize,
    /// Free-form record of how the model was produced.
    #[serde(default)]
    pub provenance: serde_json::Value,
}

pub fn save_model(
    path: impl AsRef<Path>,
    model: &LinkerModel,
    n_p: usize,
    provenance: serde_json::Value,
) -> Result<(), CheckpointError> {
    let layout = model.layout();
    let header = CheckpointHeader {
        input: layout.input,
        hidden: layout.hidden,
        n_params: layout.total,
        tensors: layout.tensors(),
        n_p,
        provenance,
    };
    let json = serde_json::to_vec(&header)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    for p in model.params() {
        w.write_all(&p.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(LinkerModel, CheckpointHeader), CheckpointError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| CheckpointError::BadMagic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut json)?;
    let header: CheckpointHeader = serde_json::from_slice(&json)?;

    let expected = super::Layout::new(header.input, header.hidden);
    if header.n_params != expected.total {
        return Err(CheckpointError::Count { declared: header.n_params, expected: expected.total });
    }
    for (a, b) in header.tensors.iter().zip(expected.tensors()) {
        if *a != b {
            return Err(CheckpointError::Tensors(b.name));
        }
    }
    let mut bytes = Vec::with_capacity(expected.total * 8);
    r.read_to_end(&mut bytes)?;
    if bytes.len() != expected.total * 8 {
        return Err(CheckpointError::Truncated { expected: expected.total * 8 });
    }
    let params = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    let model = LinkerModel::from_params(header.input, header.hidden, params)?;
    Ok((model, header))
}
