//! Model checkpoints: one JSON header line followed by the coordinates as raw
//! little-endian `f64`.
//!
//! ```text
//! {"d":2000,"round":12,"config_hash":"9f86d0…"}\n<d × 8 bytes>
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::sparse::DenseModel;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub d: usize,
    pub round: usize,
    /// Lowercase hex SHA-256 of the run configuration's JSON encoding.
    pub config_hash: String,
}

/// SHA-256 (hex) of `config` serialized with `serde_json`.
pub fn config_hash<T: Serialize + ?Sized>(config: &T) -> Result<String> {
    let digest = Sha256::digest(serde_json::to_vec(config)?);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

pub fn write_checkpoint<W: Write>(mut out: W, w: &DenseModel, round: usize, config_hash: &str) -> Result<()> {
    let header = CheckpointHeader {
        d: w.len(),
        round,
        config_hash: config_hash.to_owned(),
    };
    let mut buf = serde_json::to_vec(&header)?;
    buf.push(b'\n');
    buf.reserve(8 * w.len());
    for v in w.as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf).map_err(|e| Error::io("<checkpoint>", e))
}

pub fn read_checkpoint<R: BufRead>(mut input: R) -> Result<(CheckpointHeader, DenseModel)> {
    let mut line = Vec::new();
    input
        .read_until(b'\n', &mut line)
        .map_err(|e| Error::io("<checkpoint>", e))?;
    if line.pop() != Some(b'\n') {
        return Err(Error::InvalidData("checkpoint header is not newline-terminated".into()));
    }
    let header: CheckpointHeader = serde_json::from_slice(&line)?;
    let mut body = Vec::new();
    input.read_to_end(&mut body).map_err(|e| Error::io("<checkpoint>", e))?;
    if body.len() != 8 * header.d {
        return Err(Error::DimensionMismatch {
            expected: 8 * header.d,
            got: body.len(),
        });
    }
    let coords: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok((header, DenseModel::from(coords)))
}

pub fn save_checkpoint(path: impl AsRef<Path>, w: &DenseModel, round: usize, config_hash: &str) -> Result<()> {
    let path = path.as_ref();
    let mut out = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    write_checkpoint(&mut out, w, round, config_hash)?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(CheckpointHeader, DenseModel)> {
    let path = path.as_ref();
    read_checkpoint(BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?))
}
