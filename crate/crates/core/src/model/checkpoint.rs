//! Parameter checkpoints: a JSON index `{name: {shape, dtype, offset}}` plus a
//! little-endian raw blob.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::params::ParamSet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TensorEntry {
    pub shape: Vec<usize>,
    pub dtype: String,
    /// Byte offset into the blob.
    pub offset: u64,
}

pub type TensorIndex = BTreeMap<String, TensorEntry>;

fn paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{stem}.json")), dir.join(format!("{stem}.bin")))
}

/// Writes `dir/{stem}.json` and `dir/{stem}.bin`.
pub fn save_tensors<T: Scalar>(params: &ParamSet<T>, dir: &Path, stem: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut index = TensorIndex::new();
    let mut blob = Vec::new();
    for (name, t) in params.iter() {
        index.insert(
            name.clone(),
            TensorEntry { shape: t.shape().to_vec(), dtype: T::DTYPE.into(), offset: blob.len() as u64 },
        );
        for &v in t.data() {
            v.write_le(&mut blob);
        }
    }
    let (ip, bp) = paths(dir, stem);
    fs::write(bp, blob)?;
    fs::write(ip, serde_json::to_string_pretty(&index)?)?;
    Ok(())
}

fn decode<T: Scalar>(bytes: &[u8], dtype: &str) -> Result<T> {
    match dtype {
        "f32" => Ok(T::of(f32::read_le(bytes) as f64)),
        "f64" => Ok(T::of(f64::read_le(bytes))),
        other => Err(Error::CorruptManifest(format!("unknown dtype `{other}`"))),
    }
}

/// Reads a tensor set written by [`save_tensors`]. Stored values are
/// converted to `T` when the precisions differ.
pub fn load_tensors<T: Scalar>(dir: &Path, stem: &str) -> Result<ParamSet<T>> {
    let (ip, bp) = paths(dir, stem);
    let index: TensorIndex = serde_json::from_slice(&fs::read(&ip)?)
        .map_err(|e| Error::CorruptManifest(format!("{}: {e}", ip.display())))?;
    let blob = fs::read(&bp)?;
    let mut out = ParamSet::new();
    for (name, e) in index {
        let width = match e.dtype.as_str() {
            "f32" => 4,
            "f64" => 8,
            other => return Err(Error::CorruptManifest(format!("unknown dtype `{other}` for {name}"))),
        };
        let n: usize = e.shape.iter().product();
        let end = e.offset + (n * width) as u64;
        if end > blob.len() as u64 {
            return Err(Error::TruncatedPayload { expected: end, actual: blob.len() as u64 });
        }
        let start = e.offset as usize;
        let data = (0..n)
            .map(|i| decode::<T>(&blob[start + i * width..], &e.dtype))
            .collect::<Result<Vec<T>>>()?;
        out.insert(name, Tensor::new(&e.shape, data)?)
            .map_err(|err| Error::CorruptManifest(err.to_string()))?;
    }
    Ok(out)
}
