//! Dataset persistence: `manifest.json` plus one little-endian `f32` blob.
//!
//! Each sample occupies `2 * h * w * 4` bytes: the real plane then the
//! imaginary plane, both row-major.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Sample;
use crate::error::{shape_err, Error, Result};
use crate::image::ComplexImage;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const BLOB_FILE: &str = "samples.bin";
pub const DTYPE_TAG: &str = "f32le";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    /// Byte offset of the sample in the blob.
    pub offset: u64,
    pub norm_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub h: usize,
    pub w: usize,
    pub count: usize,
    pub dtype: String,
    /// `train`, `val`, `test` or any other tag the writer chose.
    pub split: String,
    pub blob: String,
    pub records: Vec<SampleRecord>,
}

impl DatasetManifest {
    pub fn sample_bytes(&self) -> u64 {
        (2 * self.h * self.w * 4) as u64
    }

    fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(Error::CorruptManifest(format!("unsupported version {}", self.version)));
        }
        if self.dtype != DTYPE_TAG {
            return Err(Error::CorruptManifest(format!("unsupported dtype `{}`", self.dtype)));
        }
        if self.count != self.records.len() {
            return Err(Error::CorruptManifest(format!(
                "count {} but {} records",
                self.count,
                self.records.len()
            )));
        }
        for pair in self.records.windows(2) {
            if pair[1].offset <= pair[0].offset {
                return Err(Error::CorruptManifest(format!(
                    "offsets not strictly increasing at `{}`",
                    pair[1].id
                )));
            }
        }
        let step = self.sample_bytes();
        for (i, r) in self.records.iter().enumerate() {
            if r.offset != i as u64 * step {
                return Err(Error::StoredShapeMismatch(format!(
                    "record `{}` at byte {} does not match {}x{} samples ({} bytes each)",
                    r.id, r.offset, self.h, self.w, step
                )));
            }
            if !(r.norm_scale > 0.0) {
                return Err(Error::CorruptManifest(format!("record `{}` has norm_scale {}", r.id, r.norm_scale)));
            }
        }
        Ok(())
    }
}

/// Writes `samples` into directory `dir` (created if needed).
pub fn dataset_write<T: Scalar>(samples: &[Sample<T>], dir: &Path, split: &str) -> Result<DatasetManifest> {
    let (h, w) = samples.first().map(|s| s.target.dims()).unwrap_or((0, 0));
    for s in samples {
        if s.target.dims() != (h, w) {
            return Err(shape_err!("sample `{}` is {:?}, dataset is {h}x{w}", s.id, s.target.dims()));
        }
    }
    fs::create_dir_all(dir)?;
    let mut blob = BufWriter::new(File::create(dir.join(BLOB_FILE))?);
    let mut records = Vec::with_capacity(samples.len());
    let step = (2 * h * w * 4) as u64;
    let mut buf = Vec::with_capacity(step as usize);
    for (i, s) in samples.iter().enumerate() {
        buf.clear();
        for &v in s.target.data() {
            buf.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
        }
        blob.write_all(&buf)?;
        records.push(SampleRecord { id: s.id.clone(), offset: i as u64 * step, norm_scale: s.norm_scale });
    }
    blob.flush()?;
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        h,
        w,
        count: samples.len(),
        dtype: DTYPE_TAG.into(),
        split: split.into(),
        blob: BLOB_FILE.into(),
        records,
    };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Streaming reader over a dataset directory.
pub struct DatasetReader<T> {
    manifest: DatasetManifest,
    blob: BufReader<File>,
    next: usize,
    _scalar: PhantomData<T>,
}

pub fn read_manifest(dir: &Path) -> Result<DatasetManifest> {
    let bytes = fs::read(dir.join(MANIFEST_FILE))?;
    let m: DatasetManifest =
        serde_json::from_slice(&bytes).map_err(|e| Error::CorruptManifest(format!("{}: {e}", dir.display())))?;
    m.validate()?;
    Ok(m)
}

/// Opens a dataset for streaming. Validates the manifest and the blob size.
pub fn dataset_read<T: Scalar>(dir: &Path) -> Result<DatasetReader<T>> {
    let manifest = read_manifest(dir)?;
    let blob_path: PathBuf = dir.join(&manifest.blob);
    let file = File::open(&blob_path)?;
    let actual = file.metadata()?.len();
    let expected = manifest.sample_bytes() * manifest.count as u64;
    if actual < expected {
        return Err(Error::TruncatedPayload { expected, actual });
    }
    Ok(DatasetReader { manifest, blob: BufReader::new(file), next: 0, _scalar: PhantomData })
}

/// Reads a whole dataset into memory.
pub fn dataset_load<T: Scalar>(dir: &Path) -> Result<Vec<Sample<T>>> {
    dataset_read(dir)?.collect()
}

impl<T> DatasetReader<T> {
    pub fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }
}

impl<T: Scalar> Iterator for DatasetReader<T> {
    type Item = Result<Sample<T>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.manifest.count {
            return None;
        }
        let rec = self.manifest.records[self.next].clone();
        self.next += 1;
        let (h, w) = (self.manifest.h, self.manifest.w);
        let mut bytes = vec![0u8; self.manifest.sample_bytes() as usize];
        if let Err(e) = self.blob.read_exact(&mut bytes) {
            return Some(Err(Error::Io(e)));
        }
        let data: Vec<T> = bytes.chunks_exact(4).map(|c| T::of(f32::read_le(c) as f64)).collect();
        Some(
            Tensor::new(&[2, h, w], data)
                .and_then(ComplexImage::from_tensor)
                .map(|target| Sample { target, norm_scale: rec.norm_scale, id: rec.id }),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::phantom_generate;

    #[test]
    fn bit_exact_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let samples: Vec<Sample<f32>> = (0..10).map(|s| phantom_generate(16, 12, s, 2).unwrap()).collect();
        let m = dataset_write(&samples, dir.path(), "train").unwrap();
        assert_eq!(m.count, 10);
        let back = dataset_load::<f32>(dir.path()).unwrap();
        assert_eq!(back.len(), 10);
        for (a, b) in samples.iter().zip(&back) {
            assert_eq!(a.id, b.id);
            let bits = |s: &Sample<f32>| s.target.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a), bits(b));
        }
    }

    #[test]
    fn truncated_blob() {
        let dir = tempfile::tempdir().unwrap();
        let samples: Vec<Sample<f32>> = (0..3).map(|s| phantom_generate(8, 8, s, 0).unwrap()).collect();
        dataset_write(&samples, dir.path(), "test").unwrap();
        let p = dir.path().join(BLOB_FILE);
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 10]).unwrap();
        match dataset_read::<f32>(dir.path()) {
            Err(Error::TruncatedPayload { expected, actual }) => {
                assert_eq!(expected, 3 * 2 * 64 * 4);
                assert_eq!(actual, expected - 10);
            }
            other => panic!("expected truncated payload, got {:?}", other.err()),
        }
    }

    #[test]
    fn corrupt_manifest_and_shape_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let samples: Vec<Sample<f64>> = (0..2).map(|s| phantom_generate(8, 8, s, 0).unwrap()).collect();
        dataset_write(&samples, dir.path(), "val").unwrap();
        let mp = dir.path().join(MANIFEST_FILE);
        let good = fs::read_to_string(&mp).unwrap();

        fs::write(&mp, "{ not json").unwrap();
        assert!(matches!(dataset_read::<f64>(dir.path()), Err(Error::CorruptManifest(_))));

        let mut m: DatasetManifest = serde_json::from_str(&good).unwrap();
        m.records[1].offset = 0;
        fs::write(&mp, serde_json::to_string(&m).unwrap()).unwrap();
        assert!(matches!(dataset_read::<f64>(dir.path()), Err(Error::CorruptManifest(_))));

        let mut m: DatasetManifest = serde_json::from_str(&good).unwrap();
        m.h = 4;
        fs::write(&mp, serde_json::to_string(&m).unwrap()).unwrap();
        assert!(matches!(dataset_read::<f64>(dir.path()), Err(Error::StoredShapeMismatch(_))));

        let mixed = vec![samples[0].clone(), phantom_generate::<f64>(12, 8, 0, 0).unwrap()];
        assert!(matches!(dataset_write(&mixed, dir.path(), "x"), Err(Error::Shape(_))));
    }

    #[test]
    fn empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let m = dataset_write::<f32>(&[], dir.path(), "test").unwrap();
        assert_eq!(m.count, 0);
        assert_eq!(dataset_read::<f32>(dir.path()).unwrap().count(), 0);
    }
}
