//! Binary checkpoint format.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic    8 bytes  "BHAVCKPT"
//! version  u32      currently 1
//! hp_len   u32      length of the JSON-encoded hyperparameters
//! hp       hp_len bytes
//! count    u32      number of arrays
//! per array:
//!   name_len u32, name bytes (UTF-8)
//!   rank u32, extents (u64 each)
//!   data (f32 little-endian, row-major)
//! ```
//!
//! Arrays are stored at 32-bit precision; a save/load round trip therefore
//! reproduces parameters exactly at that precision. Loading validates the
//! magic, version, array names, and shapes against the stored config, and
//! rejects truncated or oversized files without returning partial state.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{expected_shapes, HyperParams, ModelParams};
use crate::tensor::Tensor;

const MAGIC: &[u8; 8] = b"BHAVCKPT";
const VERSION: u32 = 1;

/// Serialize parameters and their config to `path`.
pub fn save_checkpoint(params: &ModelParams, hp: &HyperParams, path: &Path) -> Result<()> {
    let bytes = encode(params, hp)?;
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))
}

/// Deserialize parameters and config from `path`.
pub fn load_checkpoint(path: &Path) -> Result<(ModelParams, HyperParams)> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .map_err(|e| Error::io(path, e))?
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub(crate) fn encode(params: &ModelParams, hp: &HyperParams) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let hp_json = serde_json::to_vec(hp)
        .map_err(|e| Error::Checkpoint(format!("cannot encode config: {e}")))?;
    out.extend_from_slice(&(hp_json.len() as u32).to_le_bytes());
    out.extend_from_slice(&hp_json);

    let arrays = params.arrays();
    out.extend_from_slice(&(arrays.len() as u32).to_le_bytes());
    for (name, tensor) in arrays {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(tensor.shape().len() as u32).to_le_bytes());
        for &extent in tensor.shape() {
            out.extend_from_slice(&(extent as u64).to_le_bytes());
        }
        for &v in tensor.data() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.at + n > self.bytes.len() {
            return Err(Error::Checkpoint(format!(
                "truncated while reading {what} (need {n} bytes at offset {})",
                self.at
            )));
        }
        let slice = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(slice)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub(crate) fn decode(bytes: &[u8]) -> Result<(ModelParams, HyperParams)> {
    let mut r = Reader { bytes, at: 0 };
    let magic = r.take(MAGIC.len(), "magic")?;
    if magic != MAGIC {
        return Err(Error::Checkpoint("bad magic string".into()));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported version {version} (expected {VERSION})"
        )));
    }
    let hp_len = r.u32("config length")? as usize;
    let hp_bytes = r.take(hp_len, "config")?;
    let hp: HyperParams = serde_json::from_slice(hp_bytes)
        .map_err(|e| Error::Checkpoint(format!("cannot decode config: {e}")))?;
    hp.validate()
        .map_err(|e| Error::Checkpoint(format!("stored config invalid: {e}")))?;

    let expected = expected_shapes(&hp);
    let count = r.u32("array count")? as usize;
    if count != expected.len() {
        return Err(Error::Checkpoint(format!(
            "file holds {count} arrays, config implies {}",
            expected.len()
        )));
    }

    let mut tensors: Vec<Tensor> = Vec::with_capacity(count);
    for (ename, eshape) in &expected {
        let name_len = r.u32("array name length")? as usize;
        let name_bytes = r.take(name_len, "array name")?;
        let name = std::str::from_utf8(name_bytes)
            .map_err(|_| Error::Checkpoint("array name is not UTF-8".into()))?;
        if name != ename {
            return Err(Error::Checkpoint(format!(
                "array {name:?} out of place, expected {ename:?}"
            )));
        }
        let rank = r.u32("rank")? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u64("extent")? as usize);
        }
        if &shape != eshape {
            return Err(Error::Checkpoint(format!(
                "array {name} has shape {shape:?}, config expects {eshape:?}"
            )));
        }
        let n: usize = shape.iter().product();
        let raw = r.take(n * 4, "array data")?;
        let data: Vec<f64> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Checkpoint(format!(
                "array {name} contains non-finite values"
            )));
        }
        tensors.push(Tensor::new(shape, data).map_err(|e| Error::Checkpoint(e.to_string()))?);
    }
    if r.at != bytes.len() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes after the last array",
            bytes.len() - r.at
        )));
    }

    let params = assemble(&hp, tensors)?;
    params.validate_shapes(&hp)?;
    Ok((params, hp))
}

fn assemble(hp: &HyperParams, tensors: Vec<Tensor>) -> Result<ModelParams> {
    // tensors arrive in canonical order; rebuild the structured container
    let mut params = ModelParams::init(hp)
        .map_err(|e| Error::Checkpoint(format!("cannot shape parameters: {e}")))?;
    {
        let mut slots = params.arrays_mut();
        debug_assert_eq!(slots.len(), tensors.len());
        for ((_, slot), tensor) in slots.iter_mut().zip(tensors) {
            **slot = tensor;
        }
    }
    Ok(params)
}
