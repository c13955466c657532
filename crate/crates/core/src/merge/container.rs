//! Length-prefixed JSON header + flat byte buffer container (the layout used
//! by `.safetensors` files).
//!
//! ```text
//! [u64 LE: N][N bytes JSON header][data buffer]
//! ```
//!
//! The header maps each tensor name to `{"dtype", "shape", "data_offsets"}`
//! with offsets relative to the start of the data buffer, plus an optional
//! `"__metadata__"` map of strings. Tensors must tile the buffer exactly.

use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{Dtype, MergeError};
use crate::io::write_atomic;

const METADATA_KEY: &str = "__metadata__";
const MAX_HEADER_LEN: u64 = 100 * 1024 * 1024;

/// One named tensor: dtype, shape and little-endian element bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorRecord {
    name: String,
    dtype: Dtype,
    shape: Vec<usize>,
    data: Vec<u8>,
}

impl TensorRecord {
    pub fn new(
        name: impl Into<String>,
        dtype: Dtype,
        shape: Vec<usize>,
        data: Vec<u8>,
    ) -> Result<Self, MergeError> {
        let name = name.into();
        if name.is_empty() {
            return Err(MergeError::InvalidTensor("tensor name is empty".into()));
        }
        let expected = byte_len(dtype, &shape)
            .ok_or_else(|| MergeError::InvalidTensor(format!("{name}: shape overflows")))?;
        if expected != data.len() {
            return Err(MergeError::InvalidTensor(format!(
                "{name}: {} bytes for {dtype} {shape:?}, expected {expected}",
                data.len()
            )));
        }
        Ok(Self { name, dtype, shape, data })
    }

    pub fn from_f32(name: impl Into<String>, shape: Vec<usize>, values: &[f32]) -> Result<Self, MergeError> {
        let data = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        Self::new(name, Dtype::F32, shape, data)
    }

    pub fn from_f64(name: impl Into<String>, shape: Vec<usize>, values: &[f64]) -> Result<Self, MergeError> {
        let data = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        Self::new(name, Dtype::F64, shape, data)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dtype(&self) -> Dtype {
        self.dtype
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn element_count(&self) -> usize {
        self.shape.iter().product()
    }

    /// Elements widened to f64; `None` for non-floating dtypes.
    pub fn to_f64_vec(&self) -> Option<Vec<f64>> {
        let out = match self.dtype {
            Dtype::F64 => self.data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect(),
            Dtype::F32 => self
                .data
                .chunks_exact(4)
                .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
                .collect(),
            Dtype::F16 => self
                .data
                .chunks_exact(2)
                .map(|c| half::f16::from_le_bytes([c[0], c[1]]).to_f64())
                .collect(),
            Dtype::BF16 => self
                .data
                .chunks_exact(2)
                .map(|c| half::bf16::from_le_bytes([c[0], c[1]]).to_f64())
                .collect(),
            _ => return None,
        };
        Some(out)
    }

    pub(crate) fn with_data(&self, data: Vec<u8>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self { name: self.name.clone(), dtype: self.dtype, shape: self.shape.clone(), data }
    }
}

fn byte_len(dtype: Dtype, shape: &[usize]) -> Option<usize> {
    shape.iter().try_fold(dtype.size(), |acc, &d| acc.checked_mul(d))
}

/// Ordered set of named tensors plus string metadata.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Checkpoint {
    tensors: IndexMap<String, TensorRecord>,
    pub metadata: IndexMap<String, String>,
    /// Where the checkpoint came from (file path on load). Not serialized.
    pub origin: Option<String>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a tensor; names must be unique.
    pub fn insert(&mut self, tensor: TensorRecord) -> Result<(), MergeError> {
        if self.tensors.contains_key(tensor.name()) {
            return Err(MergeError::InvalidTensor(format!("duplicate tensor name {:?}", tensor.name())));
        }
        self.tensors.insert(tensor.name.clone(), tensor);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&TensorRecord> {
        self.tensors.get(name)
    }

    pub fn tensors(&self) -> impl ExactSizeIterator<Item = &TensorRecord> {
        self.tensors.values()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Serializes to container bytes. Tensors are laid out in map order.
    pub fn to_bytes(&self) -> Result<Vec<u8>, MergeError> {
        let mut header = Map::new();
        if !self.metadata.is_empty() {
            let meta: Map<String, Value> =
                self.metadata.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
            header.insert(METADATA_KEY.to_string(), Value::Object(meta));
        }
        let mut offset = 0usize;
        for t in self.tensors.values() {
            let end = offset + t.data.len();
            let entry = HeaderEntry { dtype: t.dtype.as_str().to_string(), shape: t.shape.clone(), data_offsets: [offset, end] };
            header.insert(t.name.clone(), serde_json::to_value(entry).expect("header entry serializes"));
            offset = end;
        }
        let mut header_bytes = serde_json::to_vec(&Value::Object(header))
            .map_err(|e| MergeError::Format(e.to_string()))?;
        // Pad with spaces so the data buffer starts 8-byte aligned.
        let padded = header_bytes.len().div_ceil(8) * 8;
        header_bytes.resize(padded, b' ');

        let mut out = Vec::with_capacity(8 + header_bytes.len() + offset);
        out.extend_from_slice(&(header_bytes.len() as u64).to_le_bytes());
        out.extend_from_slice(&header_bytes);
        for t in self.tensors.values() {
            out.extend_from_slice(&t.data);
        }
        Ok(out)
    }

    /// Parses container bytes, validating the header and data layout.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, MergeError> {
        let format = |msg: String| MergeError::Format(msg);
        if bytes.len() < 8 {
            return Err(format(format!("file is {} bytes, too short for a header length", bytes.len())));
        }
        let header_len = u64::from_le_bytes(bytes[..8].try_into().unwrap());
        if header_len > MAX_HEADER_LEN {
            return Err(format(format!("header length {header_len} exceeds the {MAX_HEADER_LEN} byte limit")));
        }
        let header_end = 8usize
            .checked_add(header_len as usize)
            .filter(|end| *end <= bytes.len())
            .ok_or_else(|| format(format!("header length {header_len} points past end of file")))?;
        let header_text = std::str::from_utf8(&bytes[8..header_end])
            .map_err(|e| format(format!("header is not UTF-8: {e}")))?;
        let header: Map<String, Value> = serde_json::from_str(header_text.trim_end_matches(' '))
            .map_err(|e| format(format!("header is not a JSON object: {e}")))?;
        let buffer = &bytes[header_end..];

        let mut metadata = IndexMap::new();
        let mut entries = Vec::with_capacity(header.len());
        for (name, value) in header {
            if name == METADATA_KEY {
                let Value::Object(meta) = value else {
                    return Err(format("__metadata__ must be an object".into()));
                };
                for (k, v) in meta {
                    let Value::String(v) = v else {
                        return Err(format(format!("metadata value for {k:?} is not a string")));
                    };
                    metadata.insert(k, v);
                }
                continue;
            }
            let entry: HeaderEntry = serde_json::from_value(value)
                .map_err(|e| format(format!("tensor {name:?}: {e}")))?;
            let dtype: Dtype = entry.dtype.parse()?;
            entries.push((name, dtype, entry.shape, entry.data_offsets));
        }

        // Tensors must tile the buffer: sorted by offset, no gaps or overlaps.
        entries.sort_by_key(|(_, _, _, [begin, end])| (*begin, *end));
        let mut cursor = 0usize;
        let mut ckpt = Checkpoint { metadata, ..Checkpoint::default() };
        for (name, dtype, shape, [begin, end]) in entries {
            if begin > end || end > buffer.len() {
                return Err(format(format!(
                    "tensor {name:?}: offsets [{begin}, {end}) out of bounds for a {} byte buffer",
                    buffer.len()
                )));
            }
            if begin < cursor {
                return Err(format(format!("tensor {name:?}: offsets [{begin}, {end}) overlap a previous tensor")));
            }
            if begin > cursor {
                return Err(format(format!("tensor {name:?}: gap in data buffer before offset {begin}")));
            }
            let expected = byte_len(dtype, &shape)
                .ok_or_else(|| format(format!("tensor {name:?}: shape overflows")))?;
            if end - begin != expected {
                return Err(format(format!(
                    "tensor {name:?}: {} bytes for {dtype} {shape:?}, expected {expected}",
                    end - begin
                )));
            }
            ckpt.insert(TensorRecord { name, dtype, shape, data: buffer[begin..end].to_vec() })?;
            cursor = end;
        }
        if cursor != buffer.len() {
            return Err(format(format!(
                "{} trailing bytes after the last tensor",
                buffer.len() - cursor
            )));
        }
        Ok(ckpt)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderEntry {
    dtype: String,
    shape: Vec<usize>,
    data_offsets: [usize; 2],
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, MergeError> {
    let bytes = std::fs::read(path).map_err(|e| MergeError::Io(format!("{}: {e}", path.display())))?;
    let mut ckpt = Checkpoint::from_bytes(&bytes)?;
    ckpt.origin = Some(path.display().to_string());
    Ok(ckpt)
}

/// Writes the checkpoint via a temporary file and rename.
pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<(), MergeError> {
    let bytes = ckpt.to_bytes()?;
    write_atomic(path, &bytes).map_err(|e| MergeError::Io(format!("{}: {e}", path.display())))
}
