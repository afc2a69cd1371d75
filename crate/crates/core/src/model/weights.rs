//! Named-tensor weight files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic    8 bytes  "DRGRADEW"
//! version  u32      1
//! count    u32
//! count × { name_len u32, name utf-8, dtype u8 (0 f32, 1 f64), rank u32,
//!           extents u64 × rank, data little-endian }
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::{DType, Scalar, Tensor};

pub const MAGIC: &[u8; 8] = b"DRGRADEW";
pub const VERSION: u32 = 1;
const HEADER: &str = "<header>";

/// A tensor as stored, before conversion to a storage type.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTensor {
    pub name: String,
    pub dtype: DType,
    pub shape: Vec<usize>,
    pub bytes: Vec<u8>,
}

impl RawTensor {
    /// Exact when the stored dtype equals `S` or widens into it.
    pub fn to_tensor<S: Scalar>(&self) -> Result<Tensor<S>> {
        let size = self.dtype.size();
        let data: Vec<S> = if self.dtype == S::DTYPE {
            self.bytes.chunks_exact(size).map(S::read_le).collect()
        } else {
            match self.dtype {
                DType::F32 => self.bytes.chunks_exact(4).map(|b| S::from_f64(f64::from(f32::read_le(b)))).collect(),
                DType::F64 => self.bytes.chunks_exact(8).map(|b| S::from_f64(f64::read_le(b))).collect(),
            }
        };
        Tensor::new(self.shape.clone(), data).map_err(|e| weights_err(&self.name, e.to_string()))
    }
}

fn weights_err(tensor: &str, msg: impl Into<String>) -> Error {
    Error::Weights {
        tensor: tensor.to_string(),
        msg: msg.into(),
    }
}

pub fn encode<S: Scalar>(tensors: &[(&str, &Tensor<S>)]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, t) in tensors {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(S::DTYPE as u8);
        out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in t.data() {
            v.write_le(&mut out);
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, tensor: &str, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(weights_err(tensor, format!("truncated while reading {what}"))),
        }
    }

    fn u32(&mut self, tensor: &str, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, tensor, what)?.try_into().expect("4")))
    }

    fn u64(&mut self, tensor: &str, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, tensor, what)?.try_into().expect("8")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Vec<RawTensor>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8, HEADER, "magic")? != MAGIC {
        return Err(weights_err(HEADER, "bad magic bytes"));
    }
    let version = r.u32(HEADER, "version")?;
    if version != VERSION {
        return Err(weights_err(HEADER, format!("unsupported version {version}, expected {VERSION}")));
    }
    let count = r.u32(HEADER, "tensor count")? as usize;
    let mut out = Vec::with_capacity(count.min(4096));
    for i in 0..count {
        let slot = format!("#{i}");
        let len = r.u32(&slot, "name length")? as usize;
        let name = std::str::from_utf8(r.take(len, &slot, "name")?)
            .map_err(|_| weights_err(&slot, "name is not utf-8"))?
            .to_string();
        let tag = r.take(1, &name, "dtype")?[0];
        let dtype = DType::from_tag(tag).ok_or_else(|| weights_err(&name, format!("unknown dtype tag {tag}")))?;
        let rank = r.u32(&name, "rank")? as usize;
        if rank > 8 {
            return Err(weights_err(&name, format!("implausible rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank);
        let mut elems: u64 = 1;
        for _ in 0..rank {
            let d = r.u64(&name, "extent")?;
            elems = elems
                .checked_mul(d)
                .ok_or_else(|| weights_err(&name, "element count overflows"))?;
            shape.push(usize::try_from(d).map_err(|_| weights_err(&name, "extent too large"))?);
        }
        let nbytes = usize::try_from(elems)
            .ok()
            .and_then(|e| e.checked_mul(dtype.size()))
            .ok_or_else(|| weights_err(&name, "data size overflows"))?;
        let data = r.take(nbytes, &name, "data")?.to_vec();
        if out.iter().any(|t: &RawTensor| t.name == name) {
            return Err(weights_err(&name, "duplicate tensor name"));
        }
        out.push(RawTensor {
            name,
            dtype,
            shape,
            bytes: data,
        });
    }
    if r.pos != bytes.len() {
        return Err(weights_err(HEADER, format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(out)
}

pub fn read_weight_file(path: impl AsRef<Path>) -> Result<Vec<RawTensor>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// Written to a sibling temp file, then renamed into place.
pub fn write_weight_file<S: Scalar>(path: impl AsRef<Path>, tensors: &[(&str, &Tensor<S>)]) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, encode(tensors)).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
