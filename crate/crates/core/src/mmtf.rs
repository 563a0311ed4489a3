//! MMTF tensor file format.
//!
//! Little-endian layout, no padding, no checksum:
//!
//! ```text
//! offset 0   magic bytes 0x4D 0x4D 0x54 0x46 ("MMTF")
//! offset 4   u8 version = 1
//! offset 5   u8 dtype   (1 = float32, 2 = float64, 3 = uint16)
//! offset 6   u8 ndim
//! offset 7   ndim x u32 extents, outermost first
//! then       raw row-major payload
//! ```
//!
//! A read of a write is bit-identical to the original tensor.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{AnyTensor, DType, Scalar, Tensor};

const MAGIC: [u8; 4] = *b"MMTF";
const VERSION: u8 = 1;

/// Serializes a tensor to its MMTF byte representation.
pub fn encode_tensor<T: Scalar>(t: &Tensor<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(7 + 4 * t.dims().len() + t.len() * T::DTYPE.size_bytes());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(T::DTYPE.code());
    out.push(t.dims().len() as u8);
    for &d in t.dims() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &v in t.data() {
        v.write_le(&mut out);
    }
    out
}

/// Writes a tensor to `path` in MMTF format.
pub fn write_tensor<T: Scalar>(t: &Tensor<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_tensor(t)).map_err(|e| Error::io(path, e))
}

fn format_err(offset: usize, reason: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        reason: reason.into(),
    }
}

/// Parses MMTF bytes into a tensor of whichever dtype the header declares.
pub fn decode_tensor(bytes: &[u8]) -> Result<AnyTensor> {
    if bytes.len() < 4 {
        return Err(format_err(bytes.len(), "truncated before magic"));
    }
    if bytes[0..4] != MAGIC {
        return Err(format_err(0, format!("bad magic {:02X?}", &bytes[0..4])));
    }
    if bytes.len() < 5 {
        return Err(format_err(4, "truncated before version"));
    }
    if bytes[4] != VERSION {
        return Err(format_err(4, format!("unsupported version {}", bytes[4])));
    }
    if bytes.len() < 6 {
        return Err(format_err(5, "truncated before dtype"));
    }
    let dtype = DType::from_code(bytes[5])
        .ok_or_else(|| format_err(5, format!("unknown dtype code {}", bytes[5])))?;
    if bytes.len() < 7 {
        return Err(format_err(6, "truncated before ndim"));
    }
    let ndim = bytes[6] as usize;
    if ndim == 0 {
        return Err(format_err(6, "ndim must be >= 1"));
    }
    let mut dims = Vec::with_capacity(ndim);
    let mut off = 7;
    for _ in 0..ndim {
        if bytes.len() < off + 4 {
            return Err(format_err(off, "truncated inside extents"));
        }
        let d = u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as usize;
        if d == 0 {
            return Err(format_err(off, "zero extent"));
        }
        dims.push(d);
        off += 4;
    }
    let count: usize = dims.iter().product();
    let payload = count * dtype.size_bytes();
    if bytes.len() < off + payload {
        return Err(format_err(
            bytes.len(),
            format!(
                "truncated payload: need {} bytes from offset {off}, have {}",
                payload,
                bytes.len() - off
            ),
        ));
    }
    if bytes.len() > off + payload {
        return Err(format_err(off + payload, "trailing bytes after payload"));
    }

    fn read_all<T: Scalar>(dims: Vec<usize>, bytes: &[u8], count: usize) -> Result<Tensor<T>> {
        let sz = T::DTYPE.size_bytes();
        let data = (0..count)
            .map(|i| T::read_le(&bytes[i * sz..(i + 1) * sz]))
            .collect();
        Tensor::new(dims, data)
    }

    let body = &bytes[off..];
    Ok(match dtype {
        DType::F32 => AnyTensor::F32(read_all(dims, body, count)?),
        DType::F64 => AnyTensor::F64(read_all(dims, body, count)?),
        DType::U16 => AnyTensor::U16(read_all(dims, body, count)?),
    })
}

/// Reads an MMTF tensor file.
pub fn read_tensor(path: impl AsRef<Path>) -> Result<AnyTensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tensor(&bytes)
}
