//! Dense row-major tensor container.
//!
//! Layout is row-major with the outermost extent first; image-like tensors are
//! channel-first `(C, H, W)`. Tensors are plain values: once constructed they
//! are only mutated through `data_mut` by their single owner, so sharing
//! references across threads for reading is safe.

use num_traits::Float;

use crate::error::{Error, Result};

/// Element types storable in tensor files.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DType {
    F32,
    F64,
    U16,
}

impl DType {
    /// On-disk dtype code.
    pub const fn code(self) -> u8 {
        match self {
            DType::F32 => 1,
            DType::F64 => 2,
            DType::U16 => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(DType::F32),
            2 => Some(DType::F64),
            3 => Some(DType::U16),
            _ => None,
        }
    }

    pub const fn size_bytes(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
            DType::U16 => 2,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            DType::F32 => "float32",
            DType::F64 => "float64",
            DType::U16 => "uint16",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "float32" => Some(DType::F32),
            "float64" => Some(DType::F64),
            "uint16" => Some(DType::U16),
            _ => None,
        }
    }
}

/// Element trait tying a Rust scalar to its dtype and little-endian encoding.
pub trait Scalar: Copy + PartialEq + PartialOrd + std::fmt::Debug + Send + Sync + 'static {
    const DTYPE: DType;
    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;
}

impl Scalar for f32 {
    const DTYPE: DType = DType::F32;
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("f32 needs 4 bytes"))
    }
}

impl Scalar for f64 {
    const DTYPE: DType = DType::F64;
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("f64 needs 8 bytes"))
    }
}

impl Scalar for u16 {
    const DTYPE: DType = DType::U16;
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        u16::from_le_bytes(bytes.try_into().expect("u16 needs 2 bytes"))
    }
}

/// Dense row-major numeric grid; the carrier for maps, predictions, features
/// and weights throughout the crate.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    dims: Vec<usize>,
    data: Vec<T>,
}

impl<T: Copy> Tensor<T> {
    /// Builds a tensor, checking that `product(dims) == data.len()`, dims are
    /// non-empty and every extent is at least 1.
    pub fn new(dims: Vec<usize>, data: Vec<T>) -> Result<Self> {
        Self::check_dims(&dims)?;
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(Error::InvalidShape {
                dims,
                reason: format!("dims product {n} != data length {}", data.len()),
            });
        }
        Ok(Tensor { dims, data })
    }

    fn check_dims(dims: &[usize]) -> Result<()> {
        if dims.is_empty() {
            return Err(Error::InvalidShape {
                dims: dims.to_vec(),
                reason: "dims must be non-empty".into(),
            });
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidShape {
                dims: dims.to_vec(),
                reason: "every extent must be >= 1".into(),
            });
        }
        Ok(())
    }

    /// Constant-filled tensor. Panics on invalid dims (programmer error).
    pub fn filled(dims: Vec<usize>, value: T) -> Self {
        Self::check_dims(&dims).expect("valid dims");
        let n: usize = dims.iter().product();
        Tensor {
            dims,
            data: vec![value; n],
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Elementwise conversion, keeping the shape.
    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Tensor<U> {
        Tensor {
            dims: self.dims.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `(C, H, W)` of a rank-3 tensor.
    pub fn chw(&self) -> Result<(usize, usize, usize)> {
        if self.dims.len() != 3 {
            return Err(Error::InvalidShape {
                dims: self.dims.clone(),
                reason: "expected a rank-3 (C,H,W) tensor".into(),
            });
        }
        Ok((self.dims[0], self.dims[1], self.dims[2]))
    }

    /// `(H, W)` of a rank-2 tensor.
    pub fn hw(&self) -> Result<(usize, usize)> {
        if self.dims.len() != 2 {
            return Err(Error::InvalidShape {
                dims: self.dims.clone(),
                reason: "expected a rank-2 (H,W) tensor".into(),
            });
        }
        Ok((self.dims[0], self.dims[1]))
    }
}

impl Tensor<f32> {
    pub fn to_f64(&self) -> Tensor<f64> {
        self.map(|v| v as f64)
    }
}

impl Tensor<f64> {
    pub fn to_f32(&self) -> Tensor<f32> {
        self.map(|v| v as f32)
    }
}

/// A tensor of any supported dtype, as read back from a file.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyTensor {
    F32(Tensor<f32>),
    F64(Tensor<f64>),
    U16(Tensor<u16>),
}

impl AnyTensor {
    pub fn dtype(&self) -> DType {
        match self {
            AnyTensor::F32(_) => DType::F32,
            AnyTensor::F64(_) => DType::F64,
            AnyTensor::U16(_) => DType::U16,
        }
    }

    pub fn dims(&self) -> &[usize] {
        match self {
            AnyTensor::F32(t) => t.dims(),
            AnyTensor::F64(t) => t.dims(),
            AnyTensor::U16(t) => t.dims(),
        }
    }

    pub fn into_f32(self) -> Result<Tensor<f32>> {
        match self {
            AnyTensor::F32(t) => Ok(t),
            other => Err(Error::InvalidInput(format!(
                "expected a float32 tensor, found {}",
                other.dtype().name()
            ))),
        }
    }

    pub fn into_f64(self) -> Result<Tensor<f64>> {
        match self {
            AnyTensor::F64(t) => Ok(t),
            other => Err(Error::InvalidInput(format!(
                "expected a float64 tensor, found {}",
                other.dtype().name()
            ))),
        }
    }

    pub fn into_u16(self) -> Result<Tensor<u16>> {
        match self {
            AnyTensor::U16(t) => Ok(t),
            other => Err(Error::InvalidInput(format!(
                "expected a uint16 tensor, found {}",
                other.dtype().name()
            ))),
        }
    }

    /// Any float tensor widened to f64; errors on integer tensors.
    pub fn into_float64(self) -> Result<Tensor<f64>> {
        match self {
            AnyTensor::F32(t) => Ok(t.to_f64()),
            AnyTensor::F64(t) => Ok(t),
            AnyTensor::U16(_) => Err(Error::InvalidInput(
                "expected a float tensor, found uint16".into(),
            )),
        }
    }
}

/// Per-pixel softmax over the channel axis of an `N_cls x H x W` tensor,
/// stabilized by max-subtraction. Every pixel's channel vector sums to 1 and
/// all entries are strictly positive.
pub fn softmax_channels<T: Float>(logits: &Tensor<T>) -> Result<Tensor<T>> {
    let (c, h, w) = logits.chw()?;
    if c < 2 {
        return Err(Error::InvalidShape {
            dims: logits.dims().to_vec(),
            reason: "softmax needs at least 2 channels".into(),
        });
    }
    let hw = h * w;
    let src = logits.data();
    let mut out = vec![T::zero(); c * hw];
    for px in 0..hw {
        let mut max = src[px];
        for ch in 1..c {
            let v = src[ch * hw + px];
            if v > max {
                max = v;
            }
        }
        let mut sum = T::zero();
        for ch in 0..c {
            let e = (src[ch * hw + px] - max).exp();
            out[ch * hw + px] = e;
            sum = sum + e;
        }
        for ch in 0..c {
            out[ch * hw + px] = out[ch * hw + px] / sum;
        }
    }
    Tensor::new(vec![c, h, w], out)
}
