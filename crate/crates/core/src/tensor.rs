//! Dense rank-4 video tensor and the LCT1 binary interchange format.
//!
//! Layout is row-major with `(c, t, h, w)` strides, `w` fastest. All samples
//! are stored little-endian on disk regardless of host order.
//!
//! LCT1 layout (see `docs/formats.md`):
//! ```text
//! magic "LCT1" (4) | dtype tag (1) | element count u64 LE (8)
//! | C,T,H,W as u64 LE (32) | payload: raw LE samples, row-major
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LCT1_MAGIC: &[u8; 4] = b"LCT1";
/// Fixed header size in bytes: magic + dtype + count + four dims.
pub const LCT1_HEADER_LEN: usize = 4 + 1 + 8 + 32;

/// Sample type tag used by the on-disk formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn tag(self) -> u8 {
        match self {
            Dtype::F32 => 0,
            Dtype::F64 => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Dtype::F32),
            1 => Ok(Dtype::F64),
            other => Err(Error::format("dtype", format!("unknown dtype tag {other}"))),
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

impl std::fmt::Display for Dtype {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Dtype::F32 => write!(f, "f32"),
            Dtype::F64 => write!(f, "f64"),
        }
    }
}

/// Scalar sample type. Arithmetic inside the library goes through `f64`;
/// `f32` tensors round once per stored element.
pub trait Element: Copy + PartialEq + std::fmt::Debug + Send + Sync + 'static {
    const DTYPE: Dtype;
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;
    fn is_finite(self) -> bool;
}

impl Element for f32 {
    const DTYPE: Dtype = Dtype::F32;
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().unwrap())
    }
    fn is_finite(self) -> bool {
        f32::is_finite(self)
    }
}

impl Element for f64 {
    const DTYPE: Dtype = Dtype::F64;
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().unwrap())
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

/// `(channels, time, height, width)` extents, each at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub c: usize,
    pub t: usize,
    pub h: usize,
    pub w: usize,
}

impl Shape {
    pub fn new(c: usize, t: usize, h: usize, w: usize) -> Self {
        Shape { c, t, h, w }
    }

    pub fn volume(&self) -> usize {
        self.c * self.t * self.h * self.w
    }

    /// Flat index of `(c, t, h, w)`, w fastest.
    #[inline]
    pub fn index(&self, c: usize, t: usize, h: usize, w: usize) -> usize {
        ((c * self.t + t) * self.h + h) * self.w + w
    }

    pub fn validate(&self) -> Result<()> {
        if self.c == 0 || self.t == 0 || self.h == 0 || self.w == 0 {
            return Err(Error::Shape(format!(
                "all extents must be >= 1, got ({}, {}, {}, {})",
                self.c, self.t, self.h, self.w
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {}, {})", self.c, self.t, self.h, self.w)
    }
}

/// Dense rank-4 tensor over `T`. Values are immutable after construction;
/// operations return new tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoTensor<T: Element> {
    shape: Shape,
    data: Vec<T>,
}

impl<T: Element> VideoTensor<T> {
    pub fn new(shape: Shape, data: Vec<T>) -> Result<Self> {
        shape.validate()?;
        if data.len() != shape.volume() {
            return Err(Error::Shape(format!(
                "data length {} does not match shape {} volume {}",
                data.len(),
                shape,
                shape.volume()
            )));
        }
        Ok(VideoTensor { shape, data })
    }

    pub fn zeros(shape: Shape) -> Self {
        VideoTensor {
            shape,
            data: vec![T::from_f64(0.0); shape.volume()],
        }
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(shape.volume());
        for c in 0..shape.c {
            for t in 0..shape.t {
                for h in 0..shape.h {
                    for w in 0..shape.w {
                        data.push(T::from_f64(f(c, t, h, w)));
                    }
                }
            }
        }
        VideoTensor { shape, data }
    }

    pub fn constant(shape: Shape, value: f64) -> Self {
        VideoTensor {
            shape,
            data: vec![T::from_f64(value); shape.volume()],
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn at(&self, c: usize, t: usize, h: usize, w: usize) -> f64 {
        self.data[self.shape.index(c, t, h, w)].to_f64()
    }

    /// Contiguous samples of one channel.
    pub fn channel(&self, c: usize) -> &[T] {
        let n = self.shape.t * self.shape.h * self.shape.w;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        VideoTensor {
            shape: self.shape,
            data: self.data.iter().map(|x| T::from_f64(f(x.to_f64()))).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Sum of squared samples, accumulated in f64.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|x| x.to_f64() * x.to_f64()).sum()
    }

    pub fn cast<U: Element>(&self) -> VideoTensor<U> {
        VideoTensor {
            shape: self.shape,
            data: self.data.iter().map(|x| U::from_f64(x.to_f64())).collect(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let mut buf = Vec::with_capacity(LCT1_HEADER_LEN + T::DTYPE.size() * self.data.len());
        buf.extend_from_slice(LCT1_MAGIC);
        buf.push(T::DTYPE.tag());
        buf.extend_from_slice(&(self.data.len() as u64).to_le_bytes());
        for dim in [self.shape.c, self.shape.t, self.shape.h, self.shape.w] {
            buf.extend_from_slice(&(dim as u64).to_le_bytes());
        }
        for &x in &self.data {
            x.write_le(&mut buf);
        }
        out.write_all(&buf).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        match DynTensor::load(path)? {
            DynTensor::F32(t) if T::DTYPE == Dtype::F32 => {
                Ok(VideoTensor::new(t.shape, t.data.iter().map(|x| T::from_f64(x.to_f64())).collect())?)
            }
            DynTensor::F64(t) if T::DTYPE == Dtype::F64 => {
                Ok(VideoTensor::new(t.shape, t.data.iter().map(|x| T::from_f64(x.to_f64())).collect())?)
            }
            other => Err(Error::format(
                "dtype",
                format!("expected {}, file holds {}", T::DTYPE, other.dtype()),
            )),
        }
    }
}

/// Channel-wise concatenation; all parts must share `(T, H, W)`.
pub fn concat_channels<T: Element>(parts: &[VideoTensor<T>]) -> Result<VideoTensor<T>> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Shape("concat_channels needs at least one part".into()))?;
    let base = first.shape();
    let mut total_c = 0;
    for (k, p) in parts.iter().enumerate() {
        let s = p.shape();
        if (s.t, s.h, s.w) != (base.t, base.h, base.w) {
            return Err(Error::Shape(format!(
                "part {k} has shape {s}, expected (T, H, W) = ({}, {}, {})",
                base.t, base.h, base.w
            )));
        }
        total_c += s.c;
    }
    let shape = Shape::new(total_c, base.t, base.h, base.w);
    let mut data = Vec::with_capacity(shape.volume());
    for p in parts {
        data.extend_from_slice(p.data());
    }
    VideoTensor::new(shape, data)
}

/// Exact inverse of [`concat_channels`] for the given channel partition.
pub fn split_channels<T: Element>(
    t: &VideoTensor<T>,
    sizes: &[usize],
) -> Result<Vec<VideoTensor<T>>> {
    let total: usize = sizes.iter().sum();
    if total != t.shape().c {
        return Err(Error::Shape(format!(
            "channel sizes sum to {total}, tensor has {} channels",
            t.shape().c
        )));
    }
    if sizes.iter().any(|&s| s == 0) {
        return Err(Error::Shape("channel sizes must be >= 1".into()));
    }
    let per_channel = t.shape().t * t.shape().h * t.shape().w;
    let mut out = Vec::with_capacity(sizes.len());
    let mut offset = 0;
    for &c in sizes {
        let shape = Shape::new(c, t.shape().t, t.shape().h, t.shape().w);
        let data = t.data()[offset * per_channel..(offset + c) * per_channel].to_vec();
        out.push(VideoTensor::new(shape, data)?);
        offset += c;
    }
    Ok(out)
}

/// Runtime-typed tensor, used at the I/O boundary where the dtype comes from
/// a file header or a CLI flag.
#[derive(Debug, Clone)]
pub enum DynTensor {
    F32(VideoTensor<f32>),
    F64(VideoTensor<f64>),
}

impl DynTensor {
    pub fn dtype(&self) -> Dtype {
        match self {
            DynTensor::F32(_) => Dtype::F32,
            DynTensor::F64(_) => Dtype::F64,
        }
    }

    pub fn shape(&self) -> Shape {
        match self {
            DynTensor::F32(t) => t.shape(),
            DynTensor::F64(t) => t.shape(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        match self {
            DynTensor::F32(t) => t.save(path),
            DynTensor::F64(t) => t.save(path),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = BufReader::new(file);
        let mut bytes = Vec::new();
        reader
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < LCT1_HEADER_LEN {
            return Err(Error::format(
                "header",
                format!("file is {} bytes, header needs {}", bytes.len(), LCT1_HEADER_LEN),
            ));
        }
        if &bytes[0..4] != LCT1_MAGIC {
            return Err(Error::format("magic", format!("expected \"LCT1\", got {:?}", &bytes[0..4])));
        }
        let dtype = Dtype::from_tag(bytes[4])?;
        let count = u64::from_le_bytes(bytes[5..13].try_into().unwrap());
        let mut dims = [0u64; 4];
        for (i, d) in dims.iter_mut().enumerate() {
            *d = u64::from_le_bytes(bytes[13 + i * 8..21 + i * 8].try_into().unwrap());
        }
        let volume = dims
            .iter()
            .try_fold(1u64, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::format("dims", "dimension product overflows u64".to_string()))?;
        if volume != count {
            return Err(Error::format(
                "count",
                format!("element count {count} does not match dims product {volume}"),
            ));
        }
        if volume as usize as u64 != volume {
            return Err(Error::format("dims", "dimension product overflows usize".to_string()));
        }
        let shape = Shape::new(dims[0] as usize, dims[1] as usize, dims[2] as usize, dims[3] as usize);
        shape.validate()?;
        let payload = &bytes[LCT1_HEADER_LEN..];
        let expected = shape.volume() * dtype.size();
        if payload.len() != expected {
            return Err(Error::format(
                "truncated",
                format!("payload is {} bytes, dims require {expected}", payload.len()),
            ));
        }
        match dtype {
            Dtype::F32 => {
                let data = payload.chunks_exact(4).map(f32::read_le).collect();
                Ok(DynTensor::F32(VideoTensor::new(shape, data)?))
            }
            Dtype::F64 => {
                let data = payload.chunks_exact(8).map(f64::read_le).collect();
                Ok(DynTensor::F64(VideoTensor::new(shape, data)?))
            }
        }
    }
}
