//! Raw tensor container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   8 bytes  "S2VDTNSR"
//! version u32      1
//! ndim    u32
//! dims    ndim x u32
//! dtype   u32      0 = f32, 1 = f64
//! data    row-major elements
//! ```

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{ArrayD, IxDyn};
use thiserror::Error;

use super::clip::VideoClip;

pub const MAGIC: &[u8; 8] = b"S2VDTNSR";
pub const VERSION: u32 = 1;

/// Upper bound on dimensions and element counts accepted from a header.
const MAX_NDIM: usize = 16;
const MAX_ELEMENTS: u64 = 1 << 34;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic bytes {0:?}, not a tensor container")]
    BadMagic([u8; 8]),
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u32),
    #[error("unknown dtype code {0}")]
    UnknownDtype(u32),
    #[error("dimension overflow: {0}")]
    DimensionOverflow(String),
    #[error("truncated container: expected {expected} data bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("container does not hold a video clip: {0}")]
    NotAClip(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DType {
    F32,
    F64,
}

impl DType {
    pub fn code(self) -> u32 {
        match self {
            DType::F32 => 0,
            DType::F64 => 1,
        }
    }

    pub fn from_code(code: u32) -> Result<Self, ContainerError> {
        match code {
            0 => Ok(DType::F32),
            1 => Ok(DType::F64),
            other => Err(ContainerError::UnknownDtype(other)),
        }
    }

    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }
}

/// An n-dimensional array as stored in a container.
#[derive(Clone, Debug, PartialEq)]
pub enum TensorData {
    F32(ArrayD<f32>),
    F64(ArrayD<f64>),
}

impl TensorData {
    pub fn shape(&self) -> &[usize] {
        match self {
            TensorData::F32(a) => a.shape(),
            TensorData::F64(a) => a.shape(),
        }
    }

    pub fn dtype(&self) -> DType {
        match self {
            TensorData::F32(_) => DType::F32,
            TensorData::F64(_) => DType::F64,
        }
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, ContainerError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => ContainerError::Truncated { expected: 4, found: 0 },
        _ => ContainerError::Io(e),
    })?;
    Ok(u32::from_le_bytes(buf))
}

pub fn encode<W: Write>(w: &mut W, tensor: &TensorData) -> Result<(), ContainerError> {
    let shape = tensor.shape();
    if shape.len() > MAX_NDIM {
        return Err(ContainerError::DimensionOverflow(format!("{} dimensions", shape.len())));
    }
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(shape.len() as u32).to_le_bytes())?;
    for &d in shape {
        let d = u32::try_from(d)
            .map_err(|_| ContainerError::DimensionOverflow(format!("dimension {d} exceeds u32")))?;
        w.write_all(&d.to_le_bytes())?;
    }
    w.write_all(&tensor.dtype().code().to_le_bytes())?;
    match tensor {
        TensorData::F32(a) => {
            for v in a.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        TensorData::F64(a) => {
            for v in a.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn decode<R: Read>(r: &mut R) -> Result<TensorData, ContainerError> {
    let mut magic = [0u8; 8];
    let mut got = 0;
    while got < 8 {
        let k = r.read(&mut magic[got..])?;
        if k == 0 {
            break;
        }
        got += k;
    }
    if got < 8 || &magic != MAGIC {
        return Err(ContainerError::BadMagic(magic));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(ContainerError::UnsupportedVersion(version));
    }
    let ndim = read_u32(r)? as usize;
    if ndim > MAX_NDIM {
        return Err(ContainerError::DimensionOverflow(format!("{ndim} dimensions")));
    }
    let mut dims = Vec::with_capacity(ndim);
    let mut count: u64 = 1;
    for _ in 0..ndim {
        let d = read_u32(r)? as u64;
        count = count
            .checked_mul(d)
            .filter(|&c| c <= MAX_ELEMENTS)
            .ok_or_else(|| ContainerError::DimensionOverflow(format!("element count overflows at dim {d}")))?;
        dims.push(d as usize);
    }
    let dtype = DType::from_code(read_u32(r)?)?;
    let expected = count * dtype.size() as u64;
    let mut bytes = Vec::new();
    r.take(expected).read_to_end(&mut bytes)?;
    if (bytes.len() as u64) < expected {
        return Err(ContainerError::Truncated { expected, found: bytes.len() as u64 });
    }
    let shape = IxDyn(&dims);
    let tensor = match dtype {
        DType::F32 => {
            let data = bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            TensorData::F32(ArrayD::from_shape_vec(shape, data).expect("length checked"))
        }
        DType::F64 => {
            let data = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect();
            TensorData::F64(ArrayD::from_shape_vec(shape, data).expect("length checked"))
        }
    };
    Ok(tensor)
}

pub fn write_tensor(path: impl AsRef<Path>, tensor: &TensorData) -> Result<(), ContainerError> {
    let mut w = BufWriter::new(File::create(path)?);
    encode(&mut w, tensor)?;
    w.flush()?;
    Ok(())
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<TensorData, ContainerError> {
    let mut r = BufReader::new(File::open(path)?);
    decode(&mut r)
}

/// Writes a clip as a 4-D `f32` container with layout (frames, channels, height, width).
pub fn write_tensor_container(path: impl AsRef<Path>, clip: &VideoClip) -> Result<(), ContainerError> {
    write_tensor(path, &TensorData::F32(clip.data().clone().into_dyn()))
}

pub fn read_tensor_container(path: impl AsRef<Path>) -> Result<VideoClip, ContainerError> {
    let data = match read_tensor(path)? {
        TensorData::F32(a) => a,
        TensorData::F64(a) => a.mapv(|v| v as f32),
    };
    let data = data
        .into_dimensionality()
        .map_err(|_| ContainerError::NotAClip("expected 4 dimensions".into()))?;
    VideoClip::new(data).map_err(|e| ContainerError::NotAClip(e.to_string()))
}
