//! IDX files (the MNIST container format), unsigned-byte payloads only.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const UBYTE: u8 = 0x08;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxArray {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

impl IdxArray {
    pub fn new(dims: Vec<usize>, data: Vec<u8>) -> Result<Self> {
        let len: usize = dims.iter().product();
        if len != data.len() {
            return Err(Error::Dimension(format!(
                "{} bytes for dimensions {dims:?}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    /// Number of items along the first dimension.
    pub fn len(&self) -> usize {
        self.dims.first().copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Bytes per item (product of the trailing dimensions).
    pub fn item_size(&self) -> usize {
        self.dims.iter().skip(1).product()
    }

    pub fn item(&self, i: usize) -> &[u8] {
        let n = self.item_size();
        &self.data[i * n..(i + 1) * n]
    }
}

pub fn read_idx<R: Read>(mut input: R) -> Result<IdxArray> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let magic = bytes
        .get(..4)
        .ok_or_else(|| Error::parse(bytes.len(), "truncated magic number"))?;
    if magic[..2] != [0, 0] {
        return Err(Error::parse(0, "magic number must start with two zero bytes"));
    }
    if magic[2] != UBYTE {
        return Err(Error::parse(2, format!("unsupported data type {:#04x}", magic[2])));
    }
    let ndims = magic[3] as usize;
    if ndims == 0 {
        return Err(Error::parse(3, "zero dimensions"));
    }
    let mut dims = Vec::with_capacity(ndims);
    for d in 0..ndims {
        let at = 4 + 4 * d;
        let raw = bytes
            .get(at..at + 4)
            .ok_or_else(|| Error::parse(bytes.len(), format!("truncated header at dimension {d}")))?;
        dims.push(u32::from_be_bytes(raw.try_into().unwrap()) as usize);
    }
    let start = 4 + 4 * ndims;
    let len = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::parse(4, "dimensions overflow"))?;
    let data = bytes.get(start..start + len).ok_or_else(|| {
        Error::parse(
            bytes.len(),
            format!("truncated payload: {} of {len} bytes", bytes.len() - start),
        )
    })?;
    if bytes.len() > start + len {
        return Err(Error::parse(start + len, "trailing bytes after payload"));
    }
    IdxArray::new(dims, data.to_vec())
}

pub fn write_idx<W: Write>(mut out: W, array: &IdxArray) -> Result<()> {
    out.write_all(&[0, 0, UBYTE, array.dims.len() as u8])?;
    for &d in &array.dims {
        out.write_all(&(d as u32).to_be_bytes())?;
    }
    out.write_all(&array.data)?;
    out.flush()?;
    Ok(())
}

pub fn load_idx(path: impl AsRef<Path>) -> Result<IdxArray> {
    read_idx(BufReader::new(File::open(path)?))
}

pub fn save_idx(path: impl AsRef<Path>, array: &IdxArray) -> Result<()> {
    write_idx(BufWriter::new(File::create(path)?), array)
}

/// Images (n x 28 x 28) with their labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mnist {
    pub images: IdxArray,
    pub labels: IdxArray,
}

impl Mnist {
    pub fn new(images: IdxArray, labels: IdxArray) -> Result<Self> {
        if images.dims.len() != 3 || labels.dims.len() != 1 {
            return Err(Error::Dimension(format!(
                "expected n x rows x cols images and n labels, got {:?} and {:?}",
                images.dims, labels.dims
            )));
        }
        if images.len() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        Ok(Self { images, labels })
    }

    pub fn load(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<Self> {
        Self::new(load_idx(images)?, load_idx(labels)?)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn image(&self, i: usize) -> &[u8] {
        self.images.item(i)
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels.data[i]
    }

    /// The first `n` samples.
    pub fn take(&self, n: usize) -> Self {
        let n = n.min(self.len());
        let size = self.images.item_size();
        let mut img_dims = self.images.dims.clone();
        img_dims[0] = n;
        Self {
            images: IdxArray {
                dims: img_dims,
                data: self.images.data[..n * size].to_vec(),
            },
            labels: IdxArray {
                dims: vec![n],
                data: self.labels.data[..n].to_vec(),
            },
        }
    }
}
