//! MNIST IDX files (big-endian).

use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt};

use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// A stack of 8-bit grayscale images.
#[derive(Debug, Clone, PartialEq)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn len(&self) -> usize {
        self.pixels.len() / (self.rows * self.cols).max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn image(&self, index: usize) -> &[u8] {
        let size = self.rows * self.cols;
        &self.pixels[index * size..(index + 1) * size]
    }
}

fn header(cur: &mut Cursor<&[u8]>) -> Result<u32> {
    cur.read_u32::<BigEndian>()
        .map_err(|_| Error::BadIdxFile("missing header".into()))
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    let mut cur = Cursor::new(bytes);
    let magic = header(&mut cur)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::BadIdxFile(format!("image magic {magic:#010x}")));
    }
    let count = header(&mut cur)? as usize;
    let rows = header(&mut cur)? as usize;
    let cols = header(&mut cur)? as usize;
    let size = count
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or_else(|| Error::BadIdxFile("dimensions overflow".into()))?;
    let mut pixels = vec![0u8; size];
    cur.read_exact(&mut pixels)
        .map_err(|_| Error::BadIdxFile(format!("expected {size} pixel bytes")))?;
    Ok(IdxImages { rows, cols, pixels })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let mut cur = Cursor::new(bytes);
    let magic = header(&mut cur)?;
    if magic != LABELS_MAGIC {
        return Err(Error::BadIdxFile(format!("label magic {magic:#010x}")));
    }
    let count = header(&mut cur)? as usize;
    let mut labels = vec![0u8; count];
    cur.read_exact(&mut labels)
        .map_err(|_| Error::BadIdxFile(format!("expected {count} labels")))?;
    Ok(labels)
}

pub fn read_idx_images(path: impl AsRef<Path>) -> Result<IdxImages> {
    parse_idx_images(&std::fs::read(path)?)
}

pub fn read_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    parse_idx_labels(&std::fs::read(path)?)
}
