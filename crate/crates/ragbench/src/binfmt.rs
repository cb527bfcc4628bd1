//! Little-endian binary record files shared by the embedding cache and the
//! vector index.
//!
//! Layout: 6-byte magic, `u32` dimension, `u64` record count, then `count`
//! records of `[u32 key_len, key bytes, dimension x f32]`.

use std::fs;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BinfmtError {
    #[error("bad magic: expected {expected}")]
    BadMagic { expected: &'static str },
    #[error("truncated file at byte offset {offset}")]
    Truncated { offset: usize },
    #[error("invalid key encoding at byte offset {offset}")]
    BadKey { offset: usize },
    #[error("record count {count} does not fit in memory budget")]
    ImplausibleCount { count: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One keyed vector record.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub key: String,
    pub values: Vec<f32>,
}

/// Serialize records to `path` atomically (write temp file, then rename).
pub fn write_records(
    path: &Path,
    magic: &'static str,
    dimension: u32,
    records: &[Record],
) -> Result<(), BinfmtError> {
    debug_assert_eq!(magic.len(), 6);
    let mut buf = Vec::with_capacity(18 + records.len() * (8 + dimension as usize * 4));
    buf.extend_from_slice(magic.as_bytes());
    buf.extend_from_slice(&dimension.to_le_bytes());
    buf.extend_from_slice(&(records.len() as u64).to_le_bytes());
    for record in records {
        debug_assert_eq!(record.values.len(), dimension as usize);
        buf.extend_from_slice(&(record.key.len() as u32).to_le_bytes());
        buf.extend_from_slice(record.key.as_bytes());
        for v in &record.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, &buf)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Parse a record file, verifying `magic`.
pub fn read_records(
    path: &Path,
    magic: &'static str,
) -> Result<(u32, Vec<Record>), BinfmtError> {
    let buf = fs::read(path)?;
    parse_records(&buf, magic)
}

fn parse_records(buf: &[u8], magic: &'static str) -> Result<(u32, Vec<Record>), BinfmtError> {
    if buf.len() < 6 || &buf[..6] != magic.as_bytes() {
        return Err(BinfmtError::BadMagic { expected: magic });
    }
    let mut cursor = Cursor {
        buf,
        offset: 6,
    };
    let dimension = u32::from_le_bytes(cursor.take::<4>()?);
    let count = u64::from_le_bytes(cursor.take::<8>()?);
    if count > 100_000_000 {
        return Err(BinfmtError::ImplausibleCount { count });
    }
    let mut records = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let key_len = u32::from_le_bytes(cursor.take::<4>()?) as usize;
        let key_offset = cursor.offset;
        let key_bytes = cursor.take_slice(key_len)?;
        let key = std::str::from_utf8(key_bytes)
            .map_err(|_| BinfmtError::BadKey { offset: key_offset })?
            .to_string();
        let mut values = Vec::with_capacity(dimension as usize);
        for _ in 0..dimension {
            values.push(f32::from_le_bytes(cursor.take::<4>()?));
        }
        records.push(Record { key, values });
    }
    Ok((dimension, records))
}

struct Cursor<'a> {
    buf: &'a [u8],
    offset: usize,
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], BinfmtError> {
        let slice = self.take_slice(N)?;
        Ok(slice.try_into().expect("length checked"))
    }

    fn take_slice(&mut self, len: usize) -> Result<&'a [u8], BinfmtError> {
        if self.buf.len() - self.offset < len {
            return Err(BinfmtError::Truncated {
                offset: self.buf.len(),
            });
        }
        let slice = &self.buf[self.offset..self.offset + len];
        self.offset += len;
        Ok(slice)
    }
}
