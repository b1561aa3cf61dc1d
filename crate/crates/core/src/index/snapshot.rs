//! Versioned binary snapshots of a [`MihIndex`].
//!
//! Little-endian layout:
//!
//! ```text
//! magic        8 bytes  "PKMIHIDX"
//! version      u32      1
//! chunks       u32      16
//! entry_count  u64
//! entries      entry_count x { hash: 32 bytes (hex order), label_len: u32, label }
//! postings     16 x { bucket_count: u32, bucket_count x { key: u16, len: u32, ids: len x u32 } }
//! checksum     u64      FNV-1a 64 over every preceding byte
//! ```
//!
//! Buckets are written in ascending key order and only when non-empty.
//! Loading recomputes the postings from the entries and rejects the
//! snapshot if they disagree.

use std::io::{Read, Write};

use crate::pdq::{Hash256, HASH_BYTES};

use super::mih::{Entry, EntryId, MihIndex, CHUNKS};
use super::IndexError;

pub const MAGIC: [u8; 8] = *b"PKMIHIDX";
pub const VERSION: u32 = 1;
pub const EXTENSION: &str = "mih";

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn to_bytes(index: &MihIndex) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(CHUNKS as u32).to_le_bytes());
    out.extend_from_slice(&(index.len() as u64).to_le_bytes());
    for e in index.entries() {
        out.extend_from_slice(&e.hash.to_bytes());
        out.extend_from_slice(&(e.label.len() as u32).to_le_bytes());
        out.extend_from_slice(&e.label);
    }
    for table in index.tables() {
        let used: Vec<(usize, &Vec<EntryId>)> =
            table.iter().enumerate().filter(|(_, b)| !b.is_empty()).collect();
        out.extend_from_slice(&(used.len() as u32).to_le_bytes());
        for (key, ids) in used {
            out.extend_from_slice(&(key as u16).to_le_bytes());
            out.extend_from_slice(&(ids.len() as u32).to_le_bytes());
            for id in ids {
                out.extend_from_slice(&id.to_le_bytes());
            }
        }
    }
    let sum = fnv1a(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

pub fn save(index: &MihIndex, mut w: impl Write) -> std::io::Result<()> {
    w.write_all(&to_bytes(index))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or(IndexError::Truncated)?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, IndexError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, IndexError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Parses a snapshot. On any error nothing is returned, so a caller's
/// existing index is never partially overwritten.
pub fn from_bytes(buf: &[u8]) -> Result<MihIndex, IndexError> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(8).map_err(|_| IndexError::BadMagic)? != MAGIC {
        return Err(IndexError::BadMagic);
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(IndexError::UnsupportedVersion(version));
    }
    if buf.len() < 8 {
        return Err(IndexError::Truncated);
    }
    let body_len = buf.len() - 8;
    let stored = u64::from_le_bytes(buf[body_len..].try_into().unwrap());
    if c.u32()? as usize != CHUNKS {
        return Err(IndexError::Corrupt("chunk count".into()));
    }
    let count = c.u64()?;
    // every entry needs at least 36 bytes
    if count > (buf.len() / (HASH_BYTES + 4)) as u64 {
        return Err(IndexError::Truncated);
    }
    let mut entries = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let hash = Hash256::from_bytes(c.take(HASH_BYTES)?.try_into().unwrap());
        let len = c.u32()? as usize;
        let label = c.take(len)?.to_vec();
        entries.push(Entry { hash, label });
    }
    let index = MihIndex::from_parts(entries);
    for table in index.tables() {
        let buckets = c.u32()? as usize;
        let mut seen = 0usize;
        let mut last_key: Option<u16> = None;
        for _ in 0..buckets {
            let key = c.u16()?;
            if last_key.is_some_and(|k| k >= key) {
                return Err(IndexError::Corrupt("bucket keys out of order".into()));
            }
            last_key = Some(key);
            let len = c.u32()? as usize;
            let raw = c.take(len.checked_mul(4).ok_or(IndexError::Truncated)?)?;
            let expected = &table[key as usize];
            if expected.len() != len
                || raw
                    .chunks_exact(4)
                    .zip(expected)
                    .any(|(b, id)| u32::from_le_bytes(b.try_into().unwrap()) != *id)
            {
                return Err(IndexError::Corrupt(format!("postings for key {key:#06x}")));
            }
            seen += 1;
        }
        if seen != table.iter().filter(|b| !b.is_empty()).count() {
            return Err(IndexError::Corrupt("missing buckets".into()));
        }
    }
    if c.pos + 8 > buf.len() {
        return Err(IndexError::Truncated);
    }
    if c.pos + 8 != buf.len() {
        return Err(IndexError::Corrupt("trailing bytes".into()));
    }
    if fnv1a(&buf[..body_len]) != stored {
        return Err(IndexError::Checksum);
    }
    Ok(index)
}

pub fn load(mut r: impl Read) -> Result<MihIndex, IndexError> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    from_bytes(&buf)
}
