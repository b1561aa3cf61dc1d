//! Exact Hamming radius search over 256-bit hashes.

mod mih;
pub mod snapshot;

use thiserror::Error;

pub use mih::{linear_scan, Entry, EntryId, MihIndex, QueryResult, CHUNKS};

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("radius {0} exceeds 256")]
    Radius(u32),
    #[error("not an index snapshot (bad magic)")]
    BadMagic,
    #[error("unsupported snapshot version {0}")]
    UnsupportedVersion(u32),
    #[error("snapshot truncated")]
    Truncated,
    #[error("snapshot corrupt: {0}")]
    Corrupt(String),
    #[error("snapshot checksum mismatch")]
    Checksum,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
