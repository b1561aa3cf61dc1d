//! `.tmk` signature files.
//!
//! All fields little-endian:
//!
//! | offset | size    | field                                   |
//! |--------|---------|-----------------------------------------|
//! | 0      | 8       | magic `PKTMKSIG`                        |
//! | 8      | 4       | format version (u32, currently 1)       |
//! | 12     | 4       | flags (u32, zero)                       |
//! | 16     | 4       | resample fps (u32, 15)                  |
//! | 20     | 8       | resampled frame count (u64)             |
//! | 28     | 8       | media duration in seconds (f64)         |
//! | 36     | 4       | period count (u32, 4)                   |
//! | 40     | 16      | periods (4 x u32)                       |
//! | 56     | 4       | Fourier coefficients per period (u32)   |
//! | 60     | 4       | feature dimension (u32, 256)            |
//! | 64     | 1024    | level 1, 256 x f32                      |
//! | 1088   | 262144  | level 2, 65536 x f32                    |
//!
//! Level-2 vectors are ordered by period, then coefficient `n = 1..=32`,
//! then cosine before sine. Total size is 263,232 bytes; the first 1,088
//! bytes are enough for phase-1 scoring.

use std::io::{Read, Write};

use super::frames::RESAMPLE_FPS;
use super::score::Score;
use super::signature::{TmkSignature, FEATURE_DIM, FOURIER_COEFFS, LEVEL2_LEN, PERIODS};
use super::TmkError;

pub const MAGIC: [u8; 8] = *b"PKTMKSIG";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 64;
pub const LEVEL1_BYTES: usize = FEATURE_DIM * 4;
pub const LEVEL2_BYTES: usize = LEVEL2_LEN * 4;
/// Bytes needed for phase-1 scoring.
pub const PREFIX_LEN: usize = HEADER_LEN + LEVEL1_BYTES;
pub const FILE_LEN: usize = PREFIX_LEN + LEVEL2_BYTES;
pub const EXTENSION: &str = "tmk";

struct Header {
    frame_count: u64,
    duration: f64,
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn parse_header(b: &[u8]) -> Result<Header, TmkError> {
    if b.len() < 12 {
        return Err(TmkError::Truncated {
            expected: HEADER_LEN,
            actual: b.len(),
        });
    }
    if b[..8] != MAGIC {
        return Err(TmkError::BadMagic);
    }
    let version = u32_at(b, 8);
    if version != VERSION {
        return Err(TmkError::UnsupportedVersion(version));
    }
    if b.len() < HEADER_LEN {
        return Err(TmkError::Truncated {
            expected: HEADER_LEN,
            actual: b.len(),
        });
    }
    let fps = u32_at(b, 16);
    let frame_count = u64::from_le_bytes(b[20..28].try_into().unwrap());
    let duration = f64::from_le_bytes(b[28..36].try_into().unwrap());
    let period_count = u32_at(b, 36) as usize;
    let periods: Vec<u32> = (0..4).map(|i| u32_at(b, 40 + 4 * i)).collect();
    let coeffs = u32_at(b, 56) as usize;
    let dim = u32_at(b, 60) as usize;
    if fps != RESAMPLE_FPS
        || period_count != PERIODS.len()
        || periods != PERIODS
        || coeffs != FOURIER_COEFFS
        || dim != FEATURE_DIM
    {
        return Err(TmkError::Malformed("unsupported signature layout".into()));
    }
    if frame_count == 0 || !duration.is_finite() || duration < 0.0 {
        return Err(TmkError::Malformed("invalid frame count or duration".into()));
    }
    Ok(Header {
        frame_count,
        duration,
    })
}

fn floats(b: &[u8]) -> Vec<f32> {
    b.chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect()
}

pub fn to_bytes(sig: &TmkSignature) -> Vec<u8> {
    let mut out = Vec::with_capacity(FILE_LEN);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&sig.resample_fps().to_le_bytes());
    out.extend_from_slice(&sig.frame_count().to_le_bytes());
    out.extend_from_slice(&sig.duration().to_le_bytes());
    out.extend_from_slice(&(PERIODS.len() as u32).to_le_bytes());
    for p in PERIODS {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out.extend_from_slice(&(FOURIER_COEFFS as u32).to_le_bytes());
    out.extend_from_slice(&(FEATURE_DIM as u32).to_le_bytes());
    debug_assert_eq!(out.len(), HEADER_LEN);
    for v in sig.level1().iter().chain(sig.level2()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn from_bytes(b: &[u8]) -> Result<TmkSignature, TmkError> {
    let h = parse_header(b)?;
    if b.len() < FILE_LEN {
        return Err(TmkError::Truncated {
            expected: FILE_LEN,
            actual: b.len(),
        });
    }
    if b.len() > FILE_LEN {
        return Err(TmkError::Malformed(format!(
            "{} trailing bytes",
            b.len() - FILE_LEN
        )));
    }
    let level1 = floats(&b[HEADER_LEN..PREFIX_LEN]);
    let level2 = floats(&b[PREFIX_LEN..]);
    if level1.iter().chain(&level2).any(|v| !v.is_finite()) {
        return Err(TmkError::NonFinite);
    }
    TmkSignature::from_parts(h.frame_count, h.duration, level1, level2)
}

pub fn write_to(sig: &TmkSignature, mut w: impl Write) -> std::io::Result<()> {
    w.write_all(&to_bytes(sig))
}

/// Reads a whole signature, failing on truncation or trailing data.
pub fn read_from(mut r: impl Read) -> Result<TmkSignature, TmkError> {
    let mut buf = Vec::with_capacity(FILE_LEN);
    r.read_to_end(&mut buf)?;
    from_bytes(&buf)
}

/// Header and level-1 vector only.
#[derive(Debug, Clone, PartialEq)]
pub struct Level1Prefix {
    pub frame_count: u64,
    pub duration: f64,
    pub level1: Vec<f32>,
}

impl Level1Prefix {
    pub fn score(&self, other: &Level1Prefix) -> Score {
        super::score::cosine(&self.level1, &other.level1)
    }
}

/// Reads just the first [`PREFIX_LEN`] bytes of a signature stream.
pub fn read_level1(mut r: impl Read) -> Result<Level1Prefix, TmkError> {
    let mut buf = Vec::with_capacity(PREFIX_LEN);
    r.by_ref().take(PREFIX_LEN as u64).read_to_end(&mut buf)?;
    let h = parse_header(&buf)?;
    if buf.len() < PREFIX_LEN {
        return Err(TmkError::Truncated {
            expected: PREFIX_LEN,
            actual: buf.len(),
        });
    }
    let level1 = floats(&buf[HEADER_LEN..PREFIX_LEN]);
    if level1.iter().any(|v| !v.is_finite()) {
        return Err(TmkError::NonFinite);
    }
    Ok(Level1Prefix {
        frame_count: h.frame_count,
        duration: h.duration,
        level1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tmk::level1_score;

    fn sig(seed: u32) -> TmkSignature {
        let l1: Vec<f32> = (0..FEATURE_DIM).map(|i| ((i as u32 * 31 + seed) % 97) as f32 / 97.0).collect();
        let l2: Vec<f32> = (0..LEVEL2_LEN).map(|i| ((i as u32 ^ seed) % 1013) as f32 - 506.5).collect();
        TmkSignature::from_parts(1234, 82.2, l1, l2).unwrap()
    }

    #[test]
    fn layout_and_round_trip() {
        let s = sig(7);
        let b = to_bytes(&s);
        assert_eq!(b.len(), FILE_LEN);
        assert_eq!(FILE_LEN, 64 + 1024 + 262_144);
        assert_eq!(&b[..8], b"PKTMKSIG");
        assert_eq!(from_bytes(&b).unwrap(), s);
    }

    #[test]
    fn distinct_errors() {
        let b = to_bytes(&sig(1));
        assert!(matches!(from_bytes(&b[..1000]), Err(TmkError::Truncated { .. })));
        assert!(matches!(from_bytes(&b[..FILE_LEN - 1]), Err(TmkError::Truncated { .. })));
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(matches!(from_bytes(&bad), Err(TmkError::BadMagic)));
        let mut v2 = b.clone();
        v2[8..12].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(from_bytes(&v2), Err(TmkError::UnsupportedVersion(2))));
        let mut long = b;
        long.push(0);
        assert!(matches!(from_bytes(&long), Err(TmkError::Malformed(_))));
    }

    #[test]
    fn level1_prefix_is_enough_for_phase_one() {
        let (a, b) = (sig(3), sig(11));
        let ba = to_bytes(&a);
        let pa = read_level1(&ba[..PREFIX_LEN]).unwrap();
        let pb = read_level1(to_bytes(&b).as_slice()).unwrap();
        assert_eq!(pa.frame_count, 1234);
        assert_eq!(pa.score(&pb), level1_score(&a, &b));
        assert!(matches!(read_level1(&ba[..PREFIX_LEN - 1]), Err(TmkError::Truncated { .. })));
    }
}
