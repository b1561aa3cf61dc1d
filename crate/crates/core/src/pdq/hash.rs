//! 256-bit hash values, rank quantization, quality, and Hamming comparison.
//!
//! Bit order: bit `i` of a hash corresponds to coefficient `i` of the
//! 16x16 block in raster order. Bit 0 is the most significant bit of the
//! first byte, so the 64-character hex form reads in coefficient order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::dct::{DctMatrix16, COEFFS};
use super::downsample::{LumaGrid64, GRID};
use super::PdqError;

pub const HASH_BITS: usize = 256;
pub const HASH_BYTES: usize = HASH_BITS / 8;
/// Number of set bits in every quantized hash.
pub const HALF_BITS: usize = HASH_BITS / 2;

/// A 256-bit vector stored as four big-endian words (bit 0 is the MSB of word 0).
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Hash256(pub [u64; 4]);

impl Hash256 {
    pub const ZERO: Hash256 = Hash256([0; 4]);

    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        (self.0[i / 64] >> (63 - i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set_bit(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (63 - i % 64);
    }

    #[inline]
    pub fn flip_bit(&mut self, i: usize) {
        self.0[i / 64] ^= 1 << (63 - i % 64);
    }

    pub fn count_ones(&self) -> u32 {
        self.0.iter().map(|w| w.count_ones()).sum()
    }

    pub fn complement(&self) -> Self {
        Hash256(self.0.map(|w| !w))
    }

    /// The 16-bit chunk covering bits `[16c, 16c + 16)`.
    #[inline]
    pub fn chunk(&self, c: usize) -> u16 {
        (self.0[c / 4] >> (48 - 16 * (c % 4))) as u16
    }

    pub fn to_bytes(&self) -> [u8; HASH_BYTES] {
        let mut out = [0u8; HASH_BYTES];
        for (dst, w) in out.chunks_exact_mut(8).zip(self.0.iter()) {
            dst.copy_from_slice(&w.to_be_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8; HASH_BYTES]) -> Self {
        let mut words = [0u64; 4];
        for (w, src) in words.iter_mut().zip(bytes.chunks_exact(8)) {
            *w = u64::from_be_bytes(src.try_into().unwrap());
        }
        Hash256(words)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn from_hex(s: &str) -> Result<Self, PdqError> {
        if s.len() != 2 * HASH_BYTES {
            return Err(PdqError::InvalidHex(format!(
                "expected {} hex characters, got {}",
                2 * HASH_BYTES,
                s.len()
            )));
        }
        let mut bytes = [0u8; HASH_BYTES];
        hex::decode_to_slice(s, &mut bytes).map_err(|e| PdqError::InvalidHex(e.to_string()))?;
        Ok(Self::from_bytes(&bytes))
    }
}

impl fmt::Debug for Hash256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hash256({})", self.to_hex())
    }
}

impl fmt::Display for Hash256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for Hash256 {
    type Err = PdqError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_hex(s)
    }
}

impl Serialize for Hash256 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Hash256 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Self::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Population count of the XOR.
#[inline]
pub fn hamming(a: &Hash256, b: &Hash256) -> u32 {
    (a.0[0] ^ b.0[0]).count_ones()
        + (a.0[1] ^ b.0[1]).count_ones()
        + (a.0[2] ^ b.0[2]).count_ones()
        + (a.0[3] ^ b.0[3]).count_ones()
}

/// Perceptual hash plus its 0-100 quality score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PdqHash {
    pub bits: Hash256,
    pub quality: u8,
}

impl PdqHash {
    pub fn distance(&self, other: &PdqHash) -> u32 {
        hamming(&self.bits, &other.bits)
    }
}

/// Maximum Hamming distance still considered a match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct MatchThreshold(u32);

impl MatchThreshold {
    pub const DEFAULT: MatchThreshold = MatchThreshold(30);

    pub fn new(max_distance: u32) -> Result<Self, PdqError> {
        if max_distance as usize > HASH_BITS {
            return Err(PdqError::ThresholdOutOfRange(max_distance));
        }
        Ok(Self(max_distance))
    }

    pub fn max_distance(&self) -> u32 {
        self.0
    }

    pub fn matches(&self, distance: u32) -> bool {
        distance <= self.0
    }
}

impl Default for MatchThreshold {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl TryFrom<u32> for MatchThreshold {
    type Error = PdqError;
    fn try_from(v: u32) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<MatchThreshold> for u32 {
    fn from(t: MatchThreshold) -> u32 {
        t.0
    }
}

/// Sets the bits of the 128 largest coefficients, ties broken by lower
/// raster index first.
pub fn quantize(m: &DctMatrix16) -> Hash256 {
    let c = m.coeffs();
    let mut order: Vec<usize> = (0..COEFFS).collect();
    order.sort_by(|&a, &b| c[b].total_cmp(&c[a]).then(a.cmp(&b)));
    let mut h = Hash256::ZERO;
    for &i in &order[..HALF_BITS] {
        h.set_bit(i);
    }
    h
}

/// `min(100, round(100 * (sum|dx| + sum|dy|) / (255 * 64 * 64)))` over
/// first differences of the grid.
pub fn quality(grid: &LumaGrid64) -> u8 {
    let g = grid.values();
    let mut total = 0.0;
    for r in 0..GRID {
        for c in 0..GRID {
            let v = g[r * GRID + c];
            if c + 1 < GRID {
                total += (g[r * GRID + c + 1] - v).abs();
            }
            if r + 1 < GRID {
                total += (g[(r + 1) * GRID + c] - v).abs();
            }
        }
    }
    let q = (100.0 * total / (255.0 * (GRID * GRID) as f64)).round();
    q.min(100.0) as u8
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_hash() -> impl Strategy<Value = Hash256> {
        any::<[u64; 4]>().prop_map(Hash256)
    }

    #[test]
    fn hamming_basics() {
        let a = Hash256([0x0123_4567_89ab_cdef, 7, 0, u64::MAX]);
        assert_eq!(hamming(&a, &a), 0);
        assert_eq!(hamming(&a, &a.complement()), 256);
        let mut b = a;
        b.flip_bit(3);
        b.flip_bit(77);
        assert_eq!(hamming(&a, &b), 2);
    }

    #[test]
    fn hex_form() {
        assert_eq!(Hash256::ZERO.to_hex(), "0".repeat(64));
        let mut h = Hash256::ZERO;
        h.set_bit(0);
        h.set_bit(255);
        assert_eq!(h.to_hex(), format!("80{}01", "0".repeat(60)));
        assert!(Hash256::from_hex(&"z".repeat(64)).is_err());
        assert!(Hash256::from_hex("abc").is_err());
        assert!(Hash256::from_hex(&"0".repeat(65)).is_err());
        // uppercase input is accepted, output is always lowercase
        let up = Hash256::from_hex(&"AB".repeat(32)).unwrap();
        assert_eq!(up.to_hex(), "ab".repeat(32));
    }

    #[test]
    fn chunk_layout() {
        let h = Hash256::from_hex(&(0..16).map(|i| format!("{:04x}", i * 0x1111)).collect::<String>()).unwrap();
        for c in 0..16 {
            assert_eq!(h.chunk(c), (c as u16) * 0x1111);
        }
    }

    #[test]
    fn quantize_all_equal_uses_index_order() {
        let h = quantize(&DctMatrix16::new([3.5; COEFFS]).unwrap());
        for i in 0..HASH_BITS {
            assert_eq!(h.bit(i), i < HALF_BITS);
        }
    }

    #[test]
    fn quantize_raster_ramp() {
        let mut c = [0.0; COEFFS];
        for (i, v) in c.iter_mut().enumerate() {
            *v = i as f64;
        }
        let h = quantize(&DctMatrix16::new(c).unwrap());
        for i in 0..HASH_BITS {
            assert_eq!(h.bit(i), i >= 128);
        }
    }

    #[test]
    fn quality_reference_grids() {
        assert_eq!(quality(&LumaGrid64::constant(90.0).unwrap()), 0);
        let checker: Vec<f64> = (0..GRID * GRID)
            .map(|i| if (i / GRID + i % GRID) % 2 == 0 { 0.0 } else { 255.0 })
            .collect();
        assert_eq!(quality(&LumaGrid64::new(checker).unwrap()), 100);
        // left half black, right half white: one 255 step per row,
        // 64 * 255 / (255 * 4096) * 100 = 1.5625 -> 2
        let split: Vec<f64> = (0..GRID * GRID)
            .map(|i| if i % GRID < GRID / 2 { 0.0 } else { 255.0 })
            .collect();
        assert_eq!(quality(&LumaGrid64::new(split).unwrap()), 2);
    }

    #[test]
    fn threshold_range() {
        assert_eq!(MatchThreshold::default().max_distance(), 30);
        assert!(MatchThreshold::new(256).is_ok());
        assert!(MatchThreshold::new(257).is_err());
        assert!(MatchThreshold::DEFAULT.matches(30));
        assert!(!MatchThreshold::DEFAULT.matches(31));
    }

    proptest! {
        #[test]
        fn hex_round_trip(h in arb_hash()) {
            let s = h.to_hex();
            prop_assert_eq!(s.len(), 64);
            prop_assert!(s.chars().all(|c| c.is_ascii_hexdigit() && !c.is_ascii_uppercase()));
            prop_assert_eq!(Hash256::from_hex(&s).unwrap(), h);
        }

        #[test]
        fn hamming_is_a_metric(a in arb_hash(), b in arb_hash(), c in arb_hash()) {
            prop_assert_eq!(hamming(&a, &a), 0);
            prop_assert_eq!(hamming(&a, &b), hamming(&b, &a));
            prop_assert!(hamming(&a, &c) <= hamming(&a, &b) + hamming(&b, &c));
        }

        #[test]
        fn quantize_always_half(vals in proptest::collection::vec(-1e3f64..1e3, COEFFS)) {
            let m = DctMatrix16::from_slice(&vals).unwrap();
            prop_assert_eq!(quantize(&m).count_ones(), 128);
        }

        #[test]
        fn negation_complements_without_ties(vals in proptest::collection::hash_set(-100_000i64..100_000, COEFFS)) {
            let v: Vec<f64> = vals.iter().map(|&x| x as f64).collect();
            let neg: Vec<f64> = v.iter().map(|x| -x).collect();
            let a = quantize(&DctMatrix16::from_slice(&v).unwrap());
            let b = quantize(&DctMatrix16::from_slice(&neg).unwrap());
            prop_assert_eq!(b, a.complement());
        }
    }
}
