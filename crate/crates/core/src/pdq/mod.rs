//! 256-bit DCT perceptual image hash.
//!
//! Pipeline: RGB raster, BT.601 luma, 64x64 box-filtered grid, 16x16
//! low-frequency DCT block (DC row and column dropped), then rank
//! quantization that sets exactly 128 bits. Because every hash has the same
//! popcount, the distance between two hashes is always even.

mod dct;
mod dihedral;
mod downsample;
mod hash;
mod raster;

use std::path::Path;

use thiserror::Error;

pub use dct::{dct16, DctMatrix16, BLOCK, COEFFS};
pub use dihedral::{flip_horizontal, rotate90, Dihedral};
pub use downsample::{downsample64, LumaGrid64, GRID};
pub use hash::{
    hamming, quality, quantize, Hash256, MatchThreshold, PdqHash, HALF_BITS, HASH_BITS,
    HASH_BYTES,
};
pub use raster::{to_luma, RasterImage, LUMA_WEIGHTS};

#[derive(Debug, Error)]
pub enum PdqError {
    #[error("image has no pixels ({width}x{height})")]
    EmptyImage { width: usize, height: usize },
    #[error("buffer holds {actual} values, expected {expected}")]
    BufferSize { expected: usize, actual: usize },
    #[error("luminance value {0} outside [0, 255]")]
    LumaOutOfRange(f64),
    #[error("non-finite coefficient {0}")]
    NonFinite(f64),
    #[error("cannot decode image: {0}")]
    Decode(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid hash hex: {0}")]
    InvalidHex(String),
    #[error("match threshold {0} outside [0, 256]")]
    ThresholdOutOfRange(u32),
}

/// The 64x64 grid every hash and frame feature starts from.
pub fn luma_grid(img: &RasterImage) -> LumaGrid64 {
    downsample64(&to_luma(img), img.width(), img.height())
        .expect("RasterImage is never empty")
}

pub fn hash_grid(grid: &LumaGrid64) -> PdqHash {
    PdqHash {
        bits: quantize(&dct16(grid)),
        quality: quality(grid),
    }
}

pub fn pdq_hash(img: &RasterImage) -> PdqHash {
    hash_grid(&luma_grid(img))
}

/// Decodes an encoded image (PNG, JPEG, TIFF or BMP) and hashes it.
pub fn hash_bytes(bytes: &[u8]) -> Result<PdqHash, PdqError> {
    Ok(pdq_hash(&RasterImage::decode(bytes)?))
}

pub fn hash_file(path: impl AsRef<Path>) -> Result<PdqHash, PdqError> {
    Ok(pdq_hash(&RasterImage::open(path)?))
}

/// Hashes of the eight dihedral variants, ordered as [`Dihedral::ALL`];
/// element 0 is the plain hash.
pub fn dihedral_hashes(img: &RasterImage) -> [PdqHash; 8] {
    Dihedral::ALL.map(|d| pdq_hash(&d.apply(img)))
}

/// Smallest distance between `query` and any of `variants`.
pub fn min_distance(variants: &[PdqHash], query: &PdqHash) -> u32 {
    variants
        .iter()
        .map(|v| v.distance(query))
        .min()
        .unwrap_or(HASH_BITS as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured(n: usize) -> RasterImage {
        RasterImage::from_fn(n, n, |x, y| {
            let v = ((x * 7 + y * 13) ^ (x * y)) % 256;
            [v as u8, ((x * 3) % 256) as u8, ((y * 5) % 256) as u8]
        })
        .unwrap()
    }

    #[test]
    fn deterministic() {
        let img = textured(97);
        assert_eq!(pdq_hash(&img), pdq_hash(&img));
        assert_eq!(pdq_hash(&img).bits.count_ones(), 128);
    }

    #[test]
    fn tiny_images_are_total() {
        for (w, h) in [(1, 1), (3, 2), (32, 20), (1, 500)] {
            let img = RasterImage::from_fn(w, h, |x, y| [(x * 40) as u8, (y * 9) as u8, 7]).unwrap();
            assert_eq!(pdq_hash(&img).bits.count_ones(), 128);
        }
    }

    #[test]
    fn constant_square_dihedral_identical() {
        let img = RasterImage::filled(80, 80, [10, 200, 30]).unwrap();
        let hs = dihedral_hashes(&img);
        assert!(hs.iter().all(|h| *h == hs[0]));
        assert_eq!(hs[0].quality, 0);
    }

    #[test]
    fn dihedral_closure_under_rotation() {
        let img = textured(90);
        let a = dihedral_hashes(&img);
        let b = dihedral_hashes(&rotate90(&img));
        let mut sa: Vec<_> = a.iter().map(|h| h.bits).collect();
        let mut sb: Vec<_> = b.iter().map(|h| h.bits).collect();
        sa.sort();
        sb.sort();
        assert_eq!(sa, sb);
        assert_eq!(a[0], pdq_hash(&img));
        assert_eq!(min_distance(&a, &pdq_hash(&rotate90(&img))), 0);
    }

    #[test]
    fn lossless_reencode_is_distance_zero() {
        let img = textured(120);
        let rgb = img.to_rgb_image();
        let mut png = std::io::Cursor::new(Vec::new());
        rgb.write_to(&mut png, image::ImageFormat::Png).unwrap();
        let mut bmp = std::io::Cursor::new(Vec::new());
        rgb.write_to(&mut bmp, image::ImageFormat::Bmp).unwrap();
        let a = hash_bytes(png.get_ref()).unwrap();
        let b = hash_bytes(bmp.get_ref()).unwrap();
        assert_eq!(a.distance(&b), 0);
        assert_eq!(a, pdq_hash(&img));
    }
}
