//! Decoded RGB rasters and the luminance plane the hash is computed from.

use std::path::Path;

use image::DynamicImage;

use super::PdqError;

/// BT.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Row-major 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RasterImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, PdqError> {
        if width == 0 || height == 0 {
            return Err(PdqError::EmptyImage { width, height });
        }
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(3))
            .ok_or(PdqError::EmptyImage { width, height })?;
        if pixels.len() != expected {
            return Err(PdqError::BufferSize {
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// An image filled with a single colour.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self, PdqError> {
        let n = width * height;
        let mut pixels = Vec::with_capacity(n * 3);
        for _ in 0..n {
            pixels.extend_from_slice(&rgb);
        }
        Self::new(width, height, pixels)
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Result<Self, PdqError> {
        let mut pixels = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                pixels.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    #[inline]
    pub fn put_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Converts any decoded image. Alpha is composited over black and
    /// single-channel images are replicated across RGB.
    pub fn from_dynamic(img: &DynamicImage) -> Result<Self, PdqError> {
        let rgba = img.to_rgba8();
        let (w, h) = (rgba.width() as usize, rgba.height() as usize);
        let mut pixels = Vec::with_capacity(w * h * 3);
        for p in rgba.pixels() {
            let a = p.0[3] as u32;
            for c in &p.0[..3] {
                // round(c * a / 255)
                pixels.push(((*c as u32 * a + 127) / 255) as u8);
            }
        }
        Self::new(w, h, pixels)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, PdqError> {
        if bytes.is_empty() {
            return Err(PdqError::Decode("empty input".into()));
        }
        let img = image::load_from_memory(bytes).map_err(|e| PdqError::Decode(e.to_string()))?;
        Self::from_dynamic(&img)
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self, PdqError> {
        let bytes = std::fs::read(path.as_ref()).map_err(|source| PdqError::Io {
            path: path.as_ref().display().to_string(),
            source,
        })?;
        Self::decode(&bytes)
    }

    pub fn to_rgb_image(&self) -> image::RgbImage {
        image::RgbImage::from_raw(self.width as u32, self.height as u32, self.pixels.clone())
            .expect("buffer length checked at construction")
    }

    pub fn from_rgb_image(img: image::RgbImage) -> Result<Self, PdqError> {
        let (w, h) = (img.width() as usize, img.height() as usize);
        Self::new(w, h, img.into_raw())
    }
}

/// Per-pixel luminance, row-major, values in `[0, 255]`.
pub fn to_luma(img: &RasterImage) -> Vec<f64> {
    let [wr, wg, wb] = LUMA_WEIGHTS;
    img.pixels
        .chunks_exact(3)
        .map(|p| wr * p[0] as f64 + wg * p[1] as f64 + wb * p[2] as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn black_and_white_planes() {
        let black = RasterImage::filled(5, 3, [0, 0, 0]).unwrap();
        assert!(to_luma(&black).iter().all(|&v| v == 0.0));
        let white = RasterImage::filled(5, 3, [255, 255, 255]).unwrap();
        for v in to_luma(&white) {
            assert!((v - 255.0).abs() < 1e-9);
        }
    }

    #[test]
    fn pure_red_pixel() {
        let red = RasterImage::filled(1, 1, [255, 0, 0]).unwrap();
        assert!((to_luma(&red)[0] - 76.245).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(matches!(
            RasterImage::new(0, 4, vec![]),
            Err(PdqError::EmptyImage { .. })
        ));
        assert!(matches!(
            RasterImage::new(2, 2, vec![0; 11]),
            Err(PdqError::BufferSize { expected: 12, actual: 11 })
        ));
    }

    #[test]
    fn alpha_composited_over_black() {
        let mut rgba = image::RgbaImage::new(2, 1);
        rgba.put_pixel(0, 0, image::Rgba([200, 100, 50, 0]));
        rgba.put_pixel(1, 0, image::Rgba([200, 100, 50, 255]));
        let r = RasterImage::from_dynamic(&DynamicImage::ImageRgba8(rgba)).unwrap();
        assert_eq!(r.pixel(0, 0), [0, 0, 0]);
        assert_eq!(r.pixel(1, 0), [200, 100, 50]);
    }

    #[test]
    fn gray_replicated() {
        let g = image::GrayImage::from_pixel(1, 1, image::Luma([77]));
        let r = RasterImage::from_dynamic(&DynamicImage::ImageLuma8(g)).unwrap();
        assert_eq!(r.pixel(0, 0), [77, 77, 77]);
    }

    #[test]
    fn decode_rejects_garbage() {
        assert!(matches!(RasterImage::decode(&[]), Err(PdqError::Decode(_))));
        assert!(matches!(
            RasterImage::decode(b"not an image"),
            Err(PdqError::Decode(_))
        ));
    }
}
