//! Still-image treatments.

use std::io::Cursor;

use image::codecs::jpeg::JpegEncoder;
use image::imageops::{self, FilterType};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::font::{draw_text, text_units, OVERLAY_TEXT};
use super::logo::{logo, paste};
use super::HarnessError;
use crate::pdq::RasterImage;

pub const JPEG_QUALITY: u8 = 90;
pub const THUMBNAIL_SIDES: [u32; 4] = [32, 64, 128, 256];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ImageFormatKind {
    Jpeg,
    Tiff,
    Png,
    Bmp,
}

impl ImageFormatKind {
    pub const ALL: [ImageFormatKind; 4] = [Self::Jpeg, Self::Tiff, Self::Png, Self::Bmp];

    pub fn name(self) -> &'static str {
        match self {
            Self::Jpeg => "jpeg",
            Self::Tiff => "tiff",
            Self::Png => "png",
            Self::Bmp => "bmp",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jpeg" | "jpg" => Some(Self::Jpeg),
            "tiff" | "tif" => Some(Self::Tiff),
            "png" => Some(Self::Png),
            "bmp" => Some(Self::Bmp),
            _ => None,
        }
    }

    /// Sniffs the container from the leading bytes.
    pub fn detect(bytes: &[u8]) -> Option<Self> {
        match image::guess_format(bytes).ok()? {
            image::ImageFormat::Jpeg => Some(Self::Jpeg),
            image::ImageFormat::Tiff => Some(Self::Tiff),
            image::ImageFormat::Png => Some(Self::Png),
            image::ImageFormat::Bmp => Some(Self::Bmp),
            _ => None,
        }
    }

    pub fn encode(self, img: &RasterImage) -> Result<Vec<u8>, HarnessError> {
        let rgb = img.to_rgb_image();
        let mut out = Cursor::new(Vec::new());
        let res = match self {
            Self::Jpeg => rgb.write_with_encoder(JpegEncoder::new_with_quality(&mut out, JPEG_QUALITY)),
            Self::Tiff => rgb.write_to(&mut out, image::ImageFormat::Tiff),
            Self::Png => rgb.write_to(&mut out, image::ImageFormat::Png),
            Self::Bmp => rgb.write_to(&mut out, image::ImageFormat::Bmp),
        };
        res.map_err(|e| HarnessError::Encode(format!("{}: {e}", self.name())))?;
        Ok(out.into_inner())
    }
}

/// One of the still-image treatments with its concrete parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImageTreatment {
    Format(ImageFormatKind),
    Watermark,
    Text,
    Thumbnail(u32),
    Crop(f64),
    Rotate(f64),
}

impl ImageTreatment {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Format(_) => "format",
            Self::Watermark => "watermark",
            Self::Text => "text",
            Self::Thumbnail(_) => "thumbnail",
            Self::Crop(_) => "crop",
            Self::Rotate(_) => "rotate",
        }
    }

    /// The parameter as logged in report rows; empty when there is none.
    pub fn parameter(&self) -> String {
        match self {
            Self::Format(f) => f.name().to_string(),
            Self::Thumbnail(s) => s.to_string(),
            Self::Crop(r) => format!("{r}"),
            Self::Rotate(d) => format!("{d}"),
            Self::Watermark | Self::Text => String::new(),
        }
    }

    /// Inverse of [`name`](Self::name) plus [`parameter`](Self::parameter).
    pub fn parse(name: &str, parameter: &str) -> Result<Self, HarnessError> {
        let bad = || HarnessError::InvalidParameter(format!("{name}={parameter}"));
        let t = match name {
            "format" => Self::Format(ImageFormatKind::from_name(parameter).ok_or_else(bad)?),
            "watermark" => Self::Watermark,
            "text" => Self::Text,
            "thumbnail" => Self::Thumbnail(parameter.parse().map_err(|_| bad())?),
            "crop" => Self::Crop(parameter.parse().map_err(|_| bad())?),
            "rotate" => Self::Rotate(parameter.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let ok = match *self {
            Self::Thumbnail(s) => THUMBNAIL_SIDES.contains(&s),
            Self::Crop(r) => r > 0.0 && r < 1.0,
            Self::Rotate(d) => (1.0..=359.0).contains(&d),
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(HarnessError::InvalidParameter(format!("{} {}", self.name(), self.parameter())))
        }
    }
}

/// Seeded choice of a target format different from `source`.
pub fn pick_format(seed: u64, source: Option<ImageFormatKind>) -> ImageFormatKind {
    let choices: Vec<_> = ImageFormatKind::ALL.into_iter().filter(|f| Some(*f) != source).collect();
    *choices.choose(&mut ChaCha8Rng::seed_from_u64(seed)).expect("at least three formats")
}

/// Seeded crop ratio in [0.5, 0.99], three decimals.
pub fn pick_crop_ratio(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0);
    rng.gen_range(500..=990) as f64 / 1000.0
}

/// Seeded whole-degree rotation in [1, 359].
pub fn pick_rotation(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x40);
    rng.gen_range(1..=359) as f64
}

/// Re-encodes the raster in `format`.
pub fn t_format(img: &RasterImage, format: ImageFormatKind) -> Result<Vec<u8>, HarnessError> {
    format.encode(img)
}

/// Logo edge length for an image: a quarter of the shorter side.
pub fn watermark_side(w: usize, h: usize) -> usize {
    (w.min(h) / 4).max(1)
}

/// Opaque logo flush with the bottom-right corner.
pub fn t_watermark(img: &RasterImage) -> RasterImage {
    let side = watermark_side(img.width(), img.height());
    let mut out = img.clone();
    paste(&mut out, &logo(side), img.width() - side.min(img.width()), img.height() - side.min(img.height()));
    out
}

/// Pixels per font unit so the overlay is at most half the shorter side.
pub fn text_scale(w: usize, h: usize) -> f64 {
    w.min(h) as f64 / 2.0 / text_units(OVERLAY_TEXT) as f64
}

/// White overlay text in the top-left corner, one font unit from the edges.
pub fn t_text(img: &RasterImage) -> RasterImage {
    let scale = text_scale(img.width(), img.height());
    let margin = scale.round() as i64;
    let mut out = img.clone();
    draw_text(&mut out, OVERLAY_TEXT, margin, margin, scale, [255, 255, 255]);
    out
}

/// Output size of a thumbnail whose longer side is `long_side`.
pub fn thumbnail_size(w: usize, h: usize, long_side: u32) -> (usize, usize) {
    let l = long_side as usize;
    let short = |a: usize, b: usize| ((b as f64 * l as f64 / a as f64).round() as usize).max(1);
    if w >= h {
        (l, short(w, h))
    } else {
        (short(h, w), l)
    }
}

pub fn t_thumbnail(img: &RasterImage, long_side: u32) -> RasterImage {
    let (nw, nh) = thumbnail_size(img.width(), img.height(), long_side);
    let out = imageops::resize(&img.to_rgb_image(), nw as u32, nh as u32, FilterType::Lanczos3);
    RasterImage::from_rgb_image(out).expect("non-empty")
}

/// Centre crop box `(x0, y0, w, h)` keeping `ratio` of each side.
pub fn crop_box(w: usize, h: usize, ratio: f64) -> (usize, usize, usize, usize) {
    let nw = ((w as f64 * ratio).round() as usize).clamp(1, w);
    let nh = ((h as f64 * ratio).round() as usize).clamp(1, h);
    ((w - nw) / 2, (h - nh) / 2, nw, nh)
}

pub fn t_crop(img: &RasterImage, ratio: f64) -> Result<RasterImage, HarnessError> {
    ImageTreatment::Crop(ratio).validate()?;
    let (x0, y0, nw, nh) = crop_box(img.width(), img.height(), ratio);
    Ok(RasterImage::from_fn(nw, nh, |x, y| img.pixel(x0 + x, y0 + y)).expect("non-empty"))
}

/// Canvas that holds the whole image rotated by `degrees`.
pub fn rotated_size(w: usize, h: usize, degrees: f64) -> (usize, usize) {
    let (s, c) = degrees.to_radians().sin_cos();
    let fit = |v: f64| ((v - 1e-9).ceil() as usize).max(1);
    (
        fit(w as f64 * c.abs() + h as f64 * s.abs()),
        fit(w as f64 * s.abs() + h as f64 * c.abs()),
    )
}

/// Counter-clockwise rotation about the centre with bilinear sampling. The
/// canvas grows to the rotated bounding box and uncovered pixels are black.
pub fn t_rotate(img: &RasterImage, degrees: f64) -> Result<RasterImage, HarnessError> {
    ImageTreatment::Rotate(degrees).validate()?;
    let (w, h) = (img.width(), img.height());
    let (nw, nh) = rotated_size(w, h, degrees);
    let (s, c) = degrees.to_radians().sin_cos();
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
    let (ncx, ncy) = (nw as f64 / 2.0, nh as f64 / 2.0);
    let out = RasterImage::from_fn(nw, nh, |x, y| {
        let (dx, dy) = (x as f64 + 0.5 - ncx, y as f64 + 0.5 - ncy);
        // inverse rotation in image coordinates (y down)
        let sx = c * dx - s * dy + cx - 0.5;
        let sy = s * dx + c * dy + cy - 0.5;
        if sx < -0.5 || sy < -0.5 || sx > w as f64 - 0.5 || sy > h as f64 - 0.5 {
            return [0, 0, 0];
        }
        bilinear(img, sx, sy)
    })
    .expect("non-empty");
    Ok(out)
}

fn bilinear(img: &RasterImage, sx: f64, sy: f64) -> [u8; 3] {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let (x0, y0) = (sx.floor(), sy.floor());
    let (fx, fy) = (sx - x0, sy - y0);
    let at = |x: i64, y: i64| img.pixel(x.clamp(0, w - 1) as usize, y.clamp(0, h - 1) as usize);
    let (x0, y0) = (x0 as i64, y0 as i64);
    let (p00, p10, p01, p11) = (at(x0, y0), at(x0 + 1, y0), at(x0, y0 + 1), at(x0 + 1, y0 + 1));
    std::array::from_fn(|k| {
        let top = p00[k] as f64 * (1.0 - fx) + p10[k] as f64 * fx;
        let bot = p01[k] as f64 * (1.0 - fx) + p11[k] as f64 * fx;
        (top * (1.0 - fy) + bot * fy).round().clamp(0.0, 255.0) as u8
    })
}

/// Applies a non-format treatment to a raster.
pub fn apply_raster(img: &RasterImage, t: &ImageTreatment) -> Result<RasterImage, HarnessError> {
    match *t {
        ImageTreatment::Format(f) => RasterImage::decode(&t_format(img, f)?).map_err(HarnessError::from),
        ImageTreatment::Watermark => Ok(t_watermark(img)),
        ImageTreatment::Text => Ok(t_text(img)),
        ImageTreatment::Thumbnail(s) => {
            t.validate()?;
            Ok(t_thumbnail(img, s))
        }
        ImageTreatment::Crop(r) => t_crop(img, r),
        ImageTreatment::Rotate(d) => t_rotate(img, d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synth::synth_image;
    use crate::pdq::pdq_hash;

    #[test]
    fn format_pick_differs_and_is_seeded() {
        for seed in 0..50 {
            for src in ImageFormatKind::ALL {
                let f = pick_format(seed, Some(src));
                assert_ne!(f, src);
                assert_eq!(f, pick_format(seed, Some(src)));
            }
        }
    }

    #[test]
    fn lossless_format_pair_is_raster_identical() {
        let img = synth_image(1, 70, 50);
        for f in [ImageFormatKind::Png, ImageFormatKind::Bmp, ImageFormatKind::Tiff] {
            let back = RasterImage::decode(&t_format(&img, f).unwrap()).unwrap();
            assert_eq!(back, img, "{f:?}");
        }
        let jpg = t_format(&img, ImageFormatKind::Jpeg).unwrap();
        assert_eq!(ImageFormatKind::detect(&jpg), Some(ImageFormatKind::Jpeg));
    }

    #[test]
    fn watermark_geometry() {
        let img = RasterImage::filled(1024, 1024, [1, 2, 3]).unwrap();
        let out = t_watermark(&img);
        assert_eq!(watermark_side(1024, 1024), 256);
        let mut changed = (usize::MAX, usize::MAX, 0, 0);
        for y in 0..1024 {
            for x in 0..1024 {
                if out.pixel(x, y) != img.pixel(x, y) {
                    changed = (changed.0.min(x), changed.1.min(y), changed.2.max(x), changed.3.max(y));
                }
            }
        }
        assert_eq!(changed, (768, 768, 1023, 1023));
        assert_eq!(t_watermark(&img), out);
    }

    #[test]
    fn text_fits_and_changes_hash() {
        let img = RasterImage::filled(300, 200, [90, 90, 90]).unwrap();
        let out = t_text(&img);
        let mut max_x = 0;
        for y in 0..200 {
            for x in 0..300 {
                if out.pixel(x, y) != img.pixel(x, y) {
                    max_x = max_x.max(x);
                }
            }
        }
        let margin = text_scale(300, 200).round() as usize;
        assert!(max_x + 1 - margin <= 100);
        assert!(pdq_hash(&img).distance(&pdq_hash(&out)) > 0);
    }

    #[test]
    fn thumbnail_preserves_aspect() {
        for (w, h) in [(640, 480), (480, 640), (333, 111), (1, 999), (50, 50)] {
            for s in THUMBNAIL_SIDES {
                let (nw, nh) = thumbnail_size(w, h, s);
                assert_eq!(nw.max(nh), s as usize);
                let expect = (w.min(h) as f64 * s as f64 / w.max(h) as f64).max(1.0);
                assert!((nw.min(nh) as f64 - expect).abs() <= 1.0);
            }
        }
        let t = t_thumbnail(&synth_image(2, 640, 480), 64);
        assert_eq!((t.width(), t.height()), (64, 48));
    }

    #[test]
    fn crop_box_matches_pixel_count_oracle() {
        for (w, h) in [(100, 80), (7, 3), (1024, 768), (1, 1)] {
            for r in [0.1, 0.5, 0.8, 0.95, 0.999] {
                let (x0, y0, nw, nh) = crop_box(w, h, r);
                // brute force: count pixels inside the box
                let count = (0..h)
                    .flat_map(|y| (0..w).map(move |x| (x, y)))
                    .filter(|&(x, y)| x >= x0 && x < x0 + nw && y >= y0 && y < y0 + nh)
                    .count();
                let ew = ((w as f64 * r).round() as usize).max(1);
                let eh = ((h as f64 * r).round() as usize).max(1);
                assert_eq!(count, ew * eh);
                // centred to within half a pixel
                assert!((x0 as f64 + nw as f64 / 2.0 - w as f64 / 2.0).abs() <= 0.5);
            }
        }
        let img = synth_image(3, 40, 20);
        assert!(t_crop(&img, 1.0).is_err());
        assert!(t_crop(&img, 0.0).is_err());
        let c = t_crop(&img, 0.5).unwrap();
        assert_eq!(c.pixel(0, 0), img.pixel(10, 5));
    }

    #[test]
    fn rotation_canvas_oracle() {
        assert_eq!(rotated_size(200, 100, 90.0), (100, 200));
        assert_eq!(rotated_size(200, 100, 180.0), (200, 100));
        for d in [1.0, 17.0, 45.0, 133.0, 359.0] {
            let (w, h) = (120usize, 80usize);
            let (nw, nh) = rotated_size(w, h, d);
            // corners of the rotated rectangle
            let r = f64::to_radians(d);
            let pts = [(-60.0, -40.0), (60.0, -40.0), (-60.0, 40.0), (60.0, 40.0)];
            let xs = pts.map(|(x, y): (f64, f64)| x * r.cos() - y * r.sin());
            let ys = pts.map(|(x, y): (f64, f64)| x * r.sin() + y * r.cos());
            let span = |v: [f64; 4]| v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
            assert_eq!(nw, (span(xs) - 1e-9).ceil() as usize);
            assert_eq!(nh, (span(ys) - 1e-9).ceil() as usize);
        }
        let img = synth_image(4, 60, 40);
        assert!(t_rotate(&img, 0.0).is_err());
        assert!(t_rotate(&img, 360.0).is_err());
        let r = t_rotate(&img, 180.0).unwrap();
        assert_eq!(r.pixel(0, 0), img.pixel(59, 39));
        let r = t_rotate(&img, 45.0).unwrap();
        assert_eq!(r.pixel(0, 0), [0, 0, 0]);
    }

    #[test]
    fn treatment_parse_round_trip() {
        for t in [
            ImageTreatment::Format(ImageFormatKind::Tiff),
            ImageTreatment::Watermark,
            ImageTreatment::Text,
            ImageTreatment::Thumbnail(128),
            ImageTreatment::Crop(0.731),
            ImageTreatment::Rotate(12.0),
        ] {
            assert_eq!(ImageTreatment::parse(t.name(), &t.parameter()).unwrap(), t);
        }
        assert!(ImageTreatment::parse("thumbnail", "100").is_err());
        assert!(ImageTreatment::parse("rotate", "360").is_err());
    }
}
