//! Placeholder watermark logo: opaque, many colours, shaded surfaces.
//! Generated with integer arithmetic only so the pixels are stable.

use image::imageops::{self, FilterType};

use crate::pdq::RasterImage;

pub const LOGO_SIZE: usize = 256;

const PALETTE: [[u32; 3]; 8] = [
    [200, 30, 40],
    [240, 170, 20],
    [30, 140, 60],
    [20, 90, 200],
    [130, 40, 170],
    [250, 250, 250],
    [20, 160, 170],
    [90, 60, 30],
];

fn isqrt(n: u32) -> u32 {
    (n as f64).sqrt() as u32
}

/// The 256x256 master logo.
pub fn base_logo() -> RasterImage {
    let c = LOGO_SIZE as i32 / 2;
    RasterImage::from_fn(LOGO_SIZE, LOGO_SIZE, |x, y| {
        let (dx, dy) = (x as i32 - c, y as i32 - c);
        let border = x < 8 || y < 8 || x >= LOGO_SIZE - 8 || y >= LOGO_SIZE - 8;
        if border {
            return [15, 25, 60];
        }
        // shading ramp from top-left (bright) to bottom-right (dark)
        let shade = 160 + (255 - (x + y) as u32 / 2).min(95);
        if dx.abs() + dy.abs() < 56 {
            // central diamond with a vertical gradient
            let t = (dy + 56) as u32;
            return [255, (120 + t).min(255) as u8, ((t * 2).min(255) / 3) as u8];
        }
        if (dx - dy).abs() < 10 {
            return [x.min(255) as u8, 20, (255 - y.min(255)) as u8];
        }
        let ring = (isqrt((dx * dx + dy * dy) as u32) / 14) as usize;
        let base = PALETTE[(ring + (x / 64)) % PALETTE.len()];
        base.map(|v| (v * shade / 255).min(255) as u8)
    })
    .expect("non-empty")
}

/// The logo resized to `side x side`.
pub fn logo(side: usize) -> RasterImage {
    let side = side.max(1);
    let master = base_logo();
    if side == LOGO_SIZE {
        return master;
    }
    let resized = imageops::resize(&master.to_rgb_image(), side as u32, side as u32, FilterType::Triangle);
    RasterImage::from_rgb_image(resized).expect("non-empty")
}

/// Copies `overlay` onto `img` with its top-left corner at `(x0, y0)`.
pub fn paste(img: &mut RasterImage, overlay: &RasterImage, x0: usize, y0: usize) {
    for y in 0..overlay.height() {
        let ty = y0 + y;
        if ty >= img.height() {
            break;
        }
        for x in 0..overlay.width() {
            let tx = x0 + x;
            if tx >= img.width() {
                break;
            }
            img.put_pixel(tx, ty, overlay.pixel(x, y));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sha2::{Digest, Sha256};

    #[test]
    fn master_logo_is_pinned() {
        let digest = Sha256::digest(base_logo().pixels());
        assert_eq!(hex::encode(digest), LOGO_SHA256);
    }

    #[test]
    fn logo_has_many_colours() {
        let l = base_logo();
        let colours: std::collections::HashSet<_> = l.pixels().chunks_exact(3).collect();
        assert!(colours.len() > 100);
    }

    const LOGO_SHA256: &str = "8ca65492c4c08d3ec732e8baf6852947328d72698aa980cf8857556359be8909";
}
