//! Bundled 5x7 bitmap font for overlay text.

use crate::pdq::RasterImage;

const GLYPH_W: usize = 5;
const GLYPH_H: usize = 7;
/// Glyph cell width including one column of spacing.
const ADVANCE: usize = GLYPH_W + 1;

/// The overlay string used by the text treatments.
pub const OVERLAY_TEXT: &str = "AiLECS";

fn glyph(c: char) -> [&'static str; GLYPH_H] {
    match c {
        'A' => [".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"],
        'i' => ["..#..", ".....", ".##..", "..#..", "..#..", "..#..", ".###."],
        'L' => ["#....", "#....", "#....", "#....", "#....", "#....", "#####"],
        'E' => ["#####", "#....", "#....", "####.", "#....", "#....", "#####"],
        'C' => [".####", "#....", "#....", "#....", "#....", "#....", ".####"],
        'S' => [".####", "#....", "#....", ".###.", "....#", "....#", "####."],
        _ => ["#####", "#...#", "#...#", "#...#", "#...#", "#...#", "#####"],
    }
}

/// Width in font units (one unit = one glyph pixel).
pub fn text_units(text: &str) -> usize {
    let n = text.chars().count();
    if n == 0 {
        0
    } else {
        n * ADVANCE - 1
    }
}

pub const TEXT_HEIGHT_UNITS: usize = GLYPH_H;

/// Rendered size in pixels at `scale` pixels per font unit.
pub fn text_size(text: &str, scale: f64) -> (usize, usize) {
    (
        (text_units(text) as f64 * scale).floor() as usize,
        (GLYPH_H as f64 * scale).floor() as usize,
    )
}

/// Draws `text` with its top-left corner at `(x0, y0)`, which may lie
/// outside the image; the result is clipped.
pub fn draw_text(img: &mut RasterImage, text: &str, x0: i64, y0: i64, scale: f64, rgb: [u8; 3]) {
    if scale <= 0.0 {
        return;
    }
    let glyphs: Vec<_> = text.chars().map(glyph).collect();
    let (tw, th) = text_size(text, scale);
    let (w, h) = (img.width() as i64, img.height() as i64);
    for ty in 0..th as i64 {
        let y = y0 + ty;
        if y < 0 || y >= h {
            continue;
        }
        let gy = ((ty as f64 / scale) as usize).min(GLYPH_H - 1);
        for tx in 0..tw as i64 {
            let x = x0 + tx;
            if x < 0 || x >= w {
                continue;
            }
            let gx = (tx as f64 / scale) as usize;
            let (cell, col) = (gx / ADVANCE, gx % ADVANCE);
            if col >= GLYPH_W || cell >= glyphs.len() {
                continue;
            }
            if glyphs[cell][gy].as_bytes()[col] == b'#' {
                img.put_pixel(x as usize, y as usize, rgb);
            }
        }
    }
}
