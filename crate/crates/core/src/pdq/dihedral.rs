//! The eight symmetries of the square applied to rasters.

use super::raster::RasterImage;

/// Elements of the dihedral group, in the order hashes are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dihedral {
    Identity,
    Rotate90,
    Rotate180,
    Rotate270,
    FlipHorizontal,
    FlipHorizontalRotate90,
    FlipHorizontalRotate180,
    FlipHorizontalRotate270,
}

impl Dihedral {
    pub const ALL: [Dihedral; 8] = [
        Dihedral::Identity,
        Dihedral::Rotate90,
        Dihedral::Rotate180,
        Dihedral::Rotate270,
        Dihedral::FlipHorizontal,
        Dihedral::FlipHorizontalRotate90,
        Dihedral::FlipHorizontalRotate180,
        Dihedral::FlipHorizontalRotate270,
    ];

    fn parts(self) -> (bool, u8) {
        match self {
            Dihedral::Identity => (false, 0),
            Dihedral::Rotate90 => (false, 1),
            Dihedral::Rotate180 => (false, 2),
            Dihedral::Rotate270 => (false, 3),
            Dihedral::FlipHorizontal => (true, 0),
            Dihedral::FlipHorizontalRotate90 => (true, 1),
            Dihedral::FlipHorizontalRotate180 => (true, 2),
            Dihedral::FlipHorizontalRotate270 => (true, 3),
        }
    }

    /// Applies the optional mirror first, then clockwise quarter turns.
    pub fn apply(self, img: &RasterImage) -> RasterImage {
        let (flip, turns) = self.parts();
        let mut out = if flip { flip_horizontal(img) } else { img.clone() };
        for _ in 0..turns {
            out = rotate90(&out);
        }
        out
    }
}

/// Clockwise quarter turn.
pub fn rotate90(img: &RasterImage) -> RasterImage {
    let (w, h) = (img.width(), img.height());
    RasterImage::from_fn(h, w, |x, y| img.pixel(y, h - 1 - x)).expect("non-empty")
}

pub fn flip_horizontal(img: &RasterImage) -> RasterImage {
    let w = img.width();
    RasterImage::from_fn(w, img.height(), |x, y| img.pixel(w - 1 - x, y)).expect("non-empty")
}
