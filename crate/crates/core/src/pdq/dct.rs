//! Low-frequency block of the orthonormal 2-D DCT-II over the 64x64 grid.

use std::f64::consts::PI;
use std::sync::OnceLock;

use super::downsample::{LumaGrid64, GRID};
use super::PdqError;

/// Side of the retained coefficient block.
pub const BLOCK: usize = 16;
pub const COEFFS: usize = BLOCK * BLOCK;

/// Coefficients `(u, v)` for `u, v` in `1..=16`, stored at raster index
/// `(u - 1) * 16 + (v - 1)`; `u` is the vertical frequency. The DC row and
/// column are not part of the block.
#[derive(Debug, Clone, PartialEq)]
pub struct DctMatrix16([f64; COEFFS]);

impl DctMatrix16 {
    pub fn new(coeffs: [f64; COEFFS]) -> Result<Self, PdqError> {
        if let Some(bad) = coeffs.iter().find(|v| !v.is_finite()) {
            return Err(PdqError::NonFinite(*bad));
        }
        Ok(Self(coeffs))
    }

    pub fn from_slice(coeffs: &[f64]) -> Result<Self, PdqError> {
        let arr: [f64; COEFFS] = coeffs.try_into().map_err(|_| PdqError::BufferSize {
            expected: COEFFS,
            actual: coeffs.len(),
        })?;
        Self::new(arr)
    }

    pub fn coeffs(&self) -> &[f64; COEFFS] {
        &self.0
    }

    /// Coefficient at vertical frequency `u` and horizontal frequency `v`, both in `1..=16`.
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.0[(u - 1) * BLOCK + (v - 1)]
    }
}

/// Basis rows `k = 1..=16`: `sqrt(2/64) * cos(pi * (2n + 1) * k / 128)`.
fn basis() -> &'static [[f64; GRID]; BLOCK] {
    static TABLE: OnceLock<[[f64; GRID]; BLOCK]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let scale = (2.0 / GRID as f64).sqrt();
        let mut t = [[0.0; GRID]; BLOCK];
        for (row, k) in t.iter_mut().zip(1..=BLOCK) {
            for (n, slot) in row.iter_mut().enumerate() {
                *slot = scale * (PI * (2 * n + 1) as f64 * k as f64 / (2 * GRID) as f64).cos();
            }
        }
        t
    })
}

/// Computes `D * G * D^T` with `G` taken relative to its first cell, which
/// leaves every AC coefficient unchanged and sends constant grids to an
/// exact zero matrix.
pub fn dct16(grid: &LumaGrid64) -> DctMatrix16 {
    let d = basis();
    let g = grid.values();
    let reference = g[0];
    // t[y][v] = sum_x (g[y][x] - ref) * d[v][x]
    let mut t = [[0.0f64; BLOCK]; GRID];
    for (y, trow) in t.iter_mut().enumerate() {
        let row = &g[y * GRID..(y + 1) * GRID];
        for (v, slot) in trow.iter_mut().enumerate() {
            *slot = row
                .iter()
                .zip(d[v].iter())
                .map(|(a, b)| (a - reference) * b)
                .sum();
        }
    }
    let mut out = [0.0f64; COEFFS];
    for u in 0..BLOCK {
        for v in 0..BLOCK {
            out[u * BLOCK + v] = (0..GRID).map(|y| d[u][y] * t[y][v]).sum();
        }
    }
    DctMatrix16(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_grid_has_no_ac_energy() {
        for c in [0.0, 17.25, 128.0, 255.0] {
            let m = dct16(&LumaGrid64::constant(c).unwrap());
            assert!(m.coeffs().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn linear_in_input() {
        let vals: Vec<f64> = (0..GRID * GRID).map(|i| ((i * 37) % 200) as f64).collect();
        let g = LumaGrid64::new(vals.clone()).unwrap();
        let a = 0.37;
        let ga = LumaGrid64::new(vals.iter().map(|v| v * a).collect()).unwrap();
        let (m, ma) = (dct16(&g), dct16(&ga));
        for (x, y) in m.coeffs().iter().zip(ma.coeffs()) {
            assert!((x * a - y).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut c = [0.0; COEFFS];
        c[5] = f64::NAN;
        assert!(DctMatrix16::new(c).is_err());
    }
}
