//! Two-pass separable box filter onto the fixed 64x64 luminance grid.

use super::PdqError;

pub const GRID: usize = 64;

/// 64x64 luminance grid, row-major, every value finite and in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LumaGrid64(Box<[f64; GRID * GRID]>);

impl LumaGrid64 {
    pub fn new(values: Vec<f64>) -> Result<Self, PdqError> {
        let boxed: Box<[f64; GRID * GRID]> = values
            .into_boxed_slice()
            .try_into()
            .map_err(|v: Box<[f64]>| PdqError::BufferSize {
                expected: GRID * GRID,
                actual: v.len(),
            })?;
        if let Some(bad) = boxed.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 255.0) {
            return Err(PdqError::LumaOutOfRange(*bad));
        }
        Ok(Self(boxed))
    }

    pub fn constant(value: f64) -> Result<Self, PdqError> {
        Self::new(vec![value; GRID * GRID])
    }

    pub fn values(&self) -> &[f64; GRID * GRID] {
        &self.0
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[row * GRID + col]
    }

    pub fn transpose(&self) -> Self {
        let mut out = vec![0.0; GRID * GRID];
        for r in 0..GRID {
            for c in 0..GRID {
                out[c * GRID + r] = self.0[r * GRID + c];
            }
        }
        Self::new(out).expect("transpose preserves range")
    }
}

/// Source taps `(index, weight)` for each of the 64 output cells along an
/// axis of length `n`; weights are the fractional overlap of source pixel
/// `[i, i+1)` with cell `[j*n/64, (j+1)*n/64)`.
fn coverage(n: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = n as f64 / GRID as f64;
    (0..GRID)
        .map(|j| {
            let lo = j as f64 * scale;
            let hi = (j + 1) as f64 * scale;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(n);
            (first..last)
                .filter_map(|i| {
                    let w = (hi.min(i as f64 + 1.0) - lo.max(i as f64)).max(0.0);
                    (w > 0.0).then_some((i, w))
                })
                .collect()
        })
        .collect()
}

/// Replicates pixels by integer factors so both sides are at least 64.
fn replicate_to_min(luma: &[f64], w: usize, h: usize) -> (Vec<f64>, usize, usize) {
    let fx = GRID.div_ceil(w).max(1);
    let fy = GRID.div_ceil(h).max(1);
    if fx == 1 && fy == 1 {
        return (luma.to_vec(), w, h);
    }
    let (nw, nh) = (w * fx, h * fy);
    let mut out = Vec::with_capacity(nw * nh);
    for y in 0..nh {
        let row = &luma[(y / fy) * w..(y / fy + 1) * w];
        for x in 0..nw {
            out.push(row[x / fx]);
        }
    }
    (out, nw, nh)
}

/// Averages a `w x h` luminance plane onto a 64x64 grid.
///
/// Values are accumulated as offsets from the plane's first sample, so a
/// constant plane maps to exactly that constant.
pub fn downsample64(luma: &[f64], w: usize, h: usize) -> Result<LumaGrid64, PdqError> {
    if w == 0 || h == 0 || luma.is_empty() {
        return Err(PdqError::EmptyImage {
            width: w,
            height: h,
        });
    }
    if luma.len() != w * h {
        return Err(PdqError::BufferSize {
            expected: w * h,
            actual: luma.len(),
        });
    }
    let (plane, w, h) = replicate_to_min(luma, w, h);
    let reference = plane[0];
    let cols = coverage(w);
    let rows = coverage(h);
    let sx = w as f64 / GRID as f64;
    let sy = h as f64 / GRID as f64;

    // rows pass: h x 64 offsets from the reference value
    let mut tmp = vec![0.0; h * GRID];
    for y in 0..h {
        let src = &plane[y * w..(y + 1) * w];
        for (j, taps) in cols.iter().enumerate() {
            let acc: f64 = taps.iter().map(|&(i, wt)| wt * (src[i] - reference)).sum();
            tmp[y * GRID + j] = acc / sx;
        }
    }
    // columns pass
    let mut out = vec![0.0; GRID * GRID];
    for (r, taps) in rows.iter().enumerate() {
        for c in 0..GRID {
            let acc: f64 = taps.iter().map(|&(i, wt)| wt * tmp[i * GRID + c]).sum();
            out[r * GRID + c] = (reference + acc / sy).clamp(0.0, 255.0);
        }
    }
    LumaGrid64::new(out)
}
