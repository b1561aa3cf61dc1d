//! Frame features and the two-level temporal signature.

use std::f64::consts::TAU;

use crate::pdq::{dct16, luma_grid, RasterImage, COEFFS};

use super::frames::{resample_indices, FrameStream, RESAMPLE_FPS};
use super::TmkError;

/// Dimension of one frame feature.
pub const FEATURE_DIM: usize = COEFFS;
/// Periods, in resampled frames, of the trigonometric weightings.
pub const PERIODS: [u32; 4] = [2731, 4391, 9767, 14653];
/// Fourier coefficients per period (`n = 1..=32`).
pub const FOURIER_COEFFS: usize = 32;
/// `periods * coefficients * {cos, sin}` component vectors.
pub const LEVEL2_VECTORS: usize = PERIODS.len() * FOURIER_COEFFS * 2;
pub const LEVEL2_LEN: usize = LEVEL2_VECTORS * FEATURE_DIM;

/// Un-quantized DCT block of one frame, in coefficient raster order.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFeature(Box<[f64; FEATURE_DIM]>);

impl FrameFeature {
    pub fn new(values: [f64; FEATURE_DIM]) -> Result<Self, TmkError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(TmkError::NonFinite);
        }
        Ok(Self(Box::new(values)))
    }

    pub fn values(&self) -> &[f64; FEATURE_DIM] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }
}

pub fn frame_feature(frame: &RasterImage) -> FrameFeature {
    FrameFeature(Box::new(*dct16(&luma_grid(frame)).coeffs()))
}

/// Offset into the level-2 buffer of component `(period, n, sin)`; `n` is 1-based.
#[inline]
pub fn level2_offset(period: usize, n: usize, sin: bool) -> usize {
    ((period * FOURIER_COEFFS + (n - 1)) * 2 + sin as usize) * FEATURE_DIM
}

/// Two-level video signature. Values are kept at 32-bit precision so the
/// on-disk form round-trips exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct TmkSignature {
    pub(crate) frame_count: u64,
    pub(crate) resample_fps: u32,
    pub(crate) duration: f64,
    pub(crate) level1: Vec<f32>,
    pub(crate) level2: Vec<f32>,
}

impl TmkSignature {
    pub fn from_parts(
        frame_count: u64,
        duration: f64,
        level1: Vec<f32>,
        level2: Vec<f32>,
    ) -> Result<Self, TmkError> {
        if frame_count == 0 {
            return Err(TmkError::EmptyStream);
        }
        if level1.len() != FEATURE_DIM || level2.len() != LEVEL2_LEN {
            return Err(TmkError::Shape {
                level1: level1.len(),
                level2: level2.len(),
            });
        }
        if !duration.is_finite() || duration < 0.0 {
            return Err(TmkError::NonFinite);
        }
        Ok(Self {
            frame_count,
            resample_fps: RESAMPLE_FPS,
            duration,
            level1,
            level2,
        })
    }

    /// Resampled frames the signature was accumulated over.
    pub fn frame_count(&self) -> u64 {
        self.frame_count
    }

    pub fn resample_fps(&self) -> u32 {
        self.resample_fps
    }

    /// Source media duration in seconds.
    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn level1(&self) -> &[f32] {
        &self.level1
    }

    pub fn level2(&self) -> &[f32] {
        &self.level2
    }

    pub fn level2_component(&self, period: usize, n: usize, sin: bool) -> &[f32] {
        let o = level2_offset(period, n, sin);
        &self.level2[o..o + FEATURE_DIM]
    }

    /// True when every frame feature was zero (flat or black video).
    pub fn is_degenerate(&self) -> bool {
        self.level1.iter().all(|&v| v == 0.0)
    }
}

/// Builds a signature from an already resampled feature sequence.
///
/// Level 1 is the unit-normalized mean feature. Level-2 component
/// `(T, n, cos)` is `sum_k cos(2 pi n k / T) f_k / K` over resampled frame
/// indices `k` (sine likewise); the `1/K` scaling cancels in scoring.
pub fn build_signature(features: &[FrameFeature], duration: f64) -> Result<TmkSignature, TmkError> {
    let mut acc = Accumulator::new();
    for f in features {
        acc.push(f);
    }
    acc.finish(duration)
}

/// Resamples a decoded stream and builds its signature.
pub fn signature_from_stream(stream: &FrameStream) -> Result<TmkSignature, TmkError> {
    let mut b = SignatureBuilder::new(stream.nominal_fps())?;
    for f in stream.frames() {
        b.push_frame(f);
    }
    b.finish()
}

struct Accumulator {
    count: u64,
    sum: Vec<f64>,
    level2: Vec<f64>,
    trig: Vec<f64>,
}

impl Accumulator {
    fn new() -> Self {
        Self {
            count: 0,
            sum: vec![0.0; FEATURE_DIM],
            level2: vec![0.0; LEVEL2_LEN],
            trig: vec![0.0; LEVEL2_VECTORS],
        }
    }

    fn push(&mut self, f: &FrameFeature) {
        let k = self.count;
        let v = f.values();
        for (s, x) in self.sum.iter_mut().zip(v.iter()) {
            *s += x;
        }
        for (p, &period) in PERIODS.iter().enumerate() {
            let t = period as u64;
            for n in 1..=FOURIER_COEFFS {
                // reduce the phase exactly before converting to radians
                let phase = ((n as u64 * k) % t) as f64 / t as f64 * TAU;
                let i = (p * FOURIER_COEFFS + n - 1) * 2;
                self.trig[i] = phase.cos();
                self.trig[i + 1] = phase.sin();
            }
        }
        for (comp, &w) in self.level2.chunks_exact_mut(FEATURE_DIM).zip(self.trig.iter()) {
            for (c, x) in comp.iter_mut().zip(v.iter()) {
                *c += w * x;
            }
        }
        self.count += 1;
    }

    fn finish(self, duration: f64) -> Result<TmkSignature, TmkError> {
        if self.count == 0 {
            return Err(TmkError::EmptyStream);
        }
        let norm = self.sum.iter().map(|v| v * v).sum::<f64>().sqrt();
        let level1 = if norm > 0.0 {
            self.sum.iter().map(|v| (v / norm) as f32).collect()
        } else {
            vec![0.0; FEATURE_DIM]
        };
        let scale = 1.0 / self.count as f64;
        let level2 = self.level2.iter().map(|v| (v * scale) as f32).collect();
        TmkSignature::from_parts(self.count, duration, level1, level2)
    }
}

/// Incremental builder over frames at their nominal rate.
///
/// Features are extracted as frames arrive; resampling happens in
/// [`SignatureBuilder::finish`] once the clip length is known.
pub struct SignatureBuilder {
    fps: f64,
    features: Vec<FrameFeature>,
}

impl SignatureBuilder {
    pub fn new(nominal_fps: f64) -> Result<Self, TmkError> {
        if !(nominal_fps.is_finite() && nominal_fps > 0.0) {
            return Err(TmkError::InvalidFps(nominal_fps));
        }
        Ok(Self {
            fps: nominal_fps,
            features: Vec::new(),
        })
    }

    pub fn push_frame(&mut self, frame: &RasterImage) {
        self.features.push(frame_feature(frame));
    }

    pub fn push_feature(&mut self, feature: FrameFeature) {
        self.features.push(feature);
    }

    pub fn source_frames(&self) -> usize {
        self.features.len()
    }

    pub fn finish(self) -> Result<TmkSignature, TmkError> {
        if self.features.is_empty() {
            return Err(TmkError::EmptyStream);
        }
        let duration = self.features.len() as f64 / self.fps;
        let mut acc = Accumulator::new();
        for i in resample_indices(self.features.len(), self.fps) {
            acc.push(&self.features[i]);
        }
        acc.finish(duration)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feature(seed: u64) -> FrameFeature {
        let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let mut v = [0.0; FEATURE_DIM];
        for x in v.iter_mut() {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            *x = (s % 2001) as f64 / 1000.0 - 1.0;
        }
        FrameFeature::new(v).unwrap()
    }

    #[test]
    fn constant_frame_is_degenerate() {
        let frame = RasterImage::filled(70, 50, [40, 40, 40]).unwrap();
        let f = frame_feature(&frame);
        assert!(f.is_zero());
        let sig = build_signature(&[f], 1.0 / 15.0).unwrap();
        assert!(sig.is_degenerate());
        assert!(sig.level1().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_frame_level1_is_normalized_feature() {
        let f = feature(3);
        let sig = build_signature(std::slice::from_ref(&f), 0.1).unwrap();
        let norm = f.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        for (a, b) in sig.level1().iter().zip(f.values()) {
            assert!((*a as f64 - b / norm).abs() < 1e-6);
        }
    }

    #[test]
    fn two_frame_level2_direct_sum() {
        let (f0, f1) = (feature(1), feature(2));
        let sig = build_signature(&[f0.clone(), f1.clone()], 2.0 / 15.0).unwrap();
        for (p, &t) in PERIODS.iter().enumerate() {
            for n in [1usize, 7, 32] {
                let w = TAU * n as f64 / t as f64;
                let cos = sig.level2_component(p, n, false);
                let sin = sig.level2_component(p, n, true);
                for d in 0..FEATURE_DIM {
                    let c = (f0.values()[d] + w.cos() * f1.values()[d]) / 2.0;
                    let s = (w.sin() * f1.values()[d]) / 2.0;
                    assert!((cos[d] as f64 - c).abs() < 1e-6);
                    assert!((sin[d] as f64 - s).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn empty_rejected() {
        assert!(matches!(build_signature(&[], 0.0), Err(TmkError::EmptyStream)));
        assert!(matches!(
            SignatureBuilder::new(15.0).unwrap().finish(),
            Err(TmkError::EmptyStream)
        ));
    }

    #[test]
    fn sizes() {
        assert_eq!(FEATURE_DIM * 4, 1024);
        assert_eq!(LEVEL2_LEN * 4, 256 * 1024);
    }
}
