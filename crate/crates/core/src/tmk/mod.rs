//! Two-level temporal video signatures.
//!
//! Frames are resampled to 15 fps and reduced to 256-dimensional
//! un-quantized DCT features. Level 1 is their normalized mean; level 2
//! holds cosine- and sine-weighted sums for four periods and 32 harmonics,
//! which lets the scorer evaluate a temporal match kernel at any time
//! offset without revisiting frames.
//!
//! This module never decodes video; callers hand it frames.

pub mod format;
mod frames;
mod score;
mod signature;

use thiserror::Error;

pub use frames::{resample, resample_indices, resampled_len, FrameStream, RESAMPLE_FPS};
pub use score::{
    cosine, level1_score, level2_alignment, level2_score, offset_bound, two_phase_match,
    MatchDecision, Score, Thresholds, DEFAULT_THRESHOLD, MAX_OFFSET_SECONDS,
};
pub use signature::{
    build_signature, frame_feature, level2_offset, signature_from_stream, FrameFeature,
    SignatureBuilder, TmkSignature, FEATURE_DIM, FOURIER_COEFFS, LEVEL2_LEN, LEVEL2_VECTORS,
    PERIODS,
};

#[derive(Debug, Error)]
pub enum TmkError {
    #[error("no frames")]
    EmptyStream,
    #[error("invalid frame rate {0}")]
    InvalidFps(f64),
    #[error("frame {index} is {actual:?}, stream is {expected:?}")]
    FrameSize {
        index: usize,
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("non-finite value in signature")]
    NonFinite,
    #[error("signature has {level1} level-1 and {level2} level-2 values")]
    Shape { level1: usize, level2: usize },
    #[error("thresholds ({level1}, {level2}) outside [-1, 1] x [0, 1]")]
    Threshold { level1: f64, level2: f64 },
    #[error("not a signature file (bad magic)")]
    BadMagic,
    #[error("unsupported signature version {0}")]
    UnsupportedVersion(u32),
    #[error("signature truncated: {actual} of {expected} bytes")]
    Truncated { expected: usize, actual: usize },
    #[error("malformed signature: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pdq::RasterImage;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_features(n: usize, seed: u64) -> Vec<FrameFeature> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let mut v = [0.0; FEATURE_DIM];
                rng.fill(&mut v[..]);
                for x in v.iter_mut() {
                    *x = *x * 2.0 - 1.0;
                }
                FrameFeature::new(v).unwrap()
            })
            .collect()
    }

    fn sig_of(features: &[FrameFeature]) -> TmkSignature {
        build_signature(features, features.len() as f64 / 15.0).unwrap()
    }

    fn with_level1(l1: Vec<f32>) -> TmkSignature {
        TmkSignature::from_parts(1, 0.1, l1, vec![0.5; LEVEL2_LEN]).unwrap()
    }

    #[test]
    fn self_match_is_one() {
        for seed in 0..5 {
            let s = sig_of(&random_features(40, seed));
            assert!((level1_score(&s, &s).value - 1.0).abs() < 1e-6);
            assert!((level2_score(&s, &s).value - 1.0).abs() < 1e-6);
            let d = two_phase_match(&s, &s, Thresholds::default());
            assert!(d.matched);
            assert!((d.level2_score.unwrap() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn level1_reference_values() {
        let mut e0 = vec![0.0f32; FEATURE_DIM];
        e0[0] = 1.0;
        let mut e1 = vec![0.0f32; FEATURE_DIM];
        e1[1] = 1.0;
        let neg: Vec<f32> = e0.iter().map(|v| -v).collect();
        assert_eq!(level1_score(&with_level1(e0.clone()), &with_level1(neg)).value, -1.0);
        assert_eq!(level1_score(&with_level1(e0.clone()), &with_level1(e1)).value, 0.0);
        let zero = level1_score(&with_level1(e0), &with_level1(vec![0.0; FEATURE_DIM]));
        assert!(zero.degenerate);
        assert_eq!(zero.value, 0.0);
    }

    #[test]
    fn gate_skips_level2_below_threshold() {
        // level-1 cosine of exactly 0.5
        let mut a = vec![0.0f32; FEATURE_DIM];
        a[0] = 1.0;
        let mut b = vec![0.0f32; FEATURE_DIM];
        b[0] = 0.5;
        b[1] = 0.75f32.sqrt();
        let (sa, sb) = (with_level1(a), with_level1(b));
        let d = two_phase_match(&sa, &sb, Thresholds::default());
        assert!((d.level1_score - 0.5).abs() < 1e-6);
        assert_eq!(d.level2_score, None);
        assert!(!d.matched);
        let forced = two_phase_match(&sa, &sb, Thresholds::forced(0.7).unwrap());
        assert!(forced.level2_score.is_some());
    }

    #[test]
    fn forced_scoring_of_unrelated_clips() {
        let a = sig_of(&random_features(60, 1));
        let b = sig_of(&random_features(60, 2));
        let d = two_phase_match(&a, &b, Thresholds::forced(0.7).unwrap());
        assert!(d.level2_score.is_some());
        assert!(!d.matched);
    }

    #[test]
    fn thresholds_validated() {
        assert!(Thresholds::new(-1.0, 0.0).is_ok());
        assert!(Thresholds::new(-1.1, 0.5).is_err());
        assert!(Thresholds::new(0.7, 1.5).is_err());
        assert!(Thresholds::new(0.7, -0.1).is_err());
    }

    #[test]
    fn scores_symmetric() {
        let a = sig_of(&random_features(30, 5));
        let b = sig_of(&random_features(45, 6));
        assert!((level1_score(&a, &b).value - level1_score(&b, &a).value).abs() < 1e-9);
        assert!((level2_score(&a, &b).value - level2_score(&b, &a).value).abs() < 1e-9);
    }

    #[test]
    fn reversal_keeps_level1_changes_level2() {
        let f = random_features(12, 9);
        let mut r = f.clone();
        r.reverse();
        let (a, b) = (sig_of(&f), sig_of(&r));
        for (x, y) in a.level1().iter().zip(b.level1()) {
            assert!((x - y).abs() < 1e-6);
        }
        assert_ne!(a.level2(), b.level2());
    }

    #[test]
    fn accumulation_matches_double_loop() {
        use std::f64::consts::PI;
        let f = random_features(10, 4);
        let s = sig_of(&f);
        for (p, &t) in PERIODS.iter().enumerate() {
            for n in 1..=FOURIER_COEFFS {
                for (sin, comp) in [(false, s.level2_component(p, n, false)), (true, s.level2_component(p, n, true))] {
                    for d in 0..FEATURE_DIM {
                        let mut acc = 0.0;
                        for (k, fk) in f.iter().enumerate() {
                            let x = 2.0 * PI * n as f64 * k as f64 / t as f64;
                            acc += if sin { x.sin() } else { x.cos() } * fk.values()[d];
                        }
                        acc /= f.len() as f64;
                        let err = (comp[d] as f64 - acc).abs();
                        // stored at f32 precision
                        assert!(err <= 1e-6 * acc.abs().max(1.0), "p={p} n={n} d={d}");
                    }
                }
            }
        }
    }

    #[test]
    fn kernel_finds_trim_offset() {
        let f = random_features(120, 12);
        let a = sig_of(&f);
        let b = sig_of(&f[30..]);
        let (score, delta) = level2_alignment(&a, &b);
        assert_eq!(delta, 30);
        assert!(score.value > 0.8, "{}", score.value);
    }

    #[test]
    fn duplicate_frame_stream_matches_level1() {
        let frames: Vec<RasterImage> = (0..20)
            .map(|i| RasterImage::from_fn(64, 48, |x, y| [((x * i + y) % 256) as u8, (y * 3) as u8, (i * 10) as u8]).unwrap())
            .collect();
        let doubled: Vec<RasterImage> = frames.iter().flat_map(|f| [f.clone(), f.clone()]).collect();
        let a = signature_from_stream(&FrameStream::new(15.0, frames).unwrap()).unwrap();
        let b = signature_from_stream(&FrameStream::new(30.0, doubled).unwrap()).unwrap();
        for (x, y) in a.level1().iter().zip(b.level1()) {
            assert!((x - y).abs() < 1e-6);
        }
        assert_eq!(a.frame_count(), b.frame_count());
    }
}
