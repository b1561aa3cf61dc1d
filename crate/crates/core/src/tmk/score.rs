//! Level-1 cosine screening, level-2 temporal kernel scoring, and the
//! two-phase match decision.

use std::f64::consts::TAU;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::frames::RESAMPLE_FPS;
use super::signature::{TmkSignature, FEATURE_DIM, FOURIER_COEFFS, PERIODS};
use super::TmkError;

/// Recommended threshold for both phases.
pub const DEFAULT_THRESHOLD: f64 = 0.7;
/// Largest time offset searched by the level-2 kernel, in seconds.
pub const MAX_OFFSET_SECONDS: u64 = 300;

/// A similarity value plus whether it was forced to 0 by a zero-norm input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    pub degenerate: bool,
}

impl Score {
    fn degenerate() -> Self {
        Self {
            value: 0.0,
            degenerate: true,
        }
    }
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum()
}

/// Cosine similarity clamped to `[-1, 1]`; zero-norm input scores 0.
pub fn cosine(a: &[f32], b: &[f32]) -> Score {
    let na = dot(a, a);
    let nb = dot(b, b);
    if na == 0.0 || nb == 0.0 {
        return Score::degenerate();
    }
    Score {
        value: (dot(a, b) / (na * nb).sqrt()).clamp(-1.0, 1.0),
        degenerate: false,
    }
}

/// Cosine similarity of the level-1 vectors, in `[-1, 1]`.
pub fn level1_score(a: &TmkSignature, b: &TmkSignature) -> Score {
    cosine(a.level1(), b.level1())
}

fn trig_tables() -> &'static [(Vec<f64>, Vec<f64>); 4] {
    static TABLES: OnceLock<[(Vec<f64>, Vec<f64>); 4]> = OnceLock::new();
    TABLES.get_or_init(|| {
        PERIODS.map(|t| {
            let t = t as usize;
            let cos = (0..t).map(|j| (TAU * j as f64 / t as f64).cos()).collect();
            let sin = (0..t).map(|j| (TAU * j as f64 / t as f64).sin()).collect();
            (cos, sin)
        })
    })
}

/// Per-(period, n) inner products `P = Ca.Cb + Sa.Sb` and `Q = Sa.Cb - Ca.Sb`.
fn cross_terms(a: &TmkSignature, b: &TmkSignature) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(PERIODS.len() * FOURIER_COEFFS);
    for p in 0..PERIODS.len() {
        for n in 1..=FOURIER_COEFFS {
            let ca = a.level2_component(p, n, false);
            let sa = a.level2_component(p, n, true);
            let cb = b.level2_component(p, n, false);
            let sb = b.level2_component(p, n, true);
            out.push((dot(ca, cb) + dot(sa, sb), dot(sa, cb) - dot(ca, sb)));
        }
    }
    out
}

fn energy(s: &TmkSignature) -> f64 {
    s.level2().chunks_exact(FEATURE_DIM).map(|c| dot(c, c)).sum()
}

/// Kernel value at offset `delta` (frames) from precomputed cross terms.
///
/// `K(delta) = sum_{T,n} P cos(2 pi n delta / T) + Q sin(2 pi n delta / T)`,
/// which equals `sum_{j,k} <a_j, b_k> kern(j - k - delta)` with
/// `kern(t) = sum_{T,n} cos(2 pi n t / T)`; positive `delta` aligns frame 0
/// of `b` with frame `delta` of `a`.
fn kernel_at(terms: &[(f64, f64)], delta: i64) -> f64 {
    let tables = trig_tables();
    let mut k = 0.0;
    for (p, &period) in PERIODS.iter().enumerate() {
        let t = period as i64;
        let (cos, sin) = &tables[p];
        for n in 1..=FOURIER_COEFFS {
            let (pp, qq) = terms[p * FOURIER_COEFFS + n - 1];
            let j = (n as i64 * delta).rem_euclid(t) as usize;
            k += pp * cos[j] + qq * sin[j];
        }
    }
    k
}

/// Offsets searched: every frame step within +-300 s, bounded by the
/// shorter signature's length.
pub fn offset_bound(a: &TmkSignature, b: &TmkSignature) -> i64 {
    let cap = MAX_OFFSET_SECONDS * RESAMPLE_FPS as u64;
    a.frame_count().min(b.frame_count()).min(cap) as i64
}

/// Best normalized kernel value and the offset achieving it.
pub fn level2_alignment(a: &TmkSignature, b: &TmkSignature) -> (Score, i64) {
    let ea = energy(a);
    let eb = energy(b);
    if ea == 0.0 || eb == 0.0 {
        return (Score::degenerate(), 0);
    }
    let terms = cross_terms(a, b);
    let bound = offset_bound(a, b);
    let (mut best, mut best_delta) = (f64::NEG_INFINITY, 0);
    // scan outward from zero so ties resolve to the smallest |delta|
    for delta in std::iter::once(0).chain((1..=bound).flat_map(|s| [-s, s])) {
        let k = kernel_at(&terms, delta);
        if k > best {
            best = k;
            best_delta = delta;
        }
    }
    let value = (best / (ea * eb).sqrt()).clamp(0.0, 1.0);
    (
        Score {
            value,
            degenerate: false,
        },
        best_delta,
    )
}

/// Normalized temporal kernel score in `[0, 1]`.
pub fn level2_score(a: &TmkSignature, b: &TmkSignature) -> Score {
    level2_alignment(a, b).0
}

/// Outcome of the two-phase comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchDecision {
    pub level1_score: f64,
    /// Present only when phase 1 passed.
    pub level2_score: Option<f64>,
    pub matched: bool,
    pub degenerate: bool,
}

/// Phase-1 and phase-2 thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub level1: f64,
    pub level2: f64,
}

impl Thresholds {
    pub fn new(level1: f64, level2: f64) -> Result<Self, TmkError> {
        if !(-1.0..=1.0).contains(&level1) || !(0.0..=1.0).contains(&level2) {
            return Err(TmkError::Threshold { level1, level2 });
        }
        Ok(Self { level1, level2 })
    }

    /// Phase 1 set to -1 so level 2 is always computed.
    pub fn forced(level2: f64) -> Result<Self, TmkError> {
        Self::new(-1.0, level2)
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            level1: DEFAULT_THRESHOLD,
            level2: DEFAULT_THRESHOLD,
        }
    }
}

/// Scores level 1; scores level 2 only when level 1 reaches its threshold.
pub fn two_phase_match(a: &TmkSignature, b: &TmkSignature, t: Thresholds) -> MatchDecision {
    let l1 = level1_score(a, b);
    if l1.value < t.level1 {
        return MatchDecision {
            level1_score: l1.value,
            level2_score: None,
            matched: false,
            degenerate: l1.degenerate,
        };
    }
    let l2 = level2_score(a, b);
    MatchDecision {
        level1_score: l1.value,
        level2_score: Some(l2.value),
        matched: !l1.degenerate && !l2.degenerate && l2.value >= t.level2,
        degenerate: l1.degenerate || l2.degenerate,
    }
}
