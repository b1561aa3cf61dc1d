use std::path::{Path, PathBuf};
use std::time::Instant;

use md5::{Digest, Md5};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::pdq::hash_bytes;

/// Anything timed per file. Implementations read the file themselves so
/// every algorithm pays for the same I/O.
pub trait Hasher: Sync {
    fn name(&self) -> &str;
    fn hash_file(&self, path: &Path) -> Result<String, BenchError>;
}

fn read(path: &Path) -> Result<Vec<u8>, BenchError> {
    std::fs::read(path).map_err(|e| BenchError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Read, decode and perceptually hash.
pub struct PdqHasher;

impl Hasher for PdqHasher {
    fn name(&self) -> &str {
        "pdq"
    }

    fn hash_file(&self, path: &Path) -> Result<String, BenchError> {
        Ok(hash_bytes(&read(path)?)?.bits.to_hex())
    }
}

/// Read and MD5 the raw bytes.
pub struct Md5Hasher;

impl Hasher for Md5Hasher {
    fn name(&self) -> &str {
        "md5"
    }

    fn hash_file(&self, path: &Path) -> Result<String, BenchError> {
        Ok(hex::encode(Md5::digest(read(path)?)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    PerceptualFirst,
    BaselineFirst,
}

impl Order {
    /// Coin flip for one file, a pure function of `(seed, index)`.
    pub fn pick(seed: u64, index: usize) -> Order {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        if rng.gen_bool(0.5) {
            Order::PerceptualFirst
        } else {
            Order::BaselineFirst
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub file_id: String,
    pub bytes: u64,
    pub perceptual_seconds: f64,
    pub baseline_seconds: f64,
    pub order: Order,
}

/// Nearest-rank percentiles in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
}

/// Nearest-rank percentile: the smallest value with at least `p` percent of
/// the sample at or below it.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

pub fn percentiles(values: &[f64]) -> Percentiles {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Percentiles {
        p50: percentile(&v, 50.0),
        p90: percentile(&v, 90.0),
        p99: percentile(&v, 99.0),
    }
}

#[derive(Debug, Clone)]
pub struct TimingReport {
    pub rows: Vec<TimingRow>,
    /// Files that either hasher failed on.
    pub skipped: Vec<(String, String)>,
    pub perceptual: Percentiles,
    pub baseline: Percentiles,
}

fn timed(h: &dyn Hasher, path: &Path) -> Result<f64, BenchError> {
    let start = Instant::now();
    let out = h.hash_file(path);
    let secs = start.elapsed().as_secs_f64();
    out.map(|_| secs)
}

/// Times both hashers on one file in the given order.
pub fn time_pair(
    perceptual: &dyn Hasher,
    baseline: &dyn Hasher,
    file_id: &str,
    path: &Path,
    order: Order,
) -> Result<TimingRow, BenchError> {
    let bytes = std::fs::metadata(path)
        .map_err(|e| BenchError::Io { path: path.display().to_string(), source: e })?
        .len();
    let (p, b) = match order {
        Order::PerceptualFirst => {
            let p = timed(perceptual, path)?;
            (p, timed(baseline, path)?)
        }
        Order::BaselineFirst => {
            let b = timed(baseline, path)?;
            (timed(perceptual, path)?, b)
        }
    };
    Ok(TimingRow {
        file_id: file_id.to_string(),
        bytes,
        perceptual_seconds: p,
        baseline_seconds: b,
        order,
    })
}

/// Times every file on the calling thread, one at a time.
pub fn time_hashing(
    files: &[(String, PathBuf)],
    perceptual: &dyn Hasher,
    baseline: &dyn Hasher,
    seed: u64,
) -> Result<TimingReport, BenchError> {
    if files.is_empty() {
        return Err(BenchError::Empty);
    }
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (i, (id, path)) in files.iter().enumerate() {
        match time_pair(perceptual, baseline, id, path, Order::pick(seed, i)) {
            Ok(r) => rows.push(r),
            Err(e) => skipped.push((id.clone(), e.to_string())),
        }
    }
    let p: Vec<f64> = rows.iter().map(|r| r.perceptual_seconds).collect();
    let b: Vec<f64> = rows.iter().map(|r| r.baseline_seconds).collect();
    Ok(TimingReport {
        perceptual: percentiles(&p),
        baseline: percentiles(&b),
        rows,
        skipped,
    })
}
