use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::harness::ReportRow;
use crate::pdq::{Hash256, HASH_BITS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitBiasReport {
    pub label: String,
    pub deduplicated: bool,
    /// Hashes that contributed after optional deduplication.
    pub count: usize,
    pub means: Vec<f64>,
}

impl BitBiasReport {
    pub fn min(&self) -> f64 {
        self.means.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.means.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Position-wise mean bit value.
pub fn bit_bias(hashes: &[Hash256], dedupe: bool, label: &str) -> Result<BitBiasReport, BenchError> {
    if hashes.is_empty() {
        return Err(BenchError::Empty);
    }
    let unique: Vec<Hash256>;
    let used: &[Hash256] = if dedupe {
        unique = hashes.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        &unique
    } else {
        hashes
    };
    let mut counts = vec![0u64; HASH_BITS];
    for h in used {
        for (i, c) in counts.iter_mut().enumerate() {
            *c += h.bit(i) as u64;
        }
    }
    Ok(BitBiasReport {
        label: label.to_string(),
        deduplicated: dedupe,
        count: used.len(),
        means: counts.iter().map(|&c| c as f64 / used.len() as f64).collect(),
    })
}

/// Counts per distance 0..=256 for each report series; rows without a
/// distance are ignored.
pub fn distance_histogram(rows: &[ReportRow]) -> BTreeMap<String, Vec<u64>> {
    let mut out: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    for r in rows {
        if let Some(d) = r.distance {
            out.entry(r.series()).or_insert_with(|| vec![0; HASH_BITS + 1])[d as usize] += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_hashes_dedupe_to_one() {
        let h = Hash256([0xdead_beef, 7, 0, u64::MAX]);
        let r = bit_bias(&[h; 50], true, "same").unwrap();
        assert_eq!(r.count, 1);
        assert!(r.means.iter().all(|&m| m == 0.0 || m == 1.0));
        assert!(bit_bias(&[], false, "").is_err());
    }

    #[test]
    fn complement_pairs_are_exactly_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let hs: Vec<_> = (0..100)
            .flat_map(|_| {
                let h = Hash256(rng.gen());
                [h, h.complement()]
            })
            .collect();
        let r = bit_bias(&hs, false, "pairs").unwrap();
        assert!(r.means.iter().all(|&m| m == 0.5));
    }

    #[test]
    fn uniform_random_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let hs: Vec<_> = (0..100_000).map(|_| Hash256(rng.gen())).collect();
        let r = bit_bias(&hs, true, "uniform").unwrap();
        assert!(r.min() >= 0.49 && r.max() <= 0.51, "{} {}", r.min(), r.max());
    }

    #[test]
    fn histogram_conserves_counts() {
        let rows: Vec<ReportRow> = [(Some(0), "format"), (Some(2), "format"), (None, "format"), (Some(40), "crop")]
            .into_iter()
            .map(|(d, t)| ReportRow {
                file_id: "f".into(),
                treatment: t.into(),
                distance: d,
                ..ReportRow::default()
            })
            .collect();
        let h = distance_histogram(&rows);
        assert_eq!(h["format"].iter().sum::<u64>(), 2);
        assert_eq!(h["format"][2], 1);
        assert_eq!(h["crop"][40], 1);
        assert_eq!(h["format"].len(), 257);
    }
}
