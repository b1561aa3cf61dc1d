use serde::{Deserialize, Serialize};

use crate::pdq::{hamming, Hash256, HASH_BITS};

use super::IndexError;

/// Number of 16-bit chunks a hash is split into.
pub const CHUNKS: usize = 16;
const BUCKETS: usize = 1 << 16;

pub type EntryId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub hash: Hash256,
    pub label: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryResult {
    pub id: EntryId,
    pub label: Vec<u8>,
    pub distance: u32,
}

/// Multi-index hash table over 256-bit codes.
///
/// Each hash is posted once in each of 16 tables, keyed by one 16-bit chunk.
/// If `hamming(a, b) <= r` then some chunk pair differs in at most
/// `r / 16` bits, so probing every table with all chunk values within that
/// sub-radius finds every true neighbour. Candidates are always verified
/// with a full popcount.
#[derive(Clone, PartialEq, Eq)]
pub struct MihIndex {
    entries: Vec<Entry>,
    tables: Vec<Vec<Vec<EntryId>>>,
}

impl std::fmt::Debug for MihIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MihIndex")
            .field("entries", &self.entries.len())
            .finish()
    }
}

impl Default for MihIndex {
    fn default() -> Self {
        Self::new()
    }
}

fn check_radius(radius: u32) -> Result<(), IndexError> {
    if radius as usize > HASH_BITS {
        Err(IndexError::Radius(radius))
    } else {
        Ok(())
    }
}

fn sort_results(results: &mut [QueryResult]) {
    results.sort_by(|a, b| a.distance.cmp(&b.distance).then(a.id.cmp(&b.id)));
}

/// Values within Hamming distance `radius` of `key` in 16-bit space.
fn neighbours(key: u16, radius: u32, out: &mut Vec<u16>) {
    fn rec(value: u16, start: u32, left: u32, out: &mut Vec<u16>) {
        out.push(value);
        if left == 0 {
            return;
        }
        for bit in start..16 {
            rec(value ^ (1 << bit), bit + 1, left - 1, out);
        }
    }
    rec(key, 0, radius.min(16), out);
}

fn probes_per_table(sub_radius: u32) -> usize {
    // sum_{i <= s} C(16, i)
    let mut total = 0usize;
    let mut c = 1usize;
    for i in 0..=sub_radius.min(16) as usize {
        total += c;
        c = c * (16 - i) / (i + 1);
    }
    total
}

impl MihIndex {
    pub fn new() -> Self {
        Self {
            entries: Vec::new(),
            tables: (0..CHUNKS).map(|_| vec![Vec::new(); BUCKETS]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn get(&self, id: EntryId) -> Option<&Entry> {
        self.entries.get(id as usize)
    }

    /// Stores a hash and returns its dense id. Duplicates get distinct ids.
    pub fn insert(&mut self, hash: Hash256, label: impl Into<Vec<u8>>) -> EntryId {
        let id = EntryId::try_from(self.entries.len()).expect("index holds at most u32::MAX entries");
        for (c, table) in self.tables.iter_mut().enumerate() {
            table[hash.chunk(c) as usize].push(id);
        }
        self.entries.push(Entry {
            hash,
            label: label.into(),
        });
        id
    }

    /// Total postings across all tables (16 per entry).
    pub fn posting_count(&self) -> usize {
        self.tables.iter().flatten().map(Vec::len).sum()
    }

    pub(crate) fn tables(&self) -> &[Vec<Vec<EntryId>>] {
        &self.tables
    }

    /// Every stored entry within `radius`, sorted by `(distance, id)`.
    pub fn query(&self, hash: &Hash256, radius: u32) -> Result<Vec<QueryResult>, IndexError> {
        check_radius(radius)?;
        let sub = radius / CHUNKS as u32;
        // Probing costs more than a scan once the sub-radius is large.
        if CHUNKS * probes_per_table(sub) >= self.entries.len() {
            return linear_scan(&self.entries, hash, radius);
        }
        let mut keys = Vec::with_capacity(probes_per_table(sub));
        let mut candidates: Vec<EntryId> = Vec::new();
        for (c, table) in self.tables.iter().enumerate() {
            keys.clear();
            neighbours(hash.chunk(c), sub, &mut keys);
            for &k in &keys {
                candidates.extend_from_slice(&table[k as usize]);
            }
        }
        candidates.sort_unstable();
        candidates.dedup();
        let mut out: Vec<QueryResult> = candidates
            .into_iter()
            .filter_map(|id| {
                let e = &self.entries[id as usize];
                let d = hamming(&e.hash, hash);
                (d <= radius).then(|| QueryResult {
                    id,
                    label: e.label.clone(),
                    distance: d,
                })
            })
            .collect();
        sort_results(&mut out);
        Ok(out)
    }

    pub(crate) fn from_parts(entries: Vec<Entry>) -> Self {
        let mut idx = Self::new();
        for e in entries {
            idx.insert(e.hash, e.label);
        }
        idx
    }
}

/// Exhaustive popcount scan; the reference the index is checked against.
pub fn linear_scan(entries: &[Entry], hash: &Hash256, radius: u32) -> Result<Vec<QueryResult>, IndexError> {
    check_radius(radius)?;
    let mut out: Vec<QueryResult> = entries
        .iter()
        .enumerate()
        .filter_map(|(i, e)| {
            let d = hamming(&e.hash, hash);
            (d <= radius).then(|| QueryResult {
                id: i as EntryId,
                label: e.label.clone(),
                distance: d,
            })
        })
        .collect();
    sort_results(&mut out);
    Ok(out)
}
