//! Timing against a cryptographic digest, bit-bias statistics and distance
//! histograms.

mod stats;
mod timing;

use thiserror::Error;

use crate::pdq::PdqError;

pub use stats::{bit_bias, distance_histogram, BitBiasReport};
pub use timing::{
    percentile, percentiles, time_hashing, time_pair, Hasher, Md5Hasher, Order, PdqHasher, Percentiles,
    TimingReport, TimingRow,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("no inputs")]
    Empty,
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Hash(#[from] PdqError),
}
