//! Perceptual hashing toolkit: a 256-bit DCT image hash, two-level temporal
//! video signatures, and an exact multi-index Hamming search structure,
//! plus the robustness harness, benchmarks, and HTTP service built on them.

pub mod bench;
pub mod harness;
pub mod index;
pub mod pdq;
pub mod tmk;
pub mod service;
