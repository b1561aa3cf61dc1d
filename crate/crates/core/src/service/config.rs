use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ServiceError;
use crate::pdq::MatchThreshold;
use crate::tmk::Thresholds;

/// Service settings. Loaded from TOML, then overridden by `PERCEPTKIT_*`
/// environment variables of the same (upper-cased) name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: String,
    /// Directory of `<name>.mih` snapshots loaded at start and written on
    /// shutdown or on demand. No persistence when unset.
    pub snapshot_dir: Option<PathBuf>,
    pub image_threshold: u32,
    pub level1_threshold: f64,
    pub level2_threshold: f64,
    pub max_upload_bytes: usize,
    /// Concurrent CPU-bound jobs; 0 means one per CPU.
    pub compute_workers: usize,
    /// Recorded for parity with the harness; the service only accepts
    /// precomputed signatures.
    pub transcoder_command: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen: "127.0.0.1:8080".into(),
            snapshot_dir: None,
            image_threshold: MatchThreshold::DEFAULT.max_distance(),
            level1_threshold: 0.7,
            level2_threshold: 0.7,
            max_upload_bytes: 32 << 20,
            compute_workers: 0,
            transcoder_command: None,
        }
    }
}

impl ServiceConfig {
    pub fn from_toml(s: &str) -> Result<Self, ServiceError> {
        toml::from_str(s).map_err(|e| ServiceError::Config(e.to_string()))
    }

    /// Reads `path` if given, applies environment overrides and validates.
    pub fn load(path: Option<&Path>) -> Result<Self, ServiceError> {
        let mut cfg = match path {
            Some(p) => Self::from_toml(
                &std::fs::read_to_string(p).map_err(|e| ServiceError::Config(format!("{}: {e}", p.display())))?,
            )?,
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ServiceError> {
        fn parse<T: std::str::FromStr>(key: &str, v: String) -> Result<T, ServiceError> {
            v.parse().map_err(|_| ServiceError::Config(format!("{key}={v} is not valid")))
        }
        if let Some(v) = get("PERCEPTKIT_LISTEN") {
            self.listen = v;
        }
        if let Some(v) = get("PERCEPTKIT_SNAPSHOT_DIR") {
            self.snapshot_dir = Some(v.into());
        }
        if let Some(v) = get("PERCEPTKIT_IMAGE_THRESHOLD") {
            self.image_threshold = parse("PERCEPTKIT_IMAGE_THRESHOLD", v)?;
        }
        if let Some(v) = get("PERCEPTKIT_LEVEL1_THRESHOLD") {
            self.level1_threshold = parse("PERCEPTKIT_LEVEL1_THRESHOLD", v)?;
        }
        if let Some(v) = get("PERCEPTKIT_LEVEL2_THRESHOLD") {
            self.level2_threshold = parse("PERCEPTKIT_LEVEL2_THRESHOLD", v)?;
        }
        if let Some(v) = get("PERCEPTKIT_MAX_UPLOAD_BYTES") {
            self.max_upload_bytes = parse("PERCEPTKIT_MAX_UPLOAD_BYTES", v)?;
        }
        if let Some(v) = get("PERCEPTKIT_COMPUTE_WORKERS") {
            self.compute_workers = parse("PERCEPTKIT_COMPUTE_WORKERS", v)?;
        }
        if let Some(v) = get("PERCEPTKIT_TRANSCODER_COMMAND") {
            self.transcoder_command = Some(v);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        MatchThreshold::new(self.image_threshold).map_err(|e| ServiceError::Config(e.to_string()))?;
        self.thresholds()?;
        if self.max_upload_bytes == 0 {
            return Err(ServiceError::Config("max_upload_bytes must be positive".into()));
        }
        Ok(())
    }

    pub fn thresholds(&self) -> Result<Thresholds, ServiceError> {
        Thresholds::new(self.level1_threshold, self.level2_threshold).map_err(|e| ServiceError::Config(e.to_string()))
    }

    pub fn workers(&self) -> usize {
        if self.compute_workers > 0 {
            self.compute_workers
        } else {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        }
    }
}
