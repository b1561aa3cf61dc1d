//! HTTP/JSON service over the hashing, index and signature modules.
//!
//! | method | path                               | body / query              | response                          |
//! |--------|------------------------------------|---------------------------|-----------------------------------|
//! | GET    | `/healthz`                         |                           | `{status}`                        |
//! | POST   | `/v1/hash/image`                   | raw image bytes           | `{hash, quality, ms}`             |
//! | PUT    | `/v1/index/{name}`                 |                           | `{name, entries}`                 |
//! | GET    | `/v1/index/{name}`                 |                           | `{name, entries}`                 |
//! | POST   | `/v1/index/{name}/entries`         | `{hash, label}`           | `{id}`                            |
//! | GET    | `/v1/index/{name}/search`          | `?hash=<hex>&radius=<r>`  | `{results: [{id, label, distance}]}` |
//! | POST   | `/v1/index/{name}/snapshot`        |                           | `{name, entries, path}`           |
//! | POST   | `/v1/compare/videos`               | multipart `a`, `b`, `force` | `{level1, level2, matched, degenerate}` |
//!
//! Errors are `{code, message, request_id}` with a 4xx/5xx status. Hashes
//! are lowercase hex. `level2` is `null` unless phase 1 passed or
//! `force=true`.
//!
//! Indexes live in memory. They are loaded from `snapshot_dir` at start and
//! written back on graceful shutdown or via the snapshot endpoint; there is
//! no write-ahead log, so entries inserted after the last snapshot are lost
//! on a crash.

mod api;
mod config;

use std::collections::HashMap;
use std::future::Future;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;
use tokio::sync::{RwLock, Semaphore};

use crate::index::{snapshot, IndexError, MihIndex};

pub use api::{router, ApiError};
pub use config::ServiceConfig;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("config: {0}")]
    Config(String),
    #[error("snapshot {path}: {source}")]
    Snapshot {
        path: String,
        #[source]
        source: IndexError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type SharedIndex = Arc<RwLock<MihIndex>>;

pub struct AppState {
    pub config: ServiceConfig,
    indexes: RwLock<HashMap<String, SharedIndex>>,
    compute: Semaphore,
}

/// Index names double as snapshot file stems.
pub fn valid_index_name(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 64
        && name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

fn snapshot_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.{}", snapshot::EXTENSION))
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        let workers = config.workers();
        Self {
            config,
            indexes: RwLock::new(HashMap::new()),
            compute: Semaphore::new(workers),
        }
    }

    /// Builds the state and loads every snapshot in the configured directory.
    pub fn load(config: ServiceConfig) -> Result<Self, ServiceError> {
        let mut map = HashMap::new();
        if let Some(dir) = &config.snapshot_dir {
            std::fs::create_dir_all(dir)?;
            for entry in std::fs::read_dir(dir)? {
                let path = entry?.path();
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
                if path.extension().and_then(|e| e.to_str()) != Some(snapshot::EXTENSION) || !valid_index_name(&stem) {
                    continue;
                }
                let file = std::fs::File::open(&path)?;
                let idx = snapshot::load(std::io::BufReader::new(file)).map_err(|e| ServiceError::Snapshot {
                    path: path.display().to_string(),
                    source: e,
                })?;
                log::info!("loaded index {stem} ({} entries)", idx.len());
                map.insert(stem, Arc::new(RwLock::new(idx)));
            }
        }
        let state = Self::new(config);
        *state.indexes.try_write().expect("fresh lock") = map;
        Ok(state)
    }

    pub async fn index(&self, name: &str) -> Option<SharedIndex> {
        self.indexes.read().await.get(name).cloned()
    }

    /// Returns the index and whether it was created by this call.
    pub async fn create_index(&self, name: &str) -> (SharedIndex, bool) {
        let mut map = self.indexes.write().await;
        if let Some(idx) = map.get(name) {
            return (idx.clone(), false);
        }
        let idx: SharedIndex = Arc::new(RwLock::new(MihIndex::new()));
        map.insert(name.to_string(), idx.clone());
        (idx, true)
    }

    /// Writes one index to the snapshot directory via a temporary file.
    pub async fn save_index(&self, name: &str) -> Result<Option<(PathBuf, usize)>, ServiceError> {
        let (Some(dir), Some(idx)) = (self.config.snapshot_dir.clone(), self.index(name).await) else {
            return Ok(None);
        };
        let guard = idx.read().await;
        let bytes = snapshot::to_bytes(&guard);
        let entries = guard.len();
        drop(guard);
        let path = snapshot_path(&dir, name);
        let tmp = path.with_extension("mih.tmp");
        tokio::fs::write(&tmp, bytes).await?;
        tokio::fs::rename(&tmp, &path).await?;
        Ok(Some((path, entries)))
    }

    pub async fn save_all(&self) -> Result<usize, ServiceError> {
        let names: Vec<String> = self.indexes.read().await.keys().cloned().collect();
        let mut saved = 0;
        for n in names {
            if self.save_index(&n).await?.is_some() {
                saved += 1;
            }
        }
        Ok(saved)
    }

    /// Runs CPU-bound work on the blocking pool, at most `compute_workers`
    /// jobs at a time.
    pub async fn compute<T, F>(&self, f: F) -> T
    where
        F: FnOnce() -> T + Send + 'static,
        T: Send + 'static,
    {
        let _permit = self.compute.acquire().await.expect("semaphore never closed");
        tokio::task::spawn_blocking(f).await.expect("compute task panicked")
    }
}

/// Serves until `shutdown` resolves, then snapshots every index.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), ServiceError> {
    let app = router(state.clone());
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await?;
    let n = state.save_all().await?;
    if n > 0 {
        log::info!("saved {n} index snapshot(s)");
    }
    Ok(())
}

/// Binds the configured address and serves until Ctrl-C.
pub fn run(config: ServiceConfig) -> Result<(), ServiceError> {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&config.listen).await?;
        log::info!("listening on {}", listener.local_addr()?);
        let state = Arc::new(AppState::load(config)?);
        serve(listener, state, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
    })
}
