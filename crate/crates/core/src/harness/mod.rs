//! Robustness harness: apply the image and video treatment batteries to a
//! corpus, hash originals and variants, and write report rows.

pub mod config;
pub mod font;
pub mod image_ops;
pub mod logo;
pub mod rawframe;
pub mod report;
pub mod suite;
pub mod synth;
pub mod video;

use std::path::Path;

use thiserror::Error;

use crate::pdq::PdqError;
use crate::tmk::TmkError;

pub use config::{HarnessConfig, ImageToggles, TranscoderConfig, VideoToggles};
pub use image_ops::{ImageFormatKind, ImageTreatment};
pub use report::{ImageSummaryRow, ReportRow, VideoSummaryRow};
pub use suite::{run_image_suite, run_video_suite, ImageSuiteReport, VideoSuiteReport};
pub use video::{CommandTranscoder, NativeTranscoder, Transcoder, VideoTreatment};

/// A treatment with its parameter, for either media type.
#[derive(Debug, Clone, PartialEq)]
pub enum TransformSpec {
    Image(ImageTreatment),
    Video(VideoTreatment),
}

impl TransformSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Image(t) => t.name(),
            Self::Video(t) => t.name(),
        }
    }

    pub fn parameter(&self) -> String {
        match self {
            Self::Image(t) => t.parameter(),
            Self::Video(t) => t.parameter(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        match self {
            Self::Image(t) => t.validate(),
            Self::Video(t) => t.validate(),
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Stream(#[from] std::io::Error),
    #[error(transparent)]
    Image(#[from] PdqError),
    #[error(transparent)]
    Signature(#[from] TmkError),
    #[error("encode failed: {0}")]
    Encode(String),
    #[error("raw frame stream: {0}")]
    RawFrame(String),
    #[error("transcoder: {0}")]
    Transcoder(String),
    #[error("invalid treatment parameter: {0}")]
    InvalidParameter(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
