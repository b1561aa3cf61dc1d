//! Harness configuration file (TOML). Every field is optional.
//!
//! ```toml
//! seed = 1
//! image_threshold = 30
//! level1_threshold = 0.7
//! level2_threshold = 0.7
//! workers = 0            # 0 = one per CPU
//!
//! [images]
//! rotate = false         # treatment toggles, all default to true
//!
//! [videos]
//! title = false
//!
//! [transcoder]           # omit to use the native raw-frame backend
//! command = "ffmpeg -y -i {input} {args} {output}"
//! decode = "my-decoder {input}"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::video::{CommandTranscoder, NativeTranscoder, Transcoder};
use super::HarnessError;
use crate::pdq::MatchThreshold;
use crate::tmk::Thresholds;

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageToggles {
    #[serde(default = "yes")]
    pub format: bool,
    #[serde(default = "yes")]
    pub watermark: bool,
    #[serde(default = "yes")]
    pub text: bool,
    #[serde(default = "yes")]
    pub thumbnail: bool,
    #[serde(default = "yes")]
    pub crop: bool,
    #[serde(default = "yes")]
    pub rotate: bool,
}

impl Default for ImageToggles {
    fn default() -> Self {
        Self { format: true, watermark: true, text: true, thumbnail: true, crop: true, rotate: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoToggles {
    #[serde(default = "yes")]
    pub bitrate: bool,
    #[serde(default = "yes")]
    pub crop: bool,
    #[serde(default = "yes")]
    pub format: bool,
    #[serde(default = "yes")]
    pub half_scale: bool,
    #[serde(default = "yes")]
    pub scroll_text: bool,
    #[serde(default = "yes")]
    pub title: bool,
    #[serde(default = "yes")]
    pub trim: bool,
    #[serde(default = "yes")]
    pub watermark: bool,
}

impl Default for VideoToggles {
    fn default() -> Self {
        Self {
            bitrate: true,
            crop: true,
            format: true,
            half_scale: true,
            scroll_text: true,
            title: true,
            trim: true,
            watermark: true,
        }
    }
}

impl VideoToggles {
    pub fn enabled(&self, name: &str) -> bool {
        match name {
            "bitrate" => self.bitrate,
            "crop" => self.crop,
            "format" => self.format,
            "half_scale" => self.half_scale,
            "scroll_text" => self.scroll_text,
            "title" => self.title,
            "trim" => self.trim,
            "watermark" => self.watermark,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscoderConfig {
    pub command: String,
    pub decode: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub seed: u64,
    pub image_threshold: u32,
    pub level1_threshold: f64,
    pub level2_threshold: f64,
    pub workers: usize,
    pub images: ImageToggles,
    pub videos: VideoToggles,
    pub transcoder: Option<TranscoderConfig>,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            image_threshold: MatchThreshold::DEFAULT.max_distance(),
            level1_threshold: 0.7,
            level2_threshold: 0.7,
            workers: 0,
            images: ImageToggles::default(),
            videos: VideoToggles::default(),
            transcoder: None,
        }
    }
}

impl HarnessConfig {
    pub fn from_toml(s: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(s).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        MatchThreshold::new(self.image_threshold).map_err(|e| HarnessError::Config(e.to_string()))?;
        self.thresholds()?;
        Ok(())
    }

    pub fn match_threshold(&self) -> MatchThreshold {
        MatchThreshold::new(self.image_threshold).unwrap_or_default()
    }

    pub fn thresholds(&self) -> Result<Thresholds, HarnessError> {
        Thresholds::new(self.level1_threshold, self.level2_threshold)
            .map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn transcoder(&self) -> Box<dyn Transcoder> {
        match &self.transcoder {
            Some(t) => Box::new(CommandTranscoder { command: t.command.clone(), decode: t.decode.clone() }),
            None => Box::new(NativeTranscoder),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(HarnessConfig::from_toml("").unwrap(), HarnessConfig::default());
    }

    #[test]
    fn toggles_and_transcoder() {
        let cfg = HarnessConfig::from_toml(
            "seed = 9\n[images]\nrotate = false\n[transcoder]\ncommand = \"cp {input} {output}\"\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert!(!cfg.images.rotate && cfg.images.crop);
        assert_eq!(cfg.transcoder.unwrap().decode, None);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(HarnessConfig::from_toml("image_threshold = 300").is_err());
        assert!(HarnessConfig::from_toml("level1_threshold = 2.0").is_err());
        assert!(HarnessConfig::from_toml("colour = 1").is_err());
    }
}
