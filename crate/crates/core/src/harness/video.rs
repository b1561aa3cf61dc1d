//! Video treatments and transcoder backends.
//!
//! [`NativeTranscoder`] works on raw-frame files (see [`rawframe`](super::rawframe))
//! and simulates codec loss with a per-frame JPEG round trip.
//! [`CommandTranscoder`] runs a user-supplied shell template instead.
//!
//! Template placeholders, each substituted shell-quoted:
//! `{input}`, `{output}`, `{treatment}`, `{param}`, `{args}` (ffmpeg-style
//! arguments for the treatment) and `{logo}` (path of the logo as PNG).
//! The decode template takes `{input}` and must write the raw-frame
//! protocol to stdout.

use std::fs::File;
use std::io::{BufReader, BufWriter, Cursor};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use image::codecs::jpeg::JpegEncoder;
use image::imageops::{self, FilterType};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::font::{draw_text, text_size, OVERLAY_TEXT, TEXT_HEIGHT_UNITS};
use super::image_ops::{crop_box, t_watermark};
use super::logo::{logo, paste};
use super::rawframe::{RawFrameReader, RawFrameWriter, RawHeader, EXTENSION};
use super::synth::SynthVideo;
use super::HarnessError;
use crate::pdq::RasterImage;
use crate::tmk::{SignatureBuilder, TmkSignature};

pub const CONTAINERS: [&str; 5] = ["mpg", "mp4", "flv", "mkv", "avi"];
pub const TITLE_SECONDS: f64 = 5.0;
pub const TRIM_SECONDS: f64 = 5.0;
pub const SCROLL_START: f64 = 1.0;
pub const SCROLL_SECONDS: f64 = 10.0;
pub const SCROLL_PERIOD: f64 = 20.0;
/// JPEG quality of the simulated re-encode for treatments that do not
/// target quality themselves.
pub const REENCODE_QUALITY: u8 = 85;

#[derive(Debug, Clone, PartialEq)]
pub enum VideoTreatment {
    Bitrate(f64),
    Crop(f64),
    Format(String),
    HalfScale,
    ScrollText,
    Title,
    Trim,
    Watermark,
}

impl VideoTreatment {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Bitrate(_) => "bitrate",
            Self::Crop(_) => "crop",
            Self::Format(_) => "format",
            Self::HalfScale => "half_scale",
            Self::ScrollText => "scroll_text",
            Self::Title => "title",
            Self::Trim => "trim",
            Self::Watermark => "watermark",
        }
    }

    pub fn parameter(&self) -> String {
        match self {
            Self::Bitrate(r) | Self::Crop(r) => format!("{r}"),
            Self::Format(c) => c.clone(),
            _ => String::new(),
        }
    }

    pub fn parse(name: &str, parameter: &str) -> Result<Self, HarnessError> {
        let bad = || HarnessError::InvalidParameter(format!("{name}={parameter}"));
        let t = match name {
            "bitrate" => Self::Bitrate(parameter.parse().map_err(|_| bad())?),
            "crop" => Self::Crop(parameter.parse().map_err(|_| bad())?),
            "format" => Self::Format(parameter.to_string()),
            "half_scale" => Self::HalfScale,
            "scroll_text" => Self::ScrollText,
            "title" => Self::Title,
            "trim" => Self::Trim,
            "watermark" => Self::Watermark,
            _ => return Err(bad()),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let ok = match self {
            Self::Bitrate(r) | Self::Crop(r) => *r > 0.0 && *r < 1.0,
            Self::Format(c) => CONTAINERS.contains(&c.as_str()),
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(HarnessError::InvalidParameter(format!("{} {}", self.name(), self.parameter())))
        }
    }

    /// The battery for one file, with parameters drawn from `seed`.
    pub fn battery(seed: u64) -> Vec<VideoTreatment> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bitrate = rng.gen_range(10..=90) as f64 / 100.0;
        let crop = rng.gen_range(500..=990) as f64 / 1000.0;
        let container = CONTAINERS.choose(&mut rng).expect("non-empty").to_string();
        vec![
            Self::Bitrate(bitrate),
            Self::Crop(crop),
            Self::Format(container),
            Self::HalfScale,
            Self::ScrollText,
            Self::Title,
            Self::Trim,
            Self::Watermark,
        ]
    }

    /// ffmpeg-style arguments passed to command templates as `{args}`.
    pub fn ffmpeg_args(&self) -> String {
        match self {
            Self::Bitrate(r) => format!("-crf {}", (18.0 + (1.0 - r) * 30.0).round()),
            Self::Crop(r) => format!("-vf crop=iw*{r}:ih*{r}"),
            Self::Format(_) => String::new(),
            Self::HalfScale => "-vf scale=iw/2:ih/2".into(),
            Self::ScrollText => format!(
                "-vf drawtext=text={OVERLAY_TEXT}:fontsize=h/12:fontcolor=white:y=(h-text_h)/2:\
                 x=w-(w+tw)*mod(t-{SCROLL_START}\\,{SCROLL_PERIOD})/{SCROLL_SECONDS}:\
                 enable=gte(t\\,{SCROLL_START})*lt(mod(t-{SCROLL_START}\\,{SCROLL_PERIOD})\\,{SCROLL_SECONDS})"
            ),
            Self::Title => format!("-title-seconds {TITLE_SECONDS}"),
            Self::Trim => format!("-ss {TRIM_SECONDS}"),
            Self::Watermark => "-filter_complex overlay=W-w:H-h".into(),
        }
    }

    fn jpeg_quality(&self) -> u8 {
        match self {
            Self::Bitrate(r) => (10.0 + 80.0 * r).round() as u8,
            Self::Format(c) => match c.as_str() {
                "mpg" => 70,
                "mp4" => 80,
                "flv" => 60,
                "mkv" => 85,
                _ => 75,
            },
            _ => REENCODE_QUALITY,
        }
    }
}

fn frames_for(seconds: f64, fps: f64) -> usize {
    (seconds * fps).round() as usize
}

pub fn jpeg_round_trip(img: &RasterImage, quality: u8) -> Result<RasterImage, HarnessError> {
    let mut buf = Cursor::new(Vec::new());
    img.to_rgb_image()
        .write_with_encoder(JpegEncoder::new_with_quality(&mut buf, quality))
        .map_err(|e| HarnessError::Encode(e.to_string()))?;
    Ok(RasterImage::decode(buf.get_ref())?)
}

/// Scroll text scale and top-left at time `t`, or `None` when hidden.
pub fn scroll_text_position(w: usize, h: usize, t: f64) -> Option<(f64, i64, i64)> {
    if t < SCROLL_START || (t - SCROLL_START) % SCROLL_PERIOD >= SCROLL_SECONDS {
        return None;
    }
    let scale = h as f64 / 12.0 / TEXT_HEIGHT_UNITS as f64;
    let (tw, th) = text_size(OVERLAY_TEXT, scale);
    let progress = ((t - SCROLL_START) % SCROLL_PERIOD) / SCROLL_SECONDS;
    let x = w as f64 - (w + tw) as f64 * progress;
    Some((scale, x.round() as i64, ((h - th.min(h)) / 2) as i64))
}

/// The title card: centred logo, half the shorter side, on black.
pub fn title_card(w: usize, h: usize) -> RasterImage {
    let mut img = RasterImage::filled(w, h, [0, 0, 0]).expect("non-empty");
    let side = (w.min(h) / 2).max(1);
    paste(&mut img, &logo(side), (w - side) / 2, (h - side) / 2);
    img
}

/// Frame-level treatment of a stream, writing to `out`.
fn transform_stream<R: std::io::Read, W: std::io::Write>(
    reader: RawFrameReader<R>,
    out: W,
    t: &VideoTreatment,
) -> Result<usize, HarnessError> {
    t.validate()?;
    let src = reader.header();
    let (w, h, fps) = (src.width as usize, src.height as usize, src.fps);
    let (ow, oh) = match t {
        VideoTreatment::Crop(r) => {
            let (_, _, nw, nh) = crop_box(w, h, *r);
            (nw, nh)
        }
        VideoTreatment::HalfScale => ((w / 2).max(1), (h / 2).max(1)),
        _ => (w, h),
    };
    let header = RawHeader { width: ow as u32, height: oh as u32, fps };
    let mut writer = RawFrameWriter::new(out, header)?;
    let quality = t.jpeg_quality();
    let emit = |frame: &RasterImage, writer: &mut RawFrameWriter<W>| {
        writer.write_frame(&jpeg_round_trip(frame, quality)?)
    };
    if *t == VideoTreatment::Title {
        let card = title_card(w, h);
        for _ in 0..frames_for(TITLE_SECONDS, fps) {
            emit(&card, &mut writer)?;
        }
    }
    let skip = if *t == VideoTreatment::Trim { frames_for(TRIM_SECONDS, fps) } else { 0 };
    for (i, frame) in reader.enumerate() {
        let frame = frame?;
        if i < skip {
            continue;
        }
        let treated = match t {
            VideoTreatment::Crop(r) => {
                let (x0, y0, nw, nh) = crop_box(w, h, *r);
                RasterImage::from_fn(nw, nh, |x, y| frame.pixel(x0 + x, y0 + y)).expect("non-empty")
            }
            VideoTreatment::HalfScale => {
                let small = imageops::resize(&frame.to_rgb_image(), ow as u32, oh as u32, FilterType::Triangle);
                RasterImage::from_rgb_image(small)?
            }
            VideoTreatment::ScrollText => {
                let mut f = frame;
                if let Some((scale, x, y)) = scroll_text_position(w, h, i as f64 / fps) {
                    draw_text(&mut f, OVERLAY_TEXT, x, y, scale, [255, 255, 255]);
                }
                f
            }
            VideoTreatment::Watermark => t_watermark(&frame),
            _ => frame,
        };
        emit(&treated, &mut writer)?;
    }
    if writer.frames_written() == 0 {
        return Err(HarnessError::Transcoder(format!("{} left no frames", t.name())));
    }
    let n = writer.frames_written();
    writer.finish()?;
    Ok(n)
}

pub trait Transcoder: Send + Sync {
    /// Writes the treated variant of `input` into `out_dir` and returns its path.
    fn apply(&self, input: &Path, out_dir: &Path, t: &VideoTreatment) -> Result<PathBuf, HarnessError>;

    /// Decodes `path` and builds its temporal signature.
    fn signature(&self, path: &Path) -> Result<TmkSignature, HarnessError>;
}

fn variant_path(input: &Path, out_dir: &Path, t: &VideoTreatment, ext: &str) -> PathBuf {
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("video");
    out_dir.join(format!("{stem}.{}.{ext}", t.name()))
}

/// Signature of a raw-frame stream.
pub fn signature_from_raw<R: std::io::Read>(reader: RawFrameReader<R>) -> Result<TmkSignature, HarnessError> {
    let mut builder = SignatureBuilder::new(reader.header().fps)?;
    for frame in reader {
        builder.push_frame(&frame?);
    }
    Ok(builder.finish()?)
}

pub fn read_raw_signature(path: &Path) -> Result<TmkSignature, HarnessError> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    signature_from_raw(RawFrameReader::new(BufReader::new(file))?)
}

/// Writes a synthetic video as a raw-frame file.
pub fn write_synth_video(video: &SynthVideo, path: &Path) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let header = RawHeader {
        width: video.width() as u32,
        height: video.height() as u32,
        fps: video.fps(),
    };
    let mut w = RawFrameWriter::new(BufWriter::new(file), header)?;
    for frame in video.frames() {
        w.write_frame(&frame)?;
    }
    w.finish()?;
    Ok(())
}

/// Applies treatments to raw-frame files in-process.
#[derive(Debug, Clone, Default)]
pub struct NativeTranscoder;

impl Transcoder for NativeTranscoder {
    fn apply(&self, input: &Path, out_dir: &Path, t: &VideoTreatment) -> Result<PathBuf, HarnessError> {
        let src = File::open(input).map_err(|e| HarnessError::io(input, e))?;
        let out = variant_path(input, out_dir, t, EXTENSION);
        let dst = File::create(&out).map_err(|e| HarnessError::io(&out, e))?;
        transform_stream(RawFrameReader::new(BufReader::new(src))?, BufWriter::new(dst), t)?;
        Ok(out)
    }

    fn signature(&self, path: &Path) -> Result<TmkSignature, HarnessError> {
        read_raw_signature(path)
    }
}

/// Shell-template backend for an external media tool.
#[derive(Debug, Clone)]
pub struct CommandTranscoder {
    pub command: String,
    /// Decode template; raw-frame files are read directly when absent.
    pub decode: Option<String>,
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "'\\''"))
}

fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}}}"), &shell_quote(v));
    }
    out
}

fn run_shell(cmd: &str) -> Result<std::process::Output, HarnessError> {
    Command::new("sh")
        .arg("-c")
        .arg(cmd)
        .stdin(Stdio::null())
        .output()
        .map_err(|e| HarnessError::Transcoder(format!("cannot spawn sh: {e}")))
}

impl Transcoder for CommandTranscoder {
    fn apply(&self, input: &Path, out_dir: &Path, t: &VideoTreatment) -> Result<PathBuf, HarnessError> {
        t.validate()?;
        let ext = match t {
            VideoTreatment::Format(c) => c.clone(),
            _ => input.extension().and_then(|e| e.to_str()).unwrap_or(EXTENSION).to_string(),
        };
        let out = variant_path(input, out_dir, t, &ext);
        let logo_path = out_dir.join("logo.png");
        if !logo_path.exists() {
            logo(256)
                .to_rgb_image()
                .save(&logo_path)
                .map_err(|e| HarnessError::Encode(e.to_string()))?;
        }
        let cmd = fill(
            &self.command,
            &[
                ("input", &input.to_string_lossy()),
                ("output", &out.to_string_lossy()),
                ("treatment", t.name()),
                ("param", &t.parameter()),
                ("args", &t.ffmpeg_args()),
                ("logo", &logo_path.to_string_lossy()),
            ],
        );
        let res = run_shell(&cmd)?;
        if !res.status.success() {
            return Err(HarnessError::Transcoder(format!(
                "{} exited with {}: {}",
                t.name(),
                res.status,
                String::from_utf8_lossy(&res.stderr).trim()
            )));
        }
        if !out.exists() {
            return Err(HarnessError::Transcoder(format!("{} produced no output", t.name())));
        }
        Ok(out)
    }

    fn signature(&self, path: &Path) -> Result<TmkSignature, HarnessError> {
        let Some(template) = &self.decode else {
            return read_raw_signature(path);
        };
        let cmd = fill(template, &[("input", &path.to_string_lossy())]);
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(cmd)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| HarnessError::Transcoder(format!("cannot spawn decoder: {e}")))?;
        let stdout = child.stdout.take().expect("piped");
        let sig = RawFrameReader::new(BufReader::new(stdout)).and_then(signature_from_raw);
        let status = child.wait()?;
        if !status.success() {
            return Err(HarnessError::Transcoder(format!("decoder exited with {status}")));
        }
        sig
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tmk::{two_phase_match, Thresholds};

    fn sample(dir: &Path, seconds: f64) -> PathBuf {
        let p = dir.join("clip.rfv");
        write_synth_video(&SynthVideo::new(5, 48, 36, 15.0, seconds), &p).unwrap();
        p
    }

    fn header_and_count(path: &Path) -> (RawHeader, usize) {
        let r = RawFrameReader::new(BufReader::new(File::open(path).unwrap())).unwrap();
        let h = r.header();
        (h, r.count())
    }

    #[test]
    fn battery_is_seeded_and_valid() {
        let a = VideoTreatment::battery(9);
        assert_eq!(a, VideoTreatment::battery(9));
        assert_eq!(a.len(), 8);
        for t in &a {
            t.validate().unwrap();
            assert_eq!(&VideoTreatment::parse(t.name(), &t.parameter()).unwrap(), t);
        }
    }

    #[test]
    fn native_geometry_and_lengths() {
        let dir = tempfile::tempdir().unwrap();
        let src = sample(dir.path(), 8.0);
        let nt = NativeTranscoder;
        let cases = [
            (VideoTreatment::HalfScale, (24, 18), 120),
            (VideoTreatment::Crop(0.5), (24, 18), 120),
            (VideoTreatment::Trim, (48, 36), 45),
            (VideoTreatment::Title, (48, 36), 195),
            (VideoTreatment::ScrollText, (48, 36), 120),
        ];
        for (t, dims, frames) in cases {
            let out = nt.apply(&src, dir.path(), &t).unwrap();
            let (h, n) = header_and_count(&out);
            assert_eq!(((h.width as usize, h.height as usize), n), (dims, frames), "{t:?}");
        }
        let short = dir.path().join("short.rfv");
        write_synth_video(&SynthVideo::new(1, 8, 8, 10.0, 4.0), &short).unwrap();
        assert!(matches!(nt.apply(&short, dir.path(), &VideoTreatment::Trim), Err(HarnessError::Transcoder(_))));
    }

    #[test]
    fn mild_treatments_still_match() {
        let dir = tempfile::tempdir().unwrap();
        let src = sample(dir.path(), 12.0);
        let nt = NativeTranscoder;
        let orig = nt.signature(&src).unwrap();
        for t in [VideoTreatment::Format("mp4".into()), VideoTreatment::HalfScale] {
            let v = nt.signature(&nt.apply(&src, dir.path(), &t).unwrap()).unwrap();
            let d = two_phase_match(&orig, &v, Thresholds::default());
            assert!(d.matched, "{t:?}: {d:?}");
        }
    }

    #[test]
    fn scroll_text_schedule() {
        assert!(scroll_text_position(480, 480, 0.5).is_none());
        let (scale, x, y) = scroll_text_position(480, 480, 1.0).unwrap();
        assert_eq!(x, 480);
        assert!((scale * 7.0 - 40.0).abs() < 1e-9);
        assert_eq!(y, (480 - 40) / 2);
        assert!(scroll_text_position(480, 480, 11.0).is_none());
        assert_eq!(scroll_text_position(480, 480, 21.0).unwrap().1, 480);
    }

    #[test]
    fn command_backend_runs_template_and_reports_failure() {
        let dir = tempfile::tempdir().unwrap();
        let src = sample(dir.path(), 3.0);
        let ok = CommandTranscoder { command: "cp {input} {output}".into(), decode: Some("cat {input}".into()) };
        let out = ok.apply(&src, dir.path(), &VideoTreatment::Format("mkv".into())).unwrap();
        assert_eq!(out.extension().unwrap(), "mkv");
        let a = ok.signature(&out).unwrap();
        let b = NativeTranscoder.signature(&src).unwrap();
        assert_eq!(a, b);
        let bad = CommandTranscoder { command: "exit 3".into(), decode: None };
        assert!(matches!(bad.apply(&src, dir.path(), &VideoTreatment::Trim), Err(HarnessError::Transcoder(_))));
        let bad_decode = CommandTranscoder { command: String::new(), decode: Some("false".into()) };
        assert!(bad_decode.signature(&src).is_err());
    }
}
