//! Corpus runners for the image and video batteries.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::HarnessConfig;
use super::image_ops::{apply_raster, pick_crop_ratio, pick_format, pick_rotation, ImageFormatKind, ImageTreatment, THUMBNAIL_SIDES};
use super::report::{
    summarize_images, summarize_videos, write_csv, write_rows, ImageSummaryRow, ReportRow, VideoSummaryRow,
    STATUS_FAILED, STATUS_OK,
};
use super::video::{Transcoder, VideoTreatment};
use super::HarnessError;
use crate::bench::{time_pair, Md5Hasher, Order, PdqHasher, TimingRow};
use crate::pdq::{hash_bytes, pdq_hash, RasterImage};
use crate::tmk::{format as sigfmt, two_phase_match, Thresholds, TmkSignature};

pub const IMAGE_EXTENSIONS: [&str; 6] = ["png", "jpg", "jpeg", "tif", "tiff", "bmp"];
pub const VIDEO_EXTENSIONS: [&str; 8] = ["rfv", "mpg", "mp4", "flv", "mkv", "avi", "mov", "webm"];

/// Files under `dir` with one of `exts`, as `(id, path)` sorted by id.
/// The id is the path relative to `dir` with `/` separators.
pub fn collect_files(dir: &Path, exts: &[&str]) -> Result<Vec<(String, PathBuf)>, HarnessError> {
    fn walk(root: &Path, dir: &Path, exts: &[&str], out: &mut Vec<(String, PathBuf)>) -> Result<(), HarnessError> {
        for entry in std::fs::read_dir(dir).map_err(|e| HarnessError::io(dir, e))? {
            let path = entry.map_err(|e| HarnessError::io(dir, e))?.path();
            if path.is_dir() {
                walk(root, &path, exts, out)?;
                continue;
            }
            let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
            if ext.is_some_and(|e| exts.contains(&e.as_str())) {
                let rel = path.strip_prefix(root).unwrap_or(&path);
                let id = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
                out.push((id, path));
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, dir, exts, &mut out)?;
    out.sort();
    Ok(out)
}

/// Per-file seed: the run seed mixed with the file id, so results do not
/// depend on which other files are present.
pub fn file_seed(seed: u64, file_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in file_id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// The enabled image battery for one file.
pub fn image_battery(cfg: &HarnessConfig, seed: u64, source: Option<ImageFormatKind>) -> Vec<ImageTreatment> {
    let t = &cfg.images;
    let mut out = Vec::new();
    if t.format {
        out.push(ImageTreatment::Format(pick_format(seed, source)));
    }
    if t.watermark {
        out.push(ImageTreatment::Watermark);
    }
    if t.text {
        out.push(ImageTreatment::Text);
    }
    if t.thumbnail {
        out.extend(THUMBNAIL_SIDES.map(ImageTreatment::Thumbnail));
    }
    if t.crop {
        out.push(ImageTreatment::Crop(pick_crop_ratio(seed)));
    }
    if t.rotate {
        out.push(ImageTreatment::Rotate(pick_rotation(seed)));
    }
    out
}

fn failed_row(file_id: &str, treatment: &str, parameter: String, original: String, err: &HarnessError) -> ReportRow {
    ReportRow {
        file_id: file_id.to_string(),
        treatment: treatment.to_string(),
        parameter,
        original,
        status: STATUS_FAILED.into(),
        error: err.to_string(),
        ..ReportRow::default()
    }
}

/// Hash of the variant produced by `t`. Format changes are hashed from the
/// re-encoded bytes; every other variant from its raster.
pub fn variant_hash(img: &RasterImage, t: &ImageTreatment) -> Result<crate::pdq::PdqHash, HarnessError> {
    match t {
        ImageTreatment::Format(f) => Ok(hash_bytes(&f.encode(img)?)?),
        _ => Ok(pdq_hash(&apply_raster(img, t)?)),
    }
}

fn image_rows(cfg: &HarnessConfig, file_id: &str, path: &Path) -> Vec<ReportRow> {
    let seed = file_seed(cfg.seed, file_id);
    let bytes = std::fs::read(path).map_err(|e| HarnessError::io(path, e));
    let source = bytes.as_ref().ok().and_then(|b| ImageFormatKind::detect(b));
    let battery = image_battery(cfg, seed, source);
    let decoded = bytes.and_then(|b| RasterImage::decode(&b).map_err(HarnessError::from));
    let img = match decoded {
        Ok(img) => img,
        Err(e) => {
            return battery
                .iter()
                .map(|t| failed_row(file_id, t.name(), t.parameter(), String::new(), &e))
                .collect()
        }
    };
    let original = pdq_hash(&img);
    battery
        .iter()
        .map(|t| match variant_hash(&img, t) {
            Ok(v) => ReportRow {
                file_id: file_id.to_string(),
                treatment: t.name().into(),
                parameter: t.parameter(),
                original: original.bits.to_hex(),
                variant: v.bits.to_hex(),
                distance: Some(original.distance(&v)),
                status: STATUS_OK.into(),
                ..ReportRow::default()
            },
            Err(e) => failed_row(file_id, t.name(), t.parameter(), original.bits.to_hex(), &e),
        })
        .collect()
}

fn pool(cfg: &HarnessConfig) -> Result<rayon::ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))
}

#[derive(Debug, Clone)]
pub struct ImageSuiteReport {
    pub rows: Vec<ReportRow>,
    pub timings: Vec<TimingRow>,
    pub summary: Vec<ImageSummaryRow>,
}

impl ImageSuiteReport {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.ok()).count()
    }

    /// Writes `rows.csv`, `summary.csv` and `timings.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        write_rows(&dir.join("rows.csv"), &self.rows)?;
        write_csv(&dir.join("summary.csv"), &self.summary)?;
        write_csv(&dir.join("timings.csv"), &self.timings)
    }
}

/// Runs the image battery over every image under `corpus`.
///
/// Timings are taken first on the calling thread alone, with the digest
/// running before or after the perceptual hash by a seeded coin flip per
/// file. Treatments then run on the worker pool.
pub fn run_image_suite(corpus: &Path, cfg: &HarnessConfig) -> Result<ImageSuiteReport, HarnessError> {
    cfg.validate()?;
    let files = collect_files(corpus, &IMAGE_EXTENSIONS)?;
    let timings = files
        .iter()
        .enumerate()
        .filter_map(|(i, (id, path))| time_pair(&PdqHasher, &Md5Hasher, id, path, Order::pick(cfg.seed, i)).ok())
        .collect();
    let rows: Vec<ReportRow> = pool(cfg)?.install(|| {
        files
            .par_iter()
            .flat_map_iter(|(id, path)| image_rows(cfg, id, path))
            .collect()
    });
    let summary = summarize_images(&rows, cfg.match_threshold());
    Ok(ImageSuiteReport { rows, timings, summary })
}

#[derive(Debug, Clone)]
pub struct VideoSuiteReport {
    pub rows: Vec<ReportRow>,
    pub summary: Vec<VideoSummaryRow>,
    /// Each original scored against itself: `(file_id, level1, level2)`.
    pub controls: Vec<(String, f64, f64)>,
}

impl VideoSuiteReport {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.ok()).count()
    }

    /// Writes `rows.csv` and `summary.csv`; the summary gains a `control`
    /// series holding the self-comparison scores.
    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        write_rows(&dir.join("rows.csv"), &self.rows)?;
        let mut summary = self.summary.clone();
        summary.push(self.control_summary());
        write_csv(&dir.join("summary.csv"), &summary)
    }

    pub fn control_summary(&self) -> VideoSummaryRow {
        let n = self.controls.len();
        let mean = |f: fn(&(String, f64, f64)) -> f64| (n > 0).then(|| self.controls.iter().map(f).sum::<f64>() / n as f64);
        let matched = self.controls.iter().filter(|c| c.1 >= 0.7 && c.2 >= 0.7).count();
        VideoSummaryRow {
            series: "control".into(),
            rows: n,
            failed: 0,
            matched,
            match_rate: if n == 0 { 0.0 } else { matched as f64 / n as f64 },
            mean_level1: mean(|c| c.1),
            mean_level2: mean(|c| c.2),
        }
    }
}

fn signature_name(file_id: &str, treatment: &str) -> String {
    format!("{}.{treatment}.{}", file_id.replace('/', "__"), sigfmt::EXTENSION)
}

fn save_signature(dir: &Path, name: &str, sig: &TmkSignature) -> Result<(), HarnessError> {
    let p = dir.join(name);
    std::fs::write(&p, sigfmt::to_bytes(sig)).map_err(|e| HarnessError::io(&p, e))
}

fn video_rows(
    cfg: &HarnessConfig,
    transcoder: &dyn Transcoder,
    file_id: &str,
    path: &Path,
    out_dir: &Path,
) -> (Vec<ReportRow>, Option<(String, f64, f64)>) {
    let seed = file_seed(cfg.seed, file_id);
    let battery: Vec<VideoTreatment> = VideoTreatment::battery(seed)
        .into_iter()
        .filter(|t| cfg.videos.enabled(t.name()))
        .collect();
    let sig_dir = out_dir.join("signatures");
    let var_dir = out_dir.join("variants").join(file_id.replace('/', "__"));
    let setup = std::fs::create_dir_all(&sig_dir)
        .and_then(|_| std::fs::create_dir_all(&var_dir))
        .map_err(|e| HarnessError::io(out_dir, e));
    let original_name = signature_name(file_id, "original");
    let original = setup.and_then(|_| {
        let sig = transcoder.signature(path)?;
        save_signature(&sig_dir, &original_name, &sig)?;
        Ok(sig)
    });
    let original = match original {
        Ok(s) => s,
        Err(e) => {
            let rows = battery
                .iter()
                .map(|t| failed_row(file_id, t.name(), t.parameter(), String::new(), &e))
                .collect();
            return (rows, None);
        }
    };
    let forced = Thresholds::forced(0.0).expect("valid");
    let own = two_phase_match(&original, &original, forced);
    let control = (file_id.to_string(), own.level1_score, own.level2_score.unwrap_or(0.0));
    let rows = battery
        .iter()
        .map(|t| {
            let name = signature_name(file_id, t.name());
            let res = transcoder.apply(path, &var_dir, t).and_then(|variant| {
                let sig = transcoder.signature(&variant)?;
                save_signature(&sig_dir, &name, &sig)?;
                Ok(two_phase_match(&original, &sig, forced))
            });
            match res {
                Ok(d) => ReportRow {
                    file_id: file_id.to_string(),
                    treatment: t.name().into(),
                    parameter: t.parameter(),
                    original: original_name.clone(),
                    variant: name,
                    level1: Some(d.level1_score),
                    level2: d.level2_score,
                    status: STATUS_OK.into(),
                    ..ReportRow::default()
                },
                Err(e) => failed_row(file_id, t.name(), t.parameter(), original_name.clone(), &e),
            }
        })
        .collect();
    (rows, Some(control))
}

/// Runs the video battery over every video under `corpus`. Variants and
/// signatures are written below `out_dir`. Both scores are always computed;
/// the configured thresholds are applied only in the summary.
pub fn run_video_suite(
    corpus: &Path,
    out_dir: &Path,
    cfg: &HarnessConfig,
    transcoder: &dyn Transcoder,
) -> Result<VideoSuiteReport, HarnessError> {
    let thresholds = cfg.thresholds()?;
    let files = collect_files(corpus, &VIDEO_EXTENSIONS)?;
    let per_file: Vec<_> = pool(cfg)?.install(|| {
        files
            .par_iter()
            .map(|(id, path)| video_rows(cfg, transcoder, id, path, out_dir))
            .collect()
    });
    let mut rows = Vec::new();
    let mut controls = Vec::new();
    for (r, c) in per_file {
        rows.extend(r);
        controls.extend(c);
    }
    let summary = summarize_videos(&rows, thresholds);
    Ok(VideoSuiteReport { rows, summary, controls })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synth::{synth_image, SynthVideo};
    use crate::harness::video::{write_synth_video, NativeTranscoder};
    use crate::pdq::{hamming, Hash256};

    #[test]
    fn empty_corpus_is_empty_report() {
        let dir = tempfile::tempdir().unwrap();
        let r = run_image_suite(dir.path(), &HarnessConfig::default()).unwrap();
        assert!(r.rows.is_empty() && r.summary.is_empty() && r.timings.is_empty());
        r.write(&dir.path().join("out")).unwrap();
    }

    #[test]
    fn one_image_gives_nine_rows_and_is_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = dir.path().join("c");
        std::fs::create_dir(&corpus).unwrap();
        synth_image(1, 200, 150).to_rgb_image().save(corpus.join("a.png")).unwrap();
        std::fs::write(corpus.join("broken.jpg"), b"not an image").unwrap();
        let cfg = HarnessConfig { seed: 4, ..HarnessConfig::default() };
        let r = run_image_suite(&corpus, &cfg).unwrap();
        let good: Vec<_> = r.rows.iter().filter(|x| x.file_id == "a.png").collect();
        assert_eq!(good.len(), 9);
        assert!(good.iter().all(|x| x.ok()));
        assert_eq!(r.failures(), 9);
        // spot-check the recorded distances
        for row in &good {
            let d = hamming(&row.original.parse::<Hash256>().unwrap(), &row.variant.parse::<Hash256>().unwrap());
            assert_eq!(Some(d), row.distance);
        }
        // replaying a logged parameter reproduces the variant hash
        let img = RasterImage::open(corpus.join("a.png")).unwrap();
        for row in &good {
            let t = ImageTreatment::parse(&row.treatment, &row.parameter).unwrap();
            assert_eq!(variant_hash(&img, &t).unwrap().bits.to_hex(), row.variant);
        }
        let (o1, o2) = (dir.path().join("o1"), dir.path().join("o2"));
        r.write(&o1).unwrap();
        run_image_suite(&corpus, &cfg).unwrap().write(&o2).unwrap();
        for f in ["rows.csv", "summary.csv"] {
            assert_eq!(std::fs::read(o1.join(f)).unwrap(), std::fs::read(o2.join(f)).unwrap());
        }
    }

    #[test]
    fn one_video_gives_eight_rows() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = dir.path().join("c");
        std::fs::create_dir(&corpus).unwrap();
        write_synth_video(&SynthVideo::new(2, 32, 24, 15.0, 8.0), &corpus.join("v.rfv")).unwrap();
        let cfg = HarnessConfig::default();
        let r = run_video_suite(&corpus, &dir.path().join("out"), &cfg, &NativeTranscoder).unwrap();
        assert_eq!(r.rows.len(), 8);
        assert!(r.rows.iter().all(|x| x.ok() && x.level2.is_some()), "{:?}", r.rows);
        let (_, l1, l2) = &r.controls[0];
        assert!((l1 - 1.0).abs() < 1e-6 && (l2 - 1.0).abs() < 1e-6);
        r.write(&dir.path().join("out")).unwrap();
    }
}
