//! Report rows, summaries and their CSV files.
//!
//! Row CSV columns, in order:
//! `file_id,treatment,parameter,original,variant,distance,level1,level2,status,error`.
//! Image rows carry hex hashes and `distance`; video rows carry signature
//! file names and both scores. Empty cells mean "not applicable".
//!
//! Wall-clock times are not part of these files, so a rerun with the same
//! corpus and config writes identical bytes; they go to the timing CSV
//! (see [`crate::bench::TimingRow`]).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::pdq::MatchThreshold;
use crate::tmk::Thresholds;

pub const STATUS_OK: &str = "ok";
pub const STATUS_FAILED: &str = "failed";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub file_id: String,
    pub treatment: String,
    pub parameter: String,
    pub original: String,
    pub variant: String,
    pub distance: Option<u32>,
    pub level1: Option<f64>,
    pub level2: Option<f64>,
    pub status: String,
    pub error: String,
}

impl ReportRow {
    /// Summary grouping key; thumbnails are split by size.
    pub fn series(&self) -> String {
        if self.treatment == "thumbnail" {
            format!("thumbnail_{}", self.parameter)
        } else {
            self.treatment.clone()
        }
    }

    pub fn ok(&self) -> bool {
        self.status == STATUS_OK
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSummaryRow {
    pub series: String,
    pub rows: usize,
    pub failed: usize,
    pub matched: usize,
    pub match_rate: f64,
    pub median_distance: Option<f64>,
    pub odd_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoSummaryRow {
    pub series: String,
    pub rows: usize,
    pub failed: usize,
    pub matched: usize,
    pub match_rate: f64,
    pub mean_level1: Option<f64>,
    pub mean_level2: Option<f64>,
}

pub fn median_u32(values: &[u32]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] as f64 + v[n / 2] as f64) / 2.0
    })
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn group(rows: &[ReportRow]) -> BTreeMap<String, Vec<&ReportRow>> {
    let mut g: BTreeMap<String, Vec<&ReportRow>> = BTreeMap::new();
    for r in rows {
        g.entry(r.series()).or_default().push(r);
    }
    g
}

/// Match rate is over all rows of a series; failed rows count as misses.
pub fn summarize_images(rows: &[ReportRow], threshold: MatchThreshold) -> Vec<ImageSummaryRow> {
    group(rows)
        .into_iter()
        .map(|(series, rs)| {
            let d: Vec<u32> = rs.iter().filter(|r| r.ok()).filter_map(|r| r.distance).collect();
            let matched = d.iter().filter(|&&x| threshold.matches(x)).count();
            ImageSummaryRow {
                series,
                rows: rs.len(),
                failed: rs.iter().filter(|r| !r.ok()).count(),
                matched,
                match_rate: matched as f64 / rs.len() as f64,
                median_distance: median_u32(&d),
                odd_fraction: (!d.is_empty())
                    .then(|| d.iter().filter(|&&x| x % 2 == 1).count() as f64 / d.len() as f64),
            }
        })
        .collect()
}

pub fn video_row_matched(r: &ReportRow, t: Thresholds) -> bool {
    r.ok()
        && r.level1.is_some_and(|s| s >= t.level1)
        && r.level2.is_some_and(|s| s >= t.level2)
}

pub fn summarize_videos(rows: &[ReportRow], t: Thresholds) -> Vec<VideoSummaryRow> {
    group(rows)
        .into_iter()
        .map(|(series, rs)| {
            let ok: Vec<&&ReportRow> = rs.iter().filter(|r| r.ok()).collect();
            let l1: Vec<f64> = ok.iter().filter_map(|r| r.level1).collect();
            let l2: Vec<f64> = ok.iter().filter_map(|r| r.level2).collect();
            let matched = rs.iter().filter(|r| video_row_matched(r, t)).count();
            VideoSummaryRow {
                series,
                rows: rs.len(),
                failed: rs.len() - ok.len(),
                matched,
                match_rate: matched as f64 / rs.len() as f64,
                mean_level1: mean(&l1),
                mean_level2: mean(&l2),
            }
        })
        .collect()
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Header-only files are written for empty inputs so schemas stay visible.
pub fn write_rows(path: &Path, rows: &[ReportRow]) -> Result<(), HarnessError> {
    if rows.is_empty() {
        std::fs::write(path, "file_id,treatment,parameter,original,variant,distance,level1,level2,status,error\n")
            .map_err(|e| HarnessError::io(path, e))?;
        return Ok(());
    }
    write_csv(path, rows)
}

pub fn read_rows(path: &Path) -> Result<Vec<ReportRow>, HarnessError> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: &str, p: &str, d: Option<u32>, status: &str) -> ReportRow {
        ReportRow {
            file_id: "a.png".into(),
            treatment: t.into(),
            parameter: p.into(),
            distance: d,
            status: status.into(),
            ..ReportRow::default()
        }
    }

    #[test]
    fn csv_round_trip_keeps_column_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rows.csv");
        let rows = vec![row("thumbnail", "32", Some(3), STATUS_OK), row("crop", "0.8", None, STATUS_FAILED)];
        write_rows(&p, &rows).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("file_id,treatment,parameter,original,variant,distance,level1,level2,status,error\n"));
        assert_eq!(read_rows(&p).unwrap(), rows);
        write_rows(&p, &[]).unwrap();
        assert!(read_rows(&p).unwrap().is_empty());
    }

    #[test]
    fn image_summary() {
        let rows = vec![
            row("format", "png", Some(0), STATUS_OK),
            row("format", "bmp", Some(2), STATUS_OK),
            row("format", "tiff", Some(41), STATUS_OK),
            row("format", "jpeg", None, STATUS_FAILED),
            row("thumbnail", "32", Some(31), STATUS_OK),
        ];
        let s = summarize_images(&rows, MatchThreshold::DEFAULT);
        assert_eq!(s[0].series, "format");
        assert_eq!((s[0].rows, s[0].failed, s[0].matched), (4, 1, 2));
        assert_eq!(s[0].median_distance, Some(2.0));
        assert_eq!(s[1].series, "thumbnail_32");
        assert_eq!(s[1].odd_fraction, Some(1.0));
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median_u32(&[4, 1, 3]), Some(3.0));
        assert_eq!(median_u32(&[4, 1, 3, 10]), Some(3.5));
        assert_eq!(median_u32(&[]), None);
    }
}
