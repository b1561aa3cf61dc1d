//! Frame streams and nearest-frame resampling to the common rate.

use crate::pdq::RasterImage;

use super::TmkError;

/// Frames per second every signature is computed at.
pub const RESAMPLE_FPS: u32 = 15;

/// Decoded frames of one video at their nominal rate.
#[derive(Debug, Clone)]
pub struct FrameStream {
    width: usize,
    height: usize,
    nominal_fps: f64,
    frames: Vec<RasterImage>,
}

impl FrameStream {
    pub fn new(nominal_fps: f64, frames: Vec<RasterImage>) -> Result<Self, TmkError> {
        if !(nominal_fps.is_finite() && nominal_fps > 0.0) {
            return Err(TmkError::InvalidFps(nominal_fps));
        }
        let first = frames.first().ok_or(TmkError::EmptyStream)?;
        let (width, height) = (first.width(), first.height());
        if let Some((i, f)) = frames
            .iter()
            .enumerate()
            .find(|(_, f)| f.width() != width || f.height() != height)
        {
            return Err(TmkError::FrameSize {
                index: i,
                expected: (width, height),
                actual: (f.width(), f.height()),
            });
        }
        Ok(Self {
            width,
            height,
            nominal_fps,
            frames,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn nominal_fps(&self) -> f64 {
        self.nominal_fps
    }

    pub fn frames(&self) -> &[RasterImage] {
        &self.frames
    }

    pub fn duration(&self) -> f64 {
        self.frames.len() as f64 / self.nominal_fps
    }
}

/// Number of frames a clip of `source_frames` at `fps` yields at 15 fps:
/// `round(duration * 15)`, at least 1.
pub fn resampled_len(source_frames: usize, fps: f64) -> usize {
    ((source_frames as f64 * RESAMPLE_FPS as f64 / fps).round() as usize).max(1)
}

/// Source index picked for each output frame: the frame nearest to
/// `t = k / 15` seconds.
pub fn resample_indices(source_frames: usize, fps: f64) -> Vec<usize> {
    if source_frames == 0 {
        return Vec::new();
    }
    (0..resampled_len(source_frames, fps))
        .map(|k| {
            let idx = (k as f64 * fps / RESAMPLE_FPS as f64).round() as usize;
            idx.min(source_frames - 1)
        })
        .collect()
}

/// The stream's frames at 15 fps.
pub fn resample(stream: &FrameStream) -> Vec<&RasterImage> {
    resample_indices(stream.frames.len(), stream.nominal_fps)
        .into_iter()
        .map(|i| &stream.frames[i])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frames(n: usize) -> Vec<RasterImage> {
        (0..n)
            .map(|i| RasterImage::filled(2, 2, [(i % 256) as u8, 0, 0]).unwrap())
            .collect()
    }

    #[test]
    fn identity_rate() {
        let s = FrameStream::new(15.0, frames(40)).unwrap();
        let out = resample(&s);
        assert_eq!(out.len(), 40);
        for (a, b) in out.iter().zip(s.frames()) {
            assert_eq!(*a, b);
        }
    }

    #[test]
    fn integer_decimation() {
        assert_eq!(resample_indices(60, 30.0), (0..30).map(|k| 2 * k).collect::<Vec<_>>());
    }

    #[test]
    fn ten_seconds_at_24() {
        let idx = resample_indices(240, 24.0);
        assert_eq!(idx.len(), 150);
        // nearest-frame oracle
        for (k, &i) in idx.iter().enumerate() {
            let t = k as f64 / 15.0;
            let best = (0..240usize)
                .min_by(|&a, &b| {
                    let da = (a as f64 / 24.0 - t).abs();
                    let db = (b as f64 / 24.0 - t).abs();
                    da.total_cmp(&db).then(b.cmp(&a))
                })
                .unwrap();
            assert_eq!(i, best, "k={k}");
        }
    }

    #[test]
    fn upsampling_repeats_frames() {
        assert_eq!(resample_indices(3, 10.0), vec![0, 1, 1, 2, 2]);
        assert_eq!(resample_indices(1, 60.0), vec![0]);
    }

    #[test]
    fn rejects_bad_streams() {
        assert!(matches!(FrameStream::new(15.0, vec![]), Err(TmkError::EmptyStream)));
        assert!(matches!(FrameStream::new(0.0, frames(2)), Err(TmkError::InvalidFps(_))));
        let mut f = frames(2);
        f.push(RasterImage::filled(3, 2, [0, 0, 0]).unwrap());
        assert!(matches!(FrameStream::new(15.0, f), Err(TmkError::FrameSize { index: 2, .. })));
    }
}
