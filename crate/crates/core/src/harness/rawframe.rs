//! Raw-frame stream protocol, used both as a pipe format from external
//! decoders and as the on-disk video format of the native transcoder.
//!
//! ```text
//! offset  size  field
//! 0       8     magic "PKRAWVID"
//! 8       4     width   u32 LE
//! 12      4     height  u32 LE
//! 16      8     fps     f64 LE
//! 24      ...   frames, each width*height*3 bytes of packed RGB24, row-major
//! ```
//!
//! The stream ends at EOF on a frame boundary; a partial frame is an error.

use std::io::{self, Read, Write};

use super::HarnessError;
use crate::pdq::RasterImage;

pub const MAGIC: [u8; 8] = *b"PKRAWVID";
pub const HEADER_LEN: usize = 24;
pub const EXTENSION: &str = "rfv";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawHeader {
    pub width: u32,
    pub height: u32,
    pub fps: f64,
}

impl RawHeader {
    pub fn frame_len(&self) -> usize {
        self.width as usize * self.height as usize * 3
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[..8].copy_from_slice(&MAGIC);
        b[8..12].copy_from_slice(&self.width.to_le_bytes());
        b[12..16].copy_from_slice(&self.height.to_le_bytes());
        b[16..24].copy_from_slice(&self.fps.to_le_bytes());
        b
    }

    pub fn from_bytes(b: &[u8; HEADER_LEN]) -> Result<Self, HarnessError> {
        if b[..8] != MAGIC {
            return Err(HarnessError::RawFrame("bad magic".into()));
        }
        let h = RawHeader {
            width: u32::from_le_bytes(b[8..12].try_into().unwrap()),
            height: u32::from_le_bytes(b[12..16].try_into().unwrap()),
            fps: f64::from_le_bytes(b[16..24].try_into().unwrap()),
        };
        if h.width == 0 || h.height == 0 || !(h.fps.is_finite() && h.fps > 0.0) {
            return Err(HarnessError::RawFrame(format!("invalid header {h:?}")));
        }
        Ok(h)
    }
}

pub struct RawFrameReader<R> {
    inner: R,
    header: RawHeader,
}

impl<R: Read> RawFrameReader<R> {
    pub fn new(mut inner: R) -> Result<Self, HarnessError> {
        let mut b = [0u8; HEADER_LEN];
        inner
            .read_exact(&mut b)
            .map_err(|e| HarnessError::RawFrame(format!("header: {e}")))?;
        let header = RawHeader::from_bytes(&b)?;
        Ok(Self { inner, header })
    }

    pub fn header(&self) -> RawHeader {
        self.header
    }

    /// The next frame, or `None` at a clean end of stream.
    pub fn next_frame(&mut self) -> Result<Option<RasterImage>, HarnessError> {
        let mut buf = vec![0u8; self.header.frame_len()];
        let mut filled = 0;
        while filled < buf.len() {
            match self.inner.read(&mut buf[filled..]) {
                Ok(0) => break,
                Ok(n) => filled += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        if filled == 0 {
            return Ok(None);
        }
        if filled < buf.len() {
            return Err(HarnessError::RawFrame(format!(
                "partial frame: {filled} of {} bytes",
                buf.len()
            )));
        }
        let img = RasterImage::new(self.header.width as usize, self.header.height as usize, buf)?;
        Ok(Some(img))
    }
}

impl<R: Read> Iterator for RawFrameReader<R> {
    type Item = Result<RasterImage, HarnessError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame().transpose()
    }
}

pub struct RawFrameWriter<W> {
    inner: W,
    header: RawHeader,
    frames: usize,
}

impl<W: Write> RawFrameWriter<W> {
    pub fn new(mut inner: W, header: RawHeader) -> Result<Self, HarnessError> {
        inner.write_all(&header.to_bytes())?;
        Ok(Self { inner, header, frames: 0 })
    }

    pub fn write_frame(&mut self, frame: &RasterImage) -> Result<(), HarnessError> {
        if frame.width() != self.header.width as usize || frame.height() != self.header.height as usize {
            return Err(HarnessError::RawFrame(format!(
                "frame is {}x{}, stream is {}x{}",
                frame.width(),
                frame.height(),
                self.header.width,
                self.header.height
            )));
        }
        self.inner.write_all(frame.pixels())?;
        self.frames += 1;
        Ok(())
    }

    pub fn frames_written(&self) -> usize {
        self.frames
    }

    pub fn finish(mut self) -> Result<W, HarnessError> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}
