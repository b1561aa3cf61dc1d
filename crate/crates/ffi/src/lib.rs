//! C ABI for perceptkit.
//!
//! Every fallible function returns a [`PkStatus`]. On failure a message is
//! kept per thread and can be read with [`pk_last_error`]. Objects crossing
//! the boundary are opaque handles released with their `_free` function.
//! Panics are caught and reported as `PK_ERR_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use perceptkit::index::{snapshot, IndexError, MihIndex};
use perceptkit::pdq::{self, Hash256, PdqError, RasterImage, HASH_BYTES};
use perceptkit::tmk::{self, format as sigfmt, Thresholds, TmkError, TmkSignature};

#[repr(C)]
#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PkStatus {
    PK_OK = 0,
    PK_ERR_NULL = 1,
    PK_ERR_INVALID_ARG = 2,
    PK_ERR_IO = 3,
    PK_ERR_DECODE = 4,
    PK_ERR_VERSION = 5,
    PK_ERR_BUFFER_TOO_SMALL = 6,
    PK_ERR_PANIC = 7,
}

use PkStatus::*;

/// A 256-bit hash; bit 0 is the most significant bit of `bytes[0]`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PkHash {
    pub bytes: [u8; 32],
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PkQueryResult {
    pub id: u32,
    pub distance: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PkMatch {
    pub level1: f64,
    /// Meaningful only when `level2_present` is nonzero.
    pub level2: f64,
    pub level2_present: bool,
    pub matched: bool,
    pub degenerate: bool,
}

/// Opaque multi-index over stored hashes.
pub struct PkIndex(MihIndex);

/// Opaque temporal video signature.
pub struct PkSignature(TmkSignature);

const _: () = assert!(HASH_BYTES == 32);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Failure(PkStatus, String);

impl Failure {
    fn null(what: &str) -> Self {
        Failure(PK_ERR_NULL, format!("{what} is null"))
    }
}

impl From<PdqError> for Failure {
    fn from(e: PdqError) -> Self {
        let status = match e {
            PdqError::Io { .. } => PK_ERR_IO,
            PdqError::Decode(_) => PK_ERR_DECODE,
            _ => PK_ERR_INVALID_ARG,
        };
        Failure(status, e.to_string())
    }
}

impl From<IndexError> for Failure {
    fn from(e: IndexError) -> Self {
        let status = match e {
            IndexError::Io(_) => PK_ERR_IO,
            IndexError::Radius(_) => PK_ERR_INVALID_ARG,
            IndexError::UnsupportedVersion(_) => PK_ERR_VERSION,
            _ => PK_ERR_DECODE,
        };
        Failure(status, e.to_string())
    }
}

impl From<TmkError> for Failure {
    fn from(e: TmkError) -> Self {
        let status = match e {
            TmkError::Io(_) => PK_ERR_IO,
            TmkError::UnsupportedVersion(_) => PK_ERR_VERSION,
            TmkError::Threshold { .. } => PK_ERR_INVALID_ARG,
            _ => PK_ERR_DECODE,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PK_OK
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PK_ERR_PANIC
        }
    }
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure::null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(PK_ERR_INVALID_ARG, "path is not UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::null(what))
}

unsafe fn in_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(what))
}

fn to_hash(h: &PkHash) -> Hash256 {
    Hash256::from_bytes(&h.bytes)
}

fn from_hash(h: Hash256) -> PkHash {
    PkHash { bytes: h.to_bytes() }
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer is valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn pk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Hashes packed 8-bit RGB pixels, row-major, `width * height * 3` bytes.
///
/// # Safety
/// `rgb` must point to `width * height * 3` readable bytes; `out` and
/// `quality` (if non-null) must be writable.
#[no_mangle]
pub unsafe extern "C" fn pk_pdq_hash_rgb(
    rgb: *const u8,
    width: usize,
    height: usize,
    out: *mut PkHash,
    quality: *mut u8,
) -> PkStatus {
    guard(|| {
        if rgb.is_null() {
            return Err(Failure::null("rgb"));
        }
        let len = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(3))
            .ok_or_else(|| Failure(PK_ERR_INVALID_ARG, "image dimensions overflow".into()))?;
        let pixels = std::slice::from_raw_parts(rgb, len).to_vec();
        let h = pdq::pdq_hash(&RasterImage::new(width, height, pixels)?);
        *out_arg(out, "out")? = from_hash(h.bits);
        if let Some(q) = quality.as_mut() {
            *q = h.quality;
        }
        Ok(())
    })
}

/// Decodes and hashes an image file (PNG, JPEG, TIFF or BMP).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` and `quality` (if
/// non-null) must be writable.
#[no_mangle]
pub unsafe extern "C" fn pk_pdq_hash_file(path: *const c_char, out: *mut PkHash, quality: *mut u8) -> PkStatus {
    guard(|| {
        let h = pdq::hash_file(path_arg(path)?)?;
        *out_arg(out, "out")? = from_hash(h.bits);
        if let Some(q) = quality.as_mut() {
            *q = h.quality;
        }
        Ok(())
    })
}

/// Hamming distance, or `u32::MAX` if either pointer is null.
///
/// # Safety
/// Non-null pointers must be readable.
#[no_mangle]
pub unsafe extern "C" fn pk_hamming(a: *const PkHash, b: *const PkHash) -> u32 {
    match (a.as_ref(), b.as_ref()) {
        (Some(a), Some(b)) => pdq::hamming(&to_hash(a), &to_hash(b)),
        _ => u32::MAX,
    }
}

/// Writes 64 lowercase hex digits and a NUL into `out` (65 bytes).
///
/// # Safety
/// `hash` must be readable and `out` writable for 65 bytes.
#[no_mangle]
pub unsafe extern "C" fn pk_hash_to_hex(hash: *const PkHash, out: *mut c_char) -> PkStatus {
    guard(|| {
        let hex = to_hash(in_arg(hash, "hash")?).to_hex();
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        ptr::copy_nonoverlapping(hex.as_ptr(), out.cast::<u8>(), hex.len());
        *out.add(hex.len()) = 0;
        Ok(())
    })
}

/// Parses 64 hex digits.
///
/// # Safety
/// `hex` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pk_hash_from_hex(hex: *const c_char, out: *mut PkHash) -> PkStatus {
    guard(|| {
        let s = CStr::from_ptr(in_arg(hex, "hex")?)
            .to_str()
            .map_err(|_| Failure(PK_ERR_INVALID_ARG, "hex is not UTF-8".into()))?;
        let h = Hash256::from_hex(s)?;
        *out_arg(out, "out")? = from_hash(h);
        Ok(())
    })
}

/// A new empty index. Release with [`pk_index_free`].
#[no_mangle]
pub extern "C" fn pk_index_new() -> *mut PkIndex {
    Box::into_raw(Box::new(PkIndex(MihIndex::new())))
}

/// # Safety
/// `index` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pk_index_free(index: *mut PkIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

/// Number of stored entries; 0 for null.
///
/// # Safety
/// `index` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pk_index_len(index: *const PkIndex) -> usize {
    index.as_ref().map_or(0, |i| i.0.len())
}

/// Stores `hash` with an opaque label and writes its id to `out_id`.
///
/// # Safety
/// `index` must be a live handle; `label` must be readable for `label_len`
/// bytes (may be null when `label_len` is 0); `out_id` may be null.
#[no_mangle]
pub unsafe extern "C" fn pk_index_insert(
    index: *mut PkIndex,
    hash: *const PkHash,
    label: *const u8,
    label_len: usize,
    out_id: *mut u32,
) -> PkStatus {
    guard(|| {
        let idx = out_arg(index, "index")?;
        let h = to_hash(in_arg(hash, "hash")?);
        let label = if label_len == 0 {
            Vec::new()
        } else if label.is_null() {
            return Err(Failure::null("label"));
        } else {
            std::slice::from_raw_parts(label, label_len).to_vec()
        };
        let id = idx.0.insert(h, label);
        if let Some(o) = out_id.as_mut() {
            *o = id;
        }
        Ok(())
    })
}

/// Finds every entry within `radius`, sorted by (distance, id).
///
/// The total number of hits goes to `out_count`. Up to `capacity` of them
/// are written to `results`; if there are more, the call returns
/// `PK_ERR_BUFFER_TOO_SMALL` and can be repeated with a larger buffer.
///
/// # Safety
/// `index` must be a live handle; `results` must be writable for
/// `capacity` elements (may be null when `capacity` is 0).
#[no_mangle]
pub unsafe extern "C" fn pk_index_query(
    index: *const PkIndex,
    hash: *const PkHash,
    radius: u32,
    results: *mut PkQueryResult,
    capacity: usize,
    out_count: *mut usize,
) -> PkStatus {
    guard(|| {
        let idx = in_arg(index, "index")?;
        let h = to_hash(in_arg(hash, "hash")?);
        let hits = idx.0.query(&h, radius)?;
        *out_arg(out_count, "out_count")? = hits.len();
        if capacity > 0 && results.is_null() {
            return Err(Failure::null("results"));
        }
        for (i, r) in hits.iter().take(capacity).enumerate() {
            *results.add(i) = PkQueryResult { id: r.id, distance: r.distance };
        }
        if hits.len() > capacity {
            return Err(Failure(
                PK_ERR_BUFFER_TOO_SMALL,
                format!("{} results, buffer holds {capacity}", hits.len()),
            ));
        }
        Ok(())
    })
}

/// Copies the label of entry `id` into `buf` and its length to `out_len`.
/// Returns `PK_ERR_BUFFER_TOO_SMALL` if `capacity` is short.
///
/// # Safety
/// `index` must be a live handle; `buf` writable for `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn pk_index_label(
    index: *const PkIndex,
    id: u32,
    buf: *mut u8,
    capacity: usize,
    out_len: *mut usize,
) -> PkStatus {
    guard(|| {
        let idx = in_arg(index, "index")?;
        let entry = idx
            .0
            .get(id)
            .ok_or_else(|| Failure(PK_ERR_INVALID_ARG, format!("no entry {id}")))?;
        *out_arg(out_len, "out_len")? = entry.label.len();
        if entry.label.len() > capacity {
            return Err(Failure(PK_ERR_BUFFER_TOO_SMALL, format!("label is {} bytes", entry.label.len())));
        }
        if !entry.label.is_empty() {
            if buf.is_null() {
                return Err(Failure::null("buf"));
            }
            ptr::copy_nonoverlapping(entry.label.as_ptr(), buf, entry.label.len());
        }
        Ok(())
    })
}

/// Writes a snapshot file.
///
/// # Safety
/// `index` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pk_index_save(index: *const PkIndex, path: *const c_char) -> PkStatus {
    guard(|| {
        let idx = in_arg(index, "index")?;
        let path = path_arg(path)?;
        let io = |e: std::io::Error| Failure(PK_ERR_IO, format!("{}: {e}", path.display()));
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        snapshot::save(&idx.0, &mut w).and_then(|_| w.flush()).map_err(io)
    })
}

/// Loads a snapshot file into a new handle.
///
/// # Safety
/// `path` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pk_index_load(path: *const c_char, out: *mut *mut PkIndex) -> PkStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = path_arg(path)?;
        let f = File::open(&path).map_err(|e| Failure(PK_ERR_IO, format!("{}: {e}", path.display())))?;
        let idx = snapshot::load(BufReader::new(f))?;
        *out = Box::into_raw(Box::new(PkIndex(idx)));
        Ok(())
    })
}

/// Reads a signature file into a new handle.
///
/// # Safety
/// `path` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pk_signature_read(path: *const c_char, out: *mut *mut PkSignature) -> PkStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = path_arg(path)?;
        let bytes = std::fs::read(&path).map_err(|e| Failure(PK_ERR_IO, format!("{}: {e}", path.display())))?;
        *out = Box::into_raw(Box::new(PkSignature(sigfmt::from_bytes(&bytes)?)));
        Ok(())
    })
}

/// Parses a signature from memory into a new handle.
///
/// # Safety
/// `data` must be readable for `len` bytes and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pk_signature_from_bytes(data: *const u8, len: usize, out: *mut *mut PkSignature) -> PkStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if data.is_null() {
            return Err(Failure::null("data"));
        }
        let sig = sigfmt::from_bytes(std::slice::from_raw_parts(data, len))?;
        *out = Box::into_raw(Box::new(PkSignature(sig)));
        Ok(())
    })
}

/// # Safety
/// `sig` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pk_signature_free(sig: *mut PkSignature) {
    if !sig.is_null() {
        drop(Box::from_raw(sig));
    }
}

/// Two-phase comparison. Pass `t1 = -1` to always score level 2.
///
/// # Safety
/// `a` and `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pk_signature_compare(
    a: *const PkSignature,
    b: *const PkSignature,
    t1: f64,
    t2: f64,
    out: *mut PkMatch,
) -> PkStatus {
    guard(|| {
        let (a, b) = (in_arg(a, "a")?, in_arg(b, "b")?);
        let d = tmk::two_phase_match(&a.0, &b.0, Thresholds::new(t1, t2)?);
        *out_arg(out, "out")? = PkMatch {
            level1: d.level1_score,
            level2: d.level2_score.unwrap_or(0.0),
            level2_present: d.level2_score.is_some(),
            matched: d.matched,
            degenerate: d.degenerate,
        };
        Ok(())
    })
}
