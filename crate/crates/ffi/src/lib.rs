//! C ABI over `awe-core`.
//!
//! Every fallible function returns an [`AweStatus`]; on failure a message is
//! available from [`awe_last_error_message`] on the same thread. Models are
//! opaque handles released with [`awe_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use awe_core::awe::AweModel;
use awe_core::corpus::FeatureMatrix;
use awe_core::dtw::{self, DtwConfig, FrameMetric, Normalize};
use awe_core::mfcc::{self, MfccConfig};
use awe_core::{eval, nn, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AweStatus {
    AweOk = 0,
    AweErrNullPointer = 1,
    AweErrInvalidArgument = 2,
    AweErrDataFormat = 3,
    AweErrNumeric = 4,
    AweErrIo = 5,
    AweErrPanic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AweFrameMetric {
    AweMetricCosine = 0,
    AweMetricEuclidean = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AweNormalize {
    AweNormalizePathLength = 0,
    AweNormalizeNone = 1,
}

/// Opaque trained model.
pub struct AweModelHandle {
    model: AweModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> AweStatus {
    match e {
        Error::Io { .. } => AweStatus::AweErrIo,
        Error::Numeric(_) => AweStatus::AweErrNumeric,
        _ if e.exit_code() == 3 => AweStatus::AweErrDataFormat,
        _ => AweStatus::AweErrInvalidArgument,
    }
}

struct Failure(AweStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(AweStatus::AweErrNullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(AweStatus::AweErrInvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AweStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            AweStatus::AweOk
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            AweStatus::AweErrPanic
        }
    }
}

unsafe fn slice_in<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn str_in<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn write_out<T>(p: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    *p = v;
    Ok(())
}

unsafe fn frames(p: *const f32, n_frames: usize, dim: usize, what: &str) -> Result<FeatureMatrix, Failure> {
    let data = slice_in(p, n_frames.checked_mul(dim).ok_or_else(|| invalid("size overflow"))?, what)?;
    Ok(FeatureMatrix::new(n_frames, dim, data.to_vec(), 0.01, "ffi")?)
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn awe_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn awe_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a checkpoint. On success `*out` owns a handle for [`awe_model_free`].
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn awe_model_load(path: *const c_char, out: *mut *mut AweModelHandle) -> AweStatus {
    guard(|| {
        let path = str_in(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let model = AweModel::load_checkpoint(path)?;
        *out = Box::into_raw(Box::new(AweModelHandle { model }));
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `handle` must come from [`awe_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn awe_model_free(handle: *mut AweModelHandle) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn awe_model_input_dim(handle: *const AweModelHandle, out: *mut usize) -> AweStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        write_out(out, h.model.config.input_dim, "out")
    })
}

/// # Safety
/// `handle` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn awe_model_embedding_dim(handle: *const AweModelHandle, out: *mut usize) -> AweStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        write_out(out, h.model.config.embedding_dim(), "out")
    })
}

/// Embeds a row-major `n_frames x dim` segment into `out`, which must hold
/// exactly the model's embedding dimension.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn awe_model_embed(
    handle: *const AweModelHandle,
    features: *const f32,
    n_frames: usize,
    dim: usize,
    out: *mut f32,
    out_len: usize,
) -> AweStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        let want = h.model.config.embedding_dim();
        if out_len != want {
            return Err(invalid(format!("output holds {out_len} values, embedding has {want}")));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let x = frames(features, n_frames, dim, "features")?;
        let v = h.model.embed(&x)?;
        let dst = slice::from_raw_parts_mut(out, out_len);
        for (d, s) in dst.iter_mut().zip(v) {
            *d = s as f32;
        }
        Ok(())
    })
}

/// DTW distance between two row-major frame sequences of width `dim`.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn awe_dtw_distance(
    a: *const f32,
    a_frames: usize,
    b: *const f32,
    b_frames: usize,
    dim: usize,
    metric: AweFrameMetric,
    normalize: AweNormalize,
    out: *mut f64,
) -> AweStatus {
    guard(|| {
        let a = frames(a, a_frames, dim, "a")?;
        let b = frames(b, b_frames, dim, "b")?;
        let cfg = DtwConfig {
            frame_metric: match metric {
                AweFrameMetric::AweMetricCosine => FrameMetric::Cosine,
                AweFrameMetric::AweMetricEuclidean => FrameMetric::Euclidean,
            },
            normalize: match normalize {
                AweNormalize::AweNormalizePathLength => Normalize::PathLength,
                AweNormalize::AweNormalizeNone => Normalize::None,
            },
        };
        write_out(out, dtw::dtw_distance(&a, &b, &cfg)?, "out")
    })
}

/// `1 - cos(u, v)` for vectors of length `n`.
///
/// # Safety
/// Pointers must be valid for `n` values.
#[no_mangle]
pub unsafe extern "C" fn awe_cosine_distance(u: *const f64, v: *const f64, n: usize, out: *mut f64) -> AweStatus {
    guard(|| {
        let (u, v) = (slice_in(u, n, "u")?, slice_in(v, n, "v")?);
        if n == 0 {
            return Err(invalid("vectors are empty"));
        }
        write_out(out, dtw::cosine_distance(u, v)?, "out")
    })
}

/// Shape of the default 39-dimensional MFCC output for `n_samples` samples
/// at 16 kHz.
///
/// # Safety
/// `rows` and `cols` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn awe_mfcc_shape(n_samples: usize, rows: *mut usize, cols: *mut usize) -> AweStatus {
    guard(|| {
        let cfg = MfccConfig::default();
        let r = cfg
            .frame_count(n_samples)
            .ok_or_else(|| invalid(format!("{n_samples} samples is shorter than one window")))?;
        write_out(rows, r, "rows")?;
        write_out(cols, cfg.output_dim(), "cols")
    })
}

/// Default MFCC features of 16 kHz mono samples, written row-major into
/// `out` whose length must equal `rows * cols` from [`awe_mfcc_shape`].
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn awe_mfcc(samples: *const f32, n_samples: usize, out: *mut f32, out_len: usize) -> AweStatus {
    guard(|| {
        let x = slice_in(samples, n_samples, "samples")?;
        let m = mfcc::mfcc(x, &MfccConfig::default())?;
        if out_len != m.as_slice().len() {
            return Err(invalid(format!("output holds {out_len} values, features have {}", m.as_slice().len())));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        slice::from_raw_parts_mut(out, out_len).copy_from_slice(m.as_slice());
        Ok(())
    })
}

/// LSTM encoder parameter count for input width, hidden size and layers.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn awe_count_encoder_params(
    input_dim: usize,
    hidden: usize,
    layers: usize,
    bidirectional: bool,
    out: *mut u64,
) -> AweStatus {
    guard(|| write_out(out, nn::count_encoder_params(input_dim, hidden, layers, bidirectional) as u64, "out"))
}

/// Character edit distance between two UTF-8 strings.
///
/// # Safety
/// `a` and `b` must be NUL-terminated; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn awe_levenshtein(a: *const c_char, b: *const c_char, out: *mut usize) -> AweStatus {
    guard(|| {
        let (a, b) = (str_in(a, "a")?, str_in(b, "b")?);
        write_out(out, eval::levenshtein(a, b), "out")
    })
}
