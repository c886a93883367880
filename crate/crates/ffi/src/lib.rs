//! C ABI over the `mova` core.
//!
//! Objects cross the boundary as opaque handles (`MovaFrame`, `MovaStream`)
//! that the caller releases with the matching `*_free` function. Every
//! fallible call returns a `MovaStatus`; on failure the message is available
//! from `mova_last_error_message` on the same thread. Undefined averages
//! (warm-up slots, gaps) are written as NaN.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;
use std::slice;

use mova::indicators::{moving_average, AnyAverage, MovingAverage};
use mova::ingest;
use mova::model::{IndicatorKind, IndicatorSpec, Period, TimeSeriesFrame};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MovaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    NonPositivePeriod = 3,
    UnknownColumn = 4,
    ParseError = 5,
    BufferTooSmall = 6,
    Io = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MovaKind {
    Sma = 0,
    Wma = 1,
    Ema = 2,
}

impl From<MovaKind> for IndicatorKind {
    fn from(k: MovaKind) -> Self {
        match k {
            MovaKind::Sma => IndicatorKind::Sma,
            MovaKind::Wma => IndicatorKind::Wma,
            MovaKind::Ema => IndicatorKind::Ema,
        }
    }
}

/// Opaque loaded frame.
pub struct MovaFrame(TimeSeriesFrame);

/// Opaque streaming average.
pub struct MovaStream(AnyAverage);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn fail(status: MovaStatus, message: impl Into<String>) -> MovaStatus {
    let message = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(message).ok());
    status
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mova_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, MovaStatus> {
    if p.is_null() {
        return Err(fail(MovaStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(MovaStatus::InvalidUtf8, "string argument is not UTF-8"))
}

fn ingest_status(e: &ingest::IngestError) -> MovaStatus {
    match e {
        ingest::IngestError::Io(_) => MovaStatus::Io,
        _ => MovaStatus::ParseError,
    }
}

/// Parses CSV bytes into a frame. `label` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn mova_frame_from_csv(
    data: *const u8,
    len: usize,
    label: *const c_char,
    out: *mut *mut MovaFrame,
) -> MovaStatus {
    if out.is_null() || (data.is_null() && len > 0) {
        return fail(MovaStatus::NullPointer, "null data or output pointer");
    }
    let label = if label.is_null() {
        ""
    } else {
        match str_arg(label) {
            Ok(s) => s,
            Err(s) => return s,
        }
    };
    let bytes = if len == 0 {
        &[][..]
    } else {
        slice::from_raw_parts(data, len)
    };
    match ingest::load_csv(bytes, label) {
        Ok(frame) => {
            *out = Box::into_raw(Box::new(MovaFrame(frame)));
            MovaStatus::Ok
        }
        Err(e) => fail(ingest_status(&e), e.to_string()),
    }
}

/// Loads a CSV file into a frame.
#[no_mangle]
pub unsafe extern "C" fn mova_frame_from_path(path: *const c_char, out: *mut *mut MovaFrame) -> MovaStatus {
    if out.is_null() {
        return fail(MovaStatus::NullPointer, "null output pointer");
    }
    let path = match str_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) => return fail(MovaStatus::Io, format!("{path}: {e}")),
    };
    match ingest::load_csv(std::io::BufReader::new(file), path) {
        Ok(frame) => {
            *out = Box::into_raw(Box::new(MovaFrame(frame)));
            MovaStatus::Ok
        }
        Err(e) => fail(ingest_status(&e), format!("{path}: {e}")),
    }
}

#[no_mangle]
pub unsafe extern "C" fn mova_frame_free(frame: *mut MovaFrame) {
    if !frame.is_null() {
        drop(Box::from_raw(frame));
    }
}

/// Number of rows, or 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn mova_frame_row_count(frame: *const MovaFrame) -> usize {
    frame.as_ref().map_or(0, |f| f.0.len())
}

/// Copies column `name` into `out` (missing values as NaN). `out_len` must be
/// at least the row count.
#[no_mangle]
pub unsafe extern "C" fn mova_frame_column(
    frame: *const MovaFrame,
    name: *const c_char,
    out: *mut f64,
    out_len: usize,
) -> MovaStatus {
    let Some(frame) = frame.as_ref() else {
        return fail(MovaStatus::NullPointer, "null frame");
    };
    let name = match str_arg(name) {
        Ok(n) => n,
        Err(s) => return s,
    };
    let values = match frame.0.column(name) {
        Ok(v) => v,
        Err(e) => return fail(MovaStatus::UnknownColumn, e.to_string()),
    };
    copy_out(values.iter().map(|v| v.unwrap_or(f64::NAN)), values.len(), out, out_len)
}

/// Computes an average over a frame column into `out` (length >= rows).
/// `column` may be NULL for Close.
#[no_mangle]
pub unsafe extern "C" fn mova_frame_indicator(
    frame: *const MovaFrame,
    kind: MovaKind,
    period: u32,
    column: *const c_char,
    out: *mut f64,
    out_len: usize,
) -> MovaStatus {
    let Some(frame) = frame.as_ref() else {
        return fail(MovaStatus::NullPointer, "null frame");
    };
    let Ok(period) = Period::new(period as usize) else {
        return fail(MovaStatus::NonPositivePeriod, "period must be positive");
    };
    let mut spec = IndicatorSpec::new(kind.into(), period);
    if !column.is_null() {
        match str_arg(column) {
            Ok(c) => spec = spec.on_column(c),
            Err(s) => return s,
        }
    }
    match mova::compute_indicator(&frame.0, &spec) {
        Ok(series) => copy_out(
            series.values.iter().map(|v| v.unwrap_or(f64::NAN)),
            series.values.len(),
            out,
            out_len,
        ),
        Err(e) => fail(MovaStatus::UnknownColumn, e.to_string()),
    }
}

/// Batch average of `len` values into `out` (also `len` long). Non-finite
/// inputs count as missing.
#[no_mangle]
pub unsafe extern "C" fn mova_moving_average(
    kind: MovaKind,
    values: *const f64,
    len: usize,
    period: u32,
    out: *mut f64,
) -> MovaStatus {
    if len > 0 && (values.is_null() || out.is_null()) {
        return fail(MovaStatus::NullPointer, "null buffer");
    }
    let input = if len == 0 {
        &[][..]
    } else {
        slice::from_raw_parts(values, len)
    };
    match moving_average(kind.into(), input, period as usize) {
        Ok(result) => copy_out(result.iter().map(|v| v.unwrap_or(f64::NAN)), len, out, len),
        Err(e) => fail(MovaStatus::NonPositivePeriod, e.to_string()),
    }
}

unsafe fn copy_out(values: impl Iterator<Item = f64>, n: usize, out: *mut f64, out_len: usize) -> MovaStatus {
    if n == 0 {
        return MovaStatus::Ok;
    }
    if out.is_null() {
        return fail(MovaStatus::NullPointer, "null output buffer");
    }
    if out_len < n {
        return fail(
            MovaStatus::BufferTooSmall,
            format!("output buffer holds {out_len} values, {n} needed"),
        );
    }
    let dst = slice::from_raw_parts_mut(out, n);
    for (d, v) in dst.iter_mut().zip(values) {
        *d = v;
    }
    MovaStatus::Ok
}

#[no_mangle]
pub unsafe extern "C" fn mova_stream_new(kind: MovaKind, period: u32, out: *mut *mut MovaStream) -> MovaStatus {
    if out.is_null() {
        return fail(MovaStatus::NullPointer, "null output pointer");
    }
    match AnyAverage::new(kind.into(), period as usize) {
        Ok(state) => {
            *out = Box::into_raw(Box::new(MovaStream(state)));
            MovaStatus::Ok
        }
        Err(e) => fail(MovaStatus::NonPositivePeriod, e.to_string()),
    }
}

/// Pushes one value; `*out` receives the average or NaN while undefined.
#[no_mangle]
pub unsafe extern "C" fn mova_stream_push(stream: *mut MovaStream, value: f64, out: *mut f64) -> MovaStatus {
    let Some(stream) = stream.as_mut() else {
        return fail(MovaStatus::NullPointer, "null stream");
    };
    if out.is_null() {
        return fail(MovaStatus::NullPointer, "null output pointer");
    }
    *out = stream.0.push(value).unwrap_or(f64::NAN);
    MovaStatus::Ok
}

#[no_mangle]
pub unsafe extern "C" fn mova_stream_free(stream: *mut MovaStream) {
    if !stream.is_null() {
        drop(Box::from_raw(stream));
    }
}
