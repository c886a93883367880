use std::ffi::{CStr, CString};
use std::ptr;

use mova_ffi::*;

fn sample() -> Vec<u8> {
    std::fs::read(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../core/tests/fixtures/ebay_us.csv"
    ))
    .unwrap()
}

fn last_error() -> String {
    let p = mova_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn load(bytes: &[u8]) -> *mut MovaFrame {
    let mut frame = ptr::null_mut();
    let label = CString::new("sample").unwrap();
    let status = unsafe { mova_frame_from_csv(bytes.as_ptr(), bytes.len(), label.as_ptr(), &mut frame) };
    assert_eq!(status, MovaStatus::Ok);
    frame
}

#[test]
fn frame_indicator_matches_sample() {
    let frame = load(&sample());
    let rows = unsafe { mova_frame_row_count(frame) };
    assert_eq!(rows, 29);
    let mut out = vec![0.0; rows];
    for (kind, want) in [
        (MovaKind::Sma, 22.55),
        (MovaKind::Wma, 22.591666666666665),
        (MovaKind::Ema, 22.55),
    ] {
        let status = unsafe { mova_frame_indicator(frame, kind, 3, ptr::null(), out.as_mut_ptr(), out.len()) };
        assert_eq!(status, MovaStatus::Ok);
        assert!(out[0].is_nan() && out[1].is_nan());
        assert!((out[2] - want).abs() < 1e-12, "{kind:?}: {}", out[2]);
    }
    let open = CString::new("Open").unwrap();
    let status = unsafe { mova_frame_column(frame, open.as_ptr(), out.as_mut_ptr(), out.len()) };
    assert_eq!(status, MovaStatus::Ok);
    assert_eq!(out[0], 23.0);
    unsafe { mova_frame_free(frame) };
}

#[test]
fn errors_set_status_and_message() {
    let frame = load(&sample());
    let mut out = vec![0.0; 29];
    let missing = CString::new("Missing").unwrap();
    let status = unsafe { mova_frame_indicator(frame, MovaKind::Wma, 3, missing.as_ptr(), out.as_mut_ptr(), 29) };
    assert_eq!(status, MovaStatus::UnknownColumn);
    assert!(last_error().contains("Missing"));

    let status = unsafe { mova_frame_indicator(frame, MovaKind::Sma, 0, ptr::null(), out.as_mut_ptr(), 29) };
    assert_eq!(status, MovaStatus::NonPositivePeriod);

    let status = unsafe { mova_frame_indicator(frame, MovaKind::Sma, 3, ptr::null(), out.as_mut_ptr(), 10) };
    assert_eq!(status, MovaStatus::BufferTooSmall);
    assert!(last_error().contains("29"));

    let status = unsafe { mova_frame_indicator(ptr::null(), MovaKind::Sma, 3, ptr::null(), out.as_mut_ptr(), 29) };
    assert_eq!(status, MovaStatus::NullPointer);
    unsafe { mova_frame_free(frame) };

    let bad = b"Date,Close\n05.02.2021,1\n05.02.2021,2\n";
    let mut f = ptr::null_mut();
    let status = unsafe { mova_frame_from_csv(bad.as_ptr(), bad.len(), ptr::null(), &mut f) };
    assert_eq!(status, MovaStatus::ParseError);
    assert!(f.is_null());
    assert!(last_error().contains("duplicate date"));

    let path = CString::new("/nonexistent/x.csv").unwrap();
    assert_eq!(unsafe { mova_frame_from_path(path.as_ptr(), &mut f) }, MovaStatus::Io);
}

#[test]
fn path_loading() {
    let path = CString::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../core/tests/fixtures/ebay_us.csv"
    ))
    .unwrap();
    let mut frame = ptr::null_mut();
    assert_eq!(
        unsafe { mova_frame_from_path(path.as_ptr(), &mut frame) },
        MovaStatus::Ok
    );
    assert_eq!(unsafe { mova_frame_row_count(frame) }, 29);
    unsafe { mova_frame_free(frame) };
}

#[test]
fn raw_arrays_and_streams_agree() {
    let values = [22.65, 22.1, 22.9, 22.0, f64::NAN, 21.5, 21.7, 22.3, 22.8];
    for kind in [MovaKind::Sma, MovaKind::Wma, MovaKind::Ema] {
        let mut batch = vec![0.0; values.len()];
        let status = unsafe { mova_moving_average(kind, values.as_ptr(), values.len(), 3, batch.as_mut_ptr()) };
        assert_eq!(status, MovaStatus::Ok);

        let mut stream = ptr::null_mut();
        assert_eq!(unsafe { mova_stream_new(kind, 3, &mut stream) }, MovaStatus::Ok);
        for (v, b) in values.iter().zip(&batch) {
            let mut out = 0.0;
            assert_eq!(unsafe { mova_stream_push(stream, *v, &mut out) }, MovaStatus::Ok);
            assert_eq!(out.to_bits(), b.to_bits(), "{kind:?}");
        }
        unsafe { mova_stream_free(stream) };
    }
    let mut stream = ptr::null_mut();
    assert_eq!(
        unsafe { mova_stream_new(MovaKind::Ema, 0, &mut stream) },
        MovaStatus::NonPositivePeriod
    );
    assert!(stream.is_null());
}

#[test]
fn null_handles_are_tolerated() {
    unsafe {
        mova_frame_free(ptr::null_mut());
        mova_stream_free(ptr::null_mut());
        assert_eq!(mova_frame_row_count(ptr::null()), 0);
        let mut out = 0.0;
        assert_eq!(
            mova_stream_push(ptr::null_mut(), 1.0, &mut out),
            MovaStatus::NullPointer
        );
        assert_eq!(
            mova_moving_average(MovaKind::Sma, ptr::null(), 0, 3, ptr::null_mut()),
            MovaStatus::Ok
        );
    }
}

#[test]
fn header_is_generated() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/mova.h")).unwrap();
    for symbol in [
        "typedef struct MovaFrame MovaFrame;",
        "mova_frame_from_csv",
        "mova_frame_indicator",
        "mova_stream_push",
        "mova_last_error_message",
        "MOVA_STATUS_BUFFER_TOO_SMALL",
    ] {
        assert!(header.contains(symbol), "{symbol}");
    }
}
