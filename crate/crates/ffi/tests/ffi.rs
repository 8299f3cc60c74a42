use mpst_ffi::*;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

const SOCIAL: &str = include_str!("../../core/tests/data/social_media.mpst");
const BUYER: &str = include_str!("../../core/tests/data/buyer_seller.mpst");

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

struct Spec(*mut MpstSpec);

impl Spec {
    fn parse(src: &str) -> Spec {
        let mut h = ptr::null_mut();
        let src = c(src);
        assert_eq!(
            unsafe { mpst_spec_parse(src.as_ptr(), &mut h) },
            MpstStatus::Ok
        );
        assert!(!h.is_null());
        Spec(h)
    }
}

impl Drop for Spec {
    fn drop(&mut self) {
        unsafe { mpst_spec_free(self.0) };
    }
}

/// Takes ownership of a library string.
fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { mpst_string_free(s) };
    out
}

fn last_error() -> String {
    let p = mpst_last_error();
    assert!(!p.is_null(), "no error recorded");
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn report(s: *mut c_char) -> serde_json::Value {
    serde_json::from_str(&take(s)).unwrap()
}

#[test]
fn typecheck_accepts_and_rejects() {
    let spec = Spec::parse(SOCIAL);
    let (g, m) = (c("G"), c("M"));
    let mut out = ptr::null_mut();
    let st = unsafe { mpst_typecheck(spec.0, g.as_ptr(), m.as_ptr(), c("I").as_ptr(), &mut out) };
    assert_eq!(st, MpstStatus::Ok);
    assert_eq!(report(out)["accepted"], true);
    let st = unsafe { mpst_typecheck(spec.0, g.as_ptr(), m.as_ptr(), c("").as_ptr(), &mut out) };
    assert_eq!(st, MpstStatus::No);
    assert_eq!(
        report(out)["rejection"]["kind"],
        "ParticipantEquationFailed"
    );
    // the report pointer is optional
    let st = unsafe {
        mpst_typecheck(
            spec.0,
            g.as_ptr(),
            m.as_ptr(),
            c("u").as_ptr(),
            ptr::null_mut(),
        )
    };
    assert_eq!(st, MpstStatus::Ok);
}

#[test]
fn minimal_inference() {
    let spec = Spec::parse(BUYER);
    let mut out = ptr::null_mut();
    let st = unsafe { mpst_infer_minimal(spec.0, c("M").as_ptr(), &mut out) };
    assert_eq!(st, MpstStatus::Ok);
    assert_eq!(
        report(out)["outcomes"][0]["ignored"],
        serde_json::json!(["c", "s"])
    );
}

#[test]
fn lock_freedom_with_witness() {
    let spec = Spec::parse(SOCIAL);
    let mut out = ptr::null_mut();
    let st = unsafe { mpst_lock_free(spec.0, c("M").as_ptr(), c("").as_ptr(), 1000, &mut out) };
    assert_eq!(st, MpstStatus::No);
    assert_eq!(report(out)["lock_freedom"]["witness"]["participant"], "u");
    let st = unsafe { mpst_lock_free(spec.0, c("M").as_ptr(), c("I").as_ptr(), 1000, &mut out) };
    assert_eq!(st, MpstStatus::Ok);
    unsafe { mpst_string_free(out) };
    let st = unsafe { mpst_lock_free(spec.0, c("M").as_ptr(), c("").as_ptr(), 2, &mut out) };
    assert_eq!(st, MpstStatus::Limit);
    assert!(out.is_null());
}

#[test]
fn error_codes() {
    let mut h = ptr::null_mut();
    let bad = c("session M = p: q!");
    assert_eq!(
        unsafe { mpst_spec_parse(bad.as_ptr(), &mut h) },
        MpstStatus::Parse
    );
    assert!(h.is_null());
    assert!(last_error().starts_with("1:"), "{}", last_error());
    assert_eq!(
        unsafe { mpst_spec_parse(ptr::null(), &mut h) },
        MpstStatus::NullArgument
    );
    let spec = Spec::parse(SOCIAL);
    let mut out = ptr::null_mut();
    let st = unsafe {
        mpst_typecheck(
            spec.0,
            c("G").as_ptr(),
            c("Nope").as_ptr(),
            c("").as_ptr(),
            &mut out,
        )
    };
    assert_eq!(st, MpstStatus::Lookup);
    assert!(last_error().contains("Nope"));
    let st =
        unsafe { mpst_typecheck(ptr::null(), ptr::null(), ptr::null(), ptr::null(), &mut out) };
    assert_eq!(st, MpstStatus::NullArgument);
    let invalid = [0xffu8, 0];
    let st = unsafe { mpst_session_text(spec.0, invalid.as_ptr().cast(), &mut out) };
    assert_eq!(st, MpstStatus::InvalidUtf8);
    // a successful call clears the error
    let st = unsafe { mpst_session_text(spec.0, c("M").as_ptr(), &mut out) };
    assert_eq!(st, MpstStatus::Ok);
    assert!(mpst_last_error().is_null());
    let printed = take(out);
    assert!(printed.contains("\nsession M = p: "), "{printed}");
    drop(Spec::parse(&printed));
}

#[test]
fn version_and_header() {
    let v = unsafe { CStr::from_ptr(mpst_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    let header = include_str!("../include/mpst.h");
    for f in [
        "mpst_spec_parse",
        "mpst_spec_free",
        "mpst_typecheck",
        "mpst_infer_minimal",
        "mpst_lock_free",
        "mpst_session_text",
        "mpst_last_error",
        "mpst_string_free",
        "mpst_version",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(header.contains("MPST_STATUS_LIMIT = 6"));
}
