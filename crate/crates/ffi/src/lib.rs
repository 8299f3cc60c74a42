//! C ABI for mpst-core.
//!
//! A spec file is parsed once into an opaque [`MpstSpec`] handle; queries
//! name its global types, sessions and ignored sets the same way the `mpst`
//! command line does. Results come back as JSON strings (the `check`,
//! `infer` and `analyze` reports of the command line) that the caller frees
//! with [`mpst_string_free`]. Every entry point returns an [`MpstStatus`];
//! on an error status the message is available from [`mpst_last_error`].

use libc::c_char;
use mpst_core::analysis::lock_free_on;
use mpst_core::frontend::print_session;
use mpst_core::inference::{infer_minimal, Budget};
use mpst_core::json;
use mpst_core::semantics::explore_with_limit;
use mpst_core::typing::typecheck;
use mpst_core::{parse, SpecFile};
use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Result of every call. `Ok` and `No` are answers; the rest are errors.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MpstStatus {
    /// The call succeeded and the property holds (or the triple is accepted).
    Ok = 0,
    /// The call succeeded and the property fails (or the triple is rejected).
    No = 1,
    /// A required pointer argument was null.
    NullArgument = 2,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 3,
    /// The spec text does not parse.
    Parse = 4,
    /// A global type, session or ignored set could not be resolved.
    Lookup = 5,
    /// A search or exploration hit its limit before answering.
    Limit = 6,
    /// An internal error; the library caught a panic.
    Internal = 7,
}

/// A parsed spec file.
pub struct MpstSpec {
    spec: SpecFile,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(MpstStatus, String);

type Answer = Result<(MpstStatus, Option<String>), Failure>;

fn set_error(msg: &str) {
    let text = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

/// Runs `f`, stores any error message and writes any output string.
fn guarded(out: *mut *mut c_char, f: impl FnOnce() -> Answer) -> MpstStatus {
    if !out.is_null() {
        // SAFETY: the caller passes either null or a writable pointer.
        unsafe { *out = ptr::null_mut() };
    }
    let result = catch_unwind(AssertUnwindSafe(f))
        .unwrap_or_else(|_| Err(Failure(MpstStatus::Internal, "internal panic".into())));
    match result {
        Ok((status, text)) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            if let (false, Some(t)) = (out.is_null(), text) {
                let c = CString::new(t).expect("reports contain no nul bytes");
                // SAFETY: checked non-null above.
                unsafe { *out = c.into_raw() };
            }
            status
        }
        Err(Failure(status, msg)) => {
            set_error(&msg);
            status
        }
    }
}

/// # Safety
/// `s` must be null or a valid nul-terminated string.
unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure(
            MpstStatus::NullArgument,
            format!("`{what}` is null"),
        ));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure(MpstStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

/// # Safety
/// `h` must be null or a handle from [`mpst_spec_parse`] not yet freed.
unsafe fn handle<'a>(h: *const MpstSpec) -> Result<&'a SpecFile, Failure> {
    h.as_ref()
        .map(|h| &h.spec)
        .ok_or_else(|| Failure(MpstStatus::NullArgument, "`spec` is null".into()))
}

fn lookup<T>(r: Result<T, mpst_core::frontend::LookupError>) -> Result<T, Failure> {
    r.map_err(|e| Failure(MpstStatus::Lookup, e.to_string()))
}

fn verdict(holds: bool) -> MpstStatus {
    if holds {
        MpstStatus::Ok
    } else {
        MpstStatus::No
    }
}

/// Parses spec text into a new handle written to `*out`.
///
/// # Safety
/// `source` must be a valid nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mpst_spec_parse(
    source: *const c_char,
    out: *mut *mut MpstSpec,
) -> MpstStatus {
    if out.is_null() {
        set_error("`out` is null");
        return MpstStatus::NullArgument;
    }
    *out = ptr::null_mut();
    guarded(ptr::null_mut(), || {
        let src = text(source, "source")?;
        let spec = parse(src).map_err(|e| Failure(MpstStatus::Parse, e.to_string()))?;
        *out = Box::into_raw(Box::new(MpstSpec { spec }));
        Ok((MpstStatus::Ok, None))
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `spec` must be null or a handle from [`mpst_spec_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mpst_spec_free(spec: *mut MpstSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Checks `global ⊢_ignored session`. Returns `Ok` if accepted and `No` if
/// rejected; `*report` (if `report` is non-null) receives the JSON report.
/// `ignored` is a named ignored set or a comma-separated participant list.
///
/// # Safety
/// `spec` must be a live handle, the names valid nul-terminated strings, and
/// `report` null or writable.
#[no_mangle]
pub unsafe extern "C" fn mpst_typecheck(
    spec: *const MpstSpec,
    global: *const c_char,
    session: *const c_char,
    ignored: *const c_char,
    report: *mut *mut c_char,
) -> MpstStatus {
    guarded(report, || {
        let spec = handle(spec)?;
        let (gname, sname) = (text(global, "global")?, text(session, "session")?);
        let g = lookup(spec.resolve_global(gname))?;
        let m = lookup(spec.resolve_session(sname))?;
        let p = lookup(spec.resolve_ignored(text(ignored, "ignored")?))?;
        let result = typecheck(&g, &m, &p);
        let v = json::check_report(gname, sname, &p, &result);
        Ok((verdict(result.is_ok()), Some(json::render(&v))))
    })
}

/// Infers a global type with a minimal ignored set for `session`, using the
/// default budget. Returns `Ok` with the JSON report, or `Limit` if the
/// budget ran out first.
///
/// # Safety
/// As for [`mpst_typecheck`].
#[no_mangle]
pub unsafe extern "C" fn mpst_infer_minimal(
    spec: *const MpstSpec,
    session: *const c_char,
    report: *mut *mut c_char,
) -> MpstStatus {
    guarded(report, || {
        let spec = handle(spec)?;
        let sname = text(session, "session")?;
        let m = lookup(spec.resolve_session(sname))?;
        let res = infer_minimal(&m, &Budget::default());
        let v = json::minimal_report(sname, &res, false);
        match res {
            Ok(_) => Ok((MpstStatus::Ok, Some(json::render(&v)))),
            Err(e) => Err(Failure(MpstStatus::Limit, e.to_string())),
        }
    })
}

/// Decides lock-freedom of `session` excluding `ignored`. Returns `Ok` if it
/// holds and `No` (with a witness in the report) otherwise.
///
/// # Safety
/// As for [`mpst_typecheck`].
#[no_mangle]
pub unsafe extern "C" fn mpst_lock_free(
    spec: *const MpstSpec,
    session: *const c_char,
    ignored: *const c_char,
    state_cap: usize,
    report: *mut *mut c_char,
) -> MpstStatus {
    guarded(report, || {
        let spec = handle(spec)?;
        let sname = text(session, "session")?;
        let m = lookup(spec.resolve_session(sname))?;
        let p = lookup(spec.resolve_ignored(text(ignored, "ignored")?))?;
        let sg = explore_with_limit(&m, state_cap)
            .map_err(|e| Failure(MpstStatus::Limit, e.to_string()))?;
        let l = lock_free_on(&sg, &p);
        let holds = l.holds;
        let v = json::analyze_report(json::AnalyzeParts {
            session: Some(sname.into()),
            lock_freedom: Some(json::liveness_json(&l)),
            ..Default::default()
        });
        Ok((verdict(holds), Some(json::render(&v))))
    })
}

/// The session `name` printed in the spec syntax.
///
/// # Safety
/// As for [`mpst_typecheck`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mpst_session_text(
    spec: *const MpstSpec,
    name: *const c_char,
    out: *mut *mut c_char,
) -> MpstStatus {
    if out.is_null() {
        set_error("`out` is null");
        return MpstStatus::NullArgument;
    }
    guarded(out, || {
        let spec = handle(spec)?;
        let n = text(name, "name")?;
        let m = lookup(spec.resolve_session(n))?;
        Ok((MpstStatus::Ok, Some(print_session(&m, n))))
    })
}

/// The message of the last error on this thread, or null. The pointer stays
/// valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn mpst_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mpst_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// The library version, statically allocated.
#[no_mangle]
pub extern "C" fn mpst_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
