//! C ABI for `poset-cstar`.
//!
//! Posets and directed families are opaque handles created and freed here.
//! Every fallible call returns a [`PcsStatus`]; on failure the message is
//! available from [`pcs_last_error`] on the same thread. Strings returned
//! to the caller are freed with [`pcs_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use poset_cstar::cli::{error_exit_code, run_json};
use poset_cstar::poset::{maximal_directed_subsets, DirectedFamily, Poset};
use poset_cstar::Error;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidPoset = 4,
    SizeLimit = 5,
    OutOfRange = 6,
    InvalidInput = 7,
    Numeric = 8,
    CheckFailed = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

impl From<&Error> for PcsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse(_) => PcsStatus::Parse,
            Error::UnknownElement(_) | Error::Cycle(..) | Error::EmptyPoset | Error::DuplicateElement(_) => {
                PcsStatus::InvalidPoset
            }
            Error::SizeLimit { .. } => PcsStatus::SizeLimit,
            Error::IndexOutOfRange(_)
            | Error::PrimeIndexOutOfRange(_)
            | Error::ChainTooShort { .. }
            | Error::DepthExceeded { .. }
            | Error::ChainUnavailable { .. }
            | Error::StageOrder { .. } => PcsStatus::OutOfRange,
            Error::NonConvergence(_)
            | Error::OverflowGuard(_)
            | Error::GridTooCoarse { .. }
            | Error::DegreeOverflow { .. } => PcsStatus::Numeric,
            Error::CofinalityFailure(..) | Error::IncompatibleCocone { .. } => PcsStatus::CheckFailed,
            _ => PcsStatus::InvalidInput,
        }
    }
}

/// A finite poset.
pub struct PcsPoset {
    inner: Poset,
}

/// The maximal upward directed subsets of a poset.
pub struct PcsDirectedFamily {
    inner: DirectedFamily,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn fail(status: PcsStatus, message: impl Into<String>) -> PcsStatus {
    set_error(message.into());
    status
}

fn fail_with(e: &Error) -> PcsStatus {
    fail(e.into(), e.to_string())
}

/// Runs `body`, clearing the last error first and turning a panic into
/// [`PcsStatus::Panic`].
fn guard(body: impl FnOnce() -> PcsStatus) -> PcsStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(PcsStatus::Panic, "panic inside poset-cstar"),
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, PcsStatus> {
    if s.is_null() {
        return Err(fail(PcsStatus::NullPointer, "string argument is null"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| fail(PcsStatus::InvalidUtf8, e.to_string()))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("nul bytes removed")
        .into_raw()
}

macro_rules! non_null {
    ($($p:ident),*) => {
        $(if $p.is_null() {
            return fail(PcsStatus::NullPointer, concat!("`", stringify!($p), "` is null"));
        })*
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pcs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn pcs_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn pcs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses `{"elements": [...], "leq": [[a, b], ...]}` into a new poset.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pcs_poset_from_json(json: *const c_char, out: *mut *mut PcsPoset) -> PcsStatus {
    guard(|| {
        non_null!(out);
        *out = ptr::null_mut();
        let text = match read_str(json) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match Poset::from_json(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(PcsPoset { inner }));
                PcsStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Frees a poset. NULL is ignored.
///
/// # Safety
/// `poset` must come from [`pcs_poset_from_json`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn pcs_poset_free(poset: *mut PcsPoset) {
    if !poset.is_null() {
        drop(Box::from_raw(poset));
    }
}

/// Number of elements.
///
/// # Safety
/// `poset` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pcs_poset_len(poset: *const PcsPoset, out: *mut usize) -> PcsStatus {
    guard(|| {
        non_null!(poset, out);
        *out = (*poset).inner.len();
        PcsStatus::Ok
    })
}

/// Writes whether element `a` is below or equal to element `b`.
///
/// # Safety
/// `poset` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pcs_poset_leq(poset: *const PcsPoset, a: usize, b: usize, out: *mut bool) -> PcsStatus {
    guard(|| {
        non_null!(poset, out);
        let p = &(*poset).inner;
        for i in [a, b] {
            if i >= p.len() {
                return fail_with(&Error::IndexOutOfRange(i));
            }
        }
        *out = p.leq(a, b);
        PcsStatus::Ok
    })
}

/// Name of element `i` as a new string.
///
/// # Safety
/// `poset` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pcs_poset_element_name(poset: *const PcsPoset, i: usize, out: *mut *mut c_char) -> PcsStatus {
    guard(|| {
        non_null!(poset, out);
        *out = ptr::null_mut();
        let p = &(*poset).inner;
        if i >= p.len() {
            return fail_with(&Error::IndexOutOfRange(i));
        }
        *out = into_c_string(p.name(i).to_string());
        PcsStatus::Ok
    })
}

/// Computes the maximal upward directed subsets of `poset`.
///
/// # Safety
/// `poset` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pcs_decompose(poset: *const PcsPoset, out: *mut *mut PcsDirectedFamily) -> PcsStatus {
    guard(|| {
        non_null!(poset, out);
        *out = ptr::null_mut();
        match maximal_directed_subsets(&(*poset).inner) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(PcsDirectedFamily { inner }));
                PcsStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Frees a family. NULL is ignored.
///
/// # Safety
/// `family` must come from [`pcs_decompose`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn pcs_family_free(family: *mut PcsDirectedFamily) {
    if !family.is_null() {
        drop(Box::from_raw(family));
    }
}

/// Number of members.
///
/// # Safety
/// `family` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pcs_family_len(family: *const PcsDirectedFamily, out: *mut usize) -> PcsStatus {
    guard(|| {
        non_null!(family, out);
        *out = (*family).inner.len();
        PcsStatus::Ok
    })
}

/// Copies the ascending element indices of member `i` into `buf`. `len`
/// always receives the member size; when `cap` is smaller nothing is copied
/// and [`PcsStatus::BufferTooSmall`] is returned. `buf` may be NULL when
/// `cap` is 0.
///
/// # Safety
/// `family` must be a live handle, `len` writable and `buf` writable for
/// `cap` elements.
#[no_mangle]
pub unsafe extern "C" fn pcs_family_member(
    family: *const PcsDirectedFamily,
    i: usize,
    buf: *mut usize,
    cap: usize,
    len: *mut usize,
) -> PcsStatus {
    guard(|| {
        non_null!(family, len);
        let f = &(*family).inner;
        if i >= f.len() {
            return fail_with(&Error::IndexOutOfRange(i));
        }
        let member = f.member(i);
        *len = member.len();
        if cap < member.len() {
            return fail(
                PcsStatus::BufferTooSmall,
                format!("member {i} has {} elements, buffer holds {cap}", member.len()),
            );
        }
        if !member.is_empty() {
            non_null!(buf);
            ptr::copy_nonoverlapping(member.as_ptr(), buf, member.len());
        }
        PcsStatus::Ok
    })
}

/// Members as a JSON array of element-name arrays.
///
/// # Safety
/// Both handles must be live, `family` computed from `poset`, and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn pcs_family_to_json(
    family: *const PcsDirectedFamily,
    poset: *const PcsPoset,
    out: *mut *mut c_char,
) -> PcsStatus {
    guard(|| {
        non_null!(family, poset, out);
        *out = ptr::null_mut();
        let (f, p) = (&(*family).inner, &(*poset).inner);
        if f.members().iter().flatten().any(|&x| x >= p.len()) {
            return fail(PcsStatus::InvalidInput, "family does not belong to this poset");
        }
        let text = serde_json::to_string(&f.member_names(p)).expect("names serialize");
        *out = into_c_string(text);
        PcsStatus::Ok
    })
}

/// Runs a JSON configuration tagged by `"command"` (`decompose`,
/// `topology`, `norms`, `verify-embedding`) and returns the pretty JSON
/// report. `exit_code` receives the CLI exit code: 0 all checks passed, 1 a
/// check failed, 2 bad input. A failed check still returns
/// [`PcsStatus::Ok`] with a report; an error leaves `report` NULL.
///
/// # Safety
/// `config` must be a NUL-terminated string; `report` and `exit_code` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn pcs_run_json(
    config: *const c_char,
    report: *mut *mut c_char,
    exit_code: *mut i32,
) -> PcsStatus {
    guard(|| {
        non_null!(report, exit_code);
        *report = ptr::null_mut();
        *exit_code = 2;
        let text = match read_str(config) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match run_json(text) {
            Ok(outcome) => {
                *exit_code = outcome.exit_code();
                *report = into_c_string(outcome.render());
                PcsStatus::Ok
            }
            Err(e) => {
                *exit_code = error_exit_code(&e);
                fail_with(&e)
            }
        }
    })
}
