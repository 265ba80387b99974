//! C interface to the `facalc` command set. A session owns a loaded
//! structure file; commands run against it and return their report as a
//! newly allocated string.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use facalc::cli::{self, FileData};

/// Command passed and every relation held.
pub const FACALC_OK: i32 = 0;
/// A relation failed.
pub const FACALC_FAIL: i32 = 1;
/// Some check was undecided or a result lossy.
pub const FACALC_UNDECIDED: i32 = 2;
/// Malformed input or a type error in the structure file.
pub const FACALC_PARSE: i32 = 64;
/// A referenced name does not exist.
pub const FACALC_RESOLVE: i32 = 65;
/// A required pointer was null.
pub const FACALC_NULL: i32 = -1;
/// A string argument was not UTF-8.
pub const FACALC_UTF8: i32 = -2;
/// The engine panicked; the session may still be used.
pub const FACALC_PANIC: i32 = -3;

/// A loaded structure file.
pub struct FacalcSession {
    text: String,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, i32> {
    if p.is_null() {
        set_error("null string argument");
        return Err(FACALC_NULL);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string argument is not UTF-8");
        FACALC_UTF8
    })
}

fn into_c(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

/// Parses a structure file from its JSON text. On success `*out` receives a
/// session to be released with `facalc_session_free`. Name resolution and
/// evaluation happen per command.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn facalc_session_new(json: *const c_char, out: *mut *mut FacalcSession) -> i32 {
    if out.is_null() {
        set_error("null output pointer");
        return FACALC_NULL;
    }
    *out = ptr::null_mut();
    let text = match read_str(json) {
        Ok(t) => t.to_string(),
        Err(code) => return code,
    };
    match std::panic::catch_unwind(|| FileData::parse(&text).map(|_| ()).map_err(|e| (e.exit_code(), e.to_string()))) {
        Ok(Ok(())) => {
            set_error("");
            *out = Box::into_raw(Box::new(FacalcSession { text }));
            FACALC_OK
        }
        Ok(Err((code, msg))) => {
            set_error(&msg);
            code
        }
        Err(_) => {
            set_error("panic while loading");
            FACALC_PANIC
        }
    }
}

/// Runs `command` with `nargs` further arguments (entity names and
/// options, as on the command line). `*report` receives the report, to be
/// released with `facalc_string_free`; the return value is the command's
/// exit code.
///
/// # Safety
/// `session` must come from `facalc_session_new`; `command` and each of the
/// `nargs` entries of `args` must be valid NUL-terminated strings; `report`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn facalc_run(
    session: *const FacalcSession,
    command: *const c_char,
    args: *const *const c_char,
    nargs: usize,
    report: *mut *mut c_char,
) -> i32 {
    if session.is_null() || report.is_null() || (args.is_null() && nargs > 0) {
        set_error("null argument");
        return FACALC_NULL;
    }
    *report = ptr::null_mut();
    let command = match read_str(command) {
        Ok(c) => c.to_string(),
        Err(code) => return code,
    };
    let mut argv = vec!["facalc".to_string(), command, "<session>".to_string()];
    for i in 0..nargs {
        match read_str(*args.add(i)) {
            Ok(a) => argv.push(a.to_string()),
            Err(code) => return code,
        }
    }
    let text = &(*session).text;
    let outcome = std::panic::catch_unwind(|| cli::run(argv, |_: &Path| Ok(text.clone())));
    match outcome {
        Ok(out) => {
            set_error(out.stderr.trim_end());
            *report = into_c(out.stdout);
            out.code
        }
        Err(_) => {
            set_error("panic while running the command");
            FACALC_PANIC
        }
    }
}

/// Message of the last failing call on this thread; empty when none. The
/// pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn facalc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn facalc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `s` must come from `facalc_session_new` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn facalc_session_free(s: *mut FacalcSession) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}
