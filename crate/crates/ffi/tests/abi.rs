use std::ffi::{CStr, CString};
use std::ptr;

use facalc_ffi::*;

fn fixture(name: &str) -> CString {
    let path = format!("{}/../core/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    CString::new(std::fs::read_to_string(path).unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(facalc_last_error()) }.to_str().unwrap().to_string()
}

unsafe fn run(s: *const FacalcSession, cmd: &str, args: &[&str]) -> (i32, String) {
    let cmd = CString::new(cmd).unwrap();
    let owned: Vec<CString> = args.iter().map(|a| CString::new(*a).unwrap()).collect();
    let ptrs: Vec<*const std::ffi::c_char> = owned.iter().map(|a| a.as_ptr()).collect();
    let mut report = ptr::null_mut();
    let code = facalc_run(s, cmd.as_ptr(), ptrs.as_ptr(), ptrs.len(), &mut report);
    let text = if report.is_null() {
        String::new()
    } else {
        let t = CStr::from_ptr(report).to_str().unwrap().to_string();
        facalc_string_free(report);
        t
    };
    (code, text)
}

#[test]
fn checks_run_through_a_session() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(facalc_session_new(fixture("assoc.json").as_ptr(), &mut s), FACALC_OK);
        let (code, text) = run(s, "check-b2", &[]);
        assert_eq!(code, FACALC_OK, "{text}");
        assert!(text.contains("status: PASS"), "{text}");
        facalc_session_free(s);

        assert_eq!(facalc_session_new(fixture("nonassoc.json").as_ptr(), &mut s), FACALC_OK);
        let (code, text) = run(s, "check-b2", &["--format", "json"]);
        assert_eq!(code, FACALC_FAIL);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["status"], "FAIL");
        facalc_session_free(s);
    }
}

#[test]
fn constructive_commands_report_their_flag() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(facalc_session_new(fixture("chain_map.json").as_ptr(), &mut s), FACALC_OK);
        let (code, text) = run(s, "compose", &["f", "g"]);
        assert_eq!(code, FACALC_OK);
        assert!(text.contains("\"functors\""), "{text}");
        assert!(last_error().starts_with("flag: "), "{}", last_error());
        facalc_session_free(s);
    }
}

#[test]
fn errors_map_to_codes() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(facalc_session_new(fixture("parse_error.json").as_ptr(), &mut s), FACALC_PARSE);
        assert!(s.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(facalc_session_new(ptr::null(), &mut s), FACALC_NULL);
        let bad = [0xffu8, 0];
        assert_eq!(facalc_session_new(bad.as_ptr().cast(), &mut s), FACALC_UTF8);

        assert_eq!(facalc_session_new(fixture("chain_map.json").as_ptr(), &mut s), FACALC_OK);
        assert_eq!(run(s, "check-b2", &["Z"]).0, FACALC_RESOLVE);
        assert_eq!(run(s, "frobnicate", &[]).0, FACALC_PARSE);
        let mut report = ptr::null_mut();
        let cmd = CString::new("check-b2").unwrap();
        assert_eq!(facalc_run(s, cmd.as_ptr(), ptr::null(), 1, &mut report), FACALC_NULL);
        assert_eq!(facalc_run(ptr::null(), cmd.as_ptr(), ptr::null(), 0, &mut report), FACALC_NULL);
        facalc_session_free(s);

        assert_eq!(facalc_session_new(fixture("discrete_undecided.json").as_ptr(), &mut s), FACALC_OK);
        assert_eq!(run(s, "check-functor", &[]).0, FACALC_UNDECIDED);
        facalc_session_free(s);
    }
}

#[test]
fn null_frees_are_harmless() {
    unsafe {
        facalc_string_free(ptr::null_mut());
        facalc_session_free(ptr::null_mut());
    }
}
