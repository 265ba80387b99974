use std::path::{Path, PathBuf};
use std::process::Command;

use facalc::cli::{self, FileData};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn facalc(args: &[&str]) -> (String, String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_facalc"))
        .args(args)
        .current_dir(root())
        .output()
        .expect("binary runs");
    (
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
        out.status.code().unwrap(),
    )
}

fn fixture(name: &str) -> String {
    std::fs::read_to_string(root().join("fixtures").join(name)).unwrap()
}

#[test]
fn golden_outputs() {
    let cases = std::fs::read_to_string(root().join("tests/golden/cases.txt")).unwrap();
    for line in cases.lines().filter(|l| !l.trim().is_empty()) {
        let parts: Vec<&str> = line.splitn(3, '|').collect();
        let (name, code, cmd) = (parts[0], parts[1].parse::<i32>().unwrap(), parts[2]);
        let args: Vec<String> = cmd.split_whitespace().map(|a| a.replace('~', " ")).collect();
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let (stdout, _, got) = facalc(&args);
        let want = std::fs::read_to_string(root().join(format!("tests/golden/{name}.out"))).unwrap();
        assert_eq!(got, code, "exit code of {name}");
        assert_eq!(stdout, want, "output of {name}");
    }
}

#[test]
fn canonical_form_is_a_fixed_point() {
    for entry in std::fs::read_dir(root().join("fixtures")).unwrap() {
        let path = entry.unwrap().path();
        let Ok(data) = FileData::parse(&std::fs::read_to_string(&path).unwrap()) else {
            continue;
        };
        let once = data.to_canonical();
        let again = FileData::parse(&once).unwrap();
        assert_eq!(again, data, "{}", path.display());
        assert_eq!(again.to_canonical(), once, "{}", path.display());
    }
}

#[test]
fn solve_psi_reproduces_the_declared_section() {
    let data = FileData::parse(&fixture("psi.json")).unwrap();
    let want = cli::format::canonical(&serde_json::json!({"psi": data.psi_value(data.psi.as_ref().unwrap())}));
    let (stdout, stderr, code) = facalc(&["solve-psi", "fixtures/psi.json"]);
    assert_eq!(code, 0, "{stderr}");
    assert_eq!(stdout, want);
}

#[test]
fn solve_psi_detects_a_corrupted_psi() {
    let text = fixture("psi.json").replace("\"2*s\"", "\"2*s + 1*T^{1}*s\"");
    let out = cli::run(["facalc", "solve-psi", "mem.json"], |_: &Path| Ok(text.clone()));
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("2*T^{0}*e^{0}*s + 1*T^{1}*e^{0}*s"), "{}", out.stdout);
}

#[test]
fn exit_codes() {
    assert_eq!(facalc(&["check-b2", "fixtures/parse_error.json"]).2, 64);
    assert_eq!(facalc(&["check-b2", "fixtures/missing.json"]).2, 64);
    assert_eq!(facalc(&["check-b2", "fixtures/chain_map.json", "Z"]).2, 65);
    assert_eq!(facalc(&["compose", "fixtures/chain_map.json", "f", "nope"]).2, 65);
    assert_eq!(facalc(&["eval", "fixtures/chain_map.json", "p zz", "f"]).2, 64);
    assert_eq!(facalc(&["check-functor", "fixtures/discrete_undecided.json"]).2, 2);
    assert_eq!(facalc(&["check-b2", "fixtures/chain_map.json", "--window", "3,x"]).2, 64);
    assert_eq!(facalc(&["frobnicate", "fixtures/chain_map.json"]).2, 64);
}

#[test]
fn type_errors_are_rejected() {
    let cases = [
        // value of the wrong degree
        ("\"value\": \"q\"}]},", "\"value\": \"p\"}]},"),
        // negative energy in a nonnegative ring
        ("{\"word\": \"p\", \"value\": \"p\"}, {\"word\": \"q\"", "{\"word\": \"p\", \"value\": \"T^{-1}*p\"}, {\"word\": \"q\""),
    ];
    let base = fixture("chain_map.json");
    for (from, to) in cases {
        assert!(base.contains(from), "{from}");
        let text = base.replacen(from, to, 1);
        let out = cli::run(["facalc", "check-b2", "mem.json"], |_: &Path| Ok(text.clone()));
        assert_eq!(out.code, 64, "{to}: {}", out.stderr);
    }
}

#[test]
fn unknown_references_are_resolution_errors() {
    let text = fixture("psi.json").replace("\"Y1\": \"g\"", "\"Y1\": \"nowhere\"");
    let out = cli::run(["facalc", "solve-psi", "mem.json"], |_: &Path| Ok(text.clone()));
    assert_eq!(out.code, 65, "{}", out.stderr);
}

#[test]
fn scalars_accept_shorthand() {
    let a = FileData::parse(&fixture("psi.json")).unwrap();
    let text = fixture("psi.json").replace("\"2*s\"", "\"s + s\"").replace("\"T^{1}*p\"", "\"1*T^{1}*e^{0}*p\"");
    assert_eq!(FileData::parse(&text).unwrap(), a);
}
