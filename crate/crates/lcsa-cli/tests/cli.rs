//! End-to-end checks of the binary: subcommand output and the 0/1/2 exit
//! code contract.

use std::process::Command;

fn lcsa() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lcsa"))
}

#[test]
fn check_passes_on_builtins() {
    for name in ["RE36", "RW(2,1)", "K(1,3)"] {
        let out = lcsa().args(["check", name]).output().unwrap();
        assert!(out.status.success(), "{name}: {:?}", out);
    }
}

#[test]
fn unknown_algebra_exits_2() {
    let out = lcsa().args(["check", "Zorp(9)"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("unknown algebra"));
}

#[test]
fn bracket_and_kproduct_match_tables() {
    let out = lcsa()
        .args(["bracket", "RW(1,0)", "a1", "a1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let s = String::from_utf8_lossy(&out.stdout);
    assert!(s.contains("d1 a1") && s.contains("2 l1 a1"), "{s}");
    let out = lcsa()
        .args(["kproduct", "RW(1,0)", "a1", "a1", "1"])
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("2 a1"));
    // non-canonical K is an input error
    let out = lcsa()
        .args(["kproduct", "RW(2,2)", "a3", "a3", "4,3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ann_dim_json_matches_known_values() {
    let out = lcsa()
        .args(["--json", "ann-dim", "RE510", "--from=-2", "--to=0"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("valid JSON report");
    assert_eq!(v["dims"]["-2"], "5");
    assert_eq!(v["dims"]["-1"], "10");
    assert_eq!(v["dims"]["0"], "24");
    assert_eq!(v["status"], "pass");
}

#[test]
fn shift_char_kn() {
    let out = lcsa().args(["shift-char", "K(1,4)"]).output().unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("chi(y) = 2"));
}

#[test]
fn verma_dual_on_sample_file() {
    let sample = concat!(env!("CARGO_MANIFEST_DIR"), "/../../samples/k13_scalar.g0m");
    let out = lcsa()
        .args(["verma-dual", "K(1,3)", sample])
        .output()
        .unwrap();
    assert!(out.status.success(), "{:?}", out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("rank-8"));
    // missing file exits 2
    let out = lcsa()
        .args(["verma-dual", "K(1,3)", "/nope.g0m"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn custom_algebra_file_roundtrip() {
    let sample = concat!(env!("CARGO_MANIFEST_DIR"), "/../../samples/rw10.lcsa");
    let out = lcsa().args(["check", sample]).output().unwrap();
    assert!(out.status.success());
    // a deliberately broken table exits 1 with witnesses
    let dir = std::env::temp_dir().join("lcsa_cli_test");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.lcsa");
    std::fs::write(
        &bad,
        "algebra Bad (1, 0)\ngen a even deg -2\nbracket a a = a\n",
    )
    .unwrap();
    let out = lcsa()
        .args(["check", bad.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("skew"));
}

#[test]
fn out_flag_writes_report_file() {
    let dir = std::env::temp_dir().join("lcsa_cli_test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = lcsa()
        .args(["--out", path.to_str().unwrap(), "ann-dim", "RE36", "--from=0", "--to=0"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["dims"]["0"], "12");
}
