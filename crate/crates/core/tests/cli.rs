use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ballspace::harness::RatioTable;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ballspace")).args(args).output().unwrap()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn same_seed_gives_identical_reports() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let out = run(&["weak-holder", "--seed", "7", "--out", dir.path().to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    }
    let (x, y) = (read_dir_sorted(a.path()), read_dir_sorted(b.path()));
    assert_eq!(x.len(), 2);
    assert_eq!(x, y);
}

#[test]
fn json_report_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["apconst", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let t = RatioTable::from_json(&fs::read_to_string(dir.path().join("ap-constants.json")).unwrap()).unwrap();
    assert!(t.passed());
    let csv = fs::read_to_string(dir.path().join("ap-constants.csv")).unwrap();
    assert_eq!(csv.lines().count(), t.rows.len() + 1);
}

#[test]
fn overrides_reach_the_experiment() {
    let out = run(&["norm", "--grid", "n=1,L=3,N=64", "--space", "lorentz:r=2,tau=3", "--fn", "tent:width=2", "--domain", "ball:radius=1"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    let rows: Vec<&str> = stdout.lines().filter(|l| l.starts_with("norms,")).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].contains("lorentz:r=2,tau=3") && rows[0].contains("n=1,lo=-3,hi=3,N=64"));
}

#[test]
fn config_file_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bbm.cfg");
    fs::write(&path, "kind = bbm\n[grid]\nspec = n=1,L=8,N=512\n[checks]\ntolerance = 1e-9\n").unwrap();
    let out = run(&["bbm", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("[FAIL]"));
    let out = run(&["apconst", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_input_exits_with_usage_error() {
    let out = run(&["norm", "--grid", "n=1,N=0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let out = run(&["bsvy", "--space", "nonsense:p=2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_subset_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify", "--only", "5,6,11", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count(), 3);
    assert!(dir.path().join("verify.json").exists());
}
