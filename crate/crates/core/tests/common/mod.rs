#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn awe(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_awe"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .expect("spawn awe")
}

/// Runs a command that must succeed.
pub fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = awe(dir, args);
    assert!(
        out.status.success(),
        "awe {args:?} failed ({:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn code(dir: &Path, args: &[&str]) -> i32 {
    awe(dir, args).status.code().expect("exit code")
}

/// Every file under `root`, keyed by relative path.
pub fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        let mut entries: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                out.insert(p.strip_prefix(base).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// Parses a `variant\tn_triples\terror_rate` report.
pub fn report_rates(path: &Path) -> BTreeMap<String, Option<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let c: Vec<&str> = l.split('\t').collect();
            (c[0].to_string(), c[2].parse().ok())
        })
        .collect()
}

/// Parses a `k\taccuracy\t...` cluster report into (k, accuracy).
pub fn cluster_report(path: &Path) -> (usize, f64) {
    let text = fs::read_to_string(path).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split('\t').collect();
    (row[0].parse().unwrap(), row[1].parse().unwrap())
}

pub fn loss_log(path: &Path) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split('\t').nth(1).unwrap().parse().unwrap())
        .collect()
}

/// Asserts two output trees hold byte-identical files, ignoring run
/// manifests (which record the differing output paths).
pub fn assert_same_outputs(a: &Path, b: &Path) {
    let strip = |m: BTreeMap<PathBuf, Vec<u8>>| -> BTreeMap<PathBuf, Vec<u8>> {
        m.into_iter().filter(|(k, _)| !k.to_string_lossy().ends_with("run.json")).collect()
    };
    let (x, y) = (strip(snapshot(a)), strip(snapshot(b)));
    let names = |m: &BTreeMap<PathBuf, Vec<u8>>| m.keys().cloned().collect::<Vec<_>>();
    assert_eq!(names(&x), names(&y), "file sets differ");
    let differing: Vec<&PathBuf> = x.iter().filter(|(k, v)| y[*k] != **v).map(|(k, _)| k).collect();
    assert!(differing.is_empty(), "files differ: {differing:?}");
}
