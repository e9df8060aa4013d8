//! Inputs shared by the benchmarks.

use std::fs;
use std::path::PathBuf;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// `(name, before, after)` for every directory under `fixtures/patches`.
pub fn patch_pairs() -> Vec<(String, String, String)> {
    let mut out = Vec::new();
    for e in fs::read_dir(fixtures().join("patches")).expect("fixtures/patches exists") {
        let dir = e.expect("readable entry").path();
        let read = |f: &str| fs::read_to_string(dir.join(f)).expect("before.c and after.c present");
        let name = dir.file_name().unwrap().to_string_lossy().into_owned();
        out.push((name, read("before.c"), read("after.c")));
    }
    out.sort();
    out
}
