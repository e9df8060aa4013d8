mod common;

use fixprint::corpus::{load_manifest, load_snapshots, load_store, parse_manifest, render_manifest, split_patch, store_corpus};
use fixprint::pipeline::SNAPSHOT_DIR;

#[test]
fn fixture_corpora_store_and_reload() {
    for name in ["multiarch", "dvb"] {
        let root = common::fixtures().join(name);
        let records = load_manifest(&root.join("manifest.jsonl")).unwrap();
        let mut patches = Vec::new();
        for r in &records {
            for (i, f) in r.fixes.iter().enumerate() {
                let (b, a) = load_snapshots(&root.join(SNAPSHOT_DIR), f).unwrap();
                patches.extend(split_patch(&r.cve_id, i, f, &b, &a).unwrap());
            }
        }
        assert!(!patches.is_empty());
        let store = tempfile::tempdir().unwrap();
        store_corpus(&patches, store.path()).unwrap();
        let mut back = load_store(store.path()).unwrap();
        let key = |p: &fixprint::corpus::FineGrainedPatch| (p.cve_id.to_string(), p.fix_index, p.file_path.clone());
        // hunk line numbers point into whichever diff text they came from
        for p in back.iter_mut().chain(patches.iter_mut()) {
            p.hunks.iter_mut().for_each(|h| h.line = 0);
        }
        back.sort_by_key(key);
        patches.sort_by_key(key);
        assert_eq!(back, patches, "{name}");
    }
}

#[test]
fn manifest_renders_back_to_same_records() {
    let root = common::fixtures().join("dvb");
    let records = load_manifest(&root.join("manifest.jsonl")).unwrap();
    let text = render_manifest(&records);
    assert_eq!(parse_manifest(&text, &root).unwrap(), records);
    assert_eq!(render_manifest(&parse_manifest(&text, &root).unwrap()), text);
}

#[test]
fn fixture_dates_and_indices() {
    let records = load_manifest(&common::fixtures().join("multiarch/manifest.jsonl")).unwrap();
    let r = records.iter().find(|r| r.cve_id.as_str() == "CVE-2017-1000364").unwrap();
    assert_eq!(r.fixes.len(), 2);
    assert!(r.fixes[0].commit_date < r.fixes[1].commit_date);
    assert!(r.is_incomplete_fix());
}
