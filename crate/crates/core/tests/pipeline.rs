mod common;

use std::fs;

use fixprint::pipeline::{self, Stage, CANDIDATES_FILE, SUMMARY_FILE};

#[test]
fn multiarch_fix_misses_one_architecture() {
    let out = tempfile::tempdir().unwrap();
    let r = common::run(&common::fixtures().join("multiarch"), out.path(), 2);
    assert_eq!(r.exit_code(), 0, "{:?}", r.aborted);
    let cands = common::read_json(&out.path().join(CANDIDATES_FILE));
    let cands = cands.as_array().unwrap();
    assert_eq!(cands.len(), 1);
    assert_eq!(cands[0]["cve_id"], "CVE-2017-1000364");
    assert_eq!(cands[0]["multiplicity"], 5);
    assert_eq!(
        common::omissions(out.path()),
        vec![("arch/nds32/mm/mmap.c".to_string(), "arch_get_unmapped_area".to_string(), "absent".to_string())]
    );
}

#[test]
fn dvb_fix_misses_two_drivers() {
    let out = tempfile::tempdir().unwrap();
    let r = common::run(&common::fixtures().join("dvb"), out.path(), 2);
    assert_eq!(r.exit_code(), 0, "{:?}", r.aborted);
    let cands = common::read_json(&out.path().join(CANDIDATES_FILE));
    assert_eq!(cands.as_array().unwrap().len(), 1);
    assert_eq!(cands[0]["multiplicity"], 4);
    let files: Vec<String> = common::omissions(out.path()).into_iter().map(|o| o.0).collect();
    assert_eq!(
        files,
        [
            "drivers/media/dvb-frontends/stv0288.c",
            "drivers/media/dvb-frontends/tda8083.c"
        ]
    );
}

#[test]
fn summary_counts() {
    let out = tempfile::tempdir().unwrap();
    let r = common::run(&common::fixtures().join("multiarch"), out.path(), 1);
    let s = r.summary.unwrap();
    assert_eq!((s.cves, s.processed, s.failed, s.skipped), (2, 2, 0, 0));
    assert_eq!(s.patches, 7);
    assert_eq!(s.fingerprints, 2);
    assert_eq!(s, pipeline::read_summary(out.path()).unwrap());
    let report = fs::read_to_string(out.path().join(pipeline::REPORT_FILE)).unwrap();
    assert!(report.contains("arch/nds32/mm/mmap.c"));
}

#[test]
fn corrupt_diff_fails_only_its_cve() {
    let corpus = tempfile::tempdir().unwrap();
    common::copy_dir(&common::fixtures().join("multiarch"), corpus.path());
    let diff = corpus.path().join("diffs/c677879fee059d4b00de4cefe463b4fda9392397.diff");
    let text = fs::read_to_string(&diff).unwrap();
    let cut = text.find("@@").unwrap();
    fs::write(&diff, format!("{}@@ -1,3 +1,3 @@\n-only\n", &text[..cut])).unwrap();

    let out = tempfile::tempdir().unwrap();
    let r = common::run(corpus.path(), out.path(), 2);
    assert_eq!(r.exit_code(), 1);
    assert!(r.aborted.is_none());
    let s = r.summary.unwrap();
    assert_eq!((s.processed, s.failed), (1, 1));
    let bad = s.statuses.iter().find(|c| c.cve_id == "CVE-2017-1000365").unwrap();
    assert_eq!(bad.stage, Some(Stage::Ingest));
    assert!(bad.reason.is_some());
    assert_eq!(s.candidates, 1);
    assert_eq!(common::omissions(out.path()).len(), 1);
}

#[test]
fn empty_manifest_succeeds() {
    let corpus = tempfile::tempdir().unwrap();
    fs::write(corpus.path().join("manifest.jsonl"), "").unwrap();
    let out = tempfile::tempdir().unwrap();
    let r = common::run(corpus.path(), out.path(), 1);
    assert_eq!(r.exit_code(), 0);
    let s = pipeline::read_summary(out.path()).unwrap();
    assert_eq!((s.cves, s.candidates, s.omissions), (0, 0, 0));
}

#[test]
fn stages_rerun_one_by_one_match_full_run() {
    let corpus = common::fixtures().join("dvb");
    let (full, staged) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    common::run(&corpus, full.path(), 1);
    let cfg = common::config(&corpus, staged.path(), 1);
    for st in Stage::ALL {
        pipeline::run_stage(&cfg, st).unwrap();
    }
    // a second scan over existing artifacts changes nothing
    pipeline::run_stage(&cfg, Stage::Scan).unwrap();
    assert_eq!(common::dir_contents(full.path()), common::dir_contents(staged.path()));
}

#[test]
fn worker_count_does_not_change_artifacts() {
    for name in ["multiarch", "dvb"] {
        let corpus = common::fixtures().join(name);
        let mut seen = Vec::new();
        for workers in [1, 4, 8] {
            let out = tempfile::tempdir().unwrap();
            common::run(&corpus, out.path(), workers);
            seen.push(common::dir_contents(out.path()));
        }
        assert!(seen.windows(2).all(|w| w[0] == w[1]), "{name}");
        assert!(seen[0].contains_key(SUMMARY_FILE));
    }
}

#[test]
fn artifacts_hold_no_absolute_paths() {
    let out = tempfile::tempdir().unwrap();
    let corpus = common::fixtures().join("multiarch");
    common::run(&corpus, out.path(), 1);
    let root = corpus.canonicalize().unwrap();
    for (rel, bytes) in common::dir_contents(out.path()) {
        let text = String::from_utf8_lossy(&bytes);
        assert!(!text.contains(root.to_str().unwrap()), "{rel}");
        assert!(!text.contains(out.path().to_str().unwrap()), "{rel}");
    }
}
