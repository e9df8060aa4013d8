use super::*;
use crate::corpus::CveId;
use crate::syntax::{parse_source, C_GRAMMAR_ID};

fn cve(s: &str) -> CveId {
    s.parse().unwrap()
}

fn patch(cve_id: &str, path: &str, before: &str, after: &str) -> FineGrainedPatch {
    FineGrainedPatch {
        cve_id: cve(cve_id),
        commit_hash: "c0ffee".into(),
        fix_index: 0,
        file_path: path.into(),
        old_path: None,
        before_text: before.into(),
        after_text: after.into(),
        hunks: Vec::new(),
        diff_text: String::new(),
    }
}

fn send(name: &str, body: &str) -> String {
    format!("static int {name}(struct dvb_frontend *fe, struct dvb_diseqc_master_cmd *m)\n{{\n\tstruct state *st = fe->priv;\n{body}\tmemcpy(st->buf, m->msg, m->msg_len);\n\treturn write_buf(st);\n}}\n")
}

const CHECK: &str = "\tif (m->msg_len > 6)\n\t\treturn -EINVAL;\n";

fn extract(p: &FineGrainedPatch) -> PatchPattern {
    extract_pattern(p, C_GRAMMAR_ID, &ExtractConfig::default()).unwrap()
}

fn guard_patches(n: usize) -> Vec<PatchPattern> {
    (0..n)
        .map(|i| {
            let name = format!("drv{i}_send_msg");
            extract(&patch("CVE-2015-9289", &format!("drivers/drv{i}.c"), &send(&name, ""), &send(&name, CHECK)))
        })
        .collect()
}

#[test]
fn same_fingerprint_groups_into_one_node() {
    let ex = guard_patches(3);
    assert!(ex.iter().all(|e| e.failure.is_none()));
    let g = build_graph(&cve("CVE-2015-9289"), &ex).unwrap();
    assert_eq!(g.nodes.len(), 1);
    assert_eq!(g.nodes[0].sites.len(), 3);
    assert_eq!(g.nodes[0].sites[0].function, "drv0_send_msg");
    assert_eq!(g.site_count(), 3);
}

#[test]
fn distinct_fingerprints_stay_separate() {
    let bodies = ["\tif (m->msg_len > 6)\n\t\treturn -EINVAL;\n", "\tst->count++;\n", "\tlock(st);\n\tunlock(st);\n"];
    let ex: Vec<PatchPattern> = bodies
        .iter()
        .enumerate()
        .map(|(i, b)| extract(&patch("CVE-2015-9289", &format!("d{i}.c"), &send("f", ""), &send("f", b))))
        .collect();
    let g = build_graph(&cve("CVE-2015-9289"), &ex).unwrap();
    assert_eq!(g.nodes.len(), 3);
    assert!(g.nodes.iter().all(|n| n.sites.len() == 1));
}

#[test]
fn failed_extractions_are_recorded() {
    let ex = vec![
        extract(&patch("CVE-2015-9289", "a.c", "int x;\n", "int x;   /* comment */\n")),
        extract(&patch("CVE-2015-9289", "b.c", "@@@ $$$ ``` ;", "@@@ $$$ ``` ``` ;")),
    ];
    let g = build_graph(&cve("CVE-2015-9289"), &ex).unwrap();
    assert!(g.nodes.is_empty());
    assert_eq!(g.failed.len(), 2);
    assert_eq!(g.failed[0].reason, "no structural change");
    assert!(g.failed[1].reason.contains("unparsed"));
}

#[test]
fn mixed_cves_are_rejected() {
    let mut ex = guard_patches(2);
    ex[1].cve_id = cve("CVE-2017-1000364");
    assert!(matches!(build_graph(&cve("CVE-2015-9289"), &ex), Err(Error::MixedCve { .. })));
}

#[test]
fn candidates_are_sorted_and_thresholded() {
    let g4 = build_graph(&cve("CVE-2015-9289"), &guard_patches(4)).unwrap();
    let mut two = guard_patches(2);
    for e in &mut two {
        e.cve_id = cve("CVE-2014-0001");
    }
    let g2 = build_graph(&cve("CVE-2014-0001"), &two).unwrap();
    let single = build_graph(&cve("CVE-2013-0001"), &[]).unwrap();
    let reports = detect_candidates(&[g2.clone(), single.clone(), g4.clone()], 2).unwrap();
    let scores: Vec<usize> = reports.iter().map(|r| r.score).collect();
    assert_eq!(scores, vec![4, 2]);
    assert!(reports.iter().all(|r| r.multiplicity == r.sites.len()));
    assert_eq!(detect_candidates(&[g2.clone(), g4.clone()], 3).unwrap().len(), 1);
    assert!(detect_candidates(&[g4], 1).is_err());
}

#[test]
fn guard_query_has_call_anchor_and_if_effect() {
    let ex = guard_patches(1);
    let q = anchor_query(ex[0].pattern.as_ref().unwrap()).unwrap();
    assert_eq!(q.effect.len(), 1);
    let e = &q.effect[0];
    assert_eq!(e.chain, vec!["FunctionDef", "Block"]);
    assert_eq!(e.action.role, Role::Insert);
    assert_eq!(e.action.kind, "IfStmt");
    let sib = e.sibling.as_ref().unwrap();
    assert_eq!(sib.children[0].kind, "Call");
    assert_eq!(q.anchor[0].kind, "FunctionDef");
    assert_eq!(q.anchor[0].children[0].children[0].role, Role::Sibling);
}

#[test]
fn deletion_and_minimal_queries() {
    let del = extract(&patch("CVE-2015-9289", "a.c", &send("f", "\tst->count++;\n"), &send("f", "")));
    let q = anchor_query(del.pattern.as_ref().unwrap()).unwrap();
    assert_eq!(q.effect[0].action.role, Role::Delete);
    assert!(q.effect[0].sibling.is_none());

    let mut root = ShapeNode::new(Role::Root, "", None);
    let mut tu = ShapeNode::new(Role::Context, "TranslationUnit", None);
    tu.children.push(ShapeNode::new(Role::Delete, "Declaration", None));
    root.children.push(tu);
    let p = FixPattern {
        level: AbstractionLevel::None,
        grammar_id: C_GRAMMAR_ID.into(),
        shape: root,
    };
    assert_eq!(anchor_query(&p).unwrap().anchor_size(), 1);

    let mut bare = p.clone();
    bare.shape.children = vec![ShapeNode::new(Role::Insert, "Declaration", None)];
    assert!(anchor_query(&bare).is_err());
    bare.shape.children.clear();
    assert!(anchor_query(&bare).is_err());
}

fn tree(src: &str) -> SyntaxTree {
    parse_source(src, C_GRAMMAR_ID).unwrap()
}

#[test]
fn scan_finds_absent_and_different_checks() {
    let ex = guard_patches(1);
    let q = anchor_query(ex[0].pattern.as_ref().unwrap()).unwrap();
    let snapshot = vec![
        ("drivers/a.c".to_string(), tree(&send("a_send", CHECK))),
        ("drivers/b.c".to_string(), tree(&send("b_send", "\tif (ret < 0)\n\t\treturn ret;\n"))),
        ("drivers/c.c".to_string(), tree(&send("c_send", "\tif (m->msg_len > sizeof(st->buf))\n\t\treturn -EINVAL;\n"))),
        ("drivers/d.c".to_string(), tree("int unrelated(void) { return 0; }\n")),
        ("drivers/e.c".to_string(), tree(&send("e_send", "\tif (m->msg_len > 4)\n\t\treturn -EINVAL;\n"))),
    ];
    let om = scan_omissions(&q, &snapshot, &[]).unwrap();
    let got: Vec<(&str, &str, Evidence)> = om.iter().map(|o| (o.file_path.as_str(), o.function.as_str(), o.evidence)).collect();
    assert_eq!(
        got,
        vec![("drivers/b.c", "b_send", Evidence::Absent), ("drivers/c.c", "c_send", Evidence::PresentButDifferent)]
    );

    let patched = vec![Site {
        file_path: "drivers/b.c".into(),
        function: "x,b_send".into(),
    }];
    let om = scan_omissions(&q, &snapshot, &patched).unwrap();
    assert_eq!(om.len(), 1);
    assert_eq!(om[0].file_path, "drivers/c.c");

    assert!(scan_omissions(&q, &snapshot[..1], &[]).unwrap().is_empty());
    assert!(scan_omissions(&q, &snapshot[3..4], &[]).unwrap().is_empty());
    let mut other = tree("int x;");
    other.grammar_id = "other".into();
    assert!(matches!(scan_omissions(&q, &[("x".into(), other)], &[]), Err(Error::GrammarMismatch { .. })));
}
