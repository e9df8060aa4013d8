use super::*;
use crate::syntax::{parse_source, subtree_digest, Span, SyntaxNode, C_GRAMMAR_ID};

fn parse(src: &str) -> SyntaxTree {
    parse_source(src, C_GRAMMAR_ID).unwrap()
}

fn tree(root: SyntaxNode) -> SyntaxTree {
    SyntaxTree {
        root,
        source_digest: Digest::of_bytes(b""),
        grammar_id: "test".into(),
    }
}

fn leaf(kind: &str, tok: &str) -> SyntaxNode {
    SyntaxNode::leaf(kind, tok, Span::new(0, 0))
}

fn roundtrip(before: &str, after: &str) -> EditScript {
    let (b, a) = (parse(before), parse(after));
    let (m, script) = diff(&b, &a, &MatchConfig::default()).unwrap();
    m.validate(&TreeIndex::new(&b.root), &TreeIndex::new(&a.root)).unwrap();
    let out = apply_script(&b, &script).unwrap();
    assert_eq!(subtree_digest(&out.root), subtree_digest(&a.root), "{script:#?}");
    script
}

#[test]
fn identical_trees_map_everything() {
    let src = "static int f(int a) { if (a > 1) return a; return g(a, 2); }";
    let (b, a) = (parse(src), parse(src));
    let m = match_trees(&b, &a, &MatchConfig::default()).unwrap();
    assert_eq!(m.len(), b.root.size());
    let script = edit_script(&b, &a, &m).unwrap();
    assert!(script.is_empty());
}

#[test]
fn disjoint_kinds_map_nothing() {
    let b = tree(SyntaxNode::internal("A", vec![leaf("X", "1"), leaf("Y", "2")]));
    let a = tree(SyntaxNode::internal("B", vec![leaf("Z", "1"), leaf("W", "2")]));
    let m = match_trees(&b, &a, &MatchConfig::default()).unwrap();
    assert!(m.is_empty());
    let script = edit_script(&b, &a, &m).unwrap();
    let out = apply_script(&b, &script).unwrap();
    assert_eq!(subtree_digest(&out.root), subtree_digest(&a.root));
}

#[test]
fn dice_formula() {
    let b = tree(SyntaxNode::internal("R", (0..4).map(|i| leaf("L", &i.to_string())).collect()));
    let a = tree(SyntaxNode::internal("R", (0..6).map(|i| leaf("L", &i.to_string())).collect()));
    let none = Mapping::new(5, 7);
    assert_eq!(dice(&none, &b, &a, 0, 0), 0.0);
    let three = Mapping::from_pairs(5, 7, [(1, 1), (2, 2), (3, 3)]).unwrap();
    assert!((dice(&three, &b, &a, 0, 0) - 0.6).abs() < 1e-12);
    let same = tree(SyntaxNode::internal("R", (0..4).map(|i| leaf("L", &i.to_string())).collect()));
    let all = Mapping::from_pairs(5, 5, (1..5).map(|i| (i, i))).unwrap();
    assert_eq!(dice(&all, &b, &same, 0, 0), 1.0);
}

#[test]
fn single_token_change_is_one_update() {
    let script = roundtrip("int f(void) { return a + 1; }", "int f(void) { return a + 2; }");
    assert_eq!(script.len(), 1);
    let act = &script.actions[0];
    assert_eq!(act.op, EditOp::Update);
    assert_eq!(act.token.as_deref(), Some("1"));
    assert_eq!(act.new_token.as_deref(), Some("2"));
}

#[test]
fn renamed_identifier_maps_all_nodes() {
    let (b, a) = (
        parse("int f(int n) { int s = 0; while (n > 0) { s += n; n--; } return s; }"),
        parse("int f(int k) { int s = 0; while (k > 0) { s += k; k--; } return s; }"),
    );
    let m = match_trees(&b, &a, &MatchConfig::default()).unwrap();
    assert_eq!(m.len(), b.root.size());
    let script = edit_script(&b, &a, &m).unwrap();
    assert!(script.actions.iter().all(|x| x.op == EditOp::Update));
    assert_eq!(script.len(), 4);
}

#[test]
fn guard_wrap_inserts_if_and_moves_statement() {
    let script = roundtrip("void f(void) { g(1); h(); }", "void f(void) { if (x) g(1); h(); }");
    assert!(script.actions.iter().any(|a| a.op == EditOp::Insert && a.kind == "IfStmt"));
    assert!(script.actions.iter().any(|a| a.op == EditOp::Move && a.kind == "ExprStmt"));
    assert!(!script.actions.iter().any(|a| a.op == EditOp::Delete));
}

#[test]
fn roundtrips_on_varied_edits() {
    let cases = [
        ("", "int x;"),
        ("int x;", ""),
        ("int a; int b;", "int b; int a;"),
        ("void f(void) { a(); b(); c(); }", "void f(void) { c(); a(); b(); }"),
        ("void f(void) { if (a) { b(); } }", "void f(void) { b(); }"),
        ("int f(int a) { return a; }", "int g(long a, int b) { return a * b; }"),
        ("#include <x.h>\nint y;", "#include <y.h>\nint y;\n#define Z 1"),
        ("void f(void) { memcpy(d, s, n); }", "void f(void) { if (n > 6) return -EINVAL; memcpy(d, s, n); }"),
        ("garbage ) ( } int x;", "int x; garbage ) ("),
    ];
    for (b, a) in cases {
        roundtrip(b, a);
    }
}

#[test]
fn moved_and_changed_leaf_emits_move_then_update() {
    let b = tree(SyntaxNode::internal(
        "R",
        vec![SyntaxNode::internal("P", vec![leaf("L", "x"), leaf("M", "m")]), SyntaxNode::internal("Q", vec![leaf("N", "n")])],
    ));
    let a = tree(SyntaxNode::internal(
        "R",
        vec![SyntaxNode::internal("P", vec![leaf("M", "m")]), SyntaxNode::internal("Q", vec![leaf("N", "n"), leaf("L", "y")])],
    ));
    // preorder: before R0 P1 L2 M3 Q4 N5; after R0 P1 M2 Q3 N4 L5
    let m = Mapping::from_pairs(6, 6, [(0, 0), (1, 1), (2, 5), (3, 2), (4, 3), (5, 4)]).unwrap();
    let script = edit_script(&b, &a, &m).unwrap();
    let ops: Vec<EditOp> = script.actions.iter().map(|x| x.op).collect();
    assert_eq!(ops, vec![EditOp::Move, EditOp::Update]);
    let out = apply_script(&b, &script).unwrap();
    assert_eq!(subtree_digest(&out.root), subtree_digest(&a.root));
}

#[test]
fn empty_script_keeps_before() {
    let b = parse("int main(void) { return 0; }");
    let out = apply_script(&b, &EditScript::default()).unwrap();
    assert_eq!(subtree_digest(&out.root), subtree_digest(&b.root));
}

#[test]
fn dangling_reference_names_action() {
    let b = parse("int x;");
    let mut script = EditScript::default();
    let leaf_id = b.root.size() - 1;
    script.actions.push(EditAction {
        op: EditOp::Delete,
        subject: NodeRef::Before(leaf_id),
        kind: "Punct".into(),
        token: Some(";".into()),
        parent: None,
        new_token: None,
    });
    script.actions.push(EditAction {
        op: EditOp::Update,
        subject: NodeRef::Before(leaf_id),
        kind: "Punct".into(),
        token: Some(";".into()),
        parent: None,
        new_token: Some(",".into()),
    });
    match apply_script(&b, &script) {
        Err(Error::BadAction { index, .. }) => assert_eq!(index, 1),
        other => panic!("expected BadAction, got {other:?}"),
    }
}

#[test]
fn grammar_mismatch_is_rejected() {
    let b = parse("int x;");
    let mut a = parse("int x;");
    a.grammar_id = "other".into();
    assert!(matches!(
        match_trees(&b, &a, &MatchConfig::default()),
        Err(Error::GrammarMismatch { .. })
    ));
}

#[test]
fn invalid_mapping_is_rejected() {
    let b = parse("int x;");
    let a = parse("x = 1;");
    let m = Mapping::from_pairs(b.root.size(), a.root.size(), [(1, 1)]).unwrap();
    assert!(matches!(edit_script(&b, &a, &m), Err(Error::InvalidMapping(_))));
    assert!(Mapping::from_pairs(2, 2, [(0, 0), (1, 0)]).is_err());
}

#[test]
fn debug_json_lists_actions_in_order() {
    let (b, a) = (parse("int f(void) { return 1; }"), parse("int f(void) { return 2; }"));
    let (_, script) = diff(&b, &a, &MatchConfig::default()).unwrap();
    let v = script.to_debug_json(&TreeIndex::new(&b.root), &TreeIndex::new(&a.root));
    assert_eq!(v[0]["op"], "Update");
    assert_eq!(v[0]["new_token"], "2");
}

#[test]
fn equal_subtrees_pair_by_sibling_position() {
    let op = |t: &str| SyntaxNode::internal("BinaryOp", vec![leaf("Identifier", t)]);
    let block = || SyntaxNode::internal("Block", vec![leaf("Literal", "z"), leaf("Literal", "x")]);
    let b = tree(SyntaxNode::internal("ExprStmt", vec![op("x"), block(), op("x")]));
    let a = tree(SyntaxNode::internal("ExprStmt", vec![op("y"), block(), op("x")]));
    let (m, script) = diff(&b, &a, &MatchConfig::default()).unwrap();
    assert_eq!(m.len(), b.root.size());
    assert_eq!(script.len(), 1);
}
