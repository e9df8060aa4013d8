#![allow(dead_code)]

pub mod oracle;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fixprint::digest::Digest;
use fixprint::pattern::{abstract_pattern, enrich, fingerprint, AbstractionLevel, Fingerprint, Role, ShapeNode};
use fixprint::syntax::{kind, Span, SyntaxNode, SyntaxTree, C_GRAMMAR_ID};
use fixprint::treediff::{apply_script, diff, MatchConfig};
use fixprint::parse_source;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn parse(text: &str) -> SyntaxTree {
    parse_source(text, C_GRAMMAR_ID).expect("c grammar is registered")
}

// ---------------------------------------------------------------------------
// random C programs

const VARS: &[&str] = &["a", "b", "n", "len", "ret", "i", "buf", "st"];
const FUNCS: &[&str] = &["check", "copy_out", "lock", "unlock", "kfree", "notify", "get_dev"];
const FIELDS: &[&str] = &["len", "count", "buf", "flags", "next"];
const BINOPS: &[&str] = &["+", "-", "*", "<", ">", "<=", "==", "!=", "&&", "||", "&", "<<"];

pub struct ProgramGen<'r> {
    pub rng: &'r mut Rng8,
}

impl ProgramGen<'_> {
    fn pick(&mut self, xs: &[&'static str]) -> &'static str {
        xs.choose(self.rng).unwrap()
    }

    pub fn expr(&mut self, depth: u32) -> String {
        let leafy = depth == 0 || self.rng.gen_bool(0.45);
        if leafy {
            return match self.rng.gen_range(0..4) {
                0 => self.rng.gen_range(0..64).to_string(),
                1 => format!("{}->{}", self.pick(VARS), self.pick(FIELDS)),
                _ => self.pick(VARS).to_string(),
            };
        }
        match self.rng.gen_range(0..6) {
            0 | 1 => format!("{} {} {}", self.expr(depth - 1), self.pick(BINOPS), self.expr(depth - 1)),
            2 => {
                let n = self.rng.gen_range(0..3);
                let args: Vec<String> = (0..n).map(|_| self.expr(depth - 1)).collect();
                format!("{}({})", self.pick(FUNCS), args.join(", "))
            }
            3 => format!("!{}", self.expr(depth - 1)),
            4 => format!("({})", self.expr(depth - 1)),
            _ => format!("{}[{}]", self.pick(VARS), self.expr(depth - 1)),
        }
    }

    /// One simple statement on a single line.
    pub fn simple_stmt(&mut self) -> String {
        match self.rng.gen_range(0..6) {
            0 => format!("int {} = {};", self.pick(VARS), self.expr(2)),
            1 => format!("{} = {};", self.pick(VARS), self.expr(2)),
            2 => format!("{} += {};", self.pick(VARS), self.expr(1)),
            3 => format!("return {};", self.expr(2)),
            4 => format!("{}++;", self.pick(VARS)),
            _ => {
                let args: Vec<String> = (0..self.rng.gen_range(1..3)).map(|_| self.expr(1)).collect();
                format!("{}({});", self.pick(FUNCS), args.join(", "))
            }
        }
    }

    fn stmts(&mut self, depth: u32, indent: usize, budget: &mut usize, out: &mut Vec<String>) {
        let tab = "\t".repeat(indent);
        let n = self.rng.gen_range(1..5);
        for _ in 0..n {
            if *budget < 4 {
                return;
            }
            let kind = if depth == 0 { 0 } else { self.rng.gen_range(0..7) };
            match kind {
                4 => {
                    let cond = self.expr(2);
                    out.push(format!("{tab}if ({cond}) {{"));
                    *budget -= 2;
                    self.stmts(depth - 1, indent + 1, budget, out);
                    if *budget > 4 && self.rng.gen_bool(0.3) {
                        out.push(format!("{tab}}} else {{"));
                        *budget -= 1;
                        self.stmts(depth - 1, indent + 1, budget, out);
                    }
                    out.push(format!("{tab}}}"));
                }
                5 => {
                    let v = self.pick(VARS);
                    let bound = self.expr(1);
                    out.push(format!("{tab}for ({v} = 0; {v} < {bound}; {v}++) {{"));
                    *budget -= 2;
                    self.stmts(depth - 1, indent + 1, budget, out);
                    out.push(format!("{tab}}}"));
                }
                6 => {
                    let cond = self.expr(1);
                    let s = self.simple_stmt();
                    out.push(format!("{tab}if ({cond})"));
                    out.push(format!("{tab}\t{s}"));
                    *budget -= 2;
                }
                _ => {
                    out.push(format!("{tab}{}", self.simple_stmt()));
                    *budget -= 1;
                }
            }
        }
    }

    /// A small C file of at most `max_lines` lines.
    pub fn program(&mut self, max_lines: usize) -> String {
        let mut out = Vec::new();
        let mut budget = max_lines;
        if self.rng.gen_bool(0.5) {
            out.push(format!("static int limit = {};", self.rng.gen_range(1..100)));
            budget -= 1;
        }
        if self.rng.gen_bool(0.3) {
            out.push("struct item {".into());
            out.push("\tint len;".into());
            out.push("\tstruct item *next;".into());
            out.push("};".into());
            budget -= 4;
        }
        let mut f = 0;
        while budget >= 8 {
            out.push(format!("static int fn{f}(struct item *st, int n)"));
            out.push("{".into());
            budget -= 3;
            let mut inner = budget.min(30);
            let before = inner;
            self.stmts(2, 1, &mut inner, &mut out);
            budget -= before - inner;
            out.push("}".into());
            f += 1;
            if f >= 4 || self.rng.gen_bool(0.3) {
                break;
            }
        }
        let mut s = out.join("\n");
        s.push('\n');
        s
    }

    /// Apply 1 to 4 random line edits: delete, insert, swap, duplicate or
    /// retoken a line. The result may not be valid C.
    pub fn edit(&mut self, text: &str, max_lines: usize) -> String {
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        for _ in 0..self.rng.gen_range(1..5) {
            if lines.is_empty() {
                lines.push(self.simple_stmt());
                continue;
            }
            let i = self.rng.gen_range(0..lines.len());
            match self.rng.gen_range(0..5) {
                0 => {
                    lines.remove(i);
                }
                1 if lines.len() < max_lines => {
                    let s = format!("\t{}", self.simple_stmt());
                    lines.insert(i, s);
                }
                2 if i + 1 < lines.len() => lines.swap(i, i + 1),
                3 if lines.len() < max_lines => {
                    let l = lines[i].clone();
                    lines.insert(i, l);
                }
                _ => {
                    let words: Vec<&str> = VARS.iter().copied().filter(|v| lines[i].contains(*v)).collect();
                    if let Some(w) = words.choose(self.rng) {
                        let to = self.pick(VARS);
                        lines[i] = lines[i].replacen(w, to, 1);
                    } else {
                        lines[i].push_str(" 1;");
                    }
                }
            }
        }
        let mut s = lines.join("\n");
        s.push('\n');
        s
    }
}

/// Diff two sources and replay the script. Returns whether the replayed
/// tree has the after tree's digest, and the script length.
pub fn roundtrip(before: &str, after: &str) -> (bool, usize) {
    let (b, a) = (parse(before), parse(after));
    let (_, script) = diff(&b, &a, &MatchConfig::default()).expect("diff");
    let replayed = apply_script(&b, &script).expect("replay");
    (replayed.digest() == a.digest(), script.len())
}

// ---------------------------------------------------------------------------
// random small trees

const INNER_KINDS: &[&str] = &[kind::BLOCK, kind::CALL, kind::BINARY_OP, kind::EXPR_STMT];
const LEAF_KINDS: &[&str] = &[kind::IDENTIFIER, kind::LITERAL, kind::OPERATOR];
const TOKENS: &[&str] = &["x", "y", "z"];

fn random_node(rng: &mut Rng8, budget: usize) -> SyntaxNode {
    if budget == 1 || rng.gen_bool(0.25) {
        return SyntaxNode::leaf(*LEAF_KINDS.choose(rng).unwrap(), *TOKENS.choose(rng).unwrap(), Span::new(0, 0));
    }
    let mut left = budget - 1;
    let mut children = Vec::new();
    while left > 0 && children.len() < 3 {
        let take = rng.gen_range(1..=left);
        children.push(random_node(rng, take));
        left -= children.last().unwrap().size();
        if rng.gen_bool(0.3) {
            break;
        }
    }
    SyntaxNode::internal(*INNER_KINDS.choose(rng).unwrap(), children)
}

pub fn tree(root: SyntaxNode) -> SyntaxTree {
    SyntaxTree {
        root,
        source_digest: Digest::of_bytes(b""),
        grammar_id: C_GRAMMAR_ID.into(),
    }
}

/// A random tree with at most `max` nodes.
pub fn random_tree(rng: &mut Rng8, max: usize) -> SyntaxTree {
    let n = rng.gen_range(1..=max);
    tree(random_node(rng, n))
}

fn nth_mut(n: &mut SyntaxNode, k: usize) -> &mut SyntaxNode {
    if k == 0 {
        return n;
    }
    let mut k = k - 1;
    for c in n.children.iter_mut() {
        let s = c.size();
        if k < s {
            return nth_mut(c, k);
        }
        k -= s;
    }
    panic!("node index out of range")
}

/// Apply one random edit to a tree: relabel a leaf, drop a subtree, add a
/// leaf, or reverse some node's children. Sizes stay at most `max`.
pub fn mutate_tree(rng: &mut Rng8, t: &SyntaxTree, max: usize) -> SyntaxTree {
    let mut root = t.root.clone();
    let size = root.size();
    for _ in 0..8 {
        let k = rng.gen_range(0..size);
        let n = nth_mut(&mut root, k);
        match rng.gen_range(0..4) {
            0 if n.is_leaf() => {
                let tok = *TOKENS.choose(rng).unwrap();
                if n.token.as_deref() != Some(tok) {
                    n.token = Some(tok.into());
                    break;
                }
            }
            1 if n.children.len() > 1 => {
                let i = rng.gen_range(0..n.children.len());
                n.children.remove(i);
                break;
            }
            2 if !n.is_leaf() && size < max => {
                let i = rng.gen_range(0..=n.children.len());
                let leaf = SyntaxNode::leaf(*LEAF_KINDS.choose(rng).unwrap(), *TOKENS.choose(rng).unwrap(), Span::new(0, 0));
                n.children.insert(i, leaf);
                break;
            }
            3 if n.children.len() > 1 => {
                n.children.reverse();
                break;
            }
            _ => {}
        }
    }
    tree(root)
}

// ---------------------------------------------------------------------------
// random pattern shapes

const ROLES: &[Role] = &[Role::Plain, Role::Insert, Role::Delete, Role::Context];
const SHAPE_KINDS: &[&str] = &["IfStmt", "Call", "Identifier"];

fn random_shape_node(rng: &mut Rng8, budget: usize) -> ShapeNode {
    let role = *ROLES.choose(rng).unwrap();
    let k = *SHAPE_KINDS.choose(rng).unwrap();
    let token = rng.gen_bool(0.4).then(|| TOKENS.choose(rng).unwrap().to_string());
    let mut n = ShapeNode::new(role, k, token);
    let mut left = budget - 1;
    while left > 0 && !rng.gen_bool(0.3) {
        let take = rng.gen_range(1..=left);
        let c = random_shape_node(rng, take);
        left -= c.size();
        n.children.push(c);
    }
    n
}

/// A random shape with at most `max` nodes.
pub fn random_shape(rng: &mut Rng8, max: usize) -> ShapeNode {
    let n = rng.gen_range(1..=max);
    random_shape_node(rng, n)
}

// ---------------------------------------------------------------------------
// fingerprints of source pairs

pub fn fingerprint_of(before: &str, after: &str, level: AbstractionLevel) -> Option<Fingerprint> {
    let (b, a) = (parse(before), parse(after));
    let (_, script) = diff(&b, &a, &MatchConfig::default()).ok()?;
    if script.is_empty() {
        return None;
    }
    let rich = enrich(&script, &b, &a).ok()?;
    Some(fingerprint(&abstract_pattern(&rich, level)))
}

pub struct PatchPair {
    pub name: String,
    pub before: String,
    pub after: String,
}

pub fn fixture_patches() -> Vec<PatchPair> {
    let dir = fixtures().join("patches");
    let mut names: Vec<String> = std::fs::read_dir(&dir)
        .expect("fixtures/patches")
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|name| {
            let read = |f: &str| std::fs::read_to_string(dir.join(&name).join(f)).unwrap();
            PatchPair {
                before: read("before.c"),
                after: read("after.c"),
                name,
            }
        })
        .collect()
}

const C_WORDS: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else", "enum", "extern", "float", "for", "goto",
    "if", "inline", "int", "long", "register", "restrict", "return", "short", "signed", "sizeof", "static", "struct", "switch",
    "typedef", "union", "unsigned", "void", "volatile", "while",
];

/// Consistent renaming of every identifier and literal in a before/after
/// pair: equal names map to equal fresh names, distinct to distinct.
pub struct Renamer {
    idents: BTreeMap<String, String>,
    lits: BTreeMap<String, String>,
}

impl Renamer {
    pub fn random(rng: &mut Rng8, pair: &PatchPair) -> Self {
        let mut idents = BTreeMap::new();
        let mut lits = BTreeMap::new();
        for text in [&pair.before, &pair.after] {
            for leaf in parse(text).root.leaves() {
                let tok = leaf.token.clone().unwrap();
                match leaf.kind.as_str() {
                    kind::IDENTIFIER => {
                        idents.entry(tok).or_insert_with(String::new);
                    }
                    kind::LITERAL => {
                        lits.entry(tok).or_insert_with(String::new);
                    }
                    _ => {}
                }
            }
        }
        let mut used = std::collections::HashSet::new();
        for (i, v) in idents.values_mut().enumerate() {
            loop {
                let len = rng.gen_range(1..8);
                let body: String = (0..len).map(|_| *b"abcdefghijklmnopqrstuvwxyz_".choose(rng).unwrap() as char).collect();
                let name = format!("{body}{i}");
                if !C_WORDS.contains(&name.as_str()) && used.insert(name.clone()) {
                    *v = name;
                    break;
                }
            }
        }
        let mut used = std::collections::HashSet::new();
        for (old, v) in lits.iter_mut() {
            loop {
                let n: u32 = rng.gen_range(0..100_000);
                let fresh = if old.starts_with('"') {
                    format!("\"s{n}\"")
                } else if old.starts_with('\'') {
                    format!("'{}'", (b'a' + (n % 26) as u8) as char)
                } else if old.starts_with("0x") || old.starts_with("0X") {
                    format!("{n:#x}")
                } else {
                    n.to_string()
                };
                if used.insert(fresh.clone()) {
                    *v = fresh;
                    break;
                }
            }
        }
        Renamer { idents, lits }
    }

    /// Rewrite `text` leaf by leaf, using the parse tree's spans.
    pub fn apply(&self, text: &str) -> String {
        let t = parse(text);
        let mut out = String::with_capacity(text.len());
        let mut at = 0;
        for leaf in t.root.leaves() {
            let tok = leaf.token.as_deref().unwrap();
            let map = match leaf.kind.as_str() {
                kind::IDENTIFIER => &self.idents,
                kind::LITERAL => &self.lits,
                _ => continue,
            };
            out.push_str(&text[at..leaf.span.start]);
            out.push_str(&map[tok]);
            at = leaf.span.end;
        }
        out.push_str(&text[at..]);
        out
    }
}

/// Change the after side structurally: add a call statement after a
/// statement line, or drop a statement line the patch left alone.
pub fn mutate_after(rng: &mut Rng8, pair: &PatchPair) -> String {
    let lines: Vec<&str> = pair.after.lines().collect();
    let before: std::collections::HashSet<&str> = pair.before.lines().collect();
    let stmt = |l: &&str| l.starts_with('\t') && l.trim_end().ends_with(';');
    let candidates: Vec<usize> = (0..lines.len()).filter(|&i| stmt(&lines[i])).collect();
    let unchanged: Vec<usize> = candidates.iter().copied().filter(|&i| before.contains(lines[i])).collect();
    let mut out: Vec<String> = lines.iter().map(|s| s.to_string()).collect();
    if !unchanged.is_empty() && rng.gen_bool(0.5) {
        out.remove(*unchanged.choose(rng).unwrap());
    } else {
        let i = *candidates.choose(rng).expect("fixture has statements");
        let indent: String = lines[i].chars().take_while(|c| *c == '\t').collect();
        out.insert(i + 1, format!("{indent}probe_{}(0);", rng.gen_range(0..1000)));
    }
    let mut s = out.join("\n");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// pipeline runs

pub fn config(corpus: &Path, out: &Path, workers: usize) -> fixprint::pipeline::RunConfig {
    fixprint::pipeline::RunConfig {
        corpus_root: corpus.to_path_buf(),
        out_dir: out.to_path_buf(),
        workers,
        ..Default::default()
    }
}

pub fn run(corpus: &Path, out: &Path, workers: usize) -> fixprint::pipeline::RunOutcome {
    fixprint::pipeline::run_pipeline(&config(corpus, out, workers)).expect("valid config")
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// `(file, function, evidence)` for every omission in scan.json.
pub fn omissions(out: &Path) -> Vec<(String, String, String)> {
    let scan = read_json(&out.join(fixprint::pipeline::SCAN_FILE));
    let mut v = Vec::new();
    for c in scan.as_array().unwrap() {
        for o in c["omissions"].as_array().unwrap() {
            v.push((
                o["file_path"].as_str().unwrap().to_string(),
                o["function"].as_str().unwrap().to_string(),
                o["evidence"].as_str().unwrap().to_string(),
            ));
        }
    }
    v
}

/// Every file under `dir`, keyed by relative path.
pub fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    walkdir::WalkDir::new(dir)
        .sort_by_file_name()
        .into_iter()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e.path().strip_prefix(dir).unwrap().to_string_lossy().replace('\\', "/");
            (rel, std::fs::read(e.path()).unwrap())
        })
        .collect()
}

pub fn copy_dir(from: &Path, to: &Path) {
    for (rel, bytes) in dir_contents(from) {
        let dest = to.join(&rel);
        std::fs::create_dir_all(dest.parent().unwrap()).unwrap();
        std::fs::write(dest, bytes).unwrap();
    }
}
