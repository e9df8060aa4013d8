//! Fix patterns: edit scripts enriched with their surrounding context,
//! abstracted, and serialized into fingerprints.
//!
//! A pattern's shape is a single tree. Its root holds one `ctx` chain per
//! enclosing function (or the translation unit), and the edit actions hang
//! off the innermost context node. An inserted subtree also carries its
//! nearest unchanged sibling as a `sib` child, which anchors it for omission
//! scanning; it is always the last child.
//!
//! ```text
//! (pattern identifiers_and_literals "c-subset/1"
//!   (root (ctx FunctionDef (ctx Block
//!     (INS IfStmt (BinaryOp ...) (ReturnStmt ...) (sib ExprStmt (Call ...)))))))
//! ```

mod cluster;
mod enrich;
mod ted;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::digest::Digest;
use crate::error::{Error, Result};
use crate::sexpr::{self, Token};
use crate::syntax::kind;

pub use cluster::{append_store, cluster, read_store, write_store, ClusterMember, FingerprintRecord, PatternCluster, PatternLink, Provenance};
pub use enrich::{enrich, RichAction, RichEditScript};
pub use ted::{shape_distance, shape_similarity};

pub const DEFAULT_CLUSTER_THRESHOLD: f64 = 0.8;
pub const LITERAL_PLACEHOLDER: &str = "LIT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AbstractionLevel {
    None,
    Literals,
    #[default]
    IdentifiersAndLiterals,
}

impl AbstractionLevel {
    pub const ALL: [AbstractionLevel; 3] = [AbstractionLevel::None, AbstractionLevel::Literals, AbstractionLevel::IdentifiersAndLiterals];

    pub fn as_str(self) -> &'static str {
        match self {
            AbstractionLevel::None => "none",
            AbstractionLevel::Literals => "literals",
            AbstractionLevel::IdentifiersAndLiterals => "identifiers_and_literals",
        }
    }
}

impl fmt::Display for AbstractionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AbstractionLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AbstractionLevel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::InvalidPattern(format!("unknown abstraction level {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Root,
    Context,
    Sibling,
    Insert,
    Delete,
    Update,
    Move,
    Plain,
}

impl Role {
    fn head(self) -> Option<&'static str> {
        match self {
            Role::Root => Some("root"),
            Role::Context => Some("ctx"),
            Role::Sibling => Some("sib"),
            Role::Insert => Some("INS"),
            Role::Delete => Some("DEL"),
            Role::Update => Some("UPD"),
            Role::Move => Some("MOV"),
            Role::Plain => None,
        }
    }

    fn from_head(s: &str) -> Option<Role> {
        Some(match s {
            "root" => Role::Root,
            "ctx" => Role::Context,
            "sib" => Role::Sibling,
            "INS" => Role::Insert,
            "DEL" => Role::Delete,
            "UPD" => Role::Update,
            "MOV" => Role::Move,
            _ => return None,
        })
    }

    /// Canonical head word, e.g. `INS`; plain nodes have none.
    pub fn head_name(self) -> &'static str {
        self.head().unwrap_or("")
    }

    pub fn is_action(self) -> bool {
        matches!(self, Role::Insert | Role::Delete | Role::Update | Role::Move)
    }
}

/// Node of a pattern shape. `token` is the lexeme of a leaf (the old lexeme
/// for Update), `new_token` is only set on Update.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShapeNode {
    pub role: Role,
    pub kind: String,
    pub token: Option<String>,
    pub new_token: Option<String>,
    pub children: Vec<ShapeNode>,
}

impl ShapeNode {
    pub fn new(role: Role, kind: impl Into<String>, token: Option<String>) -> Self {
        ShapeNode {
            role,
            kind: kind.into(),
            token,
            new_token: None,
            children: Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(ShapeNode::size).sum::<usize>()
    }

    pub fn preorder(&self) -> Vec<&ShapeNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(n.children.iter().rev());
        }
        out
    }

    fn render(&self, out: &mut String) {
        out.push('(');
        match (self.role, self.role.head()) {
            (Role::Root, _) => out.push_str("root"),
            (_, Some(head)) => {
                out.push_str(head);
                out.push(' ');
                out.push_str(&self.kind);
            }
            (_, None) => out.push_str(&self.kind),
        }
        for t in [&self.token, &self.new_token].into_iter().flatten() {
            out.push(' ');
            sexpr::quote(t, out);
        }
        for c in &self.children {
            out.push(' ');
            c.render(out);
        }
        out.push(')');
    }

    pub fn to_sexpr(&self) -> String {
        let mut s = String::new();
        self.render(&mut s);
        s
    }

    /// Rewrite tokens for `level`: literals become `LIT`, identifiers
    /// become `ID_k` numbered by first occurrence in preorder.
    pub fn abstracted(&self, level: AbstractionLevel) -> ShapeNode {
        let mut out = self.clone();
        let mut ids = HashMap::new();
        abstract_tokens(&mut out, level, &mut ids);
        out
    }
}

fn abstract_tokens(n: &mut ShapeNode, level: AbstractionLevel, ids: &mut HashMap<String, String>) {
    let mut rewrite = |tok: &mut Option<String>| {
        let Some(t) = tok.as_mut() else { return };
        if n.kind == kind::LITERAL && level != AbstractionLevel::None {
            *t = LITERAL_PLACEHOLDER.to_string();
        } else if n.kind == kind::IDENTIFIER && level == AbstractionLevel::IdentifiersAndLiterals {
            let next = format!("ID_{}", ids.len() + 1);
            *t = ids.entry(t.clone()).or_insert(next).clone();
        }
    };
    rewrite(&mut n.token);
    rewrite(&mut n.new_token);
    for c in &mut n.children {
        abstract_tokens(c, level, ids);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixPattern {
    pub level: AbstractionLevel,
    pub grammar_id: String,
    pub shape: ShapeNode,
}

impl FixPattern {
    /// Number of action nodes (including nested ones).
    pub fn action_count(&self) -> usize {
        self.shape.preorder().iter().filter(|n| n.role.is_action()).count()
    }

    pub fn canonical(&self) -> String {
        let mut s = String::from("(pattern ");
        s.push_str(self.level.as_str());
        s.push(' ');
        sexpr::quote(&self.grammar_id, &mut s);
        s.push(' ');
        self.shape.render(&mut s);
        s.push(')');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fingerprint {
    pub digest: Digest,
    pub canonical: String,
}

pub fn fingerprint(pattern: &FixPattern) -> Fingerprint {
    let canonical = pattern.canonical();
    Fingerprint {
        digest: Digest::of_bytes(canonical.as_bytes()),
        canonical,
    }
}

/// Abstract a rich edit script into a pattern at `level`.
pub fn abstract_pattern(rich: &RichEditScript, level: AbstractionLevel) -> FixPattern {
    FixPattern {
        level,
        grammar_id: rich.grammar_id.clone(),
        shape: rich.concrete_shape().abstracted(level),
    }
}

/// Similarity of two patterns at the same level: one minus tree edit
/// distance over the larger shape size.
pub fn similarity(p1: &FixPattern, p2: &FixPattern) -> Result<f64> {
    if p1.level != p2.level {
        return Err(Error::LevelMismatch(p1.level.to_string(), p2.level.to_string()));
    }
    Ok(shape_similarity(&p1.shape, &p2.shape))
}

/// Parse a canonical string back into a pattern.
pub fn parse_canonical(text: &str) -> Result<FixPattern> {
    let toks = sexpr::tokenize(text)?;
    let mut p = Parser { toks: &toks, pos: 0, end: text.len() };
    p.open()?;
    match p.next()? {
        (_, Token::Atom(a)) if a == "pattern" => {}
        (off, _) => return Err(canon_err(off, "expected `pattern`")),
    }
    let level = match p.next()? {
        (off, Token::Atom(a)) => a.parse().map_err(|_| canon_err(off, "unknown abstraction level"))?,
        (off, _) => return Err(canon_err(off, "expected abstraction level")),
    };
    let grammar_id = match p.next()? {
        (_, Token::Str(s)) => s.clone(),
        (off, _) => return Err(canon_err(off, "expected grammar id string")),
    };
    let shape = p.node()?;
    if shape.role != Role::Root {
        return Err(canon_err(0, "shape must start with `root`"));
    }
    p.close()?;
    if p.pos != toks.len() {
        return Err(canon_err(toks[p.pos].0, "trailing input"));
    }
    Ok(FixPattern { level, grammar_id, shape })
}

fn canon_err(offset: usize, message: &str) -> Error {
    Error::Canonical {
        offset,
        message: message.to_string(),
    }
}

struct Parser<'t> {
    toks: &'t [(usize, Token)],
    pos: usize,
    end: usize,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t (usize, Token)> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Result<(usize, &'t Token)> {
        let (off, t) = self.toks.get(self.pos).ok_or_else(|| canon_err(self.end, "unexpected end of input"))?;
        self.pos += 1;
        Ok((*off, t))
    }

    fn open(&mut self) -> Result<()> {
        match self.next()? {
            (_, Token::Open) => Ok(()),
            (off, _) => Err(canon_err(off, "expected `(`")),
        }
    }

    fn close(&mut self) -> Result<()> {
        match self.next()? {
            (_, Token::Close) => Ok(()),
            (off, _) => Err(canon_err(off, "expected `)`")),
        }
    }

    fn node(&mut self) -> Result<ShapeNode> {
        self.open()?;
        let (off, head) = self.next()?;
        let Token::Atom(head) = head else {
            return Err(canon_err(off, "expected node head"));
        };
        let (role, kind) = match Role::from_head(head) {
            Some(Role::Root) => (Role::Root, String::new()),
            Some(role) => match self.next()? {
                (_, Token::Atom(k)) => (role, k.clone()),
                (off, _) => return Err(canon_err(off, "expected node kind")),
            },
            None => (Role::Plain, head.clone()),
        };
        let mut node = ShapeNode::new(role, kind, None);
        if let Some((_, Token::Str(s))) = self.peek() {
            node.token = Some(s.clone());
            self.pos += 1;
            if let Some((off, Token::Str(s))) = self.peek() {
                if role != Role::Update {
                    return Err(canon_err(*off, "only UPD carries two tokens"));
                }
                node.new_token = Some(s.clone());
                self.pos += 1;
            }
        }
        while let Some((_, Token::Open)) = self.peek() {
            node.children.push(self.node()?);
        }
        self.close()?;
        Ok(node)
    }
}
