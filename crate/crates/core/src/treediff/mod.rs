//! Tree matching and edit scripts between two syntax trees.
//!
//! Matching runs a top-down pass over isomorphic subtrees followed by a
//! bottom-up pass over containers. Scripts are generated breadth-first over
//! the after tree and can be replayed with [`apply_script`].

mod index;
mod matcher;
mod script;

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::digest::Digest;
use crate::error::{Error, Result};
use crate::syntax::SyntaxTree;

pub use index::{lcs, TreeIndex};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchConfig {
    pub min_height: usize,
    pub dice_threshold: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            min_height: 2,
            dice_threshold: 0.5,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_height == 0 {
            return Err(Error::Config("min_height must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.dice_threshold) {
            return Err(Error::Config(format!("dice_threshold {} outside [0, 1]", self.dice_threshold)));
        }
        Ok(())
    }
}

/// One-to-one correspondence between preorder ids of a before and an after tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mapping {
    fwd: Vec<Option<usize>>,
    bwd: Vec<Option<usize>>,
}

impl Mapping {
    pub fn new(before_len: usize, after_len: usize) -> Self {
        Mapping {
            fwd: vec![None; before_len],
            bwd: vec![None; after_len],
        }
    }

    /// Build from explicit pairs, rejecting out-of-range ids and reuse.
    pub fn from_pairs(before_len: usize, after_len: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut m = Mapping::new(before_len, after_len);
        for (a, b) in pairs {
            if a >= before_len || b >= after_len {
                return Err(Error::InvalidMapping(format!("pair ({a}, {b}) out of range")));
            }
            if m.fwd[a].is_some() || m.bwd[b].is_some() {
                return Err(Error::InvalidMapping(format!("pair ({a}, {b}) reuses a mapped node")));
            }
            m.link(a, b);
        }
        Ok(m)
    }

    pub(crate) fn link(&mut self, a: usize, b: usize) {
        debug_assert!(self.fwd[a].is_none() && self.bwd[b].is_none());
        self.fwd[a] = Some(b);
        self.bwd[b] = Some(a);
    }

    pub fn after_of(&self, before: usize) -> Option<usize> {
        self.fwd.get(before).copied().flatten()
    }

    pub fn before_of(&self, after: usize) -> Option<usize> {
        self.bwd.get(after).copied().flatten()
    }

    /// Pairs ordered by before id.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.fwd.iter().enumerate().filter_map(|(a, b)| b.map(|b| (a, b)))
    }

    pub fn len(&self) -> usize {
        self.pairs().count()
    }

    pub fn is_empty(&self) -> bool {
        self.fwd.iter().all(Option::is_none)
    }

    pub fn before_len(&self) -> usize {
        self.fwd.len()
    }

    pub fn after_len(&self) -> usize {
        self.bwd.len()
    }

    /// Check the mapping against the trees it claims to relate.
    pub fn validate(&self, before: &TreeIndex, after: &TreeIndex) -> Result<()> {
        if self.fwd.len() != before.len() || self.bwd.len() != after.len() {
            return Err(Error::InvalidMapping(format!(
                "mapping sized {}x{} for trees of {} and {} nodes",
                self.fwd.len(),
                self.bwd.len(),
                before.len(),
                after.len()
            )));
        }
        for (a, b) in self.pairs() {
            if self.bwd[b] != Some(a) {
                return Err(Error::InvalidMapping(format!("pair ({a}, {b}) is not symmetric")));
            }
            if before.kind(a) != after.kind(b) {
                return Err(Error::InvalidMapping(format!(
                    "pair ({a}, {b}) maps {} to {}",
                    before.kind(a),
                    after.kind(b)
                )));
            }
            if before.token(a).is_some() != after.token(b).is_some() {
                return Err(Error::InvalidMapping(format!("pair ({a}, {b}) maps a leaf to an inner node")));
            }
        }
        if self.bwd.iter().flatten().count() != self.len() {
            return Err(Error::InvalidMapping("mapping is not injective".into()));
        }
        Ok(())
    }
}

/// Reference to a node while a script is being replayed: the virtual root
/// above the real root, an original before node, or a node created by an
/// Insert (named by its id in the after tree).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRef {
    Root,
    Before(usize),
    After(usize),
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeRef::Root => f.write_str("root"),
            NodeRef::Before(i) => write!(f, "b{i}"),
            NodeRef::After(i) => write!(f, "a{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EditOp {
    Insert,
    Delete,
    Update,
    Move,
}

impl EditOp {
    pub fn as_str(self) -> &'static str {
        match self {
            EditOp::Insert => "Insert",
            EditOp::Delete => "Delete",
            EditOp::Update => "Update",
            EditOp::Move => "Move",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attachment {
    pub node: NodeRef,
    pub index: usize,
}

/// `token` is the subject's token when the action was emitted (the old token
/// for Update). `parent` is set for Insert and Move, `new_token` for Update.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditAction {
    pub op: EditOp,
    pub subject: NodeRef,
    pub kind: String,
    pub token: Option<String>,
    pub parent: Option<Attachment>,
    pub new_token: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditScript {
    pub actions: Vec<EditAction>,
}

impl EditScript {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Ordered JSON action list for debugging.
    pub fn to_debug_json(&self, before: &TreeIndex, after: &TreeIndex) -> Value {
        let kind_of = |n: NodeRef| match n {
            NodeRef::Root => "Root".to_string(),
            NodeRef::Before(i) => before.kind(i).to_string(),
            NodeRef::After(i) => after.kind(i).to_string(),
        };
        Value::Array(
            self.actions
                .iter()
                .map(|a| {
                    json!({
                        "op": a.op.as_str(),
                        "kind": a.kind,
                        "token": a.token,
                        "parent_kind": a.parent.map(|p| kind_of(p.node)),
                        "index": a.parent.map(|p| p.index),
                        "new_token": a.new_token,
                    })
                })
                .collect(),
        )
    }
}

fn check_grammar(before: &SyntaxTree, after: &SyntaxTree) -> Result<()> {
    if before.grammar_id != after.grammar_id {
        return Err(Error::GrammarMismatch {
            left: before.grammar_id.clone(),
            right: after.grammar_id.clone(),
        });
    }
    Ok(())
}

pub fn match_trees(before: &SyntaxTree, after: &SyntaxTree, cfg: &MatchConfig) -> Result<Mapping> {
    check_grammar(before, after)?;
    cfg.validate()?;
    let src = TreeIndex::new(&before.root);
    let dst = TreeIndex::new(&after.root);
    Ok(matcher::Matcher::new(&src, &dst, *cfg).run())
}

/// Container similarity: twice the mapped descendant pairs of `(n1, n2)` over
/// the total number of descendants.
pub fn dice(mapping: &Mapping, before: &SyntaxTree, after: &SyntaxTree, n1: usize, n2: usize) -> f64 {
    let src = TreeIndex::new(&before.root);
    let dst = TreeIndex::new(&after.root);
    dice_indexed(mapping, &src, &dst, n1, n2)
}

pub fn dice_indexed(mapping: &Mapping, src: &TreeIndex, dst: &TreeIndex, n1: usize, n2: usize) -> f64 {
    let d1 = src.size[n1] - 1;
    let d2 = dst.size[n2] - 1;
    if d1 + d2 == 0 {
        return 0.0;
    }
    let common = src
        .descendants(n1)
        .filter(|&d| mapping.after_of(d).is_some_and(|p| dst.is_descendant(p, n2)))
        .count();
    2.0 * common as f64 / (d1 + d2) as f64
}

pub fn edit_script(before: &SyntaxTree, after: &SyntaxTree, mapping: &Mapping) -> Result<EditScript> {
    check_grammar(before, after)?;
    let src = TreeIndex::new(&before.root);
    let dst = TreeIndex::new(&after.root);
    mapping.validate(&src, &dst)?;
    Ok(EditScript {
        actions: script::generate(&src, &dst, mapping),
    })
}

/// Match and script in one step.
pub fn diff(before: &SyntaxTree, after: &SyntaxTree, cfg: &MatchConfig) -> Result<(Mapping, EditScript)> {
    let mapping = match_trees(before, after, cfg)?;
    let script = edit_script(before, after, &mapping)?;
    Ok((mapping, script))
}

fn replay(before: &SyntaxTree, script: &EditScript) -> Result<script::WorkTree> {
    let src = TreeIndex::new(&before.root);
    let mut work = script::WorkTree::from_index(&src);
    for (index, a) in script.actions.iter().enumerate() {
        let bad = |message: String| Error::BadAction { index, message };
        match a.op {
            EditOp::Insert => {
                let p = a.parent.ok_or_else(|| bad("insert without parent".into()))?;
                work.insert(a.subject, &a.kind, a.token.as_deref(), p.node, p.index).map_err(bad)?;
            }
            EditOp::Delete => work.delete(a.subject).map_err(bad)?,
            EditOp::Update => {
                let tok = a.new_token.as_deref().ok_or_else(|| bad("update without new token".into()))?;
                if !work.contains(a.subject) {
                    return Err(bad(format!("node {} does not exist", a.subject)));
                }
                work.update(a.subject, tok).map_err(bad)?;
            }
            EditOp::Move => {
                let p = a.parent.ok_or_else(|| bad("move without parent".into()))?;
                work.move_to(a.subject, p.node, p.index).map_err(bad)?;
            }
        }
    }
    Ok(work)
}

/// For each after-tree node, in preorder, the node it is once `script` has
/// been replayed on `before`: `Before(i)` for kept nodes, `After(i)` for
/// inserted ones. Fails if the replay does not reproduce `after`.
pub fn correspondence(before: &SyntaxTree, after: &SyntaxTree, script: &EditScript) -> Result<Vec<NodeRef>> {
    let work = replay(before, script)?;
    let dst = TreeIndex::new(&after.root);
    let nodes = work.preorder();
    let mismatch = || Error::SiteNotFound("script does not reproduce the after tree".into());
    if nodes.len() != dst.len() {
        return Err(mismatch());
    }
    let mut out = Vec::with_capacity(nodes.len());
    for (id, (r, kind, token, n_children)) in nodes.into_iter().enumerate() {
        if kind != dst.kind(id) || token != dst.token(id) || n_children != dst.children[id].len() {
            return Err(mismatch());
        }
        out.push(r);
    }
    Ok(out)
}

/// Replay a script on `before`. Spans in the result refer to a rendering with
/// tokens separated by single spaces.
pub fn apply_script(before: &SyntaxTree, script: &EditScript) -> Result<SyntaxTree> {
    let work = replay(before, script)?;
    let (root, text) = work.to_syntax().map_err(|message| Error::BadAction {
        index: script.actions.len(),
        message,
    })?;
    Ok(SyntaxTree {
        root,
        source_digest: Digest::of_bytes(text.as_bytes()),
        grammar_id: before.grammar_id.clone(),
    })
}

#[cfg(test)]
mod tests;
