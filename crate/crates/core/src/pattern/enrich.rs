use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Role, ShapeNode};
use crate::error::{Error, Result};
use crate::syntax::{kind, SyntaxTree};
use crate::treediff::{correspondence, EditAction, EditOp, EditScript, NodeRef, TreeIndex};

/// One edit action with the context it was applied in.
///
/// `context_chain` lists ancestor kinds from the nearest enclosing
/// FunctionDef (or the root) down to the action's parent. `context_refs`
/// identifies the same ancestors as before-tree nodes and `context_positions`
/// gives each one's index among its siblings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RichAction {
    pub action: EditAction,
    pub context_chain: Vec<String>,
    pub context_refs: Vec<NodeRef>,
    pub context_positions: Vec<usize>,
    pub position: usize,
    pub function: Option<String>,
    /// Covered by an enclosing action's subtree, so not rendered on its own.
    pub nested: bool,
    pub subtree: ShapeNode,
    pub sibling: Option<ShapeNode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RichEditScript {
    pub grammar_id: String,
    pub actions: Vec<RichAction>,
}

impl RichEditScript {
    /// Names of functions touched by top-level actions, sorted and unique.
    pub fn functions(&self) -> Vec<String> {
        let mut v: Vec<String> = self.actions.iter().filter(|a| !a.nested).filter_map(|a| a.function.clone()).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Whether any top-level action lies outside a function.
    pub fn touches_file_scope(&self) -> bool {
        self.actions.iter().any(|a| !a.nested && a.context_chain.first().map(String::as_str) != Some(kind::FUNCTION_DEF))
    }

    /// Merge all context chains into one tree with concrete tokens.
    pub fn concrete_shape(&self) -> ShapeNode {
        let mut root = Trie::default();
        for a in self.actions.iter().filter(|a| !a.nested) {
            let mut cur = &mut root;
            for ((r, k), pos) in a.context_refs.iter().zip(&a.context_chain).zip(&a.context_positions) {
                cur = cur.children.entry(*r).or_insert_with(|| Trie {
                    key: (*pos, 0),
                    kind: k.clone(),
                    ..Trie::default()
                });
            }
            let mut item = a.subtree.clone();
            if let Some(sib) = &a.sibling {
                item.children.push(sib.clone());
            }
            cur.items.push(((a.position, op_rank(a.action.op)), item));
        }
        root.into_shape(Role::Root)
    }
}

fn op_rank(op: EditOp) -> u8 {
    match op {
        EditOp::Delete => 1,
        EditOp::Update => 2,
        EditOp::Move => 3,
        EditOp::Insert => 4,
    }
}

#[derive(Default)]
struct Trie {
    key: (usize, u8),
    kind: String,
    children: BTreeMap<NodeRef, Trie>,
    items: Vec<((usize, u8), ShapeNode)>,
}

impl Trie {
    fn into_shape(self, role: Role) -> ShapeNode {
        let mut parts: Vec<((usize, u8), ShapeNode)> = self.items;
        for (_, t) in self.children {
            let key = t.key;
            parts.push((key, t.into_shape(Role::Context)));
        }
        // keys are unique within one parent, so the sort is total
        parts.sort_by_key(|(k, _)| *k);
        let mut node = ShapeNode::new(role, if role == Role::Root { String::new() } else { self.kind }, None);
        node.children = parts.into_iter().map(|(_, s)| s).collect();
        node
    }
}

fn implied(ix: &TreeIndex, id: usize) -> bool {
    ix.nodes[id].is_implied()
}

struct Ctx<'m, 'a, 'b> {
    src: &'m TreeIndex<'a>,
    dst: &'m TreeIndex<'b>,
    corr: Vec<NodeRef>,
    partner: Vec<Option<usize>>,
}

impl Ctx<'_, '_, '_> {
    fn inserted(&self, x: usize) -> bool {
        matches!(self.corr[x], NodeRef::After(_))
    }

    fn deleted(&self, i: usize) -> bool {
        self.partner[i].is_none()
    }

    fn marker(kind: &str) -> ShapeNode {
        ShapeNode::new(Role::Move, kind, None)
    }

    fn plain_after(&self, x: usize, role: Role) -> ShapeNode {
        let dst = self.dst;
        let mut n = ShapeNode::new(role, dst.kind(x), dst.token(x).map(str::to_string));
        for &c in &dst.children[x] {
            if implied(dst, c) {
                continue;
            }
            n.children.push(if self.inserted(c) {
                self.plain_after(c, Role::Plain)
            } else {
                Self::marker(dst.kind(c))
            });
        }
        n
    }

    fn plain_before(&self, i: usize, role: Role) -> ShapeNode {
        let src = self.src;
        let mut n = ShapeNode::new(role, src.kind(i), src.token(i).map(str::to_string));
        for &c in &src.children[i] {
            if implied(src, c) {
                continue;
            }
            n.children.push(if self.deleted(c) {
                self.plain_before(c, Role::Plain)
            } else {
                Self::marker(src.kind(c))
            });
        }
        n
    }

    fn unchanged(&self, ix: &TreeIndex, x: usize, role: Role) -> ShapeNode {
        let mut n = ShapeNode::new(role, ix.kind(x), ix.token(x).map(str::to_string));
        for &c in &ix.children[x] {
            if !implied(ix, c) {
                n.children.push(self.unchanged(ix, c, Role::Plain));
            }
        }
        n
    }

    /// Nearest unchanged sibling of an inserted node, looking forward first.
    fn sibling(&self, x: usize) -> Option<ShapeNode> {
        let dst = self.dst;
        let p = dst.parent[x]?;
        let sibs = &dst.children[p];
        let at = dst.position(x);
        let usable = |&&c: &&usize| {
            let k = dst.kind(c);
            if k == kind::PUNCT || k == kind::KEYWORD || k == kind::OPERATOR {
                return false;
            }
            match self.corr[c] {
                NodeRef::Before(i) => self.src.digest[i] == dst.digest[c],
                _ => false,
            }
        };
        let c = sibs[at + 1..].iter().find(usable).or_else(|| sibs[..at].iter().rev().find(usable))?;
        Some(self.unchanged(dst, *c, Role::Sibling))
    }
}

/// Chain of ancestors of `id` starting at the nearest FunctionDef, or at the
/// root when there is none.
fn chain(ix: &TreeIndex, id: usize) -> Vec<usize> {
    let mut anc: Vec<usize> = ix.ancestors(id).collect();
    anc.reverse();
    let start = anc.iter().rposition(|&a| ix.kind(a) == kind::FUNCTION_DEF).unwrap_or(0);
    anc.split_off(start)
}

/// Pair each action of `script` with its ancestor context. Inserts take
/// context from `after`, all other actions from `before`.
pub fn enrich(script: &EditScript, before: &SyntaxTree, after: &SyntaxTree) -> Result<RichEditScript> {
    if before.grammar_id != after.grammar_id {
        return Err(Error::GrammarMismatch {
            left: before.grammar_id.clone(),
            right: after.grammar_id.clone(),
        });
    }
    let src = TreeIndex::new(&before.root);
    let dst = TreeIndex::new(&after.root);
    let corr = correspondence(before, after, script)?;
    let mut partner = vec![None; src.len()];
    let mut after_of_ref = BTreeMap::new();
    for (x, r) in corr.iter().enumerate() {
        if let NodeRef::Before(i) = r {
            partner[*i] = Some(x);
        }
        after_of_ref.insert(*r, x);
    }
    let cx = Ctx {
        src: &src,
        dst: &dst,
        corr,
        partner,
    };
    let missing = |a: &EditAction| Error::SiteNotFound(format!("{} {} {}", a.op.as_str(), a.kind, a.subject));

    let mut actions = Vec::with_capacity(script.len());
    for a in &script.actions {
        let before_id = match a.subject {
            NodeRef::Before(i) if i < src.len() => Some(i),
            _ => None,
        };
        let (ix, site, nested, subtree, sibling) = match a.op {
            EditOp::Insert => {
                let x = *after_of_ref.get(&a.subject).filter(|&&x| cx.inserted(x)).ok_or_else(|| missing(a))?;
                let nested = dst.parent[x].is_some_and(|p| cx.inserted(p));
                let sibling = if nested { None } else { cx.sibling(x) };
                (&dst, x, nested, cx.plain_after(x, Role::Insert), sibling)
            }
            EditOp::Delete => {
                let i = before_id.filter(|&i| cx.deleted(i)).ok_or_else(|| missing(a))?;
                let nested = src.parent[i].is_some_and(|p| cx.deleted(p));
                (&src, i, nested, cx.plain_before(i, Role::Delete), None)
            }
            EditOp::Update => {
                let i = before_id.filter(|&i| !cx.deleted(i)).ok_or_else(|| missing(a))?;
                let mut n = ShapeNode::new(Role::Update, src.kind(i), src.token(i).map(str::to_string));
                n.new_token = a.new_token.clone();
                (&src, i, false, n, None)
            }
            EditOp::Move => {
                let i = before_id.filter(|&i| !cx.deleted(i)).ok_or_else(|| missing(a))?;
                let x = cx.partner[i].unwrap();
                let nested = dst.parent[x].is_some_and(|p| cx.inserted(p));
                (&src, i, nested, Ctx::marker(src.kind(i)), None)
            }
        };
        let ids = chain(ix, site);
        if ids.is_empty() {
            return Err(Error::SiteNotFound(format!("{} {} at the tree root has no context", a.op.as_str(), a.kind)));
        }
        let refs: Vec<NodeRef> = ids
            .iter()
            .map(|&y| if std::ptr::eq(ix, &dst) { cx.corr[y] } else { NodeRef::Before(y) })
            .collect();
        let positions = refs
            .iter()
            .map(|r| match r {
                NodeRef::Before(i) => src.position(*i),
                _ => 0,
            })
            .collect();
        let function = ids
            .first()
            .filter(|&&f| ix.kind(f) == kind::FUNCTION_DEF)
            .and_then(|&f| ix.nodes[f].function_name())
            .map(str::to_string);
        actions.push(RichAction {
            action: a.clone(),
            context_chain: ids.iter().map(|&y| ix.kind(y).to_string()).collect(),
            context_refs: refs,
            context_positions: positions,
            position: ix.position(site),
            function,
            nested,
            subtree,
            sibling,
        });
    }
    Ok(RichEditScript {
        grammar_id: before.grammar_id.clone(),
        actions,
    })
}
