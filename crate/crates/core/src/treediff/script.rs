use std::collections::{HashMap, HashSet};

use super::index::{lcs, TreeIndex};
use super::{Attachment, EditAction, EditOp, Mapping, NodeRef};
use crate::syntax::{Span, SyntaxNode};

struct WorkNode {
    kind: String,
    token: Option<String>,
    parent: Option<NodeRef>,
    children: Vec<NodeRef>,
}

/// Mutable tree addressed by `NodeRef`, with a virtual `Root` above the real
/// root so the real root itself can be replaced.
pub(super) struct WorkTree {
    nodes: HashMap<NodeRef, WorkNode>,
}

impl WorkTree {
    pub fn from_index(ix: &TreeIndex) -> Self {
        let mut nodes = HashMap::with_capacity(ix.len() + 1);
        nodes.insert(
            NodeRef::Root,
            WorkNode {
                kind: String::new(),
                token: None,
                parent: None,
                children: vec![NodeRef::Before(0)],
            },
        );
        for id in 0..ix.len() {
            nodes.insert(
                NodeRef::Before(id),
                WorkNode {
                    kind: ix.kind(id).to_string(),
                    token: ix.token(id).map(str::to_string),
                    parent: Some(ix.parent[id].map_or(NodeRef::Root, NodeRef::Before)),
                    children: ix.children[id].iter().map(|&c| NodeRef::Before(c)).collect(),
                },
            );
        }
        WorkTree { nodes }
    }

    fn get(&self, n: NodeRef) -> Result<&WorkNode, String> {
        self.nodes.get(&n).ok_or_else(|| format!("node {n} does not exist"))
    }

    pub fn contains(&self, n: NodeRef) -> bool {
        self.nodes.contains_key(&n)
    }

    pub fn parent(&self, n: NodeRef) -> Option<NodeRef> {
        self.nodes.get(&n).and_then(|w| w.parent)
    }

    pub fn children(&self, n: NodeRef) -> &[NodeRef] {
        self.nodes.get(&n).map_or(&[], |w| &w.children)
    }

    pub fn token(&self, n: NodeRef) -> Option<&str> {
        self.nodes.get(&n).and_then(|w| w.token.as_deref())
    }

    pub fn index_of(&self, n: NodeRef) -> usize {
        self.parent(n)
            .and_then(|p| self.children(p).iter().position(|&c| c == n))
            .unwrap_or(0)
    }

    fn is_ancestor_or_self(&self, anc: NodeRef, mut n: NodeRef) -> bool {
        loop {
            if n == anc {
                return true;
            }
            match self.parent(n) {
                Some(p) => n = p,
                None => return false,
            }
        }
    }

    pub fn insert(&mut self, n: NodeRef, kind: &str, token: Option<&str>, parent: NodeRef, index: usize) -> Result<(), String> {
        if self.contains(n) {
            return Err(format!("node {n} already exists"));
        }
        let p = self.get(parent)?;
        if index > p.children.len() {
            return Err(format!("index {index} out of range for {parent} with {} children", p.children.len()));
        }
        if p.token.is_some() {
            return Err(format!("parent {parent} is a leaf"));
        }
        self.nodes.get_mut(&parent).unwrap().children.insert(index, n);
        self.nodes.insert(
            n,
            WorkNode {
                kind: kind.to_string(),
                token: token.map(str::to_string),
                parent: Some(parent),
                children: Vec::new(),
            },
        );
        Ok(())
    }

    pub fn delete(&mut self, n: NodeRef) -> Result<(), String> {
        if n == NodeRef::Root {
            return Err("cannot delete the virtual root".into());
        }
        let w = self.get(n)?;
        if !w.children.is_empty() {
            return Err(format!("node {n} still has {} children", w.children.len()));
        }
        let parent = w.parent;
        self.nodes.remove(&n);
        if let Some(p) = parent {
            self.nodes.get_mut(&p).unwrap().children.retain(|&c| c != n);
        }
        Ok(())
    }

    pub fn update(&mut self, n: NodeRef, token: &str) -> Result<(), String> {
        let w = self.nodes.get_mut(&n).ok_or_else(|| format!("node {n} does not exist"))?;
        if w.token.is_none() {
            return Err(format!("node {n} is not a leaf"));
        }
        w.token = Some(token.to_string());
        Ok(())
    }

    /// Checked move. The index is interpreted after `n` has been detached.
    pub fn move_to(&mut self, n: NodeRef, parent: NodeRef, index: usize) -> Result<(), String> {
        if n == NodeRef::Root {
            return Err("cannot move the virtual root".into());
        }
        self.get(n)?;
        let p = self.get(parent)?;
        if p.token.is_some() {
            return Err(format!("parent {parent} is a leaf"));
        }
        if self.is_ancestor_or_self(n, parent) {
            return Err(format!("cannot move {n} under its own subtree"));
        }
        self.detach(n);
        let len = self.children(parent).len();
        if index > len {
            return Err(format!("index {index} out of range for {parent} with {len} children"));
        }
        self.attach(n, parent, index);
        Ok(())
    }

    fn detach(&mut self, n: NodeRef) {
        if let Some(old) = self.parent(n) {
            self.nodes.get_mut(&old).unwrap().children.retain(|&c| c != n);
        }
        self.nodes.get_mut(&n).unwrap().parent = None;
    }

    fn attach(&mut self, n: NodeRef, parent: NodeRef, index: usize) {
        self.nodes.get_mut(&parent).unwrap().children.insert(index, n);
        self.nodes.get_mut(&n).unwrap().parent = Some(parent);
    }

    /// Refs of the real tree in preorder, with each node's kind, token and
    /// child count.
    pub fn preorder(&self) -> Vec<(NodeRef, &str, Option<&str>, usize)> {
        let mut out = Vec::new();
        let mut stack: Vec<NodeRef> = self.children(NodeRef::Root).iter().rev().copied().collect();
        while let Some(n) = stack.pop() {
            let w = &self.nodes[&n];
            out.push((n, w.kind.as_str(), w.token.as_deref(), w.children.len()));
            stack.extend(w.children.iter().rev().copied());
        }
        out
    }

    /// Rebuild a syntax tree. Leaf tokens are laid out separated by single
    /// spaces and spans refer to that rendering.
    pub fn to_syntax(&self) -> Result<(SyntaxNode, String), String> {
        let top = self.children(NodeRef::Root);
        if top.len() != 1 {
            return Err(format!("result has {} roots", top.len()));
        }
        let mut text = String::new();
        let node = self.build(top[0], &mut text);
        Ok((node, text))
    }

    fn build(&self, n: NodeRef, text: &mut String) -> SyntaxNode {
        let w = &self.nodes[&n];
        if let Some(tok) = &w.token {
            if !text.is_empty() {
                text.push(' ');
            }
            let start = text.len();
            text.push_str(tok);
            return SyntaxNode::leaf(w.kind.clone(), tok.clone(), Span::new(start, text.len()));
        }
        if w.children.is_empty() {
            return SyntaxNode {
                kind: w.kind.clone(),
                token: None,
                span: Span::new(text.len(), text.len()),
                children: Vec::new(),
            };
        }
        let children = w.children.iter().map(|&c| self.build(c, text)).collect();
        SyntaxNode::internal(w.kind.clone(), children)
    }
}

struct Generator<'m, 'b> {
    dst: &'m TreeIndex<'b>,
    work: WorkTree,
    w2a: HashMap<NodeRef, usize>,
    a2w: Vec<Option<NodeRef>>,
    in_order_w: HashSet<NodeRef>,
    in_order_a: Vec<bool>,
    actions: Vec<EditAction>,
}

pub(super) fn generate(src: &TreeIndex, dst: &TreeIndex, mapping: &Mapping) -> Vec<EditAction> {
    let mut g = Generator {
        dst,
        work: WorkTree::from_index(src),
        w2a: HashMap::new(),
        a2w: vec![None; dst.len()],
        in_order_w: HashSet::new(),
        in_order_a: vec![false; dst.len()],
        actions: Vec::new(),
    };
    for (b, a) in mapping.pairs() {
        g.w2a.insert(NodeRef::Before(b), a);
        g.a2w[a] = Some(NodeRef::Before(b));
    }
    g.run();
    g.actions
}

impl Generator<'_, '_> {
    fn kind_of(&self, n: NodeRef) -> &str {
        &self.work.nodes[&n].kind
    }

    fn partner_parent(&self, x: usize) -> NodeRef {
        match self.dst.parent[x] {
            Some(y) => self.a2w[y].expect("parent processed before child"),
            None => NodeRef::Root,
        }
    }

    fn parents_agree(&self, w: NodeRef, x: usize) -> bool {
        match (self.work.parent(w), self.dst.parent[x]) {
            (Some(NodeRef::Root), None) => true,
            (Some(v), Some(y)) => self.w2a.get(&v) == Some(&y),
            _ => false,
        }
    }

    fn find_pos(&self, x: usize) -> usize {
        let Some(y) = self.dst.parent[x] else {
            return 0;
        };
        let mut last = None;
        for &c in &self.dst.children[y] {
            if c == x {
                break;
            }
            if self.in_order_a[c] {
                last = Some(c);
            }
        }
        match last {
            None => 0,
            Some(v) => self.work.index_of(self.a2w[v].unwrap()) + 1,
        }
    }

    /// Detach first, so positions are computed against the final sibling list.
    fn emit_move(&mut self, w: NodeRef, x: usize, parent: NodeRef) {
        self.work.detach(w);
        let index = self.find_pos(x);
        self.work.attach(w, parent, index);
        let node = &self.work.nodes[&w];
        self.actions.push(EditAction {
            op: EditOp::Move,
            subject: w,
            kind: node.kind.clone(),
            token: node.token.clone(),
            parent: Some(Attachment { node: parent, index }),
            new_token: None,
        });
    }

    fn run(&mut self) {
        for x in self.dst.bfs() {
            let z = self.partner_parent(x);
            let w = match self.a2w[x] {
                None => {
                    let k = self.find_pos(x);
                    let w = NodeRef::After(x);
                    let (kind, token) = (self.dst.kind(x), self.dst.token(x));
                    self.work.insert(w, kind, token, z, k).expect("generated insert is valid");
                    self.actions.push(EditAction {
                        op: EditOp::Insert,
                        subject: w,
                        kind: kind.to_string(),
                        token: token.map(str::to_string),
                        parent: Some(Attachment { node: z, index: k }),
                        new_token: None,
                    });
                    self.w2a.insert(w, x);
                    self.a2w[x] = Some(w);
                    w
                }
                Some(w) => {
                    if !self.parents_agree(w, x) {
                        self.emit_move(w, x, z);
                    }
                    let old = self.work.token(w).map(str::to_string);
                    if let (Some(old), Some(new)) = (old, self.dst.token(x)) {
                        if old != new {
                            self.work.update(w, new).expect("generated update is valid");
                            self.actions.push(EditAction {
                                op: EditOp::Update,
                                subject: w,
                                kind: self.kind_of(w).to_string(),
                                token: Some(old),
                                parent: None,
                                new_token: Some(new.to_string()),
                            });
                        }
                    }
                    w
                }
            };
            self.in_order_w.insert(w);
            self.in_order_a[x] = true;
            self.align_children(w, x);
        }
        let mut order = Vec::new();
        postorder(&self.work, NodeRef::Root, &mut order);
        for n in order {
            if matches!(n, NodeRef::Before(_)) && !self.w2a.contains_key(&n) {
                let node = &self.work.nodes[&n];
                let action = EditAction {
                    op: EditOp::Delete,
                    subject: n,
                    kind: node.kind.clone(),
                    token: node.token.clone(),
                    parent: None,
                    new_token: None,
                };
                self.work.delete(n).expect("generated delete is valid");
                self.actions.push(action);
            }
        }
    }

    fn align_children(&mut self, w: NodeRef, x: usize) {
        let wc: Vec<NodeRef> = self.work.children(w).to_vec();
        let xc: Vec<usize> = self.dst.children[x].clone();
        for c in &wc {
            self.in_order_w.remove(c);
        }
        for &c in &xc {
            self.in_order_a[c] = false;
        }
        let s1: Vec<NodeRef> = wc
            .into_iter()
            .filter(|c| self.w2a.get(c).is_some_and(|&a| self.dst.parent[a] == Some(x)))
            .collect();
        let s2: Vec<usize> = xc
            .into_iter()
            .filter(|&c| self.a2w[c].is_some_and(|n| self.work.parent(n) == Some(w)))
            .collect();
        let idx1: Vec<usize> = (0..s1.len()).collect();
        let idx2: Vec<usize> = (0..s2.len()).collect();
        let common = lcs(&idx1, &idx2, |i, j| self.w2a[&s1[i]] == s2[j]);
        let mut stable = HashSet::new();
        for &(i, j) in &common {
            self.in_order_w.insert(s1[i]);
            self.in_order_a[s2[j]] = true;
            stable.insert(s2[j]);
        }
        for b in s2 {
            if stable.contains(&b) {
                continue;
            }
            let a = self.a2w[b].unwrap();
            self.emit_move(a, b, w);
            self.in_order_w.insert(a);
            self.in_order_a[b] = true;
        }
    }
}

fn postorder(work: &WorkTree, n: NodeRef, out: &mut Vec<NodeRef>) {
    let mut stack = vec![(n, false)];
    while let Some((id, expanded)) = stack.pop() {
        let ch = work.children(id);
        if expanded || ch.is_empty() {
            out.push(id);
        } else {
            stack.push((id, true));
            for &c in ch.iter().rev() {
                stack.push((c, false));
            }
        }
    }
}
