//! Exhaustive reference implementations for small trees.

use fixprint::pattern::{Role, ShapeNode};
use fixprint::treediff::TreeIndex;

type Label<'a> = (Role, &'a str, Option<&'a str>, Option<&'a str>);

struct Flat<'a> {
    labels: Vec<Label<'a>>,
    /// `anc[i][j]`: node `i` is a proper ancestor of node `j`.
    anc: Vec<Vec<bool>>,
}

fn flatten(root: &ShapeNode) -> Flat<'_> {
    let mut labels = Vec::new();
    let mut parents: Vec<Option<usize>> = Vec::new();
    let mut stack = vec![(root, None)];
    while let Some((n, p)) = stack.pop() {
        labels.push((n.role, n.kind.as_str(), n.token.as_deref(), n.new_token.as_deref()));
        parents.push(p);
        let id = labels.len() - 1;
        for c in n.children.iter().rev() {
            stack.push((c, Some(id)));
        }
    }
    let n = labels.len();
    let mut anc = vec![vec![false; n]; n];
    for j in 0..n {
        let mut p = parents[j];
        while let Some(i) = p {
            anc[i][j] = true;
            p = parents[i];
        }
    }
    Flat { labels, anc }
}

/// Unit-cost tree edit distance by enumerating every edit mapping (one to
/// one, ancestor and sibling order preserving). Nodes are in preorder, so
/// with ancestry preserved, order is preserved iff preorder ids increase
/// together.
pub fn ted(a: &ShapeNode, b: &ShapeNode) -> usize {
    let (f1, f2) = (flatten(a), flatten(b));
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut best = f1.labels.len() + f2.labels.len();
    ted_search(&f1, &f2, 0, &mut pairs, &mut vec![false; f2.labels.len()], &mut best);
    best
}

fn ted_search(f1: &Flat, f2: &Flat, i: usize, pairs: &mut Vec<(usize, usize)>, used: &mut Vec<bool>, best: &mut usize) {
    let (n1, n2) = (f1.labels.len(), f2.labels.len());
    if i == n1 {
        let relabel = pairs.iter().filter(|&&(x, y)| f1.labels[x] != f2.labels[y]).count();
        let cost = (n1 - pairs.len()) + (n2 - pairs.len()) + relabel;
        *best = (*best).min(cost);
        return;
    }
    for j in 0..n2 {
        if used[j] {
            continue;
        }
        let ok = pairs.iter().all(|&(x, y)| f1.anc[x][i] == f2.anc[y][j] && y < j);
        if ok {
            used[j] = true;
            pairs.push((i, j));
            ted_search(f1, f2, i + 1, pairs, used, best);
            pairs.pop();
            used[j] = false;
        }
    }
    ted_search(f1, f2, i + 1, pairs, used, best);
}

pub fn similarity(a: &ShapeNode, b: &ShapeNode) -> f64 {
    1.0 - ted(a, b) as f64 / a.size().max(b.size()) as f64
}

fn lcs_len(a: &[usize], b: &[usize]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 0..a.len() {
        for j in 0..b.len() {
            t[i + 1][j + 1] = if a[i] == b[j] { t[i][j] + 1 } else { t[i][j + 1].max(t[i + 1][j]) };
        }
    }
    t[a.len()][b.len()]
}

fn parents_agree(src: &TreeIndex, dst: &TreeIndex, fwd: &[Option<usize>], a: usize, b: usize) -> bool {
    match (src.parent[a], dst.parent[b]) {
        (None, None) => true,
        (Some(p), Some(q)) => fwd[p] == Some(q),
        _ => false,
    }
}

/// Length of the shortest insert/delete/update/move script that keeps the
/// pairs of `fwd` (before id to after id): one delete per unmapped before
/// node, one insert per unmapped after node, one update per mapped leaf
/// whose token changes, one move per mapped node whose parent is not mapped
/// to its partner's parent, and, under each mapped parent, one move per
/// child that falls outside a longest common subsequence of the kept order.
pub fn script_cost(src: &TreeIndex, dst: &TreeIndex, fwd: &[Option<usize>]) -> usize {
    let mut bwd = vec![None; dst.len()];
    for (a, b) in fwd.iter().enumerate() {
        if let Some(b) = b {
            bwd[*b] = Some(a);
        }
    }
    let mapped = fwd.iter().flatten().count();
    let mut cost = (src.len() - mapped) + (dst.len() - mapped);
    for (a, b) in fwd.iter().enumerate() {
        let Some(b) = *b else { continue };
        if src.token(a) != dst.token(b) {
            cost += 1;
        }
        if !parents_agree(src, dst, fwd, a, b) {
            cost += 1;
        }
    }
    for y in 0..dst.len() {
        let Some(p) = bwd[y] else { continue };
        let s1: Vec<usize> = src.children[p]
            .iter()
            .filter_map(|&c| fwd[c])
            .filter(|&b| dst.parent[b] == Some(y))
            .collect();
        let s2: Vec<usize> = dst.children[y].iter().copied().filter(|&c| bwd[c].is_some_and(|d| src.parent[d] == Some(p))).collect();
        cost += s1.len() - lcs_len(&s1, &s2);
    }
    cost
}

/// Minimum of [`script_cost`] over every kind-preserving mapping that pairs
/// leaves with leaves. Only mappings cheaper than `bound` are explored, so
/// the result is `min(bound, optimum)`.
pub fn min_script_cost(src: &TreeIndex, dst: &TreeIndex, bound: usize) -> usize {
    let mut s = Search {
        src,
        dst,
        fwd: vec![None; src.len()],
        used: vec![false; dst.len()],
        best: bound,
    };
    s.go(0, 0);
    s.best
}

struct Search<'s, 'a, 'b> {
    src: &'s TreeIndex<'a>,
    dst: &'s TreeIndex<'b>,
    fwd: Vec<Option<usize>>,
    used: Vec<bool>,
    best: usize,
}

impl Search<'_, '_, '_> {
    /// `i` is the next before node (preorder, so its parent is decided);
    /// `partial` counts deletes, updates and parent moves so far.
    fn go(&mut self, i: usize, partial: usize) {
        let mapped = self.fwd[..i].iter().flatten().count();
        let remaining = self.src.len() - i;
        let inserts_lb = self.dst.len().saturating_sub(mapped + remaining);
        if partial + inserts_lb >= self.best {
            return;
        }
        if i == self.src.len() {
            let c = script_cost(self.src, self.dst, &self.fwd);
            self.best = self.best.min(c);
            return;
        }
        for j in 0..self.dst.len() {
            if self.used[j] || self.src.kind(i) != self.dst.kind(j) || self.src.is_leaf(i) != self.dst.is_leaf(j) {
                continue;
            }
            let mut extra = usize::from(self.src.token(i) != self.dst.token(j));
            if !parents_agree(self.src, self.dst, &self.fwd, i, j) {
                extra += 1;
            }
            self.fwd[i] = Some(j);
            self.used[j] = true;
            self.go(i + 1, partial + extra);
            self.used[j] = false;
            self.fwd[i] = None;
        }
        self.go(i + 1, partial + 1);
    }
}
