use std::collections::{BTreeMap, BTreeSet};

use super::index::{lcs, TreeIndex};
use super::{MatchConfig, Mapping};

/// Nodes bucketed by height, popped tallest first.
struct HeightQueue {
    buckets: BTreeMap<usize, Vec<usize>>,
}

impl HeightQueue {
    fn new() -> Self {
        HeightQueue {
            buckets: BTreeMap::new(),
        }
    }

    fn push(&mut self, ix: &TreeIndex, id: usize) {
        self.buckets.entry(ix.height[id]).or_default().push(id);
    }

    fn open(&mut self, ix: &TreeIndex, id: usize) {
        for &c in &ix.children[id] {
            self.push(ix, c);
        }
    }

    fn peek_max(&self) -> Option<usize> {
        self.buckets.keys().next_back().copied()
    }

    fn pop(&mut self, height: usize) -> Vec<usize> {
        let mut v = self.buckets.remove(&height).unwrap_or_default();
        v.sort_unstable();
        v
    }
}

pub(super) struct Matcher<'m, 'a, 'b> {
    pub src: &'m TreeIndex<'a>,
    pub dst: &'m TreeIndex<'b>,
    pub mapping: Mapping,
    pub cfg: MatchConfig,
}

fn compatible(src: &TreeIndex, a: usize, dst: &TreeIndex, b: usize) -> bool {
    src.kind(a) == dst.kind(b) && src.token(a).is_some() == dst.token(b).is_some()
}

impl<'m, 'a, 'b> Matcher<'m, 'a, 'b> {
    pub fn new(src: &'m TreeIndex<'a>, dst: &'m TreeIndex<'b>, cfg: MatchConfig) -> Self {
        Matcher {
            src,
            dst,
            mapping: Mapping::new(src.len(), dst.len()),
            cfg,
        }
    }

    pub fn run(mut self) -> Mapping {
        self.top_down();
        self.bottom_up();
        self.mapping
    }

    fn subtree_free(&self, a: usize, b: usize) -> bool {
        (a..a + self.src.size[a]).all(|x| self.mapping.after_of(x).is_none())
            && (b..b + self.dst.size[b]).all(|y| self.mapping.before_of(y).is_none())
    }

    /// Map two isomorphic subtrees node by node. Equal digests imply equal
    /// preorder shape, so offsets line up.
    fn map_isomorphic(&mut self, a: usize, b: usize) {
        for off in 0..self.src.size[a] {
            self.mapping.link(a + off, b + off);
        }
    }

    fn top_down(&mut self) {
        let (src, dst) = (self.src, self.dst);
        let mut q1 = HeightQueue::new();
        let mut q2 = HeightQueue::new();
        q1.push(src, 0);
        q2.push(dst, 0);
        let mut ambiguous: Vec<(usize, usize)> = Vec::new();
        while let (Some(h1), Some(h2)) = (q1.peek_max(), q2.peek_max()) {
            if h1.min(h2) < self.cfg.min_height {
                break;
            }
            if h1 > h2 {
                for t in q1.pop(h1) {
                    q1.open(src, t);
                }
                continue;
            }
            if h2 > h1 {
                for t in q2.pop(h2) {
                    q2.open(dst, t);
                }
                continue;
            }
            let l1 = q1.pop(h1);
            let l2 = q2.pop(h2);
            let mut by_digest: BTreeMap<_, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
            for &t in &l1 {
                by_digest.entry(src.digest[t].0).or_default().0.push(t);
            }
            for &t in &l2 {
                by_digest.entry(dst.digest[t].0).or_default().1.push(t);
            }
            let mut matched1 = BTreeSet::new();
            let mut matched2 = BTreeSet::new();
            for (s, d) in by_digest.values() {
                if s.is_empty() || d.is_empty() {
                    continue;
                }
                matched1.extend(s.iter().copied());
                matched2.extend(d.iter().copied());
                if s.len() == 1 && d.len() == 1 {
                    self.map_isomorphic(s[0], d[0]);
                } else {
                    for &a in s {
                        for &b in d {
                            ambiguous.push((a, b));
                        }
                    }
                }
            }
            for t in l1 {
                if !matched1.contains(&t) {
                    q1.open(src, t);
                }
            }
            for t in l2 {
                if !matched2.contains(&t) {
                    q2.open(dst, t);
                }
            }
        }

        let parents_mapped = |m: &Mapping, a: usize, b: usize| match (src.parent[a], dst.parent[b]) {
            (Some(pa), Some(pb)) => m.after_of(pa) == Some(pb),
            _ => false,
        };
        // then closest sibling position, then leftmost
        ambiguous.sort_by_key(|&(a, b)| (!parents_mapped(&self.mapping, a, b), src.position(a).abs_diff(dst.position(b)), a, b));
        for (a, b) in ambiguous {
            if self.subtree_free(a, b) {
                self.map_isomorphic(a, b);
            }
        }
    }

    fn dice(&self, a: usize, b: usize) -> f64 {
        super::dice_indexed(&self.mapping, self.src, self.dst, a, b)
    }

    fn bottom_up(&mut self) {
        let (src, dst) = (self.src, self.dst);
        for a in src.postorder() {
            if a == 0 || src.is_leaf(a) || self.mapping.after_of(a).is_some() {
                continue;
            }
            let mut candidates = BTreeSet::new();
            for d in src.descendants(a) {
                if let Some(p) = self.mapping.after_of(d) {
                    for anc in dst.ancestors(p) {
                        if self.mapping.before_of(anc).is_none() && compatible(src, a, dst, anc) {
                            candidates.insert(anc);
                        }
                    }
                }
            }
            let mut best: Option<(f64, usize)> = None;
            for c in candidates {
                let score = self.dice(a, c);
                if !best.is_some_and(|(s, _)| score <= s) {
                    best = Some((score, c));
                }
            }
            if let Some((score, b)) = best {
                if score >= self.cfg.dice_threshold {
                    self.mapping.link(a, b);
                    self.recover(a, b);
                }
            }
        }
        match self.mapping.after_of(0) {
            None if self.mapping.before_of(0).is_none() && compatible(src, 0, dst, 0) => {
                self.mapping.link(0, 0);
                self.recover(0, 0);
            }
            Some(0) => self.recover(0, 0),
            _ => {}
        }
    }

    /// Map leftover children of a mapped pair: first whole subtrees with equal
    /// digests, then same-kind nodes in order, then kinds left exactly once on
    /// each side. Recurses into the latter two.
    fn recover(&mut self, a: usize, b: usize) {
        let (src, dst) = (self.src, self.dst);
        let free1: Vec<usize> = src.children[a].iter().copied().filter(|&c| self.mapping.after_of(c).is_none()).collect();
        let free2: Vec<usize> = dst.children[b].iter().copied().filter(|&c| self.mapping.before_of(c).is_none()).collect();
        for (i, j) in lcs(&free1, &free2, |x, y| src.digest[x] == dst.digest[y]) {
            if self.subtree_free(free1[i], free2[j]) {
                self.map_isomorphic(free1[i], free2[j]);
            }
        }
        let free1: Vec<usize> = src.children[a].iter().copied().filter(|&c| self.mapping.after_of(c).is_none()).collect();
        let free2: Vec<usize> = dst.children[b].iter().copied().filter(|&c| self.mapping.before_of(c).is_none()).collect();
        for (i, j) in lcs(&free1, &free2, |x, y| compatible(src, x, dst, y)) {
            self.mapping.link(free1[i], free2[j]);
            self.recover(free1[i], free2[j]);
        }
        // whatever is left pairs up when its kind occurs once on each side
        let free1: Vec<usize> = src.children[a].iter().copied().filter(|&c| self.mapping.after_of(c).is_none()).collect();
        let free2: Vec<usize> = dst.children[b].iter().copied().filter(|&c| self.mapping.before_of(c).is_none()).collect();
        for &x in &free1 {
            let once1 = free1.iter().filter(|&&o| src.kind(o) == src.kind(x)).count() == 1;
            let mut same = free2.iter().copied().filter(|&y| dst.kind(y) == src.kind(x));
            if let (true, Some(y), None) = (once1, same.next(), same.next()) {
                if compatible(src, x, dst, y) {
                    self.mapping.link(x, y);
                    self.recover(x, y);
                }
            }
        }
    }
}
