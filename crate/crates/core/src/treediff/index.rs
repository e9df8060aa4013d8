use crate::digest::Digest;
use crate::syntax::{node_digest, SyntaxNode};

/// Flat preorder view of a syntax tree. Node ids are preorder positions, so
/// every descendant of `n` has an id in `n+1 .. n+size[n]`.
#[derive(Debug)]
pub struct TreeIndex<'a> {
    pub nodes: Vec<&'a SyntaxNode>,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    pub height: Vec<usize>,
    pub size: Vec<usize>,
    pub digest: Vec<Digest>,
}

impl<'a> TreeIndex<'a> {
    pub fn new(root: &'a SyntaxNode) -> Self {
        let mut nodes = Vec::new();
        let mut parent = Vec::new();
        let mut children: Vec<Vec<usize>> = Vec::new();
        let mut stack: Vec<(&SyntaxNode, Option<usize>)> = vec![(root, None)];
        while let Some((n, p)) = stack.pop() {
            let id = nodes.len();
            nodes.push(n);
            parent.push(p);
            children.push(Vec::with_capacity(n.children.len()));
            if let Some(p) = p {
                children[p].push(id);
            }
            for c in n.children.iter().rev() {
                stack.push((c, Some(id)));
            }
        }
        let len = nodes.len();
        let mut height = vec![1; len];
        let mut size = vec![1; len];
        let mut digest = vec![Digest([0; 32]); len];
        for id in (0..len).rev() {
            let n = nodes[id];
            digest[id] = node_digest(&n.kind, n.token.as_deref(), children[id].iter().map(|&c| &digest[c]));
            if let Some(p) = parent[id] {
                height[p] = height[p].max(height[id] + 1);
                size[p] += size[id];
            }
        }
        TreeIndex {
            nodes,
            parent,
            children,
            height,
            size,
            digest,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn kind(&self, id: usize) -> &str {
        &self.nodes[id].kind
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.nodes[id].token.as_deref()
    }

    pub fn is_leaf(&self, id: usize) -> bool {
        self.children[id].is_empty()
    }

    /// Strict descendant test.
    pub fn is_descendant(&self, node: usize, ancestor: usize) -> bool {
        ancestor < node && node < ancestor + self.size[ancestor]
    }

    pub fn descendants(&self, id: usize) -> std::ops::Range<usize> {
        id + 1..id + self.size[id]
    }

    pub fn ancestors(&self, id: usize) -> Ancestors<'_, 'a> {
        Ancestors {
            index: self,
            next: self.parent[id],
        }
    }

    pub fn postorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![(0usize, false)];
        while let Some((id, expanded)) = stack.pop() {
            if expanded || self.children[id].is_empty() {
                out.push(id);
            } else {
                stack.push((id, true));
                for &c in self.children[id].iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        out
    }

    pub fn bfs(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(id) = queue.pop_front() {
            out.push(id);
            queue.extend(self.children[id].iter().copied());
        }
        out
    }

    /// Position of `id` among its parent's children.
    pub fn position(&self, id: usize) -> usize {
        match self.parent[id] {
            Some(p) => self.children[p].iter().position(|&c| c == id).unwrap(),
            None => 0,
        }
    }
}

pub struct Ancestors<'i, 'a> {
    index: &'i TreeIndex<'a>,
    next: Option<usize>,
}

impl Iterator for Ancestors<'_, '_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        let cur = self.next?;
        self.next = self.index.parent[cur];
        Some(cur)
    }
}

/// Longest common subsequence of two id lists under `eq`, as index pairs into
/// the two lists. Ties resolve toward the earliest elements.
pub fn lcs<F: Fn(usize, usize) -> bool>(a: &[usize], b: &[usize], eq: F) -> Vec<(usize, usize)> {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return Vec::new();
    }
    // table[i][j] = LCS length of a[i..], b[j..]
    let mut table = vec![0u32; (n + 1) * (m + 1)];
    let at = |i: usize, j: usize| i * (m + 1) + j;
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            table[at(i, j)] = if eq(a[i], b[j]) {
                table[at(i + 1, j + 1)] + 1
            } else {
                table[at(i + 1, j)].max(table[at(i, j + 1)])
            };
        }
    }
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if eq(a[i], b[j]) && table[at(i, j)] == table[at(i + 1, j + 1)] + 1 {
            out.push((i, j));
            i += 1;
            j += 1;
        } else if table[at(i + 1, j)] >= table[at(i, j + 1)] {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}
