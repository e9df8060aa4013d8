//! Unit-cost tree edit distance (Zhang and Shasha).

use super::ShapeNode;

type Label<'a> = (super::Role, &'a str, Option<&'a str>, Option<&'a str>);

/// Postorder flattening; ids are 1-based, `lml[i]` is the leftmost leaf
/// descendant of node `i`.
struct Flat<'a> {
    labels: Vec<Label<'a>>,
    lml: Vec<usize>,
    keyroots: Vec<usize>,
}

impl<'a> Flat<'a> {
    fn new(root: &'a ShapeNode) -> Self {
        let mut labels = vec![(super::Role::Root, "", None, None)];
        let mut lml = vec![0];
        // iterative postorder carrying each node's first postorder id
        let mut stack: Vec<(&ShapeNode, usize, Option<usize>)> = vec![(root, 0, None)];
        while let Some((n, next, first)) = stack.pop() {
            if next < n.children.len() {
                stack.push((n, next + 1, first));
                stack.push((&n.children[next], 0, None));
                continue;
            }
            let id = labels.len();
            labels.push((n.role, n.kind.as_str(), n.token.as_deref(), n.new_token.as_deref()));
            let leftmost = first.unwrap_or(id);
            lml.push(leftmost);
            if let Some(parent) = stack.last_mut() {
                if parent.2.is_none() {
                    parent.2 = Some(leftmost);
                }
            }
        }
        let count = labels.len() - 1;
        let mut seen = vec![false; count + 1];
        let mut keyroots = Vec::new();
        for i in (1..=count).rev() {
            if !seen[lml[i]] {
                seen[lml[i]] = true;
                keyroots.push(i);
            }
        }
        keyroots.reverse();
        Flat { labels, lml, keyroots }
    }

    fn len(&self) -> usize {
        self.labels.len() - 1
    }
}

pub fn shape_distance(a: &ShapeNode, b: &ShapeNode) -> usize {
    let (t1, t2) = (Flat::new(a), Flat::new(b));
    let (n, m) = (t1.len(), t2.len());
    let mut td = vec![vec![0usize; m + 1]; n + 1];
    let mut fd = vec![vec![0usize; m + 2]; n + 2];
    for &i in &t1.keyroots {
        for &j in &t2.keyroots {
            let (li, lj) = (t1.lml[i], t2.lml[j]);
            let (ioff, joff) = (li - 1, lj - 1);
            fd[0][0] = 0;
            for x in li..=i {
                fd[x - ioff][0] = fd[x - 1 - ioff][0] + 1;
            }
            for y in lj..=j {
                fd[0][y - joff] = fd[0][y - 1 - joff] + 1;
            }
            for x in li..=i {
                for y in lj..=j {
                    let del = fd[x - 1 - ioff][y - joff] + 1;
                    let ins = fd[x - ioff][y - 1 - joff] + 1;
                    if t1.lml[x] == li && t2.lml[y] == lj {
                        let cost = usize::from(t1.labels[x] != t2.labels[y]);
                        let v = del.min(ins).min(fd[x - 1 - ioff][y - 1 - joff] + cost);
                        fd[x - ioff][y - joff] = v;
                        td[x][y] = v;
                    } else {
                        let sub = fd[t1.lml[x] - 1 - ioff][t2.lml[y] - 1 - joff] + td[x][y];
                        fd[x - ioff][y - joff] = del.min(ins).min(sub);
                    }
                }
            }
        }
    }
    td[n][m]
}

/// `1 - TED / max(|a|, |b|)`.
pub fn shape_similarity(a: &ShapeNode, b: &ShapeNode) -> f64 {
    let max = a.size().max(b.size());
    1.0 - shape_distance(a, b) as f64 / max as f64
}
