use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AnchorQuery, EffectItem, Site, FILE_SCOPE};
use crate::error::{Error, Result};
use crate::pattern::{shape_similarity, AbstractionLevel, Role, ShapeNode};
use crate::syntax::{kind, Span, SyntaxNode, SyntaxTree};

/// Similarity a same-kind node at the anchor must exceed to count as a
/// differing version of the effect rather than its absence.
pub const PRESENT_BUT_DIFFERENT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    Absent,
    PresentButDifferent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmissionSite {
    pub file_path: String,
    pub function: String,
    pub span: Span,
    pub evidence: Evidence,
    /// Similarity of the closest differing node, for PresentButDifferent.
    pub closest: Option<f64>,
}

/// Bijection between pattern placeholders and concrete identifiers.
#[derive(Debug, Clone, Default)]
struct Binding {
    fwd: HashMap<String, String>,
    bwd: HashMap<String, String>,
}

impl Binding {
    fn bind(&mut self, placeholder: &str, name: &str) -> bool {
        match (self.fwd.get(placeholder), self.bwd.get(name)) {
            (Some(x), _) if x != name => false,
            (_, Some(y)) if y != placeholder => false,
            (Some(_), Some(_)) => true,
            _ => {
                self.fwd.insert(placeholder.to_string(), name.to_string());
                self.bwd.insert(name.to_string(), placeholder.to_string());
                true
            }
        }
    }
}

fn visible(n: &SyntaxNode) -> impl Iterator<Item = &SyntaxNode> {
    n.children.iter().filter(|c| !c.is_implied())
}

fn abstracted_kind(level: AbstractionLevel, k: &str) -> bool {
    (k == kind::LITERAL && level != AbstractionLevel::None) || (k == kind::IDENTIFIER && level == AbstractionLevel::IdentifiersAndLiterals)
}

struct Matcher {
    level: AbstractionLevel,
}

impl Matcher {
    fn token_ok(&self, k: &str, pat: Option<&str>, tok: Option<&str>, b: &mut Binding) -> bool {
        match (pat, tok) {
            (None, None) => true,
            (Some(p), Some(t)) => {
                if k == kind::LITERAL && self.level != AbstractionLevel::None {
                    true
                } else if k == kind::IDENTIFIER && self.level == AbstractionLevel::IdentifiersAndLiterals {
                    b.bind(p, t)
                } else {
                    p == t
                }
            }
            _ => false,
        }
    }

    /// Shape match of `pat` against `node`, extending `b`. `b` is left
    /// untouched on failure. Move markers match any node of their kind.
    fn matches(&self, pat: &ShapeNode, node: &SyntaxNode, b: &mut Binding) -> bool {
        if pat.kind != node.kind {
            return false;
        }
        if pat.role == Role::Move {
            return true;
        }
        let saved = b.clone();
        let ok = self.token_ok(&pat.kind, pat.token.as_deref(), node.token.as_deref(), b) && {
            let kids: Vec<&SyntaxNode> = visible(node).collect();
            kids.len() == pat.children.len() && pat.children.iter().zip(kids).all(|(p, n)| self.matches(p, n, b))
        };
        if !ok {
            *b = saved;
        }
        ok
    }

    fn occurs(&self, pat: &ShapeNode, unit: &SyntaxNode, b: &Binding) -> bool {
        unit.preorder().any(|n| self.matches(pat, n, &mut b.clone()))
    }
}

struct AnchorHit<'t> {
    parent: &'t SyntaxNode,
    span: Span,
    binding: Binding,
}

fn anchor_hits<'t>(m: &Matcher, item: &EffectItem, unit: &'t SyntaxNode) -> Vec<AnchorHit<'t>> {
    if item.chain.first().map(String::as_str) != Some(unit.kind.as_str()) {
        return Vec::new();
    }
    let mut level: Vec<&SyntaxNode> = vec![unit];
    for k in &item.chain[1..] {
        level = level.iter().flat_map(|n| n.children.iter().filter(|c| &c.kind == k)).collect();
    }
    let mut hits = Vec::new();
    for l in level {
        match &item.sibling {
            None => hits.push(AnchorHit {
                parent: l,
                span: l.span,
                binding: Binding::default(),
            }),
            Some(sib) => {
                for c in visible(l) {
                    let mut b = Binding::default();
                    if m.matches(sib, c, &mut b) {
                        hits.push(AnchorHit {
                            parent: l,
                            span: c.span,
                            binding: b,
                        });
                    }
                }
            }
        }
    }
    hits
}

fn plain_shape(n: &SyntaxNode) -> ShapeNode {
    let mut s = ShapeNode::new(Role::Plain, n.kind.clone(), n.token.clone());
    s.children = visible(n).map(plain_shape).collect();
    s
}

enum Verdict {
    Fixed,
    Undecidable,
    Missing(Evidence, Option<f64>, Span),
}

fn judge(m: &Matcher, items: &[&EffectItem], unit: &SyntaxNode) -> Option<Verdict> {
    let mut hits = Vec::with_capacity(items.len());
    for item in items {
        let h = anchor_hits(m, item, unit);
        if h.is_empty() {
            return None;
        }
        hits.push(h);
    }
    let by_role = |r: Role| items.iter().zip(&hits).filter(move |(i, _)| i.action.role == r);

    if by_role(Role::Insert).next().is_some() {
        for (item, h) in by_role(Role::Insert) {
            if h.iter().any(|hit| m.occurs(&item.action, unit, &hit.binding)) {
                continue;
            }
            let mut wanted = item.action.clone();
            wanted.role = Role::Plain;
            let wanted = wanted.abstracted(m.level);
            let mut best: Option<f64> = None;
            for hit in h {
                for c in visible(hit.parent).filter(|c| c.kind == item.action.kind) {
                    let s = shape_similarity(&plain_shape(c).abstracted(m.level), &wanted);
                    best = Some(best.map_or(s, |b: f64| b.max(s)));
                }
            }
            let span = h[0].span;
            return Some(match best {
                Some(s) if s > PRESENT_BUT_DIFFERENT_THRESHOLD => Verdict::Missing(Evidence::PresentButDifferent, Some(s), span),
                _ => Verdict::Missing(Evidence::Absent, None, span),
            });
        }
        return Some(Verdict::Fixed);
    }
    if by_role(Role::Delete).next().is_some() {
        for (item, h) in by_role(Role::Delete) {
            if h.iter().any(|hit| m.occurs(&item.action, unit, &hit.binding)) {
                return Some(Verdict::Missing(Evidence::Absent, None, h[0].span));
            }
        }
        return Some(Verdict::Fixed);
    }
    let concrete: Vec<_> = by_role(Role::Update).filter(|(i, _)| !abstracted_kind(m.level, &i.action.kind)).collect();
    if concrete.is_empty() {
        return Some(Verdict::Undecidable);
    }
    for (item, h) in concrete {
        let present = unit
            .preorder()
            .any(|n| n.kind == item.action.kind && n.token.is_some() && n.token == item.action.new_token);
        if !present {
            return Some(Verdict::Missing(Evidence::Absent, None, h[0].span));
        }
    }
    Some(Verdict::Fixed)
}

fn scan_file(query: &AnchorQuery, path: &str, tree: &SyntaxTree, patched: &[Site]) -> Vec<OmissionSite> {
    let m = Matcher { level: query.level };
    let groups: usize = query.effect.iter().map(|e| e.group + 1).max().unwrap_or(0);
    let mut units: Vec<(&SyntaxNode, String)> = vec![(&tree.root, FILE_SCOPE.to_string())];
    for c in &tree.root.children {
        if c.kind == kind::FUNCTION_DEF {
            units.push((c, c.function_name().unwrap_or(FILE_SCOPE).to_string()));
        }
    }
    let is_patched = |f: &str| patched.iter().any(|s| s.file_path == path && s.functions().any(|g| g == f));
    let mut out = Vec::new();
    for (unit, name) in units {
        if is_patched(&name) {
            continue;
        }
        for g in 0..groups {
            let items: Vec<&EffectItem> = query.effect.iter().filter(|e| e.group == g).collect();
            if let Some(Verdict::Missing(evidence, closest, span)) = judge(&m, &items, unit) {
                out.push(OmissionSite {
                    file_path: path.to_string(),
                    function: name.clone(),
                    span,
                    evidence,
                    closest,
                });
                break;
            }
        }
    }
    out
}

/// Find sites in `snapshot` that match the query's anchor but lack its
/// effect. Sites listed in `patched` are never reported.
pub fn scan_omissions(query: &AnchorQuery, snapshot: &[(String, SyntaxTree)], patched: &[Site]) -> Result<Vec<OmissionSite>> {
    if let Some((_, t)) = snapshot.iter().find(|(_, t)| t.grammar_id != query.grammar_id) {
        return Err(Error::GrammarMismatch {
            left: query.grammar_id.clone(),
            right: t.grammar_id.clone(),
        });
    }
    let per_file: Vec<Vec<OmissionSite>> = snapshot.par_iter().map(|(p, t)| scan_file(query, p, t, patched)).collect();
    let mut out: Vec<OmissionSite> = per_file.into_iter().flatten().collect();
    out.sort_by(|a, b| (&a.file_path, a.span.start, a.span.end).cmp(&(&b.file_path, b.span.start, b.span.end)));
    Ok(out)
}
