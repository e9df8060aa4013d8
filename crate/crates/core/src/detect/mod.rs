//! Per-CVE fingerprint graphs, candidate reports and omission scanning.
//!
//! A Fix-0 that applies one fingerprint at several sites is a candidate for
//! a "missing similar component" fix. Its pattern is split into an anchor
//! (the unchanged context) and an effect (the edit), and a code snapshot is
//! scanned for sites that match the anchor but lack the effect.

mod scan;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{CveId, FineGrainedPatch};
use crate::error::{Error, Result};
use crate::pattern::{abstract_pattern, enrich, fingerprint, AbstractionLevel, Fingerprint, FixPattern, Role, ShapeNode};
use crate::syntax::{kind, parse_source, SyntaxTree};
use crate::treediff::{diff, MatchConfig};

pub use scan::{scan_omissions, Evidence, OmissionSite, PRESENT_BUT_DIFFERENT_THRESHOLD};

pub const DEFAULT_K: usize = 2;
pub const FILE_SCOPE: &str = "TranslationUnit";

/// Where a fingerprint was applied: a file and the functions touched
/// (comma-joined), or `TranslationUnit` for file-scope changes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub file_path: String,
    pub function: String,
}

impl Site {
    /// Individual function names covered by this site.
    pub fn functions(&self) -> impl Iterator<Item = &str> {
        self.function.split(',')
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    pub matching: MatchConfig,
    pub level: AbstractionLevel,
    /// Extraction fails when more than this share of either tree's leaves
    /// are Unknown.
    pub max_unknown_ratio: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            matching: MatchConfig::default(),
            level: AbstractionLevel::default(),
            max_unknown_ratio: 0.5,
        }
    }
}

/// Outcome of pattern extraction for one fine-grained patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchPattern {
    pub cve_id: CveId,
    pub commit_hash: String,
    pub fix_index: usize,
    pub file_path: String,
    pub site: Site,
    pub pattern: Option<FixPattern>,
    pub fingerprint: Option<Fingerprint>,
    pub failure: Option<String>,
}

fn unknown_ratio(t: &SyntaxTree) -> f64 {
    let (mut unknown, mut total) = (0usize, 0usize);
    for l in t.root.leaves() {
        total += 1;
        if l.kind == kind::UNKNOWN {
            unknown += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        unknown as f64 / total as f64
    }
}

/// Parse, diff, enrich and abstract one patch. Failures are reported in the
/// result rather than as errors so they can be recorded in the graph.
pub fn extract_pattern(patch: &FineGrainedPatch, grammar_id: &str, cfg: &ExtractConfig) -> Result<PatchPattern> {
    let mut out = PatchPattern {
        cve_id: patch.cve_id.clone(),
        commit_hash: patch.commit_hash.clone(),
        fix_index: patch.fix_index,
        file_path: patch.file_path.clone(),
        site: Site {
            file_path: patch.file_path.clone(),
            function: FILE_SCOPE.into(),
        },
        pattern: None,
        fingerprint: None,
        failure: None,
    };
    let before = parse_source(&patch.before_text, grammar_id)?;
    let after = parse_source(&patch.after_text, grammar_id)?;
    for (side, t) in [("before", &before), ("after", &after)] {
        let r = unknown_ratio(t);
        if r > cfg.max_unknown_ratio {
            out.failure = Some(format!("{side} snapshot is {:.0}% unparsed", r * 100.0));
            return Ok(out);
        }
    }
    let (_, script) = diff(&before, &after, &cfg.matching)?;
    if script.is_empty() {
        out.failure = Some("no structural change".into());
        return Ok(out);
    }
    let rich = enrich(&script, &before, &after)?;
    let mut names = rich.functions();
    if rich.touches_file_scope() || names.is_empty() {
        names.push(FILE_SCOPE.into());
    }
    out.site.function = names.join(",");
    let pattern = abstract_pattern(&rich, cfg.level);
    out.fingerprint = Some(fingerprint(&pattern));
    out.pattern = Some(pattern);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub fingerprint: Fingerprint,
    pub pattern: FixPattern,
    pub sites: Vec<Site>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedExtraction {
    pub site: Site,
    pub reason: String,
}

/// A CVE and the fingerprints its Fix-0 applied, with their sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixPatternGraph {
    pub cve_id: CveId,
    pub nodes: Vec<GraphNode>,
    pub failed: Vec<FailedExtraction>,
}

impl FixPatternGraph {
    pub fn site_count(&self) -> usize {
        self.nodes.iter().map(|n| n.sites.len()).sum()
    }
}

/// Group one CVE's Fix-0 extractions by fingerprint. Nodes are ordered by
/// descending site count, then digest.
pub fn build_graph(cve_id: &CveId, extracted: &[PatchPattern]) -> Result<FixPatternGraph> {
    let mut nodes: BTreeMap<_, GraphNode> = BTreeMap::new();
    let mut failed = Vec::new();
    for e in extracted {
        if &e.cve_id != cve_id {
            return Err(Error::MixedCve {
                expected: cve_id.to_string(),
                found: e.cve_id.to_string(),
            });
        }
        if e.fix_index != 0 {
            return Err(Error::InvalidRecord {
                cve_id: cve_id.to_string(),
                message: format!("{} comes from Fix-{}, graphs take Fix-0 only", e.file_path, e.fix_index),
            });
        }
        match (&e.fingerprint, &e.pattern) {
            (Some(fp), Some(p)) => {
                let node = nodes.entry(fp.digest).or_insert_with(|| GraphNode {
                    fingerprint: fp.clone(),
                    pattern: p.clone(),
                    sites: Vec::new(),
                });
                if !node.sites.contains(&e.site) {
                    node.sites.push(e.site.clone());
                }
            }
            _ => failed.push(FailedExtraction {
                site: e.site.clone(),
                reason: e.failure.clone().unwrap_or_else(|| "no pattern".into()),
            }),
        }
    }
    let mut nodes: Vec<GraphNode> = nodes.into_values().collect();
    for n in &mut nodes {
        n.sites.sort();
    }
    nodes.sort_by(|a, b| b.sites.len().cmp(&a.sites.len()).then(a.fingerprint.digest.cmp(&b.fingerprint.digest)));
    failed.sort_by(|a, b| a.site.cmp(&b.site));
    Ok(FixPatternGraph {
        cve_id: cve_id.clone(),
        nodes,
        failed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub cve_id: CveId,
    pub fingerprint: Fingerprint,
    pub multiplicity: usize,
    pub sites: Vec<Site>,
    pub omissions: Vec<OmissionSite>,
    pub score: usize,
}

/// Report every fingerprint applied at `k` or more sites, strongest first.
pub fn detect_candidates(graphs: &[FixPatternGraph], k: usize) -> Result<Vec<CandidateReport>> {
    if k < 2 {
        return Err(Error::Config(format!("detection threshold k must be at least 2, got {k}")));
    }
    let mut out: Vec<CandidateReport> = graphs
        .iter()
        .flat_map(|g| {
            g.nodes.iter().filter(|n| n.sites.len() >= k).map(|n| CandidateReport {
                cve_id: g.cve_id.clone(),
                fingerprint: n.fingerprint.clone(),
                multiplicity: n.sites.len(),
                sites: n.sites.clone(),
                omissions: Vec::new(),
                score: n.sites.len(),
            })
        })
        .collect();
    out.sort_by(|a, b| {
        b.score
            .cmp(&a.score)
            .then_with(|| a.cve_id.cmp(&b.cve_id))
            .then_with(|| a.fingerprint.digest.cmp(&b.fingerprint.digest))
    });
    Ok(out)
}

/// One action of a pattern with the context it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectItem {
    /// Index of the top-level context this item belongs to.
    pub group: usize,
    /// Context kinds from the top context down to the action's parent.
    pub chain: Vec<String>,
    pub sibling: Option<ShapeNode>,
    /// The action subtree without its sibling.
    pub action: ShapeNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorQuery {
    pub level: AbstractionLevel,
    pub grammar_id: String,
    /// Context skeleton: the pattern's top-level contexts with action nodes
    /// removed and siblings kept.
    pub anchor: Vec<ShapeNode>,
    pub effect: Vec<EffectItem>,
}

impl AnchorQuery {
    pub fn anchor_size(&self) -> usize {
        self.anchor.iter().map(ShapeNode::size).sum()
    }
}

fn skeleton(n: &ShapeNode) -> ShapeNode {
    let mut out = ShapeNode::new(n.role, n.kind.clone(), n.token.clone());
    for c in &n.children {
        match c.role {
            Role::Context => out.children.push(skeleton(c)),
            r if r.is_action() => out.children.extend(c.children.iter().filter(|s| s.role == Role::Sibling).cloned()),
            _ => {}
        }
    }
    out
}

fn collect_effects(n: &ShapeNode, group: usize, chain: &mut Vec<String>, out: &mut Vec<EffectItem>) {
    for c in &n.children {
        if c.role == Role::Context {
            chain.push(c.kind.clone());
            collect_effects(c, group, chain, out);
            chain.pop();
        } else if c.role.is_action() {
            let mut action = c.clone();
            let sibling = action.children.iter().position(|s| s.role == Role::Sibling).map(|i| action.children.remove(i));
            out.push(EffectItem {
                group,
                chain: chain.clone(),
                sibling,
                action,
            });
        }
    }
}

/// Split a pattern into anchor and effect.
pub fn anchor_query(pattern: &FixPattern) -> Result<AnchorQuery> {
    let mut effect = Vec::new();
    let mut anchor = Vec::new();
    for (group, top) in pattern.shape.children.iter().enumerate() {
        if top.role != Role::Context {
            return Err(Error::InvalidPattern(format!("action {} {} has no context", top.role.head_name(), top.kind)));
        }
        anchor.push(skeleton(top));
        let mut chain = vec![top.kind.clone()];
        collect_effects(top, group, &mut chain, &mut effect);
    }
    if anchor.is_empty() {
        return Err(Error::InvalidPattern("pattern has no context".into()));
    }
    if effect.is_empty() {
        return Err(Error::InvalidPattern("pattern has no actions".into()));
    }
    Ok(AnchorQuery {
        level: pattern.level,
        grammar_id: pattern.grammar_id.clone(),
        anchor,
        effect,
    })
}

#[cfg(test)]
mod tests;
