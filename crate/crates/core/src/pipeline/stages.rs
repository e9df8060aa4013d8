use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::*;
use crate::corpus::{self, CveRecord, FineGrainedPatch};
use crate::detect::{self, anchor_query, build_graph, detect_candidates, scan_omissions, CandidateReport, ExtractConfig, FixPatternGraph, PatchPattern};
use crate::pattern::{cluster, write_store, FingerprintRecord, PatternCluster, Provenance};
use crate::stats::{self, Aggregate};
use crate::syntax::{parse_source, SyntaxTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CveState {
    Processed,
    Skipped,
    Failed,
}

/// How one manifest CVE fared. `stage` and `reason` are set for skipped and
/// failed CVEs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CveStatus {
    pub cve_id: String,
    pub state: CveState,
    pub stage: Option<Stage>,
    pub reason: Option<String>,
}

/// Counts written by the report stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub cves: usize,
    pub processed: usize,
    pub skipped: usize,
    pub failed: usize,
    pub patches: usize,
    pub patterns: usize,
    pub failed_extractions: usize,
    pub fingerprints: usize,
    pub clusters: usize,
    pub candidates: usize,
    pub omissions: usize,
    pub statuses: Vec<CveStatus>,
}

pub(super) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    serde_json::from_str(&text).map_err(|e| Error::json(name, e))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::json(name, e))?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(super) fn run(cfg: &RunConfig, stage: Stage) -> Result<StageReport> {
    log::info!("stage {stage}");
    let (items, failed_cves) = match stage {
        Stage::Ingest => ingest(cfg)?,
        Stage::Mine => mine(cfg)?,
        Stage::Cluster => (cluster_stage(cfg)?, Vec::new()),
        Stage::Detect => (detect_stage(cfg)?, Vec::new()),
        Stage::Scan => (scan(cfg)?, Vec::new()),
        Stage::Stats => (stats_stage(cfg)?, Vec::new()),
        Stage::Report => (report(cfg)?, Vec::new()),
    };
    Ok(StageReport { stage, items, failed_cves })
}

fn failed(cve_id: &str, stage: Stage, reason: String) -> CveStatus {
    log::warn!("{cve_id}: {stage} failed: {reason}");
    CveStatus {
        cve_id: cve_id.to_string(),
        state: CveState::Failed,
        stage: Some(stage),
        reason: Some(reason),
    }
}

fn ingest_record(cfg: &RunConfig, r: &CveRecord) -> Result<Vec<FineGrainedPatch>> {
    let snaps = cfg.corpus_root.join(SNAPSHOT_DIR);
    let mut out = Vec::new();
    for (i, f) in r.fixes.iter().enumerate() {
        let (before, after) = corpus::load_snapshots(&snaps, f)?;
        out.extend(corpus::split_patch(&r.cve_id, i, f, &before, &after)?);
    }
    Ok(out)
}

fn ingest(cfg: &RunConfig) -> Result<(usize, Vec<String>)> {
    let path = cfg.manifest_path();
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let entries = corpus::parse_manifest_partial(&text, &base)?;

    let results: Vec<(CveStatus, Vec<FineGrainedPatch>)> = entries
        .par_iter()
        .map(|e| {
            let id = e.record.cve_id.to_string();
            if let Some(p) = &e.problem {
                return (failed(&id, Stage::Ingest, p.clone()), Vec::new());
            }
            if let Some(why) = &e.record.excluded {
                let st = CveStatus {
                    cve_id: id,
                    state: CveState::Skipped,
                    stage: Some(Stage::Ingest),
                    reason: Some(format!("excluded: {why}")),
                };
                return (st, Vec::new());
            }
            match ingest_record(cfg, &e.record) {
                Ok(patches) => (
                    CveStatus {
                        cve_id: id,
                        state: CveState::Processed,
                        stage: None,
                        reason: None,
                    },
                    patches,
                ),
                Err(err) => (failed(&id, Stage::Ingest, err.to_string()), Vec::new()),
            }
        })
        .collect();

    let records: Vec<CveRecord> = entries.iter().filter(|e| e.problem.is_none()).map(|e| e.record.clone()).collect();
    write_text(&cfg.out(RECORDS_FILE), &corpus::render_manifest(&records))?;
    let patches: Vec<FineGrainedPatch> = results.iter().flat_map(|(_, p)| p.iter().cloned()).collect();
    corpus::store_corpus(&patches, &cfg.out(CORPUS_DIR))?;
    let statuses: Vec<CveStatus> = results.into_iter().map(|(s, _)| s).collect();
    let failed_cves = statuses.iter().filter(|s| s.state == CveState::Failed).map(|s| s.cve_id.clone()).collect();
    write_json(&cfg.out(STATUS_FILE), &statuses)?;
    Ok((patches.len(), failed_cves))
}

fn mine(cfg: &RunConfig) -> Result<(usize, Vec<String>)> {
    let patches = corpus::load_store(&cfg.out(CORPUS_DIR))?;
    let mut statuses: Vec<CveStatus> = read_json(&cfg.out(STATUS_FILE))?;
    let ecfg = ExtractConfig {
        matching: cfg.matching,
        level: cfg.level,
        max_unknown_ratio: cfg.max_unknown_ratio,
    };
    let results: Vec<Result<PatchPattern>> = patches.par_iter().map(|p| detect::extract_pattern(p, &cfg.grammar_id, &ecfg)).collect();

    let mut errors: BTreeMap<String, String> = BTreeMap::new();
    for (p, r) in patches.iter().zip(&results) {
        if let Err(e) = r {
            errors.entry(p.cve_id.to_string()).or_insert_with(|| format!("{} {}: {e}", p.commit_hash, p.file_path));
        }
    }
    let patterns: Vec<PatchPattern> = results
        .into_iter()
        .filter_map(|r| r.ok())
        .filter(|p| !errors.contains_key(p.cve_id.as_str()))
        .collect();
    for s in &mut statuses {
        if let Some(reason) = errors.get(&s.cve_id) {
            *s = failed(&s.cve_id, Stage::Mine, reason.clone());
        }
    }
    write_json(&cfg.out(STATUS_FILE), &statuses)?;
    write_json(&cfg.out(PATTERNS_FILE), &patterns)?;

    let mut by_digest: BTreeMap<String, FingerprintRecord> = BTreeMap::new();
    let mut order = Vec::new();
    for p in &patterns {
        let Some(fp) = &p.fingerprint else { continue };
        let key = fp.digest.to_string();
        let rec = by_digest.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            FingerprintRecord {
                digest: fp.digest,
                level: cfg.level,
                canonical: fp.canonical.clone(),
                provenance: Vec::new(),
            }
        });
        rec.provenance.push(provenance(p));
    }
    let records: Vec<FingerprintRecord> = order.iter().map(|k| by_digest[k].clone()).collect();
    write_store(&cfg.out(FINGERPRINTS_FILE), &records)?;
    Ok((patterns.len(), errors.into_keys().collect()))
}

fn provenance(p: &PatchPattern) -> Provenance {
    Provenance {
        cve_id: p.cve_id.to_string(),
        commit: p.commit_hash.clone(),
        file_path: p.file_path.clone(),
    }
}

fn cluster_stage(cfg: &RunConfig) -> Result<usize> {
    let patterns: Vec<PatchPattern> = read_json(&cfg.out(PATTERNS_FILE))?;
    let input: Vec<_> = patterns.iter().filter_map(|p| p.pattern.clone().map(|pat| (provenance(p), pat))).collect();
    let clusters = cluster(&input, cfg.cluster_threshold)?;
    write_json(&cfg.out(CLUSTERS_FILE), &clusters)?;
    Ok(clusters.len())
}

fn detect_stage(cfg: &RunConfig) -> Result<usize> {
    let patterns: Vec<PatchPattern> = read_json(&cfg.out(PATTERNS_FILE))?;
    let statuses: Vec<CveStatus> = read_json(&cfg.out(STATUS_FILE))?;
    let mut by_cve: BTreeMap<String, Vec<PatchPattern>> = statuses
        .iter()
        .filter(|s| s.state == CveState::Processed)
        .map(|s| (s.cve_id.clone(), Vec::new()))
        .collect();
    for p in patterns.into_iter().filter(|p| p.fix_index == 0) {
        if let Some(v) = by_cve.get_mut(p.cve_id.as_str()) {
            v.push(p);
        }
    }
    let graphs: Vec<FixPatternGraph> = by_cve
        .par_iter()
        .map(|(id, ps)| {
            let id = id.parse().map_err(|_| Error::InvalidCveId(id.clone()))?;
            build_graph(&id, ps)
        })
        .collect::<Result<_>>()?;
    write_json(&cfg.out(GRAPHS_FILE), &graphs)?;
    let candidates = detect_candidates(&graphs, cfg.k)?;
    write_json(&cfg.out(CANDIDATES_FILE), &candidates)?;
    Ok(candidates.len())
}

/// Parse every `.c`/`.h` file under `root`, keyed by `/`-separated relative
/// path, in path order.
fn parse_tree(root: &Path, grammar_id: &str) -> Result<Vec<(String, SyntaxTree)>> {
    let mut files = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let p = e.path().map(Path::to_path_buf).unwrap_or_else(|| root.to_path_buf());
            Error::io(p, e.into())
        })?;
        let p = entry.path();
        if !entry.file_type().is_file() || !matches!(p.extension().and_then(|x| x.to_str()), Some("c" | "h")) {
            continue;
        }
        let rel = p.strip_prefix(root).unwrap_or(p);
        let key = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        files.push((key, p.to_path_buf()));
    }
    files.sort();
    files
        .par_iter()
        .map(|(key, p)| {
            let bytes = fs::read(p).map_err(|e| Error::io(p, e))?;
            let text = String::from_utf8_lossy(&bytes);
            Ok((key.clone(), parse_source(&text, grammar_id)?))
        })
        .collect()
}

fn scan(cfg: &RunConfig) -> Result<usize> {
    let mut candidates: Vec<CandidateReport> = read_json(&cfg.out(CANDIDATES_FILE))?;
    let graphs: Vec<FixPatternGraph> = read_json(&cfg.out(GRAPHS_FILE))?;
    let root = cfg.corpus_root.join(SCAN_DIR);
    let files = if root.is_dir() {
        parse_tree(&root, &cfg.grammar_id)?
    } else {
        log::info!("no {SCAN_DIR}/ directory in the corpus; nothing to scan");
        Vec::new()
    };
    let mut total = 0;
    for c in &mut candidates {
        let pattern = graphs
            .iter()
            .filter(|g| g.cve_id == c.cve_id)
            .flat_map(|g| &g.nodes)
            .find(|n| n.fingerprint.digest == c.fingerprint.digest)
            .map(|n| &n.pattern);
        let Some(pattern) = pattern else {
            return Err(Error::InvalidPattern(format!("{}: no graph node for {}", c.cve_id, c.fingerprint.digest)));
        };
        match anchor_query(pattern) {
            Ok(q) => {
                c.omissions = scan_omissions(&q, &files, &c.sites)?;
                total += c.omissions.len();
            }
            Err(e) => log::warn!("{} {}: not scannable: {e}", c.cve_id, c.fingerprint.digest),
        }
    }
    write_json(&cfg.out(SCAN_FILE), &candidates)?;
    Ok(total)
}

fn stats_stage(cfg: &RunConfig) -> Result<usize> {
    let text = fs::read_to_string(cfg.out(RECORDS_FILE)).map_err(|e| Error::io(cfg.out(RECORDS_FILE), e))?;
    let records = corpus::parse_manifest(&text, &cfg.out_dir)?;
    let agg = stats::aggregate(&records);
    write_text(&cfg.out(STATS_CSV), &agg.to_csv())?;
    write_text(&cfg.out(STATS_JSON), &agg.to_json())?;
    Ok(agg.rows.len())
}

fn report(cfg: &RunConfig) -> Result<usize> {
    let statuses: Vec<CveStatus> = read_json(&cfg.out(STATUS_FILE))?;
    let patterns: Vec<PatchPattern> = read_json(&cfg.out(PATTERNS_FILE))?;
    let clusters: Vec<PatternCluster> = read_json(&cfg.out(CLUSTERS_FILE))?;
    let scanned: Vec<CandidateReport> = read_json(&cfg.out(SCAN_FILE))?;
    let agg: Aggregate = read_json(&cfg.out(STATS_JSON))?;
    let patches = corpus::load_store(&cfg.out(CORPUS_DIR))?.len();

    let count = |st: CveState| statuses.iter().filter(|s| s.state == st).count();
    let digests: BTreeSet<String> = patterns.iter().filter_map(|p| p.fingerprint.as_ref()).map(|f| f.digest.to_string()).collect();
    let summary = Summary {
        cves: statuses.len(),
        processed: count(CveState::Processed),
        skipped: count(CveState::Skipped),
        failed: count(CveState::Failed),
        patches,
        patterns: patterns.iter().filter(|p| p.pattern.is_some()).count(),
        failed_extractions: patterns.iter().filter(|p| p.failure.is_some()).count(),
        fingerprints: digests.len(),
        clusters: clusters.len(),
        candidates: scanned.len(),
        omissions: scanned.iter().map(|c| c.omissions.len()).sum(),
        statuses,
    };
    write_json(&cfg.out(SUMMARY_FILE), &summary)?;
    write_text(&cfg.out(REPORT_FILE), &render_report(cfg, &summary, &scanned, &agg))?;
    Ok(summary.cves)
}

fn render_report(cfg: &RunConfig, s: &Summary, scanned: &[CandidateReport], agg: &Aggregate) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "CVEs: {} ({} processed, {} skipped, {} failed)", s.cves, s.processed, s.skipped, s.failed);
    let _ = writeln!(w, "fine-grained patches: {}", s.patches);
    let _ = writeln!(w, "patterns: {} extracted, {} not extracted", s.patterns, s.failed_extractions);
    let _ = writeln!(w, "fingerprints: {} distinct in {} clusters", s.fingerprints, s.clusters);
    let _ = writeln!(w, "candidates (k = {}): {}, omissions: {}", cfg.k, s.candidates, s.omissions);
    for c in scanned {
        let _ = writeln!(w);
        let _ = writeln!(w, "{} fingerprint {} applied at {} sites", c.cve_id, c.fingerprint.digest, c.multiplicity);
        for site in &c.sites {
            let _ = writeln!(w, "  patched  {} {}", site.file_path, site.function);
        }
        for o in &c.omissions {
            let _ = write!(w, "  missing  {} {} bytes {}..{} ({})", o.file_path, o.function, o.span.start, o.span.end, evidence_name(o.evidence));
            if let Some(sim) = o.closest {
                let _ = write!(w, " similarity {sim:.3}");
            }
            let _ = writeln!(w);
        }
    }
    let troubled: Vec<&CveStatus> = s.statuses.iter().filter(|st| st.state != CveState::Processed).collect();
    if !troubled.is_empty() {
        let _ = writeln!(w);
        for st in troubled {
            let state = if st.state == CveState::Failed { "failed" } else { "skipped" };
            let stage = st.stage.map(Stage::as_str).unwrap_or("-");
            let _ = writeln!(w, "{} {state} at {stage}: {}", st.cve_id, st.reason.as_deref().unwrap_or(""));
        }
    }
    if !agg.table.is_empty() {
        let _ = writeln!(w);
        let _ = writeln!(w, "fix      n  files          added          deleted        modified       bytes");
        for r in &agg.table {
            let cell = |m: &stats::MeanStd| format!("{:.2}/{:.2}", m.mean, m.std);
            let _ = writeln!(
                w,
                "Fix-{:<3} {:>3}  {:<14} {:<14} {:<14} {:<14} {}",
                r.fix_index,
                r.count,
                cell(&r.files_modified),
                cell(&r.loc_added),
                cell(&r.loc_deleted),
                cell(&r.loc_modified),
                cell(&r.patch_bytes)
            );
        }
    }
    out
}

fn evidence_name(e: detect::Evidence) -> &'static str {
    match e {
        detect::Evidence::Absent => "absent",
        detect::Evidence::PresentButDifferent => "present but different",
    }
}
