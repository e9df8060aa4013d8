//! CVE fix manifests, fine-grained per-file patches and their on-disk store.

pub mod diff;
mod store;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use diff::{apply_hunks, parse_unified, FilePatch, Hunk, HunkLine, LineKind};
pub use store::{encode_path, load_store, store_corpus, StoreEntry, StoreReport, INDEX_FILE};

/// Validated CVE identifier, `CVE-YYYY-N` with year >= 1999 and N >= 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CveId(String);

impl CveId {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn year(&self) -> i32 {
        self.0[4..8].parse().unwrap()
    }
}

impl FromStr for CveId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidCveId(s.to_string());
        let rest = s.strip_prefix("CVE-").ok_or_else(bad)?;
        let (year, num) = rest.split_once('-').ok_or_else(bad)?;
        let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
        if year.len() != 4 || !digits(year) || !digits(num) {
            return Err(bad());
        }
        let y: u32 = year.parse().map_err(|_| bad())?;
        let n: u64 = num.parse().map_err(|_| bad())?;
        if y < 1999 || n < 1 {
            return Err(bad());
        }
        Ok(CveId(s.to_string()))
    }
}

impl TryFrom<String> for CveId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CveId> for String {
    fn from(c: CveId) -> String {
        c.0
    }
}

impl fmt::Display for CveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    PreFixMisled,
    InFixMissingSimilar,
    PostFixSemanticError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sublevel {
    Variable,
    Function,
    Resource,
    AccessControl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootCauseLabel {
    pub phase: Phase,
    #[serde(default)]
    pub sublevel: Option<Sublevel>,
}

impl RootCauseLabel {
    pub fn validate(&self) -> std::result::Result<(), String> {
        match (self.phase, self.sublevel) {
            (Phase::PostFixSemanticError, None) => Err("post_fix_semantic_error needs a sublevel".into()),
            (Phase::PostFixSemanticError, Some(_)) | (_, None) => Ok(()),
            (_, Some(_)) => Err("sublevel is only allowed with post_fix_semantic_error".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixEvent {
    pub commit_hash: String,
    pub commit_date: NaiveDate,
    pub associated_cve: Option<CveId>,
    pub diff_text: String,
    pub touched_files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CveRecord {
    pub cve_id: CveId,
    pub vuln_type: String,
    pub root_cause: Option<RootCauseLabel>,
    pub description: String,
    pub fixes: Vec<FixEvent>,
    /// Reason the record is kept but left out of analysis, e.g. an
    /// unavailable patch.
    pub excluded: Option<String>,
}

impl CveRecord {
    pub fn is_incomplete_fix(&self) -> bool {
        self.fixes.len() >= 2
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if let Some(rc) = &self.root_cause {
            rc.validate()?;
        }
        if self.fixes.is_empty() && self.excluded.is_none() {
            return Err("fixes must not be empty".into());
        }
        for (i, w) in self.fixes.windows(2).enumerate() {
            if w[1].commit_date < w[0].commit_date {
                return Err(format!("Fix-{} date {} precedes Fix-{} date {}", i + 1, w[1].commit_date, i, w[0].commit_date));
            }
        }
        for (i, f) in self.fixes.iter().enumerate() {
            let named: BTreeSet<String> = parse_unified(&f.diff_text)
                .map_err(|e| format!("Fix-{i}: {e}"))?
                .iter()
                .map(|p| p.path().to_string())
                .collect();
            let touched: BTreeSet<String> = f.touched_files.iter().cloned().collect();
            if touched.len() != f.touched_files.len() {
                return Err(format!("Fix-{i}: touched_files lists a path twice"));
            }
            if named != touched {
                return Err(format!("Fix-{i}: touched_files {touched:?} differ from diff headers {named:?}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestLine {
    cve_id: String,
    vuln_type: String,
    #[serde(default)]
    root_cause: Option<RootCauseLabel>,
    #[serde(default)]
    description: String,
    fixes: Vec<ManifestFix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    excluded: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFix {
    commit_hash: String,
    commit_date: NaiveDate,
    #[serde(default)]
    associated_cve: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diff_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diff_inline: Option<String>,
    touched_files: Vec<String>,
}

/// Load a JSON-lines manifest. `diff_path` entries resolve against the
/// manifest's directory. Blank lines are skipped.
pub fn load_manifest(path: &Path) -> Result<Vec<CveRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_manifest(&text, &base)
}

/// Parse manifest text; `base` resolves relative `diff_path` entries.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<CveRecord>> {
    parse_manifest_partial(text, base)?
        .into_iter()
        .map(|e| match e.problem {
            None => Ok(e.record),
            Some(message) => Err(Error::Manifest { line: e.line, message }),
        })
        .collect()
}

/// A manifest line whose record could be read. `problem` is set when the
/// record fails validation or a referenced diff cannot be read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub line: usize,
    pub record: CveRecord,
    pub problem: Option<String>,
}

/// Like [`parse_manifest`], but a record-level problem is returned with the
/// record instead of failing the whole manifest. Unparseable lines and
/// duplicate ids are still errors.
pub fn parse_manifest_partial(text: &str, base: &Path) -> Result<Vec<ManifestEntry>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Manifest { line: line_no, message };
        let raw: ManifestLine = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let cve_id: CveId = raw.cve_id.parse().map_err(|e: Error| err(e.to_string()))?;
        if !seen.insert(cve_id.clone()) {
            return Err(Error::DuplicateCve(cve_id.to_string()));
        }
        let mut problem = None;
        let mut fixes = Vec::with_capacity(raw.fixes.len());
        for (i, f) in raw.fixes.into_iter().enumerate() {
            let diff_text = match (f.diff_path, f.diff_inline) {
                (Some(p), None) => match fs::read_to_string(base.join(&p)) {
                    Ok(t) => t,
                    Err(e) => {
                        problem.get_or_insert(format!("{cve_id}: Fix-{i} diff {p}: {e}"));
                        String::new()
                    }
                },
                (None, Some(d)) => d,
                _ => return Err(err(format!("Fix-{i} needs exactly one of diff_path and diff_inline"))),
            };
            let associated_cve = f
                .associated_cve
                .map(|c| c.parse::<CveId>())
                .transpose()
                .map_err(|e| err(format!("Fix-{i}: {e}")))?;
            fixes.push(FixEvent {
                commit_hash: f.commit_hash,
                commit_date: f.commit_date,
                associated_cve,
                diff_text,
                touched_files: f.touched_files,
            });
        }
        let record = CveRecord {
            cve_id,
            vuln_type: raw.vuln_type,
            root_cause: raw.root_cause,
            description: raw.description,
            fixes,
            excluded: raw.excluded,
        };
        if problem.is_none() {
            problem = record.validate().err().map(|m| format!("{}: {m}", record.cve_id));
        }
        out.push(ManifestEntry {
            line: line_no,
            record,
            problem,
        });
    }
    Ok(out)
}

/// Serialize records as a manifest with inline diffs.
pub fn render_manifest(records: &[CveRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let line = ManifestLine {
            cve_id: r.cve_id.to_string(),
            vuln_type: r.vuln_type.clone(),
            root_cause: r.root_cause,
            description: r.description.clone(),
            fixes: r
                .fixes
                .iter()
                .map(|f| ManifestFix {
                    commit_hash: f.commit_hash.clone(),
                    commit_date: f.commit_date,
                    associated_cve: f.associated_cve.as_ref().map(ToString::to_string),
                    diff_path: None,
                    diff_inline: Some(f.diff_text.clone()),
                    touched_files: f.touched_files.clone(),
                })
                .collect(),
            excluded: r.excluded.clone(),
        };
        out.push_str(&serde_json::to_string(&line).expect("manifest line serializes"));
        out.push('\n');
    }
    out
}

pub fn save_manifest(path: &Path, records: &[CveRecord]) -> Result<()> {
    fs::write(path, render_manifest(records)).map_err(|e| Error::io(path, e))
}

/// One commit restricted to one file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FineGrainedPatch {
    pub cve_id: CveId,
    pub commit_hash: String,
    pub fix_index: usize,
    pub file_path: String,
    /// Set when the file was renamed by the commit.
    pub old_path: Option<String>,
    pub before_text: String,
    pub after_text: String,
    pub hunks: Vec<Hunk>,
    pub diff_text: String,
}

/// Split one fix into per-file patches, checking that the hunks turn each
/// before snapshot into its after snapshot. Binary files are skipped.
pub fn split_patch(
    cve_id: &CveId,
    fix_index: usize,
    event: &FixEvent,
    before: &BTreeMap<String, String>,
    after: &BTreeMap<String, String>,
) -> Result<Vec<FineGrainedPatch>> {
    let mut out = Vec::new();
    for fp in parse_unified(&event.diff_text)? {
        let path = fp.path().to_string();
        if fp.binary {
            log::warn!("{cve_id} {}: skipping binary file {path}", event.commit_hash);
            continue;
        }
        let before_text = match &fp.old_path {
            None => String::new(),
            Some(p) => before.get(p).cloned().ok_or_else(|| Error::MissingSnapshot {
                path: p.clone(),
                side: "before",
            })?,
        };
        let after_text = match &fp.new_path {
            None => String::new(),
            Some(p) => after.get(p).cloned().ok_or_else(|| Error::MissingSnapshot {
                path: p.clone(),
                side: "after",
            })?,
        };
        let applied = apply_hunks(&before_text, &fp.hunks).map_err(|message| Error::HunkMismatch { path: path.clone(), message })?;
        if applied != after_text {
            return Err(Error::HunkMismatch {
                path,
                message: "before plus hunks differs from the after snapshot".into(),
            });
        }
        let old_path = fp.old_path.clone().filter(|o| fp.new_path.as_ref().is_some_and(|n| n != o));
        out.push(FineGrainedPatch {
            cve_id: cve_id.clone(),
            commit_hash: event.commit_hash.clone(),
            fix_index,
            file_path: path,
            old_path,
            before_text,
            after_text,
            hunks: fp.hunks,
            diff_text: fp.text,
        });
    }
    Ok(out)
}

/// Snapshots for one fix from `<dir>/<commit>/{before,after}/<path>`.
/// A missing after file is derived from the before file and the hunks.
pub fn load_snapshots(dir: &Path, event: &FixEvent) -> Result<(BTreeMap<String, String>, BTreeMap<String, String>)> {
    let mut before = BTreeMap::new();
    let mut after = BTreeMap::new();
    let commit_dir = dir.join(&event.commit_hash);
    let read = |side: &str, p: &str| -> Result<Option<String>> {
        let full: PathBuf = commit_dir.join(side).join(p);
        match fs::read(&full) {
            Ok(bytes) => String::from_utf8(bytes)
                .map(Some)
                .map_err(|_| Error::InvalidRecord {
                    cve_id: event.commit_hash.clone(),
                    message: format!("{} is not UTF-8", full.display()),
                }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(full, e)),
        }
    };
    for fp in parse_unified(&event.diff_text)? {
        if fp.binary {
            continue;
        }
        let b = match &fp.old_path {
            Some(p) => {
                let t = read("before", p)?.ok_or_else(|| Error::MissingSnapshot {
                    path: p.clone(),
                    side: "before",
                })?;
                before.insert(p.clone(), t.clone());
                t
            }
            None => String::new(),
        };
        if let Some(p) = &fp.new_path {
            let t = match read("after", p)? {
                Some(t) => t,
                None => apply_hunks(&b, &fp.hunks).map_err(|message| Error::HunkMismatch { path: p.clone(), message })?,
            };
            after.insert(p.clone(), t);
        }
    }
    Ok((before, after))
}
