use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::diff::parse_unified;
use super::FineGrainedPatch;
use crate::error::{Error, Result};

pub const INDEX_FILE: &str = "index.json";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StoreEntry {
    pub cve_id: String,
    pub commit_hash: String,
    pub fix_index: usize,
    pub file_path: String,
    /// Directory relative to the store root, always with `/` separators.
    pub dir: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreReport {
    pub entries: Vec<StoreEntry>,
    /// Files actually (re)written by this call.
    pub written: usize,
}

pub fn encode_path(p: &str) -> String {
    p.replace('/', "__")
}

/// Write bytes unless the file already holds exactly them.
fn write_if_changed(path: &Path, bytes: &[u8]) -> Result<bool> {
    if let Ok(existing) = fs::read(path) {
        if existing == bytes {
            return Ok(false);
        }
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(true)
}

/// Persist patches as `<root>/<cve>/<commit>/<encoded path>/{before,after,diff}`
/// plus `<root>/index.json`. Unchanged files are left alone.
pub fn store_corpus(patches: &[FineGrainedPatch], root: &Path) -> Result<StoreReport> {
    let mut by_dir: BTreeMap<String, &FineGrainedPatch> = BTreeMap::new();
    for p in patches {
        let dir = format!("{}/{}/{}", p.cve_id, p.commit_hash, encode_path(&p.file_path));
        if by_dir.insert(dir.clone(), p).is_some() {
            return Err(Error::LayoutCollision(root.join(dir)));
        }
    }
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let mut written = 0;
    let mut entries = Vec::with_capacity(by_dir.len());
    for (dir, p) in &by_dir {
        let full: PathBuf = dir.split('/').fold(root.to_path_buf(), |acc, part| acc.join(part));
        for (name, body) in [("before", &p.before_text), ("after", &p.after_text), ("diff", &p.diff_text)] {
            written += usize::from(write_if_changed(&full.join(name), body.as_bytes())?);
        }
        entries.push(StoreEntry {
            cve_id: p.cve_id.to_string(),
            commit_hash: p.commit_hash.clone(),
            fix_index: p.fix_index,
            file_path: p.file_path.clone(),
            dir: dir.clone(),
        });
    }
    let mut index = serde_json::to_vec_pretty(&entries).map_err(|e| Error::json(INDEX_FILE, e))?;
    index.push(b'\n');
    written += usize::from(write_if_changed(&root.join(INDEX_FILE), &index)?);
    Ok(StoreReport { entries, written })
}

/// Read a store written by [`store_corpus`] back into patches, in index
/// order.
pub fn load_store(root: &Path) -> Result<Vec<FineGrainedPatch>> {
    let index_path = root.join(INDEX_FILE);
    let text = fs::read_to_string(&index_path).map_err(|e| Error::io(&index_path, e))?;
    let entries: Vec<StoreEntry> = serde_json::from_str(&text).map_err(|e| Error::json(INDEX_FILE, e))?;
    entries
        .iter()
        .map(|e| {
            let full: PathBuf = e.dir.split('/').fold(root.to_path_buf(), |acc, part| acc.join(part));
            let read = |name: &str| {
                let p = full.join(name);
                fs::read_to_string(&p).map_err(|err| Error::io(&p, err))
            };
            let cve_id = e.cve_id.parse().map_err(|_| Error::InvalidCveId(e.cve_id.clone()))?;
            let diff_text = read("diff")?;
            let fp = parse_unified(&diff_text)?.into_iter().next();
            let old_path = fp.as_ref().and_then(|f| f.old_path.clone()).filter(|o| o != &e.file_path);
            Ok(FineGrainedPatch {
                cve_id,
                commit_hash: e.commit_hash.clone(),
                fix_index: e.fix_index,
                file_path: e.file_path.clone(),
                old_path,
                before_text: read("before")?,
                after_text: read("after")?,
                hunks: fp.map(|f| f.hunks).unwrap_or_default(),
                diff_text,
            })
        })
        .collect()
}
