//! The staged pipeline: ingest, mine, cluster, detect, scan, stats, report.
//!
//! A corpus directory holds the manifest, the per-commit snapshots and an
//! optional code tree to scan:
//!
//! ```text
//! <corpus>/manifest.jsonl
//! <corpus>/snapshots/<commit>/{before,after}/<path>
//! <corpus>/tree/<path>
//! ```
//!
//! Every stage reads what earlier stages wrote to the output directory, so
//! any stage can be rerun on its own. A stage that fails leaves a
//! `<stage>.failed` marker next to whatever it had already written.

mod stages;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::{AbstractionLevel, DEFAULT_CLUSTER_THRESHOLD};
use crate::syntax::C_GRAMMAR_ID;
use crate::treediff::MatchConfig;

pub use stages::{CveState, CveStatus, Summary};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const SNAPSHOT_DIR: &str = "snapshots";
pub const SCAN_DIR: &str = "tree";

pub const CORPUS_DIR: &str = "corpus";
pub const RECORDS_FILE: &str = "records.jsonl";
pub const STATUS_FILE: &str = "status.json";
pub const PATTERNS_FILE: &str = "patterns.json";
pub const FINGERPRINTS_FILE: &str = "fingerprints.jsonl";
pub const CLUSTERS_FILE: &str = "clusters.json";
pub const GRAPHS_FILE: &str = "graphs.json";
pub const CANDIDATES_FILE: &str = "candidates.json";
pub const SCAN_FILE: &str = "scan.json";
pub const STATS_CSV: &str = "stats.csv";
pub const STATS_JSON: &str = "stats.json";
pub const REPORT_FILE: &str = "report.txt";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus_root: PathBuf,
    /// Defaults to `<corpus_root>/manifest.jsonl`.
    pub manifest: Option<PathBuf>,
    pub grammar_id: String,
    pub matching: MatchConfig,
    pub level: AbstractionLevel,
    pub cluster_threshold: f64,
    pub k: usize,
    pub max_unknown_ratio: f64,
    pub out_dir: PathBuf,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus_root: PathBuf::from("."),
            manifest: None,
            grammar_id: C_GRAMMAR_ID.into(),
            matching: MatchConfig::default(),
            level: AbstractionLevel::default(),
            cluster_threshold: DEFAULT_CLUSTER_THRESHOLD,
            k: crate::detect::DEFAULT_K,
            max_unknown_ratio: 0.5,
            out_dir: PathBuf::from("out"),
            workers: 1,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.cluster_threshold) {
            return bad(format!("cluster_threshold {} is outside [0, 1]", self.cluster_threshold));
        }
        if !(0.0..=1.0).contains(&self.max_unknown_ratio) {
            return bad(format!("max_unknown_ratio {} is outside [0, 1]", self.max_unknown_ratio));
        }
        if self.k < 2 {
            return bad(format!("k must be at least 2, got {}", self.k));
        }
        if self.grammar_id != C_GRAMMAR_ID {
            return bad(format!("unknown grammar {:?}", self.grammar_id));
        }
        self.matching.validate()
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.manifest.clone().unwrap_or_else(|| self.corpus_root.join(MANIFEST_FILE))
    }

    fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ingest,
    Mine,
    Cluster,
    Detect,
    Scan,
    Stats,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [Stage::Ingest, Stage::Mine, Stage::Cluster, Stage::Detect, Stage::Scan, Stage::Stats, Stage::Report];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Mine => "mine",
            Stage::Cluster => "cluster",
            Stage::Detect => "detect",
            Stage::Scan => "scan",
            Stage::Stats => "stats",
            Stage::Report => "report",
        }
    }

    pub fn marker(self) -> String {
        format!("{}.failed", self.as_str())
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage {s:?}")))
    }
}

/// What one stage did.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: Stage,
    /// Items the stage produced (patches, patterns, clusters, ...).
    pub items: usize,
    /// CVEs this stage marked as failed.
    pub failed_cves: Vec<String>,
}

/// Result of a run: per-stage reports and the stage that aborted, if any.
#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub stages: Vec<StageReport>,
    pub aborted: Option<(Stage, String)>,
    pub summary: Option<Summary>,
}

impl RunOutcome {
    /// 0 when everything succeeded, 1 on any CVE or stage failure.
    pub fn exit_code(&self) -> i32 {
        let cve_failed = self.summary.as_ref().is_some_and(|s| s.failed > 0) || self.stages.iter().any(|s| !s.failed_cves.is_empty());
        if self.aborted.is_some() || cve_failed {
            1
        } else {
            0
        }
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

/// Run one stage with the configured number of workers. On error the
/// stage's marker file is written; on success a stale marker is removed.
pub fn run_stage(cfg: &RunConfig, stage: Stage) -> Result<StageReport> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let marker = cfg.out(&stage.marker());
    let res = pool(cfg.workers)?.install(|| stages::run(cfg, stage));
    match &res {
        Ok(_) => match fs::remove_file(&marker) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => return Err(Error::io(&marker, e)),
            _ => {}
        },
        Err(e) => {
            fs::write(&marker, format!("{e}\n")).map_err(|err| Error::io(&marker, err))?;
        }
    }
    res
}

/// Run every stage in order, stopping at the first stage error.
/// Configuration errors are returned as `Err`; everything else ends up in
/// the outcome.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut out = RunOutcome::default();
    for stage in Stage::ALL {
        match run_stage(cfg, stage) {
            Ok(r) => out.stages.push(r),
            Err(e @ Error::Config(_)) => return Err(e),
            Err(e) => {
                log::error!("stage {stage} failed: {e}");
                out.aborted = Some((stage, e.to_string()));
                break;
            }
        }
    }
    if out.aborted.is_none() {
        out.summary = Some(read_summary(&cfg.out_dir)?);
    }
    Ok(out)
}

pub fn read_summary(out_dir: &Path) -> Result<Summary> {
    stages::read_json(&out_dir.join(SUMMARY_FILE))
}
