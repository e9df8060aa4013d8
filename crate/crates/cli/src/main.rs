use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use fixprint::pattern::AbstractionLevel;
use fixprint::pipeline::{self, RunConfig, Stage};
use fixprint::treediff::{self, TreeIndex};

/// Mine fix patterns from a CVE patch corpus and flag fixes that missed
/// similar components.
#[derive(Parser, Debug)]
#[command(name = "fixprint", version)]
struct Cli {
    #[command(flatten)]
    opts: Opts,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Default)]
struct Opts {
    /// TOML file with pipeline settings; flags given here take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Corpus directory (manifest.jsonl, snapshots/, tree/).
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Manifest path, if not <corpus>/manifest.jsonl.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// none, literals or identifiers_and_literals.
    #[arg(long, global = true)]
    level: Option<AbstractionLevel>,
    /// Cluster similarity threshold.
    #[arg(long, global = true)]
    theta: Option<f64>,
    /// Minimum sites for a candidate report.
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    min_height: Option<usize>,
    #[arg(long, global = true)]
    dice_threshold: Option<f64>,
    #[arg(long, global = true)]
    grammar: Option<String>,
    #[arg(long, global = true)]
    max_unknown_ratio: Option<f64>,
    /// Log verbosity (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    log: String,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Split manifest fixes into per-file patches and store them.
    Ingest,
    /// Parse, diff and fingerprint every stored patch.
    Mine,
    /// Group fingerprints by similarity.
    Cluster,
    /// Build per-CVE graphs and report multi-site fingerprints.
    Detect,
    /// Look for unpatched sites in <corpus>/tree.
    Scan,
    /// Patch metrics, intervals and histograms.
    Stats,
    /// Write report.txt and summary.json.
    Report,
    /// All stages in order.
    Run,
    /// Print the syntax tree of a source file as an S-expression.
    Tree { file: PathBuf },
    /// Print the edit script between two source files as JSON.
    Diff { before: PathBuf, after: PathBuf },
}

fn load_config(o: &Opts) -> Result<RunConfig> {
    let mut cfg = match &o.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            let base = p.parent().unwrap_or(Path::new(""));
            cfg.corpus_root = base.join(&cfg.corpus_root);
            cfg.out_dir = base.join(&cfg.out_dir);
            cfg.manifest = cfg.manifest.map(|m| base.join(m));
            cfg
        }
        None => RunConfig::default(),
    };
    if let Some(v) = &o.corpus {
        cfg.corpus_root = v.clone();
    }
    if let Some(v) = &o.manifest {
        cfg.manifest = Some(v.clone());
    }
    if let Some(v) = &o.out {
        cfg.out_dir = v.clone();
    }
    if let Some(v) = o.workers {
        cfg.workers = v;
    }
    if let Some(v) = o.level {
        cfg.level = v;
    }
    if let Some(v) = o.theta {
        cfg.cluster_threshold = v;
    }
    if let Some(v) = o.k {
        cfg.k = v;
    }
    if let Some(v) = o.min_height {
        cfg.matching.min_height = v;
    }
    if let Some(v) = o.dice_threshold {
        cfg.matching.dice_threshold = v;
    }
    if let Some(v) = &o.grammar {
        cfg.grammar_id = v.clone();
    }
    if let Some(v) = o.max_unknown_ratio {
        cfg.max_unknown_ratio = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_file(path: &Path, grammar: &str) -> Result<fixprint::SyntaxTree> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(fixprint::parse_source(&text, grammar)?)
}

enum Failure {
    Usage(anyhow::Error),
    Run(anyhow::Error),
}

fn run(cli: Cli) -> std::result::Result<i32, Failure> {
    let cfg = load_config(&cli.opts).map_err(Failure::Usage)?;
    let stage = match cli.cmd {
        Cmd::Tree { file } => {
            let t = parse_file(&file, &cfg.grammar_id).map_err(Failure::Run)?;
            println!("{}", t.root.to_sexpr());
            return Ok(0);
        }
        Cmd::Diff { before, after } => {
            let b = parse_file(&before, &cfg.grammar_id).map_err(Failure::Run)?;
            let a = parse_file(&after, &cfg.grammar_id).map_err(Failure::Run)?;
            let (_, script) = treediff::diff(&b, &a, &cfg.matching).map_err(|e| Failure::Run(e.into()))?;
            let json = script.to_debug_json(&TreeIndex::new(&b.root), &TreeIndex::new(&a.root));
            println!("{}", serde_json::to_string_pretty(&json).expect("json value serializes"));
            return Ok(0);
        }
        Cmd::Run => None,
        Cmd::Ingest => Some(Stage::Ingest),
        Cmd::Mine => Some(Stage::Mine),
        Cmd::Cluster => Some(Stage::Cluster),
        Cmd::Detect => Some(Stage::Detect),
        Cmd::Scan => Some(Stage::Scan),
        Cmd::Stats => Some(Stage::Stats),
        Cmd::Report => Some(Stage::Report),
    };
    match stage {
        Some(stage) => {
            let r = pipeline::run_stage(&cfg, stage).map_err(|e| Failure::Run(e.into()))?;
            println!("{stage}: {} items, {} CVEs failed", r.items, r.failed_cves.len());
            Ok(i32::from(!r.failed_cves.is_empty()))
        }
        None => {
            let outcome = pipeline::run_pipeline(&cfg).map_err(|e| Failure::Usage(e.into()))?;
            for r in &outcome.stages {
                println!("{}: {} items, {} CVEs failed", r.stage, r.items, r.failed_cves.len());
            }
            if let Some((stage, msg)) = &outcome.aborted {
                eprintln!("error: stage {stage} failed: {msg}");
            }
            if let Some(s) = &outcome.summary {
                println!(
                    "CVEs {} (processed {}, skipped {}, failed {}); candidates {}; omissions {}",
                    s.cves, s.processed, s.skipped, s.failed, s.candidates, s.omissions
                );
            }
            Ok(outcome.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    env_logger::Builder::new().parse_filters(&cli.opts.log).format_timestamp(None).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_paths_are_relative_to_the_file_and_flags_win() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "corpus_root = \"corpus\"\nout_dir = \"out\"\nk = 5\nworkers = 3\n").unwrap();
        let mut o = Opts {
            config: Some(path),
            ..Opts::default()
        };
        let cfg = load_config(&o).unwrap();
        assert_eq!(cfg.corpus_root, dir.path().join("corpus"));
        assert_eq!(cfg.out_dir, dir.path().join("out"));
        assert_eq!((cfg.k, cfg.workers), (5, 3));

        o.k = Some(2);
        o.out = Some(PathBuf::from("elsewhere"));
        let cfg = load_config(&o).unwrap();
        assert_eq!(cfg.k, 2);
        assert_eq!(cfg.out_dir, PathBuf::from("elsewhere"));
        assert_eq!(cfg.workers, 3);
    }

    #[test]
    fn bad_values_are_rejected() {
        let o = Opts {
            theta: Some(1.5),
            ..Opts::default()
        };
        assert!(load_config(&o).is_err());
    }

    #[test]
    fn cli_shape_is_valid() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
