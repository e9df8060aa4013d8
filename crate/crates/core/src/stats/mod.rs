//! Patch metrics and corpus-level characterization.
//!
//! [`diffstat`] counts lines the way `diffstat -m` does: inside a hunk a run
//! of removed lines directly followed by a run of added lines pairs up, and
//! the shorter run's length counts as modified. [`aggregate`] summarizes a
//! set of records per fix index (population standard deviation), plus annual
//! and vulnerability-type histograms.

use std::collections::BTreeMap;
use std::iter::Sum;
use std::ops::Add;

use chrono::Datelike;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::diff::{parse_unified, Hunk, LineKind};
use crate::corpus::{CveRecord, FixEvent};
use crate::error::{Error, Result};


#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffStat {
    pub files_modified: u64,
    pub loc_added: u64,
    pub loc_deleted: u64,
    pub loc_modified: u64,
    /// Bytes of the file sections; commit message and trailers excluded.
    pub patch_bytes: u64,
}

impl Add for DiffStat {
    type Output = DiffStat;

    fn add(self, o: DiffStat) -> DiffStat {
        DiffStat {
            files_modified: self.files_modified + o.files_modified,
            loc_added: self.loc_added + o.loc_added,
            loc_deleted: self.loc_deleted + o.loc_deleted,
            loc_modified: self.loc_modified + o.loc_modified,
            patch_bytes: self.patch_bytes + o.patch_bytes,
        }
    }
}

impl Sum for DiffStat {
    fn sum<I: Iterator<Item = DiffStat>>(iter: I) -> DiffStat {
        iter.fold(DiffStat::default(), Add::add)
    }
}

/// `(added, deleted, modified)` for one hunk.
pub fn hunk_stat(h: &Hunk) -> (u64, u64, u64) {
    let (mut add, mut del, mut md) = (0, 0, 0);
    let (mut minus, mut plus) = (0u64, 0u64);
    let mut flush = |minus: &mut u64, plus: &mut u64| {
        let m = (*minus).min(*plus);
        md += m;
        del += *minus - m;
        add += *plus - m;
        *minus = 0;
        *plus = 0;
    };
    for l in &h.lines {
        match l.kind {
            LineKind::Removed if plus > 0 => {
                flush(&mut minus, &mut plus);
                minus = 1;
            }
            LineKind::Removed => minus += 1,
            LineKind::Added => plus += 1,
            LineKind::Context => flush(&mut minus, &mut plus),
        }
    }
    flush(&mut minus, &mut plus);
    (add, del, md)
}

/// Metrics for a raw diff. Text before the first file header is ignored.
pub fn diffstat_text(text: &str) -> Result<DiffStat> {
    let files = parse_unified(text)?;
    Ok(files
        .iter()
        .map(|f| {
            let (a, d, m) = f.hunks.iter().map(hunk_stat).fold((0, 0, 0), |s, h| (s.0 + h.0, s.1 + h.1, s.2 + h.2));
            DiffStat {
                files_modified: 1,
                loc_added: a,
                loc_deleted: d,
                loc_modified: m,
                patch_bytes: f.text.len() as u64,
            }
        })
        .sum())
}

pub fn diffstat(event: &FixEvent) -> Result<DiffStat> {
    diffstat_text(&event.diff_text)
}

/// Whole days from `fix0` to `fix1`.
pub fn interval_days(fix0: &FixEvent, fix1: &FixEvent) -> Result<i64> {
    let d = (fix1.commit_date - fix0.commit_date).num_days();
    if d < 0 {
        return Err(Error::NegativeInterval {
            from: fix0.commit_hash.clone(),
            to: fix1.commit_hash.clone(),
        });
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Population standard deviation. `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<MeanStd> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Some(MeanStd { mean, std: var.sqrt() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub fix_index: usize,
    pub count: usize,
    pub files_modified: MeanStd,
    pub loc_added: MeanStd,
    pub loc_deleted: MeanStd,
    pub loc_modified: MeanStd,
    pub patch_bytes: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bucket {
    pub label: String,
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub buckets: Vec<Bucket>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.buckets.iter().map(|b| b.count).sum()
    }

    pub fn get(&self, label: &str) -> Option<usize> {
        self.buckets.iter().find(|b| b.label == label).map(|b| b.count)
    }
}

/// Days from Fix-0 to a later fix of the same record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub cve_id: String,
    pub fix_index: usize,
    pub days: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixStats {
    pub cve_id: String,
    pub fix_index: usize,
    pub commit_hash: String,
    pub commit_date: String,
    pub vuln_type: String,
    pub days_from_fix0: i64,
    #[serde(flatten)]
    pub stat: DiffStat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    pub cve_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub table: Vec<AggregateRow>,
    pub annual: Histogram,
    pub types: Histogram,
    pub intervals: Vec<Interval>,
    pub skipped: Vec<Skipped>,
    #[serde(skip)]
    pub rows: Vec<FixStats>,
}

fn record_stats(r: &CveRecord) -> std::result::Result<Vec<FixStats>, String> {
    if let Some(why) = &r.excluded {
        return Err(format!("excluded: {why}"));
    }
    let Some(fix0) = r.fixes.first() else {
        return Err("no fixes".into());
    };
    r.fixes
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let stat = diffstat(f).map_err(|e| format!("Fix-{i}: {e}"))?;
            let days = interval_days(fix0, f).map_err(|e| format!("Fix-{i}: {e}"))?;
            Ok(FixStats {
                cve_id: r.cve_id.to_string(),
                fix_index: i,
                commit_hash: f.commit_hash.clone(),
                commit_date: f.commit_date.to_string(),
                vuln_type: r.vuln_type.clone(),
                days_from_fix0: days,
                stat,
            })
        })
        .collect()
}

/// Summarize records. Records that are excluded, have no fixes, or whose
/// diffs or dates cannot be used are listed in `skipped` and left out of
/// every other output. The result does not depend on input order.
pub fn aggregate(records: &[CveRecord]) -> Aggregate {
    let mut order: Vec<&CveRecord> = records.iter().collect();
    order.sort_by(|a, b| a.cve_id.cmp(&b.cve_id));
    let per: Vec<_> = order.par_iter().map(|r| record_stats(r)).collect();

    let mut agg = Aggregate::default();
    let mut years: BTreeMap<i32, usize> = BTreeMap::new();
    let mut types: BTreeMap<String, usize> = BTreeMap::new();
    for (r, res) in order.iter().zip(per) {
        match res {
            Err(reason) => {
                log::warn!("{}: skipped: {reason}", r.cve_id);
                agg.skipped.push(Skipped {
                    cve_id: r.cve_id.to_string(),
                    reason,
                });
            }
            Ok(rows) => {
                *years.entry(r.fixes[0].commit_date.year()).or_default() += 1;
                *types.entry(r.vuln_type.clone()).or_default() += 1;
                agg.intervals.extend(rows.iter().skip(1).map(|s| Interval {
                    cve_id: s.cve_id.clone(),
                    fix_index: s.fix_index,
                    days: s.days_from_fix0,
                }));
                agg.rows.extend(rows);
            }
        }
    }

    if let (Some(&lo), Some(&hi)) = (years.keys().next(), years.keys().next_back()) {
        agg.annual.buckets = (lo..=hi)
            .map(|y| Bucket {
                label: y.to_string(),
                count: years.get(&y).copied().unwrap_or(0),
            })
            .collect();
    }
    let mut tb: Vec<Bucket> = types.into_iter().map(|(label, count)| Bucket { label, count }).collect();
    tb.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.label.cmp(&b.label)));
    agg.types.buckets = tb;

    let depth = agg.rows.iter().map(|s| s.fix_index + 1).max().unwrap_or(0);
    for i in 0..depth {
        let pop: Vec<&DiffStat> = agg.rows.iter().filter(|s| s.fix_index == i).map(|s| &s.stat).collect();
        let col = |f: fn(&DiffStat) -> u64| {
            let v: Vec<f64> = pop.iter().map(|s| f(s) as f64).collect();
            MeanStd::of(&v).expect("non-empty population")
        };
        agg.table.push(AggregateRow {
            fix_index: i,
            count: pop.len(),
            files_modified: col(|s| s.files_modified),
            loc_added: col(|s| s.loc_added),
            loc_deleted: col(|s| s.loc_deleted),
            loc_modified: col(|s| s.loc_modified),
            patch_bytes: col(|s| s.patch_bytes),
        });
    }
    agg
}

impl Aggregate {
    pub fn row(&self, fix_index: usize) -> Option<&AggregateRow> {
        self.table.iter().find(|r| r.fix_index == fix_index)
    }

    /// One CSV line per fix of every analyzed record.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record([
            "cve_id",
            "fix_index",
            "commit_hash",
            "commit_date",
            "vuln_type",
            "days_from_fix0",
            "files_modified",
            "loc_added",
            "loc_deleted",
            "loc_modified",
            "patch_bytes",
        ])
        .expect("in-memory csv write");
        for s in &self.rows {
            let d = &s.stat;
            w.write_record([
                s.cve_id.clone(),
                s.fix_index.to_string(),
                s.commit_hash.clone(),
                s.commit_date.clone(),
                s.vuln_type.clone(),
                s.days_from_fix0.to_string(),
                d.files_modified.to_string(),
                d.loc_added.to_string(),
                d.loc_deleted.to_string(),
                d.loc_modified.to_string(),
                d.patch_bytes.to_string(),
            ])
            .expect("in-memory csv write");
        }
        let bytes = w.into_inner().expect("in-memory csv flush");
        String::from_utf8(bytes).expect("csv output is utf-8")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("aggregate serializes");
        s.push('\n');
        s
    }
}
