use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fingerprint, similarity, AbstractionLevel, Fingerprint, FixPattern};
use crate::digest::Digest;
use crate::error::{Error, Result};

/// Where a pattern came from: one fine-grained patch.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Provenance {
    pub cve_id: String,
    pub commit: String,
    pub file_path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMember {
    pub provenance: Provenance,
    pub digest: Digest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternLink {
    pub a: Digest,
    pub b: Digest,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternCluster {
    pub representative: Fingerprint,
    pub members: Vec<ClusterMember>,
    pub links: Vec<PatternLink>,
}

struct Group<'p> {
    fp: Fingerprint,
    pattern: &'p FixPattern,
    members: Vec<Provenance>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Group equal fingerprints, link groups whose representatives have
/// similarity at least `threshold`, and return the connected components.
pub fn cluster(patterns: &[(Provenance, FixPattern)], threshold: f64) -> Result<Vec<PatternCluster>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Config(format!("cluster threshold {threshold} outside [0, 1]")));
    }
    let mut by_digest: BTreeMap<Digest, Group> = BTreeMap::new();
    for (prov, pat) in patterns {
        let fp = fingerprint(pat);
        by_digest
            .entry(fp.digest)
            .or_insert_with(|| Group {
                fp,
                pattern: pat,
                members: Vec::new(),
            })
            .members
            .push(prov.clone());
    }
    let groups: Vec<Group> = by_digest.into_values().collect();
    let links: Vec<(usize, usize, f64)> = (0..groups.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let groups = &groups;
            (i + 1..groups.len()).filter_map(move |j| {
                let s = similarity(groups[i].pattern, groups[j].pattern).ok()?;
                (s >= threshold).then_some((i, j, s))
            })
        })
        .collect();

    let mut parent: Vec<usize> = (0..groups.len()).collect();
    for &(i, j, _) in &links {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for g in 0..groups.len() {
        let r = find(&mut parent, g);
        components.entry(r).or_default().push(g);
    }
    let groups = &groups;
    let mut out: Vec<PatternCluster> = components
        .into_values()
        .map(|ids| {
            let rep = *ids
                .iter()
                .min_by(|&&x, &&y| {
                    groups[y].members.len().cmp(&groups[x].members.len()).then_with(|| groups[x].fp.canonical.cmp(&groups[y].fp.canonical))
                })
                .unwrap();
            let mut members: Vec<ClusterMember> = ids
                .iter()
                .flat_map(|&g| {
                    groups[g].members.iter().map(move |p| ClusterMember {
                        provenance: p.clone(),
                        digest: groups[g].fp.digest,
                    })
                })
                .collect();
            members.sort_by(|x, y| x.provenance.cmp(&y.provenance).then(x.digest.cmp(&y.digest)));
            let links = links
                .iter()
                .filter(|(i, j, _)| ids.contains(i) && ids.contains(j))
                .map(|&(i, j, score)| PatternLink {
                    a: groups[i].fp.digest,
                    b: groups[j].fp.digest,
                    score,
                })
                .collect();
            PatternCluster {
                representative: groups[rep].fp.clone(),
                members,
                links,
            }
        })
        .collect();
    out.sort_by(|x, y| {
        y.members
            .len()
            .cmp(&x.members.len())
            .then_with(|| x.representative.canonical.cmp(&y.representative.canonical))
    });
    Ok(out)
}

/// One line of the fingerprint store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FingerprintRecord {
    pub digest: Digest,
    pub level: AbstractionLevel,
    pub canonical: String,
    pub provenance: Vec<Provenance>,
}

/// Write records as JSON lines, replacing any existing file.
pub fn write_store(path: &Path, records: &[FingerprintRecord]) -> Result<()> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r).map_err(|e| Error::json(path.display().to_string(), e))?;
        buf.push(b'\n');
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Append records to a store, creating it if needed.
pub fn append_store(path: &Path, records: &[FingerprintRecord]) -> Result<()> {
    let mut f = fs::OpenOptions::new().create(true).append(true).open(path).map_err(|e| Error::io(path, e))?;
    for r in records {
        let mut line = serde_json::to_vec(r).map_err(|e| Error::json(path.display().to_string(), e))?;
        line.push(b'\n');
        f.write_all(&line).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Read a store, merging lines that share a digest. Records keep the order
/// of first appearance; provenance lists are deduplicated in order.
pub fn read_store(path: &Path) -> Result<Vec<FingerprintRecord>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out: Vec<FingerprintRecord> = Vec::new();
    let mut index: BTreeMap<Digest, usize> = BTreeMap::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: FingerprintRecord = serde_json::from_str(&line).map_err(|e| Error::json(format!("{}:{}", path.display(), n + 1), e))?;
        if Digest::of_bytes(rec.canonical.as_bytes()) != rec.digest {
            return Err(Error::InvalidPattern(format!("{}:{}: digest does not match canonical", path.display(), n + 1)));
        }
        match index.get(&rec.digest) {
            Some(&i) => {
                for p in rec.provenance {
                    if !out[i].provenance.contains(&p) {
                        out[i].provenance.push(p);
                    }
                }
            }
            None => {
                index.insert(rec.digest, out.len());
                out.push(rec);
            }
        }
    }
    Ok(out)
}
