//! Unified diff parsing and strict hunk application.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LineKind {
    Context,
    Removed,
    Added,
}

/// One hunk body line. `text` excludes the line terminator; `newline` is
/// false when the diff marks the line with "\ No newline at end of file".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HunkLine {
    pub kind: LineKind,
    pub text: String,
    pub newline: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    pub old_start: usize,
    pub old_len: usize,
    pub new_start: usize,
    pub new_len: usize,
    /// 1-based line of the `@@` header within the parsed text.
    pub line: usize,
    pub lines: Vec<HunkLine>,
}

impl Hunk {
    pub fn removed(&self) -> impl Iterator<Item = &str> {
        self.lines.iter().filter(|l| l.kind == LineKind::Removed).map(|l| l.text.as_str())
    }

    pub fn added(&self) -> impl Iterator<Item = &str> {
        self.lines.iter().filter(|l| l.kind == LineKind::Added).map(|l| l.text.as_str())
    }
}

/// The part of a diff that concerns one file. `None` paths stand for
/// /dev/null (creation or deletion).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilePatch {
    pub old_path: Option<String>,
    pub new_path: Option<String>,
    pub binary: bool,
    pub hunks: Vec<Hunk>,
    /// Raw text of this file's section, headers included.
    pub text: String,
    /// 1-based line of the section's first header line.
    pub line: usize,
}

impl FilePatch {
    /// Path the patch is filed under: the new path, or the old one for a
    /// deletion.
    pub fn path(&self) -> &str {
        self.new_path.as_deref().or(self.old_path.as_deref()).unwrap_or("")
    }
}

fn malformed(line: usize, message: impl Into<String>) -> Error {
    Error::MalformedDiff {
        line,
        message: message.into(),
    }
}

fn strip_eol(l: &str) -> &str {
    let l = l.strip_suffix('\n').unwrap_or(l);
    l.strip_suffix('\r').unwrap_or(l)
}

/// Path from a `---`/`+++` line: drop a trailing timestamp and the one-letter
/// prefix git adds.
fn header_path(rest: &str) -> Option<String> {
    let p = rest.split('\t').next().unwrap_or(rest).trim_end();
    if p == "/dev/null" {
        return None;
    }
    let p = p.strip_prefix('"').and_then(|q| q.strip_suffix('"')).unwrap_or(p);
    Some(strip_prefix(p).to_string())
}

fn strip_prefix(p: &str) -> &str {
    match p.split_once('/') {
        Some((head, tail)) if head.len() == 1 && !tail.is_empty() => tail,
        _ => p,
    }
}

/// `diff --git a/x b/y` paths. Ambiguous when paths contain " b/"; the
/// split nearest the middle is taken.
fn git_paths(rest: &str) -> Option<(String, String)> {
    let cands: Vec<usize> = rest.match_indices(" b/").map(|(i, _)| i).collect();
    let mid = rest.len() / 2;
    let i = *cands.iter().min_by_key(|&&i| i.abs_diff(mid))?;
    Some((strip_prefix(&rest[..i]).to_string(), strip_prefix(&rest[i + 1..]).to_string()))
}

fn parse_range(s: &str, line: usize) -> Result<(usize, usize)> {
    let (a, b) = match s.split_once(',') {
        Some((a, b)) => (a, Some(b)),
        None => (s, None),
    };
    let start = a.parse().map_err(|_| malformed(line, format!("bad hunk range {s:?}")))?;
    let len = match b {
        Some(b) => b.parse().map_err(|_| malformed(line, format!("bad hunk range {s:?}")))?,
        None => 1,
    };
    Ok((start, len))
}

fn parse_hunk_header(l: &str, line: usize) -> Result<(usize, usize, usize, usize)> {
    let body = l
        .strip_prefix("@@ -")
        .and_then(|r| r.split_once(" @@"))
        .map(|(r, _)| r)
        .ok_or_else(|| malformed(line, "bad hunk header"))?;
    let (old, new) = body.split_once(" +").ok_or_else(|| malformed(line, "bad hunk header"))?;
    let (os, ol) = parse_range(old, line)?;
    let (ns, nl) = parse_range(new, line)?;
    Ok((os, ol, ns, nl))
}

/// Parse every file section of a unified diff. Text outside file sections
/// (commit messages, diffstat summaries, signatures) is ignored.
pub fn parse_unified(text: &str) -> Result<Vec<FilePatch>> {
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    let mut offsets = Vec::with_capacity(lines.len() + 1);
    let mut off = 0;
    for l in &lines {
        offsets.push(off);
        off += l.len();
    }
    offsets.push(off);

    let is_git = |l: &str| l.starts_with("diff --git ");
    let is_pair = |i: usize| lines[i].starts_with("--- ") && lines.get(i + 1).is_some_and(|n| n.starts_with("+++ "));

    let mut out = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        if !is_git(lines[i]) && !is_pair(i) {
            i += 1;
            continue;
        }
        let start = i;
        let mut fp = FilePatch {
            old_path: None,
            new_path: None,
            binary: false,
            hunks: Vec::new(),
            text: String::new(),
            line: start + 1,
        };
        if is_git(lines[i]) {
            let (a, b) = git_paths(strip_eol(&lines[i]["diff --git ".len()..])).ok_or_else(|| malformed(i + 1, "bad diff --git header"))?;
            fp.old_path = Some(a);
            fp.new_path = Some(b);
            i += 1;
            while i < lines.len() && !is_git(lines[i]) && !is_pair(i) && !lines[i].starts_with("@@ ") {
                let l = strip_eol(lines[i]);
                if l.starts_with("new file mode") {
                    fp.old_path = None;
                } else if l.starts_with("deleted file mode") {
                    fp.new_path = None;
                } else if let Some(p) = l.strip_prefix("rename from ").or_else(|| l.strip_prefix("copy from ")) {
                    fp.old_path = Some(p.to_string());
                } else if let Some(p) = l.strip_prefix("rename to ").or_else(|| l.strip_prefix("copy to ")) {
                    fp.new_path = Some(p.to_string());
                } else if l.starts_with("Binary files ") || l == "GIT binary patch" {
                    fp.binary = true;
                } else if !(l.starts_with("index ")
                    || l.starts_with("old mode")
                    || l.starts_with("new mode")
                    || l.starts_with("similarity index")
                    || l.starts_with("dissimilarity index")
                    || fp.binary)
                {
                    break;
                }
                i += 1;
            }
        }
        if i < lines.len() && is_pair(i) && !fp.binary {
            fp.old_path = header_path(strip_eol(&lines[i][4..]));
            fp.new_path = header_path(strip_eol(&lines[i + 1][4..]));
            i += 2;
        }
        while i < lines.len() && lines[i].starts_with("@@ ") && !fp.binary {
            let header_line = i + 1;
            let (os, ol, ns, nl) = parse_hunk_header(strip_eol(lines[i]), header_line)?;
            let mut hunk = Hunk {
                old_start: os,
                old_len: ol,
                new_start: ns,
                new_len: nl,
                line: header_line,
                lines: Vec::new(),
            };
            i += 1;
            let (mut seen_old, mut seen_new) = (0, 0);
            while seen_old < ol || seen_new < nl {
                let Some(raw) = lines.get(i) else {
                    return Err(malformed(header_line, "hunk truncated at end of diff"));
                };
                let l = strip_eol(raw);
                let (kind, body) = match l.as_bytes().first() {
                    Some(b' ') => (LineKind::Context, &l[1..]),
                    Some(b'-') => (LineKind::Removed, &l[1..]),
                    Some(b'+') => (LineKind::Added, &l[1..]),
                    None => (LineKind::Context, ""),
                    Some(b'\\') => {
                        mark_no_newline(&mut hunk, i + 1)?;
                        i += 1;
                        continue;
                    }
                    _ => return Err(malformed(i + 1, format!("unexpected line in hunk: {l:?}"))),
                };
                match kind {
                    LineKind::Context => {
                        seen_old += 1;
                        seen_new += 1;
                    }
                    LineKind::Removed => seen_old += 1,
                    LineKind::Added => seen_new += 1,
                }
                if seen_old > ol || seen_new > nl {
                    return Err(malformed(i + 1, "hunk body longer than its header says"));
                }
                hunk.lines.push(HunkLine {
                    kind,
                    text: body.to_string(),
                    newline: true,
                });
                i += 1;
            }
            if i < lines.len() && lines[i].starts_with('\\') {
                mark_no_newline(&mut hunk, i + 1)?;
                i += 1;
            }
            fp.hunks.push(hunk);
        }
        if fp.binary {
            while i < lines.len() && !is_git(lines[i]) {
                i += 1;
            }
        }
        if fp.old_path.is_none() && fp.new_path.is_none() {
            return Err(malformed(start + 1, "file section names no path"));
        }
        fp.text = text[offsets[start]..offsets[i]].to_string();
        out.push(fp);
    }
    Ok(out)
}

fn mark_no_newline(hunk: &mut Hunk, line: usize) -> Result<()> {
    match hunk.lines.last_mut() {
        Some(last) => {
            last.newline = false;
            Ok(())
        }
        None => Err(malformed(line, "no-newline marker before any hunk line")),
    }
}

/// Apply hunks to `before`, requiring every context and removed line to
/// match exactly.
pub fn apply_hunks(before: &str, hunks: &[Hunk]) -> std::result::Result<String, String> {
    let src: Vec<&str> = before.split_inclusive('\n').collect();
    let mut out = String::with_capacity(before.len());
    let mut cursor = 0;
    for (n, h) in hunks.iter().enumerate() {
        let at = if h.old_len == 0 { h.old_start } else { h.old_start.saturating_sub(1) };
        if at < cursor || at > src.len() {
            return Err(format!("hunk {} starts at line {} outside the file or before the previous hunk", n + 1, h.old_start));
        }
        for l in &src[cursor..at] {
            out.push_str(l);
        }
        cursor = at;
        for hl in &h.lines {
            let render = |hl: &HunkLine| {
                let mut s = hl.text.clone();
                if hl.newline {
                    s.push('\n');
                }
                s
            };
            match hl.kind {
                LineKind::Added => out.push_str(&render(hl)),
                LineKind::Context | LineKind::Removed => {
                    let expect = render(hl);
                    let got = src.get(cursor).copied();
                    let matches = got == Some(expect.as_str()) || (hl.kind == LineKind::Context && hl.text.is_empty() && got == Some("\n"));
                    if !matches {
                        return Err(format!(
                            "hunk {} line {}: expected {:?}, found {:?}",
                            n + 1,
                            cursor + 1,
                            expect,
                            got.unwrap_or("<end of file>")
                        ));
                    }
                    if hl.kind == LineKind::Context {
                        out.push_str(got.unwrap());
                    }
                    cursor += 1;
                }
            }
        }
    }
    for l in &src[cursor..] {
        out.push_str(l);
    }
    Ok(out)
}
