//! Shared S-expression quoting and tokenizing.
//!
//! Both the syntax-tree debug dump and the fingerprint canonical form use
//! the same string quoting: tokens are wrapped in double quotes and only
//! `"` and `\` are escaped, with a backslash.

use crate::error::{Error, Result};

pub fn quote(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Open,
    Close,
    Atom(String),
    Str(String),
}

/// Splits canonical text into tokens, paired with their byte offsets.
pub fn tokenize(text: &str) -> Result<Vec<(usize, Token)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b' ' | b'\n' | b'\t' | b'\r' => i += 1,
            b'(' => {
                out.push((i, Token::Open));
                i += 1;
            }
            b')' => {
                out.push((i, Token::Close));
                i += 1;
            }
            b'"' => {
                let start = i;
                i += 1;
                let mut s = String::new();
                loop {
                    let Some(c) = text[i..].chars().next() else {
                        return Err(Error::Canonical {
                            offset: start,
                            message: "unterminated string".into(),
                        });
                    };
                    i += c.len_utf8();
                    match c {
                        '"' => break,
                        '\\' => {
                            let Some(e) = text[i..].chars().next() else {
                                return Err(Error::Canonical {
                                    offset: i,
                                    message: "dangling escape".into(),
                                });
                            };
                            i += e.len_utf8();
                            s.push(e);
                        }
                        c => s.push(c),
                    }
                }
                out.push((start, Token::Str(s)));
            }
            _ => {
                let start = i;
                while i < bytes.len() && !matches!(bytes[i], b' ' | b'\n' | b'\t' | b'\r' | b'(' | b')' | b'"') {
                    i += 1;
                }
                out.push((start, Token::Atom(text[start..i].to_string())));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quote_roundtrips_through_tokenizer() {
        let mut s = String::new();
        s.push('(');
        quote("a \"b\" \\ c", &mut s);
        s.push(')');
        let toks = tokenize(&s).unwrap();
        assert_eq!(toks[1].1, Token::Str("a \"b\" \\ c".into()));
        assert_eq!(toks.len(), 3);
    }

    #[test]
    fn unterminated_string_is_an_error() {
        assert!(tokenize("(x \"abc").is_err());
    }
}
