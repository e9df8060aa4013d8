//! Tokenizer for the C subset. Never fails: bytes it cannot classify become
//! `Unknown` tokens. Comments and whitespace are skipped but every token
//! keeps its byte span into the original text.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokKind {
    Identifier,
    /// Statement and structure keywords whose meaning is carried by the
    /// enclosing node kind (`if`, `return`, `struct`, ...).
    Keyword,
    /// Built-in type names.
    Type,
    /// Storage classes and qualifiers.
    Specifier,
    Literal,
    Operator,
    Punct,
    Preproc,
    Unknown,
}

#[derive(Debug, Clone, Copy)]
pub struct Tok {
    pub kind: TokKind,
    pub start: usize,
    pub end: usize,
}

const KEYWORDS: &[&str] = &[
    "break", "case", "continue", "default", "do", "else", "enum", "for", "goto", "if", "return",
    "sizeof", "struct", "switch", "union", "while", "typeof", "__typeof__", "asm", "__asm__",
];

const TYPES: &[&str] = &[
    "void", "char", "short", "int", "long", "float", "double", "signed", "unsigned", "_Bool",
    "bool", "__signed__",
];

const SPECIFIERS: &[&str] = &[
    "auto", "const", "extern", "inline", "register", "restrict", "static", "typedef",
    "volatile", "__inline", "__inline__", "__const", "__volatile__", "__restrict",
];

// Longest first.
const OPERATORS: &[&str] = &[
    ">>=", "<<=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=",
    "-=", "*=", "/=", "%=", "&=", "^=", "|=", "##", "+", "-", "*", "/", "%", "<", ">", "=", "!",
    "~", "&", "|", "^", "?", ":", ".", ",", "(", ")", "[", "]", "{", "}", ";",
];

pub fn classify_word(word: &str) -> TokKind {
    if KEYWORDS.contains(&word) {
        TokKind::Keyword
    } else if TYPES.contains(&word) {
        TokKind::Type
    } else if SPECIFIERS.contains(&word) {
        TokKind::Specifier
    } else {
        TokKind::Identifier
    }
}

pub fn is_reserved(word: &str) -> bool {
    classify_word(word) != TokKind::Identifier
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_'
}

fn is_ident_continue(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

pub fn tokenize(src: &str) -> Vec<Tok> {
    let b = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    // Only whitespace (or nothing) seen since the last newline.
    let mut line_start = true;

    while i < b.len() {
        let c = b[i];
        if c == b'\n' {
            line_start = true;
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'/' && b.get(i + 1) == Some(&b'/') {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c == b'/' && b.get(i + 1) == Some(&b'*') {
            i += 2;
            while i < b.len() && !(b[i] == b'*' && b.get(i + 1) == Some(&b'/')) {
                i += 1;
            }
            i = (i + 2).min(b.len());
            continue;
        }
        let start = i;
        if c == b'#' && line_start {
            // Directive runs to the end of the line, honouring continuations.
            while i < b.len() {
                if b[i] == b'\n' {
                    if i > start && b[i - 1] == b'\\' {
                        i += 1;
                        continue;
                    }
                    break;
                }
                i += 1;
            }
            let mut end = i;
            while end > start && b[end - 1].is_ascii_whitespace() {
                end -= 1;
            }
            toks.push(Tok { kind: TokKind::Preproc, start, end });
            continue;
        }
        line_start = false;

        if is_ident_start(c) {
            while i < b.len() && is_ident_continue(b[i]) {
                i += 1;
            }
            let word = &src[start..i];
            if matches!(word, "L" | "u" | "U" | "u8") && matches!(b.get(i), Some(b'"') | Some(b'\'')) {
                let kind = lex_quoted(b, &mut i);
                toks.push(Tok { kind, start, end: i });
                continue;
            }
            toks.push(Tok { kind: classify_word(word), start, end: i });
            continue;
        }
        if c.is_ascii_digit() || (c == b'.' && b.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            i += 1;
            while i < b.len() {
                let d = b[i];
                let exponent_sign = matches!(d, b'+' | b'-') && matches!(b[i - 1], b'e' | b'E' | b'p' | b'P');
                if exponent_sign || d.is_ascii_alphanumeric() || d == b'_' || d == b'.' {
                    i += 1;
                } else {
                    break;
                }
            }
            toks.push(Tok { kind: TokKind::Literal, start, end: i });
            continue;
        }
        if c == b'"' || c == b'\'' {
            let kind = lex_quoted(b, &mut i);
            toks.push(Tok { kind, start, end: i });
            continue;
        }
        if let Some(op) = OPERATORS.iter().find(|op| b[i..].starts_with(op.as_bytes())) {
            i += op.len();
            let kind = match *op {
                "(" | ")" | "[" | "]" | "{" | "}" | ";" | "..." => TokKind::Punct,
                _ => TokKind::Operator,
            };
            toks.push(Tok { kind, start, end: i });
            continue;
        }
        // Anything else: one (possibly multi-byte) character.
        let width = src[i..].chars().next().map_or(1, char::len_utf8);
        i += width;
        toks.push(Tok { kind: TokKind::Unknown, start, end: i });
    }
    toks
}

/// Lexes a string or character literal starting at the quote under `*i`
/// (possibly after an encoding prefix). Unterminated literals stop at the end
/// of the line and are reported as `Unknown`.
fn lex_quoted(b: &[u8], i: &mut usize) -> TokKind {
    let quote = b[*i];
    *i += 1;
    while *i < b.len() {
        match b[*i] {
            b'\\' => *i = (*i + 2).min(b.len()),
            b'\n' => return TokKind::Unknown,
            q if q == quote => {
                *i += 1;
                return TokKind::Literal;
            }
            _ => *i += 1,
        }
    }
    TokKind::Unknown
}
