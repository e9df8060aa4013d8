//! Error-tolerant recursive-descent parser for the C subset found in kernel
//! patch hunks.
//!
//! Every lexed token ends up in exactly one leaf, so leaf tokens plus the
//! whitespace and comments between them reproduce the input. Regions the
//! grammar cannot handle are folded into a single `Unknown` leaf that runs to
//! the next statement boundary.

use super::kind::*;
use super::lexer::{tokenize, Tok, TokKind};
use super::{Grammar, Span, SyntaxNode, C_GRAMMAR_ID};

/// The bundled C-subset front-end.
#[derive(Debug, Default, Clone, Copy)]
pub struct CSubset;

impl Grammar for CSubset {
    fn id(&self) -> &str {
        C_GRAMMAR_ID
    }

    fn parse(&self, text: &str) -> SyntaxNode {
        Parser::new(text).translation_unit()
    }
}

const ASSIGN_OPS: &[&str] = &["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="];
const PREFIX_OPS: &[&str] = &["++", "--", "-", "+", "!", "~", "*", "&"];

fn binary_precedence(op: &str) -> Option<u8> {
    Some(match op {
        "||" => 1,
        "&&" => 2,
        "|" => 3,
        "^" => 4,
        "&" => 5,
        "==" | "!=" => 6,
        "<" | ">" | "<=" | ">=" => 7,
        "<<" | ">>" => 8,
        "+" | "-" => 9,
        "*" | "/" | "%" => 10,
        _ => return None,
    })
}

fn leaf_kind(k: TokKind) -> &'static str {
    match k {
        TokKind::Identifier => IDENTIFIER,
        TokKind::Keyword => KEYWORD,
        TokKind::Type => TYPE,
        TokKind::Specifier => SPECIFIER,
        TokKind::Literal => LITERAL,
        TokKind::Operator => OPERATOR,
        TokKind::Punct => PUNCT,
        TokKind::Preproc => PREPROC_LINE,
        TokKind::Unknown => UNKNOWN,
    }
}

struct Parser<'s> {
    src: &'s str,
    toks: Vec<Tok>,
    pos: usize,
}

type P = Option<SyntaxNode>;

impl<'s> Parser<'s> {
    fn new(src: &'s str) -> Self {
        Parser {
            src,
            toks: tokenize(src),
            pos: 0,
        }
    }

    // ---- token helpers -------------------------------------------------

    fn eof(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek_tok(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k)
    }

    fn kind_at(&self, k: usize) -> Option<TokKind> {
        self.peek_tok(k).map(|t| t.kind)
    }

    fn text_at(&self, k: usize) -> &'s str {
        match self.peek_tok(k) {
            Some(t) => &self.src[t.start..t.end],
            None => "",
        }
    }

    fn at(&self, s: &str) -> bool {
        self.text_at(0) == s && !self.at_kind(TokKind::Literal) && !self.at_kind(TokKind::Preproc)
    }

    fn at_kind(&self, k: TokKind) -> bool {
        self.kind_at(0) == Some(k)
    }

    fn bump(&mut self) -> SyntaxNode {
        let t = self.toks[self.pos];
        self.bump_as(leaf_kind(t.kind))
    }

    fn bump_as(&mut self, kind: &str) -> SyntaxNode {
        let t = self.toks[self.pos];
        self.pos += 1;
        SyntaxNode::leaf(kind, &self.src[t.start..t.end], Span::new(t.start, t.end))
    }

    fn expect(&mut self, s: &str) -> P {
        if self.at(s) {
            Some(self.bump())
        } else {
            None
        }
    }

    fn expect_as(&mut self, s: &str, kind: &str) -> P {
        if self.at(s) {
            Some(self.bump_as(kind))
        } else {
            None
        }
    }

    fn attempt(&mut self, f: impl FnOnce(&mut Self) -> P) -> P {
        let save = self.pos;
        let r = f(self);
        if r.is_none() {
            self.pos = save;
        }
        r
    }

    /// Consumes tokens up to a statement boundary and wraps them in one
    /// `Unknown` leaf. Stops after a `;` or a balanced `{...}` group at depth
    /// zero, and before a directive or (inside a block) an unmatched `}`.
    /// Always consumes at least one token.
    fn unknown_region(&mut self, in_block: bool) -> SyntaxNode {
        let first = self.pos;
        let mut depth = 0usize;
        while !self.eof() {
            let t = self.toks[self.pos];
            let text = &self.src[t.start..t.end];
            if self.pos > first && depth == 0 && (t.kind == TokKind::Preproc || (in_block && text == "}")) {
                break;
            }
            self.pos += 1;
            if t.kind == TokKind::Punct {
                match text {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" | "}" => {
                        if depth > 0 {
                            depth -= 1;
                            if depth == 0 && text == "}" {
                                break;
                            }
                        }
                    }
                    ";" if depth == 0 => break,
                    _ => {}
                }
            }
        }
        let start = self.toks[first].start;
        let end = self.toks[self.pos - 1].end;
        SyntaxNode::leaf(UNKNOWN, &self.src[start..end], Span::new(start, end))
    }

    /// Leaves up to the matching closer of the group opened at the cursor.
    fn balanced_group(&mut self, out: &mut Vec<SyntaxNode>) -> Option<()> {
        if !(self.at("(") || self.at("[")) {
            return None;
        }
        let mut depth = 0usize;
        loop {
            if self.eof() {
                return None;
            }
            let text = self.text_at(0);
            let is_punct = self.at_kind(TokKind::Punct);
            if is_punct && matches!(text, ";" | "{" | "}") {
                return None;
            }
            out.push(self.bump());
            if is_punct {
                match text {
                    "(" | "[" => depth += 1,
                    ")" | "]" => {
                        depth -= 1;
                        if depth == 0 {
                            return Some(());
                        }
                    }
                    _ => {}
                }
            }
        }
    }

    // ---- top level -----------------------------------------------------

    fn translation_unit(mut self) -> SyntaxNode {
        let mut children = Vec::new();
        while !self.eof() {
            children.push(self.external());
        }
        let span = Span::new(0, self.src.len());
        SyntaxNode {
            kind: TRANSLATION_UNIT.into(),
            token: None,
            span,
            children,
        }
    }

    fn external(&mut self) -> SyntaxNode {
        if self.at_kind(TokKind::Preproc) {
            return self.bump();
        }
        if self.at(";") {
            let semi = self.bump();
            return SyntaxNode::internal(EMPTY_STMT, vec![semi]);
        }
        if let Some(n) = self.attempt(Self::external_decl) {
            return n;
        }
        if let Some(n) = self.attempt(Self::macro_decl) {
            return n;
        }
        if let Some(n) = self.attempt(Self::expr_stmt) {
            return n;
        }
        self.unknown_region(false)
    }

    fn external_decl(&mut self) -> P {
        let mut children = self.decl_specs()?;
        if self.at(";") {
            children.push(self.bump());
            return Some(SyntaxNode::internal(DECLARATION, children));
        }
        let decl = self.declarator(false)?;
        let is_function = decl.children.last().is_some_and(|c| c.kind == PARAM_LIST);
        if is_function && self.at("{") {
            children.push(decl);
            children.push(self.block()?);
            return Some(SyntaxNode::internal(FUNCTION_DEF, children));
        }
        self.declaration_rest(children, decl)
    }

    /// `static DEFINE_MUTEX(lock);` and similar macro-built definitions.
    fn macro_decl(&mut self) -> P {
        let mut children = Vec::new();
        while self.at_kind(TokKind::Specifier) {
            children.push(self.bump());
        }
        if children.is_empty() || !self.at_kind(TokKind::Identifier) || self.text_at(1) != "(" {
            return None;
        }
        children.push(self.postfix()?);
        children.push(self.expect(";")?);
        Some(SyntaxNode::internal(DECLARATION, children))
    }

    // ---- declarations --------------------------------------------------

    fn is_type_start(&self, k: usize) -> bool {
        match self.kind_at(k) {
            Some(TokKind::Type) | Some(TokKind::Specifier) => true,
            Some(TokKind::Keyword) => matches!(self.text_at(k), "struct" | "union" | "enum"),
            _ => false,
        }
    }

    fn is_decl_start(&self) -> bool {
        if self.is_type_start(0) {
            return true;
        }
        if self.kind_at(0) != Some(TokKind::Identifier) {
            return false;
        }
        match self.kind_at(1) {
            Some(TokKind::Identifier) => true,
            Some(TokKind::Operator) if self.text_at(1) == "*" => {
                let mut k = 1;
                while self.text_at(k) == "*" || self.kind_at(k) == Some(TokKind::Specifier) {
                    k += 1;
                }
                self.kind_at(k) == Some(TokKind::Identifier)
                    && matches!(self.text_at(k + 1), "=" | ";" | "," | "[" | ")")
            }
            _ => false,
        }
    }

    fn attribute(&mut self) -> P {
        if self.text_at(0) != "__attribute__" || self.text_at(1) != "(" {
            return None;
        }
        let mut children = vec![self.bump()];
        self.balanced_group(&mut children)?;
        Some(SyntaxNode::internal(ATTRIBUTE, children))
    }

    fn decl_specs(&mut self) -> Option<Vec<SyntaxNode>> {
        let mut out = Vec::new();
        loop {
            match self.kind_at(0) {
                Some(TokKind::Specifier) | Some(TokKind::Type) => out.push(self.bump()),
                Some(TokKind::Keyword) => match self.text_at(0) {
                    "struct" | "union" => out.push(self.struct_spec()?),
                    "enum" => out.push(self.enum_spec()?),
                    _ => break,
                },
                Some(TokKind::Identifier) => {
                    if self.text_at(0) == "__attribute__" {
                        out.push(self.attribute()?);
                        continue;
                    }
                    let next_is_ident = self.kind_at(1) == Some(TokKind::Identifier);
                    let next_is_star = self.text_at(1) == "*";
                    if next_is_ident || next_is_star {
                        out.push(self.bump());
                    } else {
                        break;
                    }
                }
                _ => break,
            }
        }
        if out.is_empty() {
            None
        } else {
            Some(out)
        }
    }

    fn struct_spec(&mut self) -> P {
        let mut children = vec![self.bump()];
        if self.at_kind(TokKind::Identifier) {
            children.push(self.bump());
        }
        if self.at("{") {
            let mut fields = vec![self.bump()];
            loop {
                if self.eof() {
                    return None;
                }
                if self.at("}") {
                    fields.push(self.bump());
                    break;
                }
                if self.at_kind(TokKind::Preproc) {
                    fields.push(self.bump());
                    continue;
                }
                let field = match self.attempt(Self::declaration) {
                    Some(f) => f,
                    None => self.unknown_region(true),
                };
                fields.push(field);
            }
            children.push(SyntaxNode::internal(FIELD_LIST, fields));
        }
        if children.len() == 1 {
            return None;
        }
        Some(SyntaxNode::internal(STRUCT_SPEC, children))
    }

    fn enum_spec(&mut self) -> P {
        let mut children = vec![self.bump()];
        if self.at_kind(TokKind::Identifier) {
            children.push(self.bump());
        }
        if self.at("{") {
            let mut items = vec![self.bump()];
            loop {
                if self.at("}") {
                    items.push(self.bump());
                    break;
                }
                if self.at_kind(TokKind::Preproc) {
                    items.push(self.bump());
                    continue;
                }
                if !self.at_kind(TokKind::Identifier) {
                    return None;
                }
                let mut e = vec![self.bump()];
                if self.at("=") {
                    e.push(self.bump());
                    e.push(self.ternary()?);
                }
                items.push(SyntaxNode::internal(ENUMERATOR, e));
                if self.at(",") {
                    items.push(self.bump_as(PUNCT));
                } else if !self.at("}") && !self.at_kind(TokKind::Preproc) {
                    return None;
                }
            }
            children.push(SyntaxNode::internal(ENUMERATOR_LIST, items));
        }
        if children.len() == 1 {
            return None;
        }
        Some(SyntaxNode::internal(ENUM_SPEC, children))
    }

    /// `abstract_ok` allows a declarator without a name (parameters, type names).
    fn declarator(&mut self, abstract_ok: bool) -> P {
        let mut children = Vec::new();
        while self.at("*") {
            children.push(self.bump());
            while self.at_kind(TokKind::Specifier) {
                children.push(self.bump());
            }
        }
        if self.at_kind(TokKind::Identifier) && self.text_at(0) != "__attribute__" {
            children.push(self.bump());
        } else if self.at("(") && (self.text_at(1) == "*" || self.text_at(1) == "(") {
            let open = self.bump();
            let inner = self.declarator(abstract_ok)?;
            let close = self.expect(")")?;
            children.push(SyntaxNode::internal(PAREN_DECLARATOR, vec![open, inner, close]));
        } else if !abstract_ok {
            return None;
        }
        loop {
            if self.at("[") {
                let mut s = vec![self.bump()];
                if !self.at("]") {
                    s.push(self.expr()?);
                }
                s.push(self.expect("]")?);
                children.push(SyntaxNode::internal(ARRAY_SUFFIX, s));
            } else if self.at("(") {
                children.push(self.param_list()?);
            } else if self.text_at(0) == "__attribute__" {
                children.push(self.attribute()?);
            } else {
                break;
            }
        }
        if children.is_empty() {
            return None;
        }
        Some(SyntaxNode::internal(DECLARATOR, children))
    }

    fn param_list(&mut self) -> P {
        let mut items = vec![self.expect("(")?];
        if self.at(")") {
            items.push(self.bump());
            return Some(SyntaxNode::internal(PARAM_LIST, items));
        }
        loop {
            if self.at("...") {
                items.push(self.bump());
            } else {
                let mut p = self.decl_specs()?;
                if let Some(d) = self.attempt(|s| s.declarator(true)) {
                    p.push(d);
                }
                items.push(SyntaxNode::internal(PARAM, p));
            }
            if self.at(",") {
                items.push(self.bump_as(PUNCT));
            } else if self.at(")") {
                items.push(self.bump());
                break;
            } else {
                return None;
            }
        }
        Some(SyntaxNode::internal(PARAM_LIST, items))
    }

    fn declaration(&mut self) -> P {
        let mut children = self.decl_specs()?;
        if self.at(";") {
            children.push(self.bump());
            return Some(SyntaxNode::internal(DECLARATION, children));
        }
        let decl = self.declarator(false)?;
        self.declaration_rest(children, decl)
    }

    fn declaration_rest(&mut self, mut children: Vec<SyntaxNode>, first: SyntaxNode) -> P {
        children.push(self.init_declarator(first)?);
        while self.at(",") {
            children.push(self.bump_as(PUNCT));
            let d = self.declarator(false)?;
            children.push(self.init_declarator(d)?);
        }
        children.push(self.expect(";")?);
        Some(SyntaxNode::internal(DECLARATION, children))
    }

    fn init_declarator(&mut self, decl: SyntaxNode) -> P {
        let mut children = vec![decl];
        if self.at(":") {
            children.push(self.bump());
            children.push(self.ternary()?);
        }
        if self.at("=") {
            children.push(self.bump());
            children.push(self.initializer()?);
        }
        Some(SyntaxNode::internal(INIT_DECLARATOR, children))
    }

    fn initializer(&mut self) -> P {
        if self.at("{") {
            self.init_list()
        } else {
            self.assign()
        }
    }

    fn init_list(&mut self) -> P {
        let mut items = vec![self.expect("{")?];
        loop {
            if self.at("}") {
                items.push(self.bump());
                break;
            }
            if self.eof() {
                return None;
            }
            if self.at_kind(TokKind::Preproc) {
                items.push(self.bump());
                continue;
            }
            let mut designators = Vec::new();
            loop {
                if self.at(".") && self.kind_at(1) == Some(TokKind::Identifier) {
                    designators.push(self.bump());
                    designators.push(self.bump());
                } else if self.at("[") {
                    designators.push(self.bump_as(PUNCT));
                    designators.push(self.ternary()?);
                    designators.push(self.expect("]")?);
                } else {
                    break;
                }
            }
            if designators.is_empty() {
                items.push(self.initializer()?);
            } else {
                designators.push(self.expect("=")?);
                designators.push(self.initializer()?);
                items.push(SyntaxNode::internal(INIT_ITEM, designators));
            }
            if self.at(",") {
                items.push(self.bump_as(PUNCT));
            } else if !self.at("}") && !self.at_kind(TokKind::Preproc) {
                return None;
            }
        }
        Some(SyntaxNode::internal(INIT_LIST, items))
    }

    // ---- statements ----------------------------------------------------

    fn block(&mut self) -> P {
        let mut children = vec![self.expect("{")?];
        while !self.eof() {
            if self.at("}") {
                children.push(self.bump());
                break;
            }
            children.push(self.statement());
        }
        Some(SyntaxNode::internal(BLOCK, children))
    }

    fn statement(&mut self) -> SyntaxNode {
        match self.attempt(Self::statement_inner) {
            Some(n) => n,
            None => self.unknown_region(true),
        }
    }

    fn statement_inner(&mut self) -> P {
        if self.eof() {
            return None;
        }
        if self.at_kind(TokKind::Preproc) {
            return Some(self.bump());
        }
        if self.at_kind(TokKind::Keyword) {
            match self.text_at(0) {
                "if" => return self.if_stmt(),
                "for" => return self.for_stmt(),
                "while" => {
                    let mut c = vec![self.bump()];
                    self.paren_cond(&mut c)?;
                    c.push(self.statement_inner()?);
                    return Some(SyntaxNode::internal(WHILE_STMT, c));
                }
                "do" => {
                    let mut c = vec![self.bump(), self.statement_inner()?];
                    c.push(self.expect("while")?);
                    self.paren_cond(&mut c)?;
                    c.push(self.expect(";")?);
                    return Some(SyntaxNode::internal(DO_STMT, c));
                }
                "switch" => {
                    let mut c = vec![self.bump()];
                    self.paren_cond(&mut c)?;
                    c.push(self.statement_inner()?);
                    return Some(SyntaxNode::internal(SWITCH_STMT, c));
                }
                "case" => {
                    let mut c = vec![self.bump(), self.ternary()?];
                    if self.at("...") {
                        c.push(self.bump());
                        c.push(self.ternary()?);
                    }
                    c.push(self.expect_as(":", PUNCT)?);
                    return Some(SyntaxNode::internal(CASE_LABEL, c));
                }
                "default" => {
                    let c = vec![self.bump(), self.expect_as(":", PUNCT)?];
                    return Some(SyntaxNode::internal(DEFAULT_LABEL, c));
                }
                "return" => {
                    let mut c = vec![self.bump()];
                    if !self.at(";") {
                        c.push(self.expr()?);
                    }
                    c.push(self.expect(";")?);
                    return Some(SyntaxNode::internal(RETURN_STMT, c));
                }
                "goto" => {
                    let mut c = vec![self.bump()];
                    if !self.at_kind(TokKind::Identifier) {
                        return None;
                    }
                    c.push(self.bump());
                    c.push(self.expect(";")?);
                    return Some(SyntaxNode::internal(GOTO_STMT, c));
                }
                "break" | "continue" => {
                    let kind = if self.text_at(0) == "break" { BREAK_STMT } else { CONTINUE_STMT };
                    let c = vec![self.bump(), self.expect(";")?];
                    return Some(SyntaxNode::internal(kind, c));
                }
                _ => {}
            }
        }
        if self.at("{") {
            return self.block();
        }
        if self.at(";") {
            let semi = self.bump();
            return Some(SyntaxNode::internal(EMPTY_STMT, vec![semi]));
        }
        if self.at_kind(TokKind::Identifier) && self.text_at(1) == ":" && self.kind_at(1) == Some(TokKind::Operator) {
            let c = vec![self.bump(), self.bump_as(PUNCT)];
            return Some(SyntaxNode::internal(LABEL_STMT, c));
        }
        if self.is_decl_start() {
            if let Some(d) = self.attempt(Self::declaration) {
                return Some(d);
            }
        }
        self.expr_stmt()
    }

    fn paren_cond(&mut self, c: &mut Vec<SyntaxNode>) -> Option<()> {
        c.push(self.expect("(")?);
        c.push(self.expr()?);
        c.push(self.expect(")")?);
        Some(())
    }

    fn if_stmt(&mut self) -> P {
        let mut c = vec![self.bump()];
        self.paren_cond(&mut c)?;
        c.push(self.statement_inner()?);
        if self.at("else") && self.at_kind(TokKind::Keyword) {
            c.push(self.bump());
            c.push(self.statement_inner()?);
        }
        Some(SyntaxNode::internal(IF_STMT, c))
    }

    fn for_stmt(&mut self) -> P {
        let mut c = vec![self.bump(), self.expect("(")?];
        if self.at(";") {
            c.push(self.bump());
        } else if self.is_decl_start() {
            c.push(self.declaration()?);
        } else {
            c.push(self.expr()?);
            c.push(self.expect(";")?);
        }
        if !self.at(";") {
            c.push(self.expr()?);
        }
        c.push(self.expect(";")?);
        if !self.at(")") {
            c.push(self.expr()?);
        }
        c.push(self.expect(")")?);
        c.push(self.statement_inner()?);
        Some(SyntaxNode::internal(FOR_STMT, c))
    }

    fn expr_stmt(&mut self) -> P {
        let e = self.expr()?;
        if self.at(";") {
            let semi = self.bump();
            return Some(SyntaxNode::internal(EXPR_STMT, vec![e, semi]));
        }
        if e.kind == CALL && self.at("{") {
            let body = self.block()?;
            return Some(SyntaxNode::internal(MACRO_LOOP, vec![e, body]));
        }
        None
    }

    // ---- expressions ---------------------------------------------------

    fn expr(&mut self) -> P {
        let mut lhs = self.assign()?;
        while self.at(",") {
            let op = self.bump();
            let rhs = self.assign()?;
            lhs = SyntaxNode::internal(BINARY_OP, vec![lhs, op, rhs]);
        }
        Some(lhs)
    }

    fn assign(&mut self) -> P {
        let lhs = self.ternary()?;
        if self.at_kind(TokKind::Operator) && ASSIGN_OPS.contains(&self.text_at(0)) {
            let op = self.bump();
            let rhs = self.assign()?;
            return Some(SyntaxNode::internal(ASSIGNMENT, vec![lhs, op, rhs]));
        }
        Some(lhs)
    }

    fn ternary(&mut self) -> P {
        let cond = self.binary(1)?;
        if self.at("?") {
            let q = self.bump();
            let then = self.expr()?;
            let colon = self.expect(":")?;
            let other = self.ternary()?;
            return Some(SyntaxNode::internal(TERNARY, vec![cond, q, then, colon, other]));
        }
        Some(cond)
    }

    fn binary(&mut self, min_prec: u8) -> P {
        let mut lhs = self.unary()?;
        loop {
            if !self.at_kind(TokKind::Operator) {
                break;
            }
            let Some(prec) = binary_precedence(self.text_at(0)) else {
                break;
            };
            if prec < min_prec {
                break;
            }
            let op = self.bump();
            let rhs = self.binary(prec + 1)?;
            lhs = SyntaxNode::internal(BINARY_OP, vec![lhs, op, rhs]);
        }
        Some(lhs)
    }

    fn looks_like_cast(&self) -> bool {
        if !self.at("(") {
            return false;
        }
        if self.is_type_start(1) {
            return true;
        }
        if self.kind_at(1) != Some(TokKind::Identifier) {
            return false;
        }
        let mut k = 2;
        let mut stars = 0;
        while self.text_at(k) == "*" {
            k += 1;
            stars += 1;
        }
        if self.text_at(k) != ")" {
            return false;
        }
        if stars > 0 {
            return true;
        }
        match self.kind_at(k + 1) {
            Some(TokKind::Identifier) | Some(TokKind::Literal) => true,
            Some(TokKind::Operator) => matches!(self.text_at(k + 1), "!" | "~"),
            _ => false,
        }
    }

    fn type_name(&mut self) -> P {
        let mut leaves = Vec::new();
        let mut depth = 0usize;
        loop {
            if self.eof() {
                return None;
            }
            let text = self.text_at(0);
            let is_punct = self.at_kind(TokKind::Punct);
            if is_punct {
                match text {
                    ")" if depth == 0 => break,
                    "(" | "[" => depth += 1,
                    ")" | "]" => depth -= 1,
                    ";" | "{" | "}" => return None,
                    _ => {}
                }
            }
            leaves.push(self.bump());
        }
        if leaves.is_empty() {
            return None;
        }
        Some(SyntaxNode::internal(TYPE_NAME, leaves))
    }

    fn unary(&mut self) -> P {
        if self.at_kind(TokKind::Operator) && PREFIX_OPS.contains(&self.text_at(0)) {
            let op = self.bump();
            let operand = self.unary()?;
            return Some(SyntaxNode::internal(UNARY_OP, vec![op, operand]));
        }
        if self.at("sizeof") && self.at_kind(TokKind::Keyword) {
            let kw = self.bump();
            if self.at("(") && (self.is_type_start(1) || self.looks_like_cast()) {
                let open = self.bump();
                let ty = self.type_name()?;
                let close = self.expect(")")?;
                return Some(SyntaxNode::internal(SIZEOF_EXPR, vec![kw, open, ty, close]));
            }
            let operand = self.unary()?;
            return Some(SyntaxNode::internal(SIZEOF_EXPR, vec![kw, operand]));
        }
        if self.looks_like_cast() {
            let open = self.bump();
            let ty = self.type_name()?;
            let close = self.expect(")")?;
            if self.at("{") {
                let init = self.init_list()?;
                return Some(SyntaxNode::internal(COMPOUND_LITERAL, vec![open, ty, close, init]));
            }
            let operand = self.unary()?;
            return Some(SyntaxNode::internal(CAST_EXPR, vec![open, ty, close, operand]));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> P {
        let mut e = self.primary()?;
        loop {
            if self.at("(") {
                let args = self.arg_list()?;
                e = SyntaxNode::internal(CALL, vec![e, args]);
            } else if self.at("[") {
                let open = self.bump();
                let idx = self.expr()?;
                let close = self.expect("]")?;
                e = SyntaxNode::internal(INDEX_EXPR, vec![e, open, idx, close]);
            } else if self.at(".") || self.at("->") {
                let op = self.bump();
                if !self.at_kind(TokKind::Identifier) {
                    return None;
                }
                let field = self.bump();
                e = SyntaxNode::internal(FIELD_ACCESS, vec![e, op, field]);
            } else if self.at("++") || self.at("--") {
                let op = self.bump();
                e = SyntaxNode::internal(POSTFIX_OP, vec![e, op]);
            } else {
                break;
            }
        }
        Some(e)
    }

    fn primary(&mut self) -> P {
        match self.kind_at(0)? {
            TokKind::Identifier => Some(self.bump()),
            TokKind::Literal => {
                let first = self.bump();
                if !self.at_kind(TokKind::Literal) {
                    return Some(first);
                }
                let mut parts = vec![first];
                while self.at_kind(TokKind::Literal) {
                    parts.push(self.bump());
                }
                Some(SyntaxNode::internal(STRING_CONCAT, parts))
            }
            TokKind::Punct if self.at("(") => {
                if self.text_at(1) == "{" {
                    return None;
                }
                let open = self.bump();
                let inner = self.expr()?;
                let close = self.expect(")")?;
                Some(SyntaxNode::internal(PAREN_EXPR, vec![open, inner, close]))
            }
            _ => None,
        }
    }

    fn arg_list(&mut self) -> P {
        let mut items = vec![self.expect("(")?];
        if self.at(")") {
            items.push(self.bump());
            return Some(SyntaxNode::internal(ARG_LIST, items));
        }
        loop {
            let arg = match self.attempt(|p| {
                let a = p.assign()?;
                (p.at(",") || p.at(")")).then_some(a)
            }) {
                Some(a) => a,
                None => self.macro_arg()?,
            };
            items.push(arg);
            if self.at(",") {
                items.push(self.bump_as(PUNCT));
            } else if self.at(")") {
                items.push(self.bump());
                break;
            } else {
                return None;
            }
        }
        Some(SyntaxNode::internal(ARG_LIST, items))
    }

    /// A macro argument that is not an expression (a type, a bare operator):
    /// flat leaves up to the next top-level `,` or `)`.
    fn macro_arg(&mut self) -> P {
        let mut leaves = Vec::new();
        let mut depth = 0usize;
        loop {
            if self.eof() || self.at_kind(TokKind::Preproc) {
                return None;
            }
            let text = self.text_at(0);
            let is_punct = self.at_kind(TokKind::Punct);
            if depth == 0 && (text == "," || (text == ")" && is_punct)) {
                break;
            }
            if is_punct {
                match text {
                    "(" | "[" => depth += 1,
                    ")" | "]" => depth -= 1,
                    ";" | "{" | "}" => return None,
                    _ => {}
                }
            }
            leaves.push(self.bump());
        }
        if leaves.is_empty() {
            return None;
        }
        Some(SyntaxNode::internal(MACRO_ARG, leaves))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::lexer;

    fn parse(src: &str) -> SyntaxNode {
        CSubset.parse(src)
    }

    /// Leaf tokens with the original gaps between them reproduce the input,
    /// and the gaps hold nothing but whitespace and comments.
    fn assert_lossless(src: &str, root: &SyntaxNode) {
        let mut rebuilt = String::new();
        let mut prev = 0;
        for leaf in root.leaves() {
            if leaf.kind == TRANSLATION_UNIT {
                continue;
            }
            let gap = &src[prev..leaf.span.start];
            assert!(lexer::tokenize(gap).is_empty(), "non-trivia gap {gap:?}");
            rebuilt.push_str(gap);
            let tok = leaf.token.as_deref().unwrap();
            assert_eq!(tok, &src[leaf.span.start..leaf.span.end]);
            rebuilt.push_str(tok);
            prev = leaf.span.end;
        }
        rebuilt.push_str(&src[prev..]);
        assert_eq!(rebuilt, src);
    }

    fn kinds(n: &SyntaxNode) -> Vec<&str> {
        n.children.iter().map(|c| c.kind.as_str()).collect()
    }

    #[test]
    fn empty_input_is_a_bare_root() {
        let root = parse("");
        assert_eq!(root.kind, TRANSLATION_UNIT);
        assert!(root.children.is_empty());
        assert_eq!(root.span, Span::new(0, 0));
    }

    #[test]
    fn guard_statement_shape() {
        let src = "if (len > 6) return -EINVAL;";
        let root = parse(src);
        assert_lossless(src, &root);
        let stmt = &root.children[0];
        // At file scope the statement parses as an expression-free unknown
        // region; inside a function body it is an IfStmt.
        let body = parse(&format!("void f(void) {{ {src} }}"));
        let block = body.children[0].children.last().unwrap();
        let if_stmt = &block.children[1];
        assert_eq!(if_stmt.kind, IF_STMT);
        let cond = &if_stmt.children[2];
        assert_eq!(cond.kind, BINARY_OP);
        assert_eq!(kinds(cond), vec![IDENTIFIER, OPERATOR, LITERAL]);
        assert_eq!(cond.children[1].token.as_deref(), Some(">"));
        assert_eq!(if_stmt.children[4].kind, RETURN_STMT);
        assert_eq!(stmt.kind, UNKNOWN);
    }

    #[test]
    fn directive_is_a_single_leaf() {
        let src = "#ifdef CONFIG_SECURITY\n";
        let root = parse(src);
        assert_eq!(root.children.len(), 1);
        let leaf = &root.children[0];
        assert_eq!(leaf.kind, PREPROC_LINE);
        assert_eq!(leaf.token.as_deref(), Some("#ifdef CONFIG_SECURITY"));
    }

    #[test]
    fn function_definition() {
        let src = "static int __init foo_init(struct foo *f, const char __user *buf)\n{\n\tint i = 0;\n\treturn f->x[i];\n}\n";
        let root = parse(src);
        assert_lossless(src, &root);
        let f = &root.children[0];
        assert_eq!(f.kind, FUNCTION_DEF);
        assert_eq!(f.function_name(), Some("foo_init"));
        let block = f.children.last().unwrap();
        assert_eq!(kinds(block), vec![PUNCT, DECLARATION, RETURN_STMT, PUNCT]);
    }

    #[test]
    fn statements_of_every_kind() {
        let src = r#"
int g(int n)
{
	int a[4], *p = &a[0];
	struct s v = { .x = 1, [2] = 3, };
	for (int i = 0; i < n; i++) {
		if (!p) continue; else break;
	}
	while (n--) p++;
	do { n += 2; } while (n < 10);
	switch (n) {
	case 1 ... 3:
		n = (u8)n;
		break;
	default:
		goto out;
	}
	list_for_each_entry(v, &head, list) {
		kfree(v);
	}
	n = sizeof(struct s) + sizeof n;
	n = n ? n : -1;
	v.x = p->y;
	memcpy(dst, "a" "b", ARRAY_SIZE(a));
out:
	return n;
}
"#;
        let root = parse(src);
        assert_lossless(src, &root);
        assert!(
            !root.preorder().any(|n| n.kind == UNKNOWN),
            "{}",
            root.to_sexpr()
        );
        let all: Vec<&str> = root.preorder().map(|n| n.kind.as_str()).collect();
        for k in [
            FOR_STMT, WHILE_STMT, DO_STMT, SWITCH_STMT, CASE_LABEL, DEFAULT_LABEL, GOTO_STMT,
            LABEL_STMT, MACRO_LOOP, SIZEOF_EXPR, TERNARY, CAST_EXPR, STRING_CONCAT, INIT_LIST,
            INIT_ITEM, INDEX_EXPR, FIELD_ACCESS,
        ] {
            assert!(all.contains(&k), "missing {k}");
        }
    }

    #[test]
    fn garbage_is_tolerated() {
        let src = "int f(void) { int x = @@ 3; return x; }\nstruct { ;; @";
        let root = parse(src);
        assert_lossless(src, &root);
        assert!(root.preorder().any(|n| n.kind == UNKNOWN));
        assert_eq!(root.children[0].kind, FUNCTION_DEF);
    }

    #[test]
    fn top_level_macro_invocations() {
        let src = "EXPORT_SYMBOL(foo);\nMODULE_LICENSE(\"GPL\");\nstatic DEFINE_MUTEX(lock);\n";
        let root = parse(src);
        assert_lossless(src, &root);
        assert_eq!(kinds(&root), vec![EXPR_STMT, EXPR_STMT, DECLARATION]);
        assert_eq!(root.children[2].children[1].kind, CALL);
    }

    #[test]
    fn struct_and_enum_definitions() {
        let src = "struct msg {\n\tu8 msg[6];\n\tu8 msg_len;\n\tunsigned flag : 1;\n};\nenum e { A, B = 2, };\ntypedef int (*cb_t)(void *);\n";
        let root = parse(src);
        assert_lossless(src, &root);
        assert!(!root.preorder().any(|n| n.kind == UNKNOWN), "{}", root.to_sexpr());
    }

    #[test]
    fn comments_are_not_leaves() {
        let src = "/* header */\nint x; // trailing\n";
        let root = parse(src);
        assert_lossless(src, &root);
        assert_eq!(root.leaves().count(), 3);
    }
}
