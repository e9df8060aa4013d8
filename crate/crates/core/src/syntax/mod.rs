//! Generic ordered, labeled syntax trees and the pluggable grammar front-ends
//! that produce them.

mod c;
pub mod lexer;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::digest::{Digest, FieldHasher};
use crate::error::{Error, Result};
use crate::sexpr;

pub use c::CSubset;

/// Identifier of the bundled C-subset front-end. Bumped whenever its node
/// vocabulary changes, since fingerprints depend on it.
pub const C_GRAMMAR_ID: &str = "c-subset/1";

/// Node kinds produced by the C-subset grammar.
pub mod kind {
    pub const TRANSLATION_UNIT: &str = "TranslationUnit";
    pub const FUNCTION_DEF: &str = "FunctionDef";
    pub const DECLARATION: &str = "Declaration";
    pub const DECLARATOR: &str = "Declarator";
    pub const INIT_DECLARATOR: &str = "InitDeclarator";
    pub const PAREN_DECLARATOR: &str = "ParenDeclarator";
    pub const ARRAY_SUFFIX: &str = "ArraySuffix";
    pub const PARAM_LIST: &str = "ParamList";
    pub const PARAM: &str = "Param";
    pub const STRUCT_SPEC: &str = "StructSpec";
    pub const FIELD_LIST: &str = "FieldList";
    pub const ENUM_SPEC: &str = "EnumSpec";
    pub const ENUMERATOR_LIST: &str = "EnumeratorList";
    pub const ENUMERATOR: &str = "Enumerator";
    pub const INIT_LIST: &str = "InitList";
    pub const INIT_ITEM: &str = "InitItem";
    pub const ATTRIBUTE: &str = "Attribute";
    pub const TYPE_NAME: &str = "TypeName";

    pub const BLOCK: &str = "Block";
    pub const IF_STMT: &str = "IfStmt";
    pub const FOR_STMT: &str = "ForStmt";
    pub const WHILE_STMT: &str = "WhileStmt";
    pub const DO_STMT: &str = "DoStmt";
    pub const SWITCH_STMT: &str = "SwitchStmt";
    pub const CASE_LABEL: &str = "CaseLabel";
    pub const DEFAULT_LABEL: &str = "DefaultLabel";
    pub const RETURN_STMT: &str = "ReturnStmt";
    pub const GOTO_STMT: &str = "GotoStmt";
    pub const BREAK_STMT: &str = "BreakStmt";
    pub const CONTINUE_STMT: &str = "ContinueStmt";
    pub const LABEL_STMT: &str = "LabelStmt";
    pub const EXPR_STMT: &str = "ExprStmt";
    pub const EMPTY_STMT: &str = "EmptyStmt";
    pub const MACRO_LOOP: &str = "MacroLoop";

    pub const ASSIGNMENT: &str = "Assignment";
    pub const TERNARY: &str = "Ternary";
    pub const BINARY_OP: &str = "BinaryOp";
    pub const UNARY_OP: &str = "UnaryOp";
    pub const POSTFIX_OP: &str = "PostfixOp";
    pub const CAST_EXPR: &str = "CastExpr";
    pub const COMPOUND_LITERAL: &str = "CompoundLiteral";
    pub const SIZEOF_EXPR: &str = "SizeofExpr";
    pub const CALL: &str = "Call";
    pub const ARG_LIST: &str = "ArgList";
    pub const MACRO_ARG: &str = "MacroArg";
    pub const INDEX_EXPR: &str = "IndexExpr";
    pub const FIELD_ACCESS: &str = "FieldAccess";
    pub const PAREN_EXPR: &str = "ParenExpr";
    pub const STRING_CONCAT: &str = "StringConcat";

    // Leaves.
    pub const IDENTIFIER: &str = "Identifier";
    pub const LITERAL: &str = "Literal";
    pub const OPERATOR: &str = "Operator";
    pub const PUNCT: &str = "Punct";
    pub const KEYWORD: &str = "Keyword";
    pub const TYPE: &str = "Type";
    pub const SPECIFIER: &str = "Specifier";
    pub const PREPROC_LINE: &str = "PreprocLine";
    pub const UNKNOWN: &str = "Unknown";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntaxNode {
    pub kind: String,
    /// Lexeme; present exactly on leaves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
    pub span: Span,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<SyntaxNode>,
}

impl SyntaxNode {
    pub fn leaf(kind: impl Into<String>, token: impl Into<String>, span: Span) -> Self {
        SyntaxNode {
            kind: kind.into(),
            token: Some(token.into()),
            span,
            children: Vec::new(),
        }
    }

    /// Builds an internal node whose span runs from its first to its last child.
    ///
    /// Panics if `children` is empty.
    pub fn internal(kind: impl Into<String>, children: Vec<SyntaxNode>) -> Self {
        let start = children.first().expect("internal node needs children").span.start;
        let end = children.last().unwrap().span.end;
        SyntaxNode {
            kind: kind.into(),
            token: None,
            span: Span::new(start, end),
            children,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Leaves whose content is already implied by the kind of their parent:
    /// punctuation and statement keywords.
    pub fn is_implied(&self) -> bool {
        self.is_leaf() && (self.kind == kind::PUNCT || self.kind == kind::KEYWORD)
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(SyntaxNode::size).sum::<usize>()
    }

    /// Preorder traversal.
    pub fn preorder(&self) -> Preorder<'_> {
        Preorder { stack: vec![self] }
    }

    pub fn leaves(&self) -> impl Iterator<Item = &SyntaxNode> {
        self.preorder().filter(|n| n.is_leaf())
    }

    /// Name of a `FunctionDef` node: the first identifier of its declarator.
    pub fn function_name(&self) -> Option<&str> {
        if self.kind != kind::FUNCTION_DEF {
            return None;
        }
        let decl = self.children.iter().find(|c| c.kind == kind::DECLARATOR)?;
        fn first_ident(n: &SyntaxNode) -> Option<&str> {
            for c in &n.children {
                if c.kind == kind::IDENTIFIER {
                    return c.token.as_deref();
                }
                if c.kind == kind::PAREN_DECLARATOR || c.kind == kind::DECLARATOR {
                    if let Some(s) = first_ident(c) {
                        return Some(s);
                    }
                }
            }
            None
        }
        first_ident(decl)
    }

    /// Canonical S-expression form: `(Kind child...)` for internal nodes and
    /// `(Kind "token")` for leaves. Spans are not part of it.
    pub fn to_sexpr(&self) -> String {
        let mut out = String::new();
        self.write_sexpr(&mut out);
        out
    }

    fn write_sexpr(&self, out: &mut String) {
        out.push('(');
        out.push_str(&self.kind);
        if let Some(t) = &self.token {
            out.push(' ');
            sexpr::quote(t, out);
        }
        for c in &self.children {
            out.push(' ');
            c.write_sexpr(out);
        }
        out.push(')');
    }
}

pub struct Preorder<'a> {
    stack: Vec<&'a SyntaxNode>,
}

impl<'a> Iterator for Preorder<'a> {
    type Item = &'a SyntaxNode;

    fn next(&mut self) -> Option<Self::Item> {
        let n = self.stack.pop()?;
        self.stack.extend(n.children.iter().rev());
        Some(n)
    }
}

/// Combines a node's own label with its children's digests.
pub(crate) fn node_digest<'a>(
    kind: &str,
    token: Option<&str>,
    children: impl ExactSizeIterator<Item = &'a Digest>,
) -> Digest {
    let mut h = FieldHasher::new(b"syntax-node\0");
    h.str(kind).opt_str(token).u64(children.len() as u64);
    for d in children {
        h.digest(d);
    }
    h.finish()
}

/// Digest over kinds, tokens and child order. Spans do not contribute, so two
/// subtrees are isomorphic exactly when their digests agree.
pub fn subtree_digest(node: &SyntaxNode) -> Digest {
    let child: Vec<Digest> = node.children.iter().map(subtree_digest).collect();
    node_digest(&node.kind, node.token.as_deref(), child.iter())
}

/// Leaves have height 1.
pub fn node_height(node: &SyntaxNode) -> usize {
    1 + node.children.iter().map(node_height).max().unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntaxTree {
    pub root: SyntaxNode,
    pub source_digest: Digest,
    pub grammar_id: String,
}

impl SyntaxTree {
    pub fn digest(&self) -> Digest {
        subtree_digest(&self.root)
    }
}

/// A grammar front-end: turns source text into a tree. Parsing never fails;
/// regions the grammar cannot analyze become `Unknown` leaves.
pub trait Grammar: Send + Sync {
    fn id(&self) -> &str;
    fn parse(&self, text: &str) -> SyntaxNode;
}

pub struct GrammarRegistry {
    grammars: Vec<Box<dyn Grammar>>,
}

impl GrammarRegistry {
    pub fn empty() -> Self {
        GrammarRegistry { grammars: Vec::new() }
    }

    pub fn register(&mut self, grammar: Box<dyn Grammar>) {
        self.grammars.retain(|g| g.id() != grammar.id());
        self.grammars.push(grammar);
    }

    pub fn get(&self, id: &str) -> Option<&dyn Grammar> {
        self.grammars.iter().find(|g| g.id() == id).map(|g| g.as_ref())
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.grammars.iter().map(|g| g.id())
    }

    pub fn parse(&self, text: &str, grammar_id: &str) -> Result<SyntaxTree> {
        let grammar = self
            .get(grammar_id)
            .ok_or_else(|| Error::UnknownGrammar(grammar_id.to_string()))?;
        Ok(SyntaxTree {
            root: grammar.parse(text),
            source_digest: Digest::of_bytes(text.as_bytes()),
            grammar_id: grammar_id.to_string(),
        })
    }
}

impl Default for GrammarRegistry {
    fn default() -> Self {
        let mut r = GrammarRegistry::empty();
        r.register(Box::new(CSubset));
        r
    }
}

fn default_registry() -> &'static GrammarRegistry {
    static REGISTRY: OnceLock<GrammarRegistry> = OnceLock::new();
    REGISTRY.get_or_init(GrammarRegistry::default)
}

/// Parses `text` with one of the built-in grammars.
pub fn parse_source(text: &str, grammar_id: &str) -> Result<SyntaxTree> {
    default_registry().parse(text, grammar_id)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(k: &str, t: &str) -> SyntaxNode {
        SyntaxNode::leaf(k, t, Span::new(0, 0))
    }

    #[test]
    fn digest_equal_for_equal_leaves() {
        assert_eq!(subtree_digest(&leaf("Identifier", "a")), subtree_digest(&leaf("Identifier", "a")));
    }

    #[test]
    fn digest_differs_on_one_token() {
        let a = SyntaxNode::internal("BinaryOp", vec![leaf("Identifier", "a"), leaf("Literal", "1")]);
        let b = SyntaxNode::internal("BinaryOp", vec![leaf("Identifier", "a"), leaf("Literal", "2")]);
        assert_ne!(subtree_digest(&a), subtree_digest(&b));
        assert_eq!(subtree_digest(&a), subtree_digest(&a.clone()));
    }

    #[test]
    fn digest_ignores_spans() {
        let a = SyntaxNode::leaf("Identifier", "a", Span::new(0, 1));
        let b = SyntaxNode::leaf("Identifier", "a", Span::new(7, 8));
        assert_eq!(subtree_digest(&a), subtree_digest(&b));
    }

    #[test]
    fn heights() {
        let l = leaf("Identifier", "x");
        assert_eq!(node_height(&l), 1);
        let two = SyntaxNode::internal("N", vec![l.clone(), l.clone()]);
        assert_eq!(node_height(&two), 2);
        let mut chain = l;
        for _ in 0..3 {
            chain = SyntaxNode::internal("N", vec![chain]);
        }
        assert_eq!(node_height(&chain), 4);
    }

    #[test]
    fn unknown_grammar_is_rejected() {
        assert!(matches!(parse_source("", "cobol"), Err(Error::UnknownGrammar(_))));
    }

    #[test]
    fn sexpr_dump() {
        let t = parse_source("x = 1;", C_GRAMMAR_ID).unwrap();
        assert_eq!(
            t.root.to_sexpr(),
            "(TranslationUnit (ExprStmt (Assignment (Identifier \"x\") (Operator \"=\") (Literal \"1\")) (Punct \";\")))"
        );
    }
}
