//! Fix-pattern mining and detection of incomplete security fixes.
//!
//! The pipeline runs in stages: a CVE manifest is split into fine-grained
//! per-file patches ([`corpus`]), each patch's before/after snapshots are
//! parsed ([`syntax`]) and differenced ([`treediff`]), the resulting edit
//! scripts are abstracted into fix patterns and fingerprints ([`pattern`]),
//! and per-CVE fingerprint graphs flag fixes that applied one pattern across
//! several sibling components ([`detect`]). [`stats`] computes the
//! patch-characteristics metrics over the same corpus.

pub mod corpus;
pub mod detect;
pub mod digest;
pub mod error;
pub mod pattern;
pub mod pipeline;
pub mod sexpr;
pub mod stats;
pub mod syntax;
pub mod treediff;

pub use digest::Digest;
pub use error::{Error, Result};
pub use syntax::{parse_source, SyntaxNode, SyntaxTree, C_GRAMMAR_ID};
