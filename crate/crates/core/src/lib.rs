//! Information-flow verification for a small C-like language: a Hoare-style
//! checker with security classifications, a continuation-stack interpreter
//! and an enumerative two-run oracle.

pub mod logic;
pub mod semantics;
pub mod types;
pub mod parser;
pub mod program;
pub mod checker;
pub mod oracle;
pub mod cli;
