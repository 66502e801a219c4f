//! Source syntax: `.ifc.c` files with `//@` specification annotations.

pub mod lexer;
pub mod parse;
pub mod pretty;

pub use lexer::ParseError;
pub use parse::{parse, parse_with, ParseOptions};
pub use pretty::{pretty, pretty_stmt};
