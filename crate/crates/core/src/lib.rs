//! Semi-automatic semantic markup of LaTeX formulas.
//!
//! A grammar describes the notation of a set of sTeX macros. Each formula
//! of a document is parsed exhaustively; every reading becomes an AST, and
//! the chosen one is written back as semantic macros.

pub mod grammar;
pub mod lexing;
pub mod glr;
pub mod ast;
pub mod emit;
pub mod tex;
pub mod gen;
pub mod session;
pub mod server;
pub mod cli;
