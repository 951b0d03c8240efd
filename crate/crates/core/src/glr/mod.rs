//! Exhaustive parsing: LALR(1) tables whose conflicts are kept, driven by a
//! GLR parser that returns every derivation as a shared packed forest.

mod forest;
mod parser;
mod table;

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::grammar::{validate, Grammar, GrammarError, ValidationReport};
use crate::lexing::{LexError, RecognizerRegistry, Scanner};

pub use forest::{
    ForestNode, NodeId, PackedNode, ParseForest, ParseTree, TooManyParses, TreeCount, DEFAULT_ENUMERATION_CAP,
};
pub use table::Action;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompileError {
    #[error("invalid grammar: {0}")]
    InvalidGrammar(ValidationReport),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Lex(#[from] LexError),
}

/// Where the parser got stuck.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeadEnd {
    /// No expected terminal matches the input here.
    Lexical,
    /// Tokens matched but no parser state could use them.
    UnexpectedToken,
    /// The input ended while more was expected.
    PrematureEnd,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("no parse: {kind} at byte {position}, expected one of: {}", expected.join(", "))]
    NoParse {
        position: usize,
        /// Terminal ids, with inline literals shown as their quoted text.
        expected: Vec<String>,
        kind: DeadEnd,
    },
    #[error(transparent)]
    Lex(#[from] LexError),
}

impl std::fmt::Display for DeadEnd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DeadEnd::Lexical => "unknown symbol",
            DeadEnd::UnexpectedToken => "unexpected token",
            DeadEnd::PrematureEnd => "unexpected end of input",
        })
    }
}

/// A conflicting table cell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Conflict {
    pub state: usize,
    /// Terminal id, or `$end` for end of input.
    pub terminal: String,
    pub actions: Vec<Action>,
}

/// A validated grammar with its parse tables. Immutable and shareable.
#[derive(Debug, Clone)]
pub struct CompiledGrammar {
    grammar: Arc<Grammar>,
    pub(crate) cfg: table::Cfg,
    pub(crate) table: table::LalrTable,
    pub(crate) scanner: Arc<Scanner>,
    expected: Vec<Vec<usize>>,
}

impl CompiledGrammar {
    /// Builds LALR(1) tables. Refuses grammars with cycles or unproductive
    /// nonterminals.
    pub fn compile(grammar: Grammar) -> Result<Self, CompileError> {
        grammar.check_structure()?;
        let report = validate(&grammar);
        if !report.is_valid() {
            return Err(CompileError::InvalidGrammar(report));
        }
        let scanner = Scanner::new(&grammar)?;
        let cfg = table::Cfg::new(&grammar);
        let table = table::LalrTable::build(&cfg);
        let expected = table
            .actions
            .iter()
            .map(|row| {
                row.iter()
                    .take(cfg.num_terminals)
                    .enumerate()
                    .filter(|(_, cell)| !cell.is_empty())
                    .map(|(t, _)| t)
                    .collect()
            })
            .collect();
        Ok(CompiledGrammar {
            grammar: Arc::new(grammar),
            cfg,
            table,
            scanner: Arc::new(scanner),
            expected,
        })
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn num_states(&self) -> usize {
        self.table.num_states()
    }

    pub(crate) fn expected_terminals(&self, state: usize) -> impl Iterator<Item = usize> + '_ {
        self.expected[state].iter().copied()
    }

    /// Actions for `terminal` (an id, or `$end`) in `state`.
    pub fn actions(&self, state: usize, terminal: &str) -> &[Action] {
        let column = if terminal == "$end" {
            Some(self.cfg.eof())
        } else {
            self.scanner.terminal_index(terminal)
        };
        match column {
            Some(c) if state < self.table.num_states() => &self.table.actions[state][c],
            _ => &[],
        }
    }

    pub fn conflicts(&self) -> Vec<Conflict> {
        let mut out = Vec::new();
        for (state, row) in self.table.actions.iter().enumerate() {
            for (t, cell) in row.iter().enumerate() {
                if cell.len() > 1 {
                    let terminal = if t == self.cfg.eof() {
                        "$end".to_string()
                    } else {
                        self.scanner.terminal_id(t).to_string()
                    };
                    out.push(Conflict {
                        state,
                        terminal,
                        actions: cell.clone(),
                    });
                }
            }
        }
        out
    }

    /// Parses the whole input and returns all of its derivations.
    pub fn parse(&self, input: &str, registry: &RecognizerRegistry) -> Result<ParseForest, ParseError> {
        parser::parse(self, input, registry)
    }
}
