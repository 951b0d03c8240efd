//! Context-free grammars whose terminals are literals, regexes or named
//! recognizers, plus the checks every grammar must pass before it is
//! compiled into parse tables.

mod text;
mod validate;

use std::collections::BTreeSet;
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

pub use text::parse_grammar_text;
pub use validate::{validate, ValidationReport};

/// A grammar symbol. Terminal kinds live in [`Grammar::terminals`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    NonTerminal(String),
    Terminal(String),
}

impl Symbol {
    pub fn name(&self) -> &str {
        match self {
            Symbol::NonTerminal(name) | Symbol::Terminal(name) => name,
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, Symbol::Terminal(_))
    }
}

/// How a terminal matches input text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TerminalKind {
    /// Matches any one of the listed literal strings (at least one, none empty).
    Literal(Vec<String>),
    /// An anchored regular expression.
    Regex(String),
    /// A scanning function looked up by name at parse time.
    Recognizer(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TerminalDef {
    pub kind: TerminalKind,
    /// Declared inline inside a rule (`"("`) rather than in the terminals section.
    pub inline: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Production {
    pub index: usize,
    pub lhs: String,
    pub rhs: Vec<Symbol>,
}

impl fmt::Display for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ->", self.lhs)?;
        if self.rhs.is_empty() {
            write!(f, " EMPTY")?;
        }
        for sym in &self.rhs {
            write!(f, " {}", sym.name())?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grammar {
    pub name: String,
    pub start: String,
    pub productions: Vec<Production>,
    pub terminals: IndexMap<String, TerminalDef>,
    pub skip_whitespace: bool,
    /// sTeX modules whose macros the grammar produces; informational only.
    pub modules: Vec<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("terminal `{0}` is declared more than once")]
    DuplicateTerminal(String),
    #[error("grammar has no productions")]
    EmptyGrammar,
    #[error("nonterminal `{0}` is used but has no rule")]
    UndefinedNonterminal(String),
    #[error("`{0}` is declared both as a rule and as a terminal")]
    NameConflict(String),
    #[error("start symbol `{0}` has no rule")]
    UndefinedStart(String),
    #[error("invalid regex for terminal `{id}`: {message}")]
    InvalidRegex { id: String, message: String },
    #[error("invalid terminal `{id}`: {message}")]
    InvalidTerminal { id: String, message: String },
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Grammar {
    pub fn new(name: impl Into<String>) -> Self {
        Grammar {
            name: name.into(),
            start: String::new(),
            productions: Vec::new(),
            terminals: IndexMap::new(),
            skip_whitespace: true,
            modules: Vec::new(),
        }
    }

    /// Appends a production. The first production fixes the start symbol
    /// unless one was already set.
    pub fn add_production(&mut self, lhs: impl Into<String>, rhs: Vec<Symbol>) -> usize {
        let lhs = lhs.into();
        if self.start.is_empty() {
            self.start = lhs.clone();
        }
        let index = self.productions.len();
        self.productions.push(Production { index, lhs, rhs });
        index
    }

    pub fn add_terminal(&mut self, id: impl Into<String>, kind: TerminalKind) -> Result<(), GrammarError> {
        let id = id.into();
        if self.terminals.contains_key(&id) {
            return Err(GrammarError::DuplicateTerminal(id));
        }
        self.terminals.insert(id, TerminalDef { kind, inline: false });
        Ok(())
    }

    /// Returns the id of the inline terminal matching exactly `text`,
    /// creating one if needed.
    pub fn intern_literal(&mut self, text: &str) -> String {
        let existing = self.terminals.iter().find(|(_, def)| {
            def.inline && matches!(&def.kind, TerminalKind::Literal(alts) if alts.len() == 1 && alts[0] == text)
        });
        if let Some((id, _)) = existing {
            return id.clone();
        }
        let mut n = self.terminals.values().filter(|d| d.inline).count();
        let id = loop {
            let candidate = format!("_lit{n}");
            if !self.terminals.contains_key(&candidate) && !self.has_rule(&candidate) {
                break candidate;
            }
            n += 1;
        };
        self.terminals.insert(
            id.clone(),
            TerminalDef {
                kind: TerminalKind::Literal(vec![text.to_string()]),
                inline: true,
            },
        );
        id
    }

    pub fn has_rule(&self, name: &str) -> bool {
        self.productions.iter().any(|p| p.lhs == name)
    }

    /// Nonterminal names in order of their first rule.
    pub fn nonterminals(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for p in &self.productions {
            if seen.insert(p.lhs.as_str()) {
                out.push(p.lhs.as_str());
            }
        }
        out
    }

    pub fn productions_for<'a>(&'a self, lhs: &'a str) -> impl Iterator<Item = &'a Production> + 'a {
        self.productions.iter().filter(move |p| p.lhs == lhs)
    }

    pub fn terminal_kind(&self, id: &str) -> Option<&TerminalKind> {
        self.terminals.get(id).map(|d| &d.kind)
    }

    /// How a terminal is shown to users: inline literals by their quoted
    /// text, everything else by id.
    pub fn terminal_label(&self, id: &str) -> String {
        match self.terminals.get(id) {
            Some(TerminalDef {
                kind: TerminalKind::Literal(alts),
                inline: true,
            }) => format!("\"{}\"", alts[0]),
            _ => id.to_string(),
        }
    }

    pub fn is_literal_terminal(&self, id: &str) -> bool {
        matches!(self.terminal_kind(id), Some(TerminalKind::Literal(_)))
    }

    /// Checks that every referenced symbol is defined and every terminal is
    /// well formed. Does not look for cycles; see [`validate`].
    pub fn check_structure(&self) -> Result<(), GrammarError> {
        if self.productions.is_empty() {
            return Err(GrammarError::EmptyGrammar);
        }
        if !self.has_rule(&self.start) {
            return Err(GrammarError::UndefinedStart(self.start.clone()));
        }
        for id in self.terminals.keys() {
            if self.has_rule(id) {
                return Err(GrammarError::NameConflict(id.clone()));
            }
        }
        for p in &self.productions {
            for sym in &p.rhs {
                match sym {
                    Symbol::NonTerminal(n) if !self.has_rule(n) => {
                        return Err(GrammarError::UndefinedNonterminal(n.clone()))
                    }
                    Symbol::Terminal(t) if !self.terminals.contains_key(t) => {
                        return Err(GrammarError::InvalidTerminal {
                            id: t.clone(),
                            message: "terminal is not declared".into(),
                        })
                    }
                    _ => {}
                }
            }
        }
        for (id, def) in &self.terminals {
            match &def.kind {
                TerminalKind::Literal(alts) => {
                    if alts.is_empty() || alts.iter().any(|a| a.is_empty()) {
                        return Err(GrammarError::InvalidTerminal {
                            id: id.clone(),
                            message: "literal text must be nonempty".into(),
                        });
                    }
                }
                TerminalKind::Regex(pattern) => {
                    crate::lexing::compile_regex(pattern).map_err(|message| GrammarError::InvalidRegex {
                        id: id.clone(),
                        message,
                    })?;
                }
                TerminalKind::Recognizer(hook) => {
                    if !is_identifier(hook) {
                        return Err(GrammarError::InvalidTerminal {
                            id: id.clone(),
                            message: format!("`{hook}` is not a valid recognizer name"),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Nonterminals that derive the empty string.
    pub fn nullable_set(&self) -> BTreeSet<String> {
        let mut nullable = BTreeSet::new();
        loop {
            let mut changed = false;
            for p in &self.productions {
                if nullable.contains(&p.lhs) {
                    continue;
                }
                let all = p.rhs.iter().all(|s| match s {
                    Symbol::NonTerminal(n) => nullable.contains(n),
                    Symbol::Terminal(_) => false,
                });
                if all {
                    nullable.insert(p.lhs.clone());
                    changed = true;
                }
            }
            if !changed {
                return nullable;
            }
        }
    }

    /// Serializes to the textual grammar format.
    pub fn to_text(&self) -> String {
        text::to_text(self)
    }

    /// Ignoring production indices, do both grammars describe the same rules?
    pub fn same_rules(&self, other: &Grammar) -> bool {
        let key = |g: &Grammar| {
            g.productions
                .iter()
                .map(|p| (p.lhs.clone(), p.rhs.clone()))
                .collect::<Vec<_>>()
        };
        self.start == other.start && self.terminals == other.terminals && key(self) == key(other)
    }
}
