//! Context-aware scanning of formula text.
//!
//! The parser asks for the terminals its live states can accept at a given
//! position and gets back every terminal that matches there, each with its
//! longest match. Choosing between them is left to the parser.

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use regex_automata::dfa::{dense, Automaton, StartKind};
use regex_automata::{Anchored, Input, MatchKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{Grammar, TerminalKind};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub terminal: String,
    pub lexeme: String,
    pub span: Range<usize>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LexError {
    #[error("terminal `{terminal}` uses unknown recognizer `{hook}`")]
    UnknownRecognizer { terminal: String, hook: String },
    #[error("unknown terminal `{0}`")]
    UnknownTerminal(String),
    #[error("invalid regex for terminal `{terminal}`: {message}")]
    InvalidRegex { terminal: String, message: String },
}

/// `(input, byte offset) -> length of the match`, never zero.
pub type RecognizerFn = dyn Fn(&str, usize) -> Option<usize> + Send + Sync;

/// Named recognizers available to grammars through `@recognizer(name)`.
#[derive(Clone)]
pub struct RecognizerRegistry {
    hooks: HashMap<String, Arc<RecognizerFn>>,
}

impl fmt::Debug for RecognizerRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut names: Vec<_> = self.hooks.keys().collect();
        names.sort();
        f.debug_struct("RecognizerRegistry").field("hooks", &names).finish()
    }
}

impl Default for RecognizerRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl RecognizerRegistry {
    pub fn empty() -> Self {
        RecognizerRegistry { hooks: HashMap::new() }
    }

    /// Registry holding `lc_variable` and `natural_number`.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register("lc_variable", variable_recognizer);
        r.register("natural_number", nat_recognizer);
        r
    }

    pub fn register<F>(&mut self, name: impl Into<String>, f: F)
    where
        F: Fn(&str, usize) -> Option<usize> + Send + Sync + 'static,
    {
        self.hooks.insert(name.into(), Arc::new(f));
    }

    pub fn get(&self, name: &str) -> Option<&RecognizerFn> {
        self.hooks.get(name).map(|f| f.as_ref())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.hooks.contains_key(name)
    }
}

fn apostrophes(bytes: &[u8], mut i: usize) -> usize {
    while bytes.get(i) == Some(&b'\'') {
        i += 1;
    }
    i
}

/// Meta-variables: a lowercase letter with optional apostrophes and at most
/// one braced numeric subscript, e.g. `x`, `x'`, `y_{1}`, `z_{2}''`.
pub fn variable_recognizer(input: &str, pos: usize) -> Option<usize> {
    let bytes = input.as_bytes();
    if !bytes.get(pos)?.is_ascii_lowercase() {
        return None;
    }
    let mut i = apostrophes(bytes, pos + 1);
    if bytes.get(i) == Some(&b'_') && bytes.get(i + 1) == Some(&b'{') {
        let digits_start = i + 2;
        let mut j = digits_start;
        while bytes.get(j).is_some_and(u8::is_ascii_digit) {
            j += 1;
        }
        if j > digits_start && bytes.get(j) == Some(&b'}') {
            i = apostrophes(bytes, j + 1);
        }
    }
    Some(i - pos)
}

/// Natural numbers without leading zeros.
pub fn nat_recognizer(input: &str, pos: usize) -> Option<usize> {
    let bytes = input.as_bytes();
    match bytes.get(pos)? {
        b'0' => Some(1),
        b'1'..=b'9' => {
            let mut i = pos + 1;
            while bytes.get(i).is_some_and(u8::is_ascii_digit) {
                i += 1;
            }
            Some(i - pos)
        }
        _ => None,
    }
}

pub(crate) fn compile_regex(pattern: &str) -> Result<dense::DFA<Vec<u32>>, String> {
    dense::Builder::new()
        .configure(
            dense::Config::new()
                .match_kind(MatchKind::All)
                .start_kind(StartKind::Anchored),
        )
        .build(pattern)
        .map_err(|e| e.to_string())
}

enum Matcher {
    Literal(Vec<String>),
    Regex(Box<dense::DFA<Vec<u32>>>),
    Recognizer(String),
}

/// A control word (`\` followed by letters) must not run into more letters.
fn is_control_word(lit: &str) -> bool {
    lit.len() > 1 && lit.starts_with('\\') && lit[1..].chars().all(|c| c.is_ascii_alphabetic())
}

fn skip_ws(input: &str, mut pos: usize) -> usize {
    let bytes = input.as_bytes();
    while matches!(bytes.get(pos), Some(b' ' | b'\t' | b'\n' | b'\r')) {
        pos += 1;
    }
    pos
}

/// Precompiled matchers for a grammar's terminals, indexed like
/// `grammar.terminals`.
pub struct Scanner {
    ids: Vec<String>,
    matchers: Vec<Matcher>,
    skip_whitespace: bool,
}

impl fmt::Debug for Scanner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scanner").field("terminals", &self.ids).finish()
    }
}

impl Scanner {
    pub fn new(grammar: &Grammar) -> Result<Self, LexError> {
        let mut ids = Vec::new();
        let mut matchers = Vec::new();
        for (id, def) in &grammar.terminals {
            let m = match &def.kind {
                TerminalKind::Literal(alts) => Matcher::Literal(alts.clone()),
                TerminalKind::Regex(p) => Matcher::Regex(Box::new(compile_regex(p).map_err(|message| {
                    LexError::InvalidRegex {
                        terminal: id.clone(),
                        message,
                    }
                })?)),
                TerminalKind::Recognizer(h) => Matcher::Recognizer(h.clone()),
            };
            ids.push(id.clone());
            matchers.push(m);
        }
        Ok(Scanner {
            ids,
            matchers,
            skip_whitespace: grammar.skip_whitespace,
        })
    }

    pub fn terminal_id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn terminal_index(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|t| t == id)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Position of the next token after optional whitespace.
    pub fn skip(&self, input: &str, pos: usize) -> usize {
        if self.skip_whitespace {
            skip_ws(input, pos)
        } else {
            pos
        }
    }

    /// Fails if any recognizer hook is missing from `registry`.
    pub fn check_registry(&self, registry: &RecognizerRegistry) -> Result<(), LexError> {
        for (id, m) in self.ids.iter().zip(&self.matchers) {
            if let Matcher::Recognizer(h) = m {
                if !registry.contains(h) {
                    return Err(LexError::UnknownRecognizer {
                        terminal: id.clone(),
                        hook: h.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    fn match_len(&self, index: usize, input: &str, pos: usize, registry: &RecognizerRegistry) -> Result<Option<usize>, LexError> {
        let rest = &input[pos..];
        let len = match &self.matchers[index] {
            Matcher::Literal(alts) => alts
                .iter()
                .filter(|lit| rest.starts_with(lit.as_str()))
                .filter(|lit| {
                    !is_control_word(lit) || !rest[lit.len()..].starts_with(|c: char| c.is_ascii_alphabetic())
                })
                .map(|lit| lit.len())
                .max(),
            Matcher::Regex(dfa) => {
                let search = Input::new(input).range(pos..).anchored(Anchored::Yes);
                dfa.try_search_fwd(&search)
                    .ok()
                    .flatten()
                    .map(|m| m.offset() - pos)
            }
            Matcher::Recognizer(h) => {
                let f = registry.get(h).ok_or_else(|| LexError::UnknownRecognizer {
                    terminal: self.ids[index].clone(),
                    hook: h.clone(),
                })?;
                f(input, pos).filter(|&n| pos + n <= input.len() && input.is_char_boundary(pos + n))
            }
        };
        Ok(len.filter(|&n| n > 0))
    }

    /// All tokens of the `expected` terminals (by index) at the first
    /// non-whitespace position at or after `pos`, in terminal order.
    pub fn next_tokens(
        &self,
        input: &str,
        pos: usize,
        expected: impl IntoIterator<Item = usize>,
        registry: &RecognizerRegistry,
    ) -> Result<Vec<Token>, LexError> {
        let at = self.skip(input, pos);
        if at >= input.len() {
            return Ok(Vec::new());
        }
        let mut wanted: Vec<usize> = expected.into_iter().filter(|&i| i < self.ids.len()).collect();
        wanted.sort_unstable();
        wanted.dedup();
        let mut out = Vec::new();
        for i in wanted {
            if let Some(n) = self.match_len(i, input, at, registry)? {
                out.push(Token {
                    terminal: self.ids[i].clone(),
                    lexeme: input[at..at + n].to_string(),
                    span: at..at + n,
                });
            }
        }
        Ok(out)
    }
}

/// One-shot version of [`Scanner::next_tokens`] taking terminal ids.
pub fn next_tokens<'a>(
    input: &str,
    pos: usize,
    expected: impl IntoIterator<Item = &'a str>,
    grammar: &Grammar,
    registry: &RecognizerRegistry,
) -> Result<Vec<Token>, LexError> {
    let scanner = Scanner::new(grammar)?;
    let mut idx = Vec::new();
    for id in expected {
        idx.push(
            scanner
                .terminal_index(id)
                .ok_or_else(|| LexError::UnknownTerminal(id.to_string()))?,
        );
    }
    scanner.next_tokens(input, pos, idx, registry)
}
