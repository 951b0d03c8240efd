//! Finding math formulas in LaTeX source and splicing replacements back in.
//!
//! This is a line-and-environment scanner, not a TeX parser: it honours
//! backslash escapes, `%` comments, `\verb` and verbatim-like environments,
//! and assumes math delimiters do not nest.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FormulaKind {
    /// `$...$`
    Inline,
    /// `$$...$$` or `\[...\]`
    Display,
    Environment(String),
}

impl fmt::Display for FormulaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormulaKind::Inline => f.write_str("inline"),
            FormulaKind::Display => f.write_str("display"),
            FormulaKind::Environment(name) => write!(f, "environment:{name}"),
        }
    }
}

impl Serialize for FormulaKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FormulaKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "inline" => Ok(FormulaKind::Inline),
            "display" => Ok(FormulaKind::Display),
            _ => s
                .strip_prefix("environment:")
                .map(|name| FormulaKind::Environment(name.to_string()))
                .ok_or_else(|| serde::de::Error::custom(format!("unknown formula kind {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulaSpan {
    /// Ordinal in document order, from 0.
    pub id: usize,
    pub kind: FormulaKind,
    /// Including delimiters.
    pub outer: Range<usize>,
    pub inner: Range<usize>,
    pub raw: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TexError {
    #[error("math opened at byte {0} is never closed")]
    UnterminatedMath(usize),
    #[error("no formula with id {0}")]
    UnknownFormula(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtractConfig {
    pub math_environments: Vec<String>,
    pub verbatim_environments: Vec<String>,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            math_environments: ["equation", "equation*", "align", "align*"].map(String::from).to_vec(),
            verbatim_environments: ["verbatim", "verbatim*", "minted", "lstlisting"].map(String::from).to_vec(),
        }
    }
}

/// Replacement texts for formula contents, keyed by formula id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RewritePlan {
    pub replacements: BTreeMap<usize, String>,
}

impl RewritePlan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn replace(mut self, id: usize, text: impl Into<String>) -> Self {
        self.replacements.insert(id, text.into());
        self
    }

    pub fn is_empty(&self) -> bool {
        self.replacements.is_empty()
    }
}

pub fn extract_formulas(document: &str) -> Result<Vec<FormulaSpan>, TexError> {
    extract_formulas_with(document, &ExtractConfig::default())
}

pub fn extract_formulas_with(document: &str, config: &ExtractConfig) -> Result<Vec<FormulaSpan>, TexError> {
    let b = document.as_bytes();
    let mut out = Vec::new();
    let mut push = |kind, outer: Range<usize>, inner: Range<usize>| {
        out.push(FormulaSpan {
            id: out.len(),
            kind,
            raw: document[inner.clone()].to_string(),
            outer,
            inner,
        });
    };
    let mut i = 0;
    while i < b.len() {
        match b[i] {
            b'%' => i = line_end(b, i),
            b'$' if b.get(i + 1) == Some(&b'$') => {
                let end = find_closing(b, i + 2, b"$$").ok_or(TexError::UnterminatedMath(i))?;
                push(FormulaKind::Display, i..end + 2, i + 2..end);
                i = end + 2;
            }
            b'$' => {
                let end = find_closing(b, i + 1, b"$").ok_or(TexError::UnterminatedMath(i))?;
                push(FormulaKind::Inline, i..end + 1, i + 1..end);
                i = end + 1;
            }
            b'\\' => match b.get(i + 1) {
                Some(b'[') => {
                    let end = find_closing(b, i + 2, b"\\]").ok_or(TexError::UnterminatedMath(i))?;
                    push(FormulaKind::Display, i..end + 2, i + 2..end);
                    i = end + 2;
                }
                Some(c) if c.is_ascii_alphabetic() => {
                    let name_end = i + 1 + b[i + 1..].iter().take_while(|c| c.is_ascii_alphabetic()).count();
                    match &document[i + 1..name_end] {
                        "begin" => {
                            let Some((env, body_start)) = environment_name(document, name_end) else {
                                i = name_end;
                                continue;
                            };
                            let close = format!("\\end{{{env}}}");
                            if config.verbatim_environments.iter().any(|v| v == env) {
                                i = document[body_start..].find(&close).map_or(b.len(), |p| body_start + p + close.len());
                            } else if config.math_environments.iter().any(|m| m == env) {
                                let end = find_closing(b, body_start, close.as_bytes())
                                    .ok_or(TexError::UnterminatedMath(i))?;
                                push(FormulaKind::Environment(env.to_string()), i..end + close.len(), body_start..end);
                                i = end + close.len();
                            } else {
                                i = body_start;
                            }
                        }
                        "verb" => i = skip_verb(document, name_end),
                        _ => i = name_end,
                    }
                }
                Some(_) => i += 2,
                None => i += 1,
            },
            _ => i += 1,
        }
    }
    Ok(out)
}

fn line_end(b: &[u8], from: usize) -> usize {
    b[from..].iter().position(|&c| c == b'\n').map_or(b.len(), |p| from + p + 1)
}

/// Start of the first unescaped `close` at or after `from`, skipping comments.
fn find_closing(b: &[u8], from: usize, close: &[u8]) -> Option<usize> {
    let mut j = from;
    while j < b.len() {
        if b[j..].starts_with(close) {
            return Some(j);
        }
        match b[j] {
            b'\\' => j += 2,
            b'%' => j = line_end(b, j),
            _ => j += 1,
        }
    }
    None
}

/// `{name}` right after `\begin`; returns the name and where the body starts.
fn environment_name(doc: &str, at: usize) -> Option<(&str, usize)> {
    let rest = doc[at..].strip_prefix('{')?;
    let close = rest.find('}')?;
    let name = &rest[..close];
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '*') {
        return None;
    }
    Some((name, at + 1 + close + 1))
}

/// Skips `\verb|...|` (or `\verb*|...|`) starting after `\verb`.
fn skip_verb(doc: &str, at: usize) -> usize {
    let mut chars = doc[at..].char_indices();
    let mut delim = chars.next();
    if let Some((_, '*')) = delim {
        delim = chars.next();
    }
    let Some((_, d)) = delim else { return doc.len() };
    if d.is_whitespace() {
        return at;
    }
    for (off, c) in chars {
        if c == d || c == '\n' {
            return at + off + c.len_utf8();
        }
    }
    doc.len()
}

/// Splices replacement contents into `document`. Everything outside the
/// replaced inner spans is copied unchanged.
pub fn rewrite(document: &str, spans: &[FormulaSpan], plan: &RewritePlan) -> Result<String, TexError> {
    let by_id: BTreeMap<usize, &FormulaSpan> = spans.iter().map(|s| (s.id, s)).collect();
    let mut edits: Vec<(&Range<usize>, &str)> = Vec::with_capacity(plan.replacements.len());
    for (id, text) in &plan.replacements {
        let span = by_id.get(id).ok_or(TexError::UnknownFormula(*id))?;
        edits.push((&span.inner, text));
    }
    edits.sort_by_key(|(r, _)| r.start);
    let mut out = String::with_capacity(document.len());
    let mut pos = 0;
    for (range, text) in edits {
        out.push_str(&document[pos..range.start]);
        out.push_str(text);
        pos = range.end;
    }
    out.push_str(&document[pos..]);
    Ok(out)
}

/// A comment block listing the modules a rewritten document needs.
pub fn module_header(modules: &[String]) -> String {
    if modules.is_empty() {
        return String::new();
    }
    let mut out = String::from("% TODO: load the modules used by the semantic macros below:\n");
    for m in modules {
        out.push_str(&format!("%   \\usemodule{{{m}}}\n"));
    }
    out
}
