//! Grammar generation from sTeX symbol declarations.
//!
//! `\symdef` and `\notation` bodies are turned into templates of literal
//! text and argument references; each template becomes one alternative of a
//! single, deliberately ambiguous expression nonterminal.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::ast::{default_actions, ActionKind, ActionTable};
use crate::grammar::{Grammar, GrammarError, Symbol, TerminalKind};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "separator", rename_all = "snake_case")]
pub enum ArgKind {
    Single,
    /// A separated sequence of expressions.
    Flexary(String),
    /// A separated sequence of bound variables (atoms).
    Binder(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum TemplateToken {
    Literal(String),
    ArgRef(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MacroSpec {
    pub name: String,
    pub arity: usize,
    pub arg_kinds: Vec<ArgKind>,
    pub template: Vec<TemplateToken>,
}

impl MacroSpec {
    fn has_literal(&self) -> bool {
        self.template.iter().any(|t| matches!(t, TemplateToken::Literal(_)))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("{line}:{column}: malformed declaration: {message}")]
    MalformedDeclaration { line: usize, column: usize, message: String },
    #[error("name `{0}` is used twice")]
    NameCollision(String),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

/// Declarations the generator could not turn into a sensible rule. The
/// affected rules need a manual edit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GenWarning {
    /// No literal anchors the rule; it was generated but is highly ambiguous.
    UnresolvableTemplate { name: String, reason: String },
    /// The rule would make the grammar cyclic or empty, so it was left out.
    Skipped { name: String, reason: String },
}

impl std::fmt::Display for GenWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GenWarning::UnresolvableTemplate { name, reason } => write!(f, "{name}: unresolvable template ({reason})"),
            GenWarning::Skipped { name, reason } => write!(f, "{name}: skipped ({reason})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub grammar_name: String,
    pub expression_symbol: String,
    pub include_parentheses_rule: bool,
    pub atom_name: String,
    pub atom_terminal: TerminalKind,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            grammar_name: "generated".into(),
            expression_symbol: "EXPR".into(),
            include_parentheses_rule: true,
            atom_name: "var".into(),
            atom_terminal: TerminalKind::Recognizer("lc_variable".into()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub grammar: Grammar,
    pub actions: ActionTable,
    pub warnings: Vec<GenWarning>,
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn error(&self, at: usize, message: impl Into<String>) -> GenError {
        let before = &self.src[..at];
        let line = before.matches('\n').count() + 1;
        let column = before.rfind('\n').map_or(at, |nl| at - nl - 1) + 1;
        GenError::MalformedDeclaration {
            line,
            column,
            message: message.into(),
        }
    }

    /// Contents of a `{...}` group at the cursor.
    fn group(&mut self) -> Result<&'a str, GenError> {
        let start = self.pos;
        if self.bump() != Some('{') {
            return Err(self.error(start, "expected `{`"));
        }
        let inner = self.pos;
        let mut depth = 1;
        while let Some(c) = self.bump() {
            match c {
                '\\' => {
                    self.bump();
                }
                '{' => depth += 1,
                '}' => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(&self.src[inner..self.pos - 1]);
                    }
                }
                _ => {}
            }
        }
        Err(self.error(start, "unclosed `{`"))
    }

    /// Contents of an optional `[...]` at the cursor.
    fn optional(&mut self) -> Result<Option<&'a str>, GenError> {
        if self.peek() != Some('[') {
            return Ok(None);
        }
        let start = self.pos;
        self.bump();
        let inner = self.pos;
        let mut depth = 0;
        while let Some(c) = self.bump() {
            match c {
                '{' => depth += 1,
                '}' => depth -= 1,
                ']' if depth == 0 => return Ok(Some(&self.src[inner..self.pos - 1])),
                _ => {}
            }
        }
        Err(self.error(start, "unclosed `[`"))
    }
}

/// Control word at the start of `s` (without backslash), if any.
fn control_word(s: &str) -> Option<&str> {
    let rest = s.strip_prefix('\\')?;
    let len = rest.chars().take_while(char::is_ascii_alphabetic).count();
    (len > 0).then(|| &rest[..len])
}

const SPACING: &[&str] = &["quad", "qquad", "enspace", "thinspace", "medspace", "thickspace"];
const WRAPPERS: &[&str] = &["comp", "maincomp", "mathbin", "mathrel", "mathop", "mathord", "mathpunct", "mathinner"];

/// Module names declared with `\begin{smodule}{name}`.
pub fn scan_modules(source: &str) -> Vec<String> {
    let mut out = Vec::new();
    for (at, _) in source.match_indices("\\begin{smodule}") {
        let mut c = Cursor {
            src: source,
            pos: at + "\\begin{smodule}".len(),
        };
        if c.optional().is_ok() {
            c.skip_ws();
            if let Ok(name) = c.group() {
                let name = name.trim().to_string();
                if !name.is_empty() && !out.contains(&name) {
                    out.push(name);
                }
            }
        }
    }
    out
}

/// Finds every `\symdef` and `\notation` declaration. A later `\notation`
/// replaces the template of an earlier declaration of the same name.
pub fn scan_stex_source(source: &str) -> Result<Vec<MacroSpec>, GenError> {
    let mut specs: Vec<MacroSpec> = Vec::new();
    let mut c = Cursor { src: source, pos: 0 };
    while let Some(ch) = c.peek() {
        match ch {
            '%' => {
                while c.peek().is_some_and(|x| x != '\n') {
                    c.bump();
                }
            }
            '\\' => {
                let start = c.pos;
                let Some(word) = control_word(c.rest()) else {
                    c.bump();
                    c.bump();
                    continue;
                };
                c.pos += 1 + word.len();
                if word == "symdef" || word == "notation" {
                    let spec = declaration(&mut c, start, word == "notation", &specs)?;
                    match specs.iter_mut().find(|s| s.name == spec.name) {
                        Some(existing) => *existing = spec,
                        None => specs.push(spec),
                    }
                }
            }
            _ => {
                c.bump();
            }
        }
    }
    Ok(specs)
}

fn declaration(c: &mut Cursor<'_>, start: usize, is_notation: bool, known: &[MacroSpec]) -> Result<MacroSpec, GenError> {
    c.skip_ws();
    let name = c.group().map_err(|_| c.error(start, "missing name"))?.trim().to_string();
    if name.is_empty() || !name.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '-' || ch == '_') {
        return Err(c.error(start, format!("invalid name {name:?}")));
    }
    c.skip_ws();
    let opts = c.optional()?.unwrap_or("");
    c.skip_ws();
    let body = if c.peek() == Some('{') { Some(c.group()?) } else { None };

    let mut kinds: Option<Vec<ArgKind>> = None;
    for opt in opts.split(',') {
        let Some((key, value)) = opt.split_once('=') else { continue };
        if key.trim() != "args" {
            continue;
        }
        let value = value.trim();
        kinds = Some(if let Ok(n) = value.parse::<usize>() {
            vec![ArgKind::Single; n]
        } else {
            value
                .chars()
                .map(|l| match l {
                    'i' | 'b' => Ok(ArgKind::Single),
                    'a' => Ok(ArgKind::Flexary(",".into())),
                    'B' => Ok(ArgKind::Binder(",".into())),
                    other => Err(c.error(start, format!("unknown argument mode `{other}`"))),
                })
                .collect::<Result<_, _>>()?
        });
    }
    let (template, separators) = match body {
        Some(body) => parse_body(body).map_err(|m| c.error(start, m))?,
        None => (Vec::new(), BTreeMap::new()),
    };
    let max_ref = template
        .iter()
        .filter_map(|t| match t {
            TemplateToken::ArgRef(k) => Some(*k),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    let mut kinds = match kinds {
        Some(k) => k,
        None if is_notation => known
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.arg_kinds.clone())
            .unwrap_or_else(|| vec![ArgKind::Single; max_ref]),
        None => vec![ArgKind::Single; max_ref],
    };
    if max_ref > kinds.len() {
        return Err(c.error(start, format!("`#{max_ref}` exceeds the declared {} arguments", kinds.len())));
    }
    let mut seen = vec![false; kinds.len() + 1];
    for t in &template {
        if let TemplateToken::ArgRef(k) = t {
            if std::mem::replace(&mut seen[*k], true) {
                return Err(c.error(start, format!("`#{k}` used twice")));
            }
        }
    }
    for (k, sep) in separators {
        match &mut kinds[k - 1] {
            ArgKind::Flexary(s) | ArgKind::Binder(s) => *s = sep,
            ArgKind::Single => {
                return Err(c.error(start, format!("`\\argsep` on argument {k}, which is not a sequence")));
            }
        }
    }
    Ok(MacroSpec {
        name,
        arity: kinds.len(),
        arg_kinds: kinds,
        template,
    })
}

type Body = (Vec<TemplateToken>, BTreeMap<usize, String>);

fn parse_body(body: &str) -> Result<Body, String> {
    let mut tokens = Vec::new();
    let mut seps = BTreeMap::new();
    tokenize(body, &mut tokens, &mut seps)?;
    // adjacent letters form one literal
    let mut merged: Vec<TemplateToken> = Vec::new();
    for t in tokens {
        if let (Some(TemplateToken::Literal(prev)), TemplateToken::Literal(cur)) = (merged.last_mut(), &t) {
            let letters = |s: &str| !s.is_empty() && s.chars().all(char::is_alphabetic);
            if letters(cur) && letters(prev) {
                prev.push_str(cur);
                continue;
            }
        }
        merged.push(t);
    }
    Ok((merged, seps))
}

/// Literal text of a separator or wrapper argument.
fn literal_text(s: &str) -> Result<String, String> {
    let mut tokens = Vec::new();
    tokenize(s, &mut tokens, &mut BTreeMap::new())?;
    tokens
        .into_iter()
        .map(|t| match t {
            TemplateToken::Literal(l) => Ok(l),
            TemplateToken::ArgRef(k) => Err(format!("argument `#{k}` inside a separator")),
        })
        .collect()
}

/// One macro argument: a braced group or a single token.
fn argument<'a>(c: &mut Cursor<'a>) -> Result<&'a str, String> {
    c.skip_ws();
    match c.peek() {
        Some('{') => c.group().map_err(|e| e.to_string()),
        Some('\\') => {
            let start = c.pos;
            match control_word(c.rest()) {
                Some(w) => c.pos += 1 + w.len(),
                None => {
                    c.bump();
                    c.bump();
                }
            }
            Ok(&c.src[start..c.pos])
        }
        Some(_) => {
            let start = c.pos;
            c.bump();
            Ok(&c.src[start..c.pos])
        }
        None => Err("missing macro argument".into()),
    }
}

fn tokenize(s: &str, out: &mut Vec<TemplateToken>, seps: &mut BTreeMap<usize, String>) -> Result<(), String> {
    let mut c = Cursor { src: s, pos: 0 };
    while let Some(ch) = c.peek() {
        match ch {
            _ if ch.is_whitespace() => {
                c.bump();
            }
            '#' => {
                c.bump();
                let d = c.bump().and_then(|d| d.to_digit(10)).ok_or("`#` must be followed by a digit")?;
                if d == 0 {
                    return Err("`#0` is not an argument".into());
                }
                out.push(TemplateToken::ArgRef(d as usize));
            }
            '{' => {
                let inner = c.group().map_err(|e| e.to_string())?;
                tokenize(inner, out, seps)?;
            }
            '}' => return Err("unbalanced `}`".into()),
            '~' => {
                c.bump();
            }
            '\\' => match control_word(c.rest()) {
                Some(word) => {
                    c.pos += 1 + word.len();
                    if SPACING.contains(&word) {
                        continue;
                    }
                    if WRAPPERS.contains(&word) {
                        let arg = argument(&mut c)?;
                        tokenize(arg, out, seps)?;
                    } else if word == "argsep" {
                        let first = argument(&mut c)?;
                        let k = match first.trim().strip_prefix('#').and_then(|d| d.parse::<usize>().ok()) {
                            Some(k) if k > 0 => k,
                            _ => return Err(format!("`\\argsep` expects `#k`, found {first:?}")),
                        };
                        let sep = literal_text(argument(&mut c)?)?;
                        out.push(TemplateToken::ArgRef(k));
                        seps.insert(k, sep);
                    } else {
                        out.push(TemplateToken::Literal(format!("\\{word}")));
                        c.skip_ws();
                        while c.peek() == Some('{') {
                            let inner = c.group().map_err(|e| e.to_string())?;
                            out.push(TemplateToken::Literal("{".into()));
                            tokenize(inner, out, seps)?;
                            out.push(TemplateToken::Literal("}".into()));
                            c.skip_ws();
                        }
                    }
                }
                None => {
                    c.bump();
                    let sym = c.bump().ok_or("trailing backslash")?;
                    if !matches!(sym, ';' | ',' | ' ' | '!' | ':' | '>') {
                        out.push(TemplateToken::Literal(format!("\\{sym}")));
                    }
                }
            },
            _ => {
                c.bump();
                out.push(TemplateToken::Literal(ch.to_string()));
            }
        }
    }
    Ok(())
}

/// Builds an ambiguous expression grammar and its parse actions.
pub fn generate_grammar(specs: &[MacroSpec], config: &GenConfig) -> Result<Generated, GenError> {
    let expr = config.expression_symbol.as_str();
    let mut names: Vec<String> = vec![expr.to_string(), config.atom_name.clone()];
    let mut claim = |n: String| -> Result<String, GenError> {
        if names.contains(&n) {
            return Err(GenError::NameCollision(n));
        }
        names.push(n.clone());
        Ok(n)
    };
    if expr == config.atom_name {
        return Err(GenError::NameCollision(expr.to_string()));
    }

    let mut g = Grammar::new(&config.grammar_name);
    let mut warnings = Vec::new();
    let mut renames: Vec<(String, ActionKind)> = Vec::new();
    let mut alternatives: Vec<String> = Vec::new();
    let mut rules: Vec<(String, Vec<Vec<Symbol>>)> = Vec::new();
    let mut seen_specs: Vec<&str> = Vec::new();

    let atom = Symbol::Terminal(config.atom_name.clone());
    let e = Symbol::NonTerminal(expr.to_string());

    for spec in specs {
        if seen_specs.contains(&spec.name.as_str()) {
            return Err(GenError::NameCollision(spec.name.clone()));
        }
        seen_specs.push(&spec.name);
        if spec.name == config.atom_name && spec.template == [TemplateToken::ArgRef(1)] {
            continue;
        }
        let anchor_free = !spec.has_literal()
            && !spec.arg_kinds.iter().any(|k| matches!(k, ArgKind::Flexary(s) | ArgKind::Binder(s) if !s.is_empty()));
        if spec.template.is_empty() {
            warnings.push(GenWarning::Skipped {
                name: spec.name.clone(),
                reason: "no notation body".into(),
            });
            continue;
        }
        let arg_count = spec.template.iter().filter(|t| matches!(t, TemplateToken::ArgRef(_))).count();
        if anchor_free && arg_count < 2 {
            warnings.push(GenWarning::Skipped {
                name: spec.name.clone(),
                reason: "a single argument without any literal would make the grammar cyclic".into(),
            });
            continue;
        }
        if anchor_free {
            warnings.push(GenWarning::UnresolvableTemplate {
                name: spec.name.clone(),
                reason: "no literal text between the arguments".into(),
            });
        }
        let rule = claim(format!("sym_{}", spec.name))?;
        let mut rhs = Vec::new();
        let mut lists = Vec::new();
        for t in &spec.template {
            match t {
                TemplateToken::Literal(text) => rhs.push(Symbol::Terminal(g.intern_literal(text))),
                TemplateToken::ArgRef(k) => match &spec.arg_kinds[k - 1] {
                    ArgKind::Single => rhs.push(e.clone()),
                    ArgKind::Flexary(sep) | ArgKind::Binder(sep) => {
                        let list = claim(format!("list_{}_{k}", spec.name))?;
                        let member = if matches!(spec.arg_kinds[k - 1], ArgKind::Binder(_)) {
                            atom.clone()
                        } else {
                            e.clone()
                        };
                        let me = Symbol::NonTerminal(list.clone());
                        let mut step = vec![member.clone()];
                        if !sep.is_empty() {
                            step.push(Symbol::Terminal(g.intern_literal(sep)));
                        }
                        let mut recursive = step.clone();
                        recursive.push(me);
                        // a lone member would be a unit step back to EXPR
                        let base = if !spec.has_literal() && arg_count == 1 && member == e {
                            let mut two = step;
                            two.push(member);
                            two
                        } else {
                            vec![member]
                        };
                        lists.push((list.clone(), vec![recursive, base]));
                        renames.push((list.clone(), ActionKind::FlattenList));
                        rhs.push(Symbol::NonTerminal(list));
                    }
                },
            }
        }
        rules.push((rule.clone(), vec![rhs]));
        rules.extend(lists);
        renames.push((
            rule.clone(),
            ActionKind::Node {
                rename: Some(spec.name.clone()),
                keep: None,
            },
        ));
        alternatives.push(rule);
    }

    let mut expr_alts: Vec<Vec<Symbol>> = alternatives.iter().map(|a| vec![Symbol::NonTerminal(a.clone())]).collect();
    expr_alts.push(vec![atom.clone()]);
    if config.include_parentheses_rule {
        let parens = claim("sym_dobrackets".into())?;
        let open = Symbol::Terminal(g.intern_literal("("));
        let close = Symbol::Terminal(g.intern_literal(")"));
        expr_alts.push(vec![Symbol::NonTerminal(parens.clone())]);
        rules.push((parens.clone(), vec![vec![open, e.clone(), close]]));
        renames.push((
            parens,
            ActionKind::Node {
                rename: Some("dobrackets".into()),
                keep: Some(vec![1]),
            },
        ));
    }
    for alt in expr_alts {
        g.add_production(expr, alt);
    }
    for (lhs, alts) in rules {
        for rhs in alts {
            g.add_production(&lhs, rhs);
        }
    }
    if g.terminals.contains_key(&config.atom_name) {
        return Err(GenError::NameCollision(config.atom_name.clone()));
    }
    g.add_terminal(&config.atom_name, config.atom_terminal.clone())?;
    g.check_structure()?;

    let mut actions = default_actions(&g);
    actions.set(expr, ActionKind::PassThrough);
    for (nt, action) in renames {
        actions.set(nt, action);
    }
    Ok(Generated {
        grammar: g,
        actions,
        warnings,
    })
}
