//! Disambiguation sessions: every formula of a document with its candidate
//! readings, the user's choices, autosave, and export of the rewritten copy.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::{build_ast, default_actions, ActionTable, AstNode};
use crate::emit::{emit, BracketStyle, EmitterConfig};
use crate::glr::{CompiledGrammar, ParseError, DEFAULT_ENUMERATION_CAP};
use crate::grammar::parse_grammar_text;
use crate::lexing::RecognizerRegistry;
use crate::tex::{extract_formulas, module_header, rewrite, FormulaSpan, RewritePlan};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum FormulaStatus {
    Unparsed {
        reason: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        position: Option<usize>,
    },
    Unambiguous,
    Ambiguous {
        count: usize,
    },
    Resolved {
        choice: usize,
    },
    Skipped,
}

impl FormulaStatus {
    pub fn label(&self) -> &'static str {
        match self {
            FormulaStatus::Unparsed { .. } => "unparsed",
            FormulaStatus::Unambiguous => "unambiguous",
            FormulaStatus::Ambiguous { .. } => "ambiguous",
            FormulaStatus::Resolved { .. } => "resolved",
            FormulaStatus::Skipped => "skipped",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub index: usize,
    pub ast: AstNode,
    pub preview: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulaEntry {
    pub formula: FormulaSpan,
    pub status: FormulaStatus,
    pub candidates: Vec<Candidate>,
}

impl FormulaEntry {
    /// The candidate that export would use, if any.
    pub fn chosen(&self) -> Option<&Candidate> {
        match self.status {
            FormulaStatus::Unambiguous => self.candidates.first(),
            FormulaStatus::Resolved { choice } => self.candidates.get(choice),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub enumeration_cap: usize,
    pub emitter: EmitterConfig,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            emitter: EmitterConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub unparsed: usize,
    pub unambiguous: usize,
    pub ambiguous: usize,
    pub resolved: usize,
    pub skipped: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SessionError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("invalid grammar: {0}")]
    InvalidGrammar(String),
    #[error("cannot read formulas: {0}")]
    Document(String),
    #[error("no formula with id {0}")]
    UnknownFormula(usize),
    #[error("no session with id {0}")]
    UnknownSession(String),
    #[error("formula {formula} has {count} candidates, so {index} is not a valid choice")]
    BadIndex { formula: usize, index: usize, count: usize },
    #[error("formula {0} could not be parsed and has nothing to select")]
    NotSelectable(usize),
    #[error("formulas still ambiguous: {0:?}")]
    PendingAmbiguities(Vec<usize>),
    #[error("{0} changed on disk since the session was created")]
    DocumentChanged(PathBuf),
    #[error("autosave file: {0}")]
    Autosave(String),
    #[error("{0}")]
    Emit(String),
}

impl SessionError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::Io { .. } => "io_error",
            SessionError::InvalidGrammar(_) => "invalid_grammar",
            SessionError::Document(_) => "invalid_document",
            SessionError::UnknownFormula(_) => "unknown_formula",
            SessionError::UnknownSession(_) => "unknown_session",
            SessionError::BadIndex { .. } => "bad_index",
            SessionError::NotSelectable(_) => "not_selectable",
            SessionError::PendingAmbiguities(_) => "pending_ambiguities",
            SessionError::DocumentChanged(_) => "document_changed",
            SessionError::Autosave(_) => "autosave_error",
            SessionError::Emit(_) => "emit_error",
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        SessionError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub schema: u32,
    pub id: String,
    pub document_path: PathBuf,
    /// Modification time of the document when it was read, in nanoseconds.
    pub document_mtime: u128,
    pub modules: Vec<String>,
    pub config: SessionConfig,
    pub entries: Vec<FormulaEntry>,
    pub created: u64,
    pub modified: u64,
    #[serde(skip)]
    autosave: Option<PathBuf>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn mtime(path: &Path) -> Result<u128, SessionError> {
    let meta = fs::metadata(path).map_err(|e| SessionError::io(path, e))?;
    let t = meta.modified().map_err(|e| SessionError::io(path, e))?;
    Ok(t.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos()))
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), SessionError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| SessionError::io(path, e))?;
    tmp.write_all(contents).map_err(|e| SessionError::io(path, e))?;
    tmp.persist(path).map_err(|e| SessionError::io(path, e.error))?;
    Ok(())
}

/// `<dir>/<stem>.stexified.tex` next to the document.
pub fn default_output_path(document: &Path) -> PathBuf {
    let stem = document.file_stem().map_or_else(|| "output".into(), |s| s.to_string_lossy().into_owned());
    document.with_file_name(format!("{stem}.stexified.tex"))
}

/// `<dir>/<stem>.actions.json` next to a grammar file.
pub fn sidecar_actions_path(grammar: &Path) -> PathBuf {
    let stem = grammar.file_stem().map_or_else(|| "grammar".into(), |s| s.to_string_lossy().into_owned());
    grammar.with_file_name(format!("{stem}.actions.json"))
}

/// Reads and compiles a grammar file. Actions are the defaults, overlaid by
/// `actions` or, when absent, by the grammar's sidecar file if it exists.
pub fn load_grammar(grammar: &Path, actions: Option<&Path>) -> Result<(CompiledGrammar, ActionTable), SessionError> {
    let text = fs::read_to_string(grammar).map_err(|e| SessionError::io(grammar, e))?;
    let parsed = parse_grammar_text(&text).map_err(|e| SessionError::InvalidGrammar(format!("{}: {e}", grammar.display())))?;
    let mut table = default_actions(&parsed);
    let sidecar = sidecar_actions_path(grammar);
    let overlay = match actions {
        Some(p) => Some(p.to_path_buf()),
        None => sidecar.exists().then_some(sidecar),
    };
    if let Some(p) = overlay {
        let json = fs::read_to_string(&p).map_err(|e| SessionError::io(&p, e))?;
        table
            .overlay_json(&json)
            .map_err(|e| SessionError::InvalidGrammar(format!("{}: {e}", p.display())))?;
    }
    let compiled = CompiledGrammar::compile(parsed).map_err(|e| SessionError::InvalidGrammar(e.to_string()))?;
    Ok((compiled, table))
}

/// Candidates for one formula, deduplicated by AST.
pub fn analyze_formula(
    raw: &str,
    compiled: &CompiledGrammar,
    actions: &ActionTable,
    registry: &RecognizerRegistry,
    config: &SessionConfig,
) -> (FormulaStatus, Vec<Candidate>) {
    let unparsed = |reason: String, position: Option<usize>| (FormulaStatus::Unparsed { reason, position }, Vec::new());
    let forest = match compiled.parse(raw, registry) {
        Ok(f) => f,
        Err(e @ ParseError::NoParse { position, .. }) => return unparsed(e.to_string(), Some(position)),
        Err(e) => return unparsed(e.to_string(), None),
    };
    let trees = match forest.enumerate_trees(config.enumeration_cap) {
        Ok(t) => t,
        Err(e) => return unparsed(e.to_string(), None),
    };
    let mut candidates: Vec<Candidate> = Vec::new();
    for tree in &trees {
        let ast = match build_ast(tree, compiled.grammar(), actions) {
            Ok(a) => a,
            Err(e) => return unparsed(e.to_string(), None),
        };
        if candidates.iter().any(|c| c.ast == ast) {
            continue;
        }
        let preview = match emit(&ast, &config.emitter) {
            Ok(p) => p,
            Err(e) => return unparsed(e.to_string(), None),
        };
        candidates.push(Candidate {
            index: candidates.len(),
            ast,
            preview,
        });
    }
    let status = match candidates.len() {
        0 => FormulaStatus::Unparsed {
            reason: "no parse".into(),
            position: None,
        },
        1 => FormulaStatus::Unambiguous,
        n => FormulaStatus::Ambiguous { count: n },
    };
    (status, candidates)
}

impl Session {
    /// Reads and parses every formula of `document`. With `autosave_dir`,
    /// the session is saved there immediately and after every change.
    pub fn create(
        document: &Path,
        compiled: &CompiledGrammar,
        actions: &ActionTable,
        registry: &RecognizerRegistry,
        config: SessionConfig,
        autosave_dir: Option<&Path>,
    ) -> Result<Session, SessionError> {
        let document_mtime = mtime(document)?;
        let text = fs::read_to_string(document).map_err(|e| SessionError::io(document, e))?;
        let spans = extract_formulas(&text).map_err(|e| SessionError::Document(e.to_string()))?;
        let entries: Vec<FormulaEntry> = spans
            .into_par_iter()
            .map(|formula| {
                let (status, candidates) = analyze_formula(&formula.raw, compiled, actions, registry, &config);
                FormulaEntry {
                    formula,
                    status,
                    candidates,
                }
            })
            .collect();
        let t = now();
        let mut session = Session {
            schema: SCHEMA_VERSION,
            id: uuid::Uuid::new_v4().simple().to_string(),
            document_path: document.to_path_buf(),
            document_mtime,
            modules: compiled.grammar().modules.clone(),
            config,
            entries,
            created: t,
            modified: t,
            autosave: None,
        };
        if let Some(dir) = autosave_dir {
            fs::create_dir_all(dir).map_err(|e| SessionError::io(dir, e))?;
            session.autosave = Some(dir.join(format!("{}.json", session.id)));
        }
        session.save()?;
        Ok(session)
    }

    /// Restores a session from its autosave file; later changes are saved
    /// back to the same file.
    pub fn load(path: &Path) -> Result<Session, SessionError> {
        let text = fs::read_to_string(path).map_err(|e| SessionError::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| SessionError::Autosave(e.to_string()))?;
        match value.get("schema").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(SCHEMA_VERSION) => {}
            other => return Err(SessionError::Autosave(format!("unsupported schema version {other:?}"))),
        }
        let mut session: Session = serde_json::from_value(value).map_err(|e| SessionError::Autosave(e.to_string()))?;
        session.autosave = Some(path.to_path_buf());
        Ok(session)
    }

    pub fn autosave_path(&self) -> Option<&Path> {
        self.autosave.as_deref()
    }

    fn save(&self) -> Result<(), SessionError> {
        if let Some(path) = &self.autosave {
            let json = serde_json::to_vec_pretty(self).map_err(|e| SessionError::Autosave(e.to_string()))?;
            write_atomic(path, &json)?;
        }
        Ok(())
    }

    fn touch(&mut self) -> Result<(), SessionError> {
        self.modified = now();
        self.save()
    }

    pub fn entry(&self, id: usize) -> Result<&FormulaEntry, SessionError> {
        self.entries.get(id).ok_or(SessionError::UnknownFormula(id))
    }

    pub fn summary(&self) -> Summary {
        let mut s = Summary {
            total: self.entries.len(),
            ..Default::default()
        };
        for e in &self.entries {
            match e.status {
                FormulaStatus::Unparsed { .. } => s.unparsed += 1,
                FormulaStatus::Unambiguous => s.unambiguous += 1,
                FormulaStatus::Ambiguous { .. } => s.ambiguous += 1,
                FormulaStatus::Resolved { .. } => s.resolved += 1,
                FormulaStatus::Skipped => s.skipped += 1,
            }
        }
        s
    }

    pub fn pending(&self) -> Vec<usize> {
        self.entries
            .iter()
            .filter(|e| matches!(e.status, FormulaStatus::Ambiguous { .. }))
            .map(|e| e.formula.id)
            .collect()
    }

    pub fn select(&mut self, id: usize, index: usize) -> Result<&FormulaEntry, SessionError> {
        let entry = self.entries.get_mut(id).ok_or(SessionError::UnknownFormula(id))?;
        if entry.candidates.is_empty() {
            return Err(SessionError::NotSelectable(id));
        }
        if index >= entry.candidates.len() {
            return Err(SessionError::BadIndex {
                formula: id,
                index,
                count: entry.candidates.len(),
            });
        }
        entry.status = if entry.candidates.len() == 1 {
            FormulaStatus::Unambiguous
        } else {
            FormulaStatus::Resolved { choice: index }
        };
        self.touch()?;
        Ok(&self.entries[id])
    }

    pub fn skip(&mut self, id: usize) -> Result<&FormulaEntry, SessionError> {
        let entry = self.entries.get_mut(id).ok_or(SessionError::UnknownFormula(id))?;
        entry.status = FormulaStatus::Skipped;
        self.touch()?;
        Ok(&self.entries[id])
    }

    /// Skips every ambiguous formula.
    pub fn skip_ambiguous(&mut self) -> Result<(), SessionError> {
        for e in &mut self.entries {
            if matches!(e.status, FormulaStatus::Ambiguous { .. }) {
                e.status = FormulaStatus::Skipped;
            }
        }
        self.touch()
    }

    /// The rewritten document. Fails while ambiguities remain or when the
    /// document changed since the session was created.
    pub fn render(&self, style: Option<BracketStyle>) -> Result<String, SessionError> {
        let pending = self.pending();
        if !pending.is_empty() {
            return Err(SessionError::PendingAmbiguities(pending));
        }
        let path = &self.document_path;
        if mtime(path)? != self.document_mtime {
            return Err(SessionError::DocumentChanged(path.clone()));
        }
        let text = fs::read_to_string(path).map_err(|e| SessionError::io(path, e))?;
        let spans = extract_formulas(&text).map_err(|e| SessionError::Document(e.to_string()))?;
        if spans.len() != self.entries.len() || spans.iter().zip(&self.entries).any(|(s, e)| *s != e.formula) {
            return Err(SessionError::DocumentChanged(path.clone()));
        }
        let mut emitter = self.config.emitter.clone();
        if let Some(style) = style {
            emitter.dobrackets_style = style;
        }
        let mut replacements = BTreeMap::new();
        for e in &self.entries {
            if let Some(c) = e.chosen() {
                let text = emit(&c.ast, &emitter).map_err(|err| SessionError::Emit(err.to_string()))?;
                replacements.insert(e.formula.id, text);
            }
        }
        let body = rewrite(&text, &spans, &RewritePlan { replacements }).map_err(|e| SessionError::Document(e.to_string()))?;
        Ok(module_header(&self.modules) + &body)
    }

    /// Renders and writes the output file; returns its path.
    pub fn export(&mut self, output: Option<&Path>, style: Option<BracketStyle>) -> Result<PathBuf, SessionError> {
        let text = self.render(style)?;
        let out = output.map_or_else(|| default_output_path(&self.document_path), Path::to_path_buf);
        write_atomic(&out, text.as_bytes())?;
        self.touch()?;
        Ok(out)
    }
}
