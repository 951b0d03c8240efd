//! The `stexify` command line. Exit codes: 0 success, 1 user error,
//! 2 internal error.

use std::ffi::OsString;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use crate::emit::BracketStyle;
use crate::gen::{generate_grammar, scan_modules, scan_stex_source, GenConfig};
use crate::glr::CompiledGrammar;
use crate::lexing::RecognizerRegistry;
use crate::server::{self, AppState};
use crate::session::{analyze_formula, load_grammar, sidecar_actions_path, write_atomic, FormulaStatus, Session, SessionConfig, SessionError};

pub const DEFAULT_PORT: u16 = 7770;

#[derive(Parser, Debug)]
#[command(name = "stexify", version, about = "Turn LaTeX formulas into sTeX semantic macros with an exhaustive parser")]
struct Cli {
    /// Machine-readable output
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a grammar and action sidecar from sTeX module sources
    GenGrammar {
        /// sTeX files declaring the semantic macros
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Grammar file to write; the sidecar goes next to it
        #[arg(short, long)]
        output: PathBuf,
        /// Name recorded in the grammar header
        #[arg(long, default_value = "generated")]
        name: String,
    },
    /// Parse one formula and print its readings
    Parse {
        #[command(flatten)]
        grammar: GrammarArgs,
        formula: String,
        /// Print only the number of parse trees
        #[arg(long)]
        count_only: bool,
    },
    /// Rewrite a whole document
    Run {
        #[command(flatten)]
        grammar: GrammarArgs,
        document: PathBuf,
        /// Output file (default: <stem>.stexified.tex next to the document)
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Never prompt; fail if a formula is ambiguous unless --skip-ambiguous
        #[arg(long)]
        non_interactive: bool,
        /// Leave ambiguous formulas untouched
        #[arg(long)]
        skip_ambiguous: bool,
        /// How parenthesized groups are written
        #[arg(long, value_enum, default_value_t = Brackets::Macro)]
        dobrackets: Brackets,
    },
    /// Serve the disambiguation web app for a document
    Serve {
        #[command(flatten)]
        grammar: GrammarArgs,
        document: PathBuf,
        /// 0 picks a free port
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Where sessions are saved; saved sessions found here are reopened
        #[arg(long)]
        autosave_dir: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct GrammarArgs {
    /// Grammar file
    #[arg(short, long)]
    grammar: PathBuf,
    /// Action table (default: the grammar's .actions.json sidecar, if any)
    #[arg(long)]
    actions: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Brackets {
    Macro,
    Parens,
}

impl From<Brackets> for BracketStyle {
    fn from(b: Brackets) -> Self {
        match b {
            Brackets::Macro => BracketStyle::Macro,
            Brackets::Parens => BracketStyle::PlainParens,
        }
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{message}")]
    User { code: &'static str, message: String },
    #[error("{message}")]
    Internal { code: &'static str, message: String },
}

impl CliError {
    fn user(code: &'static str, message: impl Into<String>) -> Self {
        CliError::User {
            code,
            message: message.into(),
        }
    }

    fn exit_code(&self) -> i32 {
        match self {
            CliError::User { .. } => 1,
            CliError::Internal { .. } => 2,
        }
    }

    fn code(&self) -> &'static str {
        match self {
            CliError::User { code, .. } | CliError::Internal { code, .. } => code,
        }
    }
}

impl From<SessionError> for CliError {
    fn from(e: SessionError) -> Self {
        let code = e.code();
        match e {
            SessionError::Autosave(_) | SessionError::Emit(_) => CliError::Internal {
                code,
                message: e.to_string(),
            },
            _ => CliError::user(code, e.to_string()),
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::user("io_error", format!("{}: {e}", path.display()))
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal {
        code: "internal",
        message: e.to_string(),
    }
}

/// Terminal streams, replaceable for tests.
pub struct Io<'a> {
    pub stdin: &'a mut dyn BufRead,
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, io: &mut Io) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let to_stdout = !e.use_stderr();
            let text = e.render().to_string();
            let _ = if to_stdout {
                io.stdout.write_all(text.as_bytes())
            } else {
                io.stderr.write_all(text.as_bytes())
            };
            return if to_stdout { 0 } else { 1 };
        }
    };
    let json = cli.json;
    let result = match cli.command {
        Command::GenGrammar { inputs, output, name } => gen_grammar(&inputs, &output, name, json, io),
        Command::Parse {
            grammar,
            formula,
            count_only,
        } => parse(&grammar, &formula, count_only, json, io),
        Command::Run {
            grammar,
            document,
            output,
            non_interactive,
            skip_ambiguous,
            dobrackets,
        } => run_document(
            &grammar,
            &document,
            output.as_deref(),
            RunMode {
                non_interactive,
                skip_ambiguous,
                style: dobrackets.into(),
            },
            json,
            io,
        ),
        Command::Serve {
            grammar,
            document,
            port,
            host,
            autosave_dir,
        } => serve(&grammar, &document, &host, port, autosave_dir, json, io),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            if json {
                let body = json!({"error": {"code": e.code(), "message": e.to_string()}});
                let _ = writeln!(io.stdout, "{body}");
            } else {
                let _ = writeln!(io.stderr, "error: {e}");
            }
            e.exit_code()
        }
    }
}

fn print_json(io: &mut Io, value: serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(&value).map_err(internal)?;
    writeln!(io.stdout, "{text}").map_err(internal)
}

fn gen_grammar(inputs: &[PathBuf], output: &Path, name: String, json: bool, io: &mut Io) -> Result<(), CliError> {
    let mut specs = Vec::new();
    let mut modules: Vec<String> = Vec::new();
    for path in inputs {
        let source = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        let found = scan_stex_source(&source).map_err(|e| CliError::user("malformed_declaration", format!("{}: {e}", path.display())))?;
        specs.extend(found);
        for m in scan_modules(&source) {
            if !modules.contains(&m) {
                modules.push(m);
            }
        }
    }
    let config = GenConfig {
        grammar_name: name,
        ..GenConfig::default()
    };
    let mut generated = generate_grammar(&specs, &config).map_err(|e| CliError::user("generation_failed", e.to_string()))?;
    generated.grammar.modules = modules;
    CompiledGrammar::compile(generated.grammar.clone()).map_err(|e| CliError::user("invalid_grammar", e.to_string()))?;

    let sidecar = sidecar_actions_path(output);
    write_atomic(output, generated.grammar.to_text().as_bytes())?;
    write_atomic(&sidecar, (generated.actions.to_json() + "\n").as_bytes())?;

    if json {
        return print_json(
            io,
            json!({
                "grammar_path": output,
                "actions_path": sidecar,
                "rules": generated.grammar.nonterminals().len(),
                "warnings": generated.warnings,
            }),
        );
    }
    let out = &mut io.stdout;
    writeln!(out, "wrote {} ({} rules)", output.display(), generated.grammar.nonterminals().len()).map_err(internal)?;
    writeln!(out, "wrote {}", sidecar.display()).map_err(internal)?;
    writeln!(out, "{} warning(s)", generated.warnings.len()).map_err(internal)?;
    for w in &generated.warnings {
        writeln!(out, "  warning: {w}").map_err(internal)?;
    }
    Ok(())
}

fn parse(args: &GrammarArgs, formula: &str, count_only: bool, json: bool, io: &mut Io) -> Result<(), CliError> {
    let (compiled, actions) = load_grammar(&args.grammar, args.actions.as_deref())?;
    let registry = RecognizerRegistry::default();
    let forest = compiled
        .parse(formula, &registry)
        .map_err(|e| CliError::user("no_parse", e.to_string()))?;
    let trees = forest.count_trees();
    if count_only {
        return if json {
            print_json(io, json!({"formula": formula, "count": trees}))
        } else {
            writeln!(io.stdout, "{trees}").map_err(internal)
        };
    }
    let (status, candidates) = analyze_formula(formula, &compiled, &actions, &registry, &SessionConfig::default());
    if let FormulaStatus::Unparsed { reason, .. } = status {
        return Err(CliError::user("no_parse", reason));
    }
    if json {
        return print_json(io, json!({"formula": formula, "count": trees, "candidates": candidates}));
    }
    for c in &candidates {
        writeln!(io.stdout, "[{}] {}\n    {}", c.index + 1, c.preview, c.ast).map_err(internal)?;
    }
    Ok(())
}

struct RunMode {
    non_interactive: bool,
    skip_ambiguous: bool,
    style: BracketStyle,
}

fn run_document(args: &GrammarArgs, document: &Path, output: Option<&Path>, mode: RunMode, json: bool, io: &mut Io) -> Result<(), CliError> {
    let (compiled, actions) = load_grammar(&args.grammar, args.actions.as_deref())?;
    let registry = RecognizerRegistry::default();
    let mut session = Session::create(document, &compiled, &actions, &registry, SessionConfig::default(), None)?;

    let pending = session.pending();
    if !pending.is_empty() {
        if mode.skip_ambiguous {
            session.skip_ambiguous()?;
        } else if mode.non_interactive {
            let ids: Vec<String> = pending.iter().map(|i| i.to_string()).collect();
            return Err(CliError::user(
                "pending_ambiguities",
                format!("ambiguous formulas need a choice: {} (use --skip-ambiguous to leave them)", ids.join(", ")),
            ));
        } else {
            for id in pending {
                let choice = prompt_choice(&session, id, io)?;
                match choice {
                    Some(i) => session.select(id, i)?,
                    None => session.skip(id)?,
                };
            }
        }
    }

    let path = session.export(output, Some(mode.style))?;
    let summary = session.summary();
    let replaced = summary.unambiguous + summary.resolved;
    if json {
        let untouched: Vec<serde_json::Value> = session
            .entries
            .iter()
            .filter(|e| e.chosen().is_none())
            .map(|e| json!({"id": e.formula.id, "raw": e.formula.raw, "status": e.status}))
            .collect();
        return print_json(
            io,
            json!({"output_path": path, "replaced": replaced, "summary": summary, "untouched": untouched}),
        );
    }
    writeln!(io.stdout, "wrote {} ({replaced} of {} formulas replaced)", path.display(), summary.total).map_err(internal)?;
    for e in &session.entries {
        if let FormulaStatus::Unparsed { reason, .. } = &e.status {
            writeln!(io.stderr, "  formula {} `{}` left as is: {reason}", e.formula.id, e.formula.raw).map_err(internal)?;
        }
    }
    Ok(())
}

/// Asks for a reading of formula `id`. `None` means skip.
fn prompt_choice(session: &Session, id: usize, io: &mut Io) -> Result<Option<usize>, CliError> {
    let entry = session.entry(id)?;
    let n = entry.candidates.len();
    let err = &mut io.stderr;
    writeln!(err, "formula {id}: {}", entry.formula.raw).map_err(internal)?;
    for c in &entry.candidates {
        writeln!(err, "  [{}] {}", c.index + 1, c.preview).map_err(internal)?;
    }
    loop {
        write!(io.stderr, "choose 1-{n}, or s to skip: ").map_err(internal)?;
        io.stderr.flush().map_err(internal)?;
        let mut line = String::new();
        if io.stdin.read_line(&mut line).map_err(internal)? == 0 {
            return Err(CliError::user("input_ended", format!("input ended before formula {id} was decided")));
        }
        let answer = line.trim();
        if answer.eq_ignore_ascii_case("s") {
            return Ok(None);
        }
        match answer.parse::<usize>() {
            Ok(k) if (1..=n).contains(&k) => return Ok(Some(k - 1)),
            _ => writeln!(io.stderr, "not a choice: {answer:?}").map_err(internal)?,
        }
    }
}

fn serve(
    args: &GrammarArgs,
    document: &Path,
    host: &str,
    port: u16,
    autosave_dir: Option<PathBuf>,
    json: bool,
    io: &mut Io,
) -> Result<(), CliError> {
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(internal)?;
    let listener = runtime
        .block_on(tokio::net::TcpListener::bind((host, port)))
        .map_err(|e| CliError::user("bind_failed", format!("cannot listen on {host}:{port}: {e}")))?;
    let addr = listener.local_addr().map_err(internal)?;

    let state = AppState::new(RecognizerRegistry::default(), autosave_dir);
    state.restore()?;
    let id = state.create_session(document, &args.grammar, args.actions.as_deref())?;
    let url = format!("http://{addr}/?session={id}");
    // A closed stdout must not take the server down.
    let _ = if json {
        writeln!(io.stdout, "{}", json!({"url": url, "port": addr.port(), "session_id": id}))
    } else {
        writeln!(io.stdout, "serving {url}\npress Ctrl-C to stop")
    };
    let _ = io.stdout.flush();
    runtime.block_on(server::serve(listener, state)).map_err(internal)
}
