mod common;

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, Stdio};

use proptest::prelude::*;
use serde_json::Value;
use stexify::ast::default_actions;
use stexify::emit::BracketStyle;
use stexify::glr::CompiledGrammar;
use stexify::grammar::parse_grammar_text;
use stexify::lexing::RecognizerRegistry;
use stexify::session::{Session, SessionConfig};

use common::{fixture, http, read_fixture};

#[derive(Clone, Debug)]
enum Op {
    Select(usize, usize),
    Skip(usize),
    SkipAmbiguous,
    Export(bool),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        4 => (0..9usize, 0..6usize).prop_map(|(f, i)| Op::Select(f, i)),
        1 => (0..9usize).prop_map(Op::Skip),
        1 => Just(Op::SkipAmbiguous),
        1 => any::<bool>().prop_map(Op::Export),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// Whatever happens between two calls, the file on disk reloads to the
    /// session held in memory.
    #[test]
    fn reload_after_every_operation(ops in prop::collection::vec(op(), 1..12)) {
        let dir = tempfile::tempdir().unwrap();
        let doc = dir.path().join("demo.tex");
        fs::write(&doc, read_fixture("demo-file.tex")).unwrap();
        let g = parse_grammar_text(&read_fixture("lambda.grammar")).unwrap();
        let mut actions = default_actions(&g);
        actions.overlay_json(&read_fixture("lambda.actions.json")).unwrap();
        let compiled = CompiledGrammar::compile(g).unwrap();
        let saves = dir.path().join("saves");
        let mut session = Session::create(&doc, &compiled, &actions, &RecognizerRegistry::default(), SessionConfig::default(), Some(&saves)).unwrap();
        let path = session.autosave_path().unwrap().to_path_buf();
        prop_assert_eq!(&Session::load(&path).unwrap(), &session);
        for op in ops {
            // Failed operations must leave both copies untouched, too.
            let _ = match op {
                Op::Select(f, i) => session.select(f, i).map(|_| ()),
                Op::Skip(f) => session.skip(f).map(|_| ()),
                Op::SkipAmbiguous => session.skip_ambiguous(),
                Op::Export(parens) => session
                    .export(Some(&dir.path().join("out.tex")), parens.then_some(BracketStyle::PlainParens))
                    .map(|_| ()),
            };
            prop_assert_eq!(&Session::load(&path).unwrap(), &session);
        }
    }
}

fn spawn(doc: &Path, saves: &Path) -> (Child, u16, String) {
    let mut child = Command::new(env!("CARGO_BIN_EXE_stexify"))
        .args(["--json", "serve", "--port", "0", "-g"])
        .arg(fixture("lambda.grammar"))
        .arg(doc)
        .arg("--autosave-dir")
        .arg(saves)
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let banner: Value = serde_json::from_str(&line).unwrap_or_else(|e| panic!("{e}: {line:?}"));
    (child, banner["port"].as_u64().unwrap() as u16, banner["session_id"].as_str().unwrap().to_string())
}

#[test]
fn killed_server_restores_selections() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("demo.tex");
    fs::write(&doc, read_fixture("demo-file.tex")).unwrap();
    let saves = dir.path().join("saves");

    let (mut first, port, id) = spawn(&doc, &saves);
    let (status, _) = http(port, "POST", &format!("/sessions/{id}/formulas/3/selection"), Some(r#"{"index": 4}"#));
    assert_eq!(status, 200);
    let (status, _) = http(port, "POST", &format!("/sessions/{id}/formulas/0/skip"), None);
    assert_eq!(status, 200);
    let (_, before) = http(port, "GET", &format!("/sessions/{id}/formulas"), None);
    first.kill().unwrap();
    first.wait().unwrap();

    let (mut second, port, fresh) = spawn(&doc, &saves);
    assert_ne!(fresh, id);
    let (status, after) = http(port, "GET", &format!("/sessions/{id}/formulas"), None);
    assert_eq!(status, 200);
    let (before, after): (Value, Value) = (serde_json::from_str(&before).unwrap(), serde_json::from_str(&after).unwrap());
    assert_eq!(before, after);
    assert_eq!(after[3]["status"]["choice"], 4);
    second.kill().unwrap();
    second.wait().unwrap();
}
