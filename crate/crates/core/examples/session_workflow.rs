//! A whole document: parse every formula, resolve the ambiguous ones,
//! export the rewritten copy. Works in a temporary directory.

use stexify::emit::BracketStyle;
use stexify::lexing::RecognizerRegistry;
use stexify::session::{load_grammar, FormulaStatus, Session, SessionConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let doc = dir.path().join("demo.tex");
    std::fs::write(&doc, include_str!("../fixtures/demo-file.tex"))?;
    let grammar = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/lambda.grammar");
    let (compiled, actions) = load_grammar(&grammar, None)?;

    let saves = dir.path().join("sessions");
    let mut session = Session::create(&doc, &compiled, &actions, &RecognizerRegistry::default(), SessionConfig::default(), Some(&saves))?;
    println!("{:?}", session.summary());
    for e in &session.entries {
        println!("  #{} {:<18} {}", e.formula.id, e.formula.raw, e.status.label());
    }

    if let Err(e) = session.export(None, None) {
        println!("export refused: {e}");
    }

    // Abstraction bodies extend as far as possible; application nests left.
    for (id, choice) in [(0, 1), (3, 4), (4, 1)] {
        let updated = session.select(id, choice)?;
        if let FormulaStatus::Resolved { choice } = updated.status {
            println!("  #{id} -> {}", updated.candidates[choice].preview);
        }
    }

    let reloaded = Session::load(session.autosave_path().unwrap())?;
    assert_eq!(reloaded, session);

    let out = session.export(None, Some(BracketStyle::PlainParens))?;
    println!("\n{}", std::fs::read_to_string(out)?);
    Ok(())
}
