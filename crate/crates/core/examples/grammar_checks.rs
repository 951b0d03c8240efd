//! Loading grammar text, validating it, and inspecting the parse table.

use stexify::glr::{CompileError, CompiledGrammar};
use stexify::grammar::{parse_grammar_text, validate};

fn main() {
    let good = parse_grammar_text(include_str!("../fixtures/lambda.grammar")).unwrap();
    println!("lambda grammar: {}", validate(&good));
    let compiled = CompiledGrammar::compile(good).unwrap();
    println!("{} LALR(1) states, {} conflicting cells", compiled.num_states(), compiled.conflicts().len());
    for c in compiled.conflicts().iter().take(3) {
        println!("  state {} on {}: {:?}", c.state, c.terminal, c.actions);
    }

    let sources = [
        "a: a;",
        "a: b; b: a;",
        "s: \"x\" | t; t: s u; u: EMPTY;",
        "s: s \"x\"; terminals x: \"y\";",
    ];
    for source in sources {
        match parse_grammar_text(source).map_err(|e| e.to_string()).and_then(|g| CompiledGrammar::compile(g).map_err(|e| match e {
            CompileError::InvalidGrammar(report) => report.to_string(),
            other => other.to_string(),
        })) {
            Ok(c) => println!("{source:<32} ok, {} states", c.num_states()),
            Err(why) => println!("{source:<32} rejected: {why}"),
        }
    }
}
