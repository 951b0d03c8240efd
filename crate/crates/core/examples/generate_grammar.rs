//! Deriving a grammar and action table from sTeX symbol declarations.
//!
//! cargo run --example generate_grammar -- path/to/module.tex

use stexify::gen::{generate_grammar, scan_modules, scan_stex_source, GenConfig};

fn main() {
    let source = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path).expect("readable input"),
        None => include_str!("../fixtures/lcalc.tex").to_string(),
    };
    let specs = scan_stex_source(&source).expect("well-formed declarations");
    for s in &specs {
        println!("{:<6} arity {} {:?}", s.name, s.arity, s.arg_kinds);
    }
    let mut generated = generate_grammar(&specs, &GenConfig::default()).unwrap();
    generated.grammar.modules = scan_modules(&source);
    println!("\n{}", generated.grammar.to_text());
    println!("{}", generated.actions.to_json());
    for w in &generated.warnings {
        println!("warning: {w}");
    }
}
