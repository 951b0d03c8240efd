//! Parse one formula with the lambda grammar and list every reading.
//!
//! cargo run --example parse_formula -- '\lambda xy.xy'

use stexify::ast::default_actions;
use stexify::emit::{emit, EmitterConfig};
use stexify::glr::{CompiledGrammar, DEFAULT_ENUMERATION_CAP};
use stexify::grammar::parse_grammar_text;
use stexify::lexing::RecognizerRegistry;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let formula = std::env::args().nth(1).unwrap_or_else(|| "\\lambda xyz.xy".into());
    let grammar = parse_grammar_text(include_str!("../fixtures/lambda.grammar"))?;
    let mut actions = default_actions(&grammar);
    actions.overlay_json(include_str!("../fixtures/lambda.actions.json"))?;
    let compiled = CompiledGrammar::compile(grammar)?;

    let forest = compiled.parse(&formula, &RecognizerRegistry::default())?;
    println!("{formula}: {} parse tree(s), {} forest nodes", forest.count_trees(), forest.len());
    for (i, tree) in forest.enumerate_trees(DEFAULT_ENUMERATION_CAP)?.iter().enumerate() {
        let ast = stexify::ast::build_ast(tree, compiled.grammar(), &actions)?;
        println!("[{}] {}", i + 1, tree.to_sexpr());
        println!("    ast:  {ast}");
        println!("    sTeX: {}", emit(&ast, &EmitterConfig::default())?);
    }
    Ok(())
}
