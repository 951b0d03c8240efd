//! Counting readings without enumerating them. Application strings grow
//! like the Catalan numbers; the forest stays polynomial.

use stexify::glr::CompiledGrammar;
use stexify::grammar::parse_grammar_text;
use stexify::lexing::RecognizerRegistry;

fn main() {
    let grammar = parse_grammar_text(include_str!("../fixtures/lambda.grammar")).unwrap();
    let compiled = CompiledGrammar::compile(grammar).unwrap();
    let registry = RecognizerRegistry::default();
    let letters = "abcdefghijklmnopqrstuvwxyz";
    for n in [1, 2, 4, 8, 12, 16, 20] {
        let input = &letters[..n];
        let forest = compiled.parse(input, &registry).unwrap();
        println!("{n:>2} variables: {:>12} trees in {:>5} forest nodes", forest.count_trees(), forest.len());
    }
}
