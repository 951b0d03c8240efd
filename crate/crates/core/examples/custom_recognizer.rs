//! Terminals backed by Rust functions: `@recognizer(name)` in the grammar,
//! the function registered under that name at parse time.

use stexify::glr::CompiledGrammar;
use stexify::grammar::parse_grammar_text;
use stexify::lexing::RecognizerRegistry;

const ARITH: &str = r#"
start: e;
e: e "+" e | e "*" e | num | ident;
terminals
num: @recognizer(natural_number);
ident: @recognizer(greek);
"#;

/// `\alpha`, `\beta` or `\gamma`.
fn greek(input: &str, pos: usize) -> Option<usize> {
    ["\\alpha", "\\beta", "\\gamma"]
        .iter()
        .find(|name| input[pos..].starts_with(*name) && !input[pos + name.len()..].starts_with(|c: char| c.is_ascii_alphabetic()))
        .map(|name| name.len())
}

fn main() {
    let compiled = CompiledGrammar::compile(parse_grammar_text(ARITH).unwrap()).unwrap();
    let mut registry = RecognizerRegistry::with_builtins();
    registry.register("greek", greek);
    for input in ["1 + 2", "\\alpha * 10 + \\beta", "1+2+3+4", "\\delta"] {
        match compiled.parse(input, &registry) {
            Ok(forest) => println!("{input:<22} {} reading(s)", forest.count_trees()),
            Err(e) => println!("{input:<22} {e}"),
        }
    }
}
