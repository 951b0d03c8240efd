//! Writing ASTs as semantic macros, with both bracket styles and a custom
//! flexary separator.

use stexify::ast::AstNode;
use stexify::emit::{emit, BracketStyle, EmitterConfig, RAW_LEAF};

fn main() {
    let var = |x: &str| AstNode::leaf("var", x);
    let vars = AstNode::node("varlist", vec![var("x"), var("y"), var("z")]);
    let abs = AstNode::node_with_lists("abs", vec![vars, AstNode::leaf(RAW_LEAF, "A")], [0]);
    let term = AstNode::node("dobrackets", vec![AstNode::node("app", vec![abs, var("w")])]);

    let default = EmitterConfig::default();
    let parens = EmitterConfig {
        dobrackets_style: BracketStyle::PlainParens,
        ..EmitterConfig::default()
    };
    let semicolons = EmitterConfig {
        flexary_separator: ";".into(),
        ..EmitterConfig::default()
    };
    println!("ast:        {term}");
    println!("json:       {}", serde_json::to_string(&term).unwrap());
    println!("default:    {}", emit(&term, &default).unwrap());
    println!("parens:     {}", emit(&term, &parens).unwrap());
    println!("separator:  {}", emit(&term, &semicolons).unwrap());
}
