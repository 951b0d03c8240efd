mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stexify::ast::{build_ast, default_actions, ActionTable, AstNode};
use stexify::emit::{emit, EmitterConfig, RAW_LEAF};
use stexify::gen::{generate_grammar, scan_stex_source, GenConfig};
use stexify::glr::{CompiledGrammar, DEFAULT_ENUMERATION_CAP};
use stexify::grammar::{parse_grammar_text, Grammar};
use stexify::lexing::RecognizerRegistry;
use stexify::tex::extract_formulas;

use common::*;

fn lambda() -> (CompiledGrammar, ActionTable) {
    let g = parse_grammar_text(&read_fixture("lambda.grammar")).unwrap();
    let mut actions = default_actions(&g);
    actions.overlay_json(&read_fixture("lambda.actions.json")).unwrap();
    (CompiledGrammar::compile(g).unwrap(), actions)
}

fn generated() -> (CompiledGrammar, ActionTable) {
    let specs = scan_stex_source(&read_fixture("lcalc.tex")).unwrap();
    let out = generate_grammar(&specs, &GenConfig::default()).unwrap();
    (CompiledGrammar::compile(out.grammar).unwrap(), out.actions)
}

fn asts(c: &CompiledGrammar, a: &ActionTable, text: &str) -> Vec<AstNode> {
    let forest = c.parse(text, &RecognizerRegistry::default()).unwrap();
    forest
        .enumerate_trees(DEFAULT_ENUMERATION_CAP)
        .unwrap()
        .iter()
        .map(|t| build_ast(t, c.grammar(), a).unwrap())
        .collect()
}

fn demo_formulas() -> Vec<String> {
    extract_formulas(&read_fixture("demo-file.tex")).unwrap().into_iter().map(|f| f.raw).collect()
}

#[test]
fn distinct_trees_give_distinct_asts_and_previews() {
    let (c, a) = lambda();
    for raw in demo_formulas() {
        let trees = asts(&c, &a, &raw);
        let unique: BTreeSet<String> = trees.iter().map(|t| serde_json::to_string(t).unwrap()).collect();
        assert_eq!(unique.len(), trees.len(), "{raw}");
        let previews: BTreeSet<String> = trees.iter().map(|t| emit(t, &EmitterConfig::default()).unwrap()).collect();
        assert_eq!(previews.len(), trees.len(), "{raw}");
    }
}

#[test]
fn fig1_tree() {
    let (c, a) = lambda();
    let trees = asts(&c, &a, "(\\lambda x.x)");
    assert_eq!(trees.len(), 1);
    assert_eq!(trees[0].to_string(), "dobrackets(abs(varlist[var(x)], var(x)))");
}

#[test]
fn generated_grammar_gives_the_same_readings() {
    let (hand, hand_actions) = lambda();
    let (gen, gen_actions) = generated();
    for raw in demo_formulas() {
        let mut a: Vec<String> = asts(&hand, &hand_actions, &raw).iter().map(|t| emit(t, &EmitterConfig::default()).unwrap()).collect();
        let mut b: Vec<String> = asts(&gen, &gen_actions, &raw).iter().map(|t| emit(t, &EmitterConfig::default()).unwrap()).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b, "{raw}");
    }
}

#[test]
fn generated_grammar_counts_match_on_random_corpus() {
    let g: Grammar = parse_grammar_text(&read_fixture("lambda.grammar")).unwrap();
    let hand = CompiledGrammar::compile(g.clone()).unwrap();
    let (gen, _) = generated();
    let registry = RecognizerRegistry::default();
    let count = |c: &CompiledGrammar, s: &str| c.parse(s, &registry).map_or(0, |f| f.count_trees());
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..300 {
        let ids = random_derivation(&g, &mut rng, 9).unwrap_or_else(|| random_lambda_ids(&g, &mut rng, 9));
        // The sTeX notation spells the binder only as `\lambda`.
        let text = render_lambda(&g, &ids, &mut rng).replace('λ', "\\lambda ");
        assert_eq!(count(&hand, &text), count(&gen, &text), "{text:?}");
    }
}

#[test]
fn generated_grammar_text_round_trips() {
    let (gen, _) = generated();
    let text = gen.grammar().to_text();
    let back = parse_grammar_text(&text).unwrap();
    assert!(back.same_rules(gen.grammar()), "{text}");
    assert_eq!(back.to_text(), text);
}

/// Reads emitted text back into (name, groups) without knowing the grammar.
#[derive(Debug, PartialEq, Eq)]
enum Shape {
    Macro(String, Vec<Vec<Shape>>),
    Text(String),
}

fn read_shapes(s: &str) -> Vec<Shape> {
    let b: Vec<char> = s.chars().collect();
    let mut pos = 0;
    let out = read_seq(&b, &mut pos);
    assert_eq!(pos, b.len(), "trailing input in {s:?}");
    out
}

fn read_seq(b: &[char], pos: &mut usize) -> Vec<Shape> {
    let mut out = Vec::new();
    while *pos < b.len() && b[*pos] != '}' && b[*pos] != ',' {
        if b[*pos] == '\\' {
            *pos += 1;
            let start = *pos;
            while *pos < b.len() && b[*pos].is_ascii_alphabetic() {
                *pos += 1;
            }
            let name: String = b[start..*pos].iter().collect();
            let mut groups = Vec::new();
            while *pos < b.len() && b[*pos] == '{' {
                *pos += 1;
                groups.push(read_seq(b, pos));
                // Top-level commas split flexary members into sibling shapes.
                while b[*pos] == ',' {
                    *pos += 1;
                    let more = read_seq(b, pos);
                    groups.last_mut().unwrap().extend(more);
                }
                assert_eq!(b[*pos], '}');
                *pos += 1;
            }
            out.push(Shape::Macro(name, groups));
        } else {
            let start = *pos;
            while *pos < b.len() && !matches!(b[*pos], '\\' | '{' | '}' | ',') {
                *pos += 1;
            }
            out.push(Shape::Text(b[start..*pos].iter().collect()));
        }
    }
    out
}

fn expected_shape(ast: &AstNode) -> Vec<Shape> {
    match ast {
        AstNode::Leaf { name, lexeme } if name == RAW_LEAF => vec![Shape::Text(lexeme.clone())],
        AstNode::Leaf { name, lexeme } => vec![Shape::Macro(name.clone(), vec![text_group(lexeme)])],
        AstNode::Node {
            name,
            children,
            flexary_slots,
        } => {
            let groups = children
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    if flexary_slots.contains(&i) {
                        c.children().iter().flat_map(expected_shape).collect()
                    } else {
                        expected_shape(c)
                    }
                })
                .collect();
            vec![Shape::Macro(name.clone(), groups)]
        }
    }
}

fn text_group(s: &str) -> Vec<Shape> {
    if s.is_empty() {
        vec![]
    } else {
        vec![Shape::Text(s.to_string())]
    }
}

fn arb_ast() -> impl Strategy<Value = AstNode> {
    let leaf = prop_oneof![
        ("[a-z]{1,4}", "[a-z0-9]{1,3}").prop_map(|(n, l)| AstNode::leaf(n, l)),
        // Digits cannot run on into a preceding macro name.
        "[0-9]{1,3}".prop_map(|l| AstNode::leaf(RAW_LEAF, l)),
    ];
    leaf.prop_recursive(4, 48, 4, |inner| {
        (
            "[a-z]{1,4}",
            prop::collection::vec(inner.clone(), 0..3),
            prop::option::of(prop::collection::vec(inner, 1..4)),
        )
            .prop_filter("raw is reserved", |(n, _, _)| n != RAW_LEAF)
            .prop_map(|(name, mut kids, list)| match list {
                Some(members) => {
                    kids.insert(0, AstNode::node("items", members));
                    AstNode::node_with_lists(name, kids, [0])
                }
                None => AstNode::node(name, kids),
            })
    })
}

/// Raw leaves next to each other merge when read back; keep them apart.
fn no_adjacent_text(ast: &AstNode) -> bool {
    let kids = ast.children();
    kids.windows(2).all(|w| !(w[0].name() == RAW_LEAF && w[1].name() == RAW_LEAF)) && kids.iter().all(no_adjacent_text)
}

proptest! {
    #[test]
    fn emitted_text_reads_back_to_the_same_structure(ast in arb_ast().prop_filter("separable", no_adjacent_text)) {
        let text = emit(&ast, &EmitterConfig::default()).unwrap();
        prop_assert_eq!(read_shapes(&text), expected_shape(&ast));
    }

    #[test]
    fn emission_is_injective_on_structure(a in arb_ast(), b in arb_ast()) {
        let cfg = EmitterConfig::default();
        let (ta, tb) = (emit(&a, &cfg).unwrap(), emit(&b, &cfg).unwrap());
        if ta == tb {
            prop_assert_eq!(expected_shape(&a), expected_shape(&b));
        }
    }
}
