//! End-to-end acceptance checks. Runs as a plain binary so that every
//! check prints one PASS/FAIL line, even when all of them pass.

mod common;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use stexify::ast::default_actions;
use stexify::emit::{emit, EmitterConfig, RAW_LEAF};
use stexify::gen::{generate_grammar, scan_stex_source, GenConfig};
use stexify::glr::{CompileError, CompiledGrammar};
use stexify::grammar::parse_grammar_text;
use stexify::lexing::RecognizerRegistry;
use stexify::session::{FormulaStatus, Session, SessionConfig};
use stexify::tex::{extract_formulas, rewrite, RewritePlan};

use common::docs::{random_doc, replacement};
use common::*;

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check, Duration);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn stexify(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_stexify"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn stexify");
    let mut input = child.stdin.take().unwrap();
    input.write_all(stdin.unwrap_or("").as_bytes()).unwrap();
    drop(input);
    child.wait_with_output().unwrap()
}

fn lambda_grammar() -> String {
    fixture("lambda.grammar").display().to_string()
}

fn leaf(name: &str, lexeme: &str) -> Value {
    json!({"name": name, "lexeme": lexeme})
}

fn parenthesized_identity() -> Check {
    let out = stexify(&["parse", "--json", "-g", &lambda_grammar(), "(\\lambda x.x)"], None);
    ensure!(out.status.success(), "exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let candidates = v["candidates"].as_array().ok_or("no candidates array")?;
    ensure!(candidates.len() == 1, "{} candidates", candidates.len());
    let expected = json!({
        "name": "dobrackets",
        "children": [{
            "name": "abs",
            "children": [
                {"name": "varlist", "children": [leaf("var", "x")]},
                leaf("var", "x"),
            ],
            "flexary": [0],
        }],
    });
    ensure!(candidates[0]["ast"] == expected, "ast was {}", candidates[0]["ast"]);
    Ok(())
}

fn demo_partition() -> Check {
    let g = parse_grammar_text(&read_fixture("lambda.grammar")).map_err(|e| e.to_string())?;
    let mut actions = default_actions(&g);
    actions.overlay_json(&read_fixture("lambda.actions.json")).map_err(|e| e.to_string())?;
    let compiled = CompiledGrammar::compile(g).map_err(|e| e.to_string())?;
    let s = Session::create(&fixture("demo-file.tex"), &compiled, &actions, &RecognizerRegistry::default(), SessionConfig::default(), None)
        .map_err(|e| e.to_string())?;
    let amb = |count| FormulaStatus::Ambiguous { count };
    let expected = [
        ("\\lambda xyz.xy", amb(2)),
        ("\\lambda xy.x", FormulaStatus::Unambiguous),
        ("y", FormulaStatus::Unambiguous),
        ("xyzw", amb(5)),
        ("(\\lambda xy.xy)", amb(2)),
        ("\\lambda xy.x", FormulaStatus::Unambiguous),
        ("y", FormulaStatus::Unambiguous),
        ("xy", FormulaStatus::Unambiguous),
    ];
    ensure!(s.entries.len() == 8, "{} formulas", s.entries.len());
    for (e, (raw, status)) in s.entries.iter().zip(expected) {
        ensure!(e.formula.raw == raw && e.status == status, "formula {:?}: {:?}", e.formula.raw, e.status);
    }
    Ok(())
}

fn catalan_and_oracle() -> Check {
    let g = parse_grammar_text(&read_fixture("lambda.grammar")).map_err(|e| e.to_string())?;
    let compiled = CompiledGrammar::compile(g.clone()).map_err(|e| e.to_string())?;
    let registry = RecognizerRegistry::default();
    let count = |s: &str| compiled.parse(s, &registry).map_or(0, |f| f.count_trees() as u128);
    let catalan = [1, 1, 2, 5, 14, 42, 132, 429];
    for (n, &want) in catalan.iter().enumerate() {
        let input: String = "xyzwfxyz"[..n + 1].to_string();
        ensure!(count(&input) == want, "{input}: {} trees, want {want}", count(&input));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut cases, mut parsable) = (0, 0);
    while cases < 200 {
        let ids = if cases % 2 == 0 {
            match random_derivation(&g, &mut rng, 10) {
                Some(ids) => ids,
                None => continue,
            }
        } else {
            random_lambda_ids(&g, &mut rng, 10)
        };
        cases += 1;
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let want = CykOracle::count(&g, &refs);
        let text = render_lambda(&g, &ids, &mut rng);
        ensure!(count(&text) == want, "{text:?}: parser {} oracle {want}", count(&text));
        parsable += usize::from(want > 0);
    }
    ensure!(parsable >= 50, "only {parsable} parsable inputs in the corpus");
    Ok(())
}

fn emission_goldens() -> Check {
    use stexify::ast::AstNode;
    let cfg = EmitterConfig::default();
    let var = |x: &str| AstNode::leaf("var", x);
    let raw = |x: &str| AstNode::leaf(RAW_LEAF, x);
    let abs = AstNode::node_with_lists("abs", vec![AstNode::node("varlist", vec![var("x"), var("y"), var("z")]), raw("A")], [0]);
    let app = AstNode::node("app", vec![raw("A"), raw("B")]);
    let cases = [(var("x"), "\\var{x}"), (abs, "\\abs{\\var{x},\\var{y},\\var{z}}{A}"), (app, "\\app{A}{B}")];
    for (ast, want) in cases {
        let got = emit(&ast, &cfg).map_err(|e| e.to_string())?;
        ensure!(got == want, "{got:?} != {want:?}");
    }
    Ok(())
}

fn cycle_rejection() -> Check {
    for (source, cyclic) in [("a: a;", vec!["a"]), ("a: b; b: a;", vec!["a", "b"])] {
        let g = parse_grammar_text(source).map_err(|e| e.to_string())?;
        match CompiledGrammar::compile(g) {
            Err(CompileError::InvalidGrammar(report)) => {
                let named: Vec<&str> = report.cyclic.iter().map(String::as_str).collect();
                ensure!(named == cyclic, "{source}: cyclic set {named:?}");
                let message = CompileError::InvalidGrammar(report).to_string();
                ensure!(cyclic.iter().all(|n| message.contains(n)), "message does not name the cycle: {message}");
            }
            Err(e) => return Err(format!("{source}: wrong error {e}")),
            Ok(_) => return Err(format!("{source}: accepted")),
        }
    }
    let g = parse_grammar_text(&read_fixture("lambda.grammar")).map_err(|e| e.to_string())?;
    CompiledGrammar::compile(g).map_err(|e| format!("fixture grammar rejected: {e}"))?;
    Ok(())
}

fn generated_grammar_equivalence() -> Check {
    let hand = CompiledGrammar::compile(parse_grammar_text(&read_fixture("lambda.grammar")).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let specs = scan_stex_source(&read_fixture("lcalc.tex")).map_err(|e| e.to_string())?;
    let generated = generate_grammar(&specs, &GenConfig::default()).map_err(|e| e.to_string())?;
    let gen = CompiledGrammar::compile(generated.grammar).map_err(|e| e.to_string())?;
    let registry = RecognizerRegistry::default();
    let formulas = extract_formulas(&read_fixture("demo-file.tex")).map_err(|e| e.to_string())?;
    ensure!(formulas.len() == 8, "{} demo formulas", formulas.len());
    for f in formulas {
        let a = hand.parse(&f.raw, &registry).map_or(0, |x| x.count_trees());
        let b = gen.parse(&f.raw, &registry).map_or(0, |x| x.count_trees());
        ensure!(a == b && a > 0, "{:?}: hand-written {a}, generated {b}", f.raw);
    }
    Ok(())
}

fn end_to_end_goldens() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let doc = dir.path().join("demo-file.tex");
    fs::write(&doc, read_fixture("demo-file.tex")).map_err(|e| e.to_string())?;
    let (doc_s, grammar) = (doc.display().to_string(), lambda_grammar());
    let run = |extra: &[&str], out: &Path, stdin: Option<&str>| -> Check {
        let out_s = out.display().to_string();
        let mut args = vec!["run", "-g", grammar.as_str(), doc_s.as_str(), "-o", out_s.as_str()];
        args.extend_from_slice(extra);
        let res = stexify(&args, stdin);
        ensure!(res.status.success(), "exit {:?}: {}", res.status.code(), String::from_utf8_lossy(&res.stderr));
        Ok(())
    };
    let skipped = dir.path().join("skipped.tex");
    run(&["--non-interactive", "--skip-ambiguous"], &skipped, None)?;
    let got = fs::read(&skipped).map_err(|e| e.to_string())?;
    ensure!(got == read_fixture("golden/demo-file.skip-ambiguous.tex").into_bytes(), "skip-ambiguous output differs from golden");
    let replaced = extract_formulas(&String::from_utf8_lossy(&got))
        .map_err(|e| e.to_string())?
        .iter()
        .filter(|f| f.raw.contains("\\var"))
        .count();
    ensure!(replaced == 5, "{replaced} formulas replaced");

    // Abstraction body for both binders, left-associated application.
    let resolved = dir.path().join("resolved.tex");
    run(&[], &resolved, Some("2\n5\n2\n"))?;
    let got = fs::read(&resolved).map_err(|e| e.to_string())?;
    ensure!(got == read_fixture("golden/demo-file.resolved.tex").into_bytes(), "resolved output differs from golden");
    Ok(())
}

fn byte_fidelity() -> Check {
    let mut runner = TestRunner::new_with_rng(Config::default(), TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let docs = random_doc();
    let texts = replacement();
    let mut replaced = 0;
    for case in 0..500 {
        let doc = docs.new_tree(&mut runner).map_err(|e| e.to_string())?.current();
        let spans = extract_formulas(&doc.text).map_err(|e| format!("case {case}: {e}"))?;
        ensure!(spans.len() == doc.formulas.len(), "case {case}: {} formulas, generated {}", spans.len(), doc.formulas.len());
        let same = rewrite(&doc.text, &spans, &RewritePlan::new()).map_err(|e| e.to_string())?;
        ensure!(same == doc.text, "case {case}: empty plan changed the document");
        if spans.is_empty() {
            continue;
        }
        let pick = &spans[case % spans.len()];
        let text = texts.new_tree(&mut runner).map_err(|e| e.to_string())?.current();
        let out = rewrite(&doc.text, &spans, &RewritePlan::new().replace(pick.id, text.clone())).map_err(|e| e.to_string())?;
        let prefix = &doc.text[..pick.inner.start];
        let suffix = &doc.text[pick.inner.end..];
        ensure!(
            out.len() == prefix.len() + text.len() + suffix.len() && out.starts_with(prefix) && out.ends_with(suffix) && out[prefix.len()..out.len() - suffix.len()] == text,
            "case {case}: change escaped formula {}",
            pick.id
        );
        replaced += 1;
    }
    ensure!(replaced >= 250, "only {replaced} documents had a formula to replace");
    Ok(())
}

fn main() {
    let checks: [Criterion; 8] = [
        ("parse --json on (\\lambda x.x) gives the single expected tree", parenthesized_identity, Duration::from_secs(1)),
        ("demo document ambiguity partition", demo_partition, Duration::from_secs(1)),
        ("Catalan counts and brute-force oracle agreement", catalan_and_oracle, Duration::from_secs(30)),
        ("emitter reproduces the macro goldens", emission_goldens, Duration::from_secs(1)),
        ("cyclic grammars are rejected with the cycle named", cycle_rejection, Duration::from_secs(1)),
        ("generated grammar matches the hand-written counts", generated_grammar_equivalence, Duration::from_secs(1)),
        ("run reproduces both golden documents", end_to_end_goldens, Duration::from_secs(2)),
        ("rewrites preserve every byte outside replaced formulas", byte_fidelity, Duration::from_secs(30)),
    ];
    let mut failed = 0;
    for (name, check, budget) in checks {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let result = result.and_then(|()| {
            if took <= budget {
                Ok(())
            } else {
                Err(format!("took {took:?}, budget {budget:?}"))
            }
        });
        match result {
            Ok(()) => println!("PASS  {name}  ({} ms)", took.as_millis()),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}  ({} ms): {why}", took.as_millis());
            }
        }
    }
    println!("{} of {} acceptance checks passed", 8 - failed, 8);
    if failed > 0 {
        std::process::exit(1);
    }
}
