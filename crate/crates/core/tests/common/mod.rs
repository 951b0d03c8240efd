#![allow(dead_code)]

pub mod docs;

use std::collections::HashMap;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use stexify::grammar::{Grammar, Symbol, TerminalKind};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

/// Brute-force derivation counter over a sequence of terminal ids.
/// Independent of the table-driven parser: it works straight from the
/// productions, memoizing counts per (symbol, start, end).
pub struct CykOracle<'g> {
    grammar: &'g Grammar,
    tokens: Vec<String>,
    memo: HashMap<(String, usize, usize), u128>,
    min_len: HashMap<String, usize>,
    active: Vec<(String, usize, usize)>,
}

impl<'g> CykOracle<'g> {
    pub fn count(grammar: &'g Grammar, tokens: &[&str]) -> u128 {
        let mut o = CykOracle {
            grammar,
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            memo: HashMap::new(),
            min_len: min_lengths(grammar),
            active: Vec::new(),
        };
        o.symbol(&grammar.start, 0, tokens.len())
    }

    fn symbol(&mut self, nt: &str, i: usize, j: usize) -> u128 {
        let key = (nt.to_string(), i, j);
        if let Some(&n) = self.memo.get(&key) {
            return n;
        }
        if self.min_len.get(nt).is_none_or(|&m| m > j - i) {
            return 0;
        }
        assert!(!self.active.contains(&key), "cyclic derivation of {nt} over {i}..{j} in\n{}", self.grammar.to_text());
        self.active.push(key.clone());
        let rhss: Vec<Vec<Symbol>> = self.grammar.productions_for(nt).map(|p| p.rhs.clone()).collect();
        let mut total = 0u128;
        for rhs in rhss {
            total += self.seq(&rhs, i, j);
        }
        self.active.pop();
        self.memo.insert(key, total);
        total
    }

    fn seq_min(&self, rhs: &[Symbol]) -> usize {
        rhs.iter()
            .map(|s| match s {
                Symbol::Terminal(_) => 1,
                Symbol::NonTerminal(n) => self.min_len.get(n).copied().unwrap_or(usize::MAX / 64),
            })
            .sum()
    }

    fn seq(&mut self, rhs: &[Symbol], i: usize, j: usize) -> u128 {
        if self.seq_min(rhs) > j - i {
            return 0;
        }
        let Some((first, rest)) = rhs.split_first() else {
            return u128::from(i == j);
        };
        match first {
            Symbol::Terminal(t) => {
                if i < j && self.tokens[i] == *t {
                    self.seq(rest, i + 1, j)
                } else {
                    0
                }
            }
            Symbol::NonTerminal(n) => {
                let mut total = 0;
                for k in i..=j {
                    // the shorter side first, so an impossible split never
                    // recurses on the full span
                    if k == i {
                        let head = self.symbol(n, i, k);
                        if head != 0 {
                            total += head * self.seq(rest, k, j);
                        }
                    } else {
                        let tail = self.seq(rest, k, j);
                        if tail != 0 {
                            total += self.symbol(n, i, k) * tail;
                        }
                    }
                }
                total
            }
        }
    }
}

/// Shortest yield of each productive nonterminal.
fn min_lengths(grammar: &Grammar) -> HashMap<String, usize> {
    let mut min: HashMap<String, usize> = HashMap::new();
    loop {
        let mut changed = false;
        for p in &grammar.productions {
            let len: Option<usize> = p
                .rhs
                .iter()
                .map(|s| match s {
                    Symbol::Terminal(_) => Some(1),
                    Symbol::NonTerminal(n) => min.get(n).copied(),
                })
                .sum();
            if let Some(len) = len {
                if min.get(&p.lhs).is_none_or(|&m| len < m) {
                    min.insert(p.lhs.clone(), len);
                    changed = true;
                }
            }
        }
        if !changed {
            return min;
        }
    }
}

/// Id of the terminal whose literal alternatives include `text`.
pub fn literal_id(grammar: &Grammar, text: &str) -> String {
    try_literal_id(grammar, text).unwrap_or_else(|| panic!("no literal {text:?}"))
}

pub fn try_literal_id(grammar: &Grammar, text: &str) -> Option<String> {
    grammar
        .terminals
        .iter()
        .find(|(_, d)| matches!(&d.kind, TerminalKind::Literal(alts) if alts.iter().any(|a| a == text)))
        .map(|(id, _)| id.clone())
}

/// A random terminal-id string from a random derivation, or `None` when it
/// grows past `max_len`.
pub fn random_derivation<R: Rng>(grammar: &Grammar, rng: &mut R, max_len: usize) -> Option<Vec<String>> {
    let mut out = Vec::new();
    let mut stack = vec![Symbol::NonTerminal(grammar.start.clone())];
    let mut steps = 0;
    while let Some(sym) = stack.pop() {
        match sym {
            Symbol::Terminal(t) => {
                out.push(t);
                if out.len() > max_len {
                    return None;
                }
            }
            Symbol::NonTerminal(n) => {
                steps += 1;
                if steps > 200 {
                    return None;
                }
                let prods: Vec<_> = grammar.productions_for(&n).collect();
                let p = prods.choose(rng)?;
                stack.extend(p.rhs.iter().rev().cloned());
            }
        }
    }
    Some(out)
}

/// Renders terminal ids of the lambda fixture as source text.
pub fn render_lambda(grammar: &Grammar, ids: &[String], rng: &mut impl Rng) -> String {
    let lparen = literal_id(grammar, "(");
    let rparen = literal_id(grammar, ")");
    let mut out = String::new();
    for id in ids {
        let lexeme = match id.as_str() {
            "var" => ["x", "y", "z", "w", "f"].choose(rng).unwrap().to_string(),
            "lam" => ["\\lambda ", "λ"].choose(rng).unwrap().to_string(),
            "dot" => ".".to_string(),
            s if s == lparen => "(".to_string(),
            s if s == rparen => ")".to_string(),
            other => panic!("unexpected terminal {other}"),
        };
        out.push_str(&lexeme);
        if rng.gen_bool(0.3) {
            out.push(' ');
        }
    }
    out
}

/// Uniformly random terminal-id strings over the lambda fixture.
pub fn random_lambda_ids(grammar: &Grammar, rng: &mut impl Rng, max_len: usize) -> Vec<String> {
    let alphabet = [
        "var".to_string(),
        "var".to_string(),
        "lam".to_string(),
        "dot".to_string(),
        literal_id(grammar, "("),
        literal_id(grammar, ")"),
    ];
    let n = rng.gen_range(1..=max_len);
    (0..n).map(|_| alphabet.choose(rng).unwrap().clone()).collect()
}

/// Minimal HTTP/1.1 client for talking to a spawned server.
pub fn http(port: u16, method: &str, path: &str, body: Option<&str>) -> (u16, String) {
    use std::io::{Read, Write};
    let mut stream = std::net::TcpStream::connect(("127.0.0.1", port)).unwrap();
    stream.set_read_timeout(Some(std::time::Duration::from_secs(10))).unwrap();
    let body = body.unwrap_or("");
    write!(
        stream,
        "{method} {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    let status = response[9..12].parse().unwrap();
    let payload = response.split_once("\r\n\r\n").map_or("", |(_, b)| b).to_string();
    (status, payload)
}
