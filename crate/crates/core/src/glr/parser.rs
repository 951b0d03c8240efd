//! Right-nulled GLR driver over a graph-structured stack.
//!
//! Positions play the role of generations: a token may be shorter or
//! longer than its competitors, so every distinct token end becomes its own
//! frontier and frontiers are processed in increasing order. Within one
//! frontier the lookahead is the set of tokens that match there.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::forest::{ForestNode, NodeId, PackedNode, ParseForest};
use super::table::{Action, Sym};
use super::{CompiledGrammar, DeadEnd, ParseError};
use crate::lexing::{RecognizerRegistry, Token};

struct GssNode {
    state: usize,
    pos: usize,
    /// `(predecessor, forest label)`
    edges: Vec<(usize, NodeId)>,
}

#[derive(Default)]
struct Gss {
    nodes: Vec<GssNode>,
}

impl Gss {
    fn add(&mut self, state: usize, pos: usize) -> usize {
        self.nodes.push(GssNode {
            state,
            pos,
            edges: Vec::new(),
        });
        self.nodes.len() - 1
    }

    fn edge(&self, from: usize, to: usize) -> Option<NodeId> {
        self.nodes[from].edges.iter().find(|(t, _)| *t == to).map(|(_, l)| *l)
    }

    /// All walks of exactly `len` edges from `from`, as `(end, labels)` with
    /// labels in walking order.
    fn paths(&self, from: usize, len: usize) -> Vec<(usize, Vec<NodeId>)> {
        let mut out = Vec::new();
        let mut labels = Vec::with_capacity(len);
        self.walk(from, len, &mut labels, &mut out);
        out
    }

    fn walk(&self, node: usize, left: usize, labels: &mut Vec<NodeId>, out: &mut Vec<(usize, Vec<NodeId>)>) {
        if left == 0 {
            out.push((node, labels.clone()));
            return;
        }
        for &(next, label) in &self.nodes[node].edges {
            labels.push(label);
            self.walk(next, left - 1, labels, out);
            labels.pop();
        }
    }
}

struct ForestBuilder<'c> {
    compiled: &'c CompiledGrammar,
    nodes: Vec<ForestNode>,
    symbols: HashMap<(usize, usize, usize), NodeId>,
    tokens: HashMap<(usize, usize, usize), NodeId>,
    packed: HashSet<(NodeId, usize, Vec<NodeId>)>,
    epsilon_done: HashSet<(usize, usize)>,
}

impl<'c> ForestBuilder<'c> {
    fn new(compiled: &'c CompiledGrammar) -> Self {
        ForestBuilder {
            compiled,
            nodes: Vec::new(),
            symbols: HashMap::new(),
            tokens: HashMap::new(),
            packed: HashSet::new(),
            epsilon_done: HashSet::new(),
        }
    }

    fn token(&mut self, terminal: usize, tok: &Token) -> NodeId {
        let key = (terminal, tok.span.start, tok.span.end);
        if let Some(&id) = self.tokens.get(&key) {
            return id;
        }
        self.nodes.push(ForestNode::Token(tok.clone()));
        let id = self.nodes.len() - 1;
        self.tokens.insert(key, id);
        id
    }

    fn symbol(&mut self, nt: usize, start: usize, end: usize) -> NodeId {
        if let Some(&id) = self.symbols.get(&(nt, start, end)) {
            return id;
        }
        self.nodes.push(ForestNode::Symbol {
            nonterminal: self.compiled.cfg.nonterminals[nt].clone(),
            span: (start, end),
            alternatives: Vec::new(),
        });
        let id = self.nodes.len() - 1;
        self.symbols.insert((nt, start, end), id);
        id
    }

    fn add_packed(&mut self, node: NodeId, production: usize, children: Vec<NodeId>) {
        if !self.packed.insert((node, production, children.clone())) {
            return;
        }
        if let ForestNode::Symbol { alternatives, .. } = &mut self.nodes[node] {
            alternatives.push(PackedNode { production, children });
        }
    }

    /// Node holding every empty derivation of a nullable nonterminal.
    fn epsilon(&mut self, nt: usize, pos: usize) -> NodeId {
        let id = self.symbol(nt, pos, pos);
        if !self.epsilon_done.insert((nt, pos)) {
            return id;
        }
        let cfg = &self.compiled.cfg;
        let prods: Vec<(usize, Vec<usize>)> = cfg.by_lhs[nt]
            .iter()
            .filter_map(|&p| {
                let rhs = &cfg.productions[p].1;
                let nts: Option<Vec<usize>> = rhs
                    .iter()
                    .map(|s| match *s {
                        Sym::N(m) if cfg.nullable[m] => Some(m),
                        _ => None,
                    })
                    .collect();
                nts.map(|n| (p, n))
            })
            .collect();
        for (p, rhs) in prods {
            let children = rhs.into_iter().map(|m| self.epsilon(m, pos)).collect();
            self.add_packed(id, p, children);
        }
        id
    }

    /// Merges two complete parses that end at different positions (possible
    /// when trailing whitespace could also be consumed by a token).
    fn merge_roots(&mut self, a: NodeId, b: NodeId, end: usize) -> NodeId {
        let (ForestNode::Symbol { nonterminal, alternatives: alts_a, .. }, ForestNode::Symbol { alternatives: alts_b, .. }) =
            (&self.nodes[a], &self.nodes[b])
        else {
            return a;
        };
        let mut alternatives = alts_a.clone();
        alternatives.extend(alts_b.iter().cloned());
        let merged = ForestNode::Symbol {
            nonterminal: nonterminal.clone(),
            span: (0, end),
            alternatives,
        };
        self.nodes.push(merged);
        self.nodes.len() - 1
    }
}

struct Reduction {
    node: usize,
    production: usize,
    len: usize,
    label: Option<NodeId>,
}

pub(super) fn parse(compiled: &CompiledGrammar, input: &str, registry: &RecognizerRegistry) -> Result<ParseForest, ParseError> {
    compiled.scanner.check_registry(registry)?;
    let cfg = &compiled.cfg;
    let table = &compiled.table;
    let eof = cfg.eof();

    let mut gss = Gss::default();
    let mut forest = ForestBuilder::new(compiled);
    let v0 = gss.add(0, 0);
    let mut pending: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::from([(0, BTreeMap::from([(0, v0)]))]);
    let mut root: Option<NodeId> = None;
    let mut last_failure = None;

    let reductions = |state: usize, lookahead: &[usize]| -> Vec<(usize, usize)> {
        let mut out: BTreeSet<(usize, usize)> = BTreeSet::new();
        for &t in lookahead {
            for a in &table.actions[state][t] {
                if let Action::Reduce { production, len } = *a {
                    out.insert((production, len));
                }
            }
        }
        out.into_iter().collect()
    };

    while let Some((pos, mut generation)) = pending.pop_first() {
        let frontier: Vec<usize> = generation.values().copied().collect();
        let at = compiled.scanner.skip(input, pos);
        let at_end = at >= input.len();
        let expected: BTreeSet<usize> = frontier
            .iter()
            .flat_map(|&n| compiled.expected_terminals(gss.nodes[n].state))
            .collect();
        let tokens = if at_end {
            Vec::new()
        } else {
            compiled.scanner.next_tokens(input, pos, expected.iter().copied(), registry)?
        };
        let token_terms: Vec<usize> = tokens
            .iter()
            .map(|t| compiled.scanner.terminal_index(&t.terminal).expect("scanner terminal"))
            .collect();
        let mut lookahead: Vec<usize> = token_terms.clone();
        if at_end {
            lookahead.push(eof);
        }
        lookahead.sort_unstable();
        lookahead.dedup();

        let mut queue: Vec<Reduction> = Vec::new();
        for &w in &frontier {
            for (production, len) in reductions(gss.nodes[w].state, &lookahead) {
                if len == 0 {
                    queue.push(Reduction {
                        node: w,
                        production,
                        len,
                        label: None,
                    });
                } else {
                    for &(v, z) in &gss.nodes[w].edges {
                        queue.push(Reduction {
                            node: v,
                            production,
                            len,
                            label: Some(z),
                        });
                    }
                }
            }
        }

        while let Some(r) = queue.pop() {
            let (lhs, ref rhs) = cfg.productions[r.production];
            let walks = if r.len == 0 {
                vec![(r.node, Vec::new())]
            } else {
                gss.paths(r.node, r.len - 1)
            };
            for (u, labels) in walks {
                let k = gss.nodes[u].state;
                let Some(&l) = table.gotos[k].get(&lhs) else { continue };
                let z = if r.len == 0 {
                    forest.epsilon(lhs, pos)
                } else {
                    let mut children: Vec<NodeId> = labels.iter().rev().copied().collect();
                    children.push(r.label.expect("labelled reduction"));
                    for s in &rhs[r.len..] {
                        let Sym::N(m) = *s else { unreachable!("right-nulled suffix holds a terminal") };
                        children.push(forest.epsilon(m, pos));
                    }
                    let node = forest.symbol(lhs, gss.nodes[u].pos, pos);
                    forest.add_packed(node, r.production, children);
                    node
                };
                match generation.get(&l) {
                    Some(&w) => {
                        if gss.edge(w, u).is_none() {
                            gss.nodes[w].edges.push((u, z));
                            if r.len != 0 {
                                for (production, len) in reductions(l, &lookahead) {
                                    if len > 0 {
                                        queue.push(Reduction {
                                            node: u,
                                            production,
                                            len,
                                            label: Some(z),
                                        });
                                    }
                                }
                            }
                        }
                    }
                    None => {
                        let w = gss.add(l, pos);
                        generation.insert(l, w);
                        gss.nodes[w].edges.push((u, z));
                        for (production, len) in reductions(l, &lookahead) {
                            if len == 0 {
                                queue.push(Reduction {
                                    node: w,
                                    production,
                                    len,
                                    label: None,
                                });
                            } else if r.len != 0 {
                                queue.push(Reduction {
                                    node: u,
                                    production,
                                    len,
                                    label: Some(z),
                                });
                            }
                        }
                    }
                }
            }
        }

        if at_end {
            for &w in generation.values() {
                if table.actions[gss.nodes[w].state][eof].contains(&Action::Accept) {
                    if let Some(label) = gss.edge(w, v0) {
                        root = Some(match root {
                            Some(prev) if prev != label => forest.merge_roots(prev, label, input.len()),
                            _ => label,
                        });
                    }
                }
            }
        }

        for &w in generation.values() {
            let state = gss.nodes[w].state;
            for (tok, &term) in tokens.iter().zip(&token_terms) {
                for a in &table.actions[state][term] {
                    if let Action::Shift(k) = *a {
                        let z = forest.token(term, tok);
                        let target = pending.entry(tok.span.end).or_default();
                        let u = match target.get(&k) {
                            Some(&u) => u,
                            None => {
                                let u = gss.add(k, tok.span.end);
                                target.insert(k, u);
                                u
                            }
                        };
                        if gss.edge(u, w).is_none() {
                            gss.nodes[u].edges.push((w, z));
                        }
                    }
                }
            }
        }

        let kind = if at_end {
            DeadEnd::PrematureEnd
        } else if tokens.is_empty() {
            DeadEnd::Lexical
        } else {
            DeadEnd::UnexpectedToken
        };
        last_failure = Some((at, expected, kind));
    }

    match root {
        Some(root) => Ok(ParseForest {
            nodes: forest.nodes,
            root: Some(root),
        }),
        None => {
            let (position, expected, kind) = last_failure.expect("at least one frontier");
            let expected = expected
                .into_iter()
                .map(|t| compiled.grammar.terminal_label(compiled.scanner.terminal_id(t)))
                .collect();
            Err(ParseError::NoParse {
                position,
                expected,
                kind,
            })
        }
    }
}
