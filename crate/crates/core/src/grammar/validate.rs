use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use super::{Grammar, Symbol};

/// Result of [`validate`]. Cycles and unproductive nonterminals make a
/// grammar unusable; unreachable nonterminals are only a warning.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub cyclic: BTreeSet<String>,
    pub unproductive: BTreeSet<String>,
    pub unreachable: BTreeSet<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.cyclic.is_empty() && self.unproductive.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join(", ");
        let mut parts = Vec::new();
        if !self.cyclic.is_empty() {
            parts.push(format!("cyclic nonterminals: {{{}}}", list(&self.cyclic)));
        }
        if !self.unproductive.is_empty() {
            parts.push(format!("unproductive nonterminals: {{{}}}", list(&self.unproductive)));
        }
        if !self.unreachable.is_empty() {
            parts.push(format!("unreachable nonterminals: {{{}}}", list(&self.unreachable)));
        }
        if parts.is_empty() {
            write!(f, "grammar is valid")
        } else {
            write!(f, "{}", parts.join("; "))
        }
    }
}

pub fn validate(grammar: &Grammar) -> ValidationReport {
    ValidationReport {
        cyclic: cyclic(grammar),
        unproductive: unproductive(grammar),
        unreachable: unreachable(grammar),
    }
}

/// Nonterminals `A` with `A =>+ A`: an edge `A -> B` exists for every
/// production `A -> x B y` whose `x` and `y` are nullable.
fn cyclic(grammar: &Grammar) -> BTreeSet<String> {
    let nullable = grammar.nullable_set();
    let mut graph = DiGraph::<&str, ()>::new();
    let mut index = BTreeMap::new();
    for nt in grammar.nonterminals() {
        index.insert(nt, graph.add_node(nt));
    }
    let is_nullable = |s: &Symbol| matches!(s, Symbol::NonTerminal(n) if nullable.contains(n));
    let mut self_loops = BTreeSet::new();
    for p in &grammar.productions {
        for (i, sym) in p.rhs.iter().enumerate() {
            let Symbol::NonTerminal(target) = sym else { continue };
            let others_nullable = p
                .rhs
                .iter()
                .enumerate()
                .all(|(j, s)| j == i || is_nullable(s));
            if others_nullable {
                if *target == p.lhs {
                    self_loops.insert(p.lhs.clone());
                }
                if let (Some(&a), Some(&b)) = (index.get(p.lhs.as_str()), index.get(target.as_str())) {
                    graph.update_edge(a, b, ());
                }
            }
        }
    }
    let mut out = self_loops;
    for scc in tarjan_scc(&graph) {
        if scc.len() > 1 {
            out.extend(scc.into_iter().map(|n| graph[n].to_string()));
        }
    }
    out
}

fn unproductive(grammar: &Grammar) -> BTreeSet<String> {
    let mut productive = BTreeSet::new();
    loop {
        let mut changed = false;
        for p in &grammar.productions {
            if productive.contains(&p.lhs) {
                continue;
            }
            let ok = p.rhs.iter().all(|s| match s {
                Symbol::Terminal(_) => true,
                Symbol::NonTerminal(n) => productive.contains(n),
            });
            if ok {
                productive.insert(p.lhs.clone());
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    grammar
        .nonterminals()
        .into_iter()
        .filter(|n| !productive.contains(*n))
        .map(String::from)
        .collect()
}

fn unreachable(grammar: &Grammar) -> BTreeSet<String> {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([grammar.start.clone()]);
    while let Some(n) = queue.pop_front() {
        if !seen.insert(n.clone()) {
            continue;
        }
        for p in grammar.productions_for(&n) {
            for s in &p.rhs {
                if let Symbol::NonTerminal(m) = s {
                    if !seen.contains(m) {
                        queue.push_back(m.clone());
                    }
                }
            }
        }
    }
    grammar
        .nonterminals()
        .into_iter()
        .filter(|n| !seen.contains(*n))
        .map(String::from)
        .collect()
}
