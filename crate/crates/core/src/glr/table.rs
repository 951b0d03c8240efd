//! LALR(1) tables with conflicts kept as action sets.
//!
//! Lookaheads are computed by spontaneous generation and propagation over
//! the LR(0) automaton. Reductions are right-nulled: an item `A -> a . b`
//! whose remaining `b` derives the empty string reduces `A` after popping
//! `|a|` symbols, which lets the driver handle epsilon rules without
//! looping.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use crate::grammar::{Grammar, Symbol};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Sym {
    T(usize),
    N(usize),
}

/// Grammar flattened to indices. The last nonterminal is the augmented
/// start symbol and the last production is `start' -> start`.
#[derive(Clone, Debug)]
pub(crate) struct Cfg {
    pub nonterminals: Vec<String>,
    pub productions: Vec<(usize, Vec<Sym>)>,
    pub by_lhs: Vec<Vec<usize>>,
    pub num_terminals: usize,
    pub nullable: Vec<bool>,
    first: Vec<BTreeSet<usize>>,
}

impl Cfg {
    pub fn new(grammar: &Grammar) -> Self {
        let terminal_index: HashMap<&str, usize> = grammar
            .terminals
            .keys()
            .enumerate()
            .map(|(i, k)| (k.as_str(), i))
            .collect();
        let mut nonterminals: Vec<String> = grammar.nonterminals().into_iter().map(String::from).collect();
        let nt_index: HashMap<String, usize> = nonterminals
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let mut productions: Vec<(usize, Vec<Sym>)> = grammar
            .productions
            .iter()
            .map(|p| {
                let rhs = p
                    .rhs
                    .iter()
                    .map(|s| match s {
                        Symbol::Terminal(t) => Sym::T(terminal_index[t.as_str()]),
                        Symbol::NonTerminal(n) => Sym::N(nt_index[n]),
                    })
                    .collect();
                (nt_index[&p.lhs], rhs)
            })
            .collect();
        let augmented = nonterminals.len();
        nonterminals.push(format!("{}'", grammar.start));
        productions.push((augmented, vec![Sym::N(nt_index[&grammar.start])]));

        let mut by_lhs = vec![Vec::new(); nonterminals.len()];
        for (i, (lhs, _)) in productions.iter().enumerate() {
            by_lhs[*lhs].push(i);
        }
        let mut cfg = Cfg {
            nonterminals,
            productions,
            by_lhs,
            num_terminals: grammar.terminals.len(),
            nullable: Vec::new(),
            first: Vec::new(),
        };
        cfg.compute_nullable_and_first();
        cfg
    }

    pub fn eof(&self) -> usize {
        self.num_terminals
    }

    pub fn augmented_production(&self) -> usize {
        self.productions.len() - 1
    }

    fn compute_nullable_and_first(&mut self) {
        let n = self.nonterminals.len();
        let mut nullable = vec![false; n];
        let mut first = vec![BTreeSet::new(); n];
        loop {
            let mut changed = false;
            for (lhs, rhs) in &self.productions {
                if !nullable[*lhs]
                    && rhs.iter().all(|s| matches!(s, Sym::N(m) if nullable[*m]))
                {
                    nullable[*lhs] = true;
                    changed = true;
                }
                let mut add = BTreeSet::new();
                for s in rhs {
                    match *s {
                        Sym::T(t) => {
                            add.insert(t);
                            break;
                        }
                        Sym::N(m) => {
                            add.extend(first[m].iter().copied());
                            if !nullable[m] {
                                break;
                            }
                        }
                    }
                }
                let before = first[*lhs].len();
                first[*lhs].extend(add);
                changed |= first[*lhs].len() != before;
            }
            if !changed {
                break;
            }
        }
        self.nullable = nullable;
        self.first = first;
    }

    /// FIRST of a symbol string and whether it is nullable.
    fn first_of(&self, syms: &[Sym]) -> (BTreeSet<usize>, bool) {
        let mut out = BTreeSet::new();
        for s in syms {
            match *s {
                Sym::T(t) => {
                    out.insert(t);
                    return (out, false);
                }
                Sym::N(m) => {
                    out.extend(self.first[m].iter().copied());
                    if !self.nullable[m] {
                        return (out, false);
                    }
                }
            }
        }
        (out, true)
    }

    pub fn suffix_nullable(&self, prod: usize, from: usize) -> bool {
        self.productions[prod].1[from..]
            .iter()
            .all(|s| matches!(s, Sym::N(m) if self.nullable[*m]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Shift(usize),
    /// Reduce by `production` after popping `len` stack entries; `len` may
    /// be shorter than the right-hand side when the rest is nullable.
    Reduce { production: usize, len: usize },
    Accept,
}

type Item = (usize, usize);

#[derive(Clone, Debug)]
pub(crate) struct LalrTable {
    /// `actions[state][terminal]`; the last terminal column is end of input.
    pub actions: Vec<Vec<Vec<Action>>>,
    pub gotos: Vec<HashMap<usize, usize>>,
}

impl LalrTable {
    pub fn build(cfg: &Cfg) -> Self {
        let (kernels, transitions) = lr0_automaton(cfg);
        let lookaheads = lalr_lookaheads(cfg, &kernels, &transitions);
        let eof = cfg.eof();
        let columns = cfg.num_terminals + 1;
        let mut actions = vec![vec![Vec::new(); columns]; kernels.len()];
        let mut gotos = vec![HashMap::new(); kernels.len()];

        for (state, kernel) in kernels.iter().enumerate() {
            let seeds = kernel
                .iter()
                .zip(&lookaheads[state])
                .map(|(item, la)| (*item, la.clone()))
                .collect();
            let items = closure1(cfg, seeds);
            for (&(prod, dot), la) in &items {
                let rhs = &cfg.productions[prod].1;
                if let Some(Sym::T(t)) = rhs.get(dot) {
                    let target = transitions[state][&Sym::T(*t)];
                    actions[state][*t].push(Action::Shift(target));
                }
                if prod == cfg.augmented_production() {
                    if dot == 1 && la.contains(&eof) {
                        actions[state][eof].push(Action::Accept);
                    }
                    continue;
                }
                if cfg.suffix_nullable(prod, dot) {
                    for &t in la {
                        actions[state][t].push(Action::Reduce { production: prod, len: dot });
                    }
                }
            }
            for (sym, &target) in &transitions[state] {
                if let Sym::N(n) = sym {
                    gotos[state].insert(*n, target);
                }
            }
        }
        for row in &mut actions {
            for cell in row {
                cell.sort();
                cell.dedup();
            }
        }
        LalrTable { actions, gotos }
    }

    pub fn num_states(&self) -> usize {
        self.actions.len()
    }
}

fn lr0_closure(cfg: &Cfg, kernel: &[Item]) -> Vec<Item> {
    let mut items: Vec<Item> = kernel.to_vec();
    let mut seen: BTreeSet<Item> = kernel.iter().copied().collect();
    let mut i = 0;
    while i < items.len() {
        let (prod, dot) = items[i];
        if let Some(Sym::N(n)) = cfg.productions[prod].1.get(dot) {
            for &p in &cfg.by_lhs[*n] {
                if seen.insert((p, 0)) {
                    items.push((p, 0));
                }
            }
        }
        i += 1;
    }
    items
}

#[allow(clippy::type_complexity)]
fn lr0_automaton(cfg: &Cfg) -> (Vec<Vec<Item>>, Vec<BTreeMap<Sym, usize>>) {
    let start = vec![(cfg.augmented_production(), 0)];
    let mut kernels = vec![start.clone()];
    let mut index: HashMap<Vec<Item>, usize> = HashMap::from([(start, 0)]);
    let mut transitions: Vec<BTreeMap<Sym, usize>> = vec![BTreeMap::new()];
    let mut queue = VecDeque::from([0usize]);
    while let Some(state) = queue.pop_front() {
        let items = lr0_closure(cfg, &kernels[state]);
        let mut by_symbol: BTreeMap<Sym, BTreeSet<Item>> = BTreeMap::new();
        for (prod, dot) in items {
            if let Some(&sym) = cfg.productions[prod].1.get(dot) {
                by_symbol.entry(sym).or_default().insert((prod, dot + 1));
            }
        }
        for (sym, kernel) in by_symbol {
            let kernel: Vec<Item> = kernel.into_iter().collect();
            let target = match index.get(&kernel) {
                Some(&t) => t,
                None => {
                    let t = kernels.len();
                    index.insert(kernel.clone(), t);
                    kernels.push(kernel);
                    transitions.push(BTreeMap::new());
                    queue.push_back(t);
                    t
                }
            };
            transitions[state].insert(sym, target);
        }
    }
    (kernels, transitions)
}

/// LR(1) closure over lookahead sets.
fn closure1(cfg: &Cfg, seeds: Vec<(Item, BTreeSet<usize>)>) -> BTreeMap<Item, BTreeSet<usize>> {
    let mut items: BTreeMap<Item, BTreeSet<usize>> = BTreeMap::new();
    let mut work: Vec<Item> = Vec::new();
    for (item, la) in seeds {
        items.entry(item).or_default().extend(la);
        work.push(item);
    }
    while let Some((prod, dot)) = work.pop() {
        let rhs = &cfg.productions[prod].1;
        let Some(Sym::N(n)) = rhs.get(dot) else { continue };
        let (first, nullable) = cfg.first_of(&rhs[dot + 1..]);
        let mut la = first;
        if nullable {
            la.extend(items[&(prod, dot)].iter().copied());
        }
        for &p in &cfg.by_lhs[*n] {
            let fresh = !items.contains_key(&(p, 0));
            let entry = items.entry((p, 0)).or_default();
            let before = entry.len();
            entry.extend(la.iter().copied());
            if fresh || entry.len() != before {
                work.push((p, 0));
            }
        }
    }
    items
}

fn lalr_lookaheads(cfg: &Cfg, kernels: &[Vec<Item>], transitions: &[BTreeMap<Sym, usize>]) -> Vec<Vec<BTreeSet<usize>>> {
    let dummy = cfg.eof() + 1;
    let position: Vec<HashMap<Item, usize>> = kernels
        .iter()
        .map(|k| k.iter().enumerate().map(|(i, it)| (*it, i)).collect())
        .collect();
    let mut la: Vec<Vec<BTreeSet<usize>>> = kernels.iter().map(|k| vec![BTreeSet::new(); k.len()]).collect();
    let mut propagate: Vec<Vec<Vec<(usize, usize)>>> = kernels.iter().map(|k| vec![Vec::new(); k.len()]).collect();
    la[0][0].insert(cfg.eof());

    for (state, kernel) in kernels.iter().enumerate() {
        for (ki, &item) in kernel.iter().enumerate() {
            let closure = closure1(cfg, vec![(item, BTreeSet::from([dummy]))]);
            for (&(prod, dot), set) in &closure {
                let Some(&sym) = cfg.productions[prod].1.get(dot) else { continue };
                let target = transitions[state][&sym];
                let ti = position[target][&(prod, dot + 1)];
                for &a in set {
                    if a == dummy {
                        propagate[state][ki].push((target, ti));
                    } else {
                        la[target][ti].insert(a);
                    }
                }
            }
        }
    }
    loop {
        let mut changed = false;
        for state in 0..kernels.len() {
            for ki in 0..kernels[state].len() {
                let from = la[state][ki].clone();
                for &(t, ti) in &propagate[state][ki] {
                    let before = la[t][ti].len();
                    la[t][ti].extend(from.iter().copied());
                    changed |= la[t][ti].len() != before;
                }
            }
        }
        if !changed {
            return la;
        }
    }
}
