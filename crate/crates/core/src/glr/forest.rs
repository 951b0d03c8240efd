use std::collections::HashMap;
use std::rc::Rc;

use serde::Serialize;
use thiserror::Error;

use crate::lexing::Token;

pub type NodeId = usize;

/// One way of deriving a symbol node: a production and its children.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PackedNode {
    pub production: usize,
    pub children: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ForestNode {
    Token(Token),
    /// All derivations of `nonterminal` over `span`. Spans are measured in
    /// parser positions: a node ends where its last token ends.
    Symbol {
        nonterminal: String,
        span: (usize, usize),
        alternatives: Vec<PackedNode>,
    },
}

/// Shared packed parse forest. An empty forest (no root) means no parse.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ParseForest {
    pub(crate) nodes: Vec<ForestNode>,
    pub(crate) root: Option<NodeId>,
}

/// A single derivation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ParseTree {
    Leaf(Token),
    Node {
        production: usize,
        nonterminal: String,
        children: Vec<ParseTree>,
    },
}

impl ParseTree {
    /// Leaf tokens, left to right.
    pub fn frontier(&self) -> Vec<&Token> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Token>) {
        match self {
            ParseTree::Leaf(t) => out.push(t),
            ParseTree::Node { children, .. } => children.iter().for_each(|c| c.collect_leaves(out)),
        }
    }

    /// Bracketed rendering, e.g. `lexp(app(lexp(x) lexp(y)))`.
    pub fn to_sexpr(&self) -> String {
        match self {
            ParseTree::Leaf(t) => t.lexeme.clone(),
            ParseTree::Node { nonterminal, children, .. } => {
                let inner: Vec<String> = children.iter().map(ParseTree::to_sexpr).collect();
                format!("{nonterminal}({})", inner.join(" "))
            }
        }
    }
}

/// Number of trees in a forest, or a lower bound when it does not fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeCount {
    Exact(u64),
    AtLeast(u64),
}

impl std::fmt::Display for TreeCount {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TreeCount::Exact(n) => write!(f, "{n}"),
            TreeCount::AtLeast(n) => write!(f, "at least {n}"),
        }
    }
}

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
#[error("{count} parses exceed the enumeration cap of {cap}")]
pub struct TooManyParses {
    pub count: TreeCount,
    pub cap: usize,
}

pub const DEFAULT_ENUMERATION_CAP: usize = 256;

impl ParseForest {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn root(&self) -> Option<NodeId> {
        self.root
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    pub fn node(&self, id: NodeId) -> &ForestNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn span(&self, id: NodeId) -> (usize, usize) {
        match &self.nodes[id] {
            ForestNode::Token(t) => (t.span.start, t.span.end),
            ForestNode::Symbol { span, .. } => *span,
        }
    }

    /// Exact number of derivations, saturating at `u64::MAX`.
    pub fn count_trees(&self) -> u64 {
        let Some(root) = self.root else { return 0 };
        let mut memo = vec![None; self.nodes.len()];
        self.count_from(root, &mut memo)
    }

    fn count_from(&self, id: NodeId, memo: &mut Vec<Option<u64>>) -> u64 {
        if let Some(n) = memo[id] {
            return n;
        }
        let n = match &self.nodes[id] {
            ForestNode::Token(_) => 1,
            ForestNode::Symbol { alternatives, .. } => {
                let mut sum: u64 = 0;
                for alt in alternatives {
                    let mut product: u64 = 1;
                    for &c in &alt.children {
                        product = product.saturating_mul(self.count_from(c, memo));
                    }
                    sum = sum.saturating_add(product);
                }
                sum
            }
        };
        memo[id] = Some(n);
        n
    }

    /// Alternatives of a symbol node in enumeration order: by production
    /// index, then by where the children split the span.
    pub fn ordered_alternatives(&self, id: NodeId) -> Vec<&PackedNode> {
        let ForestNode::Symbol { alternatives, .. } = &self.nodes[id] else {
            return Vec::new();
        };
        let mut alts: Vec<&PackedNode> = alternatives.iter().collect();
        alts.sort_by_key(|a| {
            (
                a.production,
                a.children.iter().map(|&c| self.span(c)).collect::<Vec<_>>(),
            )
        });
        alts
    }

    /// Every derivation, in a fixed order, if there are at most `cap`.
    pub fn enumerate_trees(&self, cap: usize) -> Result<Vec<ParseTree>, TooManyParses> {
        let cap = cap.max(1);
        let Some(root) = self.root else { return Ok(Vec::new()) };
        let count = self.count_trees();
        if count > cap as u64 {
            let count = if count == u64::MAX {
                TreeCount::AtLeast(count)
            } else {
                TreeCount::Exact(count)
            };
            return Err(TooManyParses { count, cap });
        }
        let mut memo = HashMap::new();
        Ok(self.trees_of(root, &mut memo).as_ref().clone())
    }

    fn trees_of(&self, id: NodeId, memo: &mut HashMap<NodeId, Rc<Vec<ParseTree>>>) -> Rc<Vec<ParseTree>> {
        if let Some(t) = memo.get(&id) {
            return t.clone();
        }
        let out = match &self.nodes[id] {
            ForestNode::Token(t) => vec![ParseTree::Leaf(t.clone())],
            ForestNode::Symbol { nonterminal, .. } => {
                let mut out = Vec::new();
                for alt in self.ordered_alternatives(id) {
                    let child_sets: Vec<Rc<Vec<ParseTree>>> =
                        alt.children.iter().map(|&c| self.trees_of(c, memo)).collect();
                    // leftmost child varies slowest
                    let mut combos: Vec<Vec<ParseTree>> = vec![Vec::new()];
                    for set in &child_sets {
                        let mut next = Vec::with_capacity(combos.len() * set.len());
                        for prefix in &combos {
                            for t in set.iter() {
                                let mut v = prefix.clone();
                                v.push(t.clone());
                                next.push(v);
                            }
                        }
                        combos = next;
                    }
                    out.extend(combos.into_iter().map(|children| ParseTree::Node {
                        production: alt.production,
                        nonterminal: nonterminal.clone(),
                        children,
                    }));
                }
                out
            }
        };
        let out = Rc::new(out);
        memo.insert(id, out.clone());
        out
    }
}
