//! Parse trees to abstract syntax trees.
//!
//! Each nonterminal carries an [`ActionKind`] saying what its subtree turns
//! into. Literal tokens vanish, regex and recognizer tokens become leaves
//! named after their terminal, and right-recursive list rules flatten into a
//! single list node.

use std::collections::BTreeSet;
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::glr::ParseTree;
use crate::grammar::{Grammar, Symbol};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "AstRepr", try_from = "AstRepr")]
pub enum AstNode {
    Leaf {
        name: String,
        lexeme: String,
    },
    Node {
        name: String,
        children: Vec<AstNode>,
        /// Child positions holding a list node.
        flexary_slots: BTreeSet<usize>,
    },
}

impl AstNode {
    pub fn leaf(name: impl Into<String>, lexeme: impl Into<String>) -> Self {
        AstNode::Leaf {
            name: name.into(),
            lexeme: lexeme.into(),
        }
    }

    pub fn node(name: impl Into<String>, children: Vec<AstNode>) -> Self {
        AstNode::Node {
            name: name.into(),
            children,
            flexary_slots: BTreeSet::new(),
        }
    }

    /// A node whose children at `slots` are lists.
    pub fn node_with_lists(name: impl Into<String>, children: Vec<AstNode>, slots: impl IntoIterator<Item = usize>) -> Self {
        AstNode::Node {
            name: name.into(),
            children,
            flexary_slots: slots.into_iter().collect(),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            AstNode::Leaf { name, .. } | AstNode::Node { name, .. } => name,
        }
    }

    pub fn children(&self) -> &[AstNode] {
        match self {
            AstNode::Leaf { .. } => &[],
            AstNode::Node { children, .. } => children,
        }
    }

    /// Compact rendering: `abs(varlist[var(x)], var(x))`.
    pub fn to_compact(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for AstNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AstNode::Leaf { name, lexeme } => write!(f, "{name}({lexeme})"),
            AstNode::Node {
                name,
                children,
                flexary_slots,
            } => {
                write!(f, "{name}(")?;
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    if flexary_slots.contains(&i) {
                        write!(f, "{}[", c.name())?;
                        for (j, m) in c.children().iter().enumerate() {
                            if j > 0 {
                                f.write_str(", ")?;
                            }
                            write!(f, "{m}")?;
                        }
                        f.write_str("]")?;
                    } else {
                        write!(f, "{c}")?;
                    }
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct AstRepr {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lexeme: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    children: Option<Vec<AstNode>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    flexary: Vec<usize>,
}

impl From<AstNode> for AstRepr {
    fn from(n: AstNode) -> Self {
        match n {
            AstNode::Leaf { name, lexeme } => AstRepr {
                name,
                lexeme: Some(lexeme),
                children: None,
                flexary: Vec::new(),
            },
            AstNode::Node {
                name,
                children,
                flexary_slots,
            } => AstRepr {
                name,
                lexeme: None,
                children: Some(children),
                flexary: flexary_slots.into_iter().collect(),
            },
        }
    }
}

impl TryFrom<AstRepr> for AstNode {
    type Error = String;

    fn try_from(r: AstRepr) -> Result<Self, String> {
        match (r.lexeme, r.children) {
            (Some(lexeme), None) => Ok(AstNode::Leaf { name: r.name, lexeme }),
            (None, children) => {
                let children = children.unwrap_or_default();
                if let Some(&bad) = r.flexary.iter().find(|&&i| i >= children.len()) {
                    return Err(format!("flexary slot {bad} out of range in `{}`", r.name));
                }
                Ok(AstNode::Node {
                    name: r.name,
                    children,
                    flexary_slots: r.flexary.into_iter().collect(),
                })
            }
            (Some(_), Some(_)) => Err(format!("`{}` has both a lexeme and children", r.name)),
        }
    }
}

/// What a nonterminal's subtree becomes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActionKind {
    /// The single surviving child replaces the node.
    PassThrough,
    /// A named node. `keep` lists right-hand-side positions; without it every
    /// non-literal child is kept.
    Node {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rename: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        keep: Option<Vec<usize>>,
    },
    /// Members of a right-recursive list, collected into one list node.
    FlattenList,
    /// The covered source text as one leaf named after the nonterminal.
    LeafFromToken,
    /// Nothing at all.
    DropLiterals,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AstError {
    #[error("action for `{nonterminal}` keeps position {position}, but production {production} has {len} symbols")]
    ActionMismatch {
        nonterminal: String,
        production: usize,
        position: usize,
        len: usize,
    },
    #[error("`{0}` produced no syntax tree")]
    Empty(String),
    #[error("unknown nonterminal `{0}` in action table")]
    UnknownNonterminal(String),
    #[error("invalid action table: {0}")]
    Json(String),
}

/// Per-nonterminal actions, plus the literal terminals of the grammar.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionTable {
    actions: IndexMap<String, ActionKind>,
    literals: BTreeSet<String>,
}

impl ActionTable {
    pub fn get(&self, nonterminal: &str) -> Option<&ActionKind> {
        self.actions.get(nonterminal)
    }

    pub fn set(&mut self, nonterminal: impl Into<String>, action: ActionKind) {
        self.actions.insert(nonterminal.into(), action);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ActionKind)> {
        self.actions.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Applies overrides given as a JSON object `{nonterminal: action}`.
    pub fn overlay_json(&mut self, json: &str) -> Result<(), AstError> {
        let overrides: IndexMap<String, ActionKind> =
            serde_json::from_str(json).map_err(|e| AstError::Json(e.to_string()))?;
        for (nt, action) in overrides {
            if !self.actions.contains_key(&nt) {
                return Err(AstError::UnknownNonterminal(nt));
            }
            self.actions.insert(nt, action);
        }
        Ok(())
    }

    /// Actions as a JSON object, in grammar order.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.actions).expect("actions serialize")
    }
}

/// Actions for every nonterminal, following the default rules.
pub fn default_actions(grammar: &Grammar) -> ActionTable {
    let literals: BTreeSet<String> = grammar
        .terminals
        .keys()
        .filter(|id| grammar.is_literal_terminal(id))
        .cloned()
        .collect();
    let is_kept = |s: &Symbol| match s {
        Symbol::Terminal(t) => !literals.contains(t),
        Symbol::NonTerminal(_) => true,
    };
    let mut actions = IndexMap::new();
    for nt in grammar.nonterminals() {
        let prods: Vec<_> = grammar.productions_for(nt).collect();
        let action = if is_list_rule(grammar, nt) {
            ActionKind::FlattenList
        } else if prods.iter().all(|p| p.rhs.iter().filter(|s| is_kept(s)).count() == 1) {
            ActionKind::PassThrough
        } else {
            ActionKind::Node { rename: None, keep: None }
        };
        actions.insert(nt.to_string(), action);
    }
    ActionTable { actions, literals }
}

/// `L -> x L | x`: each production either ends in `L` after a prefix free of
/// `L`, or does not mention `L`; both kinds occur; nothing else uses `L`
/// except as the first symbol of a rule.
fn is_list_rule(grammar: &Grammar, nt: &str) -> bool {
    let me = Symbol::NonTerminal(nt.to_string());
    let mut recursive = 0;
    let mut base = 0;
    for p in grammar.productions_for(nt) {
        match p.rhs.split_last() {
            Some((last, prefix)) if *last == me && !prefix.is_empty() && !prefix.contains(&me) => recursive += 1,
            _ if !p.rhs.contains(&me) && !p.rhs.is_empty() => base += 1,
            _ => return false,
        }
    }
    recursive > 0 && base > 0
}

enum Built {
    Nothing,
    One(AstNode),
    List { name: String, items: Vec<AstNode> },
}

/// Applies `actions` bottom-up to a parse tree.
pub fn build_ast(tree: &ParseTree, grammar: &Grammar, actions: &ActionTable) -> Result<AstNode, AstError> {
    match build(tree, grammar, actions)? {
        Built::One(n) => Ok(n),
        Built::List { name, items } => Ok(AstNode::node(name, items)),
        Built::Nothing => Err(AstError::Empty(match tree {
            ParseTree::Leaf(t) => t.terminal.clone(),
            ParseTree::Node { nonterminal, .. } => nonterminal.clone(),
        })),
    }
}

fn source_text(tree: &ParseTree) -> String {
    let mut out = String::new();
    let mut last_end = None;
    for tok in tree.frontier() {
        if last_end.is_some_and(|e| e < tok.span.start) {
            out.push(' ');
        }
        out.push_str(&tok.lexeme);
        last_end = Some(tok.span.end);
    }
    out
}

fn into_child(b: Built, children: &mut Vec<AstNode>, slots: &mut BTreeSet<usize>) {
    match b {
        Built::Nothing => {}
        Built::One(n) => children.push(n),
        Built::List { name, items } => {
            slots.insert(children.len());
            children.push(AstNode::node(name, items));
        }
    }
}

fn build(tree: &ParseTree, grammar: &Grammar, actions: &ActionTable) -> Result<Built, AstError> {
    let (production, nonterminal, children) = match tree {
        ParseTree::Leaf(tok) => {
            return Ok(if actions.literals.contains(&tok.terminal) {
                Built::Nothing
            } else {
                Built::One(AstNode::leaf(&tok.terminal, &tok.lexeme))
            });
        }
        ParseTree::Node {
            production,
            nonterminal,
            children,
        } => (*production, nonterminal, children),
    };
    let action = actions.get(nonterminal).cloned().unwrap_or(ActionKind::Node { rename: None, keep: None });
    match action {
        ActionKind::DropLiterals => Ok(Built::Nothing),
        ActionKind::LeafFromToken => Ok(Built::One(AstNode::leaf(nonterminal, source_text(tree)))),
        ActionKind::FlattenList => {
            let mut items = Vec::new();
            for c in children {
                match build(c, grammar, actions)? {
                    Built::Nothing => {}
                    Built::One(n) => items.push(n),
                    Built::List { items: more, .. } => items.extend(more),
                }
            }
            Ok(Built::List {
                name: nonterminal.clone(),
                items,
            })
        }
        ActionKind::PassThrough => {
            let mut built: Vec<Built> = Vec::new();
            for c in children {
                match build(c, grammar, actions)? {
                    Built::Nothing => {}
                    b => built.push(b),
                }
            }
            if built.len() <= 1 {
                return Ok(built.pop().unwrap_or(Built::Nothing));
            }
            let mut kids = Vec::new();
            let mut slots = BTreeSet::new();
            for b in built {
                into_child(b, &mut kids, &mut slots);
            }
            Ok(Built::One(AstNode::Node {
                name: nonterminal.clone(),
                children: kids,
                flexary_slots: slots,
            }))
        }
        ActionKind::Node { rename, keep } => {
            let positions: Vec<usize> = match keep {
                Some(keep) => {
                    if let Some(&bad) = keep.iter().find(|&&p| p >= children.len()) {
                        return Err(AstError::ActionMismatch {
                            nonterminal: nonterminal.clone(),
                            production: grammar.productions.get(production).map_or(production, |p| p.index),
                            position: bad,
                            len: children.len(),
                        });
                    }
                    keep
                }
                None => (0..children.len()).collect(),
            };
            let mut kids = Vec::new();
            let mut slots = BTreeSet::new();
            for p in positions {
                into_child(build(&children[p], grammar, actions)?, &mut kids, &mut slots);
            }
            Ok(Built::One(AstNode::Node {
                name: rename.unwrap_or_else(|| nonterminal.clone()),
                children: kids,
                flexary_slots: slots,
            }))
        }
    }
}
