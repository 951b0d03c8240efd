//! AST to semantic-macro source text.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::AstNode;

/// Leaves with this name are written out verbatim.
pub const RAW_LEAF: &str = "raw";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketStyle {
    /// `\dobrackets{...}`
    #[default]
    Macro,
    /// `(...)`
    PlainParens,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmitterConfig {
    pub flexary_separator: String,
    pub dobrackets_style: BracketStyle,
    pub macro_prefix: String,
}

impl Default for EmitterConfig {
    fn default() -> Self {
        EmitterConfig {
            flexary_separator: ",".into(),
            dobrackets_style: BracketStyle::Macro,
            macro_prefix: "\\".into(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EmitError {
    #[error("flexary argument {slot} of `{node}` has no members")]
    EmptyFlexary { node: String, slot: usize },
    #[error("`{0}` is not a valid macro name")]
    InvalidName(String),
    #[error("lexeme {0:?} has unbalanced braces")]
    UnbalancedLexeme(String),
    #[error("flexary separator must not be empty")]
    EmptySeparator,
}

fn is_macro_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphabetic())
}

fn balanced(s: &str) -> bool {
    let mut depth: i64 = 0;
    let mut escaped = false;
    for c in s.chars() {
        match c {
            _ if escaped => escaped = false,
            '\\' => escaped = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth < 0 {
                    return false;
                }
            }
            _ => {}
        }
    }
    depth == 0
}

pub fn emit(ast: &AstNode, config: &EmitterConfig) -> Result<String, EmitError> {
    if config.flexary_separator.is_empty() {
        return Err(EmitError::EmptySeparator);
    }
    let mut out = String::new();
    emit_into(ast, config, &mut out)?;
    Ok(out)
}

fn emit_into(ast: &AstNode, config: &EmitterConfig, out: &mut String) -> Result<(), EmitError> {
    match ast {
        AstNode::Leaf { name, lexeme } => {
            if !balanced(lexeme) {
                return Err(EmitError::UnbalancedLexeme(lexeme.clone()));
            }
            if name == RAW_LEAF {
                out.push_str(lexeme);
            } else {
                if !is_macro_name(name) {
                    return Err(EmitError::InvalidName(name.clone()));
                }
                out.push_str(&config.macro_prefix);
                out.push_str(name);
                out.push('{');
                out.push_str(lexeme);
                out.push('}');
            }
        }
        AstNode::Node {
            name,
            children,
            flexary_slots,
        } => {
            if name == "dobrackets" && config.dobrackets_style == BracketStyle::PlainParens {
                out.push('(');
                for c in children {
                    emit_into(c, config, out)?;
                }
                out.push(')');
                return Ok(());
            }
            if !is_macro_name(name) {
                return Err(EmitError::InvalidName(name.clone()));
            }
            out.push_str(&config.macro_prefix);
            out.push_str(name);
            for (i, child) in children.iter().enumerate() {
                out.push('{');
                if flexary_slots.contains(&i) {
                    let members = child.children();
                    if members.is_empty() {
                        return Err(EmitError::EmptyFlexary {
                            node: name.clone(),
                            slot: i,
                        });
                    }
                    for (j, m) in members.iter().enumerate() {
                        if j > 0 {
                            out.push_str(&config.flexary_separator);
                        }
                        emit_into(m, config, out)?;
                    }
                } else {
                    emit_into(child, config, out)?;
                }
                out.push('}');
            }
        }
    }
    Ok(())
}
