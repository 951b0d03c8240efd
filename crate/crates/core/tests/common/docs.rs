//! Random LaTeX documents with known formula contents.

use proptest::prelude::*;

/// Prose that must never be mistaken for math.
const TEXT: &[&str] = &[
    "Lorem ipsum ",
    "naïve λ-terms ",
    "costs \\$5 ",
    "50\\% off ",
    "\\section{Intro}\n",
    "{\\bf bold} ",
    "line\\\\\n",
    "\n\n",
    "% a comment with $x$ and \\[ y\n",
    "see \\verb|$x$| there ",
    "\\verb*+\\[+ ",
    "\\begin{verbatim}\n$$ not math $\n\\end{verbatim}\n",
    "\\begin{itemize}\\item one\\end{itemize}\n",
    "Ωμέγα 🙂 ",
    "\t",
];

/// Math content pieces. None contains an unescaped `$` or the `\]` pair.
const MATH: &[&str] = &[
    "x", "y", " ", "\\lambda ", "λ", ".", "(", ")", "\\{", "\\}", "{a}", "\\$", "^2", "_i", "\\alpha", "\\%", "+", "=", "é",
];

#[derive(Clone, Copy, Debug)]
pub enum Delim {
    Dollar,
    DoubleDollar,
    Bracket,
    Env(&'static str),
}

impl Delim {
    fn open(&self) -> String {
        match self {
            Delim::Dollar => "$".into(),
            Delim::DoubleDollar => "$$".into(),
            Delim::Bracket => "\\[".into(),
            Delim::Env(name) => format!("\\begin{{{name}}}"),
        }
    }

    fn close(&self) -> String {
        match self {
            Delim::Dollar => "$".into(),
            Delim::DoubleDollar => "$$".into(),
            Delim::Bracket => "\\]".into(),
            Delim::Env(name) => format!("\\end{{{name}}}"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Piece {
    Text(String),
    Math(Delim, String),
}

#[derive(Clone, Debug)]
pub struct RandomDoc {
    pub text: String,
    /// Formula contents in document order.
    pub formulas: Vec<String>,
}

fn join(parts: Vec<&'static str>) -> String {
    parts.concat()
}

fn delim() -> impl Strategy<Value = Delim> {
    prop_oneof![
        4 => Just(Delim::Dollar),
        1 => Just(Delim::DoubleDollar),
        1 => Just(Delim::Bracket),
        1 => Just(Delim::Env("equation")),
        1 => Just(Delim::Env("align*")),
    ]
}

fn piece() -> impl Strategy<Value = Piece> {
    let text = prop::collection::vec(prop::sample::select(TEXT), 1..4).prop_map(|p| Piece::Text(join(p)));
    let math = (delim(), prop::collection::vec(prop::sample::select(MATH), 0..8), any::<bool>()).prop_map(|(d, parts, comment)| {
        let mut content = join(parts);
        match d {
            // `$$` would open display math.
            Delim::Dollar if content.is_empty() => content.push('z'),
            Delim::Env(_) if comment => content.push_str(" % note $ \\end{equation}\n"),
            _ => {}
        }
        Piece::Math(d, content)
    });
    prop_oneof![3 => text, 2 => math]
}

pub fn random_doc() -> impl Strategy<Value = RandomDoc> {
    prop::collection::vec(piece(), 0..12).prop_map(|pieces| {
        let mut text = String::new();
        let mut formulas = Vec::new();
        for p in pieces {
            match p {
                Piece::Text(t) => text.push_str(&t),
                Piece::Math(d, content) => {
                    text.push_str(&d.open());
                    text.push_str(&content);
                    text.push_str(&d.close());
                    formulas.push(content);
                }
            }
        }
        RandomDoc { text, formulas }
    })
}

/// Replacement texts, including ones that look like delimiters.
pub fn replacement() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("\\app{\\var{x}}{\\var{y}}".to_string()),
        Just(String::new()),
        Just("\\$ \\} ü".to_string()),
        "[a-zA-Z\\\\{}éλ ]{0,12}",
    ]
}
