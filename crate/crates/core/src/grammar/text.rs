//! The textual grammar format.
//!
//! ```text
//! // comment
//! start: lexp;
//! lexp: app | var | abs | parexp;
//! app: lexp lexp;
//! parexp: "(" lexp ")";
//! terminals
//! lam: "\lambda" | "λ";
//! var: /[a-z]/;
//! ```
//!
//! Header lines (`start:`, `grammar:`, `modules:`, `whitespace:`) are only
//! recognized before the first rule. Rules before `terminals` define
//! nonterminals, rules after it define terminals. `EMPTY` is epsilon and
//! `@recognizer(name)` binds a named recognizer.

use super::{is_identifier, Grammar, GrammarError, Symbol, TerminalDef, TerminalKind};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Regex(String),
    Recognizer(String),
    Colon,
    Semi,
    Pipe,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> GrammarError {
    GrammarError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.char_indices().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next().map(|(_, c)| c)
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, GrammarError> {
        let mut out = Vec::new();
        while let Some(c) = self.peek() {
            let (line, column) = (self.line, self.column);
            let tok = match c {
                c if c.is_whitespace() => {
                    self.bump();
                    continue;
                }
                '/' if self.peek2() == Some('/') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                    continue;
                }
                ':' => {
                    self.bump();
                    Tok::Colon
                }
                ';' => {
                    self.bump();
                    Tok::Semi
                }
                '|' => {
                    self.bump();
                    Tok::Pipe
                }
                '"' => {
                    self.bump();
                    Tok::Str(self.delimited('"', line, column)?)
                }
                '/' => {
                    self.bump();
                    Tok::Regex(self.delimited('/', line, column)?)
                }
                '@' => {
                    self.bump();
                    let word = self.word();
                    if word != "recognizer" || self.bump() != Some('(') {
                        return Err(syntax(line, column, "expected `@recognizer(name)`"));
                    }
                    let name = self.word();
                    if self.bump() != Some(')') || !is_identifier(&name) {
                        return Err(syntax(line, column, "expected `@recognizer(name)`"));
                    }
                    Tok::Recognizer(name)
                }
                c if c.is_ascii_alphabetic() || c == '_' => Tok::Ident(self.word()),
                other => return Err(syntax(line, column, format!("unexpected character `{other}`"))),
            };
            out.push(Spanned { tok, line, column });
        }
        Ok(out)
    }

    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    /// Reads up to the closing `delim`. `\delim` and `\\` are escapes; any
    /// other backslash is kept verbatim so `"\lambda"` means what it says.
    fn delimited(&mut self, delim: char, line: usize, column: usize) -> Result<String, GrammarError> {
        let mut s = String::new();
        loop {
            match self.bump() {
                None => return Err(syntax(line, column, format!("unterminated `{delim}`"))),
                Some(c) if c == delim => return Ok(s),
                Some('\\') => match self.peek() {
                    Some(n) if n == delim || n == '\\' => {
                        self.bump();
                        if delim == '/' && n == '\\' {
                            // regexes keep their own escapes
                            s.push('\\');
                        }
                        s.push(n);
                    }
                    _ => s.push('\\'),
                },
                Some(c) => s.push(c),
            }
        }
    }
}

enum RhsItem {
    Name(String, usize, usize),
    Literal(String),
}

/// Parses the textual format. The start symbol is the first rule's left-hand
/// side unless a `start:` header says otherwise.
pub fn parse_grammar_text(source: &str) -> Result<Grammar, GrammarError> {
    let toks = Lexer::new(source).tokens()?;
    let mut pos = 0;
    let mut grammar = Grammar::new("grammar");
    let mut start_override: Option<String> = None;
    let mut in_terminals = false;
    let mut seen_rule = false;
    let mut raw_rules: Vec<(String, Vec<RhsItem>)> = Vec::new();

    let end_pos = |toks: &[Spanned]| toks.last().map(|t| (t.line, t.column)).unwrap_or((1, 1));

    while pos < toks.len() {
        let Spanned { tok, line, column } = toks[pos].clone();
        let Tok::Ident(name) = tok else {
            return Err(syntax(line, column, "expected a rule name"));
        };
        pos += 1;
        if name == "terminals" && !matches!(toks.get(pos).map(|t| &t.tok), Some(Tok::Colon)) {
            if in_terminals {
                return Err(syntax(line, column, "duplicate `terminals` section"));
            }
            in_terminals = true;
            continue;
        }
        match toks.get(pos) {
            Some(Spanned { tok: Tok::Colon, .. }) => pos += 1,
            Some(t) => return Err(syntax(t.line, t.column, "expected `:`")),
            None => {
                let (l, c) = end_pos(&toks);
                return Err(syntax(l, c, "expected `:`"));
            }
        }
        // alternatives up to `;`
        let mut alts: Vec<Vec<Spanned>> = vec![Vec::new()];
        loop {
            let Some(t) = toks.get(pos) else {
                let (l, c) = end_pos(&toks);
                return Err(syntax(l, c, "missing `;`"));
            };
            pos += 1;
            match t.tok {
                Tok::Semi => break,
                Tok::Pipe => alts.push(Vec::new()),
                Tok::Colon => return Err(syntax(t.line, t.column, "unexpected `:` (missing `;`?)")),
                _ => alts.last_mut().unwrap().push(t.clone()),
            }
        }

        if !in_terminals && !seen_rule {
            if let Some(header) = parse_header(&name, &alts, line, column)? {
                match header {
                    Header::Start(s) => start_override = Some(s),
                    Header::Name(n) => grammar.name = n,
                    Header::Modules(m) => grammar.modules = m,
                    Header::Whitespace(skip) => grammar.skip_whitespace = skip,
                }
                continue;
            }
        }

        if !is_identifier(&name) {
            return Err(syntax(line, column, format!("`{name}` is not an identifier")));
        }

        if in_terminals {
            let kind = terminal_kind(&name, &alts, line, column)?;
            if grammar.terminals.contains_key(&name) {
                return Err(GrammarError::DuplicateTerminal(name));
            }
            grammar.terminals.insert(name, TerminalDef { kind, inline: false });
        } else {
            seen_rule = true;
            for alt in alts {
                let mut items = Vec::new();
                if alt.len() == 1 && alt[0].tok == Tok::Ident("EMPTY".into()) {
                    raw_rules.push((name.clone(), items));
                    continue;
                }
                if alt.is_empty() {
                    return Err(syntax(line, column, "empty alternative (write EMPTY for epsilon)"));
                }
                for t in alt {
                    match t.tok {
                        Tok::Ident(ref id) if id == "EMPTY" => {
                            return Err(syntax(t.line, t.column, "EMPTY must stand alone"))
                        }
                        Tok::Ident(id) => items.push(RhsItem::Name(id, t.line, t.column)),
                        Tok::Str(s) if !s.is_empty() => items.push(RhsItem::Literal(s)),
                        Tok::Str(_) => return Err(syntax(t.line, t.column, "empty literal")),
                        _ => {
                            return Err(syntax(
                                t.line,
                                t.column,
                                "regexes and recognizers belong in the terminals section",
                            ))
                        }
                    }
                }
                raw_rules.push((name.clone(), items));
            }
        }
    }

    if raw_rules.is_empty() {
        return Err(GrammarError::EmptyGrammar);
    }

    let rule_names: std::collections::BTreeSet<String> = raw_rules.iter().map(|(n, _)| n.clone()).collect();
    for id in grammar.terminals.keys() {
        if rule_names.contains(id) {
            return Err(GrammarError::NameConflict(id.clone()));
        }
    }
    // Inline literals are interned after all names are known so generated
    // ids never shadow a declared terminal.
    let declared = std::mem::take(&mut grammar.terminals);
    let mut inline = Grammar::new("");
    inline.terminals = declared.clone();
    for (lhs, items) in &raw_rules {
        let mut rhs = Vec::with_capacity(items.len());
        for item in items {
            match item {
                RhsItem::Literal(text) => {
                    let id = intern_avoiding(&mut inline, text, &rule_names);
                    rhs.push(Symbol::Terminal(id));
                }
                RhsItem::Name(id, l, c) => {
                    if rule_names.contains(id) {
                        rhs.push(Symbol::NonTerminal(id.clone()));
                    } else if declared.contains_key(id) {
                        rhs.push(Symbol::Terminal(id.clone()));
                    } else {
                        let _ = (l, c);
                        return Err(GrammarError::UndefinedNonterminal(id.clone()));
                    }
                }
            }
        }
        grammar.add_production(lhs.clone(), rhs);
    }
    // declared terminals first, then inline ones in order of appearance
    grammar.terminals = declared;
    for (id, def) in inline.terminals {
        if def.inline {
            grammar.terminals.insert(id, def);
        }
    }
    if let Some(start) = start_override {
        grammar.start = start;
    }
    grammar.check_structure()?;
    Ok(grammar)
}

fn intern_avoiding(g: &mut Grammar, text: &str, rules: &std::collections::BTreeSet<String>) -> String {
    if let Some((id, _)) = g.terminals.iter().find(|(_, d)| {
        d.inline && matches!(&d.kind, TerminalKind::Literal(a) if a.len() == 1 && a[0] == text)
    }) {
        return id.clone();
    }
    let mut n = g.terminals.values().filter(|d| d.inline).count();
    loop {
        let id = format!("_lit{n}");
        if !g.terminals.contains_key(&id) && !rules.contains(&id) {
            g.terminals.insert(
                id.clone(),
                TerminalDef {
                    kind: TerminalKind::Literal(vec![text.to_string()]),
                    inline: true,
                },
            );
            return id;
        }
        n += 1;
    }
}

enum Header {
    Start(String),
    Name(String),
    Modules(Vec<String>),
    Whitespace(bool),
}

fn parse_header(name: &str, alts: &[Vec<Spanned>], line: usize, column: usize) -> Result<Option<Header>, GrammarError> {
    let single = || -> Option<&Tok> {
        if alts.len() == 1 && alts[0].len() == 1 {
            Some(&alts[0][0].tok)
        } else {
            None
        }
    };
    Ok(match name {
        "start" => match single() {
            Some(Tok::Ident(s)) => Some(Header::Start(s.clone())),
            _ => return Err(syntax(line, column, "`start:` takes one nonterminal")),
        },
        "grammar" => match single() {
            Some(Tok::Ident(s)) | Some(Tok::Str(s)) => Some(Header::Name(s.clone())),
            _ => return Err(syntax(line, column, "`grammar:` takes one name")),
        },
        "whitespace" => match single() {
            Some(Tok::Ident(s)) if s == "skip" => Some(Header::Whitespace(true)),
            Some(Tok::Ident(s)) if s == "keep" => Some(Header::Whitespace(false)),
            _ => return Err(syntax(line, column, "`whitespace:` takes `skip` or `keep`")),
        },
        "modules" => {
            if alts.len() != 1 {
                return Err(syntax(line, column, "`modules:` takes quoted names"));
            }
            let mut mods = Vec::new();
            for t in &alts[0] {
                match &t.tok {
                    Tok::Str(s) => mods.push(s.clone()),
                    _ => return Err(syntax(t.line, t.column, "`modules:` takes quoted names")),
                }
            }
            Some(Header::Modules(mods))
        }
        _ => None,
    })
}

fn terminal_kind(name: &str, alts: &[Vec<Spanned>], line: usize, column: usize) -> Result<TerminalKind, GrammarError> {
    let mut literals = Vec::new();
    let mut other = None;
    for alt in alts {
        let [t] = alt.as_slice() else {
            return Err(syntax(line, column, format!("terminal `{name}` alternatives must be single items")));
        };
        match &t.tok {
            Tok::Str(s) if !s.is_empty() => literals.push(s.clone()),
            Tok::Str(_) => return Err(syntax(t.line, t.column, "empty literal")),
            Tok::Regex(r) => other = Some(TerminalKind::Regex(r.clone())),
            Tok::Recognizer(h) => other = Some(TerminalKind::Recognizer(h.clone())),
            _ => return Err(syntax(t.line, t.column, "expected a literal, regex or recognizer")),
        }
    }
    match other {
        Some(kind) if alts.len() == 1 => Ok(kind),
        Some(_) => Err(syntax(
            line,
            column,
            format!("terminal `{name}`: only literals may be combined with `|`"),
        )),
        None => Ok(TerminalKind::Literal(literals)),
    }
}

fn quote(s: &str, delim: char) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push(delim);
    let chars: Vec<char> = s.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if c == delim {
            out.push('\\');
        } else if c == '\\' && delim == '"' {
            // only double a backslash when leaving it alone would turn it
            // into an escape
            match chars.get(i + 1) {
                Some('"') | Some('\\') | None => out.push('\\'),
                _ => {}
            }
        }
        out.push(c);
    }
    out.push(delim);
    out
}

pub(super) fn to_text(g: &Grammar) -> String {
    let mut out = String::new();
    out.push_str(&format!("grammar: {};\n", quote(&g.name, '"')));
    if !g.modules.is_empty() {
        let mods: Vec<String> = g.modules.iter().map(|m| quote(m, '"')).collect();
        out.push_str(&format!("modules: {};\n", mods.join(" ")));
    }
    if !g.skip_whitespace {
        out.push_str("whitespace: keep;\n");
    }
    if g.productions.first().map(|p| p.lhs.as_str()) != Some(g.start.as_str()) {
        out.push_str(&format!("start: {};\n", g.start));
    }
    let render = |sym: &Symbol| match sym {
        Symbol::Terminal(id) => match g.terminals.get(id) {
            Some(TerminalDef {
                kind: TerminalKind::Literal(alts),
                inline: true,
            }) => quote(&alts[0], '"'),
            _ => id.clone(),
        },
        Symbol::NonTerminal(n) => n.clone(),
    };
    let mut i = 0;
    while i < g.productions.len() {
        let lhs = &g.productions[i].lhs;
        let mut alts = Vec::new();
        while i < g.productions.len() && &g.productions[i].lhs == lhs {
            let p = &g.productions[i];
            alts.push(if p.rhs.is_empty() {
                "EMPTY".to_string()
            } else {
                p.rhs.iter().map(render).collect::<Vec<_>>().join(" ")
            });
            i += 1;
        }
        out.push_str(&format!("{lhs}: {};\n", alts.join(" | ")));
    }
    let declared: Vec<_> = g.terminals.iter().filter(|(_, d)| !d.inline).collect();
    if !declared.is_empty() {
        out.push_str("terminals\n");
        for (id, def) in declared {
            let body = match &def.kind {
                TerminalKind::Literal(alts) => alts.iter().map(|a| quote(a, '"')).collect::<Vec<_>>().join(" | "),
                TerminalKind::Regex(r) => quote(r, '/'),
                TerminalKind::Recognizer(h) => format!("@recognizer({h})"),
            };
            out.push_str(&format!("{id}: {body};\n"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAMBDA: &str = include_str!("../../fixtures/lambda.grammar");

    #[test]
    fn lambda_fixture_structure() {
        let g = parse_grammar_text(LAMBDA).unwrap();
        assert_eq!(g.start, "lexp");
        assert_eq!(g.productions.len(), 9);
        assert_eq!(g.productions_for("lexp").count(), 4);
        assert_eq!(g.productions_for("varlist").count(), 2);
        assert_eq!(
            g.terminal_kind("lam"),
            Some(&TerminalKind::Literal(vec!["\\lambda".into(), "λ".into()]))
        );
        assert_eq!(g.terminal_kind("var"), Some(&TerminalKind::Regex("[a-z]".into())));
        assert_eq!(g.terminal_kind("dot"), Some(&TerminalKind::Literal(vec![".".into()])));
        let abs = g.productions_for("abs").next().unwrap();
        assert_eq!(abs.to_string(), "abs -> lam varlist dot lexp");
    }

    #[test]
    fn minimal_grammar() {
        let g = parse_grammar_text("s: \"a\";").unwrap();
        assert_eq!(g.productions.len(), 1);
        assert_eq!(g.start, "s");
    }

    #[test]
    fn undefined_rule() {
        assert_eq!(
            parse_grammar_text("x: y;"),
            Err(GrammarError::UndefinedNonterminal("y".into()))
        );
    }

    #[test]
    fn empty_source() {
        assert_eq!(parse_grammar_text("// nothing\n"), Err(GrammarError::EmptyGrammar));
    }

    #[test]
    fn duplicate_terminal() {
        let src = "s: a;\nterminals\na: \"x\";\na: \"y\";";
        assert_eq!(parse_grammar_text(src), Err(GrammarError::DuplicateTerminal("a".into())));
    }

    #[test]
    fn syntax_error_position() {
        match parse_grammar_text("s: \"a\"\nt: \"b\";") {
            Err(GrammarError::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 2)),
            other => panic!("{other:?}"),
        }
        match parse_grammar_text("s: \"a;") {
            Err(GrammarError::Syntax { line, column, .. }) => assert_eq!((line, column), (1, 4)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn start_header_overrides() {
        let g = parse_grammar_text("start: b;\na: \"x\";\nb: a a;").unwrap();
        assert_eq!(g.start, "b");
        let again = parse_grammar_text(&g.to_text()).unwrap();
        assert_eq!(again, g);
    }

    #[test]
    fn epsilon_and_recognizers() {
        let g = parse_grammar_text("s: v opt;\nopt: \"!\" | EMPTY;\nterminals\nv: @recognizer(lc_variable);").unwrap();
        assert!(g.productions_for("opt").any(|p| p.rhs.is_empty()));
        assert_eq!(g.terminal_kind("v"), Some(&TerminalKind::Recognizer("lc_variable".into())));
    }

    #[test]
    fn mixed_terminal_alternatives_rejected() {
        assert!(matches!(
            parse_grammar_text("s: t;\nterminals\nt: \"a\" | /b/;"),
            Err(GrammarError::Syntax { .. })
        ));
    }

    #[test]
    fn invalid_regex_rejected() {
        assert!(matches!(
            parse_grammar_text("s: t;\nterminals\nt: /[a-/;"),
            Err(GrammarError::InvalidRegex { .. })
        ));
    }

    #[test]
    fn quoting_round_trips_backslashes() {
        for text in ["\\lambda", "\\\\", "a\"b", "x\\", "\\\"", "/"] {
            let mut g = Grammar::new("q");
            let id = g.intern_literal(text);
            g.add_production("s", vec![Symbol::Terminal(id)]);
            let back = parse_grammar_text(&g.to_text()).unwrap();
            assert_eq!(back.terminals, g.terminals, "text {text:?}");
        }
    }

    #[test]
    fn alternatives_equal_separate_rules() {
        let a = parse_grammar_text("a: \"x\" | \"y\";").unwrap();
        let b = parse_grammar_text("a: \"x\";\na: \"y\";").unwrap();
        assert!(a.same_rules(&b));
    }

    #[test]
    fn fixture_round_trips() {
        let g = parse_grammar_text(LAMBDA).unwrap();
        let back = parse_grammar_text(&g.to_text()).unwrap();
        assert_eq!(back, g);
    }
}
