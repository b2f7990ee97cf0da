//! Loader for the line-oriented grammar file format.
//!
//! ```text
//! # word classes
//! MOVE_V = go | move | walk
//! DET = the | a
//!
//! start: command ;
//! command: MOVE_V "to" place @frame(Motion){Goal=3}
//!        | "stop" @frame(Stopping){Manner="now"}
//! place: DET NOUN | ;
//! ```
//!
//! A statement ends at `;` or at the end of its line, unless the line ends
//! with `|` or the next line starts with `|`. Quoted strings are literal
//! terminals, UPPERCASE names are word classes and lowercase names are
//! nonterminals. An empty alternative is an epsilon production.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

use super::earley::Compiled;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("undefined {kind} `{name}` referenced at line {line}")]
    UndefinedSymbol {
        kind: &'static str,
        name: String,
        line: usize,
    },
    #[error("word class `{name}` defined twice (line {line})")]
    DuplicateWordClass { name: String, line: usize },
    #[error("annotation on line {line} captures position {position} but the alternative has {len} symbol(s)")]
    CaptureOutOfRange {
        line: usize,
        position: usize,
        len: usize,
    },
    #[error("annotation on line {line} binds role `{role}` twice")]
    DuplicateRole { line: usize, role: String },
    #[error("grammar has no productions")]
    Empty,
}

/// A right-hand-side symbol.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Symbol {
    Nonterminal(String),
    /// Inline literal word, stored lowercased.
    Literal(String),
    WordClass(String),
}

impl Symbol {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, Symbol::Nonterminal(_))
    }

    /// Display name used in parse trees and diagnostics.
    pub fn name(&self) -> String {
        match self {
            Symbol::Nonterminal(n) | Symbol::WordClass(n) => n.clone(),
            Symbol::Literal(w) => format!("\"{w}\""),
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// What an annotation binding takes its value from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Capture {
    /// 1-based right-hand-side position; the subtree's covered text is the value.
    Position(usize),
    Literal(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameAnnotation {
    pub frame: String,
    pub bindings: Vec<(String, Capture)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Production {
    pub id: usize,
    pub lhs: String,
    pub rhs: Vec<Symbol>,
    pub annotation: Option<FrameAnnotation>,
}

/// A validated grammar. Immutable once loaded.
#[derive(Debug, Clone)]
pub struct Grammar {
    productions: Vec<Production>,
    start: String,
    lexicon: BTreeMap<String, BTreeSet<String>>,
    frame_names: BTreeSet<String>,
    by_lhs: HashMap<String, Vec<usize>>,
    nullable: BTreeSet<String>,
    compiled: OnceLock<Arc<Compiled>>,
}

impl Grammar {
    pub fn from_text(text: &str) -> Result<Self, GrammarError> {
        load_grammar(text)
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn production(&self, id: usize) -> &Production {
        &self.productions[id]
    }

    pub fn start_symbol(&self) -> &str {
        &self.start
    }

    pub fn lexicon(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.lexicon
    }

    pub fn frame_names(&self) -> &BTreeSet<String> {
        &self.frame_names
    }

    pub fn annotation(&self, production_id: usize) -> Option<&FrameAnnotation> {
        self.productions.get(production_id)?.annotation.as_ref()
    }

    /// Production ids for a nonterminal, in file order.
    pub fn alternatives(&self, lhs: &str) -> &[usize] {
        self.by_lhs.get(lhs).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_nullable(&self, nonterminal: &str) -> bool {
        self.nullable.contains(nonterminal)
    }

    /// Whether a terminal symbol accepts a normalized token text.
    pub fn matches(&self, symbol: &Symbol, word: &str) -> bool {
        match symbol {
            Symbol::Literal(w) => w == word,
            Symbol::WordClass(c) => self.lexicon.get(c).is_some_and(|ws| ws.contains(word)),
            Symbol::Nonterminal(_) => false,
        }
    }

    pub(crate) fn compiled(&self) -> Arc<Compiled> {
        self.compiled.get_or_init(|| Arc::new(Compiled::new(self))).clone()
    }

    /// Every word the grammar can scan: literals plus lexicon entries.
    pub fn alphabet(&self) -> BTreeSet<String> {
        let mut words: BTreeSet<String> = self.lexicon.values().flatten().cloned().collect();
        for p in &self.productions {
            for s in &p.rhs {
                if let Symbol::Literal(w) = s {
                    words.insert(w.clone());
                }
            }
        }
        words
    }
}

pub fn load_grammar(text: &str) -> Result<Grammar, GrammarError> {
    let tokens = lex(text)?;
    let mut parser = StatementParser { tokens, pos: 0 };
    let mut raw_productions = Vec::new();
    let mut lexicon: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();

    while let Some(stmt) = parser.statement()? {
        match stmt {
            Statement::WordClass { name, words, line } => {
                if lexicon.contains_key(&name) {
                    return Err(GrammarError::DuplicateWordClass { name, line });
                }
                lexicon.insert(name, words);
            }
            Statement::Rule { lhs, alternatives } => {
                for alt in alternatives {
                    raw_productions.push((lhs.clone(), alt));
                }
            }
        }
    }

    if raw_productions.is_empty() {
        return Err(GrammarError::Empty);
    }

    let mut by_lhs: HashMap<String, Vec<usize>> = HashMap::new();
    for (id, (lhs, _)) in raw_productions.iter().enumerate() {
        by_lhs.entry(lhs.clone()).or_default().push(id);
    }

    let mut productions = Vec::with_capacity(raw_productions.len());
    let mut frame_names = BTreeSet::new();
    for (id, (lhs, alt)) in raw_productions.into_iter().enumerate() {
        for (sym, line) in alt.symbols.iter().zip(&alt.symbol_lines) {
            match sym {
                Symbol::Nonterminal(n) if !by_lhs.contains_key(n) => {
                    return Err(GrammarError::UndefinedSymbol {
                        kind: "nonterminal",
                        name: n.clone(),
                        line: *line,
                    });
                }
                Symbol::WordClass(c) if !lexicon.contains_key(c) => {
                    return Err(GrammarError::UndefinedSymbol {
                        kind: "word class",
                        name: c.clone(),
                        line: *line,
                    });
                }
                _ => {}
            }
        }
        if let Some(ann) = &alt.annotation {
            let mut seen = BTreeSet::new();
            for (role, capture) in &ann.bindings {
                if !seen.insert(role.as_str()) {
                    return Err(GrammarError::DuplicateRole {
                        line: alt.line,
                        role: role.clone(),
                    });
                }
                if let Capture::Position(p) = capture {
                    if *p == 0 || *p > alt.symbols.len() {
                        return Err(GrammarError::CaptureOutOfRange {
                            line: alt.line,
                            position: *p,
                            len: alt.symbols.len(),
                        });
                    }
                }
            }
            frame_names.insert(ann.frame.clone());
        }
        productions.push(Production {
            id,
            lhs,
            rhs: alt.symbols,
            annotation: alt.annotation,
        });
    }

    let start = if by_lhs.contains_key("start") {
        "start".to_string()
    } else {
        productions[0].lhs.clone()
    };
    let nullable = nullable_set(&productions);

    Ok(Grammar {
        productions,
        start,
        lexicon,
        frame_names,
        by_lhs,
        nullable,
        compiled: OnceLock::new(),
    })
}

fn nullable_set(productions: &[Production]) -> BTreeSet<String> {
    let mut nullable = BTreeSet::new();
    loop {
        let mut changed = false;
        for p in productions {
            if nullable.contains(&p.lhs) {
                continue;
            }
            let all = p.rhs.iter().all(|s| match s {
                Symbol::Nonterminal(n) => nullable.contains(n),
                _ => false,
            });
            if all {
                nullable.insert(p.lhs.clone());
                changed = true;
            }
        }
        if !changed {
            return nullable;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Str(String),
    Int(usize),
    Colon,
    Equals,
    Pipe,
    Semi,
    At,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Newline,
}

#[derive(Debug, Clone)]
struct Lexeme {
    tok: Tok,
    line: usize,
    column: usize,
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

fn lex(text: &str) -> Result<Vec<Lexeme>, GrammarError> {
    let mut out = Vec::new();
    for (line_idx, line) in text.lines().enumerate() {
        let line_no = line_idx + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let column = i + 1;
            let simple = match c {
                ':' => Some(Tok::Colon),
                '=' => Some(Tok::Equals),
                '|' => Some(Tok::Pipe),
                ';' => Some(Tok::Semi),
                '@' => Some(Tok::At),
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                '{' => Some(Tok::LBrace),
                '}' => Some(Tok::RBrace),
                ',' => Some(Tok::Comma),
                _ => None,
            };
            if let Some(tok) = simple {
                out.push(Lexeme {
                    tok,
                    line: line_no,
                    column,
                });
                i += 1;
            } else if c == '#' {
                break;
            } else if c.is_whitespace() {
                i += 1;
            } else if c == '"' {
                let mut s = String::new();
                let mut j = i + 1;
                loop {
                    match chars.get(j) {
                        None => {
                            return Err(GrammarError::Syntax {
                                line: line_no,
                                column,
                                message: "unterminated string".into(),
                            })
                        }
                        Some('"') => break,
                        Some('\\') if j + 1 < chars.len() => {
                            s.push(chars[j + 1]);
                            j += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            j += 1;
                        }
                    }
                }
                out.push(Lexeme {
                    tok: Tok::Str(s),
                    line: line_no,
                    column,
                });
                i = j + 1;
            } else if c.is_ascii_digit() {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j < chars.len() && is_name_char(chars[j]) {
                    while j < chars.len() && is_name_char(chars[j]) {
                        j += 1;
                    }
                    out.push(Lexeme {
                        tok: Tok::Name(chars[i..j].iter().collect()),
                        line: line_no,
                        column,
                    });
                } else {
                    let digits: String = chars[i..j].iter().collect();
                    let n = digits.parse().map_err(|_| GrammarError::Syntax {
                        line: line_no,
                        column,
                        message: format!("number `{digits}` out of range"),
                    })?;
                    out.push(Lexeme {
                        tok: Tok::Int(n),
                        line: line_no,
                        column,
                    });
                }
                i = j;
            } else if is_name_char(c) {
                let mut j = i;
                while j < chars.len() && is_name_char(chars[j]) {
                    j += 1;
                }
                out.push(Lexeme {
                    tok: Tok::Name(chars[i..j].iter().collect()),
                    line: line_no,
                    column,
                });
                i = j;
            } else {
                return Err(GrammarError::Syntax {
                    line: line_no,
                    column,
                    message: format!("unexpected character `{c}`"),
                });
            }
        }
        out.push(Lexeme {
            tok: Tok::Newline,
            line: line_no,
            column: chars.len() + 1,
        });
    }
    Ok(out)
}

enum Statement {
    WordClass {
        name: String,
        words: BTreeSet<String>,
        line: usize,
    },
    Rule {
        lhs: String,
        alternatives: Vec<Alternative>,
    },
}

struct Alternative {
    symbols: Vec<Symbol>,
    symbol_lines: Vec<usize>,
    annotation: Option<FrameAnnotation>,
    line: usize,
}

enum NameKind {
    Class,
    Nonterminal,
}

fn name_kind(name: &str) -> Option<NameKind> {
    let first = name.chars().next()?;
    if first.is_lowercase() {
        Some(NameKind::Nonterminal)
    } else if name.chars().any(|c| c.is_uppercase()) && !name.chars().any(|c| c.is_lowercase()) {
        Some(NameKind::Class)
    } else {
        None
    }
}

struct StatementParser {
    tokens: Vec<Lexeme>,
    pos: usize,
}

impl StatementParser {
    fn peek(&self) -> Option<&Lexeme> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Lexeme> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn skip_newlines(&mut self) {
        while matches!(self.peek(), Some(Lexeme { tok: Tok::Newline, .. })) {
            self.pos += 1;
        }
    }

    /// At a newline: does the statement continue on a later line?
    fn continues_after_newline(&self) -> bool {
        let mut i = self.pos;
        while let Some(l) = self.tokens.get(i) {
            if l.tok != Tok::Newline {
                return l.tok == Tok::Pipe;
            }
            i += 1;
        }
        false
    }

    fn error(&self, lexeme: Option<&Lexeme>, message: impl Into<String>) -> GrammarError {
        let (line, column) = match lexeme.or_else(|| self.tokens.last()) {
            Some(l) => (l.line, l.column),
            None => (1, 1),
        };
        GrammarError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Lexeme, GrammarError> {
        match self.bump() {
            Some(l) if l.tok == want => Ok(l),
            other => Err(self.error(other.as_ref(), format!("expected {what}"))),
        }
    }

    fn statement(&mut self) -> Result<Option<Statement>, GrammarError> {
        self.skip_newlines();
        let Some(head) = self.bump() else {
            return Ok(None);
        };
        let Tok::Name(name) = head.tok.clone() else {
            return Err(self.error(Some(&head), "expected a rule or word-class name"));
        };
        match (name_kind(&name), self.bump()) {
            (Some(NameKind::Class), Some(Lexeme { tok: Tok::Equals, .. })) => {
                let words = self.word_list()?;
                Ok(Some(Statement::WordClass {
                    name,
                    words,
                    line: head.line,
                }))
            }
            (Some(NameKind::Nonterminal), Some(Lexeme { tok: Tok::Colon, .. })) => {
                let alternatives = self.alternatives()?;
                Ok(Some(Statement::Rule {
                    lhs: name,
                    alternatives,
                }))
            }
            (Some(NameKind::Class), other) => {
                Err(self.error(other.as_ref(), format!("expected `=` after word class `{name}`")))
            }
            (Some(NameKind::Nonterminal), other) => {
                Err(self.error(other.as_ref(), format!("expected `:` after rule name `{name}`")))
            }
            (None, _) => Err(self.error(
                Some(&head),
                format!("`{name}` is neither a lowercase rule name nor an UPPERCASE word class"),
            )),
        }
    }

    fn word_list(&mut self) -> Result<BTreeSet<String>, GrammarError> {
        let mut words = BTreeSet::new();
        self.skip_newlines();
        loop {
            match self.bump() {
                Some(Lexeme {
                    tok: Tok::Name(w) | Tok::Str(w),
                    ..
                }) => {
                    if w.is_empty() || w.chars().any(char::is_whitespace) {
                        return Err(self.error(
                            self.tokens.get(self.pos - 1),
                            format!("word `{w}` must be a single nonempty word"),
                        ));
                    }
                    words.insert(w.to_lowercase());
                }
                Some(Lexeme { tok: Tok::Int(n), .. }) => {
                    words.insert(n.to_string());
                }
                other => return Err(self.error(other.as_ref(), "expected a word")),
            }
            match self.peek().map(|l| &l.tok) {
                Some(Tok::Pipe) => {
                    self.pos += 1;
                    self.skip_newlines();
                }
                Some(Tok::Semi) => {
                    self.pos += 1;
                    return Ok(words);
                }
                Some(Tok::Newline) => {
                    if self.continues_after_newline() {
                        self.skip_newlines();
                    } else {
                        return Ok(words);
                    }
                }
                None => return Ok(words),
                Some(_) => {
                    let l = self.peek().cloned();
                    return Err(self.error(l.as_ref(), "expected `|`, `;` or end of line"));
                }
            }
        }
    }

    fn alternatives(&mut self) -> Result<Vec<Alternative>, GrammarError> {
        let mut alts = Vec::new();
        // the first alternative may start on the next line
        if matches!(self.peek().map(|l| &l.tok), Some(Tok::Newline)) && self.continues_after_newline() {
            self.skip_newlines();
            if matches!(self.peek().map(|l| &l.tok), Some(Tok::Pipe)) {
                self.pos += 1;
            }
        }
        let mut line = self.peek().map(|l| l.line).unwrap_or(1);
        let mut current = Alternative {
            symbols: Vec::new(),
            symbol_lines: Vec::new(),
            annotation: None,
            line,
        };
        loop {
            let Some(lexeme) = self.peek().cloned() else {
                alts.push(current);
                return Ok(alts);
            };
            match lexeme.tok {
                Tok::Name(ref n) if current.annotation.is_none() => {
                    self.pos += 1;
                    let sym = match name_kind(n) {
                        Some(NameKind::Class) => Symbol::WordClass(n.clone()),
                        Some(NameKind::Nonterminal) => Symbol::Nonterminal(n.clone()),
                        None => {
                            return Err(self.error(
                                Some(&lexeme),
                                format!("`{n}` is neither a lowercase rule name nor an UPPERCASE word class"),
                            ))
                        }
                    };
                    current.symbols.push(sym);
                    current.symbol_lines.push(lexeme.line);
                }
                Tok::Str(ref s) if current.annotation.is_none() => {
                    self.pos += 1;
                    if s.is_empty() || s.chars().any(char::is_whitespace) {
                        return Err(self.error(
                            Some(&lexeme),
                            "literal terminals must be a single nonempty word",
                        ));
                    }
                    current.symbols.push(Symbol::Literal(s.to_lowercase()));
                    current.symbol_lines.push(lexeme.line);
                }
                Tok::At if current.annotation.is_none() => {
                    self.pos += 1;
                    current.annotation = Some(self.annotation()?);
                }
                Tok::Pipe => {
                    self.pos += 1;
                    self.skip_newlines();
                    line = self.peek().map(|l| l.line).unwrap_or(line);
                    alts.push(std::mem::replace(
                        &mut current,
                        Alternative {
                            symbols: Vec::new(),
                            symbol_lines: Vec::new(),
                            annotation: None,
                            line,
                        },
                    ));
                }
                Tok::Semi => {
                    self.pos += 1;
                    alts.push(current);
                    return Ok(alts);
                }
                Tok::Newline => {
                    if self.continues_after_newline() {
                        self.skip_newlines();
                    } else {
                        alts.push(current);
                        return Ok(alts);
                    }
                }
                _ => {
                    let msg = if current.annotation.is_some() {
                        "expected `|`, `;` or end of line after annotation"
                    } else {
                        "unexpected token in rule body"
                    };
                    return Err(self.error(Some(&lexeme), msg));
                }
            }
        }
    }

    fn annotation(&mut self) -> Result<FrameAnnotation, GrammarError> {
        match self.bump() {
            Some(Lexeme {
                tok: Tok::Name(ref n),
                ..
            }) if n == "frame" => {}
            other => return Err(self.error(other.as_ref(), "expected `frame` after `@`")),
        }
        self.expect(Tok::LParen, "`(`")?;
        let frame = match self.bump() {
            Some(Lexeme {
                tok: Tok::Name(n) | Tok::Str(n),
                ..
            }) if !n.is_empty() => n,
            other => return Err(self.error(other.as_ref(), "expected a frame name")),
        };
        self.expect(Tok::RParen, "`)`")?;
        let mut bindings = Vec::new();
        if matches!(self.peek().map(|l| &l.tok), Some(Tok::LBrace)) {
            self.pos += 1;
            self.skip_newlines();
            if matches!(self.peek().map(|l| &l.tok), Some(Tok::RBrace)) {
                self.pos += 1;
                return Ok(FrameAnnotation { frame, bindings });
            }
            loop {
                self.skip_newlines();
                let role = match self.bump() {
                    Some(Lexeme {
                        tok: Tok::Name(n), ..
                    }) => n,
                    other => return Err(self.error(other.as_ref(), "expected a role name")),
                };
                self.expect(Tok::Equals, "`=`")?;
                let capture = match self.bump() {
                    Some(Lexeme {
                        tok: Tok::Int(p), ..
                    }) => Capture::Position(p),
                    Some(Lexeme {
                        tok: Tok::Str(s), ..
                    }) => Capture::Literal(s),
                    other => {
                        return Err(self.error(
                            other.as_ref(),
                            "expected a 1-based position or a quoted literal",
                        ))
                    }
                };
                bindings.push((role, capture));
                self.skip_newlines();
                match self.bump() {
                    Some(Lexeme {
                        tok: Tok::Comma, ..
                    }) => continue,
                    Some(Lexeme {
                        tok: Tok::RBrace, ..
                    }) => break,
                    other => return Err(self.error(other.as_ref(), "expected `,` or `}`")),
                }
            }
        }
        Ok(FrameAnnotation { frame, bindings })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_grammar() {
        let g = load_grammar("start: \"go\" ;").unwrap();
        assert_eq!(g.productions().len(), 1);
        assert!(g.frame_names().is_empty());
        assert_eq!(g.start_symbol(), "start");
        assert_eq!(g.production(0).rhs, vec![Symbol::Literal("go".into())]);
    }

    #[test]
    fn annotation_binds_position() {
        let text = "MOVE_V = go | move | walk\n\
                    motion: MOVE_V location @frame(Motion){Goal=2}\n\
                    location: \"home\"\n";
        let g = load_grammar(text).unwrap();
        assert_eq!(g.frame_names().iter().collect::<Vec<_>>(), vec!["Motion"]);
        let ann = g.annotation(0).unwrap();
        assert_eq!(ann.frame, "Motion");
        assert_eq!(ann.bindings, vec![("Goal".to_string(), Capture::Position(2))]);
        assert_eq!(g.start_symbol(), "motion");
        assert_eq!(g.lexicon()["MOVE_V"].len(), 3);
    }

    #[test]
    fn undefined_nonterminal_is_named() {
        let err = load_grammar("start: \"take\" np ;").unwrap_err();
        assert_eq!(
            err,
            GrammarError::UndefinedSymbol {
                kind: "nonterminal",
                name: "np".into(),
                line: 1
            }
        );
    }

    #[test]
    fn undefined_word_class() {
        let err = load_grammar("start: DET ;").unwrap_err();
        assert!(matches!(err, GrammarError::UndefinedSymbol { kind: "word class", .. }));
    }

    #[test]
    fn duplicate_word_class() {
        let err = load_grammar("DET = the\nDET = a\nstart: DET\n").unwrap_err();
        assert_eq!(
            err,
            GrammarError::DuplicateWordClass {
                name: "DET".into(),
                line: 2
            }
        );
    }

    #[test]
    fn capture_out_of_range() {
        let err = load_grammar("start: \"go\" @frame(Motion){Goal=2}\n").unwrap_err();
        assert!(matches!(err, GrammarError::CaptureOutOfRange { position: 2, len: 1, .. }));
        let err = load_grammar("start: \"go\" @frame(Motion){Goal=0}\n").unwrap_err();
        assert!(matches!(err, GrammarError::CaptureOutOfRange { position: 0, .. }));
    }

    #[test]
    fn duplicate_role_in_annotation() {
        let err = load_grammar("start: \"go\" @frame(Motion){Goal=1, Goal=\"x\"}\n").unwrap_err();
        assert!(matches!(err, GrammarError::DuplicateRole { .. }));
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = load_grammar("start: \"go\" ;\nnp \"x\"\n").unwrap_err();
        match err {
            GrammarError::Syntax { line, column, .. } => {
                assert_eq!(line, 2);
                assert_eq!(column, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            load_grammar("start: \"go ;").unwrap_err(),
            GrammarError::Syntax { line: 1, column: 8, .. }
        ));
    }

    #[test]
    fn multiline_alternatives_and_epsilon() {
        let text = "# comment\n\
                    opt:\n  | \"a\"\n  | ;\n\
                    start: opt \"b\"\n";
        let g = load_grammar(text).unwrap();
        assert_eq!(g.start_symbol(), "start");
        assert_eq!(g.alternatives("opt").len(), 2);
        assert!(g.production(1).rhs.is_empty());
        assert!(g.is_nullable("opt"));
        assert!(!g.is_nullable("start"));
    }

    #[test]
    fn literal_binding_and_lowercasing() {
        let g = load_grammar("VERB = Go\nstart: VERB \"Now\" @frame(Motion){Manner=\"fast\", Goal=2}\n").unwrap();
        assert!(g.matches(&Symbol::WordClass("VERB".into()), "go"));
        assert!(g.matches(&Symbol::Literal("now".into()), "now"));
        assert_eq!(g.annotation(0).unwrap().bindings[0].1, Capture::Literal("fast".into()));
    }

    #[test]
    fn empty_grammar_rejected() {
        assert_eq!(load_grammar("# nothing\nDET = the\n").unwrap_err(), GrammarError::Empty);
    }

    #[test]
    fn mixed_case_name_rejected() {
        assert!(matches!(load_grammar("Start: \"go\"\n").unwrap_err(), GrammarError::Syntax { .. }));
    }
}
