//! Grammar loading, tokenization and Earley parsing of robot commands.

mod earley;
mod grammar;
mod token;

use std::fmt::Write as _;
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use grammar::{load_grammar, Capture, FrameAnnotation, Grammar, GrammarError, Production, Symbol};
pub use token::{join_tokens, tokenize, Token};

use earley::{Chart, Compiled, Forest, Node};

/// Raised when the token sequence is not in the grammar's language.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}", describe_no_parse(*.position, .found.as_deref(), .expected))]
pub struct ParseError {
    /// Index of the first token the chart could not consume.
    pub position: usize,
    /// The token at `position`, or `None` at end of input.
    pub found: Option<String>,
    /// Terminals the parser could have accepted at `position`, sorted.
    pub expected: Vec<String>,
}

fn describe_no_parse(position: usize, found: Option<&str>, expected: &[String]) -> String {
    let mut s = match found {
        Some(w) => format!("no parse: unexpected \"{w}\" at position {position}"),
        None => format!("no parse: input ended at position {position}"),
    };
    if expected.is_empty() {
        s.push_str("; expected end of input");
    } else {
        let _ = write!(s, "; expected one of: {}", expected.join(", "));
    }
    s
}

/// A parse tree. Leaves are terminals and carry no production id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseTree {
    pub symbol: String,
    pub production_id: Option<usize>,
    pub children: Vec<ParseTree>,
    pub covered_text: String,
}

impl ParseTree {
    pub fn is_leaf(&self) -> bool {
        self.production_id.is_none()
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(ParseTree::node_count).sum::<usize>()
    }

    /// Indented one-node-per-line rendering.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out, 0);
        out
    }

    fn render_into(&self, out: &mut String, depth: usize) {
        let indent = "  ".repeat(depth);
        if self.is_leaf() {
            let _ = writeln!(out, "{indent}{} {:?}", self.symbol, self.covered_text);
        } else {
            let _ = writeln!(out, "{indent}{}", self.symbol);
            for c in &self.children {
                c.render_into(out, depth + 1);
            }
        }
    }
}

fn to_tree(node: &Node, c: &Compiled, tokens: &[Token]) -> ParseTree {
    let children: Vec<ParseTree> = node.children.iter().map(|n| to_tree(n, c, tokens)).collect();
    let covered_text = if node.prod.is_none() {
        tokens[node.start].text.clone()
    } else {
        join_tokens(&tokens[node.start..node.end])
    };
    ParseTree {
        symbol: node.symbol_name(c),
        production_id: node.prod,
        children,
        covered_text,
    }
}

/// Parses the full token sequence from the start symbol.
///
/// Ambiguous input yields the canonical parse: fewest nodes first, then the
/// lower production id at the leftmost differing node.
pub fn parse(grammar: &Grammar, tokens: &[Token]) -> Result<ParseTree, ParseError> {
    let compiled = grammar.compiled();
    let chart = Chart::build(grammar, &compiled, tokens);
    if !chart.accepted() {
        return Err(no_parse(&chart, tokens));
    }
    let mut forest = Forest::new(&chart);
    let size = forest.root_min_size();
    let root = forest.root();
    let n = forest.len();
    let node = forest
        .best(root, 0, n, size)
        .expect("accepted chart has a minimum-size parse");
    Ok(to_tree(&node, &compiled, tokens))
}

/// Returns whether the token sequence is in the grammar's language.
pub fn recognize(grammar: &Grammar, tokens: &[Token]) -> bool {
    let compiled = grammar.compiled();
    Chart::build(grammar, &compiled, tokens).accepted()
}

fn no_parse(chart: &Chart<'_>, tokens: &[Token]) -> ParseError {
    let f = chart.failure();
    ParseError {
        position: f.position,
        found: tokens.get(f.position).map(|t| t.text.clone()),
        expected: f.expected,
    }
}

/// Up to `limit` distinct parses in canonical order; empty when there is no parse.
///
/// Grammars with derivation cycles have infinitely many parses, so `limit`
/// is what bounds the work there.
pub fn enumerate_parses(grammar: &Grammar, tokens: &[Token], limit: usize) -> Vec<ParseTree> {
    assert!(limit >= 1, "limit must be positive");
    let compiled = grammar.compiled();
    let chart = Chart::build(grammar, &compiled, tokens);
    if !chart.accepted() {
        return Vec::new();
    }
    let mut forest = Forest::new(&chart);
    let min = forest.root_min_size();
    let max = forest.root_max_size();
    let root = forest.root();
    let n = forest.len();
    let mut out: Vec<Rc<Node>> = Vec::new();
    let mut size = min;
    while out.len() < limit && max.is_none_or(|m| size <= m) {
        let level = forest.all(root, 0, n, size);
        out.extend(level.iter().take(limit - out.len()).cloned());
        size += 1;
    }
    out.iter().map(|node| to_tree(node, &compiled, tokens)).collect()
}
