//! Earley recognizer plus canonical tree extraction.
//!
//! Recognition uses the standard predict/scan/complete chart with the
//! Aycock-Horspool nullable shortcut. Trees are then read off the set of
//! completed `(nonterminal, start, end)` spans. Parses are ordered by total
//! node count, then by production id at the leftmost (pre-order) differing
//! node; leaves order before internal nodes.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use super::grammar::{Grammar, Symbol};
use super::token::Token;

const INF: usize = usize::MAX / 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum CSym {
    Nt(usize),
    T(usize),
}

#[derive(Debug)]
pub(crate) struct Compiled {
    nt_names: Vec<String>,
    terminals: Vec<Symbol>,
    lhs: Vec<usize>,
    rhs: Vec<Vec<CSym>>,
    by_lhs: Vec<Vec<usize>>,
    nullable: Vec<bool>,
    start: usize,
}

impl Compiled {
    pub(crate) fn new(g: &Grammar) -> Self {
        let mut nt_index: HashMap<&str, usize> = HashMap::new();
        let mut nt_names = Vec::new();
        for p in g.productions() {
            if !nt_index.contains_key(p.lhs.as_str()) {
                nt_index.insert(&p.lhs, nt_names.len());
                nt_names.push(p.lhs.clone());
            }
        }
        let mut term_index: HashMap<Symbol, usize> = HashMap::new();
        let mut terminals = Vec::new();
        let mut lhs = Vec::new();
        let mut rhs = Vec::new();
        let mut by_lhs = vec![Vec::new(); nt_names.len()];
        for p in g.productions() {
            let l = nt_index[p.lhs.as_str()];
            lhs.push(l);
            by_lhs[l].push(p.id);
            rhs.push(
                p.rhs
                    .iter()
                    .map(|s| match s {
                        Symbol::Nonterminal(n) => CSym::Nt(nt_index[n.as_str()]),
                        t => {
                            let next = terminals.len();
                            let id = *term_index.entry(t.clone()).or_insert(next);
                            if id == next {
                                terminals.push(t.clone());
                            }
                            CSym::T(id)
                        }
                    })
                    .collect(),
            );
        }
        let nullable = nt_names.iter().map(|n| g.is_nullable(n)).collect();
        let start = nt_index[g.start_symbol()];
        Compiled {
            nt_names,
            terminals,
            lhs,
            rhs,
            by_lhs,
            nullable,
            start,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Item {
    prod: usize,
    dot: usize,
    origin: usize,
}

/// Result of running the recognizer over a token sequence.
pub(crate) struct Chart<'g> {
    c: &'g Compiled,
    n: usize,
    /// `matches[i][t]`: token i is accepted by terminal t.
    matches: Vec<Vec<bool>>,
    sets: Vec<Vec<Item>>,
    completed: HashSet<(usize, usize, usize)>,
}

pub(crate) struct Failure {
    pub position: usize,
    pub expected: Vec<String>,
}

impl<'g> Chart<'g> {
    pub(crate) fn build(g: &Grammar, c: &'g Compiled, tokens: &[Token]) -> Self {
        let n = tokens.len();
        let matches = tokens
            .iter()
            .map(|tok| c.terminals.iter().map(|t| g.matches(t, &tok.text)).collect())
            .collect();
        let mut chart = Chart {
            c,
            n,
            matches,
            sets: vec![Vec::new(); n + 1],
            completed: HashSet::new(),
        };
        let mut seen: Vec<HashSet<Item>> = vec![HashSet::new(); n + 1];
        for &p in &c.by_lhs[c.start] {
            chart.add(&mut seen, 0, Item { prod: p, dot: 0, origin: 0 });
        }
        for i in 0..=n {
            let mut k = 0;
            while k < chart.sets[i].len() {
                let item = chart.sets[i][k];
                k += 1;
                match c.rhs[item.prod].get(item.dot).copied() {
                    Some(CSym::Nt(b)) => {
                        for &p in &c.by_lhs[b] {
                            chart.add(&mut seen, i, Item { prod: p, dot: 0, origin: i });
                        }
                        if c.nullable[b] {
                            chart.add(&mut seen, i, Item { dot: item.dot + 1, ..item });
                        }
                    }
                    Some(CSym::T(t)) => {
                        if i < n && chart.matches[i][t] {
                            chart.add(&mut seen, i + 1, Item { dot: item.dot + 1, ..item });
                        }
                    }
                    None => {
                        let a = c.lhs[item.prod];
                        chart.completed.insert((a, item.origin, i));
                        let mut j = 0;
                        while j < chart.sets[item.origin].len() {
                            let waiting = chart.sets[item.origin][j];
                            j += 1;
                            if c.rhs[waiting.prod].get(waiting.dot) == Some(&CSym::Nt(a)) {
                                chart.add(&mut seen, i, Item { dot: waiting.dot + 1, ..waiting });
                            }
                        }
                    }
                }
            }
        }
        chart
    }

    fn add(&mut self, seen: &mut [HashSet<Item>], set: usize, item: Item) {
        if seen[set].insert(item) {
            self.sets[set].push(item);
        }
    }

    pub(crate) fn accepted(&self) -> bool {
        self.completed.contains(&(self.c.start, 0, self.n))
    }

    pub(crate) fn failure(&self) -> Failure {
        let position = (0..=self.n).rev().find(|&i| !self.sets[i].is_empty()).unwrap_or(0);
        let mut expected: Vec<String> = self.sets[position]
            .iter()
            .filter_map(|item| match self.c.rhs[item.prod].get(item.dot) {
                Some(CSym::T(t)) => Some(self.c.terminals[*t].name()),
                _ => None,
            })
            .collect();
        expected.sort();
        expected.dedup();
        Failure { position, expected }
    }
}

/// Parse-tree node over token positions.
#[derive(Debug)]
pub(crate) struct Node {
    pub prod: Option<usize>,
    pub term: Option<usize>,
    pub start: usize,
    pub end: usize,
    pub children: Vec<Rc<Node>>,
}

impl Node {
    pub(crate) fn symbol_name(&self, c: &Compiled) -> String {
        match (self.prod, self.term) {
            (Some(p), _) => c.nt_names[c.lhs[p]].clone(),
            (None, Some(t)) => c.terminals[t].name(),
            (None, None) => unreachable!("node without production or terminal"),
        }
    }
}

fn cmp_nodes(a: &Node, b: &Node) -> Ordering {
    a.prod.cmp(&b.prod).then_with(|| cmp_seq(&a.children, &b.children))
}

fn cmp_seq(a: &[Rc<Node>], b: &[Rc<Node>]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match cmp_nodes(x, y) {
            Ordering::Equal => {}
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

type SeqKey = (usize, usize, usize, usize, usize);
/// (symbol, start, end, size)
type SymKey = (CSym, usize, usize, usize);
type Children = Rc<Vec<Rc<Node>>>;

/// Tree extraction over an accepting chart.
pub(crate) struct Forest<'c, 'g> {
    chart: &'c Chart<'g>,
    min_size: HashMap<(usize, usize, usize), usize>,
    best_memo: HashMap<SymKey, Option<Rc<Node>>>,
    best_seq_memo: HashMap<SeqKey, Option<Children>>,
    all_memo: HashMap<SymKey, Children>,
    all_seq_memo: HashMap<SeqKey, Rc<Vec<Vec<Rc<Node>>>>>,
}

enum Visit {
    Active,
    Done(usize),
}

impl<'c, 'g> Forest<'c, 'g> {
    pub(crate) fn new(chart: &'c Chart<'g>) -> Self {
        let mut forest = Forest {
            chart,
            min_size: HashMap::new(),
            best_memo: HashMap::new(),
            best_seq_memo: HashMap::new(),
            all_memo: HashMap::new(),
            all_seq_memo: HashMap::new(),
        };
        forest.compute_min_sizes();
        forest
    }

    fn c(&self) -> &'g Compiled {
        self.chart.c
    }

    fn compute_min_sizes(&mut self) {
        let mut nodes: Vec<(usize, usize, usize)> = self.chart.completed.iter().copied().collect();
        nodes.sort_by_key(|&(a, i, j)| (j - i, i, a));
        loop {
            let mut changed = false;
            for &(a, i, j) in &nodes {
                let best = self.c().by_lhs[a]
                    .iter()
                    .map(|&p| self.seq_min(p, i, j).saturating_add(1))
                    .min()
                    .unwrap_or(INF)
                    .min(INF);
                if best < self.node_min(a, i, j) {
                    self.min_size.insert((a, i, j), best);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn node_min(&self, a: usize, i: usize, j: usize) -> usize {
        self.min_size.get(&(a, i, j)).copied().unwrap_or(INF)
    }

    fn sym_min(&self, s: CSym, i: usize, j: usize) -> usize {
        match s {
            CSym::T(t) => {
                if j == i + 1 && self.chart.matches[i][t] {
                    1
                } else {
                    INF
                }
            }
            CSym::Nt(a) => self.node_min(a, i, j),
        }
    }

    /// Minimum total size of children for production `p` spanning `i..j`.
    fn seq_min(&self, p: usize, i: usize, j: usize) -> usize {
        self.seq_table(p, i, j)[0][i]
    }

    /// `table[k][m]`: minimum size deriving `rhs[k..]` over `m..j`.
    fn seq_table(&self, p: usize, i: usize, j: usize) -> Vec<Vec<usize>> {
        let rhs = &self.c().rhs[p];
        let mut table = vec![vec![INF; j + 1]; rhs.len() + 1];
        table[rhs.len()][j] = 0;
        for k in (0..rhs.len()).rev() {
            for m in i..=j {
                let mut best = INF;
                for (m2, &rest) in table[k + 1].iter().enumerate().skip(m) {
                    if rest >= INF {
                        continue;
                    }
                    let here = self.sym_min(rhs[k], m, m2);
                    if here < INF {
                        best = best.min(here + rest);
                    }
                }
                table[k][m] = best;
            }
        }
        table
    }

    pub(crate) fn root_min_size(&self) -> usize {
        let c = self.c();
        self.node_min(c.start, 0, self.chart.n)
    }

    /// Largest tree size for the root, or `None` when the parse set is infinite.
    pub(crate) fn root_max_size(&self) -> Option<usize> {
        let c = self.c();
        let mut state = HashMap::new();
        self.max_size(c.start, 0, self.chart.n, &mut state)
    }

    fn max_size(
        &self,
        a: usize,
        i: usize,
        j: usize,
        state: &mut HashMap<(usize, usize, usize), Visit>,
    ) -> Option<usize> {
        match state.get(&(a, i, j)) {
            Some(Visit::Active) => return None,
            Some(Visit::Done(v)) => return Some(*v),
            None => {}
        }
        state.insert((a, i, j), Visit::Active);
        let mut best = 0usize;
        for &p in &self.c().by_lhs[a] {
            let rhs = &self.c().rhs[p];
            let bwd = self.seq_table(p, i, j);
            if bwd[0][i] >= INF {
                continue;
            }
            // fwd[k]: positions m reachable after deriving rhs[..k] from i.
            let mut fwd = vec![vec![false; j + 1]; rhs.len() + 1];
            fwd[0][i] = true;
            // max[k][m]: largest size deriving rhs[..k] over i..m.
            let mut maxes = vec![vec![0usize; j + 1]; rhs.len() + 1];
            for k in 0..rhs.len() {
                for m in i..=j {
                    if !fwd[k][m] {
                        continue;
                    }
                    for m2 in m..=j {
                        if self.sym_min(rhs[k], m, m2) >= INF || bwd[k + 1][m2] >= INF {
                            continue;
                        }
                        let child = match rhs[k] {
                            CSym::T(_) => 1,
                            CSym::Nt(b) => self.max_size(b, m, m2, state)?,
                        };
                        let total = maxes[k][m] + child;
                        if !fwd[k + 1][m2] || maxes[k + 1][m2] < total {
                            maxes[k + 1][m2] = total;
                        }
                        fwd[k + 1][m2] = true;
                    }
                }
            }
            if fwd[rhs.len()][j] {
                best = best.max(maxes[rhs.len()][j] + 1);
            }
        }
        state.insert((a, i, j), Visit::Done(best));
        Some(best)
    }

    fn leaf(&self, t: usize, i: usize) -> Rc<Node> {
        Rc::new(Node {
            prod: None,
            term: Some(t),
            start: i,
            end: i + 1,
            children: Vec::new(),
        })
    }

    /// Lexicographically smallest tree of exactly `size` nodes for `s` over `i..j`.
    pub(crate) fn best(&mut self, s: CSym, i: usize, j: usize, size: usize) -> Option<Rc<Node>> {
        if let CSym::T(t) = s {
            return (size == 1 && j == i + 1 && self.chart.matches[i][t]).then(|| self.leaf(t, i));
        }
        let CSym::Nt(a) = s else { unreachable!() };
        if size < self.node_min(a, i, j) {
            return None;
        }
        if let Some(hit) = self.best_memo.get(&(s, i, j, size)) {
            return hit.clone();
        }
        let mut result = None;
        for p in self.c().by_lhs[a].clone() {
            if let Some(children) = self.best_seq(p, 0, i, j, size - 1) {
                result = Some(Rc::new(Node {
                    prod: Some(p),
                    term: None,
                    start: i,
                    end: j,
                    children: children.as_ref().clone(),
                }));
                break;
            }
        }
        self.best_memo.insert((s, i, j, size), result.clone());
        result
    }

    fn best_seq(
        &mut self,
        p: usize,
        k: usize,
        i: usize,
        j: usize,
        size: usize,
    ) -> Option<Children> {
        let len = self.c().rhs[p].len();
        if k == len {
            return (i == j && size == 0).then(|| Rc::new(Vec::new()));
        }
        let key = (p, k, i, j, size);
        if let Some(hit) = self.best_seq_memo.get(&key) {
            return hit.clone();
        }
        let sym = self.c().rhs[p][k];
        let mut best: Option<(Rc<Node>, Children)> = None;
        for m in i..=j {
            let lo = self.sym_min(sym, i, m);
            if lo >= INF || lo > size {
                continue;
            }
            for c in lo..=size {
                let Some(rest) = self.best_seq(p, k + 1, m, j, size - c) else {
                    continue;
                };
                let Some(first) = self.best(sym, i, m, c) else {
                    continue;
                };
                let better = match &best {
                    None => true,
                    Some((cur, _)) => cmp_nodes(&first, cur) == Ordering::Less,
                };
                if better {
                    best = Some((first, rest));
                }
            }
        }
        let result = best.map(|(first, rest)| {
            let mut v = Vec::with_capacity(rest.len() + 1);
            v.push(first);
            v.extend(rest.iter().cloned());
            Rc::new(v)
        });
        self.best_seq_memo.insert(key, result.clone());
        result
    }

    /// All trees of exactly `size` nodes for `s` over `i..j`, in canonical order.
    pub(crate) fn all(&mut self, s: CSym, i: usize, j: usize, size: usize) -> Children {
        if let CSym::T(t) = s {
            let v = if size == 1 && j == i + 1 && self.chart.matches[i][t] {
                vec![self.leaf(t, i)]
            } else {
                Vec::new()
            };
            return Rc::new(v);
        }
        let CSym::Nt(a) = s else { unreachable!() };
        if size < self.node_min(a, i, j) {
            return Rc::new(Vec::new());
        }
        if let Some(hit) = self.all_memo.get(&(s, i, j, size)) {
            return hit.clone();
        }
        let mut out = Vec::new();
        for p in self.c().by_lhs[a].clone() {
            let seqs = self.all_seq(p, 0, i, j, size - 1);
            for children in seqs.iter() {
                out.push(Rc::new(Node {
                    prod: Some(p),
                    term: None,
                    start: i,
                    end: j,
                    children: children.clone(),
                }));
            }
        }
        let out = Rc::new(out);
        self.all_memo.insert((s, i, j, size), out.clone());
        out
    }

    fn all_seq(
        &mut self,
        p: usize,
        k: usize,
        i: usize,
        j: usize,
        size: usize,
    ) -> Rc<Vec<Vec<Rc<Node>>>> {
        let len = self.c().rhs[p].len();
        if k == len {
            let v = if i == j && size == 0 { vec![Vec::new()] } else { Vec::new() };
            return Rc::new(v);
        }
        let key = (p, k, i, j, size);
        if let Some(hit) = self.all_seq_memo.get(&key) {
            return hit.clone();
        }
        let sym = self.c().rhs[p][k];
        let mut out: Vec<Vec<Rc<Node>>> = Vec::new();
        for m in i..=j {
            let lo = self.sym_min(sym, i, m);
            if lo >= INF || lo > size {
                continue;
            }
            for c in lo..=size {
                let rest = self.all_seq(p, k + 1, m, j, size - c);
                if rest.is_empty() {
                    continue;
                }
                let firsts = self.all(sym, i, m, c);
                for first in firsts.iter() {
                    for r in rest.iter() {
                        let mut v = Vec::with_capacity(r.len() + 1);
                        v.push(first.clone());
                        v.extend(r.iter().cloned());
                        out.push(v);
                    }
                }
            }
        }
        out.sort_by(|a, b| cmp_seq(a, b));
        let out = Rc::new(out);
        self.all_seq_memo.insert(key, out.clone());
        out
    }

    pub(crate) fn root(&self) -> CSym {
        CSym::Nt(self.c().start)
    }

    pub(crate) fn len(&self) -> usize {
        self.chart.n
    }
}
