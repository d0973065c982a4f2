//! Candidate coupling graphs.
//!
//! A [`Dag`] stores, for each vertex, its sorted parent list. DOT is used as
//! the interchange format; vertex names come from the dataset header.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawDag")]
pub struct Dag {
    m: usize,
    parents: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
struct RawDag {
    m: usize,
    parents: Vec<Vec<usize>>,
}

impl TryFrom<RawDag> for Dag {
    type Error = Error;

    fn try_from(raw: RawDag) -> Result<Self> {
        if raw.parents.len() != raw.m {
            return Err(Error::InvalidGraph(format!(
                "{} parent lists for {} vertices",
                raw.parents.len(),
                raw.m
            )));
        }
        Dag::from_parents(raw.parents)
    }
}

impl Dag {
    pub fn empty(m: usize) -> Self {
        Self {
            m,
            parents: vec![Vec::new(); m],
        }
    }

    /// Builds a graph from per-vertex parent lists, rejecting cycles.
    pub fn from_parents(parents: Vec<Vec<usize>>) -> Result<Self> {
        let m = parents.len();
        let mut g = Self::empty(m);
        for (v, ps) in parents.into_iter().enumerate() {
            for p in ps {
                g.insert_edge_unchecked(p, v)?;
            }
        }
        if !is_acyclic(&g) {
            return Err(Error::InvalidGraph("graph contains a cycle".into()));
        }
        Ok(g)
    }

    pub fn from_edges(m: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut parents = vec![Vec::new(); m];
        for &(from, to) in edges {
            if to >= m {
                return Err(Error::InvalidGraph(format!("vertex {to} out of range")));
            }
            parents[to].push(from);
        }
        Self::from_parents(parents)
    }

    /// Parent bitmask per vertex. Only for `m <= 64`.
    pub(crate) fn from_masks(masks: &[u64]) -> Self {
        let parents = masks
            .iter()
            .map(|&mask| (0..masks.len()).filter(|&p| mask >> p & 1 == 1).collect())
            .collect();
        Self {
            m: masks.len(),
            parents,
        }
    }

    fn insert_edge_unchecked(&mut self, from: usize, to: usize) -> Result<()> {
        if from >= self.m || to >= self.m {
            return Err(Error::InvalidGraph(format!(
                "edge {from}->{to} out of range for {} vertices",
                self.m
            )));
        }
        if from == to {
            return Err(Error::InvalidGraph(format!("self-loop on vertex {from}")));
        }
        let ps = &mut self.parents[to];
        match ps.binary_search(&from) {
            Ok(_) => Err(Error::InvalidGraph(format!("duplicate edge {from}->{to}"))),
            Err(pos) => {
                ps.insert(pos, from);
                Ok(())
            }
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.m
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.parents[to].binary_search(&from).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// Edges as `(from, to)`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = self
            .parents
            .iter()
            .enumerate()
            .flat_map(|(to, ps)| ps.iter().map(move |&from| (from, to)))
            .collect();
        e.sort_unstable();
        e
    }

    /// Adds `from -> to` if it keeps the graph acyclic.
    pub fn add_edge(&mut self, from: usize, to: usize) -> Result<()> {
        if self.creates_cycle(from, to) {
            return Err(Error::InvalidGraph(format!("edge {from}->{to} creates a cycle")));
        }
        self.insert_edge_unchecked(from, to)
    }

    pub fn remove_edge(&mut self, from: usize, to: usize) -> bool {
        match self.parents[to].binary_search(&from) {
            Ok(pos) => {
                self.parents[to].remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    /// Whether adding `from -> to` would close a cycle, i.e. `to` reaches `from`.
    pub fn creates_cycle(&self, from: usize, to: usize) -> bool {
        if from == to {
            return true;
        }
        // walk parents backwards from `from`; reaching `to` means to ~> from
        let mut stack = vec![from];
        let mut seen = vec![false; self.m];
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            stack.extend_from_slice(&self.parents[v]);
        }
        false
    }

    /// True when every pair of vertices is joined by an edge.
    pub fn is_complete(&self) -> bool {
        self.edge_count() == self.m * self.m.saturating_sub(1) / 2
    }

    /// Kahn order, or `None` for a cyclic graph.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut children = vec![Vec::new(); self.m];
        for (v, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                children[p].push(v);
            }
        }
        let mut ready: Vec<usize> = (0..self.m).rev().filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(self.m);
        while let Some(v) = ready.pop() {
            order.push(v);
            for &c in &children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(c);
                }
            }
        }
        (order.len() == self.m).then_some(order)
    }

    pub fn to_dot(&self, names: &[String]) -> String {
        let mut out = String::from("digraph G {\n");
        for name in names.iter().take(self.m) {
            let _ = writeln!(out, "  {};", quote(name));
        }
        for (from, to) in self.edges() {
            let _ = writeln!(out, "  {} -> {};", quote(&names[from]), quote(&names[to]));
        }
        out.push_str("}\n");
        out
    }
}

/// True iff a topological order exists.
pub fn is_acyclic(graph: &Dag) -> bool {
    graph.parents.iter().enumerate().all(|(v, ps)| {
        let mut sorted = ps.clone();
        sorted.dedup();
        sorted.len() == ps.len() && !ps.contains(&v)
    }) && graph.topological_order().is_some()
}

fn quote(name: &str) -> String {
    let plain = !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !name.starts_with(|c: char| c.is_ascii_digit());
    if plain {
        name.to_string()
    } else {
        format!("\"{}\"", name.replace('\\', "\\\\").replace('"', "\\\""))
    }
}

/// A parsed DOT digraph: vertex names in order of first appearance and edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DotGraph {
    pub vertices: Vec<String>,
    pub edges: Vec<(String, String)>,
}

impl DotGraph {
    /// Maps the graph onto `names` (the dataset header order).
    pub fn to_dag(&self, names: &[String]) -> Result<Dag> {
        let index: HashMap<&str, usize> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let lookup = |v: &String| {
            index.get(v.as_str()).copied().ok_or_else(|| {
                Error::InvalidGraph(format!("graph vertex '{v}' is not a dataset column"))
            })
        };
        for v in &self.vertices {
            lookup(v)?;
        }
        let edges = self
            .edges
            .iter()
            .map(|(a, b)| Ok((lookup(a)?, lookup(b)?)))
            .collect::<Result<Vec<_>>>()?;
        Dag::from_edges(names.len(), &edges)
    }
}

/// Parses the subset of DOT used for graph interchange: a single `digraph`
/// with node statements, `->` edge chains, optional `[...]` attributes and
/// `//`, `#` or `/* */` comments. Graph-level attributes are ignored.
pub fn parse_dot(text: &str) -> Result<DotGraph> {
    let tokens = tokenize(text)?;
    let mut it = tokens.into_iter().peekable();
    let err = |line, message: &str| Error::DotParse {
        line,
        message: message.into(),
    };

    let mut header_line = 1;
    loop {
        match it.next() {
            Some((Tok::Id(w), l)) if w.eq_ignore_ascii_case("strict") => header_line = l,
            Some((Tok::Id(w), _)) if w.eq_ignore_ascii_case("digraph") => break,
            Some((_, l)) => return Err(err(l, "expected 'digraph'")),
            None => return Err(err(header_line, "empty input")),
        }
    }
    if let Some((Tok::Id(_), _)) = it.peek() {
        it.next();
    }
    match it.next() {
        Some((Tok::LBrace, _)) => {}
        Some((_, l)) => return Err(err(l, "expected '{'")),
        None => return Err(err(header_line, "expected '{'")),
    }

    let mut vertices: Vec<String> = Vec::new();
    let mut edges = BTreeSet::new();
    let mut edge_list = Vec::new();
    let add_vertex = |v: &str, vs: &mut Vec<String>| {
        if !vs.iter().any(|x| x == v) {
            vs.push(v.to_string());
        }
    };
    loop {
        let (tok, line) = it.next().ok_or_else(|| err(0, "missing '}'"))?;
        match tok {
            Tok::RBrace => break,
            Tok::Semi => continue,
            Tok::Id(first) => {
                if let Some((Tok::Eq, _)) = it.peek() {
                    // graph attribute `a = b`
                    it.next();
                    it.next();
                    continue;
                }
                if matches!(first.as_str(), "graph" | "node" | "edge")
                    && matches!(it.peek(), Some((Tok::LBracket, _)))
                {
                    skip_attrs(&mut it, line)?;
                    continue;
                }
                let mut chain = vec![first];
                while let Some((Tok::Arrow, _)) = it.peek() {
                    it.next();
                    match it.next() {
                        Some((Tok::Id(v), _)) => chain.push(v),
                        _ => return Err(err(line, "expected vertex after '->'")),
                    }
                }
                if let Some((Tok::LBracket, _)) = it.peek() {
                    skip_attrs(&mut it, line)?;
                }
                for v in &chain {
                    add_vertex(v, &mut vertices);
                }
                for pair in chain.windows(2) {
                    let e = (pair[0].clone(), pair[1].clone());
                    if edges.insert(e.clone()) {
                        edge_list.push(e);
                    }
                }
            }
            Tok::Arrow => return Err(err(line, "unexpected '->'")),
            _ => return Err(err(line, "unexpected token")),
        }
    }
    Ok(DotGraph {
        vertices,
        edges: edge_list,
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Id(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Arrow,
    Eq,
    Comma,
}

fn skip_attrs(
    it: &mut std::iter::Peekable<std::vec::IntoIter<(Tok, usize)>>,
    line: usize,
) -> Result<()> {
    it.next();
    for (tok, _) in it.by_ref() {
        if tok == Tok::RBracket {
            return Ok(());
        }
    }
    Err(Error::DotParse {
        line,
        message: "unterminated attribute list".into(),
    })
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut line = 1;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '\n' => {
                line += 1;
                i += 1;
            }
            c if c.is_whitespace() => i += 1,
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '/' if chars.get(i + 1) == Some(&'*') => {
                i += 2;
                while i < chars.len() && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                    if chars[i] == '\n' {
                        line += 1;
                    }
                    i += 1;
                }
                i += 2;
            }
            '{' | '}' | '[' | ']' | ';' | '=' | ',' => {
                out.push((
                    match c {
                        '{' => Tok::LBrace,
                        '}' => Tok::RBrace,
                        '[' => Tok::LBracket,
                        ']' => Tok::RBracket,
                        ';' => Tok::Semi,
                        '=' => Tok::Eq,
                        _ => Tok::Comma,
                    },
                    line,
                ));
                i += 1;
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push((Tok::Arrow, line));
                i += 2;
            }
            '-' if chars.get(i + 1) == Some(&'-') => {
                return Err(Error::DotParse {
                    line,
                    message: "undirected edges are not supported".into(),
                });
            }
            '"' => {
                let start_line = line;
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => {
                            return Err(Error::DotParse {
                                line: start_line,
                                message: "unterminated string".into(),
                            })
                        }
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some('\\') if i + 1 < chars.len() => {
                            s.push(chars[i + 1]);
                            i += 2;
                        }
                        Some(&ch) => {
                            if ch == '\n' {
                                line += 1;
                            }
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                out.push((Tok::Id(s), start_line));
            }
            c if c.is_alphanumeric() || c == '_' || c == '.' || c == '-' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.'
                        || (chars[i] == '-' && chars.get(i + 1) != Some(&'>')))
                {
                    i += 1;
                }
                out.push((Tok::Id(chars[start..i].iter().collect()), line));
            }
            other => {
                return Err(Error::DotParse {
                    line,
                    message: format!("unexpected character '{other}'"),
                })
            }
        }
    }
    Ok(out)
}

/// Directed-edge precision/recall/F1 and structural Hamming distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub shd: usize,
}

/// Compares an inferred graph against the truth. Precision and recall are 1
/// when their denominator is empty.
pub fn compare_graphs(inferred: &Dag, truth: &Dag) -> Result<GraphMetrics> {
    let m = truth.vertex_count();
    if inferred.vertex_count() != m {
        return Err(Error::InvalidGraph(format!(
            "vertex count mismatch: {} vs {m}",
            inferred.vertex_count()
        )));
    }
    let predicted = inferred.edge_count();
    let actual = truth.edge_count();
    let tp = inferred
        .edges()
        .iter()
        .filter(|&&(a, b)| truth.has_edge(a, b))
        .count();
    let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, predicted);
    let recall = ratio(tp, actual);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let state = |g: &Dag, a: usize, b: usize| (g.has_edge(a, b), g.has_edge(b, a));
    let mut shd = 0;
    for a in 0..m {
        for b in a + 1..m {
            if state(inferred, a, b) != state(truth, a, b) {
                shd += 1;
            }
        }
    }
    Ok(GraphMetrics {
        precision,
        recall,
        f1,
        shd,
    })
}
