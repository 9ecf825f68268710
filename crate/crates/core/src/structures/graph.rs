use std::collections::HashSet;
use std::fmt::Write as _;

use thiserror::Error;

/// An edge with its endpoints. For undirected graphs the pair is unordered.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub id: String,
    pub tail: String,
    pub head: String,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.tail == self.head
    }
}

/// A finite multigraph with opaque string ids. Loops and parallel edges are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MultiGraph {
    directed: bool,
    vertices: Vec<String>,
    edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphFormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("edge `{edge}` refers to undeclared vertex `{vertex}`")]
    UnknownVertex { edge: String, vertex: String },
    #[error("unknown built-in graph `{0}`")]
    UnknownBuiltin(String),
}

impl MultiGraph {
    pub fn new(directed: bool) -> Self {
        MultiGraph { directed, vertices: Vec::new(), edges: Vec::new() }
    }

    /// E_n: `n` isolated vertices named `v1..vn`.
    pub fn edgeless(n: usize, directed: bool) -> Self {
        let mut g = MultiGraph::new(directed);
        for i in 1..=n {
            g.vertices.push(format!("v{i}"));
        }
        g
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == id)
    }

    fn id_taken(&self, id: &str) -> bool {
        self.vertices.iter().any(|v| v == id) || self.edges.iter().any(|e| e.id == id)
    }

    pub fn add_vertex(&mut self, id: &str) -> Result<(), GraphFormatError> {
        if self.id_taken(id) {
            return Err(GraphFormatError::DuplicateId(id.to_string()));
        }
        self.vertices.push(id.to_string());
        Ok(())
    }

    pub fn add_edge(&mut self, id: &str, tail: &str, head: &str) -> Result<(), GraphFormatError> {
        if self.id_taken(id) {
            return Err(GraphFormatError::DuplicateId(id.to_string()));
        }
        for end in [tail, head] {
            if self.vertex_index(end).is_none() {
                return Err(GraphFormatError::UnknownVertex {
                    edge: id.to_string(),
                    vertex: end.to_string(),
                });
            }
        }
        self.edges.push(Edge { id: id.to_string(), tail: tail.to_string(), head: head.to_string() });
        Ok(())
    }

    /// Builds a graph on vertices `v1..vn` from endpoint index pairs; edges are named `e1..`.
    pub fn from_pairs(n: usize, directed: bool, pairs: &[(usize, usize)]) -> Self {
        let mut g = MultiGraph::edgeless(n, directed);
        for (k, &(a, b)) in pairs.iter().enumerate() {
            let (t, h) = (g.vertices[a].clone(), g.vertices[b].clone());
            g.edges.push(Edge { id: format!("e{}", k + 1), tail: t, head: h });
        }
        g
    }

    /// Endpoint indices of every edge, in edge order.
    pub fn endpoint_indices(&self) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .map(|e| {
                (self.vertex_index(&e.tail).expect("declared"), self.vertex_index(&e.head).expect("declared"))
            })
            .collect()
    }

    pub fn is_simple(&self) -> bool {
        let mut seen = HashSet::new();
        for (a, b) in self.endpoint_indices() {
            if a == b {
                return false;
            }
            let key = if self.directed { (a, b) } else { (a.min(b), a.max(b)) };
            if !seen.insert(key) {
                return false;
            }
        }
        true
    }

    /// Parses the line-based graph format.
    pub fn parse(text: &str) -> Result<Self, GraphFormatError> {
        let mut graph: Option<MultiGraph> = None;
        let mut seen_edge = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |message: &str| GraphFormatError::Syntax { line: line_no, message: message.to_string() };
            let Some(g) = graph.as_mut() else {
                let rest = line
                    .strip_prefix("directed:")
                    .ok_or_else(|| syntax("expected header `directed: true|false`"))?;
                let directed = match rest.trim() {
                    "true" => true,
                    "false" => false,
                    _ => return Err(syntax("header value must be `true` or `false`")),
                };
                graph = Some(MultiGraph::new(directed));
                continue;
            };
            let words: Vec<&str> = line.split_whitespace().collect();
            match words.as_slice() {
                ["vertex", id] => {
                    if seen_edge {
                        return Err(syntax("vertex lines must precede edge lines"));
                    }
                    g.add_vertex(id)?;
                }
                ["edge", id, tail, head] => {
                    seen_edge = true;
                    g.add_edge(id, tail, head)?;
                }
                ["vertex", ..] => return Err(syntax("expected `vertex <id>`")),
                ["edge", ..] => return Err(syntax("expected `edge <id> <tail> <head>`")),
                _ => return Err(syntax("expected a `vertex` or `edge` line")),
            }
        }
        graph.ok_or(GraphFormatError::Syntax { line: 1, message: "missing header".to_string() })
    }

    /// Canonical text form; `parse(g.to_text()) == g`.
    pub fn to_text(&self) -> String {
        let mut out = format!("directed: {}\n", self.directed);
        for v in &self.vertices {
            let _ = writeln!(out, "vertex {v}");
        }
        for e in &self.edges {
            let _ = writeln!(out, "edge {} {} {}", e.id, e.tail, e.head);
        }
        out
    }
}

/// Names accepted by [`builtin_graph`].
pub fn builtin_names() -> &'static [&'static str] {
    &[
        "empty", "e1", "e2", "e3", "e4", "e5", "k2", "k2-double", "loop1", "p3", "c3", "triangle",
        "k3", "k4", "k13", "two-edges", "d2cycle",
    ]
}

/// Small named graphs. The same name yields the directed or undirected variant on request.
pub fn builtin_graph(name: &str, directed: bool) -> Result<MultiGraph, GraphFormatError> {
    let g = |n, pairs: &[(usize, usize)]| MultiGraph::from_pairs(n, directed, pairs);
    Ok(match name {
        "empty" => MultiGraph::new(directed),
        "e1" | "e2" | "e3" | "e4" | "e5" => MultiGraph::edgeless(name[1..].parse().expect("digit"), directed),
        "k2" => g(2, &[(0, 1)]),
        "k2-double" => g(2, &[(0, 1), (0, 1)]),
        "loop1" => g(1, &[(0, 0)]),
        "p3" => g(3, &[(0, 1), (1, 2)]),
        "c3" | "triangle" | "k3" => g(3, &[(0, 1), (1, 2), (2, 0)]),
        "k4" => g(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]),
        "k13" => g(4, &[(0, 1), (0, 2), (0, 3)]),
        "two-edges" => g(4, &[(0, 1), (2, 3)]),
        "d2cycle" => g(2, &[(0, 1), (1, 0)]),
        _ => return Err(GraphFormatError::UnknownBuiltin(name.to_string())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let text = "directed: false\nvertex u\nvertex v\nedge e u v\nedge l v v\n";
        let g = MultiGraph::parse(text).unwrap();
        assert_eq!(g.to_text(), text);
        assert_eq!(MultiGraph::parse(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# a graph\n\ndirected: true # header\nvertex a\nedge x a a # loop\n";
        let g = MultiGraph::parse(text).unwrap();
        assert!(g.is_directed());
        assert!(g.edges()[0].is_loop());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(MultiGraph::parse("vertex a"), Err(GraphFormatError::Syntax { line: 1, .. })));
        assert!(matches!(
            MultiGraph::parse("directed: false\nvertex a\nedge e a b\n"),
            Err(GraphFormatError::UnknownVertex { .. })
        ));
        assert!(matches!(
            MultiGraph::parse("directed: false\nvertex a\nvertex a\n"),
            Err(GraphFormatError::DuplicateId(_))
        ));
        assert!(matches!(
            MultiGraph::parse("directed: false\nvertex a\nedge e a a\nvertex b\n"),
            Err(GraphFormatError::Syntax { line: 4, .. })
        ));
    }

    #[test]
    fn empty_graph_is_representable() {
        let g = MultiGraph::parse("directed: false\n").unwrap();
        assert!(g.vertices().is_empty() && g.edges().is_empty());
        assert_eq!(builtin_graph("empty", false).unwrap(), g);
    }

    #[test]
    fn simplicity() {
        assert!(builtin_graph("k4", false).unwrap().is_simple());
        assert!(!builtin_graph("k2-double", false).unwrap().is_simple());
        assert!(!builtin_graph("loop1", false).unwrap().is_simple());
        assert!(builtin_graph("d2cycle", true).unwrap().is_simple());
    }
}
