//! Graphs, hypergraphs and directed multigraphs, and their text format.
//!
//! ```text
//! # comment
//! type graph | hypergraph | digraph
//! vertex <name> [post]
//! edge <name> <name> [<name>...] [double]
//! ```
//!
//! Vertices and edges keep their declaration order; a vertex's index is its
//! position among the `vertex` lines.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureKind {
    Graph,
    Hypergraph,
    Digraph,
}

impl StructureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StructureKind::Graph => "graph",
            StructureKind::Hypergraph => "hypergraph",
            StructureKind::Digraph => "digraph",
        }
    }

    pub fn is_directed(self) -> bool {
        self == StructureKind::Digraph
    }
}

impl fmt::Display for StructureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StructureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "graph" => Ok(StructureKind::Graph),
            "hypergraph" => Ok(StructureKind::Hypergraph),
            "digraph" => Ok(StructureKind::Digraph),
            other => Err(Error::InvalidStructure(format!(
                "unknown structure type `{other}`"
            ))),
        }
    }
}

/// A graph, hypergraph or directed multigraph with a designated post set and,
/// for digraphs, a set of double edges.
///
/// Edges are stored as vertex-index lists: unordered pairs for graphs, vertex
/// sets for hypergraphs and `[tail, head]` for digraphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Structure {
    kind: StructureKind,
    vertices: Vec<String>,
    edges: Vec<Vec<usize>>,
    posts: BTreeSet<usize>,
    doubles: BTreeSet<usize>,
    index: HashMap<String, usize>,
}

impl Structure {
    pub fn new(kind: StructureKind) -> Self {
        Structure {
            kind,
            vertices: Vec::new(),
            edges: Vec::new(),
            posts: BTreeSet::new(),
            doubles: BTreeSet::new(),
            index: HashMap::new(),
        }
    }

    /// Builds a structure from vertex names and edges given by name.
    pub fn from_parts<S: AsRef<str>>(
        kind: StructureKind,
        vertices: &[S],
        edges: &[Vec<S>],
    ) -> Result<Self> {
        let mut s = Structure::new(kind);
        for v in vertices {
            s.add_vertex(v.as_ref())?;
        }
        for e in edges {
            let names: Vec<&str> = e.iter().map(|n| n.as_ref()).collect();
            s.add_edge_by_name(&names)?;
        }
        Ok(s)
    }

    pub fn kind(&self) -> StructureKind {
        self.kind
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.vertices[v]
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &[usize] {
        &self.edges[e]
    }

    pub fn posts(&self) -> &BTreeSet<usize> {
        &self.posts
    }

    pub fn doubles(&self) -> &BTreeSet<usize> {
        &self.doubles
    }

    pub fn is_post(&self, v: usize) -> bool {
        self.posts.contains(&v)
    }

    pub fn is_double(&self, e: usize) -> bool {
        self.doubles.contains(&e)
    }

    pub fn vertex_index(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    /// Resolves a comma-separated or pre-split list of vertex names.
    pub fn vertex_indices<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| self.vertex_index(n.as_ref()))
            .collect()
    }

    pub fn add_vertex(&mut self, name: &str) -> Result<usize> {
        if name.is_empty() || name.chars().any(char::is_whitespace) || name.starts_with('#') {
            return Err(Error::InvalidStructure(format!("bad vertex name `{name}`")));
        }
        if name == "post" || name == "double" {
            return Err(Error::InvalidStructure(format!(
                "`{name}` is a reserved word"
            )));
        }
        if self.index.contains_key(name) {
            return Err(Error::InvalidStructure(format!(
                "duplicate vertex `{name}`"
            )));
        }
        let id = self.vertices.len();
        self.vertices.push(name.to_string());
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn add_edge_by_name(&mut self, names: &[&str]) -> Result<usize> {
        let ids = names
            .iter()
            .map(|n| self.vertex_index(n))
            .collect::<Result<Vec<_>>>()?;
        self.add_edge(ids)
    }

    /// Adds an edge after checking it against the structure kind.
    pub fn add_edge(&mut self, mut ids: Vec<usize>) -> Result<usize> {
        if let Some(&bad) = ids.iter().find(|&&v| v >= self.vertices.len()) {
            return Err(Error::InvalidStructure(format!(
                "vertex index {bad} out of range"
            )));
        }
        match self.kind {
            StructureKind::Graph => {
                if ids.len() != 2 {
                    return Err(Error::InvalidStructure(format!(
                        "graph edges join exactly two vertices, got {} (hyperedge in a graph)",
                        ids.len()
                    )));
                }
                if ids[0] == ids[1] {
                    return Err(Error::InvalidStructure("loops are not allowed".into()));
                }
                ids.sort_unstable();
                if self.edges.contains(&ids) {
                    return Err(Error::InvalidStructure(format!(
                        "duplicate undirected edge {} {}",
                        self.vertices[ids[0]], self.vertices[ids[1]]
                    )));
                }
            }
            StructureKind::Hypergraph => {
                if ids.is_empty() {
                    return Err(Error::InvalidStructure("empty hyperedge".into()));
                }
                let distinct: BTreeSet<usize> = ids.iter().copied().collect();
                if distinct.len() != ids.len() {
                    return Err(Error::InvalidStructure(
                        "repeated vertex in a hyperedge".into(),
                    ));
                }
            }
            StructureKind::Digraph => {
                if ids.len() != 2 {
                    return Err(Error::InvalidStructure(format!(
                        "digraph edges have a tail and a head, got {} vertices",
                        ids.len()
                    )));
                }
                if ids[0] == ids[1] {
                    return Err(Error::InvalidStructure("loops are not allowed".into()));
                }
            }
        }
        self.edges.push(ids);
        Ok(self.edges.len() - 1)
    }

    pub fn set_post(&mut self, v: usize, post: bool) {
        if post {
            self.posts.insert(v);
        } else {
            self.posts.remove(&v);
        }
    }

    pub fn set_posts<I: IntoIterator<Item = usize>>(&mut self, posts: I) {
        self.posts = posts.into_iter().collect();
    }

    pub fn set_double(&mut self, e: usize) -> Result<()> {
        if self.kind != StructureKind::Digraph {
            return Err(Error::InvalidStructure(
                "`double` is only allowed in digraphs".into(),
            ));
        }
        if e >= self.edges.len() {
            return Err(Error::InvalidStructure(format!(
                "edge index {e} out of range"
            )));
        }
        self.doubles.insert(e);
        Ok(())
    }

    pub fn clear_doubles(&mut self) {
        self.doubles.clear();
    }

    /// True when no two edges share the same ordered (digraph) or unordered endpoints.
    pub fn is_simple(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.edges.iter().all(|e| {
            let key = if self.kind.is_directed() {
                e.clone()
            } else {
                let mut k = e.clone();
                k.sort_unstable();
                k
            };
            seen.insert(key)
        })
    }

    /// Number of edges containing `v` (for digraphs, in- plus out-degree).
    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.contains(&v)).count()
    }

    /// Undirected neighbours of `v`, in vertex order.
    pub fn neighbours(&self, v: usize) -> BTreeSet<usize> {
        self.edges
            .iter()
            .filter(|e| e.contains(&v))
            .flat_map(|e| e.iter().copied())
            .filter(|&w| w != v)
            .collect()
    }

    /// Serialises to the structure file format. Parsing the output yields an equal structure.
    pub fn to_text(&self) -> String {
        let mut out = format!("type {}\n", self.kind);
        for (i, name) in self.vertices.iter().enumerate() {
            out.push_str("vertex ");
            out.push_str(name);
            if self.is_post(i) {
                out.push_str(" post");
            }
            out.push('\n');
        }
        for (i, e) in self.edges.iter().enumerate() {
            out.push_str("edge");
            for &v in e {
                out.push(' ');
                out.push_str(&self.vertices[v]);
            }
            if self.is_double(i) {
                out.push_str(" double");
            }
            out.push('\n');
        }
        out
    }
}

/// Parses the structure file format.
pub fn parse_structure(text: &str) -> Result<Structure> {
    let mut structure: Option<Structure> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let mut tokens = line.split_whitespace();
        let keyword = tokens.next().unwrap_or_default();
        let args: Vec<&str> = tokens.collect();
        let Some(s) = structure.as_mut() else {
            if keyword != "type" || args.len() != 1 {
                return Err(err("expected `type graph|hypergraph|digraph` first".into()));
            }
            let kind = args[0].parse().map_err(|e: Error| err(e.to_string()))?;
            structure = Some(Structure::new(kind));
            continue;
        };
        match keyword {
            "type" => return Err(err("repeated `type` line".into())),
            "vertex" => {
                let (name, post) = match args.as_slice() {
                    [name] => (*name, false),
                    [name, "post"] => (*name, true),
                    _ => return Err(err("expected `vertex <name> [post]`".into())),
                };
                let v = s.add_vertex(name).map_err(|e| err(e.to_string()))?;
                s.set_post(v, post);
            }
            "edge" => {
                let (names, double) = match args.split_last() {
                    Some((&"double", rest)) => (rest, true),
                    _ => (args.as_slice(), false),
                };
                let e = s.add_edge_by_name(names).map_err(|e| err(e.to_string()))?;
                if double {
                    s.set_double(e).map_err(|e| err(e.to_string()))?;
                }
            }
            other => return Err(err(format!("unknown keyword `{other}`"))),
        }
    }
    structure.ok_or_else(|| Error::Parse {
        line: 0,
        message: "missing `type` line".into(),
    })
}

impl FromStr for Structure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_structure(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle() {
        let s = parse_structure(
            "type graph\nvertex a\nvertex b\nvertex c\nedge a b\nedge b c\nedge c a\n",
        )
        .unwrap();
        assert_eq!(s.kind(), StructureKind::Graph);
        assert_eq!(s.vertex_count(), 3);
        assert_eq!(s.edge_count(), 3);
        assert_eq!(s.edge(2), &[0, 2]);
    }

    #[test]
    fn one_hyperedge() {
        let s =
            parse_structure("type hypergraph\nvertex a\nvertex b\nvertex c\nedge a b c").unwrap();
        assert_eq!(s.edges(), &[vec![0, 1, 2]]);
    }

    #[test]
    fn duplicate_undirected_edge() {
        let err =
            parse_structure("type graph\nvertex a\nvertex b\nedge a b\nedge b a").unwrap_err();
        assert!(
            err.to_string().contains("duplicate undirected edge"),
            "{err}"
        );
    }

    #[test]
    fn error_paths() {
        let cases = [
            ("type graph\nvertex a\nedge a z", "unknown vertex"),
            (
                "type graph\nvertex a\nvertex b\nedge a b double",
                "only allowed in digraphs",
            ),
            (
                "type graph\nvertex a\nvertex b\nvertex c\nedge a b c",
                "hyperedge in a graph",
            ),
            ("type hypergraph\nvertex a\nedge", "empty hyperedge"),
            ("vertex a", "expected `type"),
            ("type tree", "unknown structure type"),
        ];
        for (text, needle) in cases {
            let err = parse_structure(text).unwrap_err().to_string();
            assert!(err.contains(needle), "{text:?}: {err}");
        }
    }

    #[test]
    fn digraph_multi_edges_and_doubles() {
        let s = parse_structure(
            "type digraph\n# parallel edges\nvertex a post\nvertex b\nedge a b double\nedge a b\nedge b a",
        )
        .unwrap();
        assert_eq!(s.edge_count(), 3);
        assert!(s.is_double(0) && !s.is_double(1));
        assert!(s.is_post(0));
        assert!(!s.is_simple());
        assert_eq!(parse_structure(&s.to_text()).unwrap(), s);
    }
}
