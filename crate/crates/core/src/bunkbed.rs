use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::structure::{Structure, StructureKind};

/// One of the two copies of the base structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bunk {
    Lower,
    Upper,
}

impl Bunk {
    pub const BOTH: [Bunk; 2] = [Bunk::Lower, Bunk::Upper];

    pub fn index(self) -> usize {
        match self {
            Bunk::Lower => 0,
            Bunk::Upper => 1,
        }
    }

    pub fn from_index(i: usize) -> Bunk {
        if i == 0 {
            Bunk::Lower
        } else {
            Bunk::Upper
        }
    }

    pub fn other(self) -> Bunk {
        match self {
            Bunk::Lower => Bunk::Upper,
            Bunk::Upper => Bunk::Lower,
        }
    }

    pub fn sign(self) -> char {
        match self {
            Bunk::Lower => '-',
            Bunk::Upper => '+',
        }
    }
}

/// A copy `v^(bunk)` of a base vertex. Its dense id is `bunk * n + vertex`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeRef {
    pub vertex: usize,
    pub bunk: Bunk,
}

impl NodeRef {
    pub fn new(vertex: usize, bunk: Bunk) -> Self {
        NodeRef { vertex, bunk }
    }

    pub fn lower(vertex: usize) -> Self {
        NodeRef::new(vertex, Bunk::Lower)
    }

    pub fn upper(vertex: usize) -> Self {
        NodeRef::new(vertex, Bunk::Upper)
    }
}

/// How vertical edges are represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerticalMode {
    /// One element per vertex; traversable both ways.
    Single,
    /// Two directed elements per vertex, `v0 -> v1` then `v1 -> v0`.
    Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElementRole {
    Horizontal { edge: usize, bunk: Bunk },
    Vertical { vertex: usize },
    VerticalArc { vertex: usize, from: Bunk },
}

/// An edge of the bunkbed structure. `nodes` holds dense node ids; a directed
/// element has exactly `[tail, head]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub role: ElementRole,
    pub nodes: Vec<usize>,
    pub directed: bool,
}

impl Element {
    pub fn is_vertical(&self) -> bool {
        !matches!(self.role, ElementRole::Horizontal { .. })
    }
}

/// The doubled structure with a fixed element order: lower-bunk horizontals in
/// edge order, then upper-bunk horizontals, then verticals in vertex order.
///
/// Also carries an adjacency index (`node -> (element, neighbour)`) reused by
/// every reachability query.
#[derive(Debug, Clone)]
pub struct BunkbedInstance {
    base: Arc<Structure>,
    vertical_mode: VerticalMode,
    elements: Vec<Element>,
    adj_offsets: Vec<usize>,
    adj: Vec<(u32, u32)>,
}

impl PartialEq for BunkbedInstance {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base
            && self.vertical_mode == other.vertical_mode
            && self.elements == other.elements
    }
}

impl BunkbedInstance {
    pub fn new(base: Structure) -> Self {
        Self::with_verticals(base, VerticalMode::Single)
    }

    pub fn with_verticals(base: Structure, vertical_mode: VerticalMode) -> Self {
        let n = base.vertex_count();
        let directed = base.kind().is_directed();
        let mut elements = Vec::with_capacity(2 * base.edge_count() + 2 * n);
        for bunk in Bunk::BOTH {
            for (e, vs) in base.edges().iter().enumerate() {
                elements.push(Element {
                    role: ElementRole::Horizontal { edge: e, bunk },
                    nodes: vs.iter().map(|&v| bunk.index() * n + v).collect(),
                    directed,
                });
            }
        }
        for v in 0..n {
            match vertical_mode {
                VerticalMode::Single => elements.push(Element {
                    role: ElementRole::Vertical { vertex: v },
                    nodes: vec![v, n + v],
                    directed: false,
                }),
                VerticalMode::Split => {
                    elements.push(Element {
                        role: ElementRole::VerticalArc {
                            vertex: v,
                            from: Bunk::Lower,
                        },
                        nodes: vec![v, n + v],
                        directed: true,
                    });
                    elements.push(Element {
                        role: ElementRole::VerticalArc {
                            vertex: v,
                            from: Bunk::Upper,
                        },
                        nodes: vec![n + v, v],
                        directed: true,
                    });
                }
            }
        }

        let mut out: Vec<Vec<(u32, u32)>> = vec![Vec::new(); 2 * n];
        for (id, el) in elements.iter().enumerate() {
            if el.directed {
                out[el.nodes[0]].push((id as u32, el.nodes[1] as u32));
            } else {
                for &x in &el.nodes {
                    for &y in &el.nodes {
                        if x != y {
                            out[x].push((id as u32, y as u32));
                        }
                    }
                }
            }
        }
        let mut adj_offsets = Vec::with_capacity(2 * n + 1);
        let mut adj = Vec::new();
        adj_offsets.push(0);
        for list in out {
            adj.extend(list);
            adj_offsets.push(adj.len());
        }

        BunkbedInstance {
            base: Arc::new(base),
            vertical_mode,
            elements,
            adj_offsets,
            adj,
        }
    }

    pub fn base(&self) -> &Structure {
        &self.base
    }

    pub fn kind(&self) -> StructureKind {
        self.base.kind()
    }

    pub fn vertical_mode(&self) -> VerticalMode {
        self.vertical_mode
    }

    pub fn vertex_count(&self) -> usize {
        self.base.vertex_count()
    }

    pub fn node_count(&self) -> usize {
        2 * self.base.vertex_count()
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element(&self, id: usize) -> &Element {
        &self.elements[id]
    }

    pub fn node_id(&self, node: NodeRef) -> usize {
        node.bunk.index() * self.vertex_count() + node.vertex
    }

    pub fn node_ref(&self, id: usize) -> NodeRef {
        let n = self.vertex_count();
        NodeRef::new(id % n, Bunk::from_index(id / n))
    }

    /// Element id of the copy of base edge `edge` in `bunk`.
    pub fn horizontal(&self, edge: usize, bunk: Bunk) -> usize {
        bunk.index() * self.base.edge_count() + edge
    }

    /// Element ids of the vertical edge(s) at `vertex` (two for split verticals).
    pub fn verticals(&self, vertex: usize) -> std::ops::Range<usize> {
        let start = 2 * self.base.edge_count();
        match self.vertical_mode {
            VerticalMode::Single => start + vertex..start + vertex + 1,
            VerticalMode::Split => start + 2 * vertex..start + 2 * vertex + 2,
        }
    }

    /// Outgoing `(element, neighbour)` pairs of a node.
    #[inline]
    pub fn adjacency(&self, node: usize) -> &[(u32, u32)] {
        &self.adj[self.adj_offsets[node]..self.adj_offsets[node + 1]]
    }

    pub fn describe_node(&self, id: usize) -> String {
        let r = self.node_ref(id);
        format!("{}^({})", self.base.vertex_name(r.vertex), r.bunk.index())
    }
}

impl fmt::Display for BunkbedInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "bunkbed {} with {} vertices, {} edges, {} elements",
            self.kind(),
            self.vertex_count(),
            self.base.edge_count(),
            self.elements.len()
        )
    }
}

/// Builds the bunkbed double of a structure with single (bidirectional) verticals.
pub fn build_bunkbed(s: Structure) -> BunkbedInstance {
    BunkbedInstance::new(s)
}
