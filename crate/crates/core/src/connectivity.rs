//! Reachability between bunkbed node copies, post/quasi-post classification
//! and path shadows.

use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::bunkbed::{BunkbedInstance, NodeRef};
use crate::error::{Error, Result};
use crate::models::{Configuration, Expansion, Semantics};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReachabilityQuery {
    pub source: NodeRef,
    pub target: NodeRef,
    pub semantics: Semantics,
}

/// Reusable search buffers; one per worker.
#[derive(Debug, Clone)]
pub struct Reacher {
    visited: FixedBitSet,
    stack: Vec<u32>,
}

impl Reacher {
    pub fn new(b: &BunkbedInstance) -> Self {
        Reacher {
            visited: FixedBitSet::with_capacity(b.node_count()),
            stack: Vec::with_capacity(b.node_count()),
        }
    }

    /// Nodes reachable from `source` along retained elements (directed
    /// elements only forwards). Under site semantics a closed source reaches
    /// nothing, not even itself.
    pub fn reach_from(
        &mut self,
        b: &BunkbedInstance,
        c: &Configuration,
        source: usize,
    ) -> &FixedBitSet {
        self.visited.clear();
        self.stack.clear();
        match c.expansion() {
            Expansion::Bond { retained } => {
                self.visited.insert(source);
                self.stack.push(source as u32);
                while let Some(x) = self.stack.pop() {
                    for &(e, y) in b.adjacency(x as usize) {
                        if !self.visited.contains(y as usize) && retained.contains(e as usize) {
                            self.visited.insert(y as usize);
                            self.stack.push(y);
                        }
                    }
                }
            }
            Expansion::Site { open } => {
                if !open.contains(source) {
                    return &self.visited;
                }
                self.visited.insert(source);
                self.stack.push(source as u32);
                while let Some(x) = self.stack.pop() {
                    for &(e, y) in b.adjacency(x as usize) {
                        let y = y as usize;
                        if self.visited.contains(y) || !open.contains(y) {
                            continue;
                        }
                        let nodes = &b.element(e as usize).nodes;
                        if nodes.len() > 2 && !nodes.iter().all(|&z| open.contains(z)) {
                            continue;
                        }
                        self.visited.insert(y);
                        self.stack.push(y as u32);
                    }
                }
            }
        }
        &self.visited
    }

    pub fn connects(
        &mut self,
        b: &BunkbedInstance,
        c: &Configuration,
        source: usize,
        target: usize,
    ) -> bool {
        if let Expansion::Site { open } = c.expansion() {
            if !open.contains(source) || !open.contains(target) {
                return false;
            }
        }
        if source == target {
            return true;
        }
        self.reach_from(b, c, source).contains(target)
    }
}

/// True iff the query's target copy is reachable from its source copy.
pub fn connects(b: &BunkbedInstance, c: &Configuration, q: &ReachabilityQuery) -> Result<bool> {
    if q.semantics != c.semantics() {
        return Err(Error::SemanticsMismatch(format!(
            "query is {:?}, configuration is {:?}",
            q.semantics,
            c.semantics()
        )));
    }
    for node in [q.source, q.target] {
        if node.vertex >= b.vertex_count() {
            return Err(Error::UnknownVertex(format!("#{}", node.vertex)));
        }
    }
    Ok(Reacher::new(b).connects(b, c, b.node_id(q.source), b.node_id(q.target)))
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct VertexClassification {
    pub posts: BTreeSet<usize>,
    pub quasi_posts: BTreeSet<usize>,
}

/// Posts are vertices whose vertical edge(s) are retained; quasi-posts are
/// posts plus vertices that reach some post `y` and are reached from the same
/// `y` using only base edges with both copies retained. Under site semantics
/// the two sets coincide.
pub fn classify(b: &BunkbedInstance, c: &Configuration) -> VertexClassification {
    let n = b.vertex_count();
    let posts: BTreeSet<usize> = (0..n)
        .filter(|&v| match c.expansion() {
            Expansion::Site { open } => open.contains(v) && open.contains(n + v),
            Expansion::Bond { retained } => b.verticals(v).all(|e| retained.contains(e)),
        })
        .collect();
    if c.semantics() == Semantics::Site {
        return VertexClassification {
            quasi_posts: posts.clone(),
            posts,
        };
    }
    let doubled = both_copy_adjacency(b, c);
    let quasi_posts = strongly_attached(&doubled, &posts, b.kind().is_directed());
    VertexClassification { posts, quasi_posts }
}

/// Base-level adjacency (`out`, `in`) over edges with both copies retained.
fn both_copy_adjacency(
    b: &BunkbedInstance,
    c: &Configuration,
) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let s = b.base();
    let n = s.vertex_count();
    let mut out = vec![Vec::new(); n];
    let mut inc = vec![Vec::new(); n];
    for (e, vs) in s.edges().iter().enumerate() {
        let both = crate::bunkbed::Bunk::BOTH
            .iter()
            .all(|&bk| c.is_retained(b, b.horizontal(e, bk)));
        if !both {
            continue;
        }
        if s.kind().is_directed() {
            out[vs[0]].push(vs[1]);
            inc[vs[1]].push(vs[0]);
        } else {
            for &x in vs {
                for &y in vs {
                    if x != y {
                        out[x].push(y);
                        inc[x].push(y);
                    }
                }
            }
        }
    }
    (out, inc)
}

fn reach_base(adj: &[Vec<usize>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    seen[start] = true;
    let mut stack = vec![start];
    while let Some(x) = stack.pop() {
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    seen
}

fn strongly_attached(
    adj: &(Vec<Vec<usize>>, Vec<Vec<usize>>),
    posts: &BTreeSet<usize>,
    directed: bool,
) -> BTreeSet<usize> {
    let (out, inc) = adj;
    let mut result = posts.clone();
    for &y in posts {
        let fwd = reach_base(out, y);
        if directed {
            let bwd = reach_base(inc, y);
            result.extend((0..out.len()).filter(|&x| fwd[x] && bwd[x]));
        } else {
            result.extend((0..out.len()).filter(|&x| fwd[x]));
        }
    }
    result
}

/// Projects a bunkbed path to the base structure: copy labels are dropped and
/// the repeat produced by each vertical step is collapsed.
pub fn shadow(b: &BunkbedInstance, path: &[NodeRef]) -> Result<Vec<usize>> {
    if path.is_empty() {
        return Err(Error::NotAPath("empty".into()));
    }
    for node in path {
        if node.vertex >= b.vertex_count() {
            return Err(Error::UnknownVertex(format!("#{}", node.vertex)));
        }
    }
    for pair in path.windows(2) {
        let (x, y) = (b.node_id(pair[0]), b.node_id(pair[1]));
        if !b.adjacency(x).iter().any(|&(_, z)| z as usize == y) {
            return Err(Error::NotAPath(format!(
                "{} and {} are not joined",
                b.describe_node(x),
                b.describe_node(y)
            )));
        }
    }
    let mut out: Vec<usize> = Vec::with_capacity(path.len());
    for node in path {
        if out.last() != Some(&node.vertex) {
            out.push(node.vertex);
        }
    }
    Ok(out)
}
