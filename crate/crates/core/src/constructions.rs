//! Builders for the known counterexamples, the hypergraph dual transform,
//! the blown-up unconditioned instances and the checks on the bundled
//! transcriptions.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::bunkbed::BunkbedInstance;
use crate::error::{Error, Result};
use crate::models::{Configuration, Family, Model, ModelSpec};
use crate::structure::{parse_structure, Structure, StructureKind};

const G2_TEXT: &str = include_str!("../data/g2.bb");
const H4_TEXT: &str = include_str!("../data/h4.bb");
const FIG1_TEXT: &str = include_str!("../data/fig1.bb");

/// The basic site counterexample: 9 vertices, posts v2, v7, v8.
pub fn build_g2() -> Structure {
    parse_structure(G2_TEXT).expect("bundled G2 transcription parses")
}

/// The basic hypergraph counterexample: 10 vertices, six 3-edges, posts u2, u7, u9.
pub fn build_h4() -> Structure {
    parse_structure(H4_TEXT).expect("bundled H4 transcription parses")
}

/// Replaces every hyperedge `f = {a, b, c}` of H4 with vertices `x_f`, `y_f`,
/// a single edge `x_f -> y_f` and double edges `a, b, c -> x_f` and
/// `y_f -> a, b, c`. The posts are those of H4.
pub fn build_d6() -> Structure {
    gadget_digraph(&build_h4()).expect("H4 has only 3-edges")
}

/// The gadget replacement used for D6, applicable to any hypergraph.
pub fn gadget_digraph(h: &Structure) -> Result<Structure> {
    if h.kind() != StructureKind::Hypergraph {
        return Err(Error::InvalidStructure(
            "gadget replacement needs a hypergraph".into(),
        ));
    }
    let mut d = Structure::new(StructureKind::Digraph);
    for name in h.vertices() {
        d.add_vertex(name)?;
    }
    for (i, f) in h.edges().iter().enumerate() {
        let x = d.add_vertex(&format!("x{}", i + 1))?;
        let y = d.add_vertex(&format!("y{}", i + 1))?;
        d.add_edge(vec![x, y])?;
        for &a in f {
            let e = d.add_edge(vec![a, x])?;
            d.set_double(e)?;
        }
        for &a in f {
            let e = d.add_edge(vec![y, a])?;
            d.set_double(e)?;
        }
    }
    d.set_posts(h.posts().iter().copied());
    Ok(d)
}

/// Hypergraph dual: one vertex per edge of `g` (named `e_<a>_<b>`) and one
/// hyperedge per vertex of `g` holding its incident edges. Isolated vertices
/// would give empty hyperedges and are rejected.
pub fn dualize(g: &Structure) -> Result<Structure> {
    if g.kind() != StructureKind::Graph {
        return Err(Error::InvalidStructure(
            "the dual is defined for graphs".into(),
        ));
    }
    let mut h = Structure::new(StructureKind::Hypergraph);
    for e in g.edges() {
        h.add_vertex(&format!(
            "e_{}_{}",
            g.vertex_name(e[0]),
            g.vertex_name(e[1])
        ))?;
    }
    for v in 0..g.vertex_count() {
        let incident: Vec<usize> = (0..g.edge_count())
            .filter(|&e| g.edge(e).contains(&v))
            .collect();
        if incident.is_empty() {
            return Err(Error::InvalidStructure(format!(
                "isolated vertex {} has an empty dual edge",
                g.vertex_name(v)
            )));
        }
        h.add_edge(incident)?;
    }
    Ok(h)
}

/// The three-step hypergraph construction from a graph with posts: take the
/// dual, collapse each post's hyperedge to a single post vertex, then add a
/// start vertex to the source's hyperedge and an end vertex to the target's.
pub fn collapse_dual(g: &Structure, source: usize, target: usize) -> Result<Structure> {
    let dual = dualize(g)?;
    // hyperedge index in `dual` equals the vertex index in `g`
    let mut rep: Vec<usize> = (0..dual.vertex_count()).collect();
    for &p in g.posts() {
        let members = dual.edge(p);
        for &m in members {
            rep[m] = members[0];
        }
    }
    let mut h = Structure::new(StructureKind::Hypergraph);
    let mut new_id = BTreeMap::new();
    for &r in &rep {
        if let std::collections::btree_map::Entry::Vacant(slot) = new_id.entry(r) {
            let name = match g.posts().iter().find(|&&p| dual.edge(p).contains(&r)) {
                Some(&p) => format!("post_{}", g.vertex_name(p)),
                None => dual.vertex_name(r).to_string(),
            };
            slot.insert(h.add_vertex(&name)?);
        }
    }
    let start = h.add_vertex("start")?;
    let end = h.add_vertex("end")?;
    for v in 0..g.vertex_count() {
        if g.is_post(v) {
            continue;
        }
        let mut edge: Vec<usize> = dual.edge(v).iter().map(|m| new_id[&rep[*m]]).collect();
        if v == source {
            edge.push(start);
        }
        if v == target {
            edge.push(end);
        }
        h.add_edge(edge)?;
    }
    let posts: Vec<usize> = g
        .posts()
        .iter()
        .map(|&p| new_id[&rep[dual.edge(p)[0]]])
        .collect();
    h.set_posts(posts);
    Ok(h)
}

fn check_k(k: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    Ok(())
}

/// G2 with every post blown up to `k` independent copies (named `<post>_<i>`)
/// sharing its neighbourhood. No posts are marked: the target model is E1.
pub fn blow_up_g1(k: usize) -> Result<Structure> {
    check_k(k)?;
    let g2 = build_g2();
    let mut g = Structure::new(StructureKind::Graph);
    let mut copies: Vec<Vec<usize>> = Vec::with_capacity(g2.vertex_count());
    for v in 0..g2.vertex_count() {
        let name = g2.vertex_name(v);
        if g2.is_post(v) {
            copies.push(
                (1..=k)
                    .map(|i| g.add_vertex(&format!("{name}_{i}")))
                    .collect::<Result<_>>()?,
            );
        } else {
            copies.push(vec![g.add_vertex(name)?]);
        }
    }
    for e in g2.edges() {
        for &a in &copies[e[0]] {
            for &b in &copies[e[1]] {
                g.add_edge(vec![a, b])?;
            }
        }
    }
    Ok(g)
}

/// H4 with `k` pendant 2-edges `{u_t, w_t_i}` at each post `u_t`. No posts
/// are marked: the target model is E5.
pub fn build_h5(k: usize) -> Result<Structure> {
    check_k(k)?;
    let h4 = build_h4();
    let mut h = h4.clone();
    h.set_posts([]);
    for &t in h4.posts() {
        for i in 1..=k {
            let w = h.add_vertex(&format!("w_{}_{i}", h4.vertex_name(t)))?;
            h.add_edge(vec![t, w])?;
        }
    }
    Ok(h)
}

/// D6 with each post given `k` gadget vertices `w` (edges `u -> w` and
/// `w -> u`) and each double edge replaced by `k` parallel single edges.
/// No posts or doubles are marked: the target model is E7.
///
/// The gadget edges are part of the construction, so the edge count is
/// `6 + 36k + 6k`.
pub fn build_d7(k: usize) -> Result<Structure> {
    check_k(k)?;
    let d6 = build_d6();
    let mut d = Structure::new(StructureKind::Digraph);
    for name in d6.vertices() {
        d.add_vertex(name)?;
    }
    for (e, vs) in d6.edges().iter().enumerate() {
        let reps = if d6.is_double(e) { k } else { 1 };
        for _ in 0..reps {
            d.add_edge(vs.clone())?;
        }
    }
    for &t in d6.posts() {
        for i in 1..=k {
            let w = d.add_vertex(&format!("w_{}_{i}", d6.vertex_name(t)))?;
            d.add_edge(vec![t, w])?;
            d.add_edge(vec![w, t])?;
        }
    }
    Ok(d)
}

/// Edge count stated alongside the D7 vertex count, `6 + 36k`; it omits the
/// `6k` post-gadget edges.
pub fn d7_stated_edge_count(k: usize) -> usize {
    6 + 36 * k
}

/// The worked example for posts and quasi-posts: a graph on u, v, w, x, y, z
/// and an E0 configuration in which z is a post, y and v are quasi-posts,
/// and w is joined to its upper copy without being a quasi-post.
pub fn figure1() -> (Structure, BTreeSet<(String, String, u8)>) {
    let s = parse_structure(FIG1_TEXT).expect("bundled example parses");
    // retained horizontal copies as (endpoint, endpoint, bunk)
    let retained = [
        ("y", "z", 0),
        ("y", "z", 1),
        ("v", "y", 0),
        ("v", "y", 1),
        ("w", "z", 0),
        ("w", "y", 1),
        ("u", "x", 0),
        ("w", "x", 1),
    ];
    (
        s,
        retained
            .iter()
            .map(|&(a, b, k)| (a.to_string(), b.to_string(), k))
            .collect(),
    )
}

/// Realises the worked example as an unconditioned E0 configuration with the
/// vertical edge retained at z only.
pub fn figure1_configuration(b: &BunkbedInstance) -> Result<Configuration> {
    let (s, retained) = figure1();
    if b.base() != &s {
        return Err(Error::Transcription(
            "instance is not the worked example".into(),
        ));
    }
    let z = s.vertex_index("z")?;
    let fam = Family::new(ModelSpec::new(Model::E0, [z]), b)?;
    let mut wanted = BTreeSet::new();
    for (x, y, bunk) in &retained {
        let (x, y) = (s.vertex_index(x)?, s.vertex_index(y)?);
        let e = (0..s.edge_count())
            .find(|&e| s.edge(e) == [x.min(y), x.max(y)])
            .ok_or_else(|| Error::Transcription("example edge missing".into()))?;
        wanted.insert(b.horizontal(e, crate::Bunk::from_index(*bunk as usize)));
    }
    // E0 toggles are the horizontal elements in element order
    Ok(fam.from_bits_fn(|i| wanted.contains(&i)))
}

/// One named constraint and its outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstraintCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TranscriptionReport {
    pub checks: Vec<ConstraintCheck>,
}

impl TranscriptionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConstraintCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(ConstraintCheck {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    fn into_result(self) -> Result<()> {
        match self.failures().next() {
            None => Ok(()),
            Some(c) => Err(Error::Transcription(format!("{}: {}", c.name, c.detail))),
        }
    }
}

fn names(s: &Structure, set: impl IntoIterator<Item = usize>) -> BTreeSet<String> {
    set.into_iter()
        .map(|v| s.vertex_name(v).to_string())
        .collect()
}

fn name_set(list: &[&str]) -> BTreeSet<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// Checks every stated fact about the G2 transcription.
pub fn g2_constraints(g: &Structure) -> TranscriptionReport {
    let mut r = TranscriptionReport { checks: Vec::new() };
    r.push(
        "G2 is a graph",
        g.kind() == StructureKind::Graph,
        g.kind().to_string(),
    );
    let expected_names: BTreeSet<String> = (1..=9).map(|i| format!("v{i}")).collect();
    let actual_names = names(g, 0..g.vertex_count());
    r.push(
        "G2 has 9 vertices v1..v9",
        actual_names == expected_names,
        format!("{} vertices", g.vertex_count()),
    );
    if actual_names != expected_names {
        return r;
    }
    let v = |i: usize| g.vertex_index(&format!("v{i}")).expect("checked above");
    r.push(
        "T2 = {v2, v7, v8}",
        names(g, g.posts().iter().copied()) == name_set(&["v2", "v7", "v8"]),
        format!("{:?}", names(g, g.posts().iter().copied())),
    );
    r.push(
        "|E(G2)| = 11",
        g.edge_count() == 11,
        format!("{} edges", g.edge_count()),
    );
    let posts_deg2 = g.posts().iter().all(|&p| g.degree(p) == 2);
    r.push("posts have degree 2", posts_deg2, String::new());
    r.push(
        "v1 and v9 have degree 2",
        g.degree(v(1)) == 2 && g.degree(v(9)) == 2,
        format!("{} and {}", g.degree(v(1)), g.degree(v(9))),
    );
    let mid = (3..=6).all(|i| g.degree(v(i)) == 3);
    r.push(
        "v3..v6 have degree 3",
        mid,
        (3..=6)
            .map(|i| g.degree(v(i)).to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    let mut n8 = g.neighbours(v(8));
    n8.remove(&v(9));
    r.push(
        "the only vertex adjacent to v8 besides v9 is v5",
        n8 == BTreeSet::from([v(5)]),
        format!("{:?}", names(g, n8.clone())),
    );
    let mut n9 = g.neighbours(v(9));
    n9.remove(&v(8));
    r.push(
        "once v8 is removed, v9 has the unique neighbour v6",
        n9 == BTreeSet::from([v(6)]),
        format!("{:?}", names(g, n9.clone())),
    );
    r.push(
        "v1 is adjacent to v5",
        g.neighbours(v(1)).contains(&v(5)),
        String::new(),
    );
    r
}

/// Checks every stated fact about the H4 transcription, including that it is
/// the collapsed dual of the bundled G2.
pub fn h4_constraints(h: &Structure) -> TranscriptionReport {
    let mut r = TranscriptionReport { checks: Vec::new() };
    r.push(
        "H4 is a hypergraph",
        h.kind() == StructureKind::Hypergraph,
        h.kind().to_string(),
    );
    let expected_names: BTreeSet<String> = (1..=10).map(|i| format!("u{i}")).collect();
    let actual_names = names(h, 0..h.vertex_count());
    r.push(
        "H4 has 10 vertices u1..u10",
        actual_names == expected_names,
        format!("{} vertices", h.vertex_count()),
    );
    if actual_names != expected_names || h.kind() != StructureKind::Hypergraph {
        return r;
    }
    r.push(
        "H4 has six hyperedges",
        h.edge_count() == 6,
        format!("{} hyperedges", h.edge_count()),
    );
    r.push(
        "all hyperedges have size 3",
        h.edges().iter().all(|e| e.len() == 3),
        String::new(),
    );
    r.push(
        "T4 = {u2, u7, u9}",
        names(h, h.posts().iter().copied()) == name_set(&["u2", "u7", "u9"]),
        format!("{:?}", names(h, h.posts().iter().copied())),
    );
    let g2 = build_g2();
    let dual_ok = match (g2.vertex_index("v1"), g2.vertex_index("v9")) {
        (Ok(s), Ok(t)) => collapse_dual(&g2, s, t).map(|d| {
            let fixed = [
                (
                    d.vertex_index("start").unwrap(),
                    h.vertex_index("u1").unwrap(),
                ),
                (
                    d.vertex_index("end").unwrap(),
                    h.vertex_index("u10").unwrap(),
                ),
            ];
            hypergraphs_isomorphic(&d, h, &fixed)
        }),
        _ => Ok(false),
    };
    r.push(
        "H4 is the collapsed dual of G2 with u1, u10 added at v1, v9",
        dual_ok == Ok(true),
        format!("{dual_ok:?}"),
    );
    r
}

pub(crate) fn check_g2(g: &Structure) -> Result<()> {
    g2_constraints(g).into_result()
}

/// Runs the constraint checks on the bundled G2 and H4.
pub fn validate_counterexample_transcriptions() -> TranscriptionReport {
    let mut checks = g2_constraints(&build_g2()).checks;
    checks.extend(h4_constraints(&build_h4()).checks);
    TranscriptionReport { checks }
}

/// Isomorphism of hypergraphs (or graphs) by backtracking, respecting posts
/// and the given fixed vertex pairs. Intended for small structures.
pub fn hypergraphs_isomorphic(a: &Structure, b: &Structure, fixed: &[(usize, usize)]) -> bool {
    if a.kind() != b.kind()
        || a.vertex_count() != b.vertex_count()
        || a.edge_count() != b.edge_count()
    {
        return false;
    }
    let n = a.vertex_count();
    let canon = |s: &Structure, e: &[usize]| -> Vec<usize> {
        let mut v = e.to_vec();
        if !s.kind().is_directed() {
            v.sort_unstable();
        }
        v
    };
    let mut target: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for e in b.edges() {
        *target.entry(canon(b, e)).or_default() += 1;
    }
    let signature = |s: &Structure, v: usize| {
        let mut sizes: Vec<usize> = s
            .edges()
            .iter()
            .filter(|e| e.contains(&v))
            .map(Vec::len)
            .collect();
        sizes.sort_unstable();
        (s.is_post(v), sizes)
    };
    let sig_a: Vec<_> = (0..n).map(|v| signature(a, v)).collect();
    let sig_b: Vec<_> = (0..n).map(|v| signature(b, v)).collect();
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for &(x, y) in fixed {
        if x >= n || y >= n || sig_a[x] != sig_b[y] || used[y] {
            return false;
        }
        map[x] = y;
        used[y] = true;
    }

    fn extend(
        v: usize,
        a: &Structure,
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
        ok: &dyn Fn(usize, usize) -> bool,
        done: &dyn Fn(&[usize]) -> bool,
    ) -> bool {
        let n = a.vertex_count();
        if v == n {
            return done(map);
        }
        if map[v] != usize::MAX {
            return extend(v + 1, a, map, used, ok, done);
        }
        for y in 0..n {
            if !used[y] && ok(v, y) {
                map[v] = y;
                used[y] = true;
                if extend(v + 1, a, map, used, ok, done) {
                    return true;
                }
                map[v] = usize::MAX;
                used[y] = false;
            }
        }
        false
    }

    let ok = |x: usize, y: usize| sig_a[x] == sig_b[y];
    let done = |m: &[usize]| {
        let mut image: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for e in a.edges() {
            let mapped: Vec<usize> = e.iter().map(|&v| m[v]).collect();
            *image.entry(canon(b, &mapped)).or_default() += 1;
        }
        image == target
    };
    extend(0, a, &mut map, &mut used, &ok, &done)
}
