//! Flips, site-flips, wall events and the mirror bijection behind the
//! equality of bunkbed probabilities on wall events.
//!
//! The mirror needs a vertex set that is unchanged by the flip it performs.
//! It therefore works with the *union shadow* of a configuration: the base
//! structure restricted to edges present in at least one bunk (bond models)
//! or joining two vertices that each have an open copy (site models). Flips
//! preserve the union shadow and the quasi-posts, so flipping twice in the
//! same set is the identity.

use std::collections::{BTreeSet, HashSet};

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::bunkbed::{Bunk, BunkbedInstance};
use crate::connectivity::{classify, Reacher};
use crate::error::{Error, Result};
use crate::models::{BitSlot, Configuration, Family, Semantics};

/// Largest member set accepted by [`is_wall_event`].
pub const MEMBER_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipMode {
    /// Swap the bunks of every horizontal element inside `W` (bond models).
    Flip,
    /// Swap the open copies of every vertex of `W` (site models).
    SiteFlip,
}

impl FlipMode {
    pub fn for_semantics(s: Semantics) -> FlipMode {
        match s {
            Semantics::Bond => FlipMode::Flip,
            Semantics::Site => FlipMode::SiteFlip,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FlipSet {
    pub vertices: BTreeSet<usize>,
    pub mode: FlipMode,
}

impl FlipSet {
    pub fn new<I: IntoIterator<Item = usize>>(mode: FlipMode, vertices: I) -> Self {
        FlipSet {
            vertices: vertices.into_iter().collect(),
            mode,
        }
    }
}

/// Exchanges the free bits controlling two units that must swap roles.
fn swap_units(fam: &Family<'_>, bits: &mut FixedBitSet, a: usize, b: usize) -> Result<()> {
    match (fam.slot(a), fam.slot(b)) {
        (Some(BitSlot::Toggle(i)), Some(BitSlot::Toggle(j))) => {
            let (x, y) = (bits.contains(i), bits.contains(j));
            bits.set(i, y);
            bits.set(j, x);
        }
        (Some(BitSlot::Choice { bit: i, .. }), Some(BitSlot::Choice { bit: j, .. })) if i == j => {
            bits.toggle(i)
        }
        (Some(BitSlot::Forced), Some(BitSlot::Forced)) | (None, None) => {}
        _ => {
            return Err(Error::IncompatibleModel {
                model: fam.model().to_string(),
                reason: "family is not closed under this flip".into(),
            })
        }
    }
    Ok(())
}

/// The flip (bond models) or site-flip (site models) of `c` in `fs.vertices`.
pub fn flip(fam: &Family<'_>, c: &Configuration, fs: &FlipSet) -> Result<Configuration> {
    if fs.mode != FlipMode::for_semantics(fam.semantics()) {
        return Err(Error::FlipModeMismatch);
    }
    let b = fam.instance();
    let s = b.base();
    if let Some(&v) = fs.vertices.iter().find(|&&v| v >= s.vertex_count()) {
        return Err(Error::UnknownVertex(format!("#{v}")));
    }
    let mut bits = c.free_bits().clone();
    match fs.mode {
        FlipMode::Flip => {
            for (e, vs) in s.edges().iter().enumerate() {
                if vs.iter().all(|v| fs.vertices.contains(v)) {
                    swap_units(
                        fam,
                        &mut bits,
                        b.horizontal(e, Bunk::Lower),
                        b.horizontal(e, Bunk::Upper),
                    )?;
                }
            }
        }
        FlipMode::SiteFlip => {
            let n = s.vertex_count();
            for &v in &fs.vertices {
                swap_units(fam, &mut bits, v, n + v)?;
            }
        }
    }
    fam.realize(&bits)
}

/// Adjacency of the union shadow with the given vertices removed. For
/// digraphs the lists point backwards (`x` lists the `y` with `y -> x`), so a
/// search from `v` finds the vertices that can reach `v`.
fn union_shadow(
    b: &BunkbedInstance,
    c: &Configuration,
    removed: &BTreeSet<usize>,
) -> Vec<Vec<usize>> {
    let s = b.base();
    let n = s.vertex_count();
    let mut adj = vec![Vec::new(); n];
    let has_open_copy = |v: usize| c.is_open(v) || c.is_open(n + v);
    for (e, vs) in s.edges().iter().enumerate() {
        let present = match c.semantics() {
            Semantics::Bond => Bunk::BOTH
                .iter()
                .any(|&k| c.is_retained(b, b.horizontal(e, k))),
            Semantics::Site => vs.iter().all(|&v| has_open_copy(v)),
        };
        if !present || vs.iter().any(|v| removed.contains(v)) {
            continue;
        }
        if s.kind().is_directed() {
            adj[vs[1]].push(vs[0]);
        } else {
            for &x in vs {
                for &y in vs {
                    if x != y {
                        adj[x].push(y);
                    }
                }
            }
        }
    }
    adj
}

fn search(adj: &[Vec<usize>], start: usize) -> BTreeSet<usize> {
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(x) = stack.pop() {
        for &y in &adj[x] {
            if seen.insert(y) {
                stack.push(y);
            }
        }
    }
    seen
}

/// The mirror's set `W`: `v` together with the vertices that reach `v` in the
/// union shadow without passing through a quasi-post. Empty when `v` is
/// itself a quasi-post.
pub fn mirror_component(b: &BunkbedInstance, c: &Configuration, v: usize) -> BTreeSet<usize> {
    let qp = classify(b, c).quasi_posts;
    if qp.contains(&v) {
        return BTreeSet::new();
    }
    search(&union_shadow(b, c, &qp), v)
}

/// Whether `u` is cut off from `v` by quasi-posts in the union shadow (or is
/// itself, like `v`, a quasi-post). This implies that every path from `u` to
/// `v` in `c` meets a quasi-post, and is what the mirror needs.
pub fn shadow_separated(b: &BunkbedInstance, c: &Configuration, u: usize, v: usize) -> bool {
    let qp = classify(b, c).quasi_posts;
    qp.contains(&u) || qp.contains(&v) || !mirror_component(b, c, v).contains(&u)
}

/// Whether every path from a copy of `u` to a copy of `v` in `c` contains a
/// quasi-post: true if an endpoint is one, and otherwise checked by deleting
/// both copies of every quasi-post and testing that no copy of `u` reaches a
/// copy of `v`.
pub fn paths_meet_quasi_posts(b: &BunkbedInstance, c: &Configuration, u: usize, v: usize) -> bool {
    let qp = classify(b, c).quasi_posts;
    if qp.contains(&u) || qp.contains(&v) {
        return true;
    }
    let cut = c.without_vertices(b, &qp);
    let n = b.vertex_count();
    let mut r = Reacher::new(b);
    [u, n + u].iter().all(|&s| {
        let reach = r.reach_from(b, &cut, s);
        !reach.contains(v) && !reach.contains(n + v)
    })
}

/// Closure generators: single vertices for site-flips; the vertex set of
/// each edge for flips (a flip on one vertex moves no horizontal element).
fn generators(fam: &Family<'_>) -> Vec<FlipSet> {
    let s = fam.instance().base();
    let mode = FlipMode::for_semantics(fam.semantics());
    match mode {
        FlipMode::SiteFlip => (0..s.vertex_count())
            .map(|v| FlipSet::new(mode, [v]))
            .collect(),
        FlipMode::Flip => {
            let sets: BTreeSet<BTreeSet<usize>> = s
                .edges()
                .iter()
                .map(|e| e.iter().copied().collect())
                .collect();
            sets.into_iter()
                .map(|vertices| FlipSet { vertices, mode })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WallReport {
    pub members: usize,
    /// The member set is closed under every (site-)flip.
    pub closed: bool,
    /// In every member, every path from `u` to `v` contains a quasi-post.
    pub paths_blocked: bool,
    /// In every member, quasi-posts separate `u` from `v` in the union shadow.
    pub shadow_separated: bool,
    /// First member index violating closure, if any.
    pub closure_witness: Option<u64>,
    /// First member index with an unblocked path, if any.
    pub path_witness: Option<u64>,
}

impl WallReport {
    pub fn is_wall(&self) -> bool {
        self.closed && self.paths_blocked
    }
}

fn check_members(fam: &Family<'_>, members: &[u64]) -> Result<()> {
    if members.len() > MEMBER_LIMIT {
        return Err(Error::SetTooLarge {
            size: members.len(),
            limit: MEMBER_LIMIT,
        });
    }
    if fam.free_count() > 63 {
        return Err(Error::EnumerationCap {
            free: fam.free_count(),
            cap: 63,
        });
    }
    Ok(())
}

/// Decides whether `members` (family indices) is a `(u, v)`-wall event.
pub fn is_wall_event(fam: &Family<'_>, members: &[u64], u: usize, v: usize) -> Result<WallReport> {
    check_members(fam, members)?;
    let b = fam.instance();
    let n = b.vertex_count();
    if u >= n || v >= n {
        return Err(Error::UnknownVertex(format!("#{}", u.max(v))));
    }
    let set: HashSet<u64> = members.iter().copied().collect();
    let gens = generators(fam);
    let mut report = WallReport {
        members: set.len(),
        closed: true,
        paths_blocked: true,
        shadow_separated: true,
        closure_witness: None,
        path_witness: None,
    };
    for &idx in members {
        let c = fam.realize_index(idx);
        if report.closed {
            for g in &gens {
                if !set.contains(&flip(fam, &c, g)?.index()) {
                    report.closed = false;
                    report.closure_witness = Some(idx);
                    break;
                }
            }
        }
        if report.paths_blocked && !paths_meet_quasi_posts(b, &c, u, v) {
            report.paths_blocked = false;
            report.path_witness = Some(idx);
        }
        if report.shadow_separated && !shadow_separated(b, &c, u, v) {
            report.shadow_separated = false;
        }
    }
    Ok(report)
}

/// The bunks `i` with `u^(0) -> v^(i)` in `c`.
pub fn reached_bunks(b: &BunkbedInstance, c: &Configuration, u: usize, v: usize) -> BTreeSet<Bunk> {
    let mut r = Reacher::new(b);
    let n = b.vertex_count();
    Bunk::BOTH
        .into_iter()
        .filter(|k| r.connects(b, c, u, k.index() * n + v))
        .collect()
}

/// The mirror of `c`: its (site-)flip in `X = W ∪ quasi-posts`, where `W`
/// is [`mirror_component`]. Maps members connecting `u^(0)` to `v^(i)` to
/// members connecting `u^(0)` to `v^(1-i)`; the identity when `v` is a
/// quasi-post.
pub fn mirror(fam: &Family<'_>, c: &Configuration, u: usize, v: usize) -> Result<Configuration> {
    let b = fam.instance();
    let n = b.vertex_count();
    if u >= n || v >= n {
        return Err(Error::UnknownVertex(format!("#{}", u.max(v))));
    }
    if reached_bunks(b, c, u, v).is_empty() {
        return Err(Error::MirrorPrecondition(
            "u^(0) reaches no copy of v".into(),
        ));
    }
    if !shadow_separated(b, c, u, v) {
        return Err(Error::MirrorPrecondition(
            "u and v are not separated by quasi-posts".into(),
        ));
    }
    let qp = classify(b, c).quasi_posts;
    if qp.contains(&v) {
        return Ok(c.clone());
    }
    let mut x = mirror_component(b, c, v);
    x.extend(qp);
    flip(
        fam,
        c,
        &FlipSet {
            vertices: x,
            mode: FlipMode::for_semantics(fam.semantics()),
        },
    )
}

/// Outcome of checking the equal-probability statement on one wall event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LemmaReport {
    pub wall: WallReport,
    /// Members with `u^(0) -> v^(0)`.
    pub same: u64,
    /// Members with `u^(0) -> v^(1)`.
    pub cross: u64,
    pub counts_equal: bool,
    /// Mirror applied twice returns every connecting member.
    pub mirror_involution: bool,
    /// Mirror sends `A^(i) \ A^(1-i)` into `A^(1-i) \ A^(i)` and stays in the set.
    pub mirror_swaps_classes: bool,
    pub mirror_failures: u64,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.wall.is_wall()
            && self.counts_equal
            && self.mirror_involution
            && self.mirror_swaps_classes
    }
}

/// Counts both connection classes over `members` and checks the mirror on
/// every connecting member.
pub fn lemma_check(fam: &Family<'_>, members: &[u64], u: usize, v: usize) -> Result<LemmaReport> {
    let wall = is_wall_event(fam, members, u, v)?;
    let b = fam.instance();
    let set: HashSet<u64> = members.iter().copied().collect();
    let (mut same, mut cross, mut failures) = (0u64, 0u64, 0u64);
    let (mut involution, mut swaps) = (true, true);
    for &idx in members {
        let c = fam.realize_index(idx);
        let classes = reached_bunks(b, &c, u, v);
        same += u64::from(classes.contains(&Bunk::Lower));
        cross += u64::from(classes.contains(&Bunk::Upper));
        if classes.is_empty() {
            continue;
        }
        let Ok(m) = mirror(fam, &c, u, v) else {
            failures += 1;
            involution = false;
            swaps = false;
            continue;
        };
        let back = mirror(fam, &m, u, v)
            .map(|c2| c2.index() == idx)
            .unwrap_or(false);
        if !back {
            involution = false;
            failures += 1;
        }
        let image: BTreeSet<Bunk> = reached_bunks(b, &m, u, v);
        let expected: BTreeSet<Bunk> = classes.iter().map(|k| k.other()).collect();
        if image != expected || !set.contains(&m.index()) {
            swaps = false;
            failures += 1;
        }
    }
    Ok(LemmaReport {
        wall,
        same,
        cross,
        counts_equal: same == cross,
        mirror_involution: involution,
        mirror_swaps_classes: swaps,
        mirror_failures: failures,
    })
}

/// Every member of an enumerable family, as indices.
pub fn all_members(fam: &Family<'_>) -> Result<Vec<u64>> {
    let f = fam.free_count();
    if (1usize << f.min(63)) > MEMBER_LIMIT || f > 63 {
        return Err(Error::SetTooLarge {
            size: 1usize << f.min(63),
            limit: MEMBER_LIMIT,
        });
    }
    Ok((0..1u64 << f).collect())
}
