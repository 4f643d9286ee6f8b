//! The percolation models E0..E8 as families of configurations of size `2^f`.
//!
//! Each family is described by a layout over "units" (bunkbed elements for
//! bond models, bunkbed nodes for site models): forced units are always
//! present, a toggle bit includes one unit, and a choice bit picks the lower
//! (`0`) or upper (`1`) member of a pair. Bits are numbered toggles first,
//! then choices.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::bunkbed::{Bunk, BunkbedInstance, ElementRole, VerticalMode};
use crate::error::{Error, Result};
use crate::rng::{StreamKey, StreamSource};
use crate::structure::{Structure, StructureKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Model {
    E0,
    E1,
    E2,
    E3,
    E4,
    E5,
    E6,
    E7,
    E8,
}

impl Model {
    pub const ALL: [Model; 9] = [
        Model::E0,
        Model::E1,
        Model::E2,
        Model::E3,
        Model::E4,
        Model::E5,
        Model::E6,
        Model::E7,
        Model::E8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Model::E0 => "E0",
            Model::E1 => "E1",
            Model::E2 => "E2",
            Model::E3 => "E3",
            Model::E4 => "E4",
            Model::E5 => "E5",
            Model::E6 => "E6",
            Model::E7 => "E7",
            Model::E8 => "E8",
        }
    }

    pub fn semantics(self) -> Semantics {
        match self {
            Model::E1 | Model::E2 | Model::E3 => Semantics::Site,
            _ => Semantics::Bond,
        }
    }

    pub fn takes_posts(self) -> bool {
        matches!(
            self,
            Model::E0 | Model::E2 | Model::E3 | Model::E4 | Model::E6
        )
    }

    pub fn kind(self) -> StructureKind {
        match self {
            Model::E0 | Model::E1 | Model::E2 | Model::E3 => StructureKind::Graph,
            Model::E4 | Model::E5 => StructureKind::Hypergraph,
            Model::E6 | Model::E7 | Model::E8 => StructureKind::Digraph,
        }
    }

    pub fn vertical_mode(self) -> VerticalMode {
        if self == Model::E8 {
            VerticalMode::Split
        } else {
            VerticalMode::Single
        }
    }

    /// Builds the bunkbed double this model expects.
    pub fn instance(self, s: Structure) -> BunkbedInstance {
        BunkbedInstance::with_verticals(s, self.vertical_mode())
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Model::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parameter(format!("unknown model `{s}` (expected E0..E8)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Semantics {
    Bond,
    Site,
}

/// A model together with its post set `T` (empty for models without posts).
/// The double-edge set of E6 is read from the structure.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModelSpec {
    pub model: Model,
    pub posts: BTreeSet<usize>,
}

impl ModelSpec {
    pub fn new<I: IntoIterator<Item = usize>>(model: Model, posts: I) -> Self {
        ModelSpec {
            model,
            posts: posts.into_iter().collect(),
        }
    }

    pub fn unconditioned(model: Model) -> Self {
        ModelSpec::new(model, [])
    }

    /// Uses the structure's `post` markers as `T` when the model takes posts.
    pub fn from_structure(model: Model, s: &Structure) -> Self {
        if model.takes_posts() {
            ModelSpec::new(model, s.posts().iter().copied())
        } else {
            ModelSpec::unconditioned(model)
        }
    }

    pub fn describe(&self, s: &Structure) -> String {
        if self.model.takes_posts() {
            let names: Vec<&str> = self.posts.iter().map(|&v| s.vertex_name(v)).collect();
            format!("{}^{{{}}}", self.model, names.join(","))
        } else {
            self.model.to_string()
        }
    }
}

/// Which free bit, if any, controls a unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitSlot {
    Forced,
    Toggle(usize),
    Choice { bit: usize, bunk: Bunk },
}

#[derive(Debug, Clone)]
struct Layout {
    semantics: Semantics,
    units: usize,
    forced: Vec<usize>,
    toggles: Vec<usize>,
    choices: Vec<[usize; 2]>,
    slots: Vec<Option<BitSlot>>,
    identity: bool,
}

impl Layout {
    fn new(
        semantics: Semantics,
        units: usize,
        forced: Vec<usize>,
        toggles: Vec<usize>,
        choices: Vec<[usize; 2]>,
    ) -> Self {
        let mut slots = vec![None; units];
        for &u in &forced {
            slots[u] = Some(BitSlot::Forced);
        }
        for (i, &u) in toggles.iter().enumerate() {
            slots[u] = Some(BitSlot::Toggle(i));
        }
        for (j, pair) in choices.iter().enumerate() {
            let bit = toggles.len() + j;
            slots[pair[0]] = Some(BitSlot::Choice {
                bit,
                bunk: Bunk::Lower,
            });
            slots[pair[1]] = Some(BitSlot::Choice {
                bit,
                bunk: Bunk::Upper,
            });
        }
        let identity = forced.is_empty()
            && choices.is_empty()
            && toggles.len() == units
            && toggles.iter().enumerate().all(|(i, &u)| i == u);
        Layout {
            semantics,
            units,
            forced,
            toggles,
            choices,
            slots,
            identity,
        }
    }

    fn free_count(&self) -> usize {
        self.toggles.len() + self.choices.len()
    }
}

/// The realised state behind a configuration.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expansion {
    /// Retained bunkbed elements.
    Bond { retained: FixedBitSet },
    /// Open bunkbed nodes; an element is retained iff all its nodes are open.
    Site { open: FixedBitSet },
}

/// A member of a model family: its free bits and their expansion.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    free: FixedBitSet,
    expansion: Expansion,
}

impl Configuration {
    pub fn free_bits(&self) -> &FixedBitSet {
        &self.free
    }

    /// Free bits as an integer (bit `i` of the result is free bit `i`).
    pub fn index(&self) -> u64 {
        assert!(self.free.len() <= 64, "index() needs at most 64 free bits");
        self.free.ones().fold(0u64, |acc, i| acc | (1 << i))
    }

    pub fn expansion(&self) -> &Expansion {
        &self.expansion
    }

    pub fn semantics(&self) -> Semantics {
        match self.expansion {
            Expansion::Bond { .. } => Semantics::Bond,
            Expansion::Site { .. } => Semantics::Site,
        }
    }

    pub fn open_nodes(&self) -> Option<&FixedBitSet> {
        match &self.expansion {
            Expansion::Site { open } => Some(open),
            Expansion::Bond { .. } => None,
        }
    }

    /// Whether a node is open. Every node is open under bond semantics.
    #[inline]
    pub fn is_open(&self, node: usize) -> bool {
        match &self.expansion {
            Expansion::Site { open } => open.contains(node),
            Expansion::Bond { .. } => true,
        }
    }

    #[inline]
    pub fn is_retained(&self, b: &BunkbedInstance, element: usize) -> bool {
        match &self.expansion {
            Expansion::Bond { retained } => retained.contains(element),
            Expansion::Site { open } => b.element(element).nodes.iter().all(|&x| open.contains(x)),
        }
    }

    /// A derived view with both copies of `vertices` deleted: their nodes are
    /// closed (site) or every element touching them is dropped (bond). The
    /// free bits are carried over unchanged and no longer describe the view.
    pub fn without_vertices(
        &self,
        b: &BunkbedInstance,
        vertices: &BTreeSet<usize>,
    ) -> Configuration {
        let n = b.vertex_count();
        let expansion = match &self.expansion {
            Expansion::Site { open } => {
                let mut open = open.clone();
                for &v in vertices {
                    open.set(v, false);
                    open.set(n + v, false);
                }
                Expansion::Site { open }
            }
            Expansion::Bond { retained } => {
                let mut retained = retained.clone();
                for e in self.retained_elements(b).ones() {
                    if b.element(e)
                        .nodes
                        .iter()
                        .any(|&x| vertices.contains(&(x % n)))
                    {
                        retained.set(e, false);
                    }
                }
                Expansion::Bond { retained }
            }
        };
        Configuration {
            free: self.free.clone(),
            expansion,
        }
    }

    /// The retained element set (computed from the open set for site models).
    pub fn retained_elements(&self, b: &BunkbedInstance) -> FixedBitSet {
        match &self.expansion {
            Expansion::Bond { retained } => retained.clone(),
            Expansion::Site { .. } => {
                let mut r = FixedBitSet::with_capacity(b.elements().len());
                for e in 0..b.elements().len() {
                    if self.is_retained(b, e) {
                        r.insert(e);
                    }
                }
                r
            }
        }
    }
}

/// A model bound to a bunkbed instance: the configuration family itself.
#[derive(Debug, Clone)]
pub struct Family<'a> {
    spec: ModelSpec,
    instance: &'a BunkbedInstance,
    layout: Layout,
}

impl<'a> Family<'a> {
    pub fn new(spec: ModelSpec, instance: &'a BunkbedInstance) -> Result<Self> {
        check_compatible(&spec, instance)?;
        let layout = build_layout(&spec, instance);
        Ok(Family {
            spec,
            instance,
            layout,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn model(&self) -> Model {
        self.spec.model
    }

    pub fn instance(&self) -> &'a BunkbedInstance {
        self.instance
    }

    pub fn semantics(&self) -> Semantics {
        self.layout.semantics
    }

    pub fn free_count(&self) -> usize {
        self.layout.free_count()
    }

    /// Slot of a unit (element for bond models, node for site models).
    /// `None` means the unit is never present.
    pub fn slot(&self, unit: usize) -> Option<BitSlot> {
        self.layout.slots[unit]
    }

    pub fn forced_units(&self) -> &[usize] {
        &self.layout.forced
    }

    /// An all-zero configuration, useful as a reusable buffer.
    pub fn blank(&self) -> Configuration {
        let mut c = Configuration {
            free: FixedBitSet::with_capacity(self.free_count()),
            expansion: match self.layout.semantics {
                Semantics::Bond => Expansion::Bond {
                    retained: FixedBitSet::with_capacity(self.layout.units),
                },
                Semantics::Site => Expansion::Site {
                    open: FixedBitSet::with_capacity(self.layout.units),
                },
            },
        };
        self.expand(&mut c);
        c
    }

    pub fn realize(&self, bits: &FixedBitSet) -> Result<Configuration> {
        let mut c = self.blank();
        self.realize_into(&mut c, bits)?;
        Ok(c)
    }

    pub fn realize_into(&self, c: &mut Configuration, bits: &FixedBitSet) -> Result<()> {
        if bits.len() != self.free_count() {
            return Err(Error::BitLength {
                expected: self.free_count(),
                actual: bits.len(),
            });
        }
        c.free.clone_from(bits);
        self.expand(c);
        Ok(())
    }

    /// Realises the configuration whose free bits are the binary digits of `index`.
    pub fn realize_index(&self, index: u64) -> Configuration {
        let mut c = self.blank();
        self.realize_index_into(&mut c, index);
        c
    }

    pub fn realize_index_into(&self, c: &mut Configuration, index: u64) {
        let f = self.free_count();
        assert!(f <= 64, "index realisation needs at most 64 free bits");
        c.free.clear();
        if f > 0 {
            let masked = if f == 64 {
                index
            } else {
                index & ((1u64 << f) - 1)
            };
            c.free.as_mut_slice()[0] = masked as usize;
        }
        self.expand(c);
    }

    pub fn sample(&self, source: &StreamSource, stream: u64) -> Configuration {
        let mut c = self.blank();
        self.sample_into(&mut c, source, stream);
        c
    }

    pub fn sample_into(&self, c: &mut Configuration, source: &StreamSource, stream: u64) {
        source.fill_bits(stream, &mut c.free);
        self.expand(c);
    }

    pub fn sample_key(&self, key: StreamKey) -> Configuration {
        self.sample(&StreamSource::new(key.seed), key.stream)
    }

    /// Recomputes the expansion from the free bits.
    pub fn expand(&self, c: &mut Configuration) {
        let layout = &self.layout;
        let set = match &mut c.expansion {
            Expansion::Bond { retained } => retained,
            Expansion::Site { open } => open,
        };
        if layout.identity {
            set.as_mut_slice().copy_from_slice(c.free.as_slice());
            return;
        }
        set.clear();
        for &u in &layout.forced {
            set.insert(u);
        }
        for i in c.free.ones() {
            if i < layout.toggles.len() {
                set.insert(layout.toggles[i]);
            }
        }
        let base = layout.toggles.len();
        for (j, pair) in layout.choices.iter().enumerate() {
            let pick = usize::from(c.free.contains(base + j));
            set.insert(pair[pick]);
        }
    }

    /// Builds a configuration from free bits given as a closure, e.g. when
    /// transforming another configuration's bits.
    pub fn from_bits_fn(&self, f: impl Fn(usize) -> bool) -> Configuration {
        let mut bits = FixedBitSet::with_capacity(self.free_count());
        for i in 0..self.free_count() {
            bits.set(i, f(i));
        }
        let mut c = self.blank();
        c.free = bits;
        self.expand(&mut c);
        c
    }
}

fn check_compatible(spec: &ModelSpec, b: &BunkbedInstance) -> Result<()> {
    let model = spec.model;
    let fail = |reason: String| {
        Err(Error::IncompatibleModel {
            model: model.to_string(),
            reason,
        })
    };
    if b.kind() != model.kind() {
        return fail(format!("requires a {}, got a {}", model.kind(), b.kind()));
    }
    if b.vertical_mode() != model.vertical_mode() {
        return fail(match model {
            Model::E8 => "E8 needs split (two directed) vertical edges".into(),
            _ => "split vertical edges are only used by E8".into(),
        });
    }
    if model == Model::E8 && !b.base().is_simple() {
        return fail("E8 requires a simple digraph (no parallel edges)".into());
    }
    if !model.takes_posts() && !spec.posts.is_empty() {
        return fail("this model has no post set".into());
    }
    if let Some(&v) = spec.posts.iter().find(|&&v| v >= b.vertex_count()) {
        return fail(format!("post index {v} out of range"));
    }
    Ok(())
}

fn build_layout(spec: &ModelSpec, b: &BunkbedInstance) -> Layout {
    let s = b.base();
    let n = s.vertex_count();
    let m = s.edge_count();
    let elements = b.elements().len();
    let non_posts: Vec<usize> = (0..n).filter(|v| !spec.posts.contains(v)).collect();
    let post_verticals: Vec<usize> = spec.posts.iter().flat_map(|&v| b.verticals(v)).collect();
    let post_nodes: Vec<usize> = spec.posts.iter().flat_map(|&v| [v, n + v]).collect();
    let all: Vec<usize> = (0..elements).collect();
    let horizontals: Vec<usize> = (0..2 * m).collect();
    let copies = |e: usize| [b.horizontal(e, Bunk::Lower), b.horizontal(e, Bunk::Upper)];
    debug_assert!(b
        .elements()
        .iter()
        .take(2 * m)
        .all(|el| matches!(el.role, ElementRole::Horizontal { .. })));

    match spec.model {
        Model::E0 => Layout::new(
            Semantics::Bond,
            elements,
            post_verticals,
            horizontals,
            vec![],
        ),
        Model::E1 => Layout::new(Semantics::Site, 2 * n, vec![], (0..2 * n).collect(), vec![]),
        Model::E2 => Layout::new(
            Semantics::Site,
            2 * n,
            post_nodes,
            vec![],
            non_posts.iter().map(|&v| [v, n + v]).collect(),
        ),
        Model::E3 => {
            let toggles = non_posts
                .iter()
                .copied()
                .chain(non_posts.iter().map(|&v| n + v))
                .collect();
            Layout::new(Semantics::Site, 2 * n, post_nodes, toggles, vec![])
        }
        Model::E4 => Layout::new(
            Semantics::Bond,
            elements,
            post_verticals,
            vec![],
            (0..m).map(copies).collect(),
        ),
        Model::E5 | Model::E7 | Model::E8 => {
            Layout::new(Semantics::Bond, elements, vec![], all, vec![])
        }
        Model::E6 => {
            let mut forced = post_verticals;
            forced.extend(s.doubles().iter().flat_map(|&e| copies(e)));
            let choices = (0..m).filter(|&e| !s.is_double(e)).map(copies).collect();
            Layout::new(Semantics::Bond, elements, forced, vec![], choices)
        }
    }
}

/// Number of free bits of `spec` over `b`; the family has `2^f` members.
pub fn free_count(spec: &ModelSpec, b: &BunkbedInstance) -> Result<usize> {
    Ok(Family::new(spec.clone(), b)?.free_count())
}

pub fn realize(spec: &ModelSpec, b: &BunkbedInstance, bits: &FixedBitSet) -> Result<Configuration> {
    Family::new(spec.clone(), b)?.realize(bits)
}

pub fn sample(spec: &ModelSpec, b: &BunkbedInstance, key: StreamKey) -> Result<Configuration> {
    Ok(Family::new(spec.clone(), b)?.sample_key(key))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::parse_structure;
    use std::collections::HashSet;

    fn triangle() -> Structure {
        parse_structure("type graph\nvertex a\nvertex b\nvertex c\nedge a b\nedge b c\nedge c a")
            .unwrap()
    }

    fn k2() -> Structure {
        parse_structure("type graph\nvertex u\nvertex v\nedge u v").unwrap()
    }

    #[test]
    fn free_counts() {
        let t = BunkbedInstance::new(triangle());
        let count = |m: Model, posts: &[usize]| {
            free_count(&ModelSpec::new(m, posts.iter().copied()), &t).unwrap()
        };
        assert_eq!(count(Model::E0, &[0]), 6);
        assert_eq!(count(Model::E1, &[]), 6);
        assert_eq!(count(Model::E2, &[0]), 2);
        assert_eq!(count(Model::E3, &[0]), 4);
        let h = BunkbedInstance::new(
            parse_structure("type hypergraph\nvertex a\nvertex b\nvertex c\nedge a b c\nedge a")
                .unwrap(),
        );
        assert_eq!(free_count(&ModelSpec::new(Model::E4, [0]), &h).unwrap(), 2);
        assert_eq!(
            free_count(&ModelSpec::unconditioned(Model::E5), &h).unwrap(),
            4 + 3
        );
        let d = parse_structure(
            "type digraph\nvertex a\nvertex b\nvertex c\nedge a b double\nedge b c\nedge c a",
        )
        .unwrap();
        let dd = BunkbedInstance::new(d.clone());
        assert_eq!(free_count(&ModelSpec::new(Model::E6, [1]), &dd).unwrap(), 2);
        assert_eq!(
            free_count(&ModelSpec::unconditioned(Model::E7), &dd).unwrap(),
            6 + 3
        );
        let mut simple = d;
        simple.clear_doubles();
        let split = Model::E8.instance(simple);
        assert_eq!(
            free_count(&ModelSpec::unconditioned(Model::E8), &split).unwrap(),
            6 + 6
        );
    }

    #[test]
    fn compatibility_errors() {
        let t = BunkbedInstance::new(triangle());
        assert!(Family::new(ModelSpec::unconditioned(Model::E4), &t).is_err());
        assert!(Family::new(ModelSpec::new(Model::E1, [0]), &t).is_err());
        assert!(Family::new(ModelSpec::new(Model::E2, [7]), &t).is_err());
        let multi =
            parse_structure("type digraph\nvertex a\nvertex b\nedge a b\nedge a b").unwrap();
        let split = Model::E8.instance(multi.clone());
        assert!(Family::new(ModelSpec::unconditioned(Model::E8), &split).is_err());
        assert!(Family::new(ModelSpec::unconditioned(Model::E7), &split).is_err());
        let single = BunkbedInstance::new(multi);
        assert!(Family::new(ModelSpec::unconditioned(Model::E8), &single).is_err());
        let fam = Family::new(ModelSpec::unconditioned(Model::E1), &t).unwrap();
        assert!(matches!(
            fam.realize(&FixedBitSet::with_capacity(3)),
            Err(Error::BitLength {
                expected: 6,
                actual: 3
            })
        ));
    }

    #[test]
    fn e0_single_edge_copy() {
        let b = BunkbedInstance::new(k2());
        let fam = Family::new(ModelSpec::unconditioned(Model::E0), &b).unwrap();
        let c = fam.realize_index(0b01);
        let r = c.retained_elements(&b);
        assert_eq!(r.ones().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn e2_all_zero_is_lower_bunk() {
        let b = BunkbedInstance::new(triangle());
        let fam = Family::new(ModelSpec::new(Model::E2, [1]), &b).unwrap();
        let c = fam.realize_index(0);
        let open: Vec<usize> = c.open_nodes().unwrap().ones().collect();
        assert_eq!(open, vec![0, 1, 2, 4]);
        let c = fam.realize_index(0b10);
        let open: Vec<usize> = c.open_nodes().unwrap().ones().collect();
        assert_eq!(open, vec![0, 1, 4, 5]);
    }

    #[test]
    fn sampling_is_deterministic() {
        let b = BunkbedInstance::new(triangle());
        let fam = Family::new(ModelSpec::unconditioned(Model::E1), &b).unwrap();
        let src = StreamSource::new(11);
        assert_eq!(fam.sample(&src, 5), fam.sample(&src, 5));
        assert_eq!(
            fam.sample(&src, 5),
            fam.sample_key(StreamKey {
                seed: 11,
                stream: 5
            })
        );
    }

    #[test]
    fn e1_open_frequency_is_fair() {
        let b = BunkbedInstance::new(k2());
        let fam = Family::new(ModelSpec::unconditioned(Model::E1), &b).unwrap();
        let src = StreamSource::new(2024);
        let n = 100_000;
        let mut counts = [0u32; 4];
        let mut c = fam.blank();
        for i in 0..n {
            fam.sample_into(&mut c, &src, i);
            for (node, k) in counts.iter_mut().enumerate() {
                *k += u32::from(c.is_open(node));
            }
        }
        for k in counts {
            let freq = f64::from(k) / n as f64;
            assert!((freq - 0.5).abs() < 0.01, "{freq}");
        }
    }

    #[test]
    fn enumeration_visits_each_member_once() {
        let s = parse_structure(
            "type graph\nvertex a\nvertex b\nvertex c\nvertex d\nedge a b\nedge b c\nedge c d\nedge d a\nedge a c",
        )
        .unwrap();
        let b = BunkbedInstance::new(s);
        for spec in [
            ModelSpec::new(Model::E0, [0]),
            ModelSpec::unconditioned(Model::E1),
            ModelSpec::new(Model::E2, [2]),
            ModelSpec::new(Model::E3, [1, 3]),
        ] {
            let fam = Family::new(spec, &b).unwrap();
            let f = fam.free_count();
            assert!(f <= 16);
            let distinct: HashSet<Expansion> = (0..1u64 << f)
                .map(|i| fam.realize_index(i).expansion().clone())
                .collect();
            assert_eq!(distinct.len(), 1 << f);
        }
    }

    #[test]
    fn e2_is_the_one_copy_slice_of_e3() {
        let b = BunkbedInstance::new(triangle());
        let e2 = Family::new(ModelSpec::new(Model::E2, [0]), &b).unwrap();
        let e3 = Family::new(ModelSpec::new(Model::E3, [0]), &b).unwrap();
        // E3 bits: lower copies of b, c then upper copies of b, c
        for i in 0..4u64 {
            let c2 = e2.realize_index(i);
            let (b_up, c_up) = (i & 1, (i >> 1) & 1);
            let j = (1 - b_up) | ((1 - c_up) << 1) | (b_up << 2) | (c_up << 3);
            assert_eq!(c2.expansion(), e3.realize_index(j).expansion());
        }
    }
}
