//! Exact connection probabilities by enumerating a whole configuration family.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::bunkbed::{Bunk, BunkbedInstance, NodeRef};
use crate::connectivity::{ReachabilityQuery, Reacher};
use crate::error::{Error, Result};
use crate::models::{Configuration, Family, Model, ModelSpec};

/// Default limit on free bits for exhaustive enumeration (about 10^9 members).
pub const DEFAULT_CAP: usize = 30;
const BLOCK_BITS: u32 = 12;

/// A signed dyadic rational `numerator / 2^exponent`. Equality and ordering
/// compare values, so `2/2^2 == 1/2^1`.
#[derive(Debug, Clone, Copy)]
pub struct Dyadic {
    numerator: i128,
    exponent: u32,
}

const MAX_EXPONENT: u32 = 120;

impl Dyadic {
    pub fn new(numerator: i128, exponent: u32) -> Result<Self> {
        if exponent > MAX_EXPONENT || numerator.unsigned_abs() > 1u128 << MAX_EXPONENT {
            return Err(Error::Parameter(format!(
                "dyadic {numerator}/2^{exponent} out of range"
            )));
        }
        Ok(Dyadic {
            numerator,
            exponent,
        })
    }

    pub fn zero() -> Self {
        Dyadic {
            numerator: 0,
            exponent: 0,
        }
    }

    pub fn numerator(&self) -> i128 {
        self.numerator
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    fn aligned(self, other: Self) -> (i128, i128, u32) {
        let e = self.exponent.max(other.exponent);
        (
            self.numerator << (e - self.exponent),
            other.numerator << (e - other.exponent),
            e,
        )
    }

    /// Lowest terms (odd numerator or zero exponent).
    pub fn reduced(self) -> Self {
        if self.numerator == 0 {
            return Dyadic::zero();
        }
        let shift = self.numerator.trailing_zeros().min(self.exponent);
        Dyadic {
            numerator: self.numerator >> shift,
            exponent: self.exponent - shift,
        }
    }

    pub fn to_f64(self) -> f64 {
        self.numerator as f64 / 2f64.powi(self.exponent as i32)
    }

    pub fn is_positive(self) -> bool {
        self.numerator > 0
    }

    pub fn is_zero(self) -> bool {
        self.numerator == 0
    }
}

impl std::ops::Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        let (a, b, e) = self.aligned(rhs);
        Dyadic {
            numerator: a + b,
            exponent: e,
        }
    }
}

impl std::ops::Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        let (a, b, e) = self.aligned(rhs);
        Dyadic {
            numerator: a - b,
            exponent: e,
        }
    }
}

impl PartialEq for Dyadic {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Dyadic {}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(*other);
        a.cmp(&b)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.numerator, self.exponent)
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DyadicRepr::from(*self).serialize(s)
    }
}

#[derive(Serialize)]
struct DyadicRepr {
    numerator: String,
    exponent: u32,
    exact: String,
    decimal: f64,
}

impl From<Dyadic> for DyadicRepr {
    fn from(d: Dyadic) -> Self {
        DyadicRepr {
            numerator: d.numerator.to_string(),
            exponent: d.exponent,
            exact: d.to_string(),
            decimal: d.to_f64(),
        }
    }
}

/// A probability `numerator / 2^exponent` with `numerator <= 2^exponent`.
/// The exponent is kept as computed (the family's free-bit count).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct DyadicProbability(Dyadic);

impl DyadicProbability {
    pub fn new(numerator: u128, exponent: u32) -> Result<Self> {
        if exponent > MAX_EXPONENT || numerator > 1u128 << exponent {
            return Err(Error::Parameter(format!(
                "{numerator}/2^{exponent} is not a probability"
            )));
        }
        Ok(DyadicProbability(Dyadic {
            numerator: numerator as i128,
            exponent,
        }))
    }

    pub fn numerator(&self) -> u128 {
        self.0.numerator as u128
    }

    pub fn exponent(&self) -> u32 {
        self.0.exponent
    }

    pub fn value(&self) -> Dyadic {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    /// `1 - p`.
    pub fn complement(&self) -> DyadicProbability {
        DyadicProbability(Dyadic {
            numerator: (1i128 << self.0.exponent) - self.0.numerator,
            exponent: self.0.exponent,
        })
    }
}

impl std::ops::Sub for DyadicProbability {
    type Output = Dyadic;
    fn sub(self, rhs: DyadicProbability) -> Dyadic {
        self.0 - rhs.0
    }
}

impl fmt::Display for DyadicProbability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// `P(u^(0) -> v^(0))` against `P(u^(0) -> v^(1))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GapResult {
    pub p_same: DyadicProbability,
    pub p_cross: DyadicProbability,
    /// `p_cross - p_same`.
    pub gap: Dyadic,
    /// The bunkbed inequality fails at this pair.
    pub violation: bool,
}

impl GapResult {
    pub fn from_counts(same: u64, cross: u64, exponent: u32) -> Result<Self> {
        let p_same = DyadicProbability::new(same.into(), exponent)?;
        let p_cross = DyadicProbability::new(cross.into(), exponent)?;
        let gap = p_cross - p_same;
        Ok(GapResult {
            p_same,
            p_cross,
            gap,
            violation: gap.is_positive(),
        })
    }
}

/// Options for exhaustive enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationOptions {
    pub cap: usize,
    /// Worker threads; `None` uses rayon's global pool.
    pub threads: Option<usize>,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            cap: DEFAULT_CAP,
            threads: None,
        }
    }
}

/// Runs `f` inside a pool with the requested number of threads.
pub(crate) fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

/// Folds `visit` over every member of the family. The index range is cut into
/// fixed blocks, so the result does not depend on the thread count as long as
/// `merge` is associative and commutative.
pub fn fold_family<T, V, M>(
    fam: &Family<'_>,
    opts: EnumerationOptions,
    init: T,
    visit: V,
    merge: M,
) -> Result<T>
where
    T: Clone + Send + Sync,
    V: Fn(&mut Reacher, &Configuration, &mut T) + Sync,
    M: Fn(T, T) -> T + Sync + Send,
{
    let f = fam.free_count();
    if f > opts.cap || f > 63 {
        return Err(Error::EnumerationCap {
            free: f,
            cap: opts.cap.min(63),
        });
    }
    let total = 1u64 << f;
    let block = 1u64 << BLOCK_BITS.min(f as u32);
    let blocks = total / block;
    let b = fam.instance();
    let run = || {
        (0..blocks)
            .into_par_iter()
            .map(|blk| {
                let mut reacher = Reacher::new(b);
                let mut config = fam.blank();
                let mut acc = init.clone();
                for i in blk * block..(blk + 1) * block {
                    fam.realize_index_into(&mut config, i);
                    visit(&mut reacher, &config, &mut acc);
                }
                acc
            })
            .reduce(|| init.clone(), &merge)
    };
    Ok(in_pool(opts.threads, run))
}

/// Probability that the query holds, by full enumeration.
pub fn exact_probability_with(
    fam: &Family<'_>,
    q: &ReachabilityQuery,
    opts: EnumerationOptions,
) -> Result<DyadicProbability> {
    if q.semantics != fam.semantics() {
        return Err(Error::SemanticsMismatch(format!(
            "query is {:?}, model is {:?}",
            q.semantics,
            fam.semantics()
        )));
    }
    let b = fam.instance();
    for node in [q.source, q.target] {
        if node.vertex >= b.vertex_count() {
            return Err(Error::UnknownVertex(format!("#{}", node.vertex)));
        }
    }
    let (s, t) = (b.node_id(q.source), b.node_id(q.target));
    let count = fold_family(
        fam,
        opts,
        0u64,
        |r, c, acc| *acc += u64::from(r.connects(b, c, s, t)),
        |a, b| a + b,
    )?;
    DyadicProbability::new(count.into(), fam.free_count() as u32)
}

pub fn exact_probability(
    spec: &ModelSpec,
    b: &BunkbedInstance,
    q: &ReachabilityQuery,
) -> Result<DyadicProbability> {
    exact_probability_with(
        &Family::new(spec.clone(), b)?,
        q,
        EnumerationOptions::default(),
    )
}

/// Both bunkbed probabilities for `(u, v)` from one enumeration pass.
pub fn exact_gap_with(
    fam: &Family<'_>,
    u: usize,
    v: usize,
    opts: EnumerationOptions,
) -> Result<GapResult> {
    let b = fam.instance();
    let n = b.vertex_count();
    if u >= n || v >= n {
        return Err(Error::UnknownVertex(format!("#{}", u.max(v))));
    }
    let (src, same, cross) = (u, v, n + v);
    let (s, c) = fold_family(
        fam,
        opts,
        (0u64, 0u64),
        |r, cfg, acc| {
            let reach = r.reach_from(b, cfg, src);
            acc.0 += u64::from(reach.contains(same));
            acc.1 += u64::from(reach.contains(cross));
        },
        |a, b| (a.0 + b.0, a.1 + b.1),
    )?;
    GapResult::from_counts(s, c, fam.free_count() as u32)
}

pub fn exact_gap(spec: &ModelSpec, b: &BunkbedInstance, u: usize, v: usize) -> Result<GapResult> {
    exact_gap_with(
        &Family::new(spec.clone(), b)?,
        u,
        v,
        EnumerationOptions::default(),
    )
}

/// Gap results for every ordered pair `(u, v)`, indexed `[u][v]`.
pub fn exact_all_pairs(fam: &Family<'_>, opts: EnumerationOptions) -> Result<Vec<Vec<GapResult>>> {
    let b = fam.instance();
    let n = b.vertex_count();
    let counts = fold_family(
        fam,
        opts,
        vec![(0u64, 0u64); n * n],
        |r, cfg, acc| {
            for u in 0..n {
                let reach = r.reach_from(b, cfg, u);
                if reach.is_clear() {
                    continue;
                }
                for v in 0..n {
                    acc[u * n + v].0 += u64::from(reach.contains(v));
                    acc[u * n + v].1 += u64::from(reach.contains(n + v));
                }
            }
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                x.0 += y.0;
                x.1 += y.1;
            }
            a
        },
    )?;
    let e = fam.free_count() as u32;
    (0..n)
        .map(|u| {
            (0..n)
                .map(|v| GapResult::from_counts(counts[u * n + v].0, counts[u * n + v].1, e))
                .collect()
        })
        .collect()
}

/// One row of the case table for the basic site counterexample: with v1 in
/// the lower bunk and v5 in the upper bunk, the placement of v3, v4, v6 and
/// the bunks in which an open v9 would be reached from `v1^(0)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Table1Row {
    pub v3: Bunk,
    pub v4: Bunk,
    pub v6: Bunk,
    pub v9_reachable: BTreeSet<Bunk>,
}

impl Table1Row {
    pub fn render(&self) -> String {
        let set: Vec<String> = self
            .v9_reachable
            .iter()
            .map(|b| b.sign().to_string())
            .collect();
        let set = if set.is_empty() {
            "∅".to_string()
        } else {
            format!("{{{}}}", set.join(","))
        };
        format!(
            "{} {} {} | {}",
            self.v3.sign(),
            self.v4.sign(),
            self.v6.sign(),
            set
        )
    }
}

/// The published case table, rendered as by [`Table1Row::render`].
pub const TABLE1_EXPECTED: [&str; 8] = [
    "- - - | {-}",
    "- - + | {+}",
    "- + - | {-,+}",
    "- + + | ∅",
    "+ - - | ∅",
    "+ - + | {+}",
    "+ + - | {-,+}",
    "+ + + | {-,+}",
];

/// Recomputes the eight-row case table over the G2 transcription.
pub fn table1(b: &BunkbedInstance) -> Result<Vec<Table1Row>> {
    crate::constructions::check_g2(b.base())?;
    let s = b.base();
    let id = |name: &str| s.vertex_index(name);
    let (v1, v3, v4, v5, v6, v9) = (
        id("v1")?,
        id("v3")?,
        id("v4")?,
        id("v5")?,
        id("v6")?,
        id("v9")?,
    );
    let fam = Family::new(ModelSpec::new(Model::E2, s.posts().iter().copied()), b)?;
    let non_posts: Vec<usize> = (0..s.vertex_count()).filter(|v| !s.is_post(*v)).collect();
    let bit_of = |v: usize| {
        non_posts
            .iter()
            .position(|&x| x == v)
            .expect("non-post vertex")
    };
    let mut reacher = Reacher::new(b);
    let mut rows = Vec::with_capacity(8);
    for row in 0..8u32 {
        let place = |k: u32| Bunk::from_index(((row >> (2 - k)) & 1) as usize);
        let (p3, p4, p6) = (place(0), place(1), place(2));
        let mut reachable = BTreeSet::new();
        for p9 in Bunk::BOTH {
            let mut index = 0u64;
            for (v, bunk) in [
                (v1, Bunk::Lower),
                (v5, Bunk::Upper),
                (v3, p3),
                (v4, p4),
                (v6, p6),
                (v9, p9),
            ] {
                if bunk == Bunk::Upper {
                    index |= 1 << bit_of(v);
                }
            }
            let c = fam.realize_index(index);
            if reacher.connects(
                b,
                &c,
                b.node_id(NodeRef::lower(v1)),
                b.node_id(NodeRef::new(v9, p9)),
            ) {
                reachable.insert(p9);
            }
        }
        rows.push(Table1Row {
            v3: p3,
            v4: p4,
            v6: p6,
            v9_reachable: reachable,
        });
    }
    Ok(rows)
}
