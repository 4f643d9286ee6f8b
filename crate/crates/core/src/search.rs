//! Exhaustive and randomised searches for bunkbed violations, and exact
//! verification over the path, cycle and wheel families.

use std::collections::{BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bunkbed::NodeRef;
use crate::error::{Error, Result};
use crate::exact::{exact_all_pairs, Dyadic, EnumerationOptions, GapResult};
use crate::models::{Family, Model, ModelSpec};
use crate::montecarlo::{estimate_gap, GapEstimate, McOptions};
use crate::structure::{Structure, StructureKind};

/// Where candidate structures come from. Generation is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Explicit(Vec<Structure>),
    /// Every labelled graph on 1..=n vertices, by vertex count and then by
    /// adjacency code (edge `ij` in lexicographic order is bit `k`).
    AllGraphs {
        max_n: usize,
    },
    Paths {
        max_n: usize,
    },
    Cycles {
        max_n: usize,
    },
    /// A cycle on `n - 1` vertices plus a hub joined to all of it.
    Wheels {
        max_n: usize,
    },
    RandomGraphs {
        n: usize,
        p: f64,
        count: usize,
        seed: u64,
    },
    /// Every simple labelled digraph on 1..=n vertices, optionally acyclic.
    AllDigraphs {
        max_n: usize,
        acyclic: bool,
    },
    RandomDigraphs {
        n: usize,
        p: f64,
        count: usize,
        seed: u64,
        acyclic: bool,
    },
    /// Every labelled tournament on 1..=n vertices.
    Tournaments {
        max_n: usize,
    },
    TransitiveTournaments {
        max_n: usize,
    },
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i}")).collect()
}

fn graph_from_edges(kind: StructureKind, n: usize, edges: &[(usize, usize)]) -> Structure {
    let mut s = Structure::new(kind);
    for name in names(n) {
        s.add_vertex(&name).expect("fresh names");
    }
    for &(a, b) in edges {
        s.add_edge(vec![a, b]).expect("valid generated edge");
    }
    s
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect()
}

fn ordered_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect()
}

pub fn path(n: usize) -> Structure {
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    graph_from_edges(StructureKind::Graph, n, &edges)
}

pub fn cycle(n: usize) -> Structure {
    let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    edges.push((0, n - 1));
    graph_from_edges(StructureKind::Graph, n, &edges)
}

/// Wheel on `n` vertices: hub `v0` and rim `v1..v(n-1)`.
pub fn wheel(n: usize) -> Structure {
    let rim = n - 1;
    let mut edges: Vec<_> = (1..=rim).map(|i| (0, i)).collect();
    edges.extend((1..rim).map(|i| (i, i + 1)));
    edges.push((1, rim));
    graph_from_edges(StructureKind::Graph, n, &edges)
}

fn is_acyclic(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut indeg = vec![0usize; n];
    for &(_, b) in edges {
        indeg[b] += 1;
    }
    let mut queue: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(x) = queue.pop() {
        seen += 1;
        for &(a, b) in edges {
            if a == x {
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    queue.push(b);
                }
            }
        }
    }
    seen == n
}

fn subsets<T: Copy>(items: &[T], mask: u64) -> Vec<T> {
    items
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, &x)| x)
        .collect()
}

/// Canonical adjacency code under all vertex relabellings (small n only).
fn canonical_code(s: &Structure) -> Vec<u8> {
    let n = s.vertex_count();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best: Option<Vec<u8>> = None;
    let directed = s.kind().is_directed();
    let code = |p: &[usize]| {
        let mut m = vec![0u8; n * n];
        for e in s.edges() {
            let (a, b) = (p[e[0]], p[e[1]]);
            m[a * n + b] = 1;
            if !directed {
                m[b * n + a] = 1;
            }
        }
        m
    };
    fn next_perm(p: &mut [usize]) -> bool {
        let n = p.len();
        if n < 2 {
            return false;
        }
        let mut i = n - 1;
        while i > 0 && p[i - 1] >= p[i] {
            i -= 1;
        }
        if i == 0 {
            return false;
        }
        let mut j = n - 1;
        while p[j] <= p[i - 1] {
            j -= 1;
        }
        p.swap(i - 1, j);
        p[i..].reverse();
        true
    }
    loop {
        let c = code(&perm);
        if best.as_ref().is_none_or(|b| c < *b) {
            best = Some(c);
        }
        if !next_perm(&mut perm) {
            break;
        }
    }
    best.unwrap_or_default()
}

impl Generator {
    /// All structures, in generation order.
    pub fn generate(&self, dedup: bool) -> Result<Vec<Structure>> {
        let mut out = match self {
            Generator::Explicit(list) => list.clone(),
            Generator::AllGraphs { max_n } => {
                let mut out = Vec::new();
                for n in 1..=*max_n {
                    let ps = pairs(n);
                    if ps.len() > 24 {
                        return Err(Error::Parameter(format!(
                            "{n} vertices is too many to enumerate"
                        )));
                    }
                    for mask in 0..1u64 << ps.len() {
                        out.push(graph_from_edges(
                            StructureKind::Graph,
                            n,
                            &subsets(&ps, mask),
                        ));
                    }
                }
                out
            }
            Generator::Paths { max_n } => (1..=*max_n).map(path).collect(),
            Generator::Cycles { max_n } => (3..=*max_n).map(cycle).collect(),
            Generator::Wheels { max_n } => (4..=*max_n).map(wheel).collect(),
            Generator::RandomGraphs { n, p, count, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..*count)
                    .map(|_| {
                        let edges: Vec<_> =
                            pairs(*n).into_iter().filter(|_| rng.gen_bool(*p)).collect();
                        graph_from_edges(StructureKind::Graph, *n, &edges)
                    })
                    .collect()
            }
            Generator::AllDigraphs { max_n, acyclic } => {
                let mut out = Vec::new();
                for n in 1..=*max_n {
                    let ps = ordered_pairs(n);
                    if ps.len() > 24 {
                        return Err(Error::Parameter(format!(
                            "{n} vertices is too many to enumerate"
                        )));
                    }
                    for mask in 0..1u64 << ps.len() {
                        let edges = subsets(&ps, mask);
                        if !*acyclic || is_acyclic(n, &edges) {
                            out.push(graph_from_edges(StructureKind::Digraph, n, &edges));
                        }
                    }
                }
                out
            }
            Generator::RandomDigraphs {
                n,
                p,
                count,
                seed,
                acyclic,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..*count)
                    .map(|_| {
                        let candidates = if *acyclic {
                            pairs(*n)
                        } else {
                            ordered_pairs(*n)
                        };
                        let edges: Vec<_> = candidates
                            .into_iter()
                            .filter(|_| rng.gen_bool(*p))
                            .collect();
                        graph_from_edges(StructureKind::Digraph, *n, &edges)
                    })
                    .collect()
            }
            Generator::Tournaments { max_n } => {
                let mut out = Vec::new();
                for n in 1..=*max_n {
                    let ps = pairs(n);
                    if ps.len() > 24 {
                        return Err(Error::Parameter(format!(
                            "{n} vertices is too many to enumerate"
                        )));
                    }
                    for mask in 0..1u64 << ps.len() {
                        let edges: Vec<_> = ps
                            .iter()
                            .enumerate()
                            .map(|(k, &(i, j))| if mask >> k & 1 == 1 { (j, i) } else { (i, j) })
                            .collect();
                        out.push(graph_from_edges(StructureKind::Digraph, n, &edges));
                    }
                }
                out
            }
            Generator::TransitiveTournaments { max_n } => (1..=*max_n)
                .map(|n| graph_from_edges(StructureKind::Digraph, n, &pairs(n)))
                .collect(),
        };
        if dedup {
            let mut seen = HashSet::new();
            out.retain(|s| seen.insert((s.kind(), s.vertex_count(), canonical_code(s))));
        }
        Ok(out)
    }
}

/// Which post sets to try for models that take posts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PostChoice {
    /// Every subset, in binary order.
    AllSubsets,
    /// The posts marked on each structure.
    FromStructure,
    /// A fixed set of vertex names.
    Fixed(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairChoice {
    /// Every ordered pair, including `u = v`.
    All,
    Fixed(String, String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchTask {
    pub generator: Generator,
    pub model: Model,
    pub posts: PostChoice,
    pub pairs: PairChoice,
    /// Maximum number of (structure, post set) instances to evaluate.
    pub budget: Option<usize>,
    pub dedup: bool,
    /// Stop evaluating a structure after its first violation.
    pub early_exit: bool,
    /// Monte Carlo samples for instances above the enumeration cap; such
    /// instances are skipped when `None`.
    pub mc_samples: Option<u64>,
    pub seed: u64,
    pub enumeration: EnumerationOptions,
}

impl SearchTask {
    pub fn new(generator: Generator, model: Model) -> Self {
        SearchTask {
            generator,
            model,
            posts: PostChoice::AllSubsets,
            pairs: PairChoice::All,
            budget: None,
            dedup: false,
            early_exit: false,
            mc_samples: None,
            seed: 0,
            enumeration: EnumerationOptions::default(),
        }
    }
}

/// Evidence of a violation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    Exact(GapResult),
    Estimate(GapEstimate),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    /// The structure in file format, posts marked.
    pub structure: String,
    pub model: Model,
    pub posts: Vec<String>,
    pub doubles: usize,
    pub u: String,
    pub v: String,
    pub evidence: Evidence,
}

impl Finding {
    pub fn gap_f64(&self) -> f64 {
        match &self.evidence {
            Evidence::Exact(g) => g.gap.to_f64(),
            Evidence::Estimate(e) => e.mean_gap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchSummary {
    pub structures: usize,
    pub instances: usize,
    pub exact_instances: usize,
    pub estimated_instances: usize,
    pub skipped_instances: usize,
    pub pairs_checked: usize,
    /// Largest exact gap seen (`p_cross - p_same`).
    pub max_exact_gap: Option<Dyadic>,
    pub findings: usize,
    /// False when the budget stopped the search.
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub findings: Vec<Finding>,
    pub summary: SearchSummary,
}

fn instance_for(model: Model, s: &Structure) -> crate::bunkbed::BunkbedInstance {
    model.instance(s.clone())
}

fn post_sets(task: &SearchTask, s: &Structure) -> Result<Vec<BTreeSet<usize>>> {
    if !task.model.takes_posts() {
        return Ok(vec![BTreeSet::new()]);
    }
    match &task.posts {
        PostChoice::AllSubsets => {
            let n = s.vertex_count();
            if n > 20 {
                return Err(Error::Parameter(
                    "too many vertices to try every post set".into(),
                ));
            }
            Ok((0..1u64 << n)
                .map(|m| (0..n).filter(|&v| m >> v & 1 == 1).collect())
                .collect())
        }
        PostChoice::FromStructure => Ok(vec![s.posts().clone()]),
        PostChoice::Fixed(list) => Ok(vec![s.vertex_indices(list)?.into_iter().collect()]),
    }
}

struct InstanceResult {
    findings: Vec<Finding>,
    pairs: usize,
    max_gap: Option<Dyadic>,
    exact: bool,
    estimated: bool,
}

fn evaluate(task: &SearchTask, s: &Structure, posts: &BTreeSet<usize>) -> Result<InstanceResult> {
    let b = instance_for(task.model, s);
    let fam = Family::new(ModelSpec::new(task.model, posts.iter().copied()), &b)?;
    let n = s.vertex_count();
    let pair_list: Vec<(usize, usize)> = match &task.pairs {
        PairChoice::All => (0..n).flat_map(|u| (0..n).map(move |v| (u, v))).collect(),
        PairChoice::Fixed(u, v) => vec![(s.vertex_index(u)?, s.vertex_index(v)?)],
    };
    let mut marked = s.clone();
    marked.set_posts(posts.iter().copied());
    let finding = |u: usize, v: usize, evidence: Evidence| Finding {
        structure: marked.to_text(),
        model: task.model,
        posts: posts
            .iter()
            .map(|&p| s.vertex_name(p).to_string())
            .collect(),
        doubles: s.doubles().len(),
        u: s.vertex_name(u).to_string(),
        v: s.vertex_name(v).to_string(),
        evidence,
    };
    let mut res = InstanceResult {
        findings: Vec::new(),
        pairs: pair_list.len(),
        max_gap: None,
        exact: false,
        estimated: false,
    };
    if fam.free_count() <= task.enumeration.cap {
        res.exact = true;
        let all = match &task.pairs {
            PairChoice::All => exact_all_pairs(&fam, task.enumeration)?,
            PairChoice::Fixed(..) => {
                let (u, v) = pair_list[0];
                let g = crate::exact::exact_gap_with(&fam, u, v, task.enumeration)?;
                let mut grid = vec![vec![g; n]; n];
                grid[u][v] = g;
                grid
            }
        };
        for &(u, v) in &pair_list {
            let g = all[u][v];
            res.max_gap = Some(res.max_gap.map_or(g.gap, |m: Dyadic| m.max(g.gap)));
            if g.violation {
                res.findings.push(finding(u, v, Evidence::Exact(g)));
                if task.early_exit {
                    break;
                }
            }
        }
    } else if let Some(samples) = task.mc_samples {
        res.estimated = true;
        for &(u, v) in &pair_list {
            let est = estimate_gap(
                &fam,
                u,
                v,
                McOptions {
                    threads: task.enumeration.threads,
                    ..McOptions::new(samples, task.seed)
                },
            )?;
            if est.ci.low > 0.0 {
                res.findings.push(finding(u, v, Evidence::Estimate(est)));
                if task.early_exit {
                    break;
                }
            }
        }
    }
    Ok(res)
}

/// Runs a search. Instances are evaluated in parallel and merged in
/// generation order, so the outcome is deterministic.
pub fn run_search(task: &SearchTask) -> Result<SearchOutcome> {
    let structures = task.generator.generate(task.dedup)?;
    let mut work: Vec<(usize, BTreeSet<usize>)> = Vec::new();
    let mut complete = true;
    'outer: for (i, s) in structures.iter().enumerate() {
        for posts in post_sets(task, s)? {
            if task.budget.is_some_and(|b| work.len() >= b) {
                complete = false;
                break 'outer;
            }
            work.push((i, posts));
        }
    }
    let results: Vec<Result<InstanceResult>> = work
        .par_iter()
        .map(|(i, posts)| evaluate(task, &structures[*i], posts))
        .collect();
    let mut summary = SearchSummary {
        structures: work.iter().map(|(i, _)| *i).collect::<BTreeSet<_>>().len(),
        instances: work.len(),
        exact_instances: 0,
        estimated_instances: 0,
        skipped_instances: 0,
        pairs_checked: 0,
        max_exact_gap: None,
        findings: 0,
        complete,
    };
    let mut findings = Vec::new();
    let mut done_structures = BTreeSet::new();
    for ((i, _), r) in work.iter().zip(results) {
        let r = r?;
        if task.early_exit && done_structures.contains(i) {
            continue;
        }
        summary.pairs_checked += r.pairs;
        summary.exact_instances += usize::from(r.exact);
        summary.estimated_instances += usize::from(r.estimated);
        summary.skipped_instances += usize::from(!r.exact && !r.estimated);
        if let Some(g) = r.max_gap {
            summary.max_exact_gap = Some(summary.max_exact_gap.map_or(g, |m| m.max(g)));
        }
        if !r.findings.is_empty() {
            done_structures.insert(*i);
        }
        findings.extend(r.findings);
    }
    summary.findings = findings.len();
    Ok(SearchOutcome { findings, summary })
}

/// A graph whose posts form a vertex cut between `u` and `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct CutInstance {
    pub structure: Structure,
    pub u: usize,
    pub v: usize,
}

fn separated(s: &Structure, u: usize, v: usize, removed: &BTreeSet<usize>) -> bool {
    let mut seen = BTreeSet::from([u]);
    let mut stack = vec![u];
    while let Some(x) = stack.pop() {
        for y in s.neighbours(x) {
            if !removed.contains(&y) && seen.insert(y) {
                stack.push(y);
            }
        }
    }
    !seen.contains(&v)
}

/// Random connected pairs in G(n, p) graphs, `3 <= n <= max_n`, with a random
/// post set that separates them. Deterministic given the seed.
pub fn random_cut_instances(count: usize, max_n: usize, seed: u64) -> Result<Vec<CutInstance>> {
    if max_n < 3 {
        return Err(Error::Parameter(
            "a vertex cut needs at least 3 vertices".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let n = rng.gen_range(3..=max_n);
        let p = rng.gen_range(0.3..0.8);
        let edges: Vec<_> = pairs(n).into_iter().filter(|_| rng.gen_bool(p)).collect();
        let mut s = graph_from_edges(StructureKind::Graph, n, &edges);
        let u = rng.gen_range(0..n);
        let v = (u + rng.gen_range(1..n)) % n;
        if separated(&s, u, v, &BTreeSet::new()) {
            continue;
        }
        let posts: BTreeSet<usize> = (0..n)
            .filter(|&x| x != u && x != v && rng.gen_bool(0.5))
            .collect();
        if !separated(&s, u, v, &posts) {
            continue;
        }
        s.set_posts(posts);
        out.push(CutInstance { structure: s, u, v });
    }
    Ok(out)
}

/// The families covered by the positive result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PositiveFamily {
    Path,
    Cycle,
    Wheel,
}

impl std::str::FromStr for PositiveFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path" | "paths" => Ok(PositiveFamily::Path),
            "cycle" | "cycles" => Ok(PositiveFamily::Cycle),
            "wheel" | "wheels" => Ok(PositiveFamily::Wheel),
            other => Err(Error::Parameter(format!(
                "unknown family `{other}` (path, cycle, wheel)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositiveReport {
    pub family: PositiveFamily,
    pub n_max: usize,
    /// (model, instances, pairs checked, largest gap) per model.
    pub per_model: Vec<(Model, usize, usize, Option<Dyadic>)>,
    pub violations: Vec<Finding>,
}

impl PositiveReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Exact check of every member up to `n_max`, every pair, under E1 and under
/// E2 with every post set.
pub fn verify_positive_families(
    family: PositiveFamily,
    n_max: usize,
    enumeration: EnumerationOptions,
) -> Result<PositiveReport> {
    if 2 * n_max > enumeration.cap {
        return Err(Error::EnumerationCap {
            free: 2 * n_max,
            cap: enumeration.cap,
        });
    }
    let generator = match family {
        PositiveFamily::Path => Generator::Paths { max_n: n_max },
        PositiveFamily::Cycle => Generator::Cycles { max_n: n_max },
        PositiveFamily::Wheel => Generator::Wheels { max_n: n_max },
    };
    let mut per_model = Vec::new();
    let mut violations = Vec::new();
    for model in [Model::E1, Model::E2] {
        let task = SearchTask {
            enumeration,
            ..SearchTask::new(generator.clone(), model)
        };
        let out = run_search(&task)?;
        per_model.push((
            model,
            out.summary.instances,
            out.summary.pairs_checked,
            out.summary.max_exact_gap,
        ));
        violations.extend(out.findings);
    }
    Ok(PositiveReport {
        family,
        n_max,
        per_model,
        violations,
    })
}

/// Node reference helper used by reports: `name^(bunk)`.
pub fn describe(s: &Structure, node: NodeRef) -> String {
    format!("{}^({})", s.vertex_name(node.vertex), node.bunk.index())
}
