use std::collections::BTreeSet;

use bunkbed::bunkbed::NodeRef;
use bunkbed::connectivity::{classify, Reacher};
use bunkbed::exact::{exact_gap_with, exact_probability_with, EnumerationOptions};
use bunkbed::montecarlo::query;
use bunkbed::rng::StreamSource;
use bunkbed::search::random_cut_instances;
use bunkbed::symmetry::{all_members, lemma_check};
use bunkbed::{build_bunkbed, parse_structure, Family, Model, ModelSpec, Structure, StructureKind};
use fixedbitset::FixedBitSet;
use proptest::prelude::*;

fn structure(
    kind: StructureKind,
    n: usize,
    edges: &[Vec<usize>],
    posts: &[bool],
    doubles: &[bool],
) -> Structure {
    let mut s = Structure::new(kind);
    for i in 0..n {
        s.add_vertex(&format!("v{i}")).unwrap();
    }
    for e in edges {
        let id = s.add_edge(e.clone()).unwrap();
        if kind == StructureKind::Digraph && doubles.get(id).copied().unwrap_or(false) {
            s.set_double(id).unwrap();
        }
    }
    s.set_posts((0..n).filter(|&v| posts.get(v).copied().unwrap_or(false)));
    s
}

fn graph_strategy(max_n: usize) -> impl Strategy<Value = (usize, Vec<Vec<usize>>)> {
    (2..=max_n).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let m = pairs.len();
        (Just(n), proptest::collection::vec(any::<bool>(), m)).prop_map(move |(n, keep)| {
            (
                n,
                pairs
                    .iter()
                    .zip(keep)
                    .filter(|(_, k)| *k)
                    .map(|(&(a, b), _)| vec![a, b])
                    .collect(),
            )
        })
    })
}

fn any_structure() -> impl Strategy<Value = Structure> {
    (0usize..3, 2usize..7).prop_flat_map(|(kind, n)| {
        let kind = [
            StructureKind::Graph,
            StructureKind::Hypergraph,
            StructureKind::Digraph,
        ][kind];
        let edge = move || -> BoxedStrategy<Vec<usize>> {
            match kind {
                StructureKind::Hypergraph => {
                    proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 2..=n.min(4)).boxed()
                }
                StructureKind::Digraph => (0..n, 0..n)
                    .prop_filter("no loops", |(a, b)| a != b)
                    .prop_map(|(a, b)| vec![a, b])
                    .boxed(),
                StructureKind::Graph => (0..n, 0..n)
                    .prop_filter("no loops", |(a, b)| a != b)
                    .prop_map(|(a, b)| vec![a.min(b), a.max(b)])
                    .boxed(),
            }
        };
        (
            proptest::collection::vec(edge(), 0..8),
            proptest::collection::vec(any::<bool>(), n),
            proptest::collection::vec(any::<bool>(), 8),
        )
            .prop_map(move |(mut edges, posts, doubles)| {
                if kind == StructureKind::Graph {
                    let mut seen = BTreeSet::new();
                    edges.retain(|e| seen.insert(e.clone()));
                }
                structure(kind, n, &edges, &posts, &doubles)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn text_round_trip(s in any_structure()) {
        let text = s.to_text();
        let back = parse_structure(&text).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(back.to_text(), text);
    }

    #[test]
    fn element_count(s in any_structure()) {
        let b = build_bunkbed(s.clone());
        prop_assert_eq!(b.elements().len(), 2 * s.edge_count() + s.vertex_count());
        if s.kind() == StructureKind::Digraph {
            let split = Model::E8.instance(s.clone());
            prop_assert_eq!(split.elements().len(), 2 * s.edge_count() + 2 * s.vertex_count());
        }
    }

    #[test]
    fn adding_a_bond_never_disconnects((n, edges) in graph_strategy(5), seed in any::<u64>()) {
        let s = structure(StructureKind::Graph, n, &edges, &[], &[]);
        let b = build_bunkbed(s);
        let fam = Family::new(ModelSpec::unconditioned(Model::E0), &b).unwrap();
        let c = fam.sample(&StreamSource::new(seed), 0);
        let closed: Vec<usize> = (0..fam.free_count()).filter(|&i| !c.free_bits().contains(i)).collect();
        prop_assume!(!closed.is_empty());
        let mut more: FixedBitSet = c.free_bits().clone();
        more.insert(closed[(seed % closed.len() as u64) as usize]);
        let bigger = fam.realize(&more).unwrap();
        let mut r = Reacher::new(&b);
        for x in 0..b.node_count() {
            let before = r.reach_from(&b, &c, x).clone();
            let after = r.reach_from(&b, &bigger, x).clone();
            prop_assert!(before.is_subset(&after));
        }
    }

    #[test]
    fn swapping_bunks_preserves_probabilities((n, edges) in graph_strategy(4), u in 0usize..4, v in 0usize..4) {
        let (u, v) = (u % n, v % n);
        let b = build_bunkbed(structure(StructureKind::Graph, n, &edges, &[], &[]));
        let fam = Family::new(ModelSpec::unconditioned(Model::E0), &b).unwrap();
        let opts = EnumerationOptions::default();
        let p = |a: NodeRef, z: NodeRef| exact_probability_with(&fam, &query(&fam, a, z), opts).unwrap().value();
        prop_assert_eq!(p(NodeRef::lower(u), NodeRef::lower(v)), p(NodeRef::upper(u), NodeRef::upper(v)));
        prop_assert_eq!(p(NodeRef::lower(u), NodeRef::upper(v)), p(NodeRef::upper(u), NodeRef::lower(v)));
    }
}

/// Quasi-posts by definition: a post, or a vertex on a closed walk through a
/// post using only arcs retained in both bunks.
fn brute_quasi_posts(
    n: usize,
    posts: &BTreeSet<usize>,
    arcs: &[(usize, usize)],
) -> BTreeSet<usize> {
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(a, b) in arcs {
        reach[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    (0..n)
        .filter(|&v| posts.iter().any(|&y| reach[v][y] && reach[y][v]))
        .collect()
}

#[test]
fn classification_matches_brute_force_on_six_vertex_digraphs() {
    let generator = bunkbed::search::Generator::RandomDigraphs {
        n: 6,
        p: 0.45,
        count: 40,
        seed: 11,
        acyclic: false,
    };
    for (i, s) in generator.generate(false).unwrap().into_iter().enumerate() {
        let b = Model::E7.instance(s);
        let fam = Family::new(ModelSpec::unconditioned(Model::E7), &b).unwrap();
        let base = b.base();
        for j in 0..50 {
            let c = fam.sample(&StreamSource::new(i as u64), j);
            let cls = classify(&b, &c);
            let posts: BTreeSet<usize> = (0..6)
                .filter(|&v| b.verticals(v).all(|e| c.is_retained(&b, e)))
                .collect();
            let arcs: Vec<(usize, usize)> = (0..base.edge_count())
                .filter(|&e| {
                    bunkbed::bunkbed::Bunk::BOTH
                        .iter()
                        .all(|&bk| c.is_retained(&b, b.horizontal(e, bk)))
                })
                .map(|e| (base.edge(e)[0], base.edge(e)[1]))
                .collect();
            assert_eq!(cls.posts, posts);
            assert_eq!(
                cls.quasi_posts,
                brute_quasi_posts(6, &posts, &arcs),
                "digraph {i}, sample {j}"
            );
        }
    }
}

#[test]
fn post_cut_gives_zero_gap_and_mirror_pairs_classes() {
    for inst in random_cut_instances(30, 7, 21).unwrap() {
        let s = inst.structure.clone();
        let spec = ModelSpec::from_structure(Model::E2, &s);
        let b = build_bunkbed(s);
        let fam = Family::new(spec, &b).unwrap();
        let g = exact_gap_with(&fam, inst.u, inst.v, EnumerationOptions::default()).unwrap();
        assert!(g.gap.is_zero(), "{}", inst.structure.to_text());
        let members = all_members(&fam).unwrap();
        let rep = lemma_check(&fam, &members, inst.u, inst.v).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }
}
