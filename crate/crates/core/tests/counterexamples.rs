use std::collections::BTreeSet;

use bunkbed::bunkbed::{Bunk, NodeRef};
use bunkbed::connectivity::Reacher;
use bunkbed::constructions::{
    blow_up_g1, build_d6, build_d7, build_g2, build_h4, build_h5, d7_stated_edge_count,
    validate_counterexample_transcriptions,
};
use bunkbed::exact::{exact_gap, table1, Dyadic, Table1Row, TABLE1_EXPECTED};
use bunkbed::{build_bunkbed, Family, Model, ModelSpec};

fn gap(s: bunkbed::Structure, model: Model, u: &str, v: &str) -> bunkbed::exact::GapResult {
    let spec = ModelSpec::from_structure(model, &s);
    let b = model.instance(s);
    let (u, v) = (
        b.base().vertex_index(u).unwrap(),
        b.base().vertex_index(v).unwrap(),
    );
    exact_gap(&spec, &b, u, v).unwrap()
}

#[test]
fn g2_gives_twelve_and_thirteen_sixty_fourths() {
    let g = gap(build_g2(), Model::E2, "v1", "v9");
    assert_eq!(g.p_same.value(), Dyadic::new(12, 6).unwrap());
    assert_eq!(g.p_cross.value(), Dyadic::new(13, 6).unwrap());
    assert_eq!(g.gap, Dyadic::new(1, 6).unwrap());
    assert!(g.violation);
}

#[test]
fn g2_family_has_sixty_four_members() {
    let g = build_g2();
    let spec = ModelSpec::from_structure(Model::E2, &g);
    let b = build_bunkbed(g);
    assert_eq!(Family::new(spec, &b).unwrap().free_count(), 6);
}

#[test]
fn case_table_rows_and_aggregates() {
    let rows = table1(&build_bunkbed(build_g2())).unwrap();
    let rendered: Vec<String> = rows.iter().map(Table1Row::render).collect();
    assert_eq!(rendered, TABLE1_EXPECTED);
    let with = |b: Bunk| rows.iter().filter(|r| r.v9_reachable.contains(&b)).count();
    assert_eq!((with(Bunk::Lower), with(Bunk::Upper)), (4, 5));
    // with v1 lower there are 32 configurations: the v5-lower half contributes
    // 8 to each bunk and the table rows the rest, giving 12/32 and 13/32
    assert_eq!((8 + with(Bunk::Lower), 8 + with(Bunk::Upper)), (12, 13));
}

#[test]
fn hypergraph_dual_matches_graph() {
    let h = gap(build_h4(), Model::E4, "u1", "u10");
    let g = gap(build_g2(), Model::E2, "v1", "v9");
    assert_eq!(
        (h.p_same.value(), h.p_cross.value()),
        (g.p_same.value(), g.p_cross.value())
    );
}

#[test]
fn gadget_digraph_matches_hypergraph() {
    let d = gap(build_d6(), Model::E6, "u1", "u10");
    let h = gap(build_h4(), Model::E4, "u1", "u10");
    assert_eq!(
        (d.p_same.value(), d.p_cross.value()),
        (h.p_same.value(), h.p_cross.value())
    );
}

#[test]
fn gadget_bunk_decides_member_connectivity() {
    let h = build_h4();
    let d = build_d6();
    let spec = ModelSpec::from_structure(Model::E6, &d);
    let b = Model::E6.instance(d);
    let fam = Family::new(spec, &b).unwrap();
    assert_eq!(fam.free_count(), 6);
    let base = b.base();
    let mut reacher = Reacher::new(&b);
    for index in 0..64 {
        let c = fam.realize_index(index);
        for (f, members) in h.edges().iter().enumerate() {
            let (x, y) = (
                base.vertex_index(&format!("x{}", f + 1)).unwrap(),
                base.vertex_index(&format!("y{}", f + 1)).unwrap(),
            );
            let arc = (0..base.edge_count())
                .find(|&e| base.edge(e) == [x, y])
                .expect("gadget arc");
            let bunks: Vec<Bunk> = Bunk::BOTH
                .into_iter()
                .filter(|&bk| c.is_retained(&b, b.horizontal(arc, bk)))
                .collect();
            assert_eq!(bunks.len(), 1, "single edge sits in exactly one bunk");
            let bunk = bunks[0];
            for &a in members {
                let from = b.node_id(NodeRef::new(
                    base.vertex_index(h.vertex_name(a)).unwrap(),
                    bunk,
                ));
                for &z in members {
                    let to = b.node_id(NodeRef::new(
                        base.vertex_index(h.vertex_name(z)).unwrap(),
                        bunk,
                    ));
                    assert!(
                        reacher.connects(&b, &c, from, to),
                        "config {index}, edge {f}"
                    );
                }
            }
        }
    }
}

#[test]
fn transcriptions_validate() {
    let rep = validate_counterexample_transcriptions();
    assert!(rep.passed(), "{:?}", rep.failures().collect::<Vec<_>>());
}

#[test]
fn builders_are_deterministic_and_sized() {
    assert_eq!(blow_up_g1(33).unwrap().vertex_count(), 6 + 3 * 33);
    assert_eq!(build_h5(102).unwrap().vertex_count(), 316);
    assert_eq!(build_h5(102).unwrap(), build_h5(102).unwrap());
    let d = build_d7(690).unwrap();
    assert_eq!(d.vertex_count(), 2092);
    assert!(d.posts().is_empty() && d.doubles().is_empty());
    // the construction also carries 2k gadget arcs per post
    assert_eq!(d.edge_count(), d7_stated_edge_count(690) + 6 * 690);
}

#[test]
fn blown_up_structures_carry_no_conditioning() {
    for s in [
        blow_up_g1(3).unwrap(),
        build_h5(3).unwrap(),
        build_d7(3).unwrap(),
    ] {
        assert!(s.posts().is_empty());
        let names: BTreeSet<&str> = s.vertices().iter().map(String::as_str).collect();
        assert_eq!(names.len(), s.vertex_count());
    }
}
