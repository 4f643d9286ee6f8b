use bunkbed::bunkbed::NodeRef;
use bunkbed::constructions::{build_g2, build_h4};
use bunkbed::exact::{exact_gap_with, EnumerationOptions};
use bunkbed::montecarlo::{estimate_gap, estimate_probability, query, McOptions};
use bunkbed::{Family, Model, ModelSpec};

#[test]
fn g2_site_estimates_agree_with_enumeration() {
    let s = build_g2();
    let b = Model::E1.instance(s);
    let fam = Family::new(ModelSpec::unconditioned(Model::E1), &b).unwrap();
    let (u, v) = (
        b.base().vertex_index("v1").unwrap(),
        b.base().vertex_index("v9").unwrap(),
    );
    let exact = exact_gap_with(&fam, u, v, EnumerationOptions::default()).unwrap();
    let est = estimate_gap(&fam, u, v, McOptions::new(1_000_000, 17)).unwrap();
    for (p, hat) in [
        (exact.p_same.to_f64(), est.p_same),
        (exact.p_cross.to_f64(), est.p_cross),
    ] {
        let sigma = (p * (1.0 - p) / est.n as f64).sqrt();
        assert!((hat - p).abs() <= 3.0 * sigma, "{hat} vs {p}");
    }
}

#[test]
fn h4_cross_probability_estimate() {
    let s = build_h4();
    let spec = ModelSpec::from_structure(Model::E4, &s);
    let b = Model::E4.instance(s);
    let fam = Family::new(spec, &b).unwrap();
    let (u, v) = (
        b.base().vertex_index("u1").unwrap(),
        b.base().vertex_index("u10").unwrap(),
    );
    let est = estimate_probability(
        &fam,
        &query(&fam, NodeRef::lower(u), NodeRef::upper(v)),
        McOptions::new(1_000_000, 5),
    )
    .unwrap();
    let p = 13.0 / 64.0;
    assert!((est.estimate - p).abs() <= 3.0 * (p * (1.0 - p) / 1e6).sqrt());
    assert!(est.ci.contains(p) && est.wilson.contains(p));
}

#[test]
fn gap_intervals_cover_at_nominal_rate() {
    let s = build_g2();
    let spec = ModelSpec::from_structure(Model::E2, &s);
    let b = Model::E2.instance(s);
    let fam = Family::new(spec, &b).unwrap();
    let (u, v) = (
        b.base().vertex_index("v1").unwrap(),
        b.base().vertex_index("v9").unwrap(),
    );
    let exact = exact_gap_with(&fam, u, v, EnumerationOptions::default())
        .unwrap()
        .gap
        .to_f64();
    let runs = 100;
    let covered = (0..runs)
        .filter(|&seed| {
            let opts = McOptions {
                confidence: 0.95,
                ..McOptions::new(20_000, 1000 + seed)
            };
            let e = estimate_gap(&fam, u, v, opts).unwrap();
            e.ci.contains(exact) && e.hoeffding.contains(exact)
        })
        .count();
    // 95% nominal; allow about three binomial standard deviations of slack
    assert!(covered >= 89, "coverage {covered}/{runs}");
}
