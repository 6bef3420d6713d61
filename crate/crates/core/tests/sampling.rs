use signmix::bench::alternating_fixture;
use signmix::component::{Component, Family};
use signmix::invcdf::InverseCdf;
use signmix::io::{parse_model, write_model};
use signmix::mixture::{vanilla_sample_model, SignedMixture, Term};
use signmix::modelgen::{generate, GenMethod, GenSpec};
use signmix::pair::TwoComponentPair;
use signmix::pairing::optimal_pairing;
use signmix::rng::RngStream;
use signmix::stats::{ks_critical, ks_statistic, ks_two_sample, ks_two_sample_critical};
use signmix::validate::{validate_model, Issue};

fn three_sigma(p: f64, n: usize) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn vanilla_acceptance_on_fixtures() {
    for family in [Family::Normal, Family::Gamma] {
        let m = alternating_fixture(family).model;
        let p = 1.0 / m.positive_total();
        let mut rng = RngStream::new(31);
        let n = 10_000;
        let (_, proposed) = vanilla_sample_model(&m, n, &mut rng);
        // geometric counts: acceptance estimate n / proposals
        let hat = n as f64 / proposed as f64;
        assert!(
            (hat - p).abs() < 3.0 * p * (1.0 - p).sqrt() / (n as f64).sqrt() * 1.5,
            "{hat} vs {p}"
        );
    }
}

#[test]
fn pair_vanilla_acceptance() {
    let pair = TwoComponentPair::new(
        Component::normal(0.0, 1.0),
        Component::normal(0.0, 0.25),
        2.0,
    )
    .unwrap();
    let mut rng = RngStream::new(32);
    let n = 10_000;
    let proposals: u64 = (0..n).map(|_| pair.vanilla_sample(&mut rng).1).sum();
    let hat = n as f64 / proposals as f64;
    assert!((hat - 0.5).abs() < 0.01 + three_sigma(0.5, n), "{hat}");
}

#[test]
fn stratified_pair_acceptance_and_law() {
    let pair = TwoComponentPair::new(
        Component::normal(0.0, 1.0),
        Component::normal(0.0, 0.25),
        2.0,
    )
    .unwrap();
    let part = pair.build_partition(0.6, 0.2).unwrap();
    let mut rng = RngStream::new(33);
    let n = 10_000;
    let mut proposals = 0;
    let mut xs = Vec::with_capacity(n);
    for _ in 0..n {
        let (x, k) = part.sample(&mut rng);
        proposals += k;
        xs.push(x);
    }
    assert!(n as f64 / proposals as f64 >= 0.57);
    let cdf = |x: f64| pair.mass(f64::NEG_INFINITY, x);
    assert!(ks_statistic(&xs, cdf) < ks_critical(n));
}

#[test]
fn gamma_pair_with_origin_singularity() {
    // shape below one: both densities diverge at zero
    let pair = TwoComponentPair::saturated(Component::gamma(0.6, 1.0), Component::gamma(0.7, 1.5))
        .unwrap();
    let part = pair.build_partition(0.8, 0.1).unwrap();
    assert!(part.acceptance() >= 0.8);
    // median over independent streams, so one 1% tail event cannot fail it
    let mut ds: Vec<f64> = (0..5)
        .map(|s| {
            let mut rng = RngStream::new(34).derive(s);
            let xs: Vec<f64> = (0..10_000).map(|_| part.sample(&mut rng).0).collect();
            assert!(xs.iter().all(|&x| x >= 0.0));
            ks_statistic(&xs, |x| pair.mass(0.0, x.max(0.0)))
        })
        .collect();
    ds.sort_by(f64::total_cmp);
    assert!(ds[2] < ks_critical(10_000), "{ds:?}");
}

#[test]
fn stratified_agrees_with_vanilla_on_fixture() {
    let m = alternating_fixture(Family::Gamma).model;
    let p = optimal_pairing(&m, 0.8, 0.2).unwrap();
    let mut rng = RngStream::new(35);
    let (a, _) = p.sample_n(5000, &mut rng).unwrap();
    let (b, _) = vanilla_sample_model(&m, 5000, &mut rng);
    assert!(ks_two_sample(&a, &b) < ks_two_sample_critical(5000, 5000));
}

#[test]
fn negative_residual_model_is_exact() {
    let g = generate(&GenSpec {
        family: Family::Normal,
        k_range: (5, 10),
        p_range: (0.1, 0.2),
        method: GenMethod::Repaired,
        seed: 36,
    })
    .unwrap();
    let p = optimal_pairing(&g.model, 0.6, 0.2).unwrap();
    assert!(p.has_negative_residual());
    let mut rng = RngStream::new(36);
    let (xs, proposed) = p.sample_n(10_000, &mut rng).unwrap();
    assert!(ks_statistic(&xs, |x| g.model.cdf(x)) < ks_critical(xs.len()));
    let expect = p.expected_proposals().unwrap();
    let measured = proposed as f64 / 1e4;
    assert!(
        (measured / expect - 1.0).abs() < 0.1,
        "{measured} vs {expect}"
    );
}

#[test]
fn sampling_is_deterministic() {
    let m = alternating_fixture(Family::Normal).model;
    let run = |seed| {
        let p = optimal_pairing(&m, 0.6, 0.2).unwrap();
        let mut rng = RngStream::new(seed);
        p.sample_n(200, &mut rng).unwrap()
    };
    assert_eq!(run(5), run(5));
    assert_ne!(run(5).0, run(6).0);
}

#[test]
fn inverse_cdf_on_gamma_fixture() {
    let m = alternating_fixture(Family::Gamma).model;
    let inv = InverseCdf::with_defaults(&m).unwrap();
    let mut rng = RngStream::new(37);
    for _ in 0..300 {
        let u = rng.open01();
        let q = inv.quantile(u).unwrap();
        assert!((m.cdf(q.x) - u).abs() < 1e-10);
    }
    for u in [1e-13, 1.0 - 1e-13] {
        let q = inv.quantile(u).unwrap();
        assert!((m.cdf(q.x) - u).abs() < 1e-10, "u {u}");
    }
}

#[test]
fn validation_flags_negative_models() {
    // 2·N(0,1) − N(0,0.25) dips below zero at the mode only when the
    // negative weight is too large
    let bad = SignedMixture::new(
        vec![Term::new(1.5, Component::normal(0.0, 1.0))],
        vec![Term::new(1.0, Component::normal(0.0, 0.25))],
    )
    .unwrap();
    let r = validate_model(&bad);
    assert!(!r.is_valid());
    assert!(r.issues.iter().any(|i| matches!(i, Issue::Negative { .. })));

    let unnormalized = SignedMixture::new(
        vec![Term::new(4.0, Component::normal(0.0, 1.0))],
        vec![Term::new(2.0, Component::normal(0.0, 0.25))],
    )
    .unwrap();
    let r = validate_model(&unnormalized);
    assert!(r.is_valid() && !r.is_normalized());
    let n = r.normalized.unwrap();
    assert!((n.total_weight() - 1.0).abs() < 1e-15);
}

#[test]
fn model_files_roundtrip() {
    for family in [Family::Normal, Family::Gamma] {
        let m = alternating_fixture(family).model;
        let back = parse_model(&write_model(&m)).unwrap();
        assert_eq!(back, m);
    }
    let g = generate(&GenSpec {
        family: Family::Gamma,
        k_range: (10, 30),
        p_range: (0.01, 0.05),
        method: GenMethod::Saturated,
        seed: 38,
    })
    .unwrap();
    assert_eq!(parse_model(&g.to_file()).unwrap(), g.model);
}
