//! Acceptance suite: prints one PASS/FAIL line per criterion. Failures are
//! reported but only fail the process when SIGNMIX_ACCEPTANCE_STRICT is set,
//! so `cargo test --workspace` stays usable while the report stays visible.

use std::process::ExitCode;
use std::time::Instant;

use signmix::bench::{alternating_fixture, run_compare, Method, RunConfig};
use signmix::component::{Component, Family};
use signmix::invcdf::InverseCdf;
use signmix::mixture::SignedMixture;
use signmix::modelgen::{generate, GenMethod, GenSpec, P_BRACKETS};
use signmix::pair::{a_star, TwoComponentPair};
use signmix::pairing::optimal_pairing;
use signmix::rng::RngStream;
use signmix::stats::{ks_critical, ks_statistic};

const DELTAS: [f64; 3] = [0.4, 0.6, 0.8];
const FAMILIES: [Family; 2] = [Family::Normal, Family::Gamma];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn uniform(rng: &mut RngStream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.open01()
}

/// Random admissible (f, g) for a family.
fn random_pair(family: Family, rng: &mut RngStream) -> (Component, Component) {
    match family {
        Family::Normal => {
            let v = uniform(rng, 0.2, 9.0);
            let f = Component::normal(uniform(rng, -10.0, 10.0), v);
            let sd = v.sqrt();
            let g = Component::normal(
                f.p1() + uniform(rng, -1.0, 1.0) * sd,
                v * uniform(rng, 0.3, 0.95),
            );
            (f, g)
        }
        Family::Gamma => {
            let f = Component::gamma(uniform(rng, 0.3, 12.0), uniform(rng, 0.2, 5.0));
            let g = Component::gamma(
                f.p1() + uniform(rng, 0.0, 2.0),
                f.p2() * uniform(rng, 1.05, 3.0),
            );
            (f, g)
        }
    }
}

/// 20 generated models per family and generation method.
fn generated_models() -> Vec<(String, SignedMixture)> {
    let mut out = Vec::new();
    for family in FAMILIES {
        for method in [GenMethod::Saturated, GenMethod::Repaired] {
            for i in 0..20u64 {
                let spec = GenSpec {
                    family,
                    k_range: (5, 10),
                    p_range: P_BRACKETS[i as usize % P_BRACKETS.len()],
                    method,
                    seed: 1000 + i,
                };
                let label = format!("{family}/m{}/seed{}", method.number(), spec.seed);
                match generate(&spec) {
                    Ok(g) => out.push((label, g.model)),
                    Err(e) => panic!("generation failed for {label}: {e}"),
                }
            }
        }
    }
    out
}

fn criterion_1() -> Outcome {
    let n = 1.0 / alternating_fixture(Family::Normal).model.positive_total();
    let g = 1.0 / alternating_fixture(Family::Gamma).model.positive_total();
    let pass = (n - 0.018).abs() <= 0.001 && (g - 0.008).abs() <= 0.001;
    outcome(pass, format!("normal 1/sum w+ = {n:.6}, gamma = {g:.6}"))
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for family in FAMILIES {
        let fx = alternating_fixture(family);
        let k = fx.pairs.len();
        for delta in DELTAS {
            let p = match optimal_pairing(&fx.model, delta, 0.1) {
                Ok(p) => p,
                Err(e) => {
                    failures.push(format!("{family} delta {delta}: {e}"));
                    continue;
                }
            };
            let natural = p.terms().len() == k && p.terms().iter().all(|t| t.pos == t.neg);
            let resid = p
                .residual_pos()
                .iter()
                .chain(p.residual_neg())
                .fold(0.0f64, |m, r| m.max(r.abs()));
            worst = worst.max(resid);
            if !natural || resid >= 1e-8 {
                failures.push(format!(
                    "{family} delta {delta}: {} terms, max residual {resid:e}",
                    p.terms().len()
                ));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("6 pairings, max residual {worst:e} {}", failures.join("; ")),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = RngStream::new(3);
    let mut failures = Vec::new();
    let (mut min_bound, mut min_emp) = (f64::INFINITY, f64::INFINITY);
    let mut cases = 0;
    for family in FAMILIES {
        for i in 0..50 {
            // every δ must lie above the pair's own vanilla acceptance
            let (f, g) = loop {
                let (f, g) = random_pair(family, &mut rng);
                if a_star(&f, &g).is_ok_and(|a| a < 1.0 / (1.0 - DELTAS[0])) {
                    break (f, g);
                }
            };
            let pair = TwoComponentPair::saturated(f, g).expect("admissible by construction");
            for delta in DELTAS {
                cases += 1;
                let part = match pair.build_partition(delta, 0.2) {
                    Ok(p) => p,
                    Err(e) => {
                        failures.push(format!("{family} #{i} delta {delta}: {e}"));
                        continue;
                    }
                };
                let mut srng = rng.derive(cases);
                let mut proposals = 0u64;
                let draws = 10_000;
                for _ in 0..draws {
                    proposals += part.sample(&mut srng).1;
                }
                let emp = draws as f64 / proposals as f64;
                let bound = part.acceptance();
                min_bound = min_bound.min(bound - delta);
                min_emp = min_emp.min(emp - delta);
                if bound < delta || emp < delta - 0.03 {
                    failures.push(format!(
                        "{family} #{i} delta {delta}: 1/M {bound:.4} empirical {emp:.4}"
                    ));
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{cases} partitions, min(1/M - delta) {min_bound:.4}, min(empirical - delta) {min_emp:.4} {}",
            failures.join("; ")
        ),
    )
}

fn criterion_4(models: &[(String, SignedMixture)]) -> Outcome {
    let crit = ks_critical(10_000);
    let mut all: Vec<(String, SignedMixture)> = FAMILIES
        .iter()
        .map(|&f| (format!("alternating {f}"), alternating_fixture(f).model))
        .collect();
    all.extend(models.iter().cloned());
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for (i, (label, m)) in all.iter().enumerate() {
        let mut rng = RngStream::new(4).derive(i as u64);
        let res = optimal_pairing(m, 0.6, 0.2).and_then(|p| p.sample_n(10_000, &mut rng));
        match res {
            Ok((draws, _)) => {
                let d = ks_statistic(&draws, |x| m.cdf(x));
                worst = worst.max(d);
                if d > crit {
                    failures.push(format!("{label}: D = {d:.5}"));
                }
            }
            Err(e) => failures.push(format!("{label}: {e}")),
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{} models, max D {worst:.5} vs {crit:.4} {}",
            all.len(),
            failures.join("; ")
        ),
    )
}

/// sup ln g/f by a grid over g's central quantiles plus golden-section
/// search; `None` when the grid maximum sits on the grid edge, where the
/// search range does not bracket the maximizer.
fn numeric_ln_sup(f: &Component, g: &Component) -> Option<f64> {
    let h = |x: f64| g.ln_pdf(x) - f.ln_pdf(x);
    let (lo, hi) = (g.quantile(1e-9).unwrap(), g.quantile(1.0 - 1e-9).unwrap());
    let n = 1usize << 16;
    let xs: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    let best = (0..n)
        .max_by(|&a, &b| h(xs[a]).total_cmp(&h(xs[b])))
        .unwrap();
    if best == 0 || best == n - 1 {
        return None;
    }
    let (mut a, mut b) = (xs[best.saturating_sub(1)], xs[(best + 1).min(n - 1)]);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if h(c) > h(d) {
            b = d;
        } else {
            a = c;
        }
    }
    Some(h(0.5 * (a + b)).max(h(xs[best])))
}

fn criteria_5_and_6() -> (Outcome, Outcome) {
    let mut rng = RngStream::new(5);
    let mut worst = 0.0f64;
    let mut min_a = f64::INFINITY;
    let mut failures = Vec::new();
    let mut skipped = 0;
    for family in FAMILIES {
        let mut i = 0;
        while i < 100 {
            let (f, g) = random_pair(family, &mut rng);
            let closed = a_star(&f, &g).expect("admissible by construction");
            let Some(ln_numeric) = numeric_ln_sup(&f, &g) else {
                skipped += 1;
                continue;
            };
            i += 1;
            let numeric = ln_numeric.exp();
            let rel = (closed / numeric - 1.0).abs();
            worst = worst.max(rel);
            min_a = min_a.min(closed);
            if rel > 1e-6 {
                failures.push(format!("{family} #{i}: closed {closed} numeric {numeric}"));
            }
        }
    }
    (
        outcome(
            failures.is_empty(),
            format!(
                "200 pairs ({skipped} redrawn: maximizer outside the grid), max relative gap {worst:e} {}",
                failures.join("; ")
            ),
        ),
        outcome(min_a > 1.0, format!("200 pairs, min a* = {min_a:.9}")),
    )
}

fn criterion_7() -> Outcome {
    let m = alternating_fixture(Family::Normal).model;
    let inv = InverseCdf::with_defaults(&m).expect("table");
    let mut rng = RngStream::new(7);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let u = rng.open01();
        match inv.quantile(u) {
            Ok(q) => worst = worst.max((m.cdf(q.x) - u).abs()),
            Err(e) => return outcome(false, format!("u = {u}: {e}")),
        }
    }
    outcome(
        worst < 1e-10,
        format!("1000 draws, max |cdf(q(u)) - u| = {worst:e}"),
    )
}

fn criterion_8(models: &[(String, SignedMixture)]) -> Outcome {
    let mut all: Vec<(String, SignedMixture)> = FAMILIES
        .iter()
        .map(|&f| (format!("alternating {f}"), alternating_fixture(f).model))
        .collect();
    // 10 per family, both generation methods
    all.extend(
        models
            .iter()
            .enumerate()
            .filter(|(i, _)| i % 20 < 5)
            .map(|(_, m)| m.clone()),
    );
    let delta = 0.6;
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for (i, (label, m)) in all.iter().enumerate() {
        let mut rng = RngStream::new(8).derive(i as u64);
        let res = optimal_pairing(m, delta, 0.2).and_then(|p| {
            let bound = p.budget().bound;
            p.sample_n(10_000, &mut rng).map(|(_, n)| (n, bound))
        });
        match res {
            Ok((proposed, bound)) => {
                let measured = proposed as f64 / 10_000.0;
                worst = worst.max(measured / bound);
                if measured > 1.1 * bound {
                    failures.push(format!("{label}: {measured:.3} vs bound {bound:.3}"));
                }
            }
            Err(e) => failures.push(format!("{label}: {e}")),
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{} models, max measured/bound {worst:.4} {}",
            all.len(),
            failures.join("; ")
        ),
    )
}

fn criterion_9() -> Outcome {
    let cfg = RunConfig {
        methods: vec![Method::Vanilla, Method::Stratified],
        deltas: vec![0.6],
        epsilons: vec![0.2],
        ns: vec![10_000],
        seed: 9,
        ..RunConfig::default()
    };
    let mut parts = Vec::new();
    let mut pass = true;
    for family in FAMILIES {
        let report = run_compare(&alternating_fixture(family).model, &cfg);
        let r = report
            .efficiency()
            .iter()
            .find(|e| e.method == Method::Stratified)
            .and_then(|e| e.r);
        pass &= r.is_some_and(|r| r > 1.0);
        parts.push(format!(
            "{family} R = {}",
            r.map_or("n/a".into(), |r| format!("{r:.2}"))
        ));
    }
    outcome(pass, parts.join(", "))
}

fn criterion_10() -> Outcome {
    let strip = |t: &str| -> String {
        t.lines()
            .map(|l| l.rsplit_once('\t').map_or(l, |(a, _)| a))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let cfg = RunConfig {
        seed: 10,
        ..RunConfig::default()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for family in FAMILIES {
        let m = alternating_fixture(family).model;
        let a = strip(&run_compare(&m, &cfg).table());
        let b = strip(&run_compare(&m, &cfg).table());
        let c = strip(
            &run_compare(
                &m,
                &RunConfig {
                    parallel: true,
                    ..cfg.clone()
                },
            )
            .table(),
        );
        let ok = a == b && a == c;
        pass &= ok;
        parts.push(format!(
            "{family}: {} rows {}",
            a.lines().count() - 1,
            if ok { "identical" } else { "differ" }
        ));
    }
    outcome(pass, parts.join(", "))
}

fn main() -> ExitCode {
    let total = Instant::now();
    let mut failed = 0;
    let mut report = |n: &str, start: Instant, o: Outcome| {
        let status = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {n}: {status} ({:.2}s) {}",
            start.elapsed().as_secs_f64(),
            o.detail.trim_end()
        );
    };

    let t = Instant::now();
    report("1", t, criterion_1());
    let t = Instant::now();
    report("2", t, criterion_2());
    let t = Instant::now();
    report("3", t, criterion_3());
    let t = Instant::now();
    let models = generated_models();
    report("4", t, criterion_4(&models));
    let t = Instant::now();
    let (five, six) = criteria_5_and_6();
    report("5", t, five);
    report("6", t, six);
    let t = Instant::now();
    report("7", t, criterion_7());
    let t = Instant::now();
    report("8", t, criterion_8(&models));
    let t = Instant::now();
    report("9", t, criterion_9());
    let t = Instant::now();
    report("10", t, criterion_10());

    println!(
        "acceptance: {} of 10 criteria passed in {:.1}s",
        10 - failed,
        total.elapsed().as_secs_f64()
    );
    let strict = std::env::var_os("SIGNMIX_ACCEPTANCE_STRICT").is_some();
    if failed == 0 || !strict {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
