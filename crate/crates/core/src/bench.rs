//! Benchmark harness: alternating fixtures and the vanilla / stratified /
//! inverse-cdf comparison.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::component::{Component, Family};
use crate::invcdf::{InverseCdf, DEFAULT_PRECISION, DEFAULT_TABLE_SIZE};
use crate::mixture::{vanilla_sample_model, SignedMixture, Term};
use crate::pair::a_star;
use crate::pairing::optimal_pairing;
use crate::rng::{mix_seed, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Vanilla,
    Stratified,
    InvCdf,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Vanilla, Method::Stratified, Method::InvCdf];

    pub fn name(self) -> &'static str {
        match self {
            Method::Vanilla => "vanilla",
            Method::Stratified => "stratified",
            Method::InvCdf => "invcdf",
        }
    }

    fn key(self) -> u64 {
        match self {
            Method::Vanilla => 1,
            Method::Stratified => 2,
            Method::InvCdf => 3,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method `{s}` (vanilla, stratified, invcdf)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub methods: Vec<Method>,
    pub deltas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub ns: Vec<usize>,
    pub seed: u64,
    pub precision: f64,
    pub parallel: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            deltas: vec![0.4, 0.6, 0.8],
            epsilons: vec![0.1, 0.2, 0.5, 1.0],
            ns: vec![10, 100, 1000, 10_000],
            seed: 0,
            precision: DEFAULT_PRECISION,
            parallel: false,
        }
    }
}

impl RunConfig {
    /// (δ, ε) pairs inside the partition domain ε < (1 − δ)/δ.
    pub fn tolerance_grid(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for &d in &self.deltas {
            for &e in &self.epsilons {
                if d > 0.0 && d < 1.0 && e > 0.0 && e < (1.0 - d) / d {
                    out.push((d, e));
                }
            }
        }
        out
    }

    fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &n in &self.ns {
            for &method in &self.methods {
                if method == Method::Stratified {
                    for (d, e) in self.tolerance_grid() {
                        cells.push(Cell {
                            method,
                            delta: Some(d),
                            eps: Some(e),
                            n,
                        });
                    }
                } else {
                    cells.push(Cell {
                        method,
                        delta: None,
                        eps: None,
                        n,
                    });
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell {
    method: Method,
    delta: Option<f64>,
    eps: Option<f64>,
    n: usize,
}

impl Cell {
    fn seed(&self, seed: u64) -> u64 {
        let mut s = mix_seed(seed, self.method.key());
        s = mix_seed(s, self.delta.map_or(0, f64::to_bits));
        s = mix_seed(s, self.eps.map_or(0, f64::to_bits));
        mix_seed(s, self.n as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub family: Family,
    pub method: Method,
    /// Theoretical acceptance: the target δ for stratified, 1/Σω⁺ for vanilla.
    pub delta: Option<f64>,
    pub eps: Option<f64>,
    pub n: usize,
    /// (accepted, proposed), or the error that stopped the cell.
    pub outcome: Result<(u64, u64), String>,
    pub wall_ns: u128,
}

impl CellResult {
    pub fn delta_hat(&self) -> Option<f64> {
        self.outcome
            .as_ref()
            .ok()
            .map(|&(a, p)| if p == 0 { 0.0 } else { a as f64 / p as f64 })
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub cells: Vec<CellResult>,
    pub parallel: bool,
}

pub const TABLE_HEADER: &str =
    "family\tmethod\tdelta\teps\tn\taccepted\tproposed\tdelta_hat\twall_ns";

impl RunReport {
    /// Result table; every column except the last is deterministic.
    pub fn table(&self) -> String {
        let mut s = String::new();
        s.push_str(TABLE_HEADER);
        s.push('\n');
        for c in &self.cells {
            let opt = |v: Option<f64>, prec: usize| match v {
                Some(v) => format!("{v:.prec$}"),
                None => "-".to_string(),
            };
            let (acc, prop, hat) = match &c.outcome {
                Ok((a, p)) => (a.to_string(), p.to_string(), opt(c.delta_hat(), 6)),
                Err(_) => ("error".into(), "error".into(), "error".into()),
            };
            let eps = c.eps.map_or("-".to_string(), |e| e.to_string());
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                c.family,
                c.method.name(),
                opt(c.delta, 3),
                eps,
                c.n,
                acc,
                prop,
                hat,
                c.wall_ns
            );
        }
        s
    }

    /// Per-cell errors as `method delta eps n: message` lines.
    pub fn errors(&self) -> Vec<String> {
        self.cells
            .iter()
            .filter_map(|c| {
                c.outcome.as_ref().err().map(|e| {
                    format!(
                        "{} delta={:?} eps={:?} n={}: {e}",
                        c.method.name(),
                        c.delta,
                        c.eps,
                        c.n
                    )
                })
            })
            .collect()
    }

    fn wall_of(&self, method: Method, n: usize) -> Option<u128> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.n == n && c.outcome.is_ok())
            .map(|c| c.wall_ns)
    }

    /// R_n = vanilla time / cell time and Q_n = inverse-cdf time / cell time.
    pub fn efficiency(&self) -> Vec<Efficiency> {
        self.cells
            .iter()
            .filter(|c| c.outcome.is_ok())
            .map(|c| {
                let ratio = |m| {
                    self.wall_of(m, c.n)
                        .map(|w| w.max(1) as f64 / c.wall_ns.max(1) as f64)
                };
                Efficiency {
                    method: c.method,
                    delta: c.delta,
                    eps: c.eps,
                    n: c.n,
                    r: ratio(Method::Vanilla),
                    q: ratio(Method::InvCdf),
                }
            })
            .collect()
    }

    pub fn efficiency_table(&self) -> String {
        let mut s = String::new();
        if self.parallel {
            s.push_str("# cells ran in parallel; timings are not comparable\n");
        }
        s.push_str("method\tdelta\teps\tn\tR_n\tQ_n\n");
        for e in self.efficiency() {
            let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}",
                e.method.name(),
                opt(e.delta),
                e.eps.map_or("-".to_string(), |v| v.to_string()),
                e.n,
                opt(e.r),
                opt(e.q)
            );
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Efficiency {
    pub method: Method,
    pub delta: Option<f64>,
    pub eps: Option<f64>,
    pub n: usize,
    pub r: Option<f64>,
    pub q: Option<f64>,
}

/// Runs every configured cell on `model`. Setup (pairing, partitions,
/// quantile table) is part of each cell's timing.
pub fn run_compare(model: &SignedMixture, config: &RunConfig) -> RunReport {
    let model = model.normalized();
    let cells = config.cells();
    let run = |c: &Cell| run_cell(&model, config, c);
    let results = if config.parallel {
        cells.par_iter().map(run).collect()
    } else {
        cells.iter().map(run).collect()
    };
    RunReport {
        cells: results,
        parallel: config.parallel,
    }
}

fn run_cell(model: &SignedMixture, config: &RunConfig, cell: &Cell) -> CellResult {
    let mut rng = RngStream::new(cell.seed(config.seed));
    let n = cell.n;
    let start = Instant::now();
    let outcome = match cell.method {
        Method::Vanilla => {
            let (_, proposed) = vanilla_sample_model(model, n, &mut rng);
            Ok((n as u64, proposed))
        }
        Method::Stratified => {
            let (d, e) = (cell.delta.unwrap_or(0.6), cell.eps.unwrap_or(0.2));
            optimal_pairing(model, d, e)
                .map_err(|err| err.to_string())
                .and_then(|p| p.sample_n(n, &mut rng).map_err(|err| err.to_string()))
                .map(|(_, proposed)| (n as u64, proposed))
        }
        Method::InvCdf => InverseCdf::new(model, DEFAULT_TABLE_SIZE, config.precision)
            .map_err(|err| err.to_string())
            .and_then(|inv| {
                (0..n)
                    .map(|_| inv.sample(&mut rng).map_err(|err| err.to_string()))
                    .collect::<Result<Vec<_>, _>>()
            })
            .map(|_| (n as u64, n as u64)),
    };
    let wall_ns = start.elapsed().as_nanos();
    let delta = match cell.method {
        Method::Vanilla => Some(1.0 / model.positive_total()),
        _ => cell.delta,
    };
    CellResult {
        family: model.family(),
        method: cell.method,
        delta,
        eps: cell.eps,
        n,
        outcome,
        wall_ns,
    }
}

pub const NORMAL_FIXTURE_K: usize = 51;
pub const GAMMA_FIXTURE_K: usize = 41;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlternatingPair {
    pub f: Component,
    pub g: Component,
    /// sup g/f from the closed form.
    pub a_star: f64,
    /// The shortcut expression that accompanies the fixture's published
    /// definition; kept for comparison only.
    pub a_printed: f64,
}

#[derive(Debug, Clone)]
pub struct AlternatingFixture {
    pub model: SignedMixture,
    pub pairs: Vec<AlternatingPair>,
}

impl AlternatingFixture {
    /// Per-pair comparison of the closed-form and shortcut constants.
    pub fn a_star_report(&self) -> String {
        let mut s = String::from("k\ta_star\ta_printed\n");
        for (k, p) in self.pairs.iter().enumerate() {
            let _ = writeln!(s, "{}\t{:.9}\t{:.9}", k + 1, p.a_star, p.a_printed);
        }
        s
    }
}

/// Normal: f_k = N(0.2(k−1), σ_k²), g_k = N(μ_k + 0.01, (σ_k − 0.01)²) with
/// σ_k = 0.25 + 0.015(k−1). Gamma: f_k = Γ(1 + 0.1(k−1), 0.25 + 0.04375(k−1)),
/// g_k = Γ(α_k + 0.01, β_k + 0.01). Each saturated pair is weighted by
/// a*_k/(a*_k − 1) before normalization.
pub fn build_alternating_model(family: Family, k_count: usize) -> AlternatingFixture {
    let pairs: Vec<AlternatingPair> = (0..k_count)
        .map(|i| {
            let k = i as f64;
            let (f, g, printed) = match family {
                Family::Normal => {
                    let (mu, sd) = (0.2 * k, 0.25 + 0.015 * k);
                    let printed = sd / (sd - 0.1) * (0.01 / (4.0 * sd - 0.02)).exp();
                    (
                        Component::normal(mu, sd * sd),
                        Component::normal(mu + 0.01, (sd - 0.01).powi(2)),
                        printed,
                    )
                }
                Family::Gamma => {
                    let (shape, rate) = (1.0 + 0.1 * k, 0.25 + 0.04375 * k);
                    let printed = (ln_gamma(shape) - ln_gamma(shape + 0.1 * k)
                        + 0.01 * k * (rate / (rate + 0.01)).ln()
                        - 0.01 * k)
                        .exp();
                    (
                        Component::gamma(shape, rate),
                        Component::gamma(shape + 0.01, rate + 0.01),
                        printed,
                    )
                }
            };
            let a = a_star(&f, &g).expect("fixture pairs are admissible");
            AlternatingPair {
                f,
                g,
                a_star: a,
                a_printed: printed,
            }
        })
        .collect();
    let total: f64 = pairs.iter().map(|p| p.a_star / (p.a_star - 1.0)).sum();
    let positives = pairs
        .iter()
        .map(|p| Term::new((p.a_star / (p.a_star - 1.0)).powi(2) / total, p.f))
        .collect();
    let negatives = pairs
        .iter()
        .map(|p| Term::new(p.a_star / (p.a_star - 1.0).powi(2) / total, p.g))
        .collect();
    let model = SignedMixture::new(positives, negatives).expect("fixture weights are valid");
    AlternatingFixture { model, pairs }
}

/// The Normal (K = 51) or Gamma (K = 41) benchmark fixture.
pub fn alternating_fixture(family: Family) -> AlternatingFixture {
    match family {
        Family::Normal => build_alternating_model(family, NORMAL_FIXTURE_K),
        Family::Gamma => build_alternating_model(family, GAMMA_FIXTURE_K),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_first_pairs() {
        let n = alternating_fixture(Family::Normal);
        assert_eq!(n.pairs[0].f, Component::normal(0.0, 0.0625));
        assert_eq!(n.pairs[0].g, Component::normal(0.01, 0.24 * 0.24));
        let g = alternating_fixture(Family::Gamma);
        assert_eq!(g.pairs[0].f, Component::gamma(1.0, 0.25));
        assert_eq!(g.pairs[0].g, Component::gamma(1.01, 0.26));
        assert!((g.pairs[0].a_printed - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fixture_mass_is_one() {
        for fam in [Family::Normal, Family::Gamma] {
            let m = alternating_fixture(fam).model;
            assert!((m.total_weight() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tolerance_grid_respects_domain() {
        let grid = RunConfig::default().tolerance_grid();
        assert_eq!(grid.len(), 9);
        assert!(grid.iter().all(|&(d, e)| e < (1.0 - d) / d));
    }

    #[test]
    fn method_names_roundtrip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("exact".parse::<Method>().is_err());
    }

    #[test]
    fn small_run_is_deterministic() {
        let m = build_alternating_model(Family::Normal, 4).model;
        let cfg = RunConfig {
            ns: vec![50],
            deltas: vec![0.6],
            epsilons: vec![0.2],
            seed: 9,
            ..RunConfig::default()
        };
        let strip = |t: String| {
            t.lines()
                .map(|l| l.rsplit_once('\t').unwrap().0.to_string())
                .collect::<Vec<_>>()
        };
        let a = run_compare(&m, &cfg);
        let b = run_compare(
            &m,
            &RunConfig {
                parallel: true,
                ..cfg.clone()
            },
        );
        assert_eq!(a.cells.len(), 3);
        assert!(a.errors().is_empty());
        assert_eq!(strip(a.table()), strip(b.table()));
        assert!(a.efficiency().iter().all(|e| e.r.unwrap() > 0.0));
    }
}
