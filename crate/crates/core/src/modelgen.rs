//! Random benchmark models with a prescribed vanilla acceptance range.
//!
//! Method 1 builds every negative component so that its pair with a positive
//! component has a chosen dominating constant, then mixes the pairs
//! uniformly. Method 2 starts from under-dominated combinations a·f − g,
//! repairs them with other positive components, and finally adds a saturated
//! pair to move the acceptance into range.

use std::fmt;

use rand_distr::Distribution;
use statrs::function::gamma::digamma;

use crate::component::{Component, Family};
use crate::error::GenError;
use crate::io::write_model;
use crate::mixture::{SignedMixture, Term};
use crate::pair::{a_star, ln_a_star, ratio_argmax};
use crate::rng::RngStream;
use crate::validate::validate_model;

pub const K_RANGES: [(usize, usize); 4] = [(5, 10), (10, 30), (30, 50), (50, 100)];
pub const P_BRACKETS: [(f64, f64); 7] = [
    (0.0, 1e-4),
    (1e-4, 1e-3),
    (1e-3, 1e-2),
    (0.01, 0.05),
    (0.05, 0.1),
    (0.1, 0.2),
    (0.2, 0.3),
];
const MAX_ATTEMPTS: usize = 100;
// Method 2 caps sup g/f of the drawn negatives at this value.
const METHOD2_A_CAP: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenMethod {
    Saturated,
    Repaired,
}

impl GenMethod {
    pub fn number(self) -> u8 {
        match self {
            GenMethod::Saturated => 1,
            GenMethod::Repaired => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(GenMethod::Saturated),
            2 => Some(GenMethod::Repaired),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenSpec {
    pub family: Family,
    pub k_range: (usize, usize),
    pub p_range: (f64, f64),
    pub method: GenMethod,
    pub seed: u64,
}

impl GenSpec {
    fn check(&self) -> Result<(), GenError> {
        if !K_RANGES.contains(&self.k_range) {
            return Err(GenError::BadSpec(format!(
                "component range {:?} is not one of {K_RANGES:?}",
                self.k_range
            )));
        }
        if !P_BRACKETS.contains(&self.p_range) {
            return Err(GenError::BadSpec(format!(
                "acceptance range {:?} is not one of {P_BRACKETS:?}",
                self.p_range
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedModel {
    pub model: SignedMixture,
    pub spec: GenSpec,
    /// Attempts used, starting at 1.
    pub attempts: usize,
}

impl GeneratedModel {
    pub fn acceptance(&self) -> f64 {
        1.0 / self.model.positive_total()
    }

    pub fn manifest(&self) -> String {
        format!(
            "# method={} family={} K={} target_p=[{},{}] seed={}",
            self.spec.method.number(),
            self.spec.family,
            self.model.positives().len(),
            self.spec.p_range.0,
            self.spec.p_range.1,
            self.spec.seed
        )
    }

    /// Manifest line followed by the model file.
    pub fn to_file(&self) -> String {
        format!("{}\n{}", self.manifest(), write_model(&self.model))
    }
}

impl fmt::Display for GeneratedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_file())
    }
}

pub fn generate(spec: &GenSpec) -> Result<GeneratedModel, GenError> {
    spec.check()?;
    let root = RngStream::new(spec.seed);
    let mut last = String::new();
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = root.derive(attempt as u64);
        let built = match spec.method {
            GenMethod::Saturated => method1(spec, &mut rng),
            GenMethod::Repaired => method2(spec, &mut rng),
        };
        match built.and_then(|m| accept(spec, m)) {
            Ok(model) => {
                return Ok(GeneratedModel {
                    model,
                    spec: *spec,
                    attempts: attempt + 1,
                })
            }
            Err(reason) => last = reason,
        }
    }
    Err(GenError::GenerationFailed {
        attempts: MAX_ATTEMPTS,
        reason: last,
    })
}

fn accept(spec: &GenSpec, model: SignedMixture) -> Result<SignedMixture, String> {
    let model = model.normalized();
    let p = 1.0 / model.positive_total();
    let (lo, hi) = spec.p_range;
    if !(p > lo && p <= hi) && !(lo == 0.0 && p > 0.0 && p <= hi) {
        return Err(format!("acceptance {p} outside ({lo}, {hi}]"));
    }
    let report = validate_model(&model);
    if !report.is_valid() {
        return Err(format!("validation failed: {:?}", report.issues));
    }
    Ok(model)
}

fn uniform(rng: &mut RngStream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.open01()
}

fn coin(rng: &mut RngStream) -> bool {
    rng.open01() < 0.5
}

fn gamma_draw(rng: &mut RngStream, shape: f64, rate: f64) -> f64 {
    rand_distr::Gamma::new(shape, 1.0 / rate)
        .expect("fixed prior parameters")
        .sample(rng)
}

/// Positive component from the family priors.
fn prior_positive(family: Family, rng: &mut RngStream) -> Component {
    match family {
        Family::Normal => {
            let mean = uniform(rng, 0.0, 20.0);
            let sd = gamma_draw(rng, 3.0, 2.5).max(1e-3);
            Component::normal(mean, sd * sd)
        }
        Family::Gamma => {
            let shape = gamma_draw(rng, 4.0, 0.5).max(1e-2);
            let rate = gamma_draw(rng, 2.0, 0.7).max(1e-3);
            Component::gamma(shape, rate)
        }
    }
}

fn draw_k(spec: &GenSpec, rng: &mut RngStream) -> usize {
    let (lo, hi) = spec.k_range;
    (lo + (rng.open01() * (hi - lo + 1) as f64) as usize).min(hi)
}

/// Acceptance target range with a positive lower end.
fn target_range(spec: &GenSpec) -> (f64, f64) {
    let (lo, hi) = spec.p_range;
    (if lo > 0.0 { lo } else { hi / 100.0 }, hi)
}

/// Negative component g with sup g/f equal to `target` (> 1), found by
/// bisection along one parameter after a random offset of the other.
fn negative_for_target(f: &Component, target: f64, rng: &mut RngStream) -> Option<Component> {
    let ln_target = target.ln();
    match f.family() {
        Family::Normal => {
            let sd = f.p2().sqrt();
            // ln a* is at least about |mean offset|/sd, so keep the offset
            // below the target
            let d = uniform(rng, 0.0, 0.5) * ln_target;
            let offset = if coin(rng) { d } else { -d };
            let mean = f.p1() + offset * sd;
            let ln_a = |r: f64| -> f64 {
                ln_a_star(f, &Component::normal(mean, (r * sd).powi(2))).unwrap_or(f64::INFINITY)
            };
            let r_opt = 0.5 * (-d + (d * d + 4.0).sqrt());
            let r = bisect_increasing(ln_a, r_opt, 1.0, ln_target)?;
            Component::try_new(Family::Normal, mean, (r * sd).powi(2)).ok()
        }
        Family::Gamma => {
            let (shape, rate) = (f.p1(), f.p2());
            let slope = (shape.ln() - digamma(shape)).max(1e-12);
            let extra = uniform(rng, 0.0, 0.5) * ln_target / slope;
            let shape_n = shape + extra;
            let ln_a = |b: f64| -> f64 {
                ln_a_star(f, &Component::gamma(shape_n, b)).unwrap_or(f64::INFINITY)
            };
            let b_opt = if extra > 0.0 {
                shape_n * rate / shape
            } else {
                rate
            };
            let mut hi = b_opt * 2.0;
            while ln_a(hi) < ln_target {
                hi *= 2.0;
                if hi > b_opt * 1e12 {
                    return None;
                }
            }
            let b = bisect_increasing(ln_a, b_opt, hi, ln_target)?;
            Component::try_new(Family::Gamma, shape_n, b).ok()
        }
    }
}

/// x in (lo, hi) with h(x) = target for h increasing, if h(lo) < target.
fn bisect_increasing(h: impl Fn(f64) -> f64, lo: f64, hi: f64, target: f64) -> Option<f64> {
    if !(h(lo) < target) {
        return None;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if h(m) < target {
            a = m;
        } else {
            b = m;
        }
    }
    let x = 0.5 * (a + b);
    let v = h(x);
    ((v - target).abs() <= 1e-9 * target.abs().max(1e-12) || (b - a) <= 1e-15 * b.abs())
        .then_some(x)
}

struct Builder {
    positives: Vec<(Component, f64)>,
    negatives: Vec<(Component, f64)>,
}

impl Builder {
    fn new() -> Self {
        Self {
            positives: Vec::new(),
            negatives: Vec::new(),
        }
    }

    fn add_positive(&mut self, c: Component, w: f64) {
        if let Some(e) = self.positives.iter_mut().find(|(p, _)| *p == c) {
            e.1 += w;
        } else {
            self.positives.push((c, w));
        }
    }

    fn add_negative(&mut self, c: Component, w: f64) {
        self.negatives.push((c, w));
    }

    fn finish(self) -> Result<SignedMixture, String> {
        let terms = |v: Vec<(Component, f64)>| -> Vec<Term> {
            v.into_iter()
                .filter(|(_, w)| *w > 0.0)
                .map(|(c, w)| Term::new(w, c))
                .collect()
        };
        SignedMixture::new(terms(self.positives), terms(self.negatives)).map_err(|e| e.to_string())
    }
}

fn method1(spec: &GenSpec, rng: &mut RngStream) -> Result<SignedMixture, String> {
    let k = draw_k(spec, rng);
    let (p_lo, p_hi) = target_range(spec);
    let mut pairs: Vec<(Component, Component, f64)> = Vec::new();
    for _ in 0..k {
        let f = prior_positive(spec.family, rng);
        let count = if coin(rng) { 1 } else { 2 };
        for _ in 0..count {
            let p = uniform(rng, p_lo, p_hi);
            let target = 1.0 / (1.0 - p);
            let g = negative_for_target(&f, target, rng)
                .ok_or_else(|| format!("no negative component for a* = {target}"))?;
            let a = a_star(&f, &g).map_err(|e| e.to_string())?;
            pairs.push((f, g, a));
        }
    }
    let rate = 1.0 / pairs.len() as f64;
    let mut b = Builder::new();
    for (f, g, a) in &pairs {
        b.add_positive(*f, rate * a / (a - 1.0));
        b.add_negative(*g, rate / (a - 1.0));
    }
    let total_pos: f64 = b.positives.iter().map(|(_, w)| w).sum();
    // Optionally raise the acceptance with unpaired positive weight, keeping
    // it at most p_max.
    let cap = (spec.p_range.1 * total_pos - 1.0) / (1.0 - spec.p_range.1);
    if cap > 0.0 && coin(rng) {
        let extra = 1 + (rng.open01() * 3.0) as usize;
        let budget = uniform(rng, 0.0, 1.0) * cap;
        for _ in 0..extra {
            let c = if coin(rng) {
                prior_positive(spec.family, rng)
            } else {
                let j = (rng.open01() * pairs.len() as f64) as usize;
                cover_negative(&pairs[j.min(pairs.len() - 1)].1, rng)
            };
            b.add_positive(c, budget / extra as f64);
        }
    }
    b.finish()
}

/// Positive component that dominates `g` up to a constant.
fn cover_negative(g: &Component, rng: &mut RngStream) -> Component {
    match g.family() {
        Family::Normal => {
            let sd = g.p2().sqrt();
            Component::normal(
                g.p1() + uniform(rng, -1.0, 1.0) * sd,
                g.p2() * uniform(rng, 1.5, 3.0),
            )
        }
        Family::Gamma => Component::gamma(
            g.p1() * uniform(rng, 0.5, 1.0),
            g.p2() * uniform(rng, 0.4, 0.9),
        ),
    }
}

/// Negative component for `f` with sup g/f at most the method-2 cap.
fn capped_negative(f: &Component, rng: &mut RngStream) -> Option<Component> {
    for _ in 0..50 {
        let g = match f.family() {
            Family::Normal => {
                let sd = f.p2().sqrt();
                Component::normal(
                    f.p1() + uniform(rng, -1.0, 1.0) * sd,
                    (uniform(rng, 0.3, 0.95) * sd).powi(2),
                )
            }
            Family::Gamma => Component::gamma(
                f.p1() + uniform(rng, 0.05, 1.0),
                f.p2() * uniform(rng, 1.1, 3.0),
            ),
        };
        if a_star(f, &g).is_ok_and(|a| a <= METHOD2_A_CAP) {
            return Some(g);
        }
    }
    None
}

/// Ends of {x : a·f(x) < g(x)}, an interval around the maximizer of g/f.
fn negativity_interval(f: &Component, g: &Component, a: f64) -> Option<(f64, f64)> {
    let ln_a = a.ln();
    let peak = ratio_argmax(f, g).ok()?;
    let ln_r = |x: f64| g.ln_pdf(x) - f.ln_pdf(x);
    if !(ln_r(peak) > ln_a) {
        return None;
    }
    let scale = match f.family() {
        Family::Normal => f.p2().sqrt(),
        Family::Gamma => (f.p1().sqrt() / f.p2()).max(peak),
    };
    // right end
    let mut step = scale;
    while ln_r(peak + step) > ln_a {
        step *= 2.0;
    }
    let right = bisect_decreasing(&ln_r, peak, peak + step, ln_a);
    let left = match f.family() {
        Family::Normal => {
            let mut step = scale;
            while ln_r(peak - step) > ln_a {
                step *= 2.0;
            }
            bisect_decreasing(&|x| ln_r(-x), -peak, -(peak - step), ln_a).map(|x| -x)
        }
        Family::Gamma => {
            let tiny = peak * 1e-12;
            if peak <= 0.0 || ln_r(tiny) > ln_a {
                Some(0.0)
            } else {
                bisect_decreasing(&|x| ln_r(-x), -peak, -tiny, ln_a).map(|x| -x)
            }
        }
    };
    Some((left?, right?))
}

/// x with h(x) = target for h decreasing on [lo, hi].
fn bisect_decreasing(h: &dyn Fn(f64) -> f64, lo: f64, hi: f64, target: f64) -> Option<f64> {
    bisect_increasing(|x| -h(x), lo, hi, -target)
}

fn method2(spec: &GenSpec, rng: &mut RngStream) -> Result<SignedMixture, String> {
    let k = draw_k(spec, rng);
    let mut pool: Vec<Component> = (0..k).map(|_| prior_positive(spec.family, rng)).collect();
    // (index of f in pool, g, a)
    let mut slots: Vec<(usize, Component, f64)> = Vec::new();
    for i in 0..k {
        let count = if coin(rng) { 1 } else { 2 };
        for _ in 0..count {
            let f = pool[i];
            let g = capped_negative(&f, rng).ok_or("no capped negative component")?;
            let a = uniform(rng, 0.0, a_star(&f, &g).map_err(|e| e.to_string())?);
            slots.push((i, g, a));
        }
    }

    // Each slot becomes a non-negative combination a·f − g + Σ w_i f_i.
    let mut combos: Vec<Vec<(usize, f64)>> = Vec::new();
    for &(fi, g, a) in &slots {
        let f = pool[fi];
        let (lo, hi) = match negativity_interval(&f, &g, a) {
            Some(iv) => iv,
            None => (0.0, 0.0),
        };
        let grid = repair_grid(&g, lo, hi);
        ensure_coverage(spec.family, &mut pool, fi, &g, &grid, rng);
        let weights = repair_weights(&pool, fi, &f, &g, a, &grid)?;
        let mut combo = vec![(fi, a)];
        combo.extend(weights);
        combos.push(combo);
    }

    let rate = 1.0 / slots.len() as f64;
    let mut b = Builder::new();
    for (combo, &(_, g, a)) in combos.iter().zip(&slots) {
        let extra: f64 = combo[1..].iter().map(|(_, w)| w).sum();
        let total = a - 1.0 + extra;
        if !(total > 0.0) {
            return Err("repaired combination has no mass".into());
        }
        for &(i, w) in combo {
            b.add_positive(pool[i], rate * w / total);
        }
        b.add_negative(g, rate / total);
    }

    // Move the acceptance into range with one saturated pair.
    let (p_lo, p_hi) = target_range(spec);
    let s: f64 = b.positives.iter().map(|(_, w)| w).sum();
    let p_now = 1.0 / s;
    if !(p_now > spec.p_range.0 && p_now <= spec.p_range.1) {
        let p_t = uniform(rng, p_lo, p_hi);
        // the pair's own acceptance must lie on the far side of the target
        let q = if p_now > p_t {
            uniform(rng, 0.2, 0.8) * p_t
        } else {
            uniform(rng, p_t + 0.25 * (1.0 - p_t), p_t + 0.75 * (1.0 - p_t)).min(0.9)
        };
        let pick = (rng.open01() * pool.len() as f64) as usize;
        let f = pool[pick.min(pool.len() - 1)];
        let target = 1.0 / (1.0 - q);
        let g = negative_for_target(&f, target, rng).ok_or("no pair for acceptance adjustment")?;
        let a = a_star(&f, &g).map_err(|e| e.to_string())?;
        let lambda = (p_t * s - 1.0) / (a * (1.0 - p_t) - 1.0);
        if !(lambda > 0.0) {
            return Err(format!("adjustment weight {lambda} is not positive"));
        }
        b.add_positive(f, lambda * a);
        b.add_negative(g, lambda);
    }
    b.finish()
}

fn repair_grid(g: &Component, lo: f64, hi: f64) -> Vec<f64> {
    if !(hi > lo) {
        return Vec::new();
    }
    let n = 512;
    let mut pts: Vec<f64> = (0..=n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .filter(|&x| x > g.support_min())
        .collect();
    if g.family() == Family::Gamma && lo == 0.0 {
        let mut x = hi / n as f64;
        for _ in 0..12 {
            x *= 0.25;
            pts.push(x);
        }
    }
    pts
}

/// Adds positive components until the pool (without `skip`) has density
/// wherever g does on the grid.
fn ensure_coverage(
    family: Family,
    pool: &mut Vec<Component>,
    skip: usize,
    g: &Component,
    grid: &[f64],
    rng: &mut RngStream,
) {
    let covered = |pool: &[Component]| {
        grid.iter().all(|&x| {
            let gx = g.pdf(x);
            let px: f64 = pool
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, c)| c.pdf(x))
                .sum();
            gx <= 0.0 || px >= 1e-6 * gx
        })
    };
    let mut tries = 0;
    while !covered(pool) {
        if tries < 20 {
            pool.push(prior_positive(family, rng));
        } else {
            pool.push(cover_negative(g, rng));
        }
        tries += 1;
        if tries > 40 {
            break;
        }
    }
}

/// Weights w_i (i ≠ fi) with a·f − g + Σ w_i f_i ≥ 0.05·g on the grid, by
/// repeatedly raising the component densest at the worst point.
fn repair_weights(
    pool: &[Component],
    fi: usize,
    f: &Component,
    g: &Component,
    a: f64,
    grid: &[f64],
) -> Result<Vec<(usize, f64)>, String> {
    const MARGIN: f64 = 0.05;
    let mut w = vec![0.0; pool.len()];
    let dens: Vec<Vec<f64>> = grid
        .iter()
        .map(|&x| pool.iter().map(|c| c.pdf(x)).collect())
        .collect();
    let base: Vec<f64> = grid
        .iter()
        .map(|&x| a * f.pdf(x) - (1.0 + MARGIN) * g.pdf(x))
        .collect();
    for _ in 0..10_000 {
        let mut worst = (0.0, usize::MAX);
        for (k, row) in dens.iter().enumerate() {
            let v = base[k]
                + row
                    .iter()
                    .zip(&w)
                    .enumerate()
                    .filter(|&(i, _)| i != fi)
                    .map(|(_, (d, wi))| d * wi)
                    .sum::<f64>();
            if v < worst.0 {
                worst = (v, k);
            }
        }
        if worst.1 == usize::MAX {
            return Ok(w
                .into_iter()
                .enumerate()
                .filter(|&(i, wi)| i != fi && wi > 0.0)
                .collect());
        }
        let (deficit, k) = (-worst.0, worst.1);
        let (best, d) = dens[k]
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != fi)
            .max_by(|x, y| x.1.total_cmp(y.1))
            .map(|(i, d)| (i, *d))
            .ok_or("no positive component to repair with")?;
        if !(d > 0.0) {
            return Err("negativity region not covered".into());
        }
        w[best] = if w[best] == 0.0 {
            deficit / d
        } else {
            (w[best] * 1.2).max(w[best] + deficit / d)
        };
    }
    Err("repair weights did not converge".into())
}
