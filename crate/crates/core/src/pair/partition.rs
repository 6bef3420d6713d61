//! Piecewise-constant envelopes for a pair density and the stratified
//! sampler that uses them.
//!
//! The support is split into a tail set D0, sampled by proposing f truncated
//! to D0, and bounded cells D1..Dn, each carrying a constant bound h_i on
//! a·f − g. With M the expected number of proposals per accepted draw,
//!
//!   M = (a·f(D0) + Σ h_i |D_i|) / (a − 1) = 1/δ − ε + E,
//!
//! where g(D0) = (a − 1)(1 − δ(1 + ε))/δ and E = Σ (h_i|D_i|/(a − 1) − m(D_i))
//! is the Riemann excess of the envelope. Cells are halved until E ≤ ε,
//! which gives 1/M ≥ δ.

use std::fmt::Write;

use crate::component::Family;
use crate::error::PairError;
use crate::interval::{Interval, IntervalSet};
use crate::rng::{Categorical, RngStream};

use super::TwoComponentPair;

/// Cell-count cap; exceeding it yields `PairError::PartitionOverflow`.
pub const MAX_CELLS: usize = 65_536;
const INITIAL_DIVISIONS: f64 = 100.0;
// relative slack on endpoint maxima, covering rounding in the critical points
const BOUND_SLACK: f64 = 1e-12;

/// How a cell's bound was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundScheme {
    /// Largest endpoint value of a·f − g on a cell where it is monotone.
    Endpoint,
    /// a·sup f − inf g, valid without any monotonicity information.
    Separate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub lo: f64,
    pub hi: f64,
    /// Bound on a·f − g over the cell.
    pub h: f64,
    /// Pair-density mass of the cell.
    pub mass: f64,
    pub scheme: BoundScheme,
    subset: usize,
}

impl Cell {
    fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// h|D|/(a − 1) − m(D): the cell's share of the envelope excess.
    fn excess(&self, a: f64) -> f64 {
        self.h * self.width() / (a - 1.0) - self.mass
    }
}

#[derive(Debug, Clone)]
pub struct Partition {
    pair: TwoComponentPair,
    delta: f64,
    eps: f64,
    d0: IntervalSet,
    d0_description: &'static str,
    d0_mass: f64,
    d0_f_mass: f64,
    d0_select: Option<Categorical>,
    cells: Vec<Cell>,
    select: Categorical,
    expected_proposals: f64,
    subsets: usize,
}

impl Partition {
    pub fn pair(&self) -> &TwoComponentPair {
        &self.pair
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn d0(&self) -> &IntervalSet {
        &self.d0
    }

    /// Pair-density mass of D0.
    pub fn d0_mass(&self) -> f64 {
        self.d0_mass
    }

    /// Mass of f on D0.
    pub fn d0_f_mass(&self) -> f64 {
        self.d0_f_mass
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Number of monotone subsets the bounded region was split into.
    pub fn subsets(&self) -> usize {
        self.subsets
    }

    /// Expected proposals per accepted draw (M).
    pub fn expected_proposals(&self) -> f64 {
        self.expected_proposals
    }

    pub fn acceptance(&self) -> f64 {
        1.0 / self.expected_proposals
    }

    /// Selection probabilities of (D0, D1, ..., Dn).
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.select.len())
            .map(|k| self.select.prob(k))
            .collect()
    }

    /// Draws one point from the pair density; returns it with the number of
    /// proposals used.
    pub fn sample(&self, rng: &mut RngStream) -> (f64, u64) {
        let k = self.select.sample(rng);
        let pair = &self.pair;
        let a = pair.a();
        let mut proposals = 0;
        if k == 0 {
            let parts = self.d0.parts();
            let pick = self.d0_select.as_ref().expect("D0 has mass when selected");
            loop {
                proposals += 1;
                let iv = parts[pick.sample(rng)];
                let x = pair
                    .f()
                    .truncated_sample(iv.lo, iv.hi, rng)
                    .expect("D0 pieces carry positive f-mass");
                if rng.open01() * a <= a - pair.ratio(x) {
                    return (x, proposals);
                }
            }
        }
        let cell = &self.cells[k - 1];
        loop {
            proposals += 1;
            let x = cell.lo + rng.open01() * cell.width();
            let v = rng.open01();
            if cell.h > 0.0 && v * cell.h <= a * pair.f().pdf(x) - pair.g().pdf(x) {
                return (x, proposals);
            }
        }
    }

    /// Text dump: a `D0 <set> M <value>` header, then one
    /// `cell <lo> <hi> <h> <mass>` line per cell.
    pub fn dump(&self) -> String {
        let mut out = format!(
            "D0 {}:{} M {:?}\n",
            self.d0_description, self.d0, self.expected_proposals
        );
        for c in &self.cells {
            let _ = writeln!(out, "cell {:?} {:?} {:?} {:?}", c.lo, c.hi, c.h, c.mass);
        }
        out
    }
}

fn make_cell(pair: &TwoComponentPair, lo: f64, hi: f64, subset: usize, monotone: bool) -> Cell {
    let a = pair.a();
    let f = pair.f();
    let (h, scheme) = if monotone && lo > f.support_min() {
        let ends = (a * f.pdf(lo) - pair.g().pdf(lo)).max(a * f.pdf(hi) - pair.g().pdf(hi));
        (ends.max(0.0) * (1.0 + BOUND_SLACK), BoundScheme::Endpoint)
    } else {
        let iv = Interval::new(lo, hi);
        let (fsup, _) = f.extrema_on(iv).expect("bounded f on cells");
        let (_, ginf) = pair.g().extrema_on(iv).expect("bounded g on cells");
        ((a * fsup - ginf).max(0.0), BoundScheme::Separate)
    };
    Cell {
        lo,
        hi,
        h,
        mass: pair.mass(lo, hi),
        scheme,
        subset,
    }
}

pub(super) fn build(pair: &TwoComponentPair, delta: f64, eps: f64) -> Result<Partition, PairError> {
    let a = pair.a();
    let floor = 1.0 - 1.0 / a;
    if !(delta > floor && delta < 1.0) {
        return Err(PairError::ParameterDomain(format!(
            "delta {delta} outside ({floor}, 1)"
        )));
    }
    let eps_max = (1.0 - delta) / delta;
    if !(eps > 0.0 && eps < eps_max) {
        return Err(PairError::ParameterDomain(format!(
            "eps {eps} outside (0, {eps_max})"
        )));
    }

    let (f, g) = (pair.f(), pair.g());
    // g-mass assigned to D0
    let tail_mass = (a - 1.0) * (1.0 - delta * (eps + 1.0)) / delta;
    let half = 0.5 * tail_mass;
    let (d0, bounded, description) = match f.family() {
        Family::Gamma if f.p1() >= 1.0 => {
            let q = g.isf(tail_mass)?;
            (
                IntervalSet::single(Interval::new(q, f64::INFINITY)),
                Interval::new(0.0, q),
                "upper",
            )
        }
        family => {
            let lo = g.quantile(half)?;
            let hi = g.isf(half)?;
            let left = if family == Family::Gamma {
                0.0
            } else {
                f64::NEG_INFINITY
            };
            (
                IntervalSet::from_intervals([
                    Interval::new(left, lo),
                    Interval::new(hi, f64::INFINITY),
                ]),
                Interval::new(lo, hi),
                "tails",
            )
        }
    };

    // Split the bounded region into monotone subsets at the critical points.
    let profile = pair.monotonicity();
    let mut cuts = vec![bounded.lo];
    cuts.extend(
        profile
            .critical
            .iter()
            .map(|c| c.x)
            .filter(|&x| x > bounded.lo && x < bounded.hi),
    );
    cuts.push(bounded.hi);
    let subsets = cuts.len() - 1;
    let spacing = bounded.len() / INITIAL_DIVISIONS;
    let mut cells = Vec::new();
    for (s, w) in cuts.windows(2).enumerate() {
        let n = ((w[1] - w[0]) / spacing).ceil().max(1.0) as usize;
        let step = (w[1] - w[0]) / n as f64;
        for i in 0..n {
            let lo = w[0] + step * i as f64;
            let hi = if i + 1 == n { w[1] } else { lo + step };
            cells.push(make_cell(pair, lo, hi, s, true));
        }
    }

    let d0_f_mass: f64 = d0.parts().iter().map(|p| f.mass(p.lo, p.hi)).sum();
    let d0_pair_mass: f64 = d0.parts().iter().map(|p| pair.mass(p.lo, p.hi)).sum();
    let budget = eps / (subsets + 1) as f64;

    loop {
        let mut subset_excess = vec![0.0; subsets];
        for c in &cells {
            subset_excess[c.subset] += c.excess(a);
        }
        let envelope: f64 = cells.iter().map(|c| c.h * c.width()).sum();
        let m_total = (a * d0_f_mass + envelope) / (a - 1.0);
        let violating: Vec<bool> = subset_excess.iter().map(|&e| e > budget).collect();
        if !violating.iter().any(|&v| v) && 1.0 / m_total >= delta {
            return finish(
                pair,
                delta,
                eps,
                d0,
                description,
                d0_pair_mass,
                d0_f_mass,
                cells,
                m_total,
                subsets,
            );
        }
        let trigger = eps / cells.len() as f64;
        let mut split: Vec<bool> = cells
            .iter()
            .map(|c| violating[c.subset] && c.excess(a) > trigger)
            .collect();
        for s in (0..subsets).filter(|&s| violating[s]) {
            let any = cells.iter().zip(&split).any(|(c, &m)| m && c.subset == s);
            if !any {
                let worst = cells
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.subset == s)
                    .max_by(|x, y| x.1.excess(a).total_cmp(&y.1.excess(a)))
                    .map(|(i, _)| i);
                if let Some(i) = worst {
                    split[i] = true;
                }
            }
        }
        // excess already within budget everywhere but M still too high:
        // refine the largest contributors
        if !split.iter().any(|&s| s) {
            let i = (0..cells.len())
                .max_by(|&x, &y| cells[x].excess(a).total_cmp(&cells[y].excess(a)))
                .expect("cells");
            split[i] = true;
        }
        let extra = split.iter().filter(|&&s| s).count();
        if cells.len() + extra > MAX_CELLS {
            return Err(PairError::PartitionOverflow { cap: MAX_CELLS });
        }
        let mut next = Vec::with_capacity(cells.len() + extra);
        for (c, s) in cells.into_iter().zip(split) {
            if s {
                let mid = 0.5 * (c.lo + c.hi);
                if mid <= c.lo || mid >= c.hi {
                    return Err(PairError::PartitionOverflow { cap: MAX_CELLS });
                }
                next.push(make_cell(pair, c.lo, mid, c.subset, true));
                next.push(make_cell(pair, mid, c.hi, c.subset, true));
            } else {
                next.push(c);
            }
        }
        cells = next;
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    pair: &TwoComponentPair,
    delta: f64,
    eps: f64,
    d0: IntervalSet,
    d0_description: &'static str,
    d0_mass: f64,
    d0_f_mass: f64,
    cells: Vec<Cell>,
    expected_proposals: f64,
    subsets: usize,
) -> Result<Partition, PairError> {
    let mut weights = Vec::with_capacity(cells.len() + 1);
    let d0_weight = if d0_f_mass > 1e-300 { d0_mass } else { 0.0 };
    weights.push(d0_weight);
    weights.extend(cells.iter().map(|c| if c.h > 0.0 { c.mass } else { 0.0 }));
    let select = Categorical::new(&weights)
        .ok_or_else(|| PairError::ParameterDomain("pair density has no mass".into()))?;
    let f = pair.f();
    let d0_select = Categorical::new(
        &d0.parts()
            .iter()
            .map(|p| f.mass(p.lo, p.hi))
            .collect::<Vec<_>>(),
    );
    Ok(Partition {
        pair: *pair,
        delta,
        eps,
        d0,
        d0_description,
        d0_mass,
        d0_f_mass,
        d0_select,
        cells,
        select,
        expected_proposals,
        subsets,
    })
}
