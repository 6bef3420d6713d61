//! Critical points of a pair density.
//!
//! Writing R = g/f, the derivative of a·f − g has the sign of
//! D(x) = R(x)·u(x) − a·v(x), where u and v are the affine score terms of g
//! and f (divided by x for Gamma). The derivatives of D factor as
//! D' = R·P2(x)/w(x) − c and D'' = R·P3(x)/w(x)², with P2 quadratic, P3 cubic,
//! w = 1 (Normal) or x (Gamma), c a positive constant. Roots of P3 split the
//! axis into pieces where D' is monotone, roots of D' split it into pieces
//! where D is monotone, and D then has at most one root per piece.

use crate::component::{Component, Family};
use crate::interval::Interval;

use super::TwoComponentPair;

const BISECTION_STEPS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalKind {
    LocalMax,
    LocalMin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub x: f64,
    pub kind: CriticalKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityProfile {
    pub critical: Vec<CriticalPoint>,
    /// Maximal monotone pieces covering the support, in order.
    pub pieces: Vec<(Interval, Trend)>,
}

impl MonotonicityProfile {
    pub fn maxima(&self) -> impl Iterator<Item = f64> + '_ {
        self.critical
            .iter()
            .filter(|c| c.kind == CriticalKind::LocalMax)
            .map(|c| c.x)
    }
}

/// Dense polynomial, lowest degree first.
#[derive(Debug, Clone, PartialEq)]
struct Poly(Vec<f64>);

impl Poly {
    fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    fn add(&self, o: &Poly) -> Poly {
        let n = self.0.len().max(o.0.len());
        Poly(
            (0..n)
                .map(|i| self.0.get(i).unwrap_or(&0.0) + o.0.get(i).unwrap_or(&0.0))
                .collect(),
        )
    }

    fn mul(&self, o: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    fn deriv(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![0.0]);
        }
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * i as f64)
                .collect(),
        )
    }

    fn degree(&self) -> usize {
        self.0.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    /// Real roots in (lo, hi), sorted, isolated through the roots of the
    /// derivative.
    fn roots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        if self.degree() == 0 {
            return Vec::new();
        }
        let mut knots = vec![lo];
        knots.extend(self.deriv().roots_in(lo, hi));
        knots.push(hi);
        let mut roots = Vec::new();
        for w in knots.windows(2) {
            if let Some(r) = bisect_root(|x| self.eval(x), w[0], w[1]) {
                if r > lo && r < hi && roots.last().is_none_or(|&l: &f64| r > l) {
                    roots.push(r);
                }
            }
        }
        roots
    }
}

/// Root of a function monotone on [lo, hi], if the endpoint signs differ.
fn bisect_root(h: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Option<f64> {
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (h(a), h(b));
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.is_nan() || fb.is_nan() || (fa > 0.0) == (fb > 0.0) {
        return None;
    }
    let left_positive = fa > 0.0;
    for _ in 0..BISECTION_STEPS {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = h(m);
        if fm == 0.0 {
            return Some(m);
        }
        if (fm > 0.0) == left_positive {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// The sign function D and its derivative for one pair.
struct Shape {
    f: Component,
    g: Component,
    a: f64,
    gamma: bool,
    p2: Poly,
    p3: Poly,
    // D' = R·P2/w − slope_const
    slope_const: f64,
}

impl Shape {
    fn new(pair: &TwoComponentPair) -> Self {
        let (f, g, a) = (*pair.f(), *pair.g(), pair.a());
        match f.family() {
            Family::Normal => {
                let (mp, vp, mn, vn) = (f.p1(), f.p2(), g.p1(), g.p2());
                let u = Poly(vec![-mn / vn, 1.0 / vn]);
                let l = Poly(vec![mn / vn - mp / vp, 1.0 / vp - 1.0 / vn]);
                let p2 = Poly(vec![1.0 / vn]).add(&u.mul(&l));
                let p3 = p2.deriv().add(&l.mul(&p2));
                Self {
                    f,
                    g,
                    a,
                    gamma: false,
                    p2,
                    p3,
                    slope_const: a / vp,
                }
            }
            Family::Gamma => {
                let (ap, bp, an, bn) = (f.p1(), f.p2(), g.p1(), g.p2());
                let (da, db) = (an - ap, bn - bp);
                let u = Poly(vec![1.0 - an, bn]);
                let q = Poly(vec![da, -db]);
                let p2 = Poly(vec![0.0, bn]).add(&u.mul(&q));
                let p3 = Poly(vec![0.0, 1.0])
                    .mul(&p2.deriv())
                    .add(&p2.mul(&Poly(vec![da - 1.0, -db])));
                Self {
                    f,
                    g,
                    a,
                    gamma: true,
                    p2,
                    p3,
                    slope_const: a * bp,
                }
            }
        }
    }

    fn ratio(&self, x: f64) -> f64 {
        (self.g.ln_pdf(x) - self.f.ln_pdf(x)).min(700.0).exp()
    }

    fn score_terms(&self, x: f64) -> (f64, f64) {
        if self.gamma {
            (
                self.g.p2() * x + 1.0 - self.g.p1(),
                self.f.p2() * x + 1.0 - self.f.p1(),
            )
        } else {
            (
                (x - self.g.p1()) / self.g.p2(),
                (x - self.f.p1()) / self.f.p2(),
            )
        }
    }

    /// Has the sign of the pair density's derivative.
    fn d(&self, x: f64) -> f64 {
        let (u, v) = self.score_terms(x);
        let r = self.ratio(x);
        let ru = if r == 0.0 { 0.0 } else { r * u };
        ru - self.a * v
    }

    fn d_prime(&self, x: f64) -> f64 {
        let w = if self.gamma { x } else { 1.0 };
        let r = self.ratio(x);
        let t = if r == 0.0 {
            0.0
        } else {
            r * self.p2.eval(x) / w
        };
        t - self.slope_const
    }

    /// Finite bracket holding every sign change of D.
    fn bracket(&self) -> (f64, f64) {
        if self.gamma {
            let far = |c: &Component| {
                let (s, r) = (c.p1(), c.p2());
                (s + 60.0 * s.sqrt() + 800.0) / r
            };
            let lo = 1e-12 / self.f.p2().max(self.g.p2());
            (lo, far(&self.f).max(far(&self.g)))
        } else {
            let sd = self.f.p2().sqrt().max(self.g.p2().sqrt());
            let lo = self.f.p1().min(self.g.p1()) - 60.0 * sd;
            let hi = self.f.p1().max(self.g.p1()) + 60.0 * sd;
            (lo, hi)
        }
    }
}

pub(super) fn profile(pair: &TwoComponentPair) -> MonotonicityProfile {
    let shape = Shape::new(pair);
    let (lo, hi) = shape.bracket();

    let mut knots = vec![lo];
    knots.extend(shape.p3.roots_in(lo, hi));
    knots.push(hi);
    let mut d_knots = vec![lo];
    for w in knots.windows(2) {
        if let Some(r) = bisect_root(|x| shape.d_prime(x), w[0], w[1]) {
            if r > lo && r < hi {
                d_knots.push(r);
            }
        }
    }
    d_knots.push(hi);

    // Walk the knots tracking the last nonzero sign of D; a knot where D is
    // exactly zero is itself the critical point.
    let mut critical: Vec<CriticalPoint> = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    let mut zero_at: Option<f64> = None;
    for &k in &d_knots {
        let dk = shape.d(k);
        if dk == 0.0 || dk.is_nan() {
            if dk == 0.0 && last.is_some() {
                zero_at.get_or_insert(k);
            }
            continue;
        }
        if let Some((prev_x, prev_d)) = last {
            if (prev_d > 0.0) != (dk > 0.0) {
                let x = zero_at
                    .or_else(|| bisect_root(|x| shape.d(x), prev_x, k))
                    .unwrap_or(0.5 * (prev_x + k));
                let kind = if prev_d > 0.0 {
                    CriticalKind::LocalMax
                } else {
                    CriticalKind::LocalMin
                };
                critical.push(CriticalPoint { x, kind });
            }
        }
        last = Some((k, dk));
        zero_at = None;
    }

    let support_lo = pair.f().support_min();
    let mut pieces = Vec::with_capacity(critical.len() + 1);
    let mut start = support_lo;
    let mut trend = if shape.d(lo) > 0.0 {
        Trend::Increasing
    } else {
        Trend::Decreasing
    };
    for c in &critical {
        pieces.push((Interval::new(start, c.x), trend));
        start = c.x;
        trend = match c.kind {
            CriticalKind::LocalMax => Trend::Decreasing,
            CriticalKind::LocalMin => Trend::Increasing,
        };
    }
    pieces.push((Interval::new(start, f64::INFINITY), trend));
    MonotonicityProfile { critical, pieces }
}
