//! Two-component signed mixtures (a·f − g)/(a − 1).

mod monotone;
mod partition;

pub use monotone::{CriticalKind, CriticalPoint, MonotonicityProfile, Trend};
pub use partition::{BoundScheme, Cell, Partition, MAX_CELLS};

use statrs::function::gamma::ln_gamma;

use crate::component::{Component, Family};
use crate::error::PairError;
use crate::mixture::{SignedMixture, Term};
use crate::rng::RngStream;

/// Natural log of sup g/f, or the reason the pair is not admissible.
pub fn ln_a_star(f: &Component, g: &Component) -> Result<f64, PairError> {
    if f.family() != g.family() {
        return Err(PairError::NotPairable(
            "components belong to different families",
        ));
    }
    match f.family() {
        Family::Normal => {
            let (vp, vn) = (f.p2(), g.p2());
            if !(vn < vp) {
                return Err(PairError::NotPairable(
                    "negative variance must be below positive variance",
                ));
            }
            let dm = f.p1() - g.p1();
            Ok(0.5 * (vp / vn).ln() + dm * dm / (2.0 * (vp - vn)))
        }
        Family::Gamma => {
            let (ap, bp, an, bn) = (f.p1(), f.p2(), g.p1(), g.p2());
            if !(ap <= an) {
                return Err(PairError::NotPairable(
                    "positive shape must not exceed negative shape",
                ));
            }
            if !(bp < bn) {
                return Err(PairError::NotPairable(
                    "positive rate must be below negative rate",
                ));
            }
            let da = an - ap;
            let db = bn - bp;
            let peak = if da > 0.0 {
                da * (da / db).ln() - da
            } else {
                0.0
            };
            Ok(ln_gamma(ap) - ln_gamma(an) + an * bn.ln() - ap * bp.ln() + peak)
        }
    }
}

/// Smallest a with a·f − g ≥ 0 everywhere, i.e. sup g/f.
pub fn a_star(f: &Component, g: &Component) -> Result<f64, PairError> {
    ln_a_star(f, g).map(f64::exp)
}

/// Location where g/f attains its supremum.
pub fn ratio_argmax(f: &Component, g: &Component) -> Result<f64, PairError> {
    ln_a_star(f, g)?;
    Ok(match f.family() {
        Family::Normal => {
            let (vp, vn) = (f.p2(), g.p2());
            (g.p1() * vp - f.p1() * vn) / (vp - vn)
        }
        Family::Gamma => (g.p1() - f.p1()) / (g.p2() - f.p2()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoComponentPair {
    f: Component,
    g: Component,
    a: f64,
    a_star: f64,
}

impl TwoComponentPair {
    /// Pair with dominating constant `a`, which must be at least sup g/f.
    pub fn new(f: Component, g: Component, a: f64) -> Result<Self, PairError> {
        let a_star = a_star(&f, &g)?;
        if !(a >= a_star * (1.0 - 1e-12)) || !a.is_finite() {
            return Err(PairError::BelowDominating { a, a_star });
        }
        Ok(Self {
            f,
            g,
            a: a.max(a_star),
            a_star,
        })
    }

    /// Pair at the smallest admissible constant.
    pub fn saturated(f: Component, g: Component) -> Result<Self, PairError> {
        let a = a_star(&f, &g)?;
        Self::new(f, g, a)
    }

    pub fn f(&self) -> &Component {
        &self.f
    }

    pub fn g(&self) -> &Component {
        &self.g
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn a_star(&self) -> f64 {
        self.a_star
    }

    /// Acceptance probability of the vanilla pair sampler.
    pub fn vanilla_acceptance(&self) -> f64 {
        (self.a - 1.0) / self.a
    }

    /// g(x)/f(x), computed in log space.
    pub fn ratio(&self, x: f64) -> f64 {
        let lf = self.f.ln_pdf(x);
        if lf == f64::NEG_INFINITY {
            return 0.0;
        }
        (self.g.ln_pdf(x) - lf).exp()
    }

    /// a·f(x) − g(x), clamped at zero.
    pub fn excess(&self, x: f64) -> f64 {
        (self.a * self.f.pdf(x) - self.g.pdf(x)).max(0.0)
    }

    pub fn density(&self, x: f64) -> f64 {
        self.excess(x) / (self.a - 1.0)
    }

    /// Pair density mass of [lo, hi].
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        ((self.a * self.f.mass(lo, hi) - self.g.mass(lo, hi)) / (self.a - 1.0)).max(0.0)
    }

    /// The pair as a flat signed mixture.
    pub fn to_mixture(&self) -> SignedMixture {
        let d = self.a - 1.0;
        SignedMixture::new(
            vec![Term::new(self.a / d, self.f)],
            vec![Term::new(1.0 / d, self.g)],
        )
        .expect("valid pair weights")
    }

    /// Accept-reject from f: returns the draw and the proposals used.
    pub fn vanilla_sample(&self, rng: &mut RngStream) -> (f64, u64) {
        let mut proposals = 0;
        loop {
            proposals += 1;
            let x = self.f.sample(rng);
            if rng.open01() * self.a <= self.a - self.ratio(x) {
                return (x, proposals);
            }
        }
    }

    pub fn monotonicity(&self) -> MonotonicityProfile {
        monotone::profile(self)
    }

    pub fn build_partition(&self, delta: f64, eps: f64) -> Result<Partition, PairError> {
        partition::build(self, delta, eps)
    }
}
