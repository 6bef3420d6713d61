//! Normal and Gamma component densities.
//!
//! Normal components are parametrized by (mean, variance), Gamma components
//! by (shape, rate).

use std::f64::consts::{LN_2, SQRT_2};
use std::fmt;

use rand_distr::Distribution;
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::{checked_gamma_lr, checked_gamma_ur, ln_gamma};

use crate::error::ComponentError;
use crate::interval::Interval;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Normal,
    Gamma,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::Gamma => "gamma",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "normal" => Ok(Family::Normal),
            "gamma" => Ok(Family::Gamma),
            other => Err(format!("unknown family '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    family: Family,
    p1: f64,
    p2: f64,
    // log of the normalizing constant, added to the kernel in ln_pdf
    log_norm: f64,
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

impl Component {
    pub fn try_new(family: Family, p1: f64, p2: f64) -> Result<Self, ComponentError> {
        let bad = || ComponentError::InvalidParams {
            family: family.name(),
            p1,
            p2,
        };
        if !p1.is_finite() || !p2.is_finite() || p2 <= 0.0 {
            return Err(bad());
        }
        let log_norm = match family {
            Family::Normal => -0.5 * p2.ln() - LN_SQRT_2PI,
            Family::Gamma => {
                if p1 <= 0.0 {
                    return Err(bad());
                }
                p1 * p2.ln() - ln_gamma(p1)
            }
        };
        Ok(Self {
            family,
            p1,
            p2,
            log_norm,
        })
    }

    /// Normal component with the given mean and variance.
    ///
    /// # Panics
    /// If the variance is not positive or either value is not finite.
    pub fn normal(mean: f64, variance: f64) -> Self {
        Self::try_new(Family::Normal, mean, variance).expect("invalid Normal parameters")
    }

    /// Gamma component with the given shape and rate.
    ///
    /// # Panics
    /// If shape or rate is not positive and finite.
    pub fn gamma(shape: f64, rate: f64) -> Self {
        Self::try_new(Family::Gamma, shape, rate).expect("invalid Gamma parameters")
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Mean (Normal) or shape (Gamma).
    pub fn p1(&self) -> f64 {
        self.p1
    }

    /// Variance (Normal) or rate (Gamma).
    pub fn p2(&self) -> f64 {
        self.p2
    }

    fn sd(&self) -> f64 {
        self.p2.sqrt()
    }

    /// Lower end of the support.
    pub fn support_min(&self) -> f64 {
        match self.family {
            Family::Normal => f64::NEG_INFINITY,
            Family::Gamma => 0.0,
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        match self.family {
            Family::Normal => {
                let z = x - self.p1;
                self.log_norm - 0.5 * z * z / self.p2
            }
            Family::Gamma => {
                if x > 0.0 {
                    if x.is_infinite() {
                        return f64::NEG_INFINITY;
                    }
                    self.log_norm + (self.p1 - 1.0) * x.ln() - self.p2 * x
                } else if x == 0.0 {
                    if self.p1 < 1.0 {
                        f64::INFINITY
                    } else if self.p1 == 1.0 {
                        self.log_norm
                    } else {
                        f64::NEG_INFINITY
                    }
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// P(X <= x).
    pub fn cdf(&self, x: f64) -> f64 {
        match self.family {
            Family::Normal => {
                if x == f64::NEG_INFINITY {
                    return 0.0;
                }
                if x == f64::INFINITY {
                    return 1.0;
                }
                0.5 * erfc(-(x - self.p1) / (self.sd() * SQRT_2))
            }
            Family::Gamma => {
                if x <= 0.0 {
                    0.0
                } else if x.is_infinite() {
                    1.0
                } else {
                    checked_gamma_lr(self.p1, self.p2 * x).unwrap_or(1.0)
                }
            }
        }
    }

    /// P(X > x), computed without cancellation in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        match self.family {
            Family::Normal => {
                if x == f64::NEG_INFINITY {
                    return 1.0;
                }
                if x == f64::INFINITY {
                    return 0.0;
                }
                0.5 * erfc((x - self.p1) / (self.sd() * SQRT_2))
            }
            Family::Gamma => {
                if x <= 0.0 {
                    1.0
                } else if x.is_infinite() {
                    0.0
                } else {
                    checked_gamma_ur(self.p1, self.p2 * x).unwrap_or(0.0)
                }
            }
        }
    }

    pub fn median(&self) -> f64 {
        match self.family {
            Family::Normal => self.p1,
            Family::Gamma => self.quantile(0.5).unwrap_or(self.p1 / self.p2),
        }
    }

    /// Probability mass of the closed interval [lo, hi], taken from whichever
    /// tail keeps the subtraction well conditioned.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let lo = lo.max(self.support_min());
        if hi <= lo {
            return 0.0;
        }
        let (cl, sl) = (self.cdf(lo), self.sf(lo));
        let (ch, sh) = (self.cdf(hi), self.sf(hi));
        let m = if ch <= 0.5 {
            ch - cl
        } else if cl >= 0.5 {
            sl - sh
        } else {
            1.0 - cl - sh
        };
        m.max(0.0)
    }

    /// Smallest x with cdf(x) >= u.
    pub fn quantile(&self, u: f64) -> Result<f64, ComponentError> {
        if !(u > 0.0 && u < 1.0) {
            return Err(ComponentError::ProbabilityDomain(u));
        }
        Ok(match self.family {
            Family::Normal => {
                let x = if u < 0.5 {
                    self.p1 - self.sd() * SQRT_2 * erfc_inv(2.0 * u)
                } else {
                    self.p1 + self.sd() * SQRT_2 * erfc_inv(2.0 * (1.0 - u))
                };
                self.polish(x, u, false)
            }
            Family::Gamma => self.gamma_inverse(u, false) / self.p2,
        })
    }

    /// Inverse survival function: x with sf(x) = v.
    pub fn isf(&self, v: f64) -> Result<f64, ComponentError> {
        if !(v > 0.0 && v < 1.0) {
            return Err(ComponentError::ProbabilityDomain(v));
        }
        Ok(match self.family {
            Family::Normal => {
                let x = self.p1 + self.sd() * SQRT_2 * erfc_inv(2.0 * v);
                self.polish(x, v, true)
            }
            Family::Gamma => self.gamma_inverse(v, true) / self.p2,
        })
    }

    // One Newton step on the Normal tail equation.
    fn polish(&self, x: f64, target: f64, upper: bool) -> f64 {
        let d = self.pdf(x);
        if d <= 0.0 || !x.is_finite() {
            return x;
        }
        if upper {
            x + (self.sf(x) - target) / d
        } else {
            x - (self.cdf(x) - target) / d
        }
    }

    // Solves P(shape, y) = target (or Q when `upper`) for the standardized
    // variable y = rate * x: Newton on ln F against ln y, which is close to
    // linear in the tails, kept inside a shrinking bracket.
    fn gamma_inverse(&self, target: f64, upper: bool) -> f64 {
        let shape = self.p1;
        let lg = ln_gamma(shape);
        let tail = |y: f64| -> f64 {
            if upper {
                checked_gamma_ur(shape, y).unwrap_or(0.0)
            } else {
                checked_gamma_lr(shape, y).unwrap_or(1.0)
            }
        };
        let ln_target = target.ln();
        // h is increasing in ln y for the lower tail, decreasing for the upper
        let sign = if upper { -1.0 } else { 1.0 };
        let h = |y: f64| tail(y).ln() - ln_target;
        let guess = gamma_initial_guess(shape, target, upper, lg);

        let mut lo = guess;
        let mut hi = guess;
        while sign * h(lo) > 0.0 && lo > 1e-300 {
            lo *= 0.5;
        }
        while sign * h(hi) < 0.0 && hi < 1e300 {
            hi *= 2.0;
        }
        let (mut tlo, mut thi) = (lo.ln(), hi.ln());
        let mut t = guess.ln().clamp(tlo, thi);
        for _ in 0..200 {
            let y = t.exp();
            let fy = tail(y);
            let hy = fy.ln() - ln_target;
            if hy == 0.0 {
                return y;
            }
            if sign * hy < 0.0 {
                tlo = t;
            } else {
                thi = t;
            }
            // d/dt P(shape, e^t) = y * density(y)
            let dens = ((shape - 1.0) * t - y - lg).exp() * y;
            let mut next = t - hy * fy / (sign * dens);
            if !next.is_finite() || next <= tlo || next >= thi {
                next = 0.5 * (tlo + thi);
            }
            let done = (next - t).abs() <= 1e-15 * t.abs().max(1.0) || thi - tlo <= 1e-15;
            t = next;
            if done {
                break;
            }
        }
        t.exp()
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match self.family {
            Family::Normal => rand_distr::Normal::new(self.p1, self.sd())
                .expect("validated parameters")
                .sample(rng),
            Family::Gamma => rand_distr::Gamma::new(self.p1, 1.0 / self.p2)
                .expect("validated parameters")
                .sample(rng),
        }
    }

    /// Exact draw from the component restricted to `[lo, hi]`, by inversion.
    pub fn truncated_sample(
        &self,
        lo: f64,
        hi: f64,
        rng: &mut RngStream,
    ) -> Result<f64, ComponentError> {
        let mass = self.mass(lo, hi);
        if !(mass >= 1e-300) {
            return Err(ComponentError::DegenerateTruncation(mass));
        }
        let u = rng.open01();
        let lo = lo.max(self.support_min());
        let cl = self.cdf(lo);
        let x = if cl < 0.5 {
            let ch = self.cdf(hi);
            let p = (cl + u * (ch - cl)).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
            self.quantile(p)?
        } else {
            let sl = self.sf(lo);
            let sh = self.sf(hi);
            let v = (sh + u * (sl - sh)).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
            self.isf(v)?
        };
        Ok(x.clamp(lo, hi))
    }

    /// Density mode, `None` when the density is unbounded at 0.
    pub fn mode(&self) -> Option<f64> {
        match self.family {
            Family::Normal => Some(self.p1),
            Family::Gamma => {
                if self.p1 < 1.0 {
                    None
                } else {
                    Some((self.p1 - 1.0) / self.p2)
                }
            }
        }
    }

    /// (sup, inf) of the density over a bounded interval.
    pub fn extrema_on(&self, iv: Interval) -> Result<(f64, f64), ComponentError> {
        let (lo, hi) = (iv.lo, iv.hi);
        if self.family == Family::Gamma && self.p1 < 1.0 && lo <= 0.0 && hi >= 0.0 {
            return Err(ComponentError::Singular { lo, hi });
        }
        let (a, b) = (self.pdf(lo), self.pdf(hi));
        let mut sup = a.max(b);
        if let Some(m) = self.mode() {
            if m > lo && m < hi {
                sup = sup.max(self.pdf(m));
            }
        }
        Ok((sup, a.min(b)))
    }
}

fn gamma_initial_guess(shape: f64, target: f64, upper: bool, lg: f64) -> f64 {
    // Wilson-Hilferty cube-root approximation.
    let z = {
        let tail = if upper { target } else { 1.0 - target };
        // standard normal upper quantile of `tail`
        SQRT_2 * erfc_inv(2.0 * tail.clamp(1e-300, 1.0 - 1e-16))
    };
    let c = 1.0 / (9.0 * shape);
    let wh = shape * (1.0 - c + z * c.sqrt()).powi(3);
    if !upper {
        // small-y series P ~ y^shape / Gamma(shape + 1)
        let small = ((target.ln() + lg + shape.ln()) / shape).exp();
        if wh <= 0.0 || shape < 1.0 || small < 0.1 * shape {
            return small.max(1e-300);
        }
    }
    if wh > 0.0 && wh.is_finite() {
        wh
    } else {
        shape.max(1.0) + LN_2 - target.ln()
    }
}
