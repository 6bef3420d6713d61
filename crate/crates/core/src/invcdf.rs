//! Numerical inversion of a mixture cdf.
//!
//! A table of (q_i, p_i = m((-inf, q_i])) gives a piecewise-affine inverse.
//! Inside the table a probability u is located by repeated affine preimages
//! on the bracketing pair (regula falsi); below the first or above the last
//! point the first or last two points are extrapolated until u is bracketed.
//! Results are approximate: the contract is |cdf(x) − u| < precision.

use crate::error::InvCdfError;
use crate::mixture::SignedMixture;
use crate::rng::RngStream;

pub const DEFAULT_TABLE_SIZE: usize = 1024;
pub const DEFAULT_PRECISION: f64 = 1e-10;
const TABLE_TAIL: f64 = 1e-8;
const MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

/// Table of `n` equally spaced abscissae spanning every component between
/// its 1e-8 and 1 − 1e-8 quantiles.
pub fn build_table(model: &SignedMixture, n: usize) -> Result<QuantileTable, InvCdfError> {
    if n < 2 {
        return Err(InvCdfError::TableTooSmall(n));
    }
    let span = model.quantile_span(TABLE_TAIL);
    let step = span.len() / (n - 1) as f64;
    let q: Vec<f64> = (0..n)
        .map(|i| {
            if i + 1 == n {
                span.hi
            } else {
                span.lo + step * i as f64
            }
        })
        .collect();
    let p = q.iter().map(|&x| model.cdf(x)).collect();
    Ok(QuantileTable { q, p })
}

/// A quantile together with the number of cdf evaluations spent on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantile {
    pub x: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct InverseCdf {
    model: SignedMixture,
    table: QuantileTable,
    precision: f64,
    support_lo: f64,
}

impl InverseCdf {
    pub fn new(model: &SignedMixture, n: usize, precision: f64) -> Result<Self, InvCdfError> {
        let table = build_table(model, n)?;
        let support_lo = model
            .components()
            .map(|c| c.support_min())
            .fold(f64::INFINITY, f64::min);
        Ok(Self {
            model: model.clone(),
            table,
            precision,
            support_lo,
        })
    }

    pub fn with_defaults(model: &SignedMixture) -> Result<Self, InvCdfError> {
        Self::new(model, DEFAULT_TABLE_SIZE, DEFAULT_PRECISION)
    }

    pub fn table(&self) -> &QuantileTable {
        &self.table
    }

    pub fn precision(&self) -> f64 {
        self.precision
    }

    pub fn model(&self) -> &SignedMixture {
        &self.model
    }

    pub fn quantile(&self, u: f64) -> Result<Quantile, InvCdfError> {
        if !(u > 0.0 && u < 1.0) {
            return Err(InvCdfError::ProbabilityDomain(u));
        }
        let (q, p) = (&self.table.q, &self.table.p);
        let n = q.len();
        let eps = self.precision;
        let mut iterations = 0;

        let ((a, pa), (b, pb)) = if u < p[0] {
            // left tail: extrapolate leftwards until p* <= u + eps
            let (mut x0, mut p0, mut x1, mut p1) = (q[0], p[0], q[1], p[1]);
            loop {
                iterations += 1;
                if iterations > MAX_ITERATIONS {
                    return Err(InvCdfError::MaxIterations(MAX_ITERATIONS));
                }
                let slope = (p1 - p0) / (x1 - x0);
                let mut next = if slope > 1e-300 {
                    x0 - (p0 - u) / slope
                } else {
                    x0 - 2.0 * (x1 - x0)
                };
                if !(next < x0) {
                    next = x0 - (x1 - x0);
                }
                if next <= self.support_lo {
                    next = 0.5 * (self.support_lo + x0);
                }
                let pn = self.model.cdf(next);
                if (pn - u).abs() < eps {
                    return Ok(Quantile {
                        x: next,
                        iterations,
                    });
                }
                if pn <= u + eps {
                    break ((next, pn), (x0, p0));
                }
                (x1, p1, x0, p0) = (x0, p0, next, pn);
            }
        } else if u > p[n - 1] {
            let (mut x0, mut p0, mut x1, mut p1) = (q[n - 2], p[n - 2], q[n - 1], p[n - 1]);
            loop {
                iterations += 1;
                if iterations > MAX_ITERATIONS {
                    return Err(InvCdfError::MaxIterations(MAX_ITERATIONS));
                }
                let slope = (p1 - p0) / (x1 - x0);
                let mut next = if slope > 1e-300 {
                    x1 + (u - p1) / slope
                } else {
                    x1 + 2.0 * (x1 - x0)
                };
                if !(next > x1) {
                    next = x1 + (x1 - x0);
                }
                let pn = self.model.cdf(next);
                if (pn - u).abs() < eps {
                    return Ok(Quantile {
                        x: next,
                        iterations,
                    });
                }
                if pn >= u - eps {
                    break ((x1, p1), (next, pn));
                }
                (x0, p0, x1, p1) = (x1, p1, next, pn);
            }
        } else {
            // first table point with p >= u
            let i = p.partition_point(|&v| v < u).clamp(1, n - 1);
            ((q[i - 1], p[i - 1]), (q[i], p[i]))
        };
        if (pa - u).abs() < eps {
            return Ok(Quantile { x: a, iterations });
        }
        if (pb - u).abs() < eps {
            return Ok(Quantile { x: b, iterations });
        }
        self.refine(u, (a, pa), (b, pb), iterations)
    }

    // Regula falsi on a bracket with pa < u < pb.
    fn refine(
        &self,
        u: f64,
        (mut a, mut pa): (f64, f64),
        (mut b, mut pb): (f64, f64),
        mut iterations: usize,
    ) -> Result<Quantile, InvCdfError> {
        loop {
            iterations += 1;
            if iterations > MAX_ITERATIONS {
                return Err(InvCdfError::MaxIterations(MAX_ITERATIONS));
            }
            let dp = pb - pa;
            let mut x = ((b - a) * u - pa * b + pb * a) / dp;
            if !(dp / (b - a) >= 1e-300) || !(x > a && x < b) {
                x = 0.5 * (a + b);
            }
            if x <= a || x >= b {
                // bracket exhausted at double precision
                return Ok(Quantile { x, iterations });
            }
            let px = self.model.cdf(x);
            if (px - u).abs() < self.precision {
                return Ok(Quantile { x, iterations });
            }
            if px < u {
                (a, pa) = (x, px);
            } else {
                (b, pb) = (x, px);
            }
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Result<f64, InvCdfError> {
        Ok(self.quantile(rng.open01())?.x)
    }
}
