//! Model checks: normalization and a probed positivity test.
//!
//! Non-negativity of a signed mixture has no closed-form test, so the density
//! is evaluated on a grid spanning every component's bulk, refined around
//! probes where it nearly vanishes, plus a few far-tail probes.

use std::fmt;

use crate::component::Family;
use crate::interval::Interval;
use crate::mixture::SignedMixture;

const GRID_POINTS: usize = 512;
const GRID_TAIL: f64 = 1e-6;
const REFINE_BELOW: f64 = 1e-6;
const REFINE_FACTOR: usize = 4;
const NORMALIZATION_TOL: f64 = 1e-8;
// Negativity threshold relative to the positive part, so that rounding in
// heavily cancelling models is not reported as a failure.
const NEGATIVITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Issue {
    Unnormalized { factor: f64 },
    NonPositiveTotal { total: f64 },
    Negative { x: f64, value: f64 },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::Unnormalized { factor } => write!(f, "unnormalized, factor {factor}"),
            Issue::NonPositiveTotal { total } => {
                write!(f, "total weight {total} is not positive")
            }
            Issue::Negative { x, value } => write!(f, "density {value:e} < 0 at x = {x}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub total_weight: f64,
    pub issues: Vec<Issue>,
    pub min_density: f64,
    pub min_location: f64,
    pub probes: usize,
    /// Renormalized copy, offered when the only problem is the total weight.
    pub normalized: Option<SignedMixture>,
}

impl ValidationReport {
    /// No negativity found and a positive total weight. An unnormalized but
    /// otherwise valid model still counts as valid.
    pub fn is_valid(&self) -> bool {
        !self
            .issues
            .iter()
            .any(|i| !matches!(i, Issue::Unnormalized { .. }))
    }

    pub fn is_normalized(&self) -> bool {
        self.is_valid() && self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "status {}",
            if self.is_valid() { "valid" } else { "invalid" }
        )?;
        writeln!(f, "total_weight {}", self.total_weight)?;
        writeln!(
            f,
            "min_density {:e} at {} ({} probes)",
            self.min_density, self.min_location, self.probes
        )?;
        for i in &self.issues {
            writeln!(f, "issue {i}")?;
        }
        Ok(())
    }
}

pub fn validate_model(model: &SignedMixture) -> ValidationReport {
    let total = model.total_weight();
    let mut issues = Vec::new();
    if !(total > 0.0) {
        issues.push(Issue::NonPositiveTotal { total });
    } else if (total - 1.0).abs() > NORMALIZATION_TOL {
        issues.push(Issue::Unnormalized { factor: total });
    }

    let points = probe_points(model);
    let mut min_density = f64::INFINITY;
    let mut min_location = f64::NAN;
    let mut worst: Option<(f64, f64, f64)> = None;
    let scale = if total > 0.0 { total } else { 1.0 };
    for &x in &points {
        let pos = model.positive_pdf(x) / scale;
        let v = pos - model.negative_pdf(x) / scale;
        if v < min_density {
            min_density = v;
            min_location = x;
        }
        let slack = v + NEGATIVITY_TOL * pos.max(1.0);
        if slack < 0.0 && worst.is_none_or(|w| slack < w.2) {
            worst = Some((x, v, slack));
        }
    }
    if let Some((x, value, _)) = worst {
        issues.push(Issue::Negative { x, value });
    }

    let normalized = (issues.len() == 1 && matches!(issues[0], Issue::Unnormalized { .. }))
        .then(|| model.normalized());
    ValidationReport {
        total_weight: total,
        issues,
        min_density,
        min_location,
        probes: points.len(),
        normalized,
    }
}

fn probe_points(model: &SignedMixture) -> Vec<f64> {
    let span = model.quantile_span(GRID_TAIL);
    let step = span.len() / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| span.lo + step * i as f64)
        .collect();
    let mut points = grid.clone();
    for &x in &grid {
        if model.pdf(x) < REFINE_BELOW {
            let h = step / REFINE_FACTOR as f64;
            for k in 1..REFINE_FACTOR {
                points.push(x - h * k as f64);
                points.push(x + h * k as f64);
            }
        }
    }
    // Far tails, where the widest component must dominate.
    for tail in [1e-9, 1e-12, 1e-15] {
        let Interval { lo, hi } = model.quantile_span(tail);
        points.push(lo);
        points.push(hi);
    }
    if model.family() == Family::Gamma {
        let mut x = span.lo;
        for _ in 0..16 {
            x *= 0.1;
            points.push(x);
        }
        points.retain(|&x| x > 0.0);
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
}
