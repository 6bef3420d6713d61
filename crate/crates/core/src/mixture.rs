//! Signed mixtures: a positive combination of components minus a positive
//! combination of components, with total weight one.

use crate::component::{Component, Family};
use crate::error::ModelError;
use crate::interval::{Interval, IntervalSet};
use crate::rng::{Categorical, RngStream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub weight: f64,
    pub comp: Component,
}

impl Term {
    pub fn new(weight: f64, comp: Component) -> Self {
        Self { weight, comp }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignedMixture {
    family: Family,
    positives: Vec<Term>,
    negatives: Vec<Term>,
}

impl SignedMixture {
    /// Checks structure only: at least one positive term, positive finite
    /// weights, a single family. Normalization and positivity are the job of
    /// [`crate::validate::validate_model`].
    pub fn new(positives: Vec<Term>, negatives: Vec<Term>) -> Result<Self, ModelError> {
        let first = positives.first().ok_or(ModelError::NoPositive)?;
        let family = first.comp.family();
        for t in positives.iter().chain(&negatives) {
            if !(t.weight > 0.0 && t.weight.is_finite()) {
                return Err(ModelError::BadWeight(t.weight));
            }
            if t.comp.family() != family {
                return Err(ModelError::MixedFamilies);
            }
        }
        Ok(Self {
            family,
            positives,
            negatives,
        })
    }

    /// Single positive component with weight one.
    pub fn single(comp: Component) -> Self {
        Self::new(vec![Term::new(1.0, comp)], Vec::new()).expect("one positive term")
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn positives(&self) -> &[Term] {
        &self.positives
    }

    pub fn negatives(&self) -> &[Term] {
        &self.negatives
    }

    pub fn positive_total(&self) -> f64 {
        self.positives.iter().map(|t| t.weight).sum()
    }

    pub fn negative_total(&self) -> f64 {
        self.negatives.iter().map(|t| t.weight).sum()
    }

    /// Σω⁺ − Σω⁻; one for a normalized model.
    pub fn total_weight(&self) -> f64 {
        self.positive_total() - self.negative_total()
    }

    /// Copy with every weight divided by `total_weight()`.
    pub fn normalized(&self) -> Self {
        let z = self.total_weight();
        let scale = |v: &Vec<Term>| v.iter().map(|t| Term::new(t.weight / z, t.comp)).collect();
        Self {
            family: self.family,
            positives: scale(&self.positives),
            negatives: scale(&self.negatives),
        }
    }

    pub fn components(&self) -> impl Iterator<Item = &Component> {
        self.positives
            .iter()
            .chain(&self.negatives)
            .map(|t| &t.comp)
    }

    /// Σω⁺f(x), the unnormalized positive part.
    pub fn positive_pdf(&self, x: f64) -> f64 {
        self.positives
            .iter()
            .map(|t| t.weight * t.comp.pdf(x))
            .sum()
    }

    pub fn negative_pdf(&self, x: f64) -> f64 {
        self.negatives
            .iter()
            .map(|t| t.weight * t.comp.pdf(x))
            .sum()
    }

    /// Signed density; may come out slightly negative from rounding.
    pub fn pdf(&self, x: f64) -> f64 {
        self.positive_pdf(x) - self.negative_pdf(x)
    }

    /// Signed mass of [lo, hi].
    pub fn mass_interval(&self, lo: f64, hi: f64) -> f64 {
        let pos: f64 = self
            .positives
            .iter()
            .map(|t| t.weight * t.comp.mass(lo, hi))
            .sum();
        let neg: f64 = self
            .negatives
            .iter()
            .map(|t| t.weight * t.comp.mass(lo, hi))
            .sum();
        pos - neg
    }

    pub fn mass(&self, region: &IntervalSet) -> f64 {
        region
            .parts()
            .iter()
            .map(|p| self.mass_interval(p.lo, p.hi))
            .sum()
    }

    /// m((-inf, x]).
    pub fn cdf(&self, x: f64) -> f64 {
        self.mass_interval(f64::NEG_INFINITY, x)
    }

    /// Range covering every component between its `tail` and `1 - tail`
    /// quantiles.
    pub fn quantile_span(&self, tail: f64) -> Interval {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in self.components() {
            lo = lo.min(c.quantile(tail).expect("tail in (0, 1)"));
            hi = hi.max(c.isf(tail).expect("tail in (0, 1)"));
        }
        Interval::new(lo, hi)
    }

    pub fn vanilla_sampler(&self) -> VanillaSampler<'_> {
        let weights: Vec<f64> = self.positives.iter().map(|t| t.weight).collect();
        VanillaSampler {
            model: self,
            select: Categorical::new(&weights).expect("positive weights"),
        }
    }
}

/// Accept-reject from the positive part of a model.
#[derive(Debug, Clone)]
pub struct VanillaSampler<'a> {
    model: &'a SignedMixture,
    select: Categorical,
}

impl VanillaSampler<'_> {
    /// Returns the draw and the number of proposals it took.
    pub fn sample(&self, rng: &mut RngStream) -> (f64, u64) {
        let mut proposals = 0;
        loop {
            proposals += 1;
            let k = self.select.sample(rng);
            let x = self.model.positives[k].comp.sample(rng);
            let pos = self.model.positive_pdf(x);
            let neg = self.model.negative_pdf(x);
            if rng.open01() * pos <= pos - neg {
                return (x, proposals);
            }
        }
    }
}

/// Draws `n` points from `model` by vanilla accept-reject.
pub fn vanilla_sample_model(
    model: &SignedMixture,
    n: usize,
    rng: &mut RngStream,
) -> (Vec<f64>, u64) {
    let s = model.vanilla_sampler();
    let mut total = 0;
    let draws = (0..n)
        .map(|_| {
            let (x, p) = s.sample(rng);
            total += p;
            x
        })
        .collect();
    (draws, total)
}
