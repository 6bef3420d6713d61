//! Decomposing a signed mixture into two-component pairs plus residuals, and
//! sampling the full mixture from that decomposition.
//!
//! A pairing assigns weights (w⁺_ij, w⁻_ij) to admissible (positive,
//! negative) component pairs so that
//!
//!   m = Σ_F (w⁺_ij f_i − w⁻_ij g_j) + Σ r_i f_i − Σ s_j g_j,
//!
//! with r, s the leftover weights. Draws come from the unsigned mixture
//! π ∝ Σ_F (w⁺_ij f_i − w⁻_ij g_j) + Σ r_i f_i and are accepted with
//! probability m(x)/(C·π(x)). The pair weights minimize
//! Σ (1 − δ)w⁺_ij − w⁻_ij, which bounds the expected number of proposals.

use std::fmt::Write;

use once_cell::sync::OnceCell;

use crate::error::{PairError, PairingError};
use crate::lp::{simplex_solve, LpProblem, LpStatus, Relation};
use crate::mixture::SignedMixture;
use crate::pair::{ln_a_star, Partition, TwoComponentPair};
use crate::rng::{Categorical, RngStream};

/// Weights below this are treated as zero.
const ZERO_WEIGHT: f64 = 1e-9;
const OBJECTIVE_TIE_BREAK: f64 = 1e-11;
const RATIO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEntry {
    pub pos: usize,
    pub neg: usize,
    pub a_star: f64,
}

/// Every (positive, negative) index pair whose components can form a
/// non-negative two-component mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct AcceptablePairSet {
    entries: Vec<PairEntry>,
    by_pos: Vec<Vec<usize>>,
    by_neg: Vec<Vec<usize>>,
}

impl AcceptablePairSet {
    pub fn entries(&self) -> &[PairEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Indices into `entries()` that involve positive component `i`.
    pub fn incident_to_positive(&self, i: usize) -> &[usize] {
        &self.by_pos[i]
    }

    /// Indices into `entries()` that involve negative component `j`.
    pub fn incident_to_negative(&self, j: usize) -> &[usize] {
        &self.by_neg[j]
    }
}

pub fn acceptable_pairs(model: &SignedMixture) -> Result<AcceptablePairSet, PairingError> {
    let (pos, neg) = (model.positives(), model.negatives());
    let mut entries = Vec::new();
    let mut by_pos = vec![Vec::new(); pos.len()];
    let mut by_neg = vec![Vec::new(); neg.len()];
    for (i, p) in pos.iter().enumerate() {
        for (j, n) in neg.iter().enumerate() {
            match ln_a_star(&p.comp, &n.comp) {
                Ok(ln_a) if ln_a.is_finite() => {
                    by_pos[i].push(entries.len());
                    by_neg[j].push(entries.len());
                    entries.push(PairEntry {
                        pos: i,
                        neg: j,
                        a_star: ln_a.exp(),
                    });
                }
                Ok(_) | Err(PairError::NotPairable(_)) => {}
                Err(e) => return Err(e.into()),
            }
        }
    }
    if entries.is_empty() && !neg.is_empty() {
        return Err(PairingError::EmptyPairSet);
    }
    Ok(AcceptablePairSet {
        entries,
        by_pos,
        by_neg,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Vanilla,
    Stratified,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Vanilla => "vanilla",
            Strategy::Stratified => "stratified",
        }
    }
}

#[derive(Debug)]
pub struct PairedTerm {
    pub pos: usize,
    pub neg: usize,
    pub w_pos: f64,
    pub w_neg: f64,
    pub pair: TwoComponentPair,
    pub strategy: Strategy,
    partition: OnceCell<Partition>,
}

impl PairedTerm {
    /// Weight of this term in the proposal mixture (before dividing by C).
    pub fn net_weight(&self) -> f64 {
        self.w_pos - self.w_neg
    }

    /// (1 − δ)w⁺ − w⁻.
    pub fn objective(&self, delta: f64) -> f64 {
        (1.0 - delta) * self.w_pos - self.w_neg
    }

    pub fn partition(&self) -> Option<&Partition> {
        self.partition.get()
    }
}

#[derive(Debug)]
pub struct Pairing {
    model: SignedMixture,
    delta: f64,
    eps: f64,
    terms: Vec<PairedTerm>,
    residual_pos: Vec<f64>,
    residual_neg: Vec<f64>,
    normalizer: f64,
    select: Categorical,
    lp_objective: f64,
    lp_iterations: usize,
}

/// Expected proposal counts per accepted draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    /// 1/δ + (1 − 1/δ)Σr + Σs/δ, exact when every pair is stratified at
    /// acceptance δ.
    pub identity: f64,
    /// Σω⁺ + (1/δ) Σ_F min(0, (1 − δ)w⁺ − w⁻), an upper bound for any pairing
    /// whose stratified pairs reach acceptance δ.
    pub bound: f64,
}

impl Pairing {
    pub fn model(&self) -> &SignedMixture {
        &self.model
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn terms(&self) -> &[PairedTerm] {
        &self.terms
    }

    pub fn residual_pos(&self) -> &[f64] {
        &self.residual_pos
    }

    pub fn residual_neg(&self) -> &[f64] {
        &self.residual_neg
    }

    /// C = Σω⁺ − Σ_F w⁻.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// Optimal value of the pairing linear program (before tie-breaking).
    pub fn lp_objective(&self) -> f64 {
        self.lp_objective
    }

    pub fn lp_iterations(&self) -> usize {
        self.lp_iterations
    }

    pub fn has_negative_residual(&self) -> bool {
        self.residual_neg.iter().any(|&s| s > 0.0)
    }

    pub fn budget(&self) -> Budget {
        expected_budget(self, self.delta)
    }

    /// Builds every stratified partition now instead of at first use.
    pub fn prepare(&self) -> Result<(), PairingError> {
        for t in &self.terms {
            self.partition_for(t)?;
        }
        Ok(())
    }

    fn partition_for<'a>(&self, t: &'a PairedTerm) -> Result<Option<&'a Partition>, PairingError> {
        if t.strategy == Strategy::Vanilla {
            return Ok(None);
        }
        let p = t
            .partition
            .get_or_try_init(|| t.pair.build_partition(self.delta, self.eps))?;
        Ok(Some(p))
    }

    /// Expected proposals per accepted draw, using the built partitions.
    pub fn expected_proposals(&self) -> Result<f64, PairingError> {
        let mut total: f64 = self.residual_pos.iter().sum();
        for t in &self.terms {
            total += match self.partition_for(t)? {
                Some(p) => t.net_weight() * p.expected_proposals(),
                None => t.w_pos,
            };
        }
        Ok(total)
    }

    /// C·π(x).
    pub fn proposal_density(&self, x: f64) -> f64 {
        let pos = self.model.positives();
        let neg = self.model.negatives();
        let paired: f64 = self
            .terms
            .iter()
            .map(|t| t.w_pos * pos[t.pos].comp.pdf(x) - t.w_neg * neg[t.neg].comp.pdf(x))
            .sum();
        let residual: f64 = self
            .residual_pos
            .iter()
            .zip(pos)
            .filter(|(&r, _)| r > 0.0)
            .map(|(r, t)| r * t.comp.pdf(x))
            .sum();
        paired + residual
    }

    /// One exact draw from the model and the number of proposals used,
    /// counting every inner proposal of the pair samplers.
    pub fn sample(&self, rng: &mut RngStream) -> Result<(f64, u64), PairingError> {
        let mut proposals = 0;
        let check = self.has_negative_residual();
        loop {
            let k = self.select.sample(rng);
            let x = if k < self.terms.len() {
                let t = &self.terms[k];
                let (x, used) = match self.partition_for(t)? {
                    Some(p) => p.sample(rng),
                    None => t.pair.vanilla_sample(rng),
                };
                proposals += used;
                x
            } else {
                proposals += 1;
                self.model.positives()[k - self.terms.len()]
                    .comp
                    .sample(rng)
            };
            if !check {
                return Ok((x, proposals));
            }
            let cpi = self.proposal_density(x);
            let plus = self.model.positive_pdf(x);
            let m = plus - self.model.negative_pdf(x);
            if m - cpi > RATIO_TOL * (cpi + plus) {
                return Err(PairingError::RatioOverflow(m / cpi));
            }
            if rng.open01() * cpi <= m {
                return Ok((x, proposals));
            }
        }
    }

    /// Draws `n` points; returns them with the total proposal count.
    pub fn sample_n(&self, n: usize, rng: &mut RngStream) -> Result<(Vec<f64>, u64), PairingError> {
        let mut total = 0;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let (x, p) = self.sample(rng)?;
            total += p;
            out.push(x);
        }
        Ok((out, total))
    }

    /// Text dump: `pair <i> <j> <w+> <w-> <strategy>` per paired term, then
    /// `residual+ <i> <r>`, `residual- <j> <s>` and `C <value>`. Indices are
    /// zero-based positions among the positive (resp. negative) components.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for t in &self.terms {
            let _ = writeln!(
                out,
                "pair {} {} {:?} {:?} {}",
                t.pos,
                t.neg,
                t.w_pos,
                t.w_neg,
                t.strategy.name()
            );
        }
        for (i, r) in self.residual_pos.iter().enumerate() {
            let _ = writeln!(out, "residual+ {i} {r:?}");
        }
        for (j, s) in self.residual_neg.iter().enumerate() {
            let _ = writeln!(out, "residual- {j} {s:?}");
        }
        let _ = writeln!(out, "C {:?}", self.normalizer);
        out
    }
}

pub fn expected_budget(pairing: &Pairing, delta: f64) -> Budget {
    let sr: f64 = pairing.residual_pos.iter().sum();
    let ss: f64 = pairing.residual_neg.iter().sum();
    let identity = 1.0 / delta + (1.0 - 1.0 / delta) * sr + ss / delta;
    let gain: f64 = pairing
        .terms
        .iter()
        .map(|t| t.objective(delta).min(0.0))
        .sum();
    Budget {
        identity,
        bound: pairing.model.positive_total() + gain / delta,
    }
}

/// Builds the pairing that minimizes the expected proposal budget at target
/// acceptance `delta`; stratified pairs are partitioned with tolerance `eps`
/// when first sampled.
pub fn optimal_pairing(
    model: &SignedMixture,
    delta: f64,
    eps: f64,
) -> Result<Pairing, PairingError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(PairingError::BadDelta(delta));
    }
    let set = acceptable_pairs(model)?;
    // A pair with (1 − δ)a* ≥ 1 contributes a non-negative objective term for
    // any feasible weights, so some optimum leaves it at zero.
    let kept: Vec<PairEntry> = set
        .entries()
        .iter()
        .copied()
        .filter(|e| (1.0 - delta) * e.a_star < 1.0)
        .collect();
    let (weights, lp_objective, lp_iterations) = solve_pairing_lp(model, &kept, delta)?;

    let pos = model.positives();
    let neg = model.negatives();
    let mut residual_pos: Vec<f64> = pos.iter().map(|t| t.weight).collect();
    let mut residual_neg: Vec<f64> = neg.iter().map(|t| t.weight).collect();
    let mut terms = Vec::new();
    for (e, (mut wp, mut wn)) in kept.iter().zip(weights) {
        if wp + wn < ZERO_WEIGHT || wn < ZERO_WEIGHT * 1e-3 {
            continue;
        }
        if wp < e.a_star * wn {
            wn = wp / e.a_star;
        }
        wp = wp.max(wn * e.a_star);
        let pair = TwoComponentPair::new(pos[e.pos].comp, neg[e.neg].comp, wp / wn)?;
        let strategy = if (1.0 - delta) * wp - wn >= 0.0 {
            Strategy::Vanilla
        } else {
            Strategy::Stratified
        };
        residual_pos[e.pos] -= wp;
        residual_neg[e.neg] -= wn;
        terms.push(PairedTerm {
            pos: e.pos,
            neg: e.neg,
            w_pos: wp,
            w_neg: wn,
            pair,
            strategy,
            partition: OnceCell::new(),
        });
    }
    // Clamp rounding residue; relative to each component's own weight.
    for (r, t) in residual_pos.iter_mut().zip(pos) {
        if *r < ZERO_WEIGHT * t.weight.max(1.0) {
            *r = 0.0;
        }
    }
    for (s, t) in residual_neg.iter_mut().zip(neg) {
        if *s < ZERO_WEIGHT * t.weight.max(1.0) {
            *s = 0.0;
        }
    }
    let normalizer = model.positive_total() - terms.iter().map(|t| t.w_neg).sum::<f64>();
    let mut sel: Vec<f64> = terms.iter().map(|t| t.net_weight()).collect();
    sel.extend(&residual_pos);
    let select = Categorical::new(&sel).ok_or(PairingError::Lp(LpStatus::Infeasible))?;
    Ok(Pairing {
        model: model.clone(),
        delta,
        eps,
        terms,
        residual_pos,
        residual_neg,
        normalizer,
        select,
        lp_objective,
        lp_iterations,
    })
}

/// Solves the pairing program over `entries`; returns (w⁺, w⁻) per entry.
fn solve_pairing_lp(
    model: &SignedMixture,
    entries: &[PairEntry],
    delta: f64,
) -> Result<(Vec<(f64, f64)>, f64, usize), PairingError> {
    if entries.is_empty() {
        return Ok((Vec::new(), 0.0, 0));
    }
    let nv = 2 * entries.len();
    let objective: Vec<f64> = (0..nv)
        .map(|k| {
            let base = if k % 2 == 0 { 1.0 - delta } else { -1.0 };
            base + OBJECTIVE_TIE_BREAK * k as f64
        })
        .collect();
    let mut lp = LpProblem::new(objective);
    for (e, entry) in entries.iter().enumerate() {
        let mut row = vec![0.0; nv];
        row[2 * e] = -1.0;
        row[2 * e + 1] = entry.a_star;
        lp.add_row(row, Relation::Le, 0.0);
    }
    for (i, t) in model.positives().iter().enumerate() {
        let mut row = vec![0.0; nv];
        let mut any = false;
        for (e, entry) in entries.iter().enumerate() {
            if entry.pos == i {
                row[2 * e] = 1.0;
                any = true;
            }
        }
        if any {
            lp.add_row(row, Relation::Le, t.weight);
        }
    }
    for (j, t) in model.negatives().iter().enumerate() {
        let mut row = vec![0.0; nv];
        let mut any = false;
        for (e, entry) in entries.iter().enumerate() {
            if entry.neg == j {
                row[2 * e + 1] = 1.0;
                any = true;
            }
        }
        if any {
            lp.add_row(row, Relation::Le, t.weight);
        }
    }
    let sol = simplex_solve(&lp);
    if sol.status != LpStatus::Optimal {
        return Err(PairingError::Lp(sol.status));
    }
    let weights = (0..entries.len())
        .map(|e| (sol.x[2 * e], sol.x[2 * e + 1]))
        .collect();
    let objective = weights_objective(&sol.x, delta);
    Ok((weights, objective, sol.iterations))
}

fn weights_objective(x: &[f64], delta: f64) -> f64 {
    x.chunks(2).map(|w| (1.0 - delta) * w[0] - w[1]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::component::Component;
    use crate::mixture::Term;

    fn single_pair_model() -> SignedMixture {
        let (f, g) = (Component::normal(0.0, 1.0), Component::normal(0.0, 0.25));
        TwoComponentPair::saturated(f, g).unwrap().to_mixture()
    }

    #[test]
    fn single_saturated_pair() {
        let m = single_pair_model();
        let p = optimal_pairing(&m, 0.6, 0.2).unwrap();
        assert_eq!(p.terms().len(), 1);
        let t = &p.terms()[0];
        assert!((t.w_pos - 2.0).abs() < 1e-9 && (t.w_neg - 1.0).abs() < 1e-9);
        assert!(p.residual_pos().iter().all(|&r| r == 0.0));
        assert!(p.residual_neg().iter().all(|&s| s == 0.0));
        assert!((p.normalizer() - 1.0).abs() < 1e-9);
        assert_eq!(t.strategy, Strategy::Stratified);
        let b = p.budget();
        assert!((b.identity - 1.0 / 0.6).abs() < 1e-9);
    }

    #[test]
    fn no_negatives_is_trivial() {
        let m = SignedMixture::new(
            vec![
                Term::new(0.3, Component::gamma(2.0, 1.0)),
                Term::new(0.7, Component::gamma(5.0, 1.0)),
            ],
            vec![],
        )
        .unwrap();
        let p = optimal_pairing(&m, 0.5, 0.2).unwrap();
        assert!(p.terms().is_empty());
        assert_eq!(p.residual_pos(), &[0.3, 0.7]);
        let mut rng = RngStream::new(1);
        let (_, used) = p.sample_n(100, &mut rng).unwrap();
        assert_eq!(used, 100);
    }

    #[test]
    fn unpairable_negatives_error() {
        let m = SignedMixture::new(
            vec![Term::new(2.0, Component::normal(0.0, 0.25))],
            vec![Term::new(1.0, Component::normal(0.0, 1.0))],
        )
        .unwrap();
        assert_eq!(
            acceptable_pairs(&m).unwrap_err(),
            PairingError::EmptyPairSet
        );
    }

    #[test]
    fn dump_lists_everything() {
        let p = optimal_pairing(&single_pair_model(), 0.6, 0.2).unwrap();
        let d = p.dump();
        assert!(d.starts_with("pair 0 0 "));
        assert!(d.contains("stratified"));
        assert!(d.contains("residual+ 0 "));
        assert!(d.contains("residual- 0 "));
        assert!(d.trim_end().lines().last().unwrap().starts_with("C "));
    }

    #[test]
    fn budget_arithmetic() {
        // s = 0, Σr = 0.5, δ = 0.5 gives 2 + (1 − 2)·0.5 = 1.5
        let m = SignedMixture::new(
            vec![
                Term::new(1.0, Component::normal(0.0, 1.0)),
                Term::new(0.5, Component::normal(3.0, 1.0)),
            ],
            vec![Term::new(0.5, Component::normal(0.0, 0.25))],
        )
        .unwrap();
        let p = optimal_pairing(&m, 0.5, 0.2).unwrap();
        let b = expected_budget(&p, 0.5);
        let sr: f64 = p.residual_pos().iter().sum();
        let ss: f64 = p.residual_neg().iter().sum();
        assert!((b.identity - (2.0 - sr + 2.0 * ss)).abs() < 1e-12);
    }
}
