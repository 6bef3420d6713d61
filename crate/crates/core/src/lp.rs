//! Dense two-phase simplex for small linear programs
//! `minimize c·x subject to A x (<=, >=, =) b, x >= 0`.
//!
//! Entering columns follow Dantzig's rule (ties to the lowest index) and
//! switch to Bland's rule after 2·(variables + constraints) pivots, which
//! guarantees termination on degenerate problems.

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Cycled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub relations: Vec<Relation>,
    pub rhs: Vec<f64>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>) -> Self {
        Self {
            objective,
            rows: Vec::new(),
            relations: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, rel: Relation, rhs: f64) {
        assert_eq!(coeffs.len(), self.num_vars(), "row length");
        self.rows.push(coeffs);
        self.relations.push(rel);
        self.rhs.push(rhs);
    }

    /// Largest violation of the constraints and bounds at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().map(|&v| (-v).max(0.0)).fold(0.0, f64::max);
        for ((row, rel), &b) in self.rows.iter().zip(&self.relations).zip(&self.rhs) {
            let lhs: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
            let v = match rel {
                Relation::Le => lhs - b,
                Relation::Ge => b - lhs,
                Relation::Eq => (lhs - b).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Reduced costs of the original variables at the final basis.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

struct Tableau {
    // rows of [coefficients..., rhs]
    t: Vec<Vec<f64>>,
    // reduced-cost row, same layout; last entry is -objective
    z: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
    bland_after: usize,
    iterations: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
    Cycled,
}

impl Tableau {
    fn set_costs(&mut self, costs: &[f64]) {
        let w = self.cols + 1;
        let mut z = vec![0.0; w];
        z[..costs.len()].copy_from_slice(costs);
        for (row, &b) in self.t.iter().zip(&self.basis) {
            let cb = costs.get(b).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for (zj, rj) in z.iter_mut().zip(row) {
                    *zj -= cb * rj;
                }
            }
        }
        self.z = z;
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[c];
            if factor != 0.0 {
                for (v, pr) in row.iter_mut().zip(&pivot_row) {
                    *v -= factor * pr;
                }
                row[c] = 0.0;
            }
        }
        let factor = self.z[c];
        if factor != 0.0 {
            for (v, pr) in self.z.iter_mut().zip(&pivot_row) {
                *v -= factor * pr;
            }
            self.z[c] = 0.0;
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    fn run(&mut self, allowed: &dyn Fn(usize) -> bool, limit: usize) -> Outcome {
        let start = self.iterations;
        loop {
            if self.iterations - start > limit {
                return Outcome::Cycled;
            }
            let bland = self.iterations - start >= self.bland_after;
            let mut enter = None;
            let mut best = -TOL;
            for j in (0..self.cols).filter(|&j| allowed(j)) {
                let d = self.z[j];
                if d < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(c) = enter else {
                return Outcome::Optimal;
            };
            let rhs = self.cols;
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.t.iter().enumerate() {
                let a = row[c];
                if a > TOL {
                    let ratio = row[rhs] / a;
                    let better = match leave {
                        None => true,
                        Some((l, best_ratio)) => {
                            ratio < best_ratio - 1e-12
                                || (ratio <= best_ratio + 1e-12 && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Outcome::Unbounded;
            };
            self.pivot(r, c);
        }
    }
}

pub fn simplex_solve(problem: &LpProblem) -> LpSolution {
    let n = problem.num_vars();
    let m = problem.rows.len();

    // Orient rows so every right-hand side is non-negative.
    let mut rows = Vec::with_capacity(m);
    for ((row, &rel), &b) in problem
        .rows
        .iter()
        .zip(&problem.relations)
        .zip(&problem.rhs)
    {
        if b < 0.0 {
            let flipped = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
            rows.push((row.iter().map(|v| -v).collect::<Vec<_>>(), flipped, -b));
        } else {
            rows.push((row.clone(), rel, b));
        }
    }

    let slack_count = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let art_count = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let cols = n + slack_count + art_count;
    let art_start = n + slack_count;

    let mut t = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let (mut s, mut art) = (n, art_start);
    for (coeffs, rel, b) in rows {
        let mut row = vec![0.0; cols + 1];
        row[..n].copy_from_slice(&coeffs);
        row[cols] = b;
        match rel {
            Relation::Le => {
                row[s] = 1.0;
                basis.push(s);
                s += 1;
            }
            Relation::Ge => {
                row[s] = -1.0;
                s += 1;
                row[art] = 1.0;
                basis.push(art);
                art += 1;
            }
            Relation::Eq => {
                row[art] = 1.0;
                basis.push(art);
                art += 1;
            }
        }
        t.push(row);
    }

    let mut tab = Tableau {
        t,
        z: Vec::new(),
        basis,
        cols,
        bland_after: 2 * (n + m),
        iterations: 0,
    };
    let limit = 50 * (cols + m) + 1000;
    let fail = |status, tab: &Tableau| LpSolution {
        status,
        x: vec![0.0; n],
        objective: f64::NAN,
        reduced_costs: vec![f64::NAN; n],
        iterations: tab.iterations,
    };

    if art_count > 0 {
        let mut phase1 = vec![0.0; cols];
        for c in phase1.iter_mut().skip(art_start) {
            *c = 1.0;
        }
        tab.set_costs(&phase1);
        match tab.run(&|_| true, limit) {
            Outcome::Optimal => {}
            Outcome::Cycled => return fail(LpStatus::Cycled, &tab),
            Outcome::Unbounded => return fail(LpStatus::Infeasible, &tab),
        }
        if -tab.z[cols] > TOL * (1.0 + problem.rhs.iter().map(|b| b.abs()).sum::<f64>()) {
            return fail(LpStatus::Infeasible, &tab);
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if tab.basis[r] >= art_start {
                if let Some(c) = (0..art_start).find(|&c| tab.t[r][c].abs() > TOL) {
                    tab.pivot(r, c);
                }
            }
        }
    }

    let mut costs = problem.objective.clone();
    costs.resize(cols, 0.0);
    tab.set_costs(&costs);
    match tab.run(&|j| j < art_start, limit) {
        Outcome::Optimal => {}
        Outcome::Unbounded => return fail(LpStatus::Unbounded, &tab),
        Outcome::Cycled => return fail(LpStatus::Cycled, &tab),
    }

    let mut x = vec![0.0; n];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.t[r][cols].max(0.0);
        }
    }
    let objective = problem.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        reduced_costs: tab.z[..n].to_vec(),
        iterations: tab.iterations,
    }
}
