//! Dense linear-programming kernel: two-phase primal simplex with a proper
//! basis treatment of equality constraints, so that the dual multipliers it
//! reports are meaningful.
//!
//! Instances in this crate are small (hundreds of variables), so the solver
//! favors determinism over speed: Dantzig pricing with a Harris-style ratio
//! test, a lexicographic fallback on degenerate stalls, and periodic tableau
//! rebuilds from the pristine matrix to cap round-off drift.

use crate::error::{Error, Result};

/// Objective sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// A dense LP: `opt c.x` subject to `A_eq x = b_eq`, `A_ub x <= b_ub`,
/// and per-variable bounds (infinite bounds allowed).
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub eq_constraints: Vec<(Vec<f64>, f64)>,
    pub ub_constraints: Vec<(Vec<f64>, f64)>,
    pub bounds: Vec<(f64, f64)>,
}

impl LpProblem {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            eq_constraints: Vec::new(),
            ub_constraints: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n],
        }
    }

    pub fn minimize(objective: Vec<f64>) -> Self {
        Self::new(Sense::Minimize, objective)
    }

    pub fn maximize(objective: Vec<f64>) -> Self {
        Self::new(Sense::Maximize, objective)
    }

    pub fn add_eq(&mut self, coeffs: Vec<f64>, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.objective.len());
        self.eq_constraints.push((coeffs, rhs));
    }

    pub fn add_ub(&mut self, coeffs: Vec<f64>, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.objective.len());
        self.ub_constraints.push((coeffs, rhs));
    }

    pub fn set_free(&mut self, var: usize) {
        self.bounds[var] = (f64::NEG_INFINITY, f64::INFINITY);
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Primal solution with dual multipliers for the original constraint rows.
/// Duals are signed so that, for problems without finite upper bounds, the
/// dual objective `b_eq . eq_duals + b_ub . ub_duals` equals the primal
/// objective at optimality.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub objective: f64,
    pub eq_duals: Vec<f64>,
    pub ub_duals: Vec<f64>,
}

impl LpSolution {
    fn non_optimal(status: LpStatus) -> Self {
        Self {
            status,
            primal: Vec::new(),
            objective: f64::NAN,
            eq_duals: Vec::new(),
            ub_duals: Vec::new(),
        }
    }

    /// Largest violation of the original constraints and bounds.
    pub fn feasibility_residual(&self, lp: &LpProblem) -> f64 {
        let x = &self.primal;
        let mut res: f64 = 0.0;
        for (coeffs, rhs) in &lp.eq_constraints {
            let lhs: f64 = coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            res = res.max((lhs - rhs).abs());
        }
        for (coeffs, rhs) in &lp.ub_constraints {
            let lhs: f64 = coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            res = res.max(lhs - rhs);
        }
        for (i, &(lo, hi)) in lp.bounds.iter().enumerate() {
            res = res.max(lo - x[i]).max(x[i] - hi);
        }
        res.max(0.0)
    }

    /// Dual objective `b_eq . y_eq + b_ub . y_ub` (ignores bound duals, so it
    /// matches the primal objective only when no finite upper bounds exist).
    pub fn dual_objective(&self, lp: &LpProblem) -> f64 {
        let eq: f64 = lp
            .eq_constraints
            .iter()
            .zip(&self.eq_duals)
            .map(|((_, b), y)| b * y)
            .sum();
        let ub: f64 = lp
            .ub_constraints
            .iter()
            .zip(&self.ub_duals)
            .map(|((_, b), y)| b * y)
            .sum();
        eq + ub
    }
}

const PIVOT_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-9;
const DRIVE_OUT_TOL: f64 = 1e-7;
// Reduced costs closer to zero than this are treated as converged noise.
const ENTER_TOL: f64 = 1e-9;
// Preferred minimum magnitude for a pivot element; smaller entries are only
// used when no well-sized pivot exists in the column.
const STABLE_PIVOT: f64 = 1e-7;
const MAX_ITERS: usize = 100_000;
// Rebuild the tableau from the pristine matrix this often to cap drift.
const REFRESH_EVERY: usize = 200;
// Pivots without objective progress before the lexicographic rule kicks in.
const STALL_LIMIT: usize = 500;

// How one user variable maps into nonnegative standard-form columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    // x = lower + x'
    Shift { col: usize, lower: f64 },
    // x = upper - x'
    Neg { col: usize, upper: f64 },
    // x = x+ - x-
    Split { pos: usize, neg: usize },
}

struct Tableau {
    rows: Vec<Vec<f64>>,     // m x (cols + 1), last entry is rhs
    cost: Vec<f64>,          // reduced costs, last entry is -objective
    basis: Vec<usize>,
    cols: usize,
    original: Vec<Vec<f64>>, // untouched standard-form rows, for refreshes
    base_cost: Vec<f64>,     // cost vector of the current phase
}

impl Tableau {
    // Recomputes `rows = B^{-1} A` and the reduced costs directly from the
    // pristine matrix, discarding accumulated round-off. Gauss-Jordan with
    // partial pivoting on [B | A b]; the basis matrix is nonsingular for any
    // valid basis, so failure only signals that the basis itself has decayed.
    fn refresh(&mut self) -> bool {
        let m = self.original.len();
        let width = self.cols + 1;
        let mut aug: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let mut r = Vec::with_capacity(m + width);
                for k in 0..m {
                    r.push(self.original[i][self.basis[k]]);
                }
                r.extend_from_slice(&self.original[i]);
                r
            })
            .collect();
        for col in 0..m {
            let mut piv = col;
            for r in col + 1..m {
                if aug[r][col].abs() > aug[piv][col].abs() {
                    piv = r;
                }
            }
            if aug[piv][col].abs() < 1e-12 {
                return false;
            }
            aug.swap(col, piv);
            let inv = 1.0 / aug[col][col];
            for v in aug[col].iter_mut() {
                *v *= inv;
            }
            let pivot_row = aug[col].clone();
            for (r, row) in aug.iter_mut().enumerate() {
                if r == col {
                    continue;
                }
                let factor = row[col];
                if factor != 0.0 {
                    for (v, p) in row.iter_mut().zip(&pivot_row) {
                        *v -= factor * p;
                    }
                }
            }
        }
        for (i, row) in aug.iter().enumerate() {
            self.rows[i].copy_from_slice(&row[m..]);
        }
        let mut cost = vec![0.0; width];
        cost[..self.cols].copy_from_slice(&self.base_cost);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = self.base_cost[b];
            if cb != 0.0 {
                for (v, r) in cost.iter_mut().zip(&self.rows[i]) {
                    *v -= cb * r;
                }
            }
        }
        self.cost = cost;
        true
    }
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.rows[row][col];
        let inv = 1.0 / piv;
        for v in self.rows[row].iter_mut() {
            *v *= inv;
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let factor = r[col];
            if factor != 0.0 {
                for (v, p) in r.iter_mut().zip(&pivot_row) {
                    *v -= factor * p;
                }
            }
        }
        let factor = self.cost[col];
        if factor != 0.0 {
            for (v, p) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= factor * p;
            }
        }
        self.basis[row] = col;
    }

    // Lexicographic ratio test: among the rows attaining the minimum ratio,
    // break ties by comparing the scaled rows column by column. Rows of
    // `B^{-1}` are linearly independent, so the comparison always resolves;
    // the resulting pivot sequence cannot cycle.
    fn lex_leaving(&self, col: usize, min_pivot: f64) -> Option<usize> {
        let mut cands: Vec<usize> = Vec::new();
        let mut best = f64::INFINITY;
        for i in 0..self.rows.len() {
            let a = self.rows[i][col];
            if a > min_pivot {
                let ratio = self.rows[i][self.cols] / a;
                if ratio < best - FEAS_TOL {
                    best = ratio;
                    cands.clear();
                    cands.push(i);
                } else if ratio < best + FEAS_TOL {
                    best = best.min(ratio);
                    cands.push(i);
                }
            }
        }
        for k in 0..self.cols {
            if cands.len() <= 1 {
                break;
            }
            let vals: Vec<f64> = cands
                .iter()
                .map(|&i| self.rows[i][k] / self.rows[i][col])
                .collect();
            let mn = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let keep: Vec<usize> = cands
                .iter()
                .zip(&vals)
                .filter(|(_, &v)| v <= mn + 1e-12 * (1.0 + mn.abs()))
                .map(|(&i, _)| i)
                .collect();
            if !keep.is_empty() {
                cands = keep;
            }
        }
        cands.first().copied()
    }

    // Runs the simplex loop on the current cost row. `allowed` marks columns
    // permitted to enter the basis. Returns false on unboundedness.
    fn optimize(&mut self, allowed: &[bool], iters: &mut usize) -> Result<bool> {
        let mut pivots_since_refresh = 0usize;
        // Whether the tableau is freshly rebuilt, i.e. the next optimal or
        // unbounded verdict can be trusted without another refresh.
        let mut verified = false;
        // Degenerate stalls switch the ratio test to the lexicographic rule,
        // which is slower but cannot cycle.
        let mut lexico = false;
        let mut stall = 0usize;
        let mut last_obj = f64::INFINITY;
        loop {
            *iters += 1;
            if *iters > MAX_ITERS {
                return Err(Error::Numerical(
                    "simplex exceeded the pivot budget".into(),
                ));
            }
            if pivots_since_refresh >= REFRESH_EVERY && self.refresh() {
                pivots_since_refresh = 0;
                verified = true;
            }
            if !lexico && stall >= STALL_LIMIT {
                lexico = true;
                if self.refresh() {
                    pivots_since_refresh = 0;
                    verified = true;
                }
            }
            let mut entering = None;
            let mut best = -ENTER_TOL;
            for j in 0..self.cols {
                if allowed[j] && self.cost[j] < best {
                    best = self.cost[j];
                    entering = Some(j);
                }
            }
            let Some(col) = entering else {
                // Confirm optimality against a freshly rebuilt tableau; the
                // verdict may rest on drifted reduced costs.
                if !verified && self.refresh() {
                    pivots_since_refresh = 0;
                    verified = true;
                    continue;
                }
                return Ok(true);
            };
            let mut leaving: Option<usize> = None;
            // Prefer well-sized pivot elements; fall back to tiny ones only
            // when the column offers nothing better.
            for &min_pivot in &[STABLE_PIVOT, PIVOT_TOL] {
                if lexico {
                    leaving = self.lex_leaving(col, min_pivot);
                } else {
                    // Minimum-ratio test; among (near-)tied rows take the
                    // largest pivot element so the update stays stable.
                    let mut best_ratio = f64::INFINITY;
                    for i in 0..self.rows.len() {
                        let a = self.rows[i][col];
                        if a > min_pivot {
                            let ratio = self.rows[i][self.cols].max(0.0) / a;
                            let better = match leaving {
                                None => true,
                                Some(li) => {
                                    ratio < best_ratio - PIVOT_TOL
                                        || (ratio < best_ratio + PIVOT_TOL
                                            && a > self.rows[li][col])
                                }
                            };
                            if better {
                                best_ratio = best_ratio.min(ratio);
                                leaving = Some(i);
                            }
                        }
                    }
                }
                if leaving.is_some() {
                    break;
                }
            }
            let Some(row) = leaving else {
                // Same guard for the unbounded verdict.
                if !verified && self.refresh() {
                    pivots_since_refresh = 0;
                    verified = true;
                    continue;
                }
                return Ok(false);
            };
            self.pivot(row, col);
            pivots_since_refresh += 1;
            verified = false;
            let obj = -self.cost[self.cols];
            if obj < last_obj - 1e-12 {
                last_obj = obj;
                stall = 0;
            } else {
                stall += 1;
            }
        }
    }
}

/// Solves the LP, returning an optimal basic solution with duals or the
/// correct infeasible/unbounded status.
pub fn solve(lp: &LpProblem) -> Result<LpSolution> {
    let n = lp.num_vars();
    assert_eq!(lp.bounds.len(), n, "bounds length must match variable count");
    for (coeffs, rhs) in lp.eq_constraints.iter().chain(&lp.ub_constraints) {
        if coeffs.iter().any(|c| !c.is_finite()) || !rhs.is_finite() {
            return Err(Error::Numerical("non-finite LP coefficient".into()));
        }
    }

    // Map user variables onto nonnegative standard-form columns.
    let mut var_map = Vec::with_capacity(n);
    let mut ns = 0usize;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new(); // (std col, width)
    for &(lo, hi) in &lp.bounds {
        if lo.is_finite() {
            var_map.push(VarMap::Shift { col: ns, lower: lo });
            if hi.is_finite() {
                bound_rows.push((ns, hi - lo));
            }
            ns += 1;
        } else if hi.is_finite() {
            var_map.push(VarMap::Neg { col: ns, upper: hi });
            ns += 1;
        } else {
            var_map.push(VarMap::Split {
                pos: ns,
                neg: ns + 1,
            });
            ns += 2;
        }
    }

    let n_eq = lp.eq_constraints.len();
    let n_ub = lp.ub_constraints.len() + bound_rows.len();
    let m = n_eq + n_ub;
    let cols = ns + n_ub + m; // structural + slacks + artificials
    let slack_start = ns;
    let art_start = ns + n_ub;

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut row_signs = vec![1.0; m];

    let emit_row = |coeffs: &[f64], rhs: f64| -> (Vec<f64>, f64) {
        let mut row = vec![0.0; cols + 1];
        let mut b = rhs;
        for (i, &a) in coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            match var_map[i] {
                VarMap::Shift { col, lower } => {
                    row[col] += a;
                    b -= a * lower;
                }
                VarMap::Neg { col, upper } => {
                    row[col] -= a;
                    b -= a * upper;
                }
                VarMap::Split { pos, neg } => {
                    row[pos] += a;
                    row[neg] -= a;
                }
            }
        }
        (row, b)
    };

    for (coeffs, rhs) in &lp.eq_constraints {
        let (mut row, b) = emit_row(coeffs, *rhs);
        row[cols] = b;
        rows.push(row);
    }
    for (k, (coeffs, rhs)) in lp.ub_constraints.iter().enumerate() {
        let (mut row, b) = emit_row(coeffs, *rhs);
        row[slack_start + k] = 1.0;
        row[cols] = b;
        rows.push(row);
        let _ = k;
    }
    for (k, &(col, width)) in bound_rows.iter().enumerate() {
        let mut row = vec![0.0; cols + 1];
        row[col] = 1.0;
        row[slack_start + lp.ub_constraints.len() + k] = 1.0;
        row[cols] = width;
        rows.push(row);
    }
    for (i, row) in rows.iter_mut().enumerate() {
        if row[cols] < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
            row_signs[i] = -1.0;
        }
        row[art_start + i] = 1.0;
    }

    // Phase 1: minimize the sum of artificials.
    let mut cost = vec![0.0; cols + 1];
    for row in &rows {
        for j in 0..cols {
            cost[j] -= row[j];
        }
        cost[cols] -= row[cols];
    }
    for j in art_start..cols {
        cost[j] += 1.0;
    }
    let basis: Vec<usize> = (art_start..cols).collect();
    let mut phase1_cost = vec![0.0; cols];
    for c in phase1_cost[art_start..].iter_mut() {
        *c = 1.0;
    }
    let original = rows.clone();
    let mut tab = Tableau {
        rows,
        cost,
        basis,
        cols,
        original,
        base_cost: phase1_cost,
    };
    let mut iters = 0usize;
    let allowed_all: Vec<bool> = (0..cols).map(|_| true).collect();
    if !tab.optimize(&allowed_all, &mut iters)? {
        return Err(Error::Numerical("phase 1 reported unbounded".into()));
    }
    let infeasibility = -tab.cost[cols];
    if infeasibility > FEAS_TOL {
        return Ok(LpSolution::non_optimal(LpStatus::Infeasible));
    }

    // Drive basic artificials out where possible; rows where no pivot exists
    // are linearly dependent and stay inert through phase 2.
    for i in 0..tab.rows.len() {
        if tab.basis[i] >= art_start {
            let mut best: Option<(usize, f64)> = None;
            for j in 0..art_start {
                let a = tab.rows[i][j].abs();
                if a > DRIVE_OUT_TOL && best.map_or(true, |(_, b)| a > b) {
                    best = Some((j, a));
                }
            }
            if let Some((j, _)) = best {
                tab.pivot(i, j);
            }
        }
    }

    // Phase 2 costs over standard-form columns (internally always minimize).
    let sense_factor = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut std_cost = vec![0.0; cols];
    for (i, &c) in lp.objective.iter().enumerate() {
        let c = c * sense_factor;
        match var_map[i] {
            VarMap::Shift { col, .. } => std_cost[col] += c,
            VarMap::Neg { col, .. } => std_cost[col] -= c,
            VarMap::Split { pos, neg } => {
                std_cost[pos] += c;
                std_cost[neg] -= c;
            }
        }
    }
    let mut cost = vec![0.0; cols + 1];
    cost[..cols].copy_from_slice(&std_cost);
    for (i, &b) in tab.basis.iter().enumerate() {
        let cb = std_cost[b];
        if cb != 0.0 {
            for j in 0..cols {
                cost[j] -= cb * tab.rows[i][j];
            }
            cost[cols] -= cb * tab.rows[i][cols];
        }
    }
    tab.cost = cost;
    tab.base_cost = std_cost;

    let allowed: Vec<bool> = (0..cols).map(|j| j < art_start).collect();
    if !tab.optimize(&allowed, &mut iters)? {
        return Ok(LpSolution::non_optimal(LpStatus::Unbounded));
    }

    // Recover the primal point.
    let mut x_std = vec![0.0; cols];
    for (i, &b) in tab.basis.iter().enumerate() {
        x_std[b] = tab.rows[i][cols];
    }
    let mut primal = vec![0.0; n];
    for (i, vm) in var_map.iter().enumerate() {
        primal[i] = match *vm {
            VarMap::Shift { col, lower } => lower + x_std[col],
            VarMap::Neg { col, upper } => upper - x_std[col],
            VarMap::Split { pos, neg } => x_std[pos] - x_std[neg],
        };
    }
    let objective: f64 = lp.objective.iter().zip(&primal).map(|(c, x)| c * x).sum();

    // Duals from the reduced costs of the (cost-zero) artificial columns:
    // y_i = -r(artificial_i), re-signed for row negation and sense.
    let mut duals = vec![0.0; m];
    for i in 0..m {
        duals[i] = -tab.cost[art_start + i] * row_signs[i] * sense_factor;
    }
    let eq_duals = duals[..n_eq].to_vec();
    let ub_duals = duals[n_eq..n_eq + lp.ub_constraints.len()].to_vec();

    Ok(LpSolution {
        status: LpStatus::Optimal,
        primal,
        objective,
        eq_duals,
        ub_duals,
    })
}
