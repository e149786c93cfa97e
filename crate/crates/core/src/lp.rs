//! Dense bounded-variable primal simplex.
//!
//! Problems are stated as `min c'x` subject to `lo_i <= a_i'x <= hi_i` and
//! `l_j <= x_j <= u_j`; equality rows use `lo == hi`. Each row gets a
//! bounded slack column (`a_i'x - s_i = 0`) and, where the starting point
//! violates the row, a phase-one artificial. Pivoting is Dantzig's rule
//! with lowest-index tie-breaking, falling back to Bland's rule after a run
//! of degenerate pivots, so a given input always yields the same basis.

use nalgebra::{DMatrix, DVector};

use crate::error::SolveError;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-8;
const DEGENERATE_RUN: usize = 40;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    costs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<Row>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    /// Sensitivity of the optimum to the active bound of each row
    /// (zero for rows strictly inside their range).
    pub row_duals: Vec<f64>,
    /// Reduced cost of each structural variable.
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        debug_assert!(lower <= upper);
        self.costs.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.costs.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, lo: f64, hi: f64) -> usize {
        debug_assert!(lo <= hi);
        self.rows.push(Row { coeffs, lo, hi });
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.costs.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn solve(&self) -> Result<LpOutcome, SolveError> {
        Tableau::build(self).run()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    One,
    Two,
}

struct Tableau<'a> {
    lp: &'a LinearProgram,
    m: usize,
    n: usize,
    cols: usize,
    /// B^{-1} [A | -I | diag(sigma)], row-major m x cols.
    t: Vec<f64>,
    /// Reduced costs for the current phase.
    d: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    value: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    sigma: Vec<f64>,
    pivots: usize,
}

impl<'a> Tableau<'a> {
    fn build(lp: &'a LinearProgram) -> Self {
        let m = lp.rows.len();
        let n = lp.costs.len();
        let cols = n + 2 * m;
        let mut lb = Vec::with_capacity(cols);
        let mut ub = Vec::with_capacity(cols);
        let mut value = vec![0.0; cols];
        lb.extend_from_slice(&lp.lower);
        ub.extend_from_slice(&lp.upper);
        for (j, v) in value.iter_mut().enumerate().take(n) {
            *v = if lb[j].is_finite() {
                lb[j]
            } else if ub[j].is_finite() {
                ub[j]
            } else {
                0.0
            };
        }
        for r in &lp.rows {
            lb.push(r.lo);
            ub.push(r.hi);
        }
        lb.extend(std::iter::repeat(0.0).take(m));
        ub.extend(std::iter::repeat(0.0).take(m));

        let mut t = vec![0.0; m * cols];
        let mut basis = vec![0; m];
        let mut is_basic = vec![false; cols];
        let mut sigma = vec![1.0; m];
        for (i, row) in lp.rows.iter().enumerate() {
            let activity: f64 = row.coeffs.iter().map(|&(j, a)| a * value[j]).sum();
            let slack = n + i;
            let art = n + m + i;
            let (basic, diag) = if activity >= row.lo - FEAS_TOL && activity <= row.hi + FEAS_TOL {
                value[slack] = activity.clamp(row.lo, row.hi);
                (slack, -1.0)
            } else {
                let target = if activity < row.lo { row.lo } else { row.hi };
                value[slack] = target;
                sigma[i] = (target - activity).signum();
                value[art] = (target - activity).abs();
                ub[art] = f64::INFINITY;
                (art, sigma[i])
            };
            let base = i * cols;
            for &(j, a) in &row.coeffs {
                t[base + j] += a / diag;
            }
            t[base + slack] = -1.0 / diag;
            t[base + art] = sigma[i] / diag;
            basis[i] = basic;
            is_basic[basic] = true;
        }
        Tableau {
            lp,
            m,
            n,
            cols,
            t,
            d: vec![0.0; cols],
            lb,
            ub,
            value,
            basis,
            is_basic,
            sigma,
            pivots: 0,
        }
    }

    fn cost(&self, phase: Phase, j: usize) -> f64 {
        match phase {
            Phase::One => {
                if j >= self.n + self.m {
                    1.0
                } else {
                    0.0
                }
            }
            Phase::Two => {
                if j < self.n {
                    self.lp.costs[j]
                } else {
                    0.0
                }
            }
        }
    }

    fn price(&mut self, phase: Phase) {
        for j in 0..self.cols {
            self.d[j] = self.cost(phase, j);
        }
        for i in 0..self.m {
            let cb = self.cost(phase, self.basis[i]);
            if cb != 0.0 {
                let row = &self.t[i * self.cols..(i + 1) * self.cols];
                for (dj, &a) in self.d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
    }

    fn objective(&self, phase: Phase) -> f64 {
        (0..self.cols).map(|j| self.cost(phase, j) * self.value[j]).sum()
    }

    /// Entering column and direction (+1 increase, -1 decrease).
    fn choose_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.cols {
            if self.is_basic[j] || self.lb[j] == self.ub[j] {
                continue;
            }
            let dj = self.d[j];
            let at_lower = self.value[j] <= self.lb[j];
            let at_upper = self.value[j] >= self.ub[j];
            let dir = if dj < -COST_TOL && !at_upper {
                1.0
            } else if dj > COST_TOL && !at_lower {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if best.map_or(true, |(_, _, g)| dj.abs() > g) {
                best = Some((j, dir, dj.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn run(mut self) -> Result<LpOutcome, SolveError> {
        if self.basis.iter().any(|&b| b >= self.n + self.m) {
            self.price(Phase::One);
            match self.iterate()? {
                Step::Optimal => {}
                Step::Unbounded => {
                    return Err(SolveError::Numerical("phase one unbounded".into()))
                }
            }
            if self.objective(Phase::One) > FEAS_TOL * (1.0 + self.scale()) {
                return Ok(LpOutcome::Infeasible);
            }
        }
        for i in 0..self.m {
            let art = self.n + self.m + i;
            self.ub[art] = 0.0;
            if !self.is_basic[art] {
                self.value[art] = 0.0;
            }
        }
        self.price(Phase::Two);
        match self.iterate()? {
            Step::Optimal => self.finish().map(LpOutcome::Optimal),
            Step::Unbounded => Ok(LpOutcome::Unbounded),
        }
    }

    fn scale(&self) -> f64 {
        self.lp
            .rows
            .iter()
            .flat_map(|r| [r.lo, r.hi])
            .filter(|v| v.is_finite())
            .fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }

    fn iterate(&mut self) -> Result<Step, SolveError> {
        let mut degenerate = 0usize;
        loop {
            let bland = degenerate >= DEGENERATE_RUN;
            let Some((j, dir)) = self.choose_entering(bland) else {
                return Ok(Step::Optimal);
            };
            self.pivots += 1;
            if self.pivots > MAX_PIVOTS {
                return Err(SolveError::Numerical("pivot limit reached".into()));
            }

            // Ratio test.
            let mut step = self.ub[j] - self.lb[j];
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let alpha = self.t[i * self.cols + j];
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[i];
                let rate = -dir * alpha;
                let room = if rate < 0.0 {
                    if !self.lb[b].is_finite() {
                        continue;
                    }
                    (self.value[b] - self.lb[b]).max(0.0) / -rate
                } else {
                    if !self.ub[b].is_finite() {
                        continue;
                    }
                    (self.ub[b] - self.value[b]).max(0.0) / rate
                };
                let better = match leave {
                    None => room < step,
                    Some((r, _)) => {
                        if room < step - 1e-12 {
                            true
                        } else if room <= step + 1e-12 {
                            if bland {
                                b < self.basis[r]
                            } else {
                                let cur = self.t[r * self.cols + j].abs();
                                alpha.abs() > cur * (1.0 + 1e-9)
                                    || (alpha.abs() >= cur * (1.0 - 1e-9) && b < self.basis[r])
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    step = room;
                    leave = Some((i, rate));
                }
            }
            if !step.is_finite() {
                return Ok(Step::Unbounded);
            }
            degenerate = if step <= 1e-12 { degenerate + 1 } else { 0 };

            for i in 0..self.m {
                let alpha = self.t[i * self.cols + j];
                if alpha != 0.0 {
                    let b = self.basis[i];
                    self.value[b] -= dir * alpha * step;
                }
            }
            self.value[j] += dir * step;

            match leave {
                None => {
                    // Bound flip.
                    self.value[j] = if dir > 0.0 { self.ub[j] } else { self.lb[j] };
                }
                Some((r, rate)) => {
                    let out = self.basis[r];
                    self.value[out] = if rate < 0.0 { self.lb[out] } else { self.ub[out] };
                    self.pivot(r, j);
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let cols = self.cols;
        let piv = self.t[r * cols + j];
        {
            let row = &mut self.t[r * cols..(r + 1) * cols];
            for v in row.iter_mut() {
                *v /= piv;
            }
            row[j] = 1.0;
        }
        let pivot_row: Vec<f64> = self.t[r * cols..(r + 1) * cols].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * cols + j];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * cols..(i + 1) * cols];
            for (v, &p) in row.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            row[j] = 0.0;
        }
        let f = self.d[j];
        if f != 0.0 {
            for (v, &p) in self.d.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            self.d[j] = 0.0;
        }
        let out = self.basis[r];
        self.is_basic[out] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
    }

    /// Column `j` of the original constraint matrix [A | -I | diag(sigma)].
    fn original_column(&self, j: usize) -> DVector<f64> {
        let mut col = DVector::zeros(self.m);
        if j < self.n {
            for (i, row) in self.lp.rows.iter().enumerate() {
                for &(k, a) in &row.coeffs {
                    if k == j {
                        col[i] += a;
                    }
                }
            }
        } else if j < self.n + self.m {
            col[j - self.n] = -1.0;
        } else {
            let i = j - self.n - self.m;
            col[i] = self.sigma[i];
        }
        col
    }

    /// Recompute basic values and duals from a fresh factorization of the
    /// final basis.
    fn finish(mut self) -> Result<LpSolution, SolveError> {
        let (m, n) = (self.m, self.n);
        let mut y = vec![0.0; m];
        if m > 0 {
            let mut bmat = DMatrix::zeros(m, m);
            for (k, &b) in self.basis.iter().enumerate() {
                bmat.set_column(k, &self.original_column(b));
            }
            // Nonbasic contribution: structural and slack columns.
            let mut rhs = DVector::zeros(m);
            for (i, row) in self.lp.rows.iter().enumerate() {
                for &(k, a) in &row.coeffs {
                    if !self.is_basic[k] {
                        rhs[i] -= a * self.value[k];
                    }
                }
                let s = n + i;
                if !self.is_basic[s] {
                    rhs[i] += self.value[s];
                }
            }
            let lu = bmat.clone().lu();
            let polished = lu
                .solve(&rhs)
                .ok_or_else(|| SolveError::Numerical("singular final basis".into()))?;
            let cb = DVector::from_iterator(m, self.basis.iter().map(|&b| self.cost(Phase::Two, b)));
            let duals = bmat
                .transpose()
                .lu()
                .solve(&cb)
                .ok_or_else(|| SolveError::Numerical("singular final basis".into()))?;
            for (k, &b) in self.basis.iter().enumerate() {
                let v = polished[k];
                let tol = 1e-6 * (1.0 + v.abs());
                if (v - self.value[b]).abs() > 1e-4 * (1.0 + v.abs())
                    || v < self.lb[b] - tol
                    || v > self.ub[b] + tol
                {
                    return Err(SolveError::Numerical(format!(
                        "basic value drift on column {b}: {} vs {v}",
                        self.value[b]
                    )));
                }
                self.value[b] = v.clamp(self.lb[b], self.ub[b]);
            }
            y.copy_from_slice(duals.as_slice());
        }
        let x = self.value[..n].to_vec();
        let reduced_costs = (0..n)
            .map(|j| {
                let col = self.original_column(j);
                self.lp.costs[j] - col.iter().zip(&y).map(|(a, yi)| a * yi).sum::<f64>()
            })
            .collect();
        // Duals of rows that are not at a bound are zero by complementarity;
        // basic slacks already give exactly that, so `y` is returned as is.
        let objective = x.iter().zip(&self.lp.costs).map(|(v, c)| v * c).sum();
        Ok(LpSolution {
            x,
            row_duals: y,
            reduced_costs,
            objective,
            pivots: self.pivots,
        })
    }
}

enum Step {
    Optimal,
    Unbounded,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn optimal(lp: &LinearProgram) -> LpSolution {
        match lp.solve().unwrap() {
            LpOutcome::Optimal(s) => s,
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn small_maximization() {
        // max 3x + 2y st x + y <= 4, x + 3y <= 9, x <= 3  -> (3, 1), 11
        let mut lp = LinearProgram::new();
        let x = lp.add_var(-3.0, 0.0, 3.0);
        let y = lp.add_var(-2.0, 0.0, f64::INFINITY);
        lp.add_row(vec![(x, 1.0), (y, 1.0)], f64::NEG_INFINITY, 4.0);
        lp.add_row(vec![(x, 1.0), (y, 3.0)], f64::NEG_INFINITY, 9.0);
        let s = optimal(&lp);
        assert!((s.objective + 11.0).abs() < 1e-9);
        assert!((s.x[0] - 3.0).abs() < 1e-9 && (s.x[1] - 1.0).abs() < 1e-9);
        // Relaxing the first row by one unit gains 2 (y's cost).
        assert!((s.row_duals[0] + 2.0).abs() < 1e-9);
        assert!(s.row_duals[1].abs() < 1e-9);
    }

    #[test]
    fn equality_and_free_variable() {
        // min x - y, x + y = 2, x - y in [-1, 1], y free
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0, f64::NEG_INFINITY, f64::INFINITY);
        let y = lp.add_var(-1.0, f64::NEG_INFINITY, f64::INFINITY);
        lp.add_row(vec![(x, 1.0), (y, 1.0)], 2.0, 2.0);
        lp.add_row(vec![(x, 1.0), (y, -1.0)], -1.0, 1.0);
        let s = optimal(&lp);
        assert!((s.objective + 1.0).abs() < 1e-9);
        assert!((s.x[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0, 0.0, 1.0);
        lp.add_row(vec![(x, 1.0)], 2.0, 2.0);
        assert!(matches!(lp.solve().unwrap(), LpOutcome::Infeasible));

        let mut lp = LinearProgram::new();
        let x = lp.add_var(-1.0, 0.0, f64::INFINITY);
        let y = lp.add_var(0.0, 0.0, f64::INFINITY);
        lp.add_row(vec![(x, 1.0), (y, -1.0)], f64::NEG_INFINITY, 1.0);
        assert!(matches!(lp.solve().unwrap(), LpOutcome::Unbounded));
    }

    #[test]
    fn empty_row_with_nonzero_rhs_is_infeasible() {
        let mut lp = LinearProgram::new();
        lp.add_var(1.0, 0.0, 1.0);
        lp.add_row(vec![], 2.0, 2.0);
        assert!(matches!(lp.solve().unwrap(), LpOutcome::Infeasible));
    }

    #[test]
    fn degenerate_transport_terminates() {
        // Highly degenerate assignment-style LP.
        let mut lp = LinearProgram::new();
        let k = 5;
        let mut v = vec![vec![0; k]; k];
        for (i, row) in v.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = lp.add_var(((i * 7 + j * 3) % 5) as f64, 0.0, f64::INFINITY);
            }
        }
        for i in 0..k {
            lp.add_row((0..k).map(|j| (v[i][j], 1.0)).collect(), 1.0, 1.0);
            lp.add_row((0..k).map(|j| (v[j][i], 1.0)).collect(), 1.0, 1.0);
        }
        let s = optimal(&lp);
        assert!(s.objective.abs() < 1e-9);
    }

    #[test]
    fn deterministic_across_runs() {
        let mut lp = LinearProgram::new();
        let a = lp.add_var(1.0, 0.0, 10.0);
        let b = lp.add_var(1.0, 0.0, 10.0);
        lp.add_row(vec![(a, 1.0), (b, 1.0)], 5.0, 5.0);
        let s1 = optimal(&lp);
        let s2 = optimal(&lp);
        assert_eq!(s1.x, s2.x);
        assert_eq!(s1.row_duals, s2.row_duals);
    }

    proptest! {
        // KKT conditions on random box-and-range LPs that are feasible by
        // construction (rows ranged around the activity of a random point).
        #[test]
        fn kkt_holds_on_random_lps(
            n in 1usize..7,
            m in 0usize..6,
            seed in proptest::collection::vec(-5.0f64..5.0, 80),
        ) {
            let mut it = seed.into_iter().cycle();
            let mut next = || it.next().unwrap();
            let mut lp = LinearProgram::new();
            let point: Vec<f64> = (0..n).map(|_| next()).collect();
            for &p in &point {
                let lo = p - next().abs() - 0.1;
                let hi = p + next().abs() + 0.1;
                lp.add_var(next(), lo, hi);
            }
            for _ in 0..m {
                let coeffs: Vec<(usize, f64)> = (0..n).map(|j| (j, next().round())).collect();
                let act: f64 = coeffs.iter().map(|&(j, a)| a * point[j]).sum();
                let w = next().abs();
                if w < 1.0 {
                    lp.add_row(coeffs, act, act);
                } else {
                    lp.add_row(coeffs, act - w, act + w);
                }
            }
            let s = optimal(&lp);
            for j in 0..n {
                prop_assert!(s.x[j] >= lp.lower[j] - 1e-7 && s.x[j] <= lp.upper[j] + 1e-7);
                let rc = s.reduced_costs[j];
                if rc > 1e-7 { prop_assert!((s.x[j] - lp.lower[j]).abs() < 1e-6); }
                if rc < -1e-7 { prop_assert!((s.x[j] - lp.upper[j]).abs() < 1e-6); }
            }
            let mut dual_obj = 0.0;
            for (i, row) in lp.rows.iter().enumerate() {
                let act: f64 = row.coeffs.iter().map(|&(j, a)| a * s.x[j]).sum();
                prop_assert!(act >= row.lo - 1e-7 && act <= row.hi + 1e-7);
                let y = s.row_duals[i];
                // y is d(obj)/d(bound): negative at an upper bound, positive at a lower one.
                if y < -1e-7 { prop_assert!((act - row.hi).abs() < 1e-6); dual_obj += y * row.hi; }
                else if y > 1e-7 { prop_assert!((act - row.lo).abs() < 1e-6); dual_obj += y * row.lo; }
            }
            for j in 0..n {
                let rc = s.reduced_costs[j];
                dual_obj += if rc >= 0.0 { rc * lp.lower[j] } else { rc * lp.upper[j] };
            }
            prop_assert!((dual_obj - s.objective).abs() < 1e-6 * (1.0 + s.objective.abs()));
        }
    }
}
