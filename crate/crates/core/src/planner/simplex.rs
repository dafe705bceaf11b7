//! Bounded-variable primal revised simplex.
//!
//! Every row gets a logical (slack) for inequalities and an artificial
//! variable; phase 1 drives the artificials to zero, after which they are
//! fixed at `[0, 0]` and phase 2 optimizes the true objective. Pricing is
//! Dantzig's rule, switching to Bland's rule once the iteration count
//! exceeds `10·(rows+cols)`.

use serde::Serialize;

use super::lp::{LinearProgram, RowKind, Sense};
use super::lu::LuFactors;

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    pub lu_threshold: f64,
    pub refactor_every: usize,
    pub max_iterations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
            lu_threshold: 0.1,
            refactor_every: 100,
            max_iterations: usize::MAX,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

#[derive(Clone, Debug, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective in the problem's own sense.
    pub objective: f64,
    /// Values of the structural columns.
    pub x: Vec<f64>,
    pub iterations: usize,
    pub phase1_iterations: usize,
    pub bland_iterations: usize,
    pub refactorizations: usize,
    /// Largest row or bound violation of `x`.
    pub max_violation: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
}

struct Solver<'a> {
    opts: &'a SimplexOptions,
    m: usize,
    n_struct: usize,
    /// All columns: structurals, then logicals, then artificials.
    cols: Vec<Vec<(usize, f64)>>,
    /// `cols` in compressed form for pricing; fixed once the start basis is set.
    col_start: Vec<usize>,
    col_row: Vec<u32>,
    col_val: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    head: Vec<usize>,
    state: Vec<VarState>,
    /// Values of all variables (basic ones kept in sync with `head`).
    x: Vec<f64>,
    lu: LuFactors,
    iterations: usize,
    bland_iterations: usize,
    refactorizations: usize,
    bland_after: usize,
}

enum Outcome {
    Optimal,
    Failed,
}

impl<'a> Solver<'a> {
    fn new(lp: &LinearProgram, opts: &'a SimplexOptions, crash: &[Option<usize>]) -> Option<Self> {
        let m = lp.num_rows();
        let n_struct = lp.num_cols();
        let mut cols: Vec<Vec<(usize, f64)>> =
            lp.columns.iter().map(|c| c.entries.clone()).collect();
        let mut upper: Vec<f64> = lp.columns.iter().map(|c| c.upper).collect();
        for (i, row) in lp.rows.iter().enumerate() {
            match row.kind {
                RowKind::Eq => {}
                RowKind::Ge => {
                    cols.push(vec![(i, -1.0)]);
                    upper.push(f64::INFINITY);
                }
                RowKind::Le => {
                    cols.push(vec![(i, 1.0)]);
                    upper.push(f64::INFINITY);
                }
            }
        }
        let rhs: Vec<f64> = lp.rows.iter().map(|r| r.rhs).collect();
        let mut head = Vec::with_capacity(m);
        for (i, &b) in rhs.iter().enumerate() {
            head.push(cols.len());
            cols.push(vec![(i, if b < 0.0 { -1.0 } else { 1.0 })]);
            upper.push(f64::INFINITY);
        }
        let nv = cols.len();
        let mut state = vec![VarState::AtLower; nv];
        let mut x = vec![0.0; nv];
        for (i, &j) in head.iter().enumerate() {
            state[j] = VarState::Basic;
            x[j] = rhs[i].abs();
        }
        let basis: Vec<Vec<(usize, f64)>> = head.iter().map(|&j| cols[j].clone()).collect();
        let lu = LuFactors::factorize(m, &basis, opts.lu_threshold).ok()?;
        let artificial_head = head.clone();
        let mut solver = Solver {
            opts,
            m,
            n_struct,
            cols,
            upper,
            rhs,
            head,
            state,
            x,
            lu,
            iterations: 0,
            bland_iterations: 0,
            refactorizations: 1,
            bland_after: 10 * (m + n_struct),
            col_start: Vec::new(),
            col_row: Vec::new(),
            col_val: Vec::new(),
        };
        if crash.iter().any(Option::is_some) && !solver.try_crash(crash) {
            log::debug!("crash basis rejected; starting from artificials");
            solver.reset(artificial_head);
        }
        solver.compress();
        Some(solver)
    }

    fn compress(&mut self) {
        self.col_start = Vec::with_capacity(self.cols.len() + 1);
        self.col_start.push(0);
        for col in &self.cols {
            for &(i, v) in col {
                self.col_row.push(i as u32);
                self.col_val.push(v);
            }
            self.col_start.push(self.col_row.len());
        }
    }

    fn reset(&mut self, artificial_head: Vec<usize>) {
        let art0 = self.first_artificial();
        self.x.iter_mut().for_each(|v| *v = 0.0);
        self.state.iter_mut().for_each(|st| *st = VarState::AtLower);
        for (i, &j) in artificial_head.iter().enumerate() {
            debug_assert_eq!(j, art0 + i);
            let sign = if self.rhs[i] < 0.0 { -1.0 } else { 1.0 };
            self.cols[j] = vec![(i, sign)];
            self.state[j] = VarState::Basic;
            self.x[j] = self.rhs[i].abs();
        }
        self.head = artificial_head;
        let ok = self.refactor();
        debug_assert!(ok);
    }

    /// Replaces artificials by the suggested structural columns where the
    /// resulting basis is nonsingular and primal feasible.
    fn try_crash(&mut self, crash: &[Option<usize>]) -> bool {
        let art0 = self.first_artificial();
        let mut used = vec![false; self.n_struct];
        for (i, c) in crash.iter().enumerate().take(self.m) {
            if let Some(j) = *c {
                if j < self.n_struct && !used[j] {
                    used[j] = true;
                    self.state[self.head[i]] = VarState::AtLower;
                    self.x[self.head[i]] = 0.0;
                    self.head[i] = j;
                    self.state[j] = VarState::Basic;
                }
            }
        }
        if !self.refactor() {
            return false;
        }
        let tol = self.opts.feasibility_tol;
        let mut flipped = false;
        for p in 0..self.m {
            let j = self.head[p];
            let v = self.x[j];
            if j >= art0 {
                if v < 0.0 {
                    for e in &mut self.cols[j] {
                        e.1 = -e.1;
                    }
                    flipped = true;
                }
            } else if v < -tol || v > self.upper[j] + tol {
                return false;
            }
        }
        !flipped || self.refactor()
    }

    fn first_artificial(&self) -> usize {
        self.cols.len() - self.m
    }

    fn refactor(&mut self) -> bool {
        let basis: Vec<Vec<(usize, f64)>> =
            self.head.iter().map(|&j| self.cols[j].clone()).collect();
        match LuFactors::factorize(self.m, &basis, self.opts.lu_threshold) {
            Ok(lu) => {
                self.lu = lu;
                self.refactorizations += 1;
                self.recompute_basics();
                true
            }
            Err(_) => false,
        }
    }

    /// `x_B = B⁻¹ (b − N x_N)`.
    fn recompute_basics(&mut self) {
        let mut r = self.rhs.clone();
        for (j, col) in self.cols.iter().enumerate() {
            if self.state[j] != VarState::Basic && self.x[j] != 0.0 {
                for &(i, v) in col {
                    r[i] -= v * self.x[j];
                }
            }
        }
        let xb = self.lu.ftran(&mut r);
        for (p, &j) in self.head.iter().enumerate() {
            self.x[j] = xb[p];
        }
    }

    fn column_dense(&self, j: usize) -> Vec<f64> {
        let mut d = vec![0.0; self.m];
        for &(i, v) in &self.cols[j] {
            d[i] = v;
        }
        d
    }

    /// Minimizes `cost·x` from the current basic feasible solution.
    fn optimize(&mut self, cost: &[f64]) -> Outcome {
        let opt_tol = self.opts.optimality_tol;
        let piv_tol = self.opts.pivot_tol;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Outcome::Failed;
            }
            if self.lu.num_etas() >= self.opts.refactor_every && !self.refactor() {
                return Outcome::Failed;
            }
            if self.iterations.is_multiple_of(5000) && self.iterations > 0 {
                let obj: f64 = cost.iter().zip(&self.x).map(|(c, x)| c * x).sum();
                log::debug!(
                    "iteration {} objective {obj:.9} lu nnz {}",
                    self.iterations,
                    self.lu.nnz()
                );
            }
            let bland = self.iterations >= self.bland_after;
            let mut cb: Vec<f64> = self.head.iter().map(|&j| cost[j]).collect();
            let y = self.lu.btran(&mut cb);

            // Pricing.
            let mut entering: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..self.cols.len() {
                let st = self.state[j];
                if st == VarState::Basic || self.upper[j] == 0.0 {
                    continue;
                }
                let mut d = cost[j];
                for k in self.col_start[j]..self.col_start[j + 1] {
                    d -= y[self.col_row[k] as usize] * self.col_val[k];
                }
                let score = match st {
                    VarState::AtLower if d < -opt_tol => -d,
                    VarState::AtUpper if d > opt_tol => d,
                    _ => continue,
                };
                if bland {
                    entering = Some((j, d));
                    break;
                }
                if score > best {
                    best = score;
                    entering = Some((j, d));
                }
            }
            let Some((q, dq)) = entering else {
                return Outcome::Optimal;
            };
            // +1: increase from lower bound; -1: decrease from upper bound.
            let dir = if dq < 0.0 { 1.0 } else { -1.0 };
            let w = self.lu.ftran(&mut self.column_dense(q));

            // Harris two-pass ratio test.
            let tol = self.opts.feasibility_tol;
            let mut theta_max = self.upper[q];
            for (p, &wp) in w.iter().enumerate() {
                let alpha = dir * wp;
                if alpha.abs() <= piv_tol {
                    continue;
                }
                let j = self.head[p];
                let t = if alpha > 0.0 {
                    (self.x[j] + tol) / alpha
                } else if self.upper[j].is_finite() {
                    (self.upper[j] - self.x[j] + tol) / -alpha
                } else {
                    continue;
                };
                theta_max = theta_max.min(t);
            }
            if theta_max.is_infinite() {
                // Unbounded direction; cannot happen with finite column bounds.
                return Outcome::Failed;
            }
            let mut leave: Option<(usize, f64, bool)> = None; // (position, theta, to_upper)
            let mut leave_alpha = 0.0;
            for (p, &wp) in w.iter().enumerate() {
                let alpha = dir * wp;
                if alpha.abs() <= piv_tol {
                    continue;
                }
                let j = self.head[p];
                let (t, to_upper) = if alpha > 0.0 {
                    (self.x[j] / alpha, false)
                } else if self.upper[j].is_finite() {
                    ((self.upper[j] - self.x[j]) / -alpha, true)
                } else {
                    continue;
                };
                if t <= theta_max {
                    let better = if bland {
                        match leave {
                            None => true,
                            Some((lp, lt, _)) => {
                                t < lt - tol || (t <= lt + tol && j < self.head[lp])
                            }
                        }
                    } else {
                        alpha.abs() > leave_alpha
                    };
                    if better {
                        leave = Some((p, t.max(0.0), to_upper));
                        leave_alpha = alpha.abs();
                    }
                }
            }
            let flip =
                self.upper[q].is_finite() && leave.is_none_or(|(_, t, _)| self.upper[q] <= t);
            let theta = if flip {
                self.upper[q]
            } else {
                leave.unwrap().1
            };

            // Move along the edge.
            for (p, &wp) in w.iter().enumerate() {
                if wp != 0.0 {
                    let j = self.head[p];
                    self.x[j] -= theta * dir * wp;
                }
            }
            self.x[q] += theta * dir;
            self.iterations += 1;
            if bland {
                self.bland_iterations += 1;
            }
            if flip {
                self.state[q] = if dir > 0.0 {
                    VarState::AtUpper
                } else {
                    VarState::AtLower
                };
                self.x[q] = if dir > 0.0 { self.upper[q] } else { 0.0 };
                continue;
            }
            let (r, _, to_upper) = leave.unwrap();
            let out = self.head[r];
            self.state[out] = if to_upper {
                VarState::AtUpper
            } else {
                VarState::AtLower
            };
            self.x[out] = if to_upper { self.upper[out] } else { 0.0 };
            self.head[r] = q;
            self.state[q] = VarState::Basic;
            self.lu.update(r, &w);
            // Tiny pivots degrade the eta file quickly.
            if w[r].abs() < 1e-7 && !self.refactor() {
                return Outcome::Failed;
            }
        }
    }
}

/// Solves `lp` with the bounded primal simplex.
pub fn solve(lp: &LinearProgram, opts: &SimplexOptions) -> LpSolution {
    solve_with_crash(lp, opts, &[])
}

/// Like [`solve`], starting from a basis built from `crash[i]` (a
/// structural column per row) where that basis is feasible.
pub fn solve_with_crash(
    lp: &LinearProgram,
    opts: &SimplexOptions,
    crash: &[Option<usize>],
) -> LpSolution {
    let failure = |iterations| LpSolution {
        status: LpStatus::NumericalFailure,
        objective: f64::NAN,
        x: vec![0.0; lp.num_cols()],
        iterations,
        phase1_iterations: iterations,
        bland_iterations: 0,
        refactorizations: 0,
        max_violation: f64::NAN,
    };
    let Some(mut s) = Solver::new(lp, opts, crash) else {
        return failure(0);
    };
    let nv = s.cols.len();
    let art0 = s.first_artificial();

    let mut phase1 = vec![0.0; nv];
    for c in phase1.iter_mut().skip(art0) {
        *c = 1.0;
    }
    if let Outcome::Failed = s.optimize(&phase1) {
        return failure(s.iterations);
    }
    let phase1_iterations = s.iterations;
    if !s.refactor() {
        return failure(s.iterations);
    }
    let infeasibility: f64 = s.x[art0..].iter().sum();
    let finish = |s: &Solver, status: LpStatus, phase1_iterations: usize| {
        let x: Vec<f64> = s.x[..s.n_struct].to_vec();
        LpSolution {
            status,
            objective: lp.objective(&x),
            max_violation: lp.max_violation(&x),
            x,
            iterations: s.iterations,
            phase1_iterations,
            bland_iterations: s.bland_iterations,
            refactorizations: s.refactorizations,
        }
    };
    if infeasibility > opts.feasibility_tol * (1.0 + lp.num_rows() as f64).sqrt() {
        return finish(&s, LpStatus::Infeasible, phase1_iterations);
    }
    for j in art0..nv {
        s.upper[j] = 0.0;
        if s.state[j] != VarState::Basic {
            s.x[j] = 0.0;
            s.state[j] = VarState::AtLower;
        }
    }

    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut phase2 = vec![0.0; nv];
    for (j, c) in lp.columns.iter().enumerate() {
        phase2[j] = sign * c.cost;
    }
    if let Outcome::Failed = s.optimize(&phase2) {
        return failure(s.iterations);
    }
    if !s.refactor() {
        return failure(s.iterations);
    }
    let sol = finish(&s, LpStatus::Optimal, phase1_iterations);
    if sol.max_violation > 1e-7 {
        log::warn!("simplex residual {:.3e} exceeds 1e-7", sol.max_violation);
        return LpSolution {
            status: LpStatus::NumericalFailure,
            ..sol
        };
    }
    sol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::lp::{Column, Row};

    fn col(name: &str, entries: Vec<(usize, f64)>, cost: f64, upper: f64) -> Column {
        Column {
            name: name.into(),
            entries,
            cost,
            upper,
        }
    }

    fn row(kind: RowKind, rhs: f64) -> Row {
        Row {
            name: "r".into(),
            kind,
            rhs,
        }
    }

    #[test]
    fn small_maximization() {
        // max 3x + 2y  s.t. x + y <= 4, x + 3y <= 6, x <= 3
        let lp = LinearProgram {
            sense: Sense::Maximize,
            rows: vec![row(RowKind::Le, 4.0), row(RowKind::Le, 6.0)],
            columns: vec![
                col("x", vec![(0, 1.0), (1, 1.0)], 3.0, 3.0),
                col("y", vec![(0, 1.0), (1, 3.0)], 2.0, f64::INFINITY),
            ],
        };
        let sol = solve(&lp, &SimplexOptions::default());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 11.0).abs() < 1e-9);
        assert!((sol.x[0] - 3.0).abs() < 1e-9 && (sol.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + 2y + 3z  s.t. x + y + z = 1, y + z >= 0.5
        let lp = LinearProgram {
            sense: Sense::Minimize,
            rows: vec![row(RowKind::Eq, 1.0), row(RowKind::Ge, 0.5)],
            columns: vec![
                col("x", vec![(0, 1.0)], 1.0, f64::INFINITY),
                col("y", vec![(0, 1.0), (1, 1.0)], 2.0, f64::INFINITY),
                col("z", vec![(0, 1.0), (1, 1.0)], 3.0, f64::INFINITY),
            ],
        };
        let sol = solve(&lp, &SimplexOptions::default());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 1.5).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasibility() {
        let lp = LinearProgram {
            sense: Sense::Maximize,
            rows: vec![row(RowKind::Eq, 1.0), row(RowKind::Ge, 2.0)],
            columns: vec![col("x", vec![(0, 1.0), (1, 1.0)], 1.0, f64::INFINITY)],
        };
        assert_eq!(
            solve(&lp, &SimplexOptions::default()).status,
            LpStatus::Infeasible
        );
    }

    #[test]
    fn negative_rhs() {
        // min x s.t. -x <= -2  (x >= 2)
        let lp = LinearProgram {
            sense: Sense::Minimize,
            rows: vec![row(RowKind::Le, -2.0)],
            columns: vec![col("x", vec![(0, -1.0)], 1.0, 10.0)],
        };
        let sol = solve(&lp, &SimplexOptions::default());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Klee-Minty-like degenerate vertices: many zero right-hand sides.
        let n = 6;
        let mut rows = Vec::new();
        let mut columns: Vec<Column> = (0..n)
            .map(|j| col(&format!("x{j}"), vec![], 1.0 + j as f64 * 0.01, 5.0))
            .collect();
        for i in 0..n {
            rows.push(row(RowKind::Le, if i == n - 1 { 1.0 } else { 0.0 }));
            for (j, c) in columns.iter_mut().enumerate() {
                let v = if j == i {
                    1.0
                } else if j == (i + 1) % n {
                    -1.0
                } else {
                    0.0
                };
                if v != 0.0 {
                    c.entries.push((i, v));
                }
            }
        }
        let lp = LinearProgram {
            sense: Sense::Maximize,
            rows,
            columns,
        };
        let sol = solve(&lp, &SimplexOptions::default());
        assert_ne!(sol.status, LpStatus::NumericalFailure);
    }
}
