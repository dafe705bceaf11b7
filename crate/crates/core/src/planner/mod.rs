//! Occupancy-measure planning on the product of a model with task and
//! opaque-observation automata.

pub mod lp;
pub mod lu;
pub mod policy;
pub mod product;
pub mod simplex;

use std::time::Instant;

pub use lp::{build_lp, export_lp, LinearProgram, LpProblem, Mode, Sense, DEFAULT_UPPER_BOUND};
pub use policy::{extract_policy, Policy, PolicySolution, SolverStats};
pub use product::{product_mdp, ProductMdp, ProductState};
pub use simplex::{LpStatus, SimplexOptions};

use crate::error::{Error, Result};
use lp::{Column, Row, RowKind};

#[derive(Clone, Debug, PartialEq)]
pub struct PlanOptions {
    pub upper_bound: f64,
    pub simplex: SimplexOptions,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            upper_bound: DEFAULT_UPPER_BOUND,
            simplex: SimplexOptions::default(),
        }
    }
}

/// Solves an occupancy LP. On infeasibility the largest attainable task
/// probability is computed and reported.
pub fn solve_lp(problem: &LpProblem, opts: &SimplexOptions) -> PolicySolution {
    let start = Instant::now();
    let sol = simplex::solve_with_crash(&problem.lp, opts, &problem.crash);
    let max_feasible_epsilon = match sol.status {
        LpStatus::Infeasible => max_task_probability(problem, opts),
        _ => None,
    };
    let act = problem.lp.row_activity(&sol.x);
    let flow_residual = (0..problem.flow_states.len())
        .map(|k| (act[k] - problem.lp.rows[k].rhs).abs())
        .fold(0.0, f64::max);
    PolicySolution {
        status: sol.status,
        objective: sol.objective,
        task_probability: problem.task_value(&sol.x),
        occupancy: sol.x,
        flow_residual,
        max_feasible_epsilon,
        stats: SolverStats {
            iterations: sol.iterations,
            phase1_iterations: sol.phase1_iterations,
            bland_iterations: sol.bland_iterations,
            refactorizations: sol.refactorizations,
            rows: problem.lp.num_rows(),
            columns: problem.lp.num_cols(),
            seconds: start.elapsed().as_secs_f64(),
        },
    }
}

/// Maximizes the task row subject to flow conservation alone.
fn max_task_probability(problem: &LpProblem, opts: &SimplexOptions) -> Option<f64> {
    let rows: Vec<Row> = problem.lp.rows[..problem.task_row].to_vec();
    let columns: Vec<Column> = problem
        .lp
        .columns
        .iter()
        .zip(&problem.task_coeffs)
        .map(|(c, &t)| Column {
            name: c.name.clone(),
            entries: c
                .entries
                .iter()
                .copied()
                .filter(|e| e.0 != problem.task_row)
                .collect(),
            cost: t,
            upper: c.upper,
        })
        .collect();
    debug_assert!(rows.iter().all(|r| r.kind == RowKind::Eq));
    let lp = LinearProgram {
        sense: Sense::Maximize,
        rows,
        columns,
    };
    let sol = simplex::solve_with_crash(&lp, opts, &problem.crash[..problem.task_row]);
    (sol.status == LpStatus::Optimal).then_some(sol.objective)
}

/// Result of [`plan`]: the LP, its solution and, when optimal, the policy.
#[derive(Clone, Debug)]
pub struct Plan {
    pub problem: LpProblem,
    pub solution: PolicySolution,
    pub policy: Option<Policy>,
}

/// Builds and solves the LP for `mode` at threshold `epsilon`.
pub fn plan(pm: &ProductMdp, epsilon: f64, mode: Mode, opts: &PlanOptions) -> Result<Plan> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be ≥ 0, got {epsilon}"
        )));
    }
    let problem = build_lp(pm, epsilon, mode, opts.upper_bound);
    let solution = solve_lp(&problem, &opts.simplex);
    log::info!(
        "{mode} ε={epsilon}: {:?} objective {:.6} after {} iterations",
        solution.status,
        solution.objective,
        solution.stats.iterations
    );
    let policy = (solution.status == LpStatus::Optimal)
        .then(|| extract_policy(&solution.occupancy, &problem, pm));
    Ok(Plan {
        problem,
        solution,
        policy,
    })
}
