use serde::Serialize;

use super::lp::LpProblem;
use super::product::ProductMdp;
use super::simplex::LpStatus;
use crate::model::ActionId;

/// States whose total occupancy is below this get the fallback action.
pub const OCCUPANCY_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct SolverStats {
    pub iterations: usize,
    pub phase1_iterations: usize,
    pub bland_iterations: usize,
    pub refactorizations: usize,
    pub rows: usize,
    pub columns: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PolicySolution {
    pub status: LpStatus,
    pub objective: f64,
    /// `Σ P·R1·m`, the task-satisfaction probability of the solution.
    pub task_probability: f64,
    /// Occupancy `m(v, a)` per LP column.
    pub occupancy: Vec<f64>,
    /// Largest flow-conservation residual.
    pub flow_residual: f64,
    /// Set when the task row cannot be met: the largest attainable task
    /// probability.
    pub max_feasible_epsilon: Option<f64>,
    pub stats: SolverStats,
}

/// Stationary randomized policy on a product MDP: for every non-absorbing
/// state a distribution over enabled actions, sorted by action.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Policy {
    pub dist: Vec<Vec<(ActionId, f64)>>,
}

impl Policy {
    pub fn actions(&self, v: usize) -> &[(ActionId, f64)] {
        &self.dist[v]
    }

    pub fn prob(&self, v: usize, a: ActionId) -> f64 {
        self.dist[v].iter().find(|e| e.0 == a).map_or(0.0, |e| e.1)
    }

    /// Uniform over enabled actions at every state.
    pub fn uniform(pm: &ProductMdp) -> Policy {
        let dist = (0..pm.num_states())
            .map(|v| {
                let rows = pm.rows(v);
                let p = 1.0 / rows.len() as f64;
                rows.iter().map(|r| (r.action, p)).collect()
            })
            .collect();
        Policy { dist }
    }
}

fn fallback(pm: &ProductMdp, v: usize) -> Vec<(ActionId, f64)> {
    let rows = pm.rows(v);
    if rows.iter().any(|r| r.action == pm.a_bot()) {
        return vec![(pm.a_bot(), 1.0)];
    }
    let p = 1.0 / rows.len() as f64;
    rows.iter().map(|r| (r.action, p)).collect()
}

/// `π(a|v) = m(v,a) / Σ_a' m(v,a')`, terminating (or uniform when
/// termination is unavailable) where the occupancy vanishes.
pub fn extract_policy(occupancy: &[f64], lp: &LpProblem, pm: &ProductMdp) -> Policy {
    let mut per_state: Vec<Vec<(ActionId, f64)>> = vec![Vec::new(); pm.num_states()];
    for (&(v, a), &m) in lp.vars.iter().zip(occupancy) {
        per_state[v].push((a, m.max(0.0)));
    }
    let dist = per_state
        .into_iter()
        .enumerate()
        .map(|(v, mut entries)| {
            if pm.is_absorbing(v) || pm.rows(v).is_empty() {
                return Vec::new();
            }
            let total: f64 = entries.iter().map(|e| e.1).sum();
            if total <= OCCUPANCY_THRESHOLD {
                return fallback(pm, v);
            }
            for e in &mut entries {
                e.1 /= total;
            }
            entries.sort_by_key(|e| e.0);
            entries
        })
        .collect();
    Policy { dist }
}
