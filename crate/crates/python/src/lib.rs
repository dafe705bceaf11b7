//! Python bindings: build a planner from a model JSON and two LTLf
//! formulas, then plan, simulate or export LPs.

use std::collections::BTreeMap;

use opaque_planner::automata::Dfa;
use opaque_planner::io::{model_from_json, model_to_json};
use opaque_planner::ltlf::{ltlf_to_dfa, parse_ltlf};
use opaque_planner::model::{LabelSet, Model, ObsSymbol};
use opaque_planner::planner::{
    build_lp, export_lp, plan, product_mdp, Mode, PlanOptions, Policy, ProductMdp,
    DEFAULT_UPPER_BOUND,
};
use opaque_planner::scenarios::{self, GridworldConfig};
use opaque_planner::simulate::{default_horizon, rollout, verify_opaque_dfa};
use opaque_planner::transducer::{opaque_obs_dfa, IntersectionOrder, OpaqueStats};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn formula_dfa(model: &Model, text: &str) -> PyResult<Dfa<LabelSet>> {
    let f = parse_ltlf(text).map_err(err)?;
    ltlf_to_dfa(&f, &model.label_alphabet(), model.atomic_props()).map_err(err)
}

fn mode(name: &str) -> PyResult<Mode> {
    name.parse().map_err(PyValueError::new_err)
}

/// JSON of the nine-state running example.
#[pyfunction]
fn running_example() -> String {
    model_to_json(&scenarios::running_example())
}

/// JSON of the power-plant gridworld; `config` is an optional JSON object
/// overriding default fields.
#[pyfunction]
#[pyo3(signature = (config=None))]
fn gridworld(config: Option<&str>) -> PyResult<String> {
    let cfg: GridworldConfig = match config {
        Some(text) => serde_json::from_str(text).map_err(err)?,
        None => GridworldConfig::default(),
    };
    Ok(model_to_json(&scenarios::gridworld(&cfg).map_err(err)?))
}

/// Checks the opaque-observations DFA against brute-force enumeration of
/// plays with at most `max_actions` interior actions.
#[pyfunction]
#[pyo3(signature = (model_json, secret, max_actions=4))]
fn verify<'py>(
    py: Python<'py>,
    model_json: &str,
    secret: &str,
    max_actions: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let model = model_from_json(model_json).map_err(err)?;
    let sec = formula_dfa(&model, secret)?;
    let opaque = opaque_obs_dfa(&model, &sec, IntersectionOrder::NfaProduct).map_err(err)?;
    let r = verify_opaque_dfa(&model, &sec, &opaque.dfa, max_actions).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("plays", r.plays)?;
    d.set_item("words", r.words)?;
    d.set_item("opaque_words", r.opaque_words)?;
    d.set_item("discrepancies", r.discrepancies.len())?;
    Ok(d)
}

/// Model, opaque-observations DFA and product MDP for one task and secret.
#[pyclass(frozen)]
struct Planner {
    model: Model,
    opaque: Dfa<ObsSymbol>,
    stats: OpaqueStats,
    pm: ProductMdp,
}

impl Planner {
    fn solve(
        &self,
        epsilon: f64,
        mode_name: &str,
    ) -> PyResult<(opaque_planner::planner::Plan, Policy)> {
        let p = plan(&self.pm, epsilon, mode(mode_name)?, &PlanOptions::default()).map_err(err)?;
        match p.policy.clone() {
            Some(policy) => Ok((p, policy)),
            None => Err(PyRuntimeError::new_err(
                match p.solution.max_feasible_epsilon {
                    Some(e) => format!("infeasible; maximal feasible epsilon {e:.4}"),
                    None => format!("{:?}", p.solution.status).to_lowercase(),
                },
            )),
        }
    }
}

#[pymethods]
impl Planner {
    #[new]
    fn new(model_json: &str, task: &str, secret: &str) -> PyResult<Self> {
        let model = model_from_json(model_json).map_err(err)?;
        let built = opaque_obs_dfa(
            &model,
            &formula_dfa(&model, secret)?,
            IntersectionOrder::NfaProduct,
        )
        .map_err(err)?;
        let pm = product_mdp(&model, &formula_dfa(&model, task)?, &built.dfa).map_err(err)?;
        Ok(Planner {
            model,
            opaque: built.dfa,
            stats: built.stats,
            pm,
        })
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        d.set_item("model_states", self.model.num_states())?;
        d.set_item("nfa_states", self.stats.nfa_states)?;
        d.set_item("dfa_states", self.stats.dfa_states)?;
        d.set_item("opaque_states", self.opaque.num_states())?;
        d.set_item("product_states", self.pm.num_states())?;
        Ok(d)
    }

    /// Whether the observation word, given as lists of state names between
    /// the start and end markers, is opaque.
    fn is_opaque(&self, word: Vec<Vec<String>>) -> PyResult<bool> {
        let mut symbols = vec![ObsSymbol::Start];
        for members in word {
            symbols.push(ObsSymbol::states(members).map_err(err)?);
        }
        symbols.push(ObsSymbol::End);
        Ok(self.opaque.accepts(&symbols))
    }

    /// Solves the LP; the policy maps product-state names to action
    /// distributions.
    #[pyo3(signature = (epsilon, mode="opacity"))]
    fn plan<'py>(&self, py: Python<'py>, epsilon: f64, mode: &str) -> PyResult<Bound<'py, PyDict>> {
        let (p, policy) = self.solve(epsilon, mode)?;
        let table: BTreeMap<String, BTreeMap<String, f64>> = (0..self.pm.num_states())
            .filter(|&v| !policy.actions(v).is_empty())
            .map(|v| {
                let dist = policy
                    .actions(v)
                    .iter()
                    .map(|&(a, x)| (self.pm.action_name(a).to_string(), x))
                    .collect();
                (self.pm.state_name(v).to_string(), dist)
            })
            .collect();
        let d = PyDict::new(py);
        d.set_item("objective", p.solution.objective)?;
        d.set_item("task_probability", p.solution.task_probability)?;
        d.set_item("iterations", p.solution.stats.iterations)?;
        d.set_item("policy", table)?;
        Ok(d)
    }

    /// Plans, then estimates PH, PT and the task probability by sampling.
    #[pyo3(signature = (epsilon, mode="opacity", runs=5000, seed=0, horizon=None))]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        epsilon: f64,
        mode: &str,
        runs: usize,
        seed: u64,
        horizon: Option<usize>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let (p, policy) = self.solve(epsilon, mode)?;
        let horizon = horizon.unwrap_or_else(|| default_horizon(&self.model));
        let s = py
            .detach(|| rollout(&self.pm, &policy, runs, seed, horizon))
            .map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("objective", p.solution.objective)?;
        d.set_item("runs", s.runs)?;
        d.set_item("ph", s.ph)?;
        d.set_item("pt", s.pt)?;
        d.set_item("p_task", s.p_task)?;
        d.set_item("truncated", s.horizon_truncated)?;
        Ok(d)
    }

    /// The LP in CPLEX LP format.
    #[pyo3(signature = (epsilon, mode="opacity"))]
    fn export_lp(&self, epsilon: f64, mode: &str) -> PyResult<String> {
        Ok(export_lp(
            &build_lp(&self.pm, epsilon, self::mode(mode)?, DEFAULT_UPPER_BOUND).lp,
        ))
    }
}

#[pymodule]
fn opaque_planner_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(running_example, m)?)?;
    m.add_function(wrap_pyfunction!(gridworld, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_class::<Planner>()?;
    Ok(())
}
