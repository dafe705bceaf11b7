use std::collections::{HashMap, VecDeque};

use crate::automata::Dfa;
use crate::error::{Error, Result};
use crate::model::{ActionId, LabelSet, Model, ObsSymbol, StateId};

/// `(s, q, q̂)`: model state, task-DFA state, opaque-DFA state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProductState {
    pub s: StateId,
    pub q: usize,
    pub qh: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductSucc {
    pub to: usize,
    pub prob: f64,
    /// Task reward: the task DFA enters an accepting state.
    pub task: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductRow {
    pub action: ActionId,
    pub successors: Vec<ProductSucc>,
}

/// Reachable product of a model with a task DFA over labels and an opaque
/// DFA over observations. States over `s_bot` are absorbing and carry no
/// rows.
#[derive(Clone, Debug)]
pub struct ProductMdp {
    states: Vec<ProductState>,
    ids: HashMap<ProductState, usize>,
    rows: Vec<Vec<ProductRow>>,
    task_accepting: Vec<bool>,
    opaque_accepting: Vec<bool>,
    names: Vec<String>,
    action_names: Vec<String>,
    a_bot: ActionId,
    s_bot: StateId,
}

impl ProductMdp {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// `v0 = (s_top, ι, ι̂)` is always state 0.
    pub fn initial(&self) -> usize {
        0
    }

    pub fn state(&self, v: usize) -> ProductState {
        self.states[v]
    }

    pub fn state_id(&self, st: ProductState) -> Option<usize> {
        self.ids.get(&st).copied()
    }

    /// `(s,q,q̂)` with the automata states written by name.
    pub fn state_name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        &self.action_names[a]
    }

    pub fn actions(&self) -> &[String] {
        &self.action_names
    }

    pub fn a_bot(&self) -> ActionId {
        self.a_bot
    }

    pub fn rows(&self, v: usize) -> &[ProductRow] {
        &self.rows[v]
    }

    pub fn is_absorbing(&self, v: usize) -> bool {
        self.states[v].s == self.s_bot
    }

    pub fn task_accepting(&self, v: usize) -> bool {
        self.task_accepting[v]
    }

    pub fn opaque_accepting(&self, v: usize) -> bool {
        self.opaque_accepting[v]
    }

    /// Opacity reward `R2(v, a)`: terminating into an accepting opaque state.
    pub fn reward_opaque(&self, v: usize, a: ActionId) -> bool {
        self.terminal_successor(v, a)
            .is_some_and(|t| self.opaque_accepting[t])
    }

    /// Transparency reward: terminating into a rejecting opaque state.
    pub fn reward_transparent(&self, v: usize, a: ActionId) -> bool {
        self.terminal_successor(v, a)
            .is_some_and(|t| !self.opaque_accepting[t])
    }

    fn terminal_successor(&self, v: usize, a: ActionId) -> Option<usize> {
        if a != self.a_bot {
            return None;
        }
        let row = self.rows[v].iter().find(|r| r.action == a)?;
        row.successors.first().map(|s| s.to)
    }

    pub fn num_transitions(&self) -> usize {
        self.rows
            .iter()
            .flat_map(|r| r.iter().map(|row| row.successors.len()))
            .sum()
    }
}

fn label_letter(model: &Model, dfa: &Dfa<LabelSet>, s: StateId, what: &str) -> Result<usize> {
    dfa.letter_id(model.label(s)).ok_or_else(|| {
        Error::AlphabetMismatch(format!(
            "label {{{}}} of {} is not a letter of the {what} DFA",
            model.label(s).iter().cloned().collect::<Vec<_>>().join(","),
            model.state_name(s)
        ))
    })
}

/// Builds the reachable product. The task DFA reads `L(s')` on every step
/// entering an interior state; the opaque DFA reads every observation,
/// including the two markers.
pub fn product_mdp(
    model: &Model,
    task: &Dfa<LabelSet>,
    opaque: &Dfa<ObsSymbol>,
) -> Result<ProductMdp> {
    if !task.is_complete() {
        return Err(Error::IncompleteDfa("task DFA must be complete".into()));
    }
    if !opaque.is_complete() {
        return Err(Error::IncompleteDfa("opaque DFA must be complete".into()));
    }
    let label_ids: Vec<Option<usize>> = (0..model.num_states())
        .map(|s| {
            if model.is_interior(s) {
                label_letter(model, task, s, "task").map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;
    let obs_ids: Vec<usize> = model
        .obs_alphabet()
        .iter()
        .map(|o| {
            opaque.letter_id(o).ok_or_else(|| {
                Error::AlphabetMismatch(format!(
                    "observation {o} is not a letter of the opaque DFA"
                ))
            })
        })
        .collect::<Result<_>>()?;

    let mut pm = ProductMdp {
        states: Vec::new(),
        ids: HashMap::new(),
        rows: Vec::new(),
        task_accepting: Vec::new(),
        opaque_accepting: Vec::new(),
        names: Vec::new(),
        action_names: model.actions().to_vec(),
        a_bot: model.a_bot(),
        s_bot: model.s_bot(),
    };
    let add = |pm: &mut ProductMdp, st: ProductState| -> (usize, bool) {
        if let Some(&v) = pm.ids.get(&st) {
            return (v, false);
        }
        let v = pm.states.len();
        pm.states.push(st);
        pm.ids.insert(st, v);
        pm.rows.push(Vec::new());
        pm.task_accepting.push(task.is_accepting(st.q));
        pm.opaque_accepting.push(opaque.is_accepting(st.qh));
        pm.names.push(format!(
            "({},{},{})",
            model.state_name(st.s),
            task.state_name(st.q),
            opaque.state_name(st.qh)
        ));
        (v, true)
    };
    let v0 = ProductState {
        s: model.s_top(),
        q: task.initial(),
        qh: opaque.initial(),
    };
    add(&mut pm, v0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        let st = pm.states[v];
        if st.s == model.s_bot() {
            continue;
        }
        let mut rows = Vec::new();
        for row in model.rows(st.s) {
            let mut successors: Vec<ProductSucc> = Vec::new();
            for tr in &row.successors {
                if tr.prob <= 0.0 {
                    continue;
                }
                let q2 = match label_ids[tr.target] {
                    Some(l) => task.step(st.q, l).expect("complete task DFA"),
                    None => st.q,
                };
                let obs = tr.obs.ok_or_else(|| {
                    Error::InvalidModel(format!(
                        "({},{},{}) has no observation",
                        model.state_name(st.s),
                        model.action_name(row.action),
                        model.state_name(tr.target)
                    ))
                })?;
                let qh2 = opaque
                    .step(st.qh, obs_ids[obs])
                    .expect("complete opaque DFA");
                let next = ProductState {
                    s: tr.target,
                    q: q2,
                    qh: qh2,
                };
                let (to, fresh) = add(&mut pm, next);
                if fresh {
                    queue.push_back(to);
                }
                let task_reward = !task.is_accepting(st.q) && task.is_accepting(q2);
                successors.push(ProductSucc {
                    to,
                    prob: tr.prob,
                    task: task_reward,
                });
            }
            if !successors.is_empty() {
                rows.push(ProductRow {
                    action: row.action,
                    successors,
                });
            }
        }
        pm.rows[v] = rows;
    }
    Ok(pm)
}
