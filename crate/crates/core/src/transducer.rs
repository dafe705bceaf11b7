//! Finite-state transducers for the observation function and the
//! construction of the opaque-observations DFA.
//!
//! The observation FST reads enabled transitions `(s,a,s')` and writes the
//! observation symbol each one emits. Its product with a secret DFA tracks
//! whether the label word read so far satisfies the secret. Erasing inputs
//! yields two NFAs over observations, one for secret-satisfying plays and one
//! for violating plays; their intersection is the set of opaque observations.

use std::collections::{HashMap, VecDeque};
use std::time::Instant;

use serde::Serialize;

use crate::automata::escape;
use crate::automata::{complete, determinize, dfa_intersect, intersect, minimize, Dfa, Nfa};
use crate::error::{Error, Result};
use crate::model::{ActionId, LabelSet, Model, ObsId, ObsSymbol, Play, StateId};

/// An input letter `(s, a, s')`.
pub type InputLetter = (StateId, ActionId, StateId);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FstArc {
    pub input: usize,
    pub output: ObsId,
    pub to: usize,
}

/// Deterministic letter-to-letter transducer whose states are model states.
#[derive(Clone, Debug)]
pub struct Fst {
    state_names: Vec<String>,
    action_names: Vec<String>,
    initial: StateId,
    inputs: Vec<InputLetter>,
    input_ids: HashMap<InputLetter, usize>,
    outputs: Vec<ObsSymbol>,
    arcs: Vec<Vec<FstArc>>,
}

impl Fst {
    pub fn num_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.state_names[s]
    }

    pub fn inputs(&self) -> &[InputLetter] {
        &self.inputs
    }

    pub fn input_id(&self, letter: InputLetter) -> Option<usize> {
        self.input_ids.get(&letter).copied()
    }

    pub fn outputs(&self) -> &[ObsSymbol] {
        &self.outputs
    }

    pub fn arcs(&self, s: StateId) -> &[FstArc] {
        &self.arcs[s]
    }

    pub fn num_transitions(&self) -> usize {
        self.arcs.iter().map(Vec::len).sum()
    }

    pub fn step(&self, s: StateId, input: usize) -> Option<&FstArc> {
        self.arcs[s].iter().find(|arc| arc.input == input)
    }

    /// Runs the transducer from its initial state; `None` if some input is
    /// not enabled where it is read.
    pub fn run(&self, inputs: &[usize]) -> Option<(StateId, Vec<ObsId>)> {
        let mut s = self.initial;
        let mut out = Vec::with_capacity(inputs.len());
        for &i in inputs {
            let arc = self.step(s, i)?;
            out.push(arc.output);
            s = arc.to;
        }
        Some((s, out))
    }

    /// Input word `In(ρ)` of a play.
    pub fn input_word(&self, play: &Play) -> Option<Vec<usize>> {
        (0..play.actions.len())
            .map(|i| self.input_id((play.states[i], play.actions[i], play.states[i + 1])))
            .collect()
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph fst {\n  rankdir=LR;\n");
        out.push_str(&format!(
            "  init [shape=point];\n  init -> {};\n",
            self.initial
        ));
        for (s, name) in self.state_names.iter().enumerate() {
            out.push_str(&format!("  {s} [label=\"{}\"];\n", escape(name)));
        }
        for (s, arcs) in self.arcs.iter().enumerate() {
            for arc in arcs {
                let (from, a, to) = self.inputs[arc.input];
                let label = format!(
                    "({},{},{})/{}",
                    self.state_names[from],
                    self.action_names[a],
                    self.state_names[to],
                    self.outputs[arc.output]
                );
                out.push_str(&format!(
                    "  {s} -> {} [label=\"{}\"];\n",
                    arc.to,
                    escape(label)
                ));
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Encodes the observation function as an FST. Transitions out of `s_bot`
/// are omitted because `s_bot` is terminal.
pub fn build_obs_fst(model: &Model) -> Result<Fst> {
    let mut inputs = Vec::new();
    let mut input_ids = HashMap::new();
    let mut arcs = vec![Vec::new(); model.num_states()];
    for s in 0..model.num_states() {
        if s == model.s_bot() {
            continue;
        }
        for row in model.rows(s) {
            for tr in &row.successors {
                if tr.prob <= 0.0 {
                    continue;
                }
                let output = tr.obs.ok_or_else(|| {
                    Error::InvalidModel(format!(
                        "({},{},{}) has no observation",
                        model.state_name(s),
                        model.action_name(row.action),
                        model.state_name(tr.target)
                    ))
                })?;
                let letter = (s, row.action, tr.target);
                let id = inputs.len();
                inputs.push(letter);
                input_ids.insert(letter, id);
                arcs[s].push(FstArc {
                    input: id,
                    output,
                    to: tr.target,
                });
            }
        }
    }
    let fst = Fst {
        state_names: model.states().to_vec(),
        action_names: model.actions().to_vec(),
        initial: model.s_top(),
        inputs,
        input_ids,
        outputs: model.obs_alphabet().to_vec(),
        arcs,
    };
    Ok(fst)
}

/// Product of the observation FST with a secret DFA.
#[derive(Clone, Debug)]
pub struct ProductFst {
    states: Vec<(StateId, usize)>,
    ids: HashMap<(StateId, usize), usize>,
    names: Vec<String>,
    arcs: Vec<Vec<FstArc>>,
    satisfying: Vec<bool>,
    violating: Vec<bool>,
    outputs: Vec<ObsSymbol>,
    inputs: Vec<InputLetter>,
}

impl ProductFst {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// The initial state `(s_top, ι)` always has index 0.
    pub fn initial(&self) -> usize {
        0
    }

    pub fn state(&self, i: usize) -> (StateId, usize) {
        self.states[i]
    }

    pub fn state_id(&self, s: StateId, q: usize) -> Option<usize> {
        self.ids.get(&(s, q)).copied()
    }

    pub fn state_name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn arcs(&self, i: usize) -> &[FstArc] {
        &self.arcs[i]
    }

    pub fn num_transitions(&self) -> usize {
        self.arcs.iter().map(Vec::len).sum()
    }

    /// Member of `F_h`: terminated with an accepting secret state.
    pub fn is_satisfying(&self, i: usize) -> bool {
        self.satisfying[i]
    }

    /// Member of `F_h†`: terminated with a rejecting secret state.
    pub fn is_violating(&self, i: usize) -> bool {
        self.violating[i]
    }

    pub fn outputs(&self) -> &[ObsSymbol] {
        &self.outputs
    }

    /// States visited while reading `inputs`, starting with the initial one.
    pub fn run(&self, inputs: &[usize]) -> Option<Vec<usize>> {
        let mut cur = self.initial();
        let mut path = vec![cur];
        for &i in inputs {
            cur = self.arcs[cur].iter().find(|arc| arc.input == i)?.to;
            path.push(cur);
        }
        Some(path)
    }

    pub fn to_dot(&self, model: &Model) -> String {
        let mut out = String::from("digraph product_fst {\n  rankdir=LR;\n");
        out.push_str("  init [shape=point];\n  init -> 0;\n");
        for (i, name) in self.names.iter().enumerate() {
            let shape = if self.satisfying[i] {
                "doublecircle"
            } else if self.violating[i] {
                "box"
            } else {
                "circle"
            };
            out.push_str(&format!(
                "  {i} [label=\"{}\", shape={shape}];\n",
                escape(name)
            ));
        }
        for (i, arcs) in self.arcs.iter().enumerate() {
            for arc in arcs {
                let (s, a, t) = self.inputs[arc.input];
                let label = format!(
                    "({},{},{})/{}",
                    model.state_name(s),
                    model.action_name(a),
                    model.state_name(t),
                    self.outputs[arc.output]
                );
                out.push_str(&format!(
                    "  {i} -> {} [label=\"{}\"];\n",
                    arc.to,
                    escape(label)
                ));
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Reachable product of `fst` and `secret`. The secret reads `L(s)` when the
/// play enters an interior state `s` and nothing on the terminating step.
pub fn product_fst(model: &Model, fst: &Fst, secret: &Dfa<LabelSet>) -> Result<ProductFst> {
    if !secret.is_complete() {
        return Err(Error::IncompleteDfa("secret DFA must be complete".into()));
    }
    let letter_of = |s: StateId| -> Result<usize> {
        secret.letter_id(model.label(s)).ok_or_else(|| {
            Error::AlphabetMismatch(format!(
                "label {{{}}} of {} is not a letter of the secret DFA",
                model.label(s).iter().cloned().collect::<Vec<_>>().join(","),
                model.state_name(s)
            ))
        })
    };
    let mut pf = ProductFst {
        states: Vec::new(),
        ids: HashMap::new(),
        names: Vec::new(),
        arcs: Vec::new(),
        satisfying: Vec::new(),
        violating: Vec::new(),
        outputs: fst.outputs.clone(),
        inputs: fst.inputs.clone(),
    };
    let s_bot = model.s_bot();
    let add = |pf: &mut ProductFst, s: StateId, q: usize| -> (usize, bool) {
        if let Some(&i) = pf.ids.get(&(s, q)) {
            return (i, false);
        }
        let i = pf.states.len();
        pf.states.push((s, q));
        pf.ids.insert((s, q), i);
        pf.names.push(format!(
            "({},{})",
            model.state_name(s),
            secret.state_name(q)
        ));
        pf.arcs.push(Vec::new());
        pf.satisfying.push(s == s_bot && secret.is_accepting(q));
        pf.violating.push(s == s_bot && !secret.is_accepting(q));
        (i, true)
    };
    let (init, _) = add(&mut pf, fst.initial(), secret.initial());
    let mut queue = VecDeque::from([init]);
    while let Some(i) = queue.pop_front() {
        let (s, q) = pf.states[i];
        for arc in fst.arcs(s) {
            let (_, a, t) = fst.inputs[arc.input];
            let q2 = if a == model.a_bot() || t == s_bot {
                q
            } else {
                secret
                    .step(q, letter_of(t)?)
                    .expect("complete DFA has every transition")
            };
            let (j, fresh) = add(&mut pf, t, q2);
            if fresh {
                queue.push_back(j);
            }
            pf.arcs[i].push(FstArc {
                input: arc.input,
                output: arc.output,
                to: j,
            });
        }
    }
    Ok(pf)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputSide {
    Satisfying,
    Violating,
}

/// Output-language NFA: inputs erased, outputs read as letters, accepting
/// at `F_h` or `F_h†`. Useless states are trimmed.
pub fn output_nfa(pf: &ProductFst, side: OutputSide) -> Nfa<ObsSymbol> {
    let mut nfa = Nfa::new(pf.outputs.clone());
    for i in 0..pf.num_states() {
        let acc = match side {
            OutputSide::Satisfying => pf.satisfying[i],
            OutputSide::Violating => pf.violating[i],
        };
        nfa.add_state(pf.names[i].clone(), acc);
    }
    nfa.add_initial(pf.initial());
    for (i, arcs) in pf.arcs.iter().enumerate() {
        for arc in arcs {
            nfa.add_transition(i, arc.output, arc.to);
        }
    }
    nfa.trim()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum IntersectionOrder {
    /// Intersect the two NFAs, then determinize once.
    #[default]
    NfaProduct,
    /// Determinize each NFA, then take the DFA product.
    DfaProduct,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct OpaqueStats {
    pub fst_states: usize,
    pub product_fst_states: usize,
    /// States of the intersection NFA (zero in DFA-product mode).
    pub nfa_states: usize,
    /// States after subset construction, before minimization.
    pub dfa_states: usize,
    pub minimized_states: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct OpaqueDfa {
    pub dfa: Dfa<ObsSymbol>,
    pub stats: OpaqueStats,
}

/// Minimal complete DFA over the realized observation symbols accepting
/// exactly the opaque observations.
pub fn opaque_obs_dfa(
    model: &Model,
    secret: &Dfa<LabelSet>,
    order: IntersectionOrder,
) -> Result<OpaqueDfa> {
    let start = Instant::now();
    let fst = build_obs_fst(model)?;
    let pf = product_fst(model, &fst, secret)?;
    let sat = output_nfa(&pf, OutputSide::Satisfying);
    let viol = output_nfa(&pf, OutputSide::Violating);
    let (nfa_states, dfa) = match order {
        IntersectionOrder::NfaProduct => {
            let both = intersect(&sat, &viol)?;
            (both.num_states(), determinize(&both))
        }
        IntersectionOrder::DfaProduct => {
            let a = complete(&determinize(&sat), "sink");
            let b = complete(&determinize(&viol), "sink");
            (0, dfa_intersect(&a, &b)?)
        }
    };
    let dfa_states = dfa.num_states();
    let min = complete(&minimize(&dfa), "sink");
    let stats = OpaqueStats {
        fst_states: fst.num_states(),
        product_fst_states: pf.num_states(),
        nfa_states,
        dfa_states,
        minimized_states: min.num_states(),
        seconds: start.elapsed().as_secs_f64(),
    };
    log::debug!("opaque DFA: {stats:?}");
    Ok(OpaqueDfa { dfa: min, stats })
}
