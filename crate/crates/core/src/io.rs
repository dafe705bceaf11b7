//! JSON formats for models, automata and policies.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::automata::{Dfa, Letter, Nfa};
use crate::error::{Error, Result};
use crate::model::{LabelSet, Model, ModelBuilder, ObsSymbol};
use crate::planner::{Policy, PolicySolution, ProductMdp};

/// A probability written as a number or as a `"num/den"` string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Prob {
    Number(f64),
    Text(String),
}

impl Prob {
    pub fn value(&self) -> Result<f64> {
        match self {
            Prob::Number(x) => Ok(*x),
            Prob::Text(s) => {
                let parse = |t: &str| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidModel(format!("bad probability `{s}`")))
                };
                match s.split_once('/') {
                    Some((n, d)) => {
                        let d = parse(d)?;
                        if d == 0.0 {
                            return Err(Error::InvalidModel(format!("zero denominator in `{s}`")));
                        }
                        Ok(parse(n)? / d)
                    }
                    None => parse(s),
                }
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransitionJson {
    pub from: String,
    pub action: String,
    pub to: String,
    pub prob: Prob,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObservationJson {
    pub from: String,
    pub action: String,
    pub to: String,
    pub obs: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelJson {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub initial: BTreeMap<String, Prob>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atomic_props: Option<Vec<String>>,
    pub transitions: Vec<TransitionJson>,
    #[serde(default)]
    pub labels: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub observations: Vec<ObservationJson>,
    #[serde(default)]
    pub auto_frame: bool,
}

impl ModelJson {
    pub fn build(&self) -> Result<Model> {
        let mut b = ModelBuilder::new();
        for s in &self.states {
            b.state(s.clone());
        }
        for a in &self.actions {
            b.action(a.clone());
        }
        for (s, p) in &self.initial {
            b.initial(s.clone(), p.value()?);
        }
        if let Some(props) = &self.atomic_props {
            for p in props {
                b.prop(p.clone());
            }
            for (s, l) in &self.labels {
                b.raw_label(s.clone(), l.iter().cloned().collect());
            }
        } else {
            for (s, l) in &self.labels {
                b.label(s.clone(), l.iter().cloned());
            }
        }
        for t in &self.transitions {
            b.transition(
                t.from.clone(),
                t.action.clone(),
                t.to.clone(),
                t.prob.value()?,
            );
        }
        for o in &self.observations {
            b.observe(
                o.from.clone(),
                o.action.clone(),
                o.to.clone(),
                ObsSymbol::states(o.obs.iter().cloned())?,
            );
        }
        b.auto_frame(self.auto_frame);
        b.build()
    }

    /// Explicit, canonically ordered description of `model`.
    pub fn from_model(model: &Model) -> Self {
        let mut transitions = Vec::new();
        let mut observations = Vec::new();
        for s in 0..model.num_states() {
            for row in model.rows(s) {
                for tr in &row.successors {
                    let (from, action, to) = (
                        model.state_name(s).to_string(),
                        model.action_name(row.action).to_string(),
                        model.state_name(tr.target).to_string(),
                    );
                    let boundary = s == model.s_top() || tr.target == model.s_bot();
                    if let (false, Some(o)) = (boundary, tr.obs) {
                        if let ObsSymbol::States(members) = model.obs_symbol(o) {
                            observations.push(ObservationJson {
                                from: from.clone(),
                                action: action.clone(),
                                to: to.clone(),
                                obs: members.clone(),
                            });
                        }
                    }
                    transitions.push(TransitionJson {
                        from,
                        action,
                        to,
                        prob: Prob::Number(tr.prob),
                    });
                }
            }
        }
        let labels = (0..model.num_states())
            .filter(|&s| !model.label(s).is_empty())
            .map(|s| {
                (
                    model.state_name(s).to_string(),
                    model.label(s).iter().cloned().collect(),
                )
            })
            .collect();
        ModelJson {
            states: model.states().to_vec(),
            actions: model.actions().to_vec(),
            initial: model
                .initial()
                .iter()
                .map(|&(s, p)| (model.state_name(s).to_string(), Prob::Number(p)))
                .collect(),
            atomic_props: Some(model.atomic_props().iter().cloned().collect()),
            transitions,
            labels,
            observations,
            auto_frame: false,
        }
    }
}

pub fn model_from_json(text: &str) -> Result<Model> {
    let mj: ModelJson = serde_json::from_str(text)?;
    mj.build()
}

pub fn model_to_json(model: &Model) -> String {
    let mut s = serde_json::to_string_pretty(&ModelJson::from_model(model)).expect("serializable");
    s.push('\n');
    s
}

/// Automaton letters as JSON values: label sets and observation classes
/// are sorted string arrays; the markers are `"start"` and `"end"`.
pub trait JsonLetter: Letter {
    fn to_json(&self) -> serde_json::Value;
    fn from_json(v: &serde_json::Value) -> Result<Self>;
}

fn string_array(v: &serde_json::Value) -> Result<Vec<String>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::InvalidArgument(format!("letter must be an array, got {v}")))?;
    arr.iter()
        .map(|x| {
            x.as_str().map(str::to_string).ok_or_else(|| {
                Error::InvalidArgument(format!("letter entries must be strings, got {x}"))
            })
        })
        .collect()
}

impl JsonLetter for LabelSet {
    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::from(self.iter().cloned().collect::<Vec<_>>())
    }

    fn from_json(v: &serde_json::Value) -> Result<Self> {
        Ok(string_array(v)?.into_iter().collect())
    }
}

impl JsonLetter for ObsSymbol {
    fn to_json(&self) -> serde_json::Value {
        match self {
            ObsSymbol::Start => "start".into(),
            ObsSymbol::End => "end".into(),
            ObsSymbol::States(m) => serde_json::Value::from(m.clone()),
        }
    }

    fn from_json(v: &serde_json::Value) -> Result<Self> {
        match v.as_str() {
            Some("start") => Ok(ObsSymbol::Start),
            Some("end") => Ok(ObsSymbol::End),
            Some(other) => Err(Error::InvalidArgument(format!("unknown marker `{other}`"))),
            None => ObsSymbol::states(string_array(v)?),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DfaTransitionJson {
    pub from: String,
    pub letter: serde_json::Value,
    pub to: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DfaJson {
    pub states: Vec<String>,
    pub alphabet: Vec<serde_json::Value>,
    pub initial: String,
    pub accepting: Vec<String>,
    pub transitions: Vec<DfaTransitionJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NfaTransitionJson {
    pub from: String,
    pub letter: serde_json::Value,
    pub to: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NfaJson {
    pub states: Vec<String>,
    pub alphabet: Vec<serde_json::Value>,
    pub initial: Vec<String>,
    pub accepting: Vec<String>,
    pub transitions: Vec<NfaTransitionJson>,
}

fn unique_names(names: Vec<String>) -> Vec<String> {
    let distinct: BTreeSet<&String> = names.iter().collect();
    if distinct.len() == names.len() {
        names
    } else {
        (0..names.len()).map(|i| i.to_string()).collect()
    }
}

pub fn dfa_to_json<L: JsonLetter>(dfa: &Dfa<L>) -> DfaJson {
    let names = unique_names(
        (0..dfa.num_states())
            .map(|q| dfa.state_name(q).to_string())
            .collect(),
    );
    let mut transitions = Vec::new();
    for q in 0..dfa.num_states() {
        for (l, letter) in dfa.alphabet().iter().enumerate() {
            if let Some(t) = dfa.step(q, l) {
                transitions.push(DfaTransitionJson {
                    from: names[q].clone(),
                    letter: letter.to_json(),
                    to: names[t].clone(),
                });
            }
        }
    }
    DfaJson {
        states: names.clone(),
        alphabet: dfa.alphabet().iter().map(JsonLetter::to_json).collect(),
        initial: names.get(dfa.initial()).cloned().unwrap_or_default(),
        accepting: dfa.accepting_states().map(|q| names[q].clone()).collect(),
        transitions,
    }
}

fn name_index(states: &[String]) -> Result<HashMap<&str, usize>> {
    let map: HashMap<&str, usize> = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    if map.len() != states.len() {
        return Err(Error::InvalidArgument(
            "duplicate automaton state names".into(),
        ));
    }
    Ok(map)
}

fn lookup(map: &HashMap<&str, usize>, name: &str) -> Result<usize> {
    map.get(name)
        .copied()
        .ok_or_else(|| Error::InvalidArgument(format!("unknown automaton state `{name}`")))
}

impl DfaJson {
    pub fn build<L: JsonLetter>(&self) -> Result<Dfa<L>> {
        let alphabet: Vec<L> = self
            .alphabet
            .iter()
            .map(L::from_json)
            .collect::<Result<_>>()?;
        let mut dfa = Dfa::new(alphabet);
        let ids = name_index(&self.states)?;
        let accepting: BTreeSet<&str> = self.accepting.iter().map(String::as_str).collect();
        for s in &self.states {
            dfa.add_state(s.clone(), accepting.contains(s.as_str()));
        }
        for a in &self.accepting {
            lookup(&ids, a)?;
        }
        dfa.set_initial(lookup(&ids, &self.initial)?);
        for t in &self.transitions {
            let letter = L::from_json(&t.letter)?;
            let l = dfa.letter_id(&letter).ok_or_else(|| {
                Error::AlphabetMismatch(format!("letter {} not in alphabet", t.letter))
            })?;
            let (from, to) = (lookup(&ids, &t.from)?, lookup(&ids, &t.to)?);
            if let Some(prev) = dfa.step(from, l) {
                if prev != to {
                    return Err(Error::InvalidArgument(format!(
                        "nondeterministic transition from `{}` on {}",
                        t.from, t.letter
                    )));
                }
            }
            dfa.set_transition(from, l, to);
        }
        Ok(dfa)
    }
}

pub fn nfa_to_json<L: JsonLetter>(nfa: &Nfa<L>) -> NfaJson {
    let names = unique_names(
        (0..nfa.num_states())
            .map(|q| nfa.state_name(q).to_string())
            .collect(),
    );
    let mut transitions = Vec::new();
    for q in 0..nfa.num_states() {
        let mut by_letter: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for (l, t) in nfa.arcs(q) {
            by_letter.entry(l).or_default().push(names[t].clone());
        }
        for (l, to) in by_letter {
            transitions.push(NfaTransitionJson {
                from: names[q].clone(),
                letter: nfa.alphabet()[l].to_json(),
                to,
            });
        }
    }
    NfaJson {
        states: names.clone(),
        alphabet: nfa.alphabet().iter().map(JsonLetter::to_json).collect(),
        initial: nfa.initial().iter().map(|&q| names[q].clone()).collect(),
        accepting: (0..nfa.num_states())
            .filter(|&q| nfa.is_accepting(q))
            .map(|q| names[q].clone())
            .collect(),
        transitions,
    }
}

impl NfaJson {
    pub fn build<L: JsonLetter>(&self) -> Result<Nfa<L>> {
        let alphabet: Vec<L> = self
            .alphabet
            .iter()
            .map(L::from_json)
            .collect::<Result<_>>()?;
        let mut nfa = Nfa::new(alphabet);
        let ids = name_index(&self.states)?;
        let accepting: BTreeSet<&str> = self.accepting.iter().map(String::as_str).collect();
        for s in &self.states {
            nfa.add_state(s.clone(), accepting.contains(s.as_str()));
        }
        for i in &self.initial {
            nfa.add_initial(lookup(&ids, i)?);
        }
        for t in &self.transitions {
            let letter = L::from_json(&t.letter)?;
            let l = nfa.letter_id(&letter).ok_or_else(|| {
                Error::AlphabetMismatch(format!("letter {} not in alphabet", t.letter))
            })?;
            let from = lookup(&ids, &t.from)?;
            for to in &t.to {
                nfa.add_transition(from, l, lookup(&ids, to)?);
            }
        }
        Ok(nfa)
    }
}

pub fn dfa_to_json_string<L: JsonLetter>(dfa: &Dfa<L>) -> String {
    let mut s = serde_json::to_string_pretty(&dfa_to_json(dfa)).expect("serializable");
    s.push('\n');
    s
}

pub fn dfa_from_json_str<L: JsonLetter>(text: &str) -> Result<Dfa<L>> {
    let dj: DfaJson = serde_json::from_str(text)?;
    dj.build()
}

/// Inputs and settings of a CLI run, copied into every artifact it writes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secret: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opaque: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_actions: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolicyEntry {
    pub state: String,
    pub task_state: String,
    pub opaque_state: String,
    pub actions: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolicyMetadata {
    pub epsilon: f64,
    pub mode: String,
    pub status: String,
    pub objective: f64,
    pub task_probability: f64,
    pub flow_residual: f64,
    pub solver: serde_json::Value,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolicyFile {
    pub manifest: RunManifest,
    pub metadata: PolicyMetadata,
    pub entries: Vec<PolicyEntry>,
}

/// Product-state coordinates as written in policy files.
pub struct StateKey<'a> {
    pub model: &'a Model,
    pub task: &'a Dfa<LabelSet>,
    pub opaque: &'a Dfa<ObsSymbol>,
}

impl StateKey<'_> {
    fn key(&self, pm: &ProductMdp, v: usize) -> (String, String, String) {
        let st = pm.state(v);
        (
            self.model.state_name(st.s).to_string(),
            self.task.state_name(st.q).to_string(),
            self.opaque.state_name(st.qh).to_string(),
        )
    }

    pub fn policy_file(
        &self,
        pm: &ProductMdp,
        policy: &Policy,
        solution: &PolicySolution,
        epsilon: f64,
        mode: &str,
        manifest: RunManifest,
    ) -> PolicyFile {
        let entries = (0..pm.num_states())
            .filter(|&v| !policy.actions(v).is_empty())
            .map(|v| {
                let (state, task_state, opaque_state) = self.key(pm, v);
                PolicyEntry {
                    state,
                    task_state,
                    opaque_state,
                    actions: policy
                        .actions(v)
                        .iter()
                        .map(|&(a, p)| (pm.action_name(a).to_string(), p))
                        .collect(),
                }
            })
            .collect();
        PolicyFile {
            manifest,
            metadata: PolicyMetadata {
                epsilon,
                mode: mode.to_string(),
                status: format!("{:?}", solution.status).to_lowercase(),
                objective: solution.objective,
                task_probability: solution.task_probability,
                flow_residual: solution.flow_residual,
                solver: serde_json::to_value(&solution.stats).expect("serializable"),
            },
            entries,
        }
    }

    /// Maps a policy file back onto `pm`; every non-absorbing product state
    /// must be covered.
    pub fn apply(&self, pm: &ProductMdp, file: &PolicyFile) -> Result<Policy> {
        let mut by_key: HashMap<(String, String, String), &PolicyEntry> = HashMap::new();
        for e in &file.entries {
            by_key.insert(
                (
                    e.state.clone(),
                    e.task_state.clone(),
                    e.opaque_state.clone(),
                ),
                e,
            );
        }
        let mut dist = Vec::with_capacity(pm.num_states());
        for v in 0..pm.num_states() {
            if pm.is_absorbing(v) {
                dist.push(Vec::new());
                continue;
            }
            let key = self.key(pm, v);
            let entry = by_key.get(&key).ok_or_else(|| {
                Error::PolicyMismatch(format!(
                    "no policy entry for product state {}",
                    pm.state_name(v)
                ))
            })?;
            let mut d = Vec::new();
            for (name, &p) in &entry.actions {
                let a = pm
                    .actions()
                    .iter()
                    .position(|x| x == name)
                    .ok_or_else(|| Error::PolicyMismatch(format!("unknown action `{name}`")))?;
                if !pm.rows(v).iter().any(|r| r.action == a) {
                    return Err(Error::PolicyMismatch(format!(
                        "action `{name}` not enabled at {}",
                        pm.state_name(v)
                    )));
                }
                d.push((a, p));
            }
            d.sort_by_key(|e| e.0);
            let total: f64 = d.iter().map(|e| e.1).sum();
            if (total - 1.0).abs() > 1e-6 {
                return Err(Error::PolicyMismatch(format!(
                    "distribution at {} sums to {total}",
                    pm.state_name(v)
                )));
            }
            dist.push(d);
        }
        Ok(Policy { dist })
    }
}
