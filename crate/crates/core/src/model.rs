//! Terminating probabilistic transition systems.
//!
//! A [`Model`] is an MDP without rewards whose plays start with the
//! initiating action from `s_top` and end with the terminating action into
//! `s_bot`. Every transition carries the observation symbol the eavesdropper
//! receives when it fires. Transitions out of `s_top` emit [`ObsSymbol::Start`]
//! and transitions into `s_bot` emit [`ObsSymbol::End`]; both are assigned by
//! the builder and never appear in model files.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};

pub type StateId = usize;
pub type ActionId = usize;
pub type ObsId = usize;

/// A set of atomic propositions holding at a state.
pub type LabelSet = BTreeSet<String>;

pub const S_TOP: &str = "s_top";
pub const S_BOT: &str = "s_bot";
pub const A_TOP: &str = "a_top";
pub const A_BOT: &str = "a_bot";

/// Probability mass tolerance for row-stochasticity checks.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// A letter of the observation alphabet.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObsSymbol {
    Start,
    End,
    /// Sorted, deduplicated, nonempty.
    States(Vec<String>),
}

impl ObsSymbol {
    pub fn states<I, S>(members: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut members: Vec<String> = members.into_iter().map(Into::into).collect();
        members.sort();
        members.dedup();
        if members.is_empty() {
            return Err(Error::InvalidModel(
                "observation symbol must name at least one state".into(),
            ));
        }
        Ok(ObsSymbol::States(members))
    }
}

impl fmt::Display for ObsSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObsSymbol::Start => write!(f, "⋊"),
            ObsSymbol::End => write!(f, "⋉"),
            ObsSymbol::States(m) => write!(f, "[{}]", m.join(",")),
        }
    }
}

/// A letter of a framed label word.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LabelLetter {
    Start,
    End,
    Props(LabelSet),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub target: StateId,
    pub prob: f64,
    pub obs: Option<ObsId>,
}

/// The transitions enabled by one action at one state.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionRow {
    pub action: ActionId,
    pub successors: Vec<Transition>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    ProbabilityMass,
    InvalidProbability,
    InitialDistribution,
    InitiatingAction,
    TerminatingActionMissing,
    TerminatingAction,
    TerminalSelfLoop,
    MissingObservation,
    DanglingObservation,
    Label,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.message)
    }
}

/// Probabilistic transition system with framing states and a
/// transition-observation function.
///
/// Immutable once built; states, actions and observation symbols are interned
/// to dense indices.
#[derive(Clone, Debug)]
pub struct Model {
    states: Vec<String>,
    state_ids: HashMap<String, StateId>,
    actions: Vec<String>,
    action_ids: HashMap<String, ActionId>,
    s_top: StateId,
    s_bot: StateId,
    a_top: ActionId,
    a_bot: ActionId,
    initial: Vec<(StateId, f64)>,
    atomic_props: BTreeSet<String>,
    labels: Vec<LabelSet>,
    rows: Vec<Vec<ActionRow>>,
    obs_alphabet: Vec<ObsSymbol>,
    obs_ids: HashMap<ObsSymbol, ObsId>,
    dangling_observations: Vec<(StateId, ActionId, StateId)>,
}

impl Model {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s]
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        &self.actions[a]
    }

    pub fn state_id(&self, name: &str) -> Result<StateId> {
        self.state_ids
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownState(name.to_string()))
    }

    pub fn action_id(&self, name: &str) -> Result<ActionId> {
        self.action_ids
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownAction(name.to_string()))
    }

    pub fn s_top(&self) -> StateId {
        self.s_top
    }

    pub fn s_bot(&self) -> StateId {
        self.s_bot
    }

    pub fn a_top(&self) -> ActionId {
        self.a_top
    }

    pub fn a_bot(&self) -> ActionId {
        self.a_bot
    }

    /// Interior states: everything but `s_top` and `s_bot`.
    pub fn is_interior(&self, s: StateId) -> bool {
        s != self.s_top && s != self.s_bot
    }

    pub fn initial(&self) -> &[(StateId, f64)] {
        &self.initial
    }

    pub fn atomic_props(&self) -> &BTreeSet<String> {
        &self.atomic_props
    }

    pub fn label(&self, s: StateId) -> &LabelSet {
        &self.labels[s]
    }

    /// Distinct labels of interior states, sorted. This is the alphabet
    /// label automata need to be complete over.
    pub fn label_alphabet(&self) -> Vec<LabelSet> {
        let set: BTreeSet<&LabelSet> = (0..self.num_states())
            .filter(|&s| self.is_interior(s))
            .map(|s| &self.labels[s])
            .collect();
        set.into_iter().cloned().collect()
    }

    /// Enabled actions at `s` with their successor distributions, ordered by
    /// action index.
    pub fn rows(&self, s: StateId) -> &[ActionRow] {
        &self.rows[s]
    }

    pub fn row(&self, s: StateId, a: ActionId) -> Option<&ActionRow> {
        self.rows[s].iter().find(|r| r.action == a)
    }

    pub fn transition(&self, s: StateId, a: ActionId, t: StateId) -> Option<&Transition> {
        self.row(s, a)?.successors.iter().find(|tr| tr.target == t)
    }

    pub fn prob(&self, s: StateId, a: ActionId, t: StateId) -> f64 {
        self.transition(s, a, t).map_or(0.0, |tr| tr.prob)
    }

    pub fn obs_alphabet(&self) -> &[ObsSymbol] {
        &self.obs_alphabet
    }

    pub fn obs_symbol(&self, o: ObsId) -> &ObsSymbol {
        &self.obs_alphabet[o]
    }

    pub fn obs_id(&self, sym: &ObsSymbol) -> Option<ObsId> {
        self.obs_ids.get(sym).copied()
    }

    pub fn start_obs(&self) -> ObsId {
        self.obs_ids[&ObsSymbol::Start]
    }

    pub fn end_obs(&self) -> ObsId {
        self.obs_ids[&ObsSymbol::End]
    }

    /// Observation emitted by a positive-probability transition.
    pub fn observation(&self, s: StateId, a: ActionId, t: StateId) -> Option<ObsId> {
        self.transition(s, a, t).and_then(|tr| tr.obs)
    }

    /// Checks every structural invariant and returns the violations found.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |kind: ViolationKind, message: String| out.push(Violation { kind, message });

        let mu_total: f64 = self.initial.iter().map(|&(_, p)| p).sum();
        if self.initial.is_empty() {
            push(
                ViolationKind::InitialDistribution,
                "initial distribution has empty support".into(),
            );
        } else if (mu_total - 1.0).abs() > PROB_TOLERANCE {
            push(
                ViolationKind::InitialDistribution,
                format!("initial distribution sums to {mu_total}"),
            );
        }
        for &(s, p) in &self.initial {
            if !self.is_interior(s) {
                push(
                    ViolationKind::InitialDistribution,
                    format!("initial distribution puts mass {p} on {}", self.states[s]),
                );
            }
        }

        for s in 0..self.num_states() {
            let sname = &self.states[s];
            for row in &self.rows[s] {
                let aname = &self.actions[row.action];
                let mut mass = 0.0;
                for tr in &row.successors {
                    if !(tr.prob > 0.0 && tr.prob <= 1.0 + PROB_TOLERANCE) {
                        push(
                            ViolationKind::InvalidProbability,
                            format!(
                                "P({sname},{aname},{}) = {} is not in (0,1]",
                                self.states[tr.target], tr.prob
                            ),
                        );
                    }
                    mass += tr.prob;
                    if tr.obs.is_none() {
                        push(
                            ViolationKind::MissingObservation,
                            format!(
                                "no observation for ({sname},{aname},{})",
                                self.states[tr.target]
                            ),
                        );
                    }
                    if tr.target == self.s_bot && s != self.s_bot && row.action != self.a_bot {
                        push(
                            ViolationKind::TerminatingAction,
                            format!("({sname},{aname}) reaches {S_BOT} without {A_BOT}"),
                        );
                    }
                }
                if (mass - 1.0).abs() > PROB_TOLERANCE {
                    push(
                        ViolationKind::ProbabilityMass,
                        format!("P({sname},{aname},·) sums to {mass}"),
                    );
                }
                if row.action == self.a_top && s != self.s_top {
                    push(
                        ViolationKind::InitiatingAction,
                        format!("{A_TOP} enabled at {sname}"),
                    );
                }
                if row.action == self.a_bot {
                    if s == self.s_top || s == self.s_bot {
                        push(
                            ViolationKind::TerminatingAction,
                            format!("{A_BOT} enabled at {sname}"),
                        );
                    } else if row.successors.len() != 1 || row.successors[0].target != self.s_bot {
                        push(
                            ViolationKind::TerminatingAction,
                            format!("{A_BOT} at {sname} does not reach {S_BOT} surely"),
                        );
                    }
                }
                if s == self.s_bot
                    && row.action != self.a_bot
                    && row.action != self.a_top
                    && (row.successors.len() != 1 || row.successors[0].target != self.s_bot)
                {
                    push(
                        ViolationKind::TerminalSelfLoop,
                        format!("{aname} at {S_BOT} is not a self-loop"),
                    );
                }
            }
        }

        // s_top: exactly a_top, matching mu0.
        let top_rows = &self.rows[self.s_top];
        match top_rows.iter().find(|r| r.action == self.a_top) {
            None => push(
                ViolationKind::InitiatingAction,
                format!("{A_TOP} not enabled at {S_TOP}"),
            ),
            Some(row) => {
                let mut expected: BTreeMap<StateId, f64> = BTreeMap::new();
                for &(s, p) in &self.initial {
                    *expected.entry(s).or_default() += p;
                }
                let mut actual: BTreeMap<StateId, f64> = BTreeMap::new();
                for tr in &row.successors {
                    *actual.entry(tr.target).or_default() += tr.prob;
                }
                let keys: BTreeSet<StateId> =
                    expected.keys().chain(actual.keys()).copied().collect();
                for k in keys {
                    let e = expected.get(&k).copied().unwrap_or(0.0);
                    let a = actual.get(&k).copied().unwrap_or(0.0);
                    if (e - a).abs() > PROB_TOLERANCE {
                        push(
                            ViolationKind::InitiatingAction,
                            format!(
                                "P({S_TOP},{A_TOP},{}) = {a} but initial mass is {e}",
                                self.states[k]
                            ),
                        );
                    }
                }
            }
        }
        if top_rows.iter().any(|r| r.action != self.a_top) {
            push(
                ViolationKind::InitiatingAction,
                format!("{S_TOP} enables actions other than {A_TOP}"),
            );
        }

        for s in 0..self.num_states() {
            if self.is_interior(s) && self.row(s, self.a_bot).is_none() {
                push(
                    ViolationKind::TerminatingActionMissing,
                    format!("{A_BOT} not enabled at {}", self.states[s]),
                );
            }
        }

        for &(s, a, t) in &self.dangling_observations {
            push(
                ViolationKind::DanglingObservation,
                format!(
                    "observation given for ({},{},{}) which has no positive probability",
                    self.states[s], self.actions[a], self.states[t]
                ),
            );
        }

        for s in 0..self.num_states() {
            if !self.is_interior(s) && !self.labels[s].is_empty() {
                push(
                    ViolationKind::Label,
                    format!(
                        "{} carries propositions; its marker is implicit",
                        self.states[s]
                    ),
                );
            }
            for p in &self.labels[s] {
                if !self.atomic_props.contains(p) {
                    push(
                        ViolationKind::Label,
                        format!(
                            "{} labelled with undeclared proposition {p}",
                            self.states[s]
                        ),
                    );
                }
            }
        }
        out
    }

    /// Checks that every step of `play` has positive probability and that the
    /// play is framed by `s_top a_top … a_bot s_bot`.
    pub fn check_play(&self, play: &Play) -> Result<()> {
        let st = &play.states;
        let ac = &play.actions;
        if st.len() != ac.len() + 1 || ac.len() < 2 {
            return Err(Error::InvalidPlay(format!(
                "a play needs at least s_top a_top s a_bot s_bot, got {} states and {} actions",
                st.len(),
                ac.len()
            )));
        }
        if st[0] != self.s_top || ac[0] != self.a_top {
            return Err(Error::InvalidPlay(format!(
                "play must begin with {S_TOP} {A_TOP}"
            )));
        }
        if *st.last().unwrap() != self.s_bot || *ac.last().unwrap() != self.a_bot {
            return Err(Error::InvalidPlay(format!(
                "play must end with {A_BOT} {S_BOT}"
            )));
        }
        for i in 0..ac.len() {
            if self.prob(st[i], ac[i], st[i + 1]) <= 0.0 {
                return Err(Error::InvalidPlay(format!(
                    "step {i}: ({},{},{}) has zero probability",
                    self.states[st[i]],
                    self.actions[ac[i]],
                    self.states[st[i + 1]]
                )));
            }
        }
        Ok(())
    }

    /// `⋊ L(s0) … L(sn) ⋉`
    pub fn label_of_play(&self, play: &Play) -> Result<Vec<LabelLetter>> {
        self.check_play(play)?;
        let n = play.states.len();
        let mut word = Vec::with_capacity(n);
        word.push(LabelLetter::Start);
        for &s in &play.states[1..n - 1] {
            word.push(LabelLetter::Props(self.labels[s].clone()));
        }
        word.push(LabelLetter::End);
        Ok(word)
    }

    /// `⋊ Obs(s0,a0,s1) … Obs(s_{n-1},a_{n-1},s_n) ⋉`
    pub fn obs_of_play(&self, play: &Play) -> Result<Vec<ObsId>> {
        self.check_play(play)?;
        let mut out = Vec::with_capacity(play.actions.len());
        for i in 0..play.actions.len() {
            let o = self
                .observation(play.states[i], play.actions[i], play.states[i + 1])
                .ok_or_else(|| {
                    Error::InvalidPlay(format!(
                        "step {i}: ({},{},{}) has no observation",
                        self.states[play.states[i]],
                        self.actions[play.actions[i]],
                        self.states[play.states[i + 1]]
                    ))
                })?;
            out.push(o);
        }
        Ok(out)
    }

    pub fn obs_word_string(&self, word: &[ObsId]) -> String {
        word.iter()
            .map(|&o| self.obs_alphabet[o].to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Interleaved `s_top a_top s0 a0 … sn a_bot s_bot`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Play {
    pub states: Vec<StateId>,
    pub actions: Vec<ActionId>,
}

impl Play {
    /// Parses whitespace-separated alternating state/action names.
    pub fn parse(model: &Model, text: &str) -> Result<Play> {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        Self::from_names(model, &tokens)
    }

    pub fn from_names(model: &Model, tokens: &[&str]) -> Result<Play> {
        if tokens.len().is_multiple_of(2) {
            return Err(Error::InvalidPlay(
                "play must alternate states and actions and end in a state".into(),
            ));
        }
        let mut states = Vec::new();
        let mut actions = Vec::new();
        for (i, tok) in tokens.iter().enumerate() {
            if i % 2 == 0 {
                states.push(model.state_id(tok)?);
            } else {
                actions.push(model.action_id(tok)?);
            }
        }
        Ok(Play { states, actions })
    }

    /// Number of actions between the initial state and `a_bot`.
    pub fn interior_actions(&self) -> usize {
        self.actions.len().saturating_sub(2)
    }
}

/// Incremental constructor for [`Model`]. Name lookups are resolved at
/// [`ModelBuilder::build`]; structural problems are left for
/// [`Model::validate`].
#[derive(Clone, Debug, Default)]
pub struct ModelBuilder {
    states: Vec<String>,
    actions: Vec<String>,
    initial: Vec<(String, f64)>,
    atomic_props: BTreeSet<String>,
    labels: BTreeMap<String, LabelSet>,
    transitions: Vec<(String, String, String, f64)>,
    observations: Vec<(String, String, String, ObsSymbol)>,
    auto_frame: bool,
}

impl ModelBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&mut self, name: impl Into<String>) -> &mut Self {
        let name = name.into();
        if !self.states.contains(&name) {
            self.states.push(name);
        }
        self
    }

    pub fn action(&mut self, name: impl Into<String>) -> &mut Self {
        let name = name.into();
        if !self.actions.contains(&name) {
            self.actions.push(name);
        }
        self
    }

    pub fn initial(&mut self, state: impl Into<String>, prob: f64) -> &mut Self {
        self.initial.push((state.into(), prob));
        self
    }

    pub fn prop(&mut self, name: impl Into<String>) -> &mut Self {
        self.atomic_props.insert(name.into());
        self
    }

    /// Labels `state`; propositions are declared implicitly.
    pub fn label<I, S>(&mut self, state: impl Into<String>, props: I) -> &mut Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let entry = self.labels.entry(state.into()).or_default();
        for p in props {
            let p = p.into();
            self.atomic_props.insert(p.clone());
            entry.insert(p);
        }
        self
    }

    /// Labels `state` without declaring the propositions.
    pub fn raw_label(&mut self, state: impl Into<String>, props: LabelSet) -> &mut Self {
        self.labels.entry(state.into()).or_default().extend(props);
        self
    }

    pub fn transition(
        &mut self,
        from: impl Into<String>,
        action: impl Into<String>,
        to: impl Into<String>,
        prob: f64,
    ) -> &mut Self {
        self.transitions
            .push((from.into(), action.into(), to.into(), prob));
        self
    }

    pub fn observe(
        &mut self,
        from: impl Into<String>,
        action: impl Into<String>,
        to: impl Into<String>,
        obs: ObsSymbol,
    ) -> &mut Self {
        self.observations
            .push((from.into(), action.into(), to.into(), obs));
        self
    }

    /// Injects `s_top`/`s_bot`/`a_top`/`a_bot` and their transitions.
    pub fn auto_frame(&mut self, on: bool) -> &mut Self {
        self.auto_frame = on;
        self
    }

    pub fn build(&self) -> Result<Model> {
        let mut states = self.states.clone();
        let mut actions = self.actions.clone();
        let mut transitions = self.transitions.clone();
        if self.auto_frame {
            if !states.iter().any(|s| s == S_TOP) {
                states.insert(0, S_TOP.to_string());
            }
            if !states.iter().any(|s| s == S_BOT) {
                states.push(S_BOT.to_string());
            }
            if !actions.iter().any(|a| a == A_TOP) {
                actions.insert(0, A_TOP.to_string());
            }
            if !actions.iter().any(|a| a == A_BOT) {
                actions.push(A_BOT.to_string());
            }
            for (s, p) in &self.initial {
                transitions.push((S_TOP.into(), A_TOP.into(), s.clone(), *p));
            }
            for s in &states {
                if s != S_TOP && s != S_BOT {
                    transitions.push((s.clone(), A_BOT.into(), S_BOT.into(), 1.0));
                }
            }
            for a in &actions {
                if a != A_TOP && a != A_BOT {
                    transitions.push((S_BOT.into(), a.clone(), S_BOT.into(), 1.0));
                }
            }
        }
        for special in [S_TOP, S_BOT] {
            if !states.iter().any(|s| s == special) {
                return Err(Error::InvalidModel(format!("missing state `{special}`")));
            }
        }
        for special in [A_TOP, A_BOT] {
            if !actions.iter().any(|a| a == special) {
                return Err(Error::InvalidModel(format!("missing action `{special}`")));
            }
        }
        let state_ids: HashMap<String, StateId> = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        if state_ids.len() != states.len() {
            return Err(Error::InvalidModel("duplicate state names".into()));
        }
        let action_ids: HashMap<String, ActionId> = actions
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        let sid = |n: &str| {
            state_ids
                .get(n)
                .copied()
                .ok_or_else(|| Error::UnknownState(n.to_string()))
        };
        let aid = |n: &str| {
            action_ids
                .get(n)
                .copied()
                .ok_or_else(|| Error::UnknownAction(n.to_string()))
        };
        let s_top = sid(S_TOP)?;
        let s_bot = sid(S_BOT)?;
        let a_top = aid(A_TOP)?;
        let a_bot = aid(A_BOT)?;

        let mut initial_map: BTreeMap<StateId, f64> = BTreeMap::new();
        for (s, p) in &self.initial {
            *initial_map.entry(sid(s)?).or_default() += p;
        }
        let initial: Vec<(StateId, f64)> = initial_map.into_iter().collect();

        // (s, a) -> target -> prob, merging duplicates.
        let mut grouped: BTreeMap<(StateId, ActionId), BTreeMap<StateId, f64>> = BTreeMap::new();
        for (f, a, t, p) in &transitions {
            *grouped
                .entry((sid(f)?, aid(a)?))
                .or_default()
                .entry(sid(t)?)
                .or_default() += p;
        }

        let mut explicit_obs: HashMap<(StateId, ActionId, StateId), ObsSymbol> = HashMap::new();
        let mut dangling = Vec::new();
        for (f, a, t, o) in &self.observations {
            let key = (sid(f)?, aid(a)?, sid(t)?);
            let exists = grouped
                .get(&(key.0, key.1))
                .and_then(|m| m.get(&key.2))
                .is_some_and(|&p| p > 0.0);
            let boundary = key.0 == s_top || key.2 == s_bot;
            if !exists || boundary {
                dangling.push(key);
            } else {
                explicit_obs.insert(key, o.clone());
            }
        }

        let mut alphabet: BTreeSet<ObsSymbol> = BTreeSet::new();
        alphabet.insert(ObsSymbol::Start);
        alphabet.insert(ObsSymbol::End);
        alphabet.extend(explicit_obs.values().cloned());
        let obs_alphabet: Vec<ObsSymbol> = alphabet.into_iter().collect();
        let obs_ids: HashMap<ObsSymbol, ObsId> = obs_alphabet
            .iter()
            .enumerate()
            .map(|(i, o)| (o.clone(), i))
            .collect();

        let mut rows: Vec<Vec<ActionRow>> = vec![Vec::new(); states.len()];
        for ((s, a), succ) in grouped {
            let successors = succ
                .into_iter()
                .map(|(t, prob)| {
                    let obs = if s == s_top {
                        Some(obs_ids[&ObsSymbol::Start])
                    } else if t == s_bot {
                        Some(obs_ids[&ObsSymbol::End])
                    } else {
                        explicit_obs.get(&(s, a, t)).map(|o| obs_ids[o])
                    };
                    Transition {
                        target: t,
                        prob,
                        obs,
                    }
                })
                .collect();
            rows[s].push(ActionRow {
                action: a,
                successors,
            });
        }

        let mut labels = vec![LabelSet::new(); states.len()];
        for (s, props) in &self.labels {
            labels[sid(s)?] = props.clone();
        }

        Ok(Model {
            states,
            state_ids,
            actions,
            action_ids,
            s_top,
            s_bot,
            a_top,
            a_bot,
            initial,
            atomic_props: self.atomic_props.clone(),
            labels,
            rows,
            obs_alphabet,
            obs_ids,
            dangling_observations: dangling,
        })
    }
}
