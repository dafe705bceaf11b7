//! Oracles shared by the integration and acceptance tests.
//!
//! Everything here is written against definitions rather than against the
//! crate's algorithms: formulas are evaluated recursively on words, and
//! probabilities of small models are computed by enumerating plays.

#![allow(dead_code)]

use std::collections::BTreeSet;

use opaque_planner::automata::Dfa;
use opaque_planner::ltlf::Formula;
use opaque_planner::model::{LabelSet, Model};
use opaque_planner::planner::{Policy, ProductMdp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Truth of `f` on the suffix of `w` starting at `i` (`0 ≤ i ≤ |w|`).
/// `X` is the strong next: position `i + 1` must exist in the word.
pub fn holds(f: &Formula, w: &[LabelSet], i: usize) -> bool {
    let n = w.len();
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Prop(p) => i < n && w[i].contains(p),
        Formula::Not(g) => !holds(g, w, i),
        Formula::And(a, b) => holds(a, w, i) && holds(b, w, i),
        Formula::Or(a, b) => holds(a, w, i) || holds(b, w, i),
        Formula::Next(g) => i + 1 < n && holds(g, w, i + 1),
        Formula::Eventually(g) => (i..n).any(|j| holds(g, w, j)),
        Formula::Always(g) => (i..n).all(|j| holds(g, w, j)),
        Formula::Until(a, b) => (i..n).any(|j| holds(b, w, j) && (i..j).all(|k| holds(a, w, k))),
    }
}

pub fn satisfies(f: &Formula, w: &[LabelSet]) -> bool {
    holds(f, w, 0)
}

/// Calls `visit` on every word over `alphabet` of length at most `max_len`,
/// in depth-first order, together with the DFA state reached on it.
pub fn for_each_word<L: opaque_planner::automata::Letter>(
    dfa: &Dfa<L>,
    max_len: usize,
    visit: &mut dyn FnMut(&[usize], usize),
) {
    fn go<L: opaque_planner::automata::Letter>(
        dfa: &Dfa<L>,
        word: &mut Vec<usize>,
        q: usize,
        max_len: usize,
        visit: &mut dyn FnMut(&[usize], usize),
    ) {
        visit(word, q);
        if word.len() == max_len {
            return;
        }
        for l in 0..dfa.alphabet().len() {
            let t = dfa.step(q, l).expect("complete DFA");
            word.push(l);
            go(dfa, word, t, max_len, visit);
            word.pop();
        }
    }
    go(dfa, &mut Vec::new(), dfa.initial(), max_len, visit);
}

/// Random formula of at most `depth` nested operators over `props`.
pub fn random_formula(rng: &mut ChaCha8Rng, props: &[&str], depth: usize) -> Formula {
    let leaf = |rng: &mut ChaCha8Rng| match rng.random_range(0..10) {
        0 => Formula::True,
        1 => Formula::False,
        _ => Formula::prop(props[rng.random_range(0..props.len())]),
    };
    if depth == 0 || rng.random_bool(0.2) {
        return leaf(rng);
    }
    let sub = |rng: &mut ChaCha8Rng| Box::new(random_formula(rng, props, depth - 1));
    match rng.random_range(0..7) {
        0 => Formula::Not(sub(rng)),
        1 => Formula::And(sub(rng), sub(rng)),
        2 => Formula::Or(sub(rng), sub(rng)),
        3 => Formula::Next(sub(rng)),
        4 => Formula::Until(sub(rng), sub(rng)),
        5 => Formula::Eventually(sub(rng)),
        _ => Formula::Always(sub(rng)),
    }
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// All subsets of `props`.
pub fn subsets(props: &[&str]) -> Vec<LabelSet> {
    (0..1u32 << props.len())
        .map(|mask| {
            props
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, p)| p.to_string())
                .collect()
        })
        .collect()
}

/// A framed play as a state/action sequence, with its probability under a
/// memoryless policy over model states.
#[derive(Clone, Debug)]
pub struct WeightedPlay {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
    pub prob: f64,
}

/// Enumerates terminated plays whose probability is at least `cutoff`,
/// choosing actions by `policy(history_states, available_actions)`.
pub fn enumerate_plays(
    model: &Model,
    max_steps: usize,
    cutoff: f64,
    policy: &dyn Fn(&[usize], &[usize]) -> Vec<(usize, f64)>,
) -> Vec<WeightedPlay> {
    let mut out = Vec::new();
    let mut stack = vec![WeightedPlay {
        states: vec![model.s_top()],
        actions: vec![],
        prob: 1.0,
    }];
    while let Some(p) = stack.pop() {
        let s = *p.states.last().unwrap();
        if s == model.s_bot() {
            out.push(p);
            continue;
        }
        if p.actions.len() >= max_steps || p.prob < cutoff {
            continue;
        }
        let available: Vec<usize> = model.rows(s).iter().map(|r| r.action).collect();
        for (a, pa) in policy(&p.states, &available) {
            if pa <= 0.0 {
                continue;
            }
            let row = model.row(s, a).unwrap();
            for tr in &row.successors {
                let mut q = p.clone();
                q.states.push(tr.target);
                q.actions.push(a);
                q.prob *= pa * tr.prob;
                stack.push(q);
            }
        }
    }
    out
}

/// Interior labels of a framed play, as read by task and secret automata.
pub fn label_word(model: &Model, states: &[usize]) -> Vec<LabelSet> {
    states
        .iter()
        .filter(|&&s| model.is_interior(s))
        .map(|&s| model.label(s).clone())
        .collect()
}

pub fn props_of(model: &Model) -> BTreeSet<String> {
    model.atomic_props().clone()
}

/// Exact `(PH, PT, P_task, unterminated)` of a policy, by propagating the
/// state distribution of the induced chain for `steps` steps.
pub fn evaluate(pm: &ProductMdp, policy: &Policy, steps: usize) -> (f64, f64, f64, f64) {
    let mut mass = vec![0.0; pm.num_states()];
    mass[pm.initial()] = 1.0;
    let (mut ph, mut pt, mut task) = (0.0, 0.0, 0.0);
    for _ in 0..steps {
        let mut next = vec![0.0; pm.num_states()];
        for v in 0..pm.num_states() {
            if mass[v] == 0.0 || pm.is_absorbing(v) {
                continue;
            }
            for &(a, pa) in policy.actions(v) {
                let row = pm.rows(v).iter().find(|r| r.action == a).unwrap();
                for s in &row.successors {
                    let w = mass[v] * pa * s.prob;
                    if s.task {
                        task += w;
                    }
                    if pm.is_absorbing(s.to) {
                        if pm.opaque_accepting(s.to) {
                            ph += w;
                        } else {
                            pt += w;
                        }
                    } else {
                        next[s.to] += w;
                    }
                }
            }
        }
        mass = next;
    }
    (ph, pt, task, mass.iter().sum())
}
