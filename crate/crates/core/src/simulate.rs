//! Monte-Carlo rollouts, play classification and the brute-force opacity
//! oracle.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::automata::Dfa;
use crate::error::{Error, Result};
use crate::model::{LabelSet, Model, ModelBuilder, ObsId, ObsSymbol, Play, StateId};
use crate::planner::{Policy, ProductMdp};

/// Ceiling on the number of plays the oracle may enumerate.
pub const ENUMERATION_BUDGET: f64 = 1e7;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RolloutStats {
    pub runs: usize,
    pub terminated: usize,
    pub opaque: usize,
    pub transparent: usize,
    pub task_satisfied: usize,
    pub horizon_truncated: usize,
    pub ph: f64,
    pub pt: f64,
    pub p_task: f64,
    pub ph_stderr: f64,
    pub pt_stderr: f64,
    pub p_task_stderr: f64,
}

#[derive(Clone, Copy, Default)]
struct Counts {
    terminated: usize,
    opaque: usize,
    transparent: usize,
    task: usize,
    truncated: usize,
}

impl std::ops::Add for Counts {
    type Output = Counts;
    fn add(self, o: Counts) -> Counts {
        Counts {
            terminated: self.terminated + o.terminated,
            opaque: self.opaque + o.opaque,
            transparent: self.transparent + o.transparent,
            task: self.task + o.task,
            truncated: self.truncated + o.truncated,
        }
    }
}

fn stderr(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

impl RolloutStats {
    fn from_counts(runs: usize, c: Counts) -> Self {
        let f = |k: usize| k as f64 / runs as f64;
        let (ph, pt, p_task) = (f(c.opaque), f(c.transparent), f(c.task));
        RolloutStats {
            runs,
            terminated: c.terminated,
            opaque: c.opaque,
            transparent: c.transparent,
            task_satisfied: c.task,
            horizon_truncated: c.truncated,
            ph,
            pt,
            p_task,
            ph_stderr: stderr(ph, runs),
            pt_stderr: stderr(pt, runs),
            p_task_stderr: stderr(p_task, runs),
        }
    }
}

/// Default step limit: ten steps per model state.
pub fn default_horizon(model: &Model) -> usize {
    10 * model.num_states()
}

/// Random stream of one run: the seed selects the key, the run index the
/// stream, so results do not depend on scheduling.
pub fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

fn sample<T: Copy>(
    rng: &mut ChaCha8Rng,
    items: impl Iterator<Item = (T, f64)> + Clone,
) -> Option<T> {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = None;
    for (t, p) in items {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = Some(t);
        if u < acc {
            return last;
        }
    }
    last
}

/// One run; returns the final product state and whether it terminated.
fn run_once(
    pm: &ProductMdp,
    policy: &Policy,
    horizon: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(usize, bool)> {
    let mut v = pm.initial();
    for _ in 0..horizon {
        if pm.is_absorbing(v) {
            return Ok((v, true));
        }
        let dist = policy.actions(v);
        let a = sample(rng, dist.iter().copied()).ok_or_else(|| {
            Error::PolicyMismatch(format!("no action for product state {}", pm.state_name(v)))
        })?;
        let row = pm.rows(v).iter().find(|r| r.action == a).ok_or_else(|| {
            Error::PolicyMismatch(format!(
                "action {} not enabled at {}",
                pm.action_name(a),
                pm.state_name(v)
            ))
        })?;
        v = sample(rng, row.successors.iter().map(|s| (s.to, s.prob))).expect("nonempty row");
    }
    Ok((v, pm.is_absorbing(v)))
}

/// Samples `runs` plays of `policy`. A run stops at termination or after
/// `horizon` steps; truncated runs count as neither opaque nor transparent.
pub fn rollout(
    pm: &ProductMdp,
    policy: &Policy,
    runs: usize,
    seed: u64,
    horizon: usize,
) -> Result<RolloutStats> {
    if runs == 0 {
        return Err(Error::InvalidArgument("runs must be at least 1".into()));
    }
    if horizon < 1 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    if policy.dist.len() != pm.num_states() {
        return Err(Error::PolicyMismatch(format!(
            "policy covers {} states, product has {}",
            policy.dist.len(),
            pm.num_states()
        )));
    }
    let counts = (0..runs)
        .into_par_iter()
        .map(|i| -> Result<Counts> {
            let mut rng = run_rng(seed, i);
            let (v, done) = run_once(pm, policy, horizon, &mut rng)?;
            let mut c = Counts {
                task: pm.task_accepting(v) as usize,
                ..Counts::default()
            };
            if done {
                c.terminated = 1;
                if pm.opaque_accepting(v) {
                    c.opaque = 1;
                } else {
                    c.transparent = 1;
                }
            } else {
                c.truncated = 1;
            }
            Ok(c)
        })
        .try_reduce(Counts::default, |a, b| Ok(a + b))?;
    Ok(RolloutStats::from_counts(runs, counts))
}

/// Like [`rollout`] on a dedicated pool of `threads` workers.
pub fn rollout_with_threads(
    pm: &ProductMdp,
    policy: &Policy,
    runs: usize,
    seed: u64,
    horizon: usize,
    threads: usize,
) -> Result<RolloutStats> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| rollout(pm, policy, runs, seed, horizon))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PlayClass {
    Opaque,
    Transparent,
}

/// A play is opaque iff the opaque DFA accepts its observation.
pub fn classify_play(model: &Model, play: &Play, opaque: &Dfa<ObsSymbol>) -> Result<PlayClass> {
    let word: Vec<ObsSymbol> = model
        .obs_of_play(play)?
        .into_iter()
        .map(|o| model.obs_symbol(o).clone())
        .collect();
    Ok(if opaque.accepts(&word) {
        PlayClass::Opaque
    } else {
        PlayClass::Transparent
    })
}

/// Preimage summary of one observation word.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Bucket {
    pub satisfying: usize,
    pub violating: usize,
}

impl Bucket {
    pub fn is_opaque(&self) -> bool {
        self.satisfying > 0 && self.violating > 0
    }
}

/// Every realizable observation word of plays with at most `max_actions`
/// interior actions, with its preimage counts.
#[derive(Clone, Debug, Default)]
pub struct OracleResult {
    pub buckets: BTreeMap<Vec<ObsId>, Bucket>,
    pub plays: usize,
}

impl OracleResult {
    pub fn opaque_words(&self) -> impl Iterator<Item = &Vec<ObsId>> {
        self.buckets
            .iter()
            .filter(|(_, b)| b.is_opaque())
            .map(|(w, _)| w)
    }

    /// Plays whose observation is opaque, and the remaining plays.
    pub fn partition(&self) -> (usize, usize) {
        let opaque: usize = self
            .buckets
            .values()
            .filter(|b| b.is_opaque())
            .map(|b| b.satisfying + b.violating)
            .sum();
        (opaque, self.plays - opaque)
    }
}

fn check_budget(model: &Model, max_actions: usize) -> Result<()> {
    let branching = (0..model.num_states())
        .filter(|&s| model.is_interior(s))
        .map(|s| {
            model
                .rows(s)
                .iter()
                .filter(|r| r.action != model.a_bot())
                .map(|r| r.successors.len())
                .sum::<usize>()
        })
        .max()
        .unwrap_or(0)
        .max(1);
    let estimate =
        (model.initial().len().max(1) as f64) * (branching as f64).powi(max_actions as i32);
    if estimate > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "about {estimate:.3e} plays with branching {branching} and {max_actions} actions; \
             lower --max-actions so that branching^max_actions ≤ {ENUMERATION_BUDGET:.0e}"
        )));
    }
    Ok(())
}

/// Enumerates plays and buckets them by observation; `satisfies` decides
/// the secret on the label word `L(s0) … L(sn)`.
pub fn brute_force_with<F>(model: &Model, max_actions: usize, satisfies: F) -> Result<OracleResult>
where
    F: Fn(&[&LabelSet]) -> bool,
{
    check_budget(model, max_actions)?;
    let mut out = OracleResult::default();
    let mut labels: Vec<&LabelSet> = Vec::new();
    let mut obs: Vec<ObsId> = vec![model.start_obs()];

    #[allow(clippy::too_many_arguments)]
    fn dfs<'m, F: Fn(&[&LabelSet]) -> bool>(
        model: &'m Model,
        s: StateId,
        depth: usize,
        max_actions: usize,
        labels: &mut Vec<&'m LabelSet>,
        obs: &mut Vec<ObsId>,
        satisfies: &F,
        out: &mut OracleResult,
    ) {
        labels.push(model.label(s));
        for row in model.rows(s) {
            if row.action == model.a_bot() {
                obs.push(model.end_obs());
                let bucket = out.buckets.entry(obs.clone()).or_default();
                if satisfies(labels) {
                    bucket.satisfying += 1;
                } else {
                    bucket.violating += 1;
                }
                out.plays += 1;
                obs.pop();
            } else if depth < max_actions {
                for tr in &row.successors {
                    if tr.prob <= 0.0 {
                        continue;
                    }
                    obs.push(tr.obs.expect("validated model"));
                    dfs(
                        model,
                        tr.target,
                        depth + 1,
                        max_actions,
                        labels,
                        obs,
                        satisfies,
                        out,
                    );
                    obs.pop();
                }
            }
        }
        labels.pop();
    }

    for &(s0, p) in model.initial() {
        if p > 0.0 {
            dfs(
                model,
                s0,
                0,
                max_actions,
                &mut labels,
                &mut obs,
                &satisfies,
                &mut out,
            );
        }
    }
    Ok(out)
}

/// Brute-force opaque observations with the secret given as a DFA
/// over labels.
pub fn brute_force_opaque_obs(
    model: &Model,
    secret: &Dfa<LabelSet>,
    max_actions: usize,
) -> Result<OracleResult> {
    for s in (0..model.num_states()).filter(|&s| model.is_interior(s)) {
        if secret.letter_id(model.label(s)).is_none() {
            return Err(Error::AlphabetMismatch(format!(
                "label of {} is not a letter of the secret DFA",
                model.state_name(s)
            )));
        }
    }
    brute_force_with(model, max_actions, |word| {
        let mut q = secret.initial();
        for l in word {
            q = secret.step_letter(q, l).expect("complete secret DFA");
        }
        secret.is_accepting(q)
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Discrepancy {
    pub word: String,
    pub oracle_opaque: bool,
    pub dfa_opaque: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub max_actions: usize,
    pub plays: usize,
    pub words: usize,
    pub opaque_words: usize,
    pub opaque_plays: usize,
    pub transparent_plays: usize,
    pub discrepancies: Vec<Discrepancy>,
}

/// Compares the opaque DFA with the oracle on every realizable word.
pub fn verify_opaque_dfa(
    model: &Model,
    secret: &Dfa<LabelSet>,
    opaque: &Dfa<ObsSymbol>,
    max_actions: usize,
) -> Result<VerifyReport> {
    let oracle = brute_force_opaque_obs(model, secret, max_actions)?;
    let mut discrepancies = Vec::new();
    for (word, bucket) in &oracle.buckets {
        let symbols: Vec<ObsSymbol> = word.iter().map(|&o| model.obs_symbol(o).clone()).collect();
        let dfa_opaque = opaque.accepts(&symbols);
        if dfa_opaque != bucket.is_opaque() {
            discrepancies.push(Discrepancy {
                word: model.obs_word_string(word),
                oracle_opaque: bucket.is_opaque(),
                dfa_opaque,
            });
        }
    }
    let (opaque_plays, transparent_plays) = oracle.partition();
    Ok(VerifyReport {
        max_actions,
        plays: oracle.plays,
        words: oracle.buckets.len(),
        opaque_words: oracle.opaque_words().count(),
        opaque_plays,
        transparent_plays,
        discrepancies,
    })
}

/// Seeded random model with states `s1..sn`, actions among `a`, `b`,
/// labels equal to state names and a random observation partition.
pub fn random_model(seed: u64, max_states: usize, max_actions: usize) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_states.max(2));
    let k = rng.random_range(1..=max_actions.max(1));
    let names: Vec<String> = (1..=n).map(|i| format!("s{i}")).collect();
    let actions: Vec<String> = ["a", "b", "c", "d"]
        .iter()
        .take(k)
        .map(|s| s.to_string())
        .collect();

    let classes = rng.random_range(1..=n);
    let class: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
    let symbol = |t: usize| {
        let members = (0..n)
            .filter(|&i| class[i] == class[t])
            .map(|i| names[i].clone());
        ObsSymbol::states(members).unwrap()
    };

    let mut b = ModelBuilder::new();
    for s in &names {
        b.state(s.clone()).label(s.clone(), [s.clone()]);
    }
    for a in &actions {
        b.action(a.clone());
    }
    let inits = rng.random_range(1..=2.min(n));
    let mut starts: Vec<usize> = (0..n).collect();
    for i in 0..inits {
        let j = rng.random_range(i..n);
        starts.swap(i, j);
    }
    if inits == 1 {
        b.initial(names[starts[0]].clone(), 1.0);
    } else {
        let p: f64 = rng.random_range(0.2..0.8);
        b.initial(names[starts[0]].clone(), p);
        b.initial(names[starts[1]].clone(), 1.0 - p);
    }
    for s in 0..n {
        for a in &actions {
            let fanout = rng.random_range(1..=3.min(n));
            let mut targets: Vec<usize> = (0..n).collect();
            for i in 0..fanout {
                let j = rng.random_range(i..n);
                targets.swap(i, j);
            }
            let weights: Vec<f64> = (0..fanout)
                .map(|_| -rng.random::<f64>().max(1e-12).ln())
                .collect();
            let total: f64 = weights.iter().sum();
            let mut rest = 1.0;
            for (i, &t) in targets[..fanout].iter().enumerate() {
                let p = if i + 1 == fanout {
                    rest
                } else {
                    weights[i] / total
                };
                rest -= p;
                b.transition(names[s].clone(), a.clone(), names[t].clone(), p);
                b.observe(names[s].clone(), a.clone(), names[t].clone(), symbol(t));
            }
        }
    }
    b.auto_frame(true);
    b.build().expect("random model is well formed")
}
