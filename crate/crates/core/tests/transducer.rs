mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{enumerate_plays, holds, label_word, random_formula, seeded};
use opaque_planner::automata::{determinize, Dfa};
use opaque_planner::ltlf::{ltlf_to_dfa, parse_ltlf, Formula};
use opaque_planner::model::{LabelSet, Model, ObsId, ObsSymbol, Play};
use opaque_planner::scenarios::running_example;
use opaque_planner::simulate::random_model;
use opaque_planner::transducer::{
    build_obs_fst, opaque_obs_dfa, output_nfa, product_fst, IntersectionOrder, OutputSide,
};

fn secret(m: &Model, f: &Formula) -> Dfa<LabelSet> {
    ltlf_to_dfa(f, &m.label_alphabet(), m.atomic_props()).unwrap()
}

fn obs(m: &Model, text: &str) -> Vec<ObsSymbol> {
    text.split_whitespace()
        .map(|t| match t {
            "<" => ObsSymbol::Start,
            ">" => ObsSymbol::End,
            t => ObsSymbol::states(t.split(',')).unwrap(),
        })
        .inspect(|s| assert!(m.obs_id(s).is_some(), "{s} not realized"))
        .collect()
}

/// Observation words of every terminated play with at most `max_steps`
/// actions, with the number of secret-satisfying and violating preimages.
fn oracle(m: &Model, f: &Formula, max_steps: usize) -> BTreeMap<Vec<ObsId>, (usize, usize)> {
    let mut out: BTreeMap<Vec<ObsId>, (usize, usize)> = BTreeMap::new();
    let all = |_: &[usize], avail: &[usize]| avail.iter().map(|&a| (a, 1.0)).collect();
    for p in enumerate_plays(m, max_steps, 0.0, &all) {
        let play = Play {
            states: p.states.clone(),
            actions: p.actions.clone(),
        };
        let word = m.obs_of_play(&play).unwrap();
        let e = out.entry(word).or_default();
        if holds(f, &label_word(m, &p.states), 0) {
            e.0 += 1;
        } else {
            e.1 += 1;
        }
    }
    out
}

fn symbols(m: &Model, w: &[ObsId]) -> Vec<ObsSymbol> {
    w.iter().map(|&o| m.obs_symbol(o).clone()).collect()
}

#[test]
fn running_example_product_fst_arcs() {
    let m = running_example();
    let sec = secret(&m, &parse_ltlf("F s6").unwrap());
    let fst = build_obs_fst(&m).unwrap();
    let pf = product_fst(&m, &fst, &sec).unwrap();
    let id = |n: &str| m.state_id(n).unwrap();
    let q1 = sec.initial();
    let q2 = sec.step_letter(q1, m.label(id("s6"))).unwrap();
    assert!(sec.is_accepting(q2) && !sec.is_accepting(q1));

    let arc = |from: (usize, usize), input: (usize, usize, usize), to: (usize, usize)| {
        let i = pf.state_id(from.0, from.1).expect("source state");
        let j = pf.state_id(to.0, to.1).expect("target state");
        let letter = fst.input_id(input).unwrap();
        let a = pf.arcs(i).iter().find(|a| a.input == letter).expect("arc");
        assert_eq!(a.to, j);
        m.obs_symbol(a.output).clone()
    };
    assert_eq!(
        arc(
            (m.s_top(), q1),
            (m.s_top(), m.a_top(), id("s1")),
            (id("s1"), q1)
        ),
        ObsSymbol::Start
    );
    let b = m.action_id("b").unwrap();
    assert_eq!(
        arc((id("s3"), q1), (id("s3"), b, id("s6")), (id("s6"), q2)),
        ObsSymbol::states(["s5", "s6"]).unwrap()
    );
    assert_eq!(
        arc(
            (id("s6"), q2),
            (id("s6"), m.a_bot(), m.s_bot()),
            (m.s_bot(), q2)
        ),
        ObsSymbol::End
    );
    assert!(pf.is_satisfying(pf.state_id(m.s_bot(), q2).unwrap()));
}

#[test]
fn running_example_membership_matches_oracle() {
    let m = running_example();
    let f = parse_ltlf("F s6").unwrap();
    let op = opaque_obs_dfa(&m, &secret(&m, &f), IntersectionOrder::NfaProduct).unwrap();
    let table = oracle(&m, &f, 6);
    let yes = obs(&m, "< s2,s3 s5,s6 >");
    let no = obs(&m, "< s2,s3 s4 >");
    let bucket = |w: &[ObsSymbol]| {
        let ids: Vec<ObsId> = w.iter().map(|s| m.obs_id(s).unwrap()).collect();
        table[&ids]
    };
    let (sat, viol) = bucket(&yes);
    assert!(sat > 0 && viol > 0);
    let (sat, _) = bucket(&no);
    assert_eq!(sat, 0);
    assert!(op.dfa.accepts(&yes));
    assert!(!op.dfa.accepts(&no));
}

#[test]
fn opaque_dfa_agrees_with_enumeration() {
    let mut models = vec![(running_example(), parse_ltlf("F s6").unwrap())];
    let mut rng = seeded(21);
    for seed in 0..12 {
        let m = random_model(seed, 5, 2);
        let names: Vec<String> = m.atomic_props().iter().cloned().collect();
        let props: Vec<&str> = names.iter().map(String::as_str).collect();
        models.push((m, random_formula(&mut rng, &props, 3)));
    }
    for (m, f) in &models {
        let op = opaque_obs_dfa(m, &secret(m, f), IntersectionOrder::NfaProduct).unwrap();
        for (w, (sat, viol)) in oracle(m, f, 6) {
            let opaque = sat > 0 && viol > 0;
            assert_eq!(
                op.dfa.accepts(&symbols(m, &w)),
                opaque,
                "{f}: {}",
                m.obs_word_string(&w)
            );
        }
    }
}

#[test]
fn intersection_orders_agree() {
    let mut rng = seeded(3);
    for seed in 0..15 {
        let m = if seed == 0 {
            running_example()
        } else {
            random_model(seed, 6, 2)
        };
        let names: Vec<String> = m.atomic_props().iter().cloned().collect();
        let props: Vec<&str> = names.iter().map(String::as_str).collect();
        let f = if seed == 0 {
            parse_ltlf("F s6").unwrap()
        } else {
            random_formula(&mut rng, &props, 3)
        };
        let s = secret(&m, &f);
        let a = opaque_obs_dfa(&m, &s, IntersectionOrder::NfaProduct).unwrap();
        let b = opaque_obs_dfa(&m, &s, IntersectionOrder::DfaProduct).unwrap();
        assert_eq!(a.dfa.num_states(), b.dfa.num_states(), "{f}");
        for (w, _) in oracle(&m, &Formula::True, 6) {
            let w = symbols(&m, &w);
            assert_eq!(a.dfa.accepts(&w), b.dfa.accepts(&w));
        }
    }
}

/// Accepted words of length at most `max` of a possibly partial DFA.
fn accepted_words<L: opaque_planner::automata::Letter>(
    d: &Dfa<L>,
    max: usize,
) -> BTreeSet<Vec<usize>> {
    fn go<L: opaque_planner::automata::Letter>(
        d: &Dfa<L>,
        q: usize,
        w: &mut Vec<usize>,
        max: usize,
        out: &mut BTreeSet<Vec<usize>>,
    ) {
        if d.is_accepting(q) {
            out.insert(w.clone());
        }
        if w.len() == max {
            return;
        }
        for l in 0..d.alphabet().len() {
            if let Some(t) = d.step(q, l) {
                w.push(l);
                go(d, t, w, max, out);
                w.pop();
            }
        }
    }
    let mut out = BTreeSet::new();
    if d.num_states() > 0 {
        go(d, d.initial(), &mut Vec::new(), max, &mut out);
    }
    out
}

#[test]
fn output_languages_cover_realizable_observations() {
    let m = running_example();
    let f = parse_ltlf("F s6").unwrap();
    let pf = product_fst(&m, &build_obs_fst(&m).unwrap(), &secret(&m, &f)).unwrap();
    let sat = accepted_words(&determinize(&output_nfa(&pf, OutputSide::Satisfying)), 8);
    let viol = accepted_words(&determinize(&output_nfa(&pf, OutputSide::Violating)), 8);
    let table = oracle(&m, &f, 8);
    let realizable: BTreeSet<Vec<usize>> = table.keys().cloned().collect();
    let union: BTreeSet<Vec<usize>> = sat.union(&viol).cloned().collect();
    assert_eq!(union, realizable);
    for (w, (s, v)) in &table {
        assert_eq!(sat.contains(w), *s > 0);
        assert_eq!(viol.contains(w), *v > 0);
    }
}

#[test]
fn product_run_ends_in_secret_verdict() {
    let mut rng = seeded(8);
    for seed in 0..10 {
        let m = if seed == 0 {
            running_example()
        } else {
            random_model(seed, 5, 2)
        };
        let names: Vec<String> = m.atomic_props().iter().cloned().collect();
        let props: Vec<&str> = names.iter().map(String::as_str).collect();
        let f = random_formula(&mut rng, &props, 3);
        let fst = build_obs_fst(&m).unwrap();
        let pf = product_fst(&m, &fst, &secret(&m, &f)).unwrap();
        let all = |_: &[usize], avail: &[usize]| avail.iter().map(|&a| (a, 1.0)).collect();
        for p in enumerate_plays(&m, 6, 0.0, &all) {
            let play = Play {
                states: p.states.clone(),
                actions: p.actions.clone(),
            };
            let path = pf.run(&fst.input_word(&play).unwrap()).unwrap();
            let end = *path.last().unwrap();
            assert_eq!(pf.state(end).0, m.s_bot());
            let truth = holds(&f, &label_word(&m, &p.states), 0);
            assert_eq!(pf.is_satisfying(end), truth, "{f}");
            assert_eq!(pf.is_violating(end), !truth);
        }
    }
}

#[test]
fn true_secret_gives_empty_language() {
    let m = running_example();
    let op = opaque_obs_dfa(
        &m,
        &secret(&m, &Formula::True),
        IntersectionOrder::NfaProduct,
    )
    .unwrap();
    assert!(op.dfa.is_empty_language());
}

#[test]
fn obs_fst_reproduces_observation_function() {
    let m = running_example();
    let fst = build_obs_fst(&m).unwrap();
    let all = |_: &[usize], avail: &[usize]| avail.iter().map(|&a| (a, 1.0)).collect();
    for p in enumerate_plays(&m, 6, 0.0, &all) {
        let play = Play {
            states: p.states.clone(),
            actions: p.actions.clone(),
        };
        let (end, out) = fst.run(&fst.input_word(&play).unwrap()).unwrap();
        assert_eq!(end, m.s_bot());
        assert_eq!(out, m.obs_of_play(&play).unwrap());
    }
}
