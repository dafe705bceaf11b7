//! Finite automata over an explicit, indexed alphabet.
//!
//! Letters are any ordered hashable type; automata store transitions over
//! letter indices. Deterministic automata keep a dense transition table,
//! nondeterministic ones a sorted arc list per state, since output NFAs can
//! have many states over a large observation alphabet.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::{Debug, Display, Write as _};
use std::hash::Hash;

use crate::error::{Error, Result};

pub trait Letter: Clone + Ord + Hash + Debug {}
impl<T: Clone + Ord + Hash + Debug> Letter for T {}

const NONE: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dfa<L: Letter> {
    alphabet: Vec<L>,
    letter_ids: HashMap<L, usize>,
    names: Vec<String>,
    /// `delta[q * alphabet.len() + letter]`, `NONE` when undefined.
    delta: Vec<u32>,
    initial: usize,
    accepting: Vec<bool>,
}

impl<L: Letter> Dfa<L> {
    /// A DFA with no states; add the initial state first.
    pub fn new(alphabet: Vec<L>) -> Self {
        let letter_ids = alphabet
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, l)| (l, i))
            .collect();
        Dfa {
            alphabet,
            letter_ids,
            names: Vec::new(),
            delta: Vec::new(),
            initial: 0,
            accepting: Vec::new(),
        }
    }

    pub fn add_state(&mut self, name: impl Into<String>, accepting: bool) -> usize {
        self.names.push(name.into());
        self.accepting.push(accepting);
        self.delta
            .extend(std::iter::repeat_n(NONE, self.alphabet.len()));
        self.names.len() - 1
    }

    pub fn set_initial(&mut self, q: usize) {
        self.initial = q;
    }

    pub fn set_accepting(&mut self, q: usize, accepting: bool) {
        self.accepting[q] = accepting;
    }

    pub fn set_transition(&mut self, from: usize, letter: usize, to: usize) {
        let k = self.alphabet.len();
        self.delta[from * k + letter] = to as u32;
    }

    pub fn alphabet(&self) -> &[L] {
        &self.alphabet
    }

    pub fn letter_id(&self, l: &L) -> Option<usize> {
        self.letter_ids.get(l).copied()
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn state_name(&self, q: usize) -> &str {
        &self.names[q]
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting[q]
    }

    pub fn accepting_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_states()).filter(|&q| self.accepting[q])
    }

    pub fn step(&self, q: usize, letter: usize) -> Option<usize> {
        let t = self.delta[q * self.alphabet.len() + letter];
        (t != NONE).then_some(t as usize)
    }

    pub fn step_letter(&self, q: usize, letter: &L) -> Option<usize> {
        self.step(q, self.letter_id(letter)?)
    }

    pub fn run_ids(&self, word: &[usize]) -> Option<usize> {
        word.iter().try_fold(self.initial, |q, &l| self.step(q, l))
    }

    pub fn accepts_ids(&self, word: &[usize]) -> bool {
        self.run_ids(word).is_some_and(|q| self.accepting[q])
    }

    pub fn accepts(&self, word: &[L]) -> bool {
        let mut q = self.initial;
        for l in word {
            match self.step_letter(q, l) {
                Some(n) => q = n,
                None => return false,
            }
        }
        self.accepting[q]
    }

    pub fn is_complete(&self) -> bool {
        !self.delta.contains(&NONE)
    }

    /// Complements the accepting set. Only meaningful on complete DFAs.
    pub fn complement(&self) -> Result<Self> {
        if !self.is_complete() {
            return Err(Error::IncompleteDfa(
                "complement requires a complete DFA".into(),
            ));
        }
        let mut out = self.clone();
        for a in &mut out.accepting {
            *a = !*a;
        }
        Ok(out)
    }

    pub fn to_nfa(&self) -> Nfa<L> {
        let mut nfa = Nfa::new(self.alphabet.clone());
        for q in 0..self.num_states() {
            nfa.add_state(self.names[q].clone(), self.accepting[q]);
        }
        for q in 0..self.num_states() {
            for l in 0..self.alphabet.len() {
                if let Some(t) = self.step(q, l) {
                    nfa.add_transition(q, l, t);
                }
            }
        }
        nfa.add_initial(self.initial);
        nfa
    }

    /// Same DFA with states renamed by their index.
    pub fn with_index_names(mut self) -> Self {
        for (i, n) in self.names.iter_mut().enumerate() {
            *n = i.to_string();
        }
        self
    }

    /// True when no accepting state is reachable.
    pub fn is_empty_language(&self) -> bool {
        let reach = self.reachable();
        !reach
            .iter()
            .enumerate()
            .any(|(q, &r)| r && self.accepting[q])
    }

    fn reachable(&self) -> Vec<bool> {
        let n = self.num_states();
        let mut seen = vec![false; n];
        if n == 0 {
            return seen;
        }
        let mut stack = vec![self.initial];
        seen[self.initial] = true;
        while let Some(q) = stack.pop() {
            for l in 0..self.alphabet.len() {
                if let Some(t) = self.step(q, l) {
                    if !seen[t] {
                        seen[t] = true;
                        stack.push(t);
                    }
                }
            }
        }
        seen
    }

    /// Translates `self` onto another alphabet containing all of its letters.
    /// Letters absent from `self` get no transitions.
    pub fn reindex(&self, alphabet: &[L]) -> Result<Self> {
        let mut out = Dfa::new(alphabet.to_vec());
        let map: Vec<usize> = self
            .alphabet
            .iter()
            .map(|l| {
                out.letter_id(l).ok_or_else(|| {
                    Error::AlphabetMismatch(format!("letter {l:?} missing from target alphabet"))
                })
            })
            .collect::<Result<_>>()?;
        for q in 0..self.num_states() {
            out.add_state(self.names[q].clone(), self.accepting[q]);
        }
        for q in 0..self.num_states() {
            for (l, &nl) in map.iter().enumerate() {
                if let Some(t) = self.step(q, l) {
                    out.set_transition(q, nl, t);
                }
            }
        }
        out.set_initial(self.initial);
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nfa<L: Letter> {
    alphabet: Vec<L>,
    letter_ids: HashMap<L, usize>,
    names: Vec<String>,
    /// Per state: `(letter, target)` pairs, kept sorted and deduplicated.
    arcs: Vec<Vec<(u32, u32)>>,
    initial: Vec<usize>,
    accepting: Vec<bool>,
}

impl<L: Letter> Nfa<L> {
    pub fn new(alphabet: Vec<L>) -> Self {
        let letter_ids = alphabet
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, l)| (l, i))
            .collect();
        Nfa {
            alphabet,
            letter_ids,
            names: Vec::new(),
            arcs: Vec::new(),
            initial: Vec::new(),
            accepting: Vec::new(),
        }
    }

    pub fn add_state(&mut self, name: impl Into<String>, accepting: bool) -> usize {
        self.names.push(name.into());
        self.accepting.push(accepting);
        self.arcs.push(Vec::new());
        self.names.len() - 1
    }

    pub fn add_initial(&mut self, q: usize) {
        if !self.initial.contains(&q) {
            self.initial.push(q);
            self.initial.sort_unstable();
        }
    }

    pub fn add_transition(&mut self, from: usize, letter: usize, to: usize) {
        let arcs = &mut self.arcs[from];
        let arc = (letter as u32, to as u32);
        if let Err(pos) = arcs.binary_search(&arc) {
            arcs.insert(pos, arc);
        }
    }

    pub fn alphabet(&self) -> &[L] {
        &self.alphabet
    }

    pub fn letter_id(&self, l: &L) -> Option<usize> {
        self.letter_ids.get(l).copied()
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.arcs.iter().map(Vec::len).sum()
    }

    pub fn state_name(&self, q: usize) -> &str {
        &self.names[q]
    }

    pub fn initial(&self) -> &[usize] {
        &self.initial
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting[q]
    }

    pub fn arcs(&self, q: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.arcs[q].iter().map(|&(l, t)| (l as usize, t as usize))
    }

    pub fn successors(&self, q: usize, letter: usize) -> impl Iterator<Item = usize> + '_ {
        let arcs = &self.arcs[q];
        let start = arcs.partition_point(|&(l, _)| (l as usize) < letter);
        arcs[start..]
            .iter()
            .take_while(move |&&(l, _)| l as usize == letter)
            .map(|&(_, t)| t as usize)
    }

    pub fn accepts_ids(&self, word: &[usize]) -> bool {
        let mut current: BTreeSet<usize> = self.initial.iter().copied().collect();
        for &l in word {
            current = current
                .iter()
                .flat_map(|&q| self.successors(q, l))
                .collect();
            if current.is_empty() {
                return false;
            }
        }
        current.iter().any(|&q| self.accepting[q])
    }

    pub fn accepts(&self, word: &[L]) -> bool {
        let ids: Option<Vec<usize>> = word.iter().map(|l| self.letter_id(l)).collect();
        ids.is_some_and(|ids| self.accepts_ids(&ids))
    }

    /// Removes states that are unreachable or cannot reach an accepting state.
    pub fn trim(&self) -> Self {
        let n = self.num_states();
        let mut fwd = vec![false; n];
        let mut stack: Vec<usize> = self.initial.clone();
        for &q in &stack {
            fwd[q] = true;
        }
        while let Some(q) = stack.pop() {
            for (_, t) in self.arcs(q) {
                if !fwd[t] {
                    fwd[t] = true;
                    stack.push(t);
                }
            }
        }
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
        for q in 0..n {
            for (_, t) in self.arcs(q) {
                rev[t].push(q);
            }
        }
        let mut bwd = vec![false; n];
        let mut stack: Vec<usize> = (0..n).filter(|&q| self.accepting[q]).collect();
        for &q in &stack {
            bwd[q] = true;
        }
        while let Some(q) = stack.pop() {
            for &p in &rev[q] {
                if !bwd[p] {
                    bwd[p] = true;
                    stack.push(p);
                }
            }
        }
        let keep: Vec<bool> = (0..n).map(|q| fwd[q] && bwd[q]).collect();
        let mut map = vec![usize::MAX; n];
        let mut out = Nfa::new(self.alphabet.clone());
        for q in 0..n {
            if keep[q] {
                map[q] = out.add_state(self.names[q].clone(), self.accepting[q]);
            }
        }
        for q in 0..n {
            if !keep[q] {
                continue;
            }
            out.arcs[map[q]] = self
                .arcs(q)
                .filter(|&(_, t)| keep[t])
                .map(|(l, t)| (l as u32, map[t] as u32))
                .collect();
        }
        for &q in &self.initial {
            if keep[q] {
                out.add_initial(map[q]);
            }
        }
        out
    }
}

fn letter_map<L: Letter>(from: &[L], to: &HashMap<L, usize>) -> Result<Vec<usize>> {
    if from.len() != to.len() {
        return Err(Error::AlphabetMismatch(format!(
            "alphabets have {} and {} letters",
            from.len(),
            to.len()
        )));
    }
    from.iter()
        .map(|l| {
            to.get(l)
                .copied()
                .ok_or_else(|| Error::AlphabetMismatch(format!("letter {l:?} not shared")))
        })
        .collect()
}

/// Adds a non-accepting sink named `sink_label` when some transition is
/// undefined; returns the DFA unchanged otherwise.
pub fn complete<L: Letter>(dfa: &Dfa<L>, sink_label: &str) -> Dfa<L> {
    if dfa.is_complete() && dfa.num_states() > 0 {
        return dfa.clone();
    }
    let mut out = dfa.clone();
    let sink = out.add_state(sink_label, false);
    if dfa.num_states() == 0 {
        out.set_initial(sink);
    }
    for t in out.delta.iter_mut() {
        if *t == NONE {
            *t = sink as u32;
        }
    }
    out
}

/// Subset construction over reachable subsets. Subsets are numbered in
/// breadth-first order, exploring letters by index, so numbering is
/// reproducible.
pub fn determinize<L: Letter>(nfa: &Nfa<L>) -> Dfa<L> {
    let k = nfa.alphabet.len();
    let mut dfa = Dfa::new(nfa.alphabet.clone());
    let mut ids: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut queue: VecDeque<Vec<u32>> = VecDeque::new();

    let start: Vec<u32> = nfa.initial.iter().map(|&q| q as u32).collect();
    let accepting = |set: &[u32]| set.iter().any(|&q| nfa.accepting[q as usize]);
    let q0 = dfa.add_state(subset_name(&start), accepting(&start));
    dfa.set_initial(q0);
    ids.insert(start.clone(), q0);
    queue.push_back(start);

    let mut buf: Vec<(u32, u32)> = Vec::new();
    while let Some(set) = queue.pop_front() {
        let from = ids[&set];
        buf.clear();
        for &q in &set {
            buf.extend_from_slice(&nfa.arcs[q as usize]);
        }
        buf.sort_unstable();
        buf.dedup();
        let mut i = 0;
        while i < buf.len() {
            let letter = buf[i].0;
            let mut j = i;
            let mut target = Vec::new();
            while j < buf.len() && buf[j].0 == letter {
                target.push(buf[j].1);
                j += 1;
            }
            let to = match ids.get(&target) {
                Some(&t) => t,
                None => {
                    let t = dfa.add_state(subset_name(&target), accepting(&target));
                    ids.insert(target.clone(), t);
                    queue.push_back(target);
                    t
                }
            };
            dfa.delta[from * k + letter as usize] = to as u32;
            i = j;
        }
    }
    dfa
}

fn subset_name(set: &[u32]) -> String {
    let mut s = String::from("{");
    for (i, q) in set.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(s, "{q}");
    }
    s.push('}');
    s
}

/// Synchronous product accepting `L(a) ∩ L(b)`, over reachable pairs.
pub fn intersect<L: Letter>(a: &Nfa<L>, b: &Nfa<L>) -> Result<Nfa<L>> {
    let map = letter_map(&b.alphabet, &a.letter_ids)?;
    let mut out = Nfa::new(a.alphabet.clone());
    let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut queue = VecDeque::new();
    for &x in &a.initial {
        for &y in &b.initial {
            let id = out.add_state(
                format!("({},{})", a.names[x], b.names[y]),
                a.accepting[x] && b.accepting[y],
            );
            ids.insert((x, y), id);
            out.add_initial(id);
            queue.push_back((x, y));
        }
    }
    // b's arcs re-expressed over a's letter ids, sorted.
    let b_arcs: Vec<Vec<(u32, u32)>> = b
        .arcs
        .iter()
        .map(|arcs| {
            let mut v: Vec<(u32, u32)> = arcs
                .iter()
                .map(|&(l, t)| (map[l as usize] as u32, t))
                .collect();
            v.sort_unstable();
            v
        })
        .collect();
    while let Some((x, y)) = queue.pop_front() {
        let from = ids[&(x, y)];
        let xa = &a.arcs[x];
        let ya = &b_arcs[y];
        let (mut i, mut j) = (0, 0);
        let mut new_arcs = Vec::new();
        while i < xa.len() && j < ya.len() {
            let (li, lj) = (xa[i].0, ya[j].0);
            if li < lj {
                i += 1;
            } else if lj < li {
                j += 1;
            } else {
                let ie = i + xa[i..].iter().take_while(|e| e.0 == li).count();
                let je = j + ya[j..].iter().take_while(|e| e.0 == lj).count();
                for &(_, tx) in &xa[i..ie] {
                    for &(_, ty) in &ya[j..je] {
                        let key = (tx as usize, ty as usize);
                        let to = match ids.get(&key) {
                            Some(&t) => t,
                            None => {
                                let t = out.add_state(
                                    format!("({},{})", a.names[key.0], b.names[key.1]),
                                    a.accepting[key.0] && b.accepting[key.1],
                                );
                                ids.insert(key, t);
                                queue.push_back(key);
                                t
                            }
                        };
                        new_arcs.push((li, to as u32));
                    }
                }
                i = ie;
                j = je;
            }
        }
        new_arcs.sort_unstable();
        new_arcs.dedup();
        out.arcs[from] = new_arcs;
    }
    Ok(out)
}

/// Product of two DFAs over the same alphabet, accepting where both accept.
pub fn dfa_intersect<L: Letter>(a: &Dfa<L>, b: &Dfa<L>) -> Result<Dfa<L>> {
    let map = letter_map(&a.alphabet, &b.letter_ids)?;
    let k = a.alphabet.len();
    let mut out = Dfa::new(a.alphabet.clone());
    let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut queue = VecDeque::new();
    let start = (a.initial, b.initial);
    let id = out.add_state(
        format!("({},{})", a.names[start.0], b.names[start.1]),
        a.accepting[start.0] && b.accepting[start.1],
    );
    out.set_initial(id);
    ids.insert(start, id);
    queue.push_back(start);
    while let Some((x, y)) = queue.pop_front() {
        let from = ids[&(x, y)];
        for (l, &bl) in map.iter().enumerate().take(k) {
            let (Some(tx), Some(ty)) = (a.step(x, l), b.step(y, bl)) else {
                continue;
            };
            let to = match ids.get(&(tx, ty)) {
                Some(&t) => t,
                None => {
                    let t = out.add_state(
                        format!("({},{})", a.names[tx], b.names[ty]),
                        a.accepting[tx] && b.accepting[ty],
                    );
                    ids.insert((tx, ty), t);
                    queue.push_back((tx, ty));
                    t
                }
            };
            out.set_transition(from, l, to);
        }
    }
    Ok(out)
}

/// Hopcroft minimization. Incomplete input is completed first and
/// unreachable states are dropped; states of the result are numbered in
/// breadth-first order from the initial state and named by index.
pub fn minimize<L: Letter>(dfa: &Dfa<L>) -> Dfa<L> {
    let dfa = complete(dfa, "sink");
    let k = dfa.alphabet.len();
    let reach = dfa.reachable();
    let live: Vec<usize> = (0..dfa.num_states()).filter(|&q| reach[q]).collect();
    let n = dfa.num_states();

    // Inverse transitions restricted to reachable states.
    let mut inv: Vec<Vec<Vec<u32>>> = vec![vec![Vec::new(); n]; k];
    for &q in &live {
        for (l, inv_l) in inv.iter_mut().enumerate() {
            let t = dfa.delta[q * k + l] as usize;
            inv_l[t].push(q as u32);
        }
    }

    // Partition refinement with block ids per state.
    let mut block_of = vec![usize::MAX; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let acc: Vec<usize> = live.iter().copied().filter(|&q| dfa.accepting[q]).collect();
    let rej: Vec<usize> = live
        .iter()
        .copied()
        .filter(|&q| !dfa.accepting[q])
        .collect();
    for part in [acc, rej] {
        if !part.is_empty() {
            let b = blocks.len();
            for &q in &part {
                block_of[q] = b;
            }
            blocks.push(part);
        }
    }
    let mut work: VecDeque<(usize, usize)> = VecDeque::new();
    let mut in_work: HashMap<(usize, usize), ()> = HashMap::new();
    if blocks.len() == 2 {
        let smaller = if blocks[0].len() <= blocks[1].len() {
            0
        } else {
            1
        };
        for l in 0..k {
            work.push_back((smaller, l));
            in_work.insert((smaller, l), ());
        }
    }
    let mut mark = vec![false; n];
    while let Some((splitter, l)) = work.pop_front() {
        in_work.remove(&(splitter, l));
        // States with an l-transition into the splitter block.
        let mut touched: Vec<usize> = Vec::new();
        let mut pre: Vec<usize> = Vec::new();
        for &t in &blocks[splitter] {
            for &p in &inv[l][t] {
                let p = p as usize;
                if !mark[p] {
                    mark[p] = true;
                    pre.push(p);
                    touched.push(block_of[p]);
                }
            }
        }
        touched.sort_unstable();
        touched.dedup();
        for b in touched {
            let (inside, outside): (Vec<usize>, Vec<usize>) =
                blocks[b].iter().partition(|&&q| mark[q]);
            if outside.is_empty() {
                continue;
            }
            let nb = blocks.len();
            let (keep, moved) = if inside.len() <= outside.len() {
                (outside, inside)
            } else {
                (inside, outside)
            };
            for &q in &moved {
                block_of[q] = nb;
            }
            blocks[b] = keep;
            blocks.push(moved);
            // `moved` is the smaller half, so it is the right splitter
            // whether or not (b, ll) is still pending.
            for ll in 0..k {
                if in_work.insert((nb, ll), ()).is_none() {
                    work.push_back((nb, ll));
                }
            }
        }
        for p in pre {
            mark[p] = false;
        }
    }

    // Renumber blocks breadth-first from the initial block.
    let mut order = vec![usize::MAX; blocks.len()];
    let mut out = Dfa::new(dfa.alphabet.clone());
    let b0 = block_of[dfa.initial];
    order[b0] = out.add_state("0", dfa.accepting[dfa.initial]);
    out.set_initial(order[b0]);
    let mut queue = VecDeque::from([b0]);
    while let Some(b) = queue.pop_front() {
        let rep = blocks[b][0];
        for l in 0..k {
            let t = dfa.delta[rep * k + l] as usize;
            let tb = block_of[t];
            if order[tb] == usize::MAX {
                let id = out.num_states();
                order[tb] = out.add_state(id.to_string(), dfa.accepting[t]);
                queue.push_back(tb);
            }
            out.set_transition(order[b], l, order[tb]);
        }
    }
    out
}

/// Graphviz rendering of a DFA.
pub fn dfa_to_dot<L: Letter>(dfa: &Dfa<L>, fmt_letter: impl Fn(&L) -> String) -> String {
    let mut s = String::from("digraph dfa {\n  rankdir=LR;\n  __start [shape=point];\n");
    for q in 0..dfa.num_states() {
        let shape = if dfa.accepting[q] {
            "doublecircle"
        } else {
            "circle"
        };
        let _ = writeln!(
            s,
            "  q{q} [label=\"{}\", shape={shape}];",
            escape(&dfa.names[q])
        );
    }
    let _ = writeln!(s, "  __start -> q{};", dfa.initial);
    for q in 0..dfa.num_states() {
        for l in 0..dfa.alphabet.len() {
            if let Some(t) = dfa.step(q, l) {
                let _ = writeln!(
                    s,
                    "  q{q} -> q{t} [label=\"{}\"];",
                    escape(fmt_letter(&dfa.alphabet[l]))
                );
            }
        }
    }
    s.push_str("}\n");
    s
}

/// Graphviz rendering of an NFA.
pub fn nfa_to_dot<L: Letter>(nfa: &Nfa<L>, fmt_letter: impl Fn(&L) -> String) -> String {
    let mut s = String::from("digraph nfa {\n  rankdir=LR;\n");
    for q in 0..nfa.num_states() {
        let shape = if nfa.accepting[q] {
            "doublecircle"
        } else {
            "circle"
        };
        let _ = writeln!(
            s,
            "  q{q} [label=\"{}\", shape={shape}];",
            escape(&nfa.names[q])
        );
    }
    for &q in &nfa.initial {
        let _ = writeln!(s, "  __start{q} [shape=point];\n  __start{q} -> q{q};");
    }
    for q in 0..nfa.num_states() {
        for (l, t) in nfa.arcs(q) {
            let _ = writeln!(
                s,
                "  q{q} -> q{t} [label=\"{}\"];",
                escape(fmt_letter(&nfa.alphabet[l]))
            );
        }
    }
    s.push_str("}\n");
    s
}

pub(crate) fn escape(s: impl Display) -> String {
    s.to_string().replace('\\', "\\\\").replace('"', "\\\"")
}
