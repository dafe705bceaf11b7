//! LTL over finite words and its translation to complete DFAs.
//!
//! Formulas are evaluated on suffixes `w, i` with `0 ≤ i ≤ |w|`; a
//! proposition is false beyond the last letter, `X f` needs a next letter,
//! and `F`/`U` quantify over positions inside the word. Hence the empty word
//! satisfies `G f` and `!F f`.
//!
//! Translation is by progression: a DFA state is a formula in a canonical
//! disjunctive normal form over temporal atoms, reading a letter progresses
//! every atom, and a state accepts iff its formula holds on the empty suffix.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use crate::automata::{minimize, Dfa};
use crate::error::{Error, Result};
use crate::model::LabelSet;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Prop(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
}

impl Formula {
    pub fn prop(p: impl Into<String>) -> Self {
        Formula::Prop(p.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn next(f: Formula) -> Self {
        Formula::Next(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Self {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn eventually(f: Formula) -> Self {
        Formula::Eventually(Box::new(f))
    }

    pub fn always(f: Formula) -> Self {
        Formula::Always(Box::new(f))
    }

    pub fn props(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_props(&mut out);
        out
    }

    fn collect_props(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Prop(p) => {
                out.insert(p.clone());
            }
            Formula::Not(f) | Formula::Next(f) | Formula::Eventually(f) | Formula::Always(f) => {
                f.collect_props(out)
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) => {
                a.collect_props(out);
                b.collect_props(out);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Or(..) => 1,
            Formula::And(..) => 2,
            Formula::Until(..) => 3,
            Formula::Not(_) | Formula::Next(_) | Formula::Eventually(_) | Formula::Always(_) => 4,
            Formula::True | Formula::False | Formula::Prop(_) => 5,
        }
    }

    fn write_child(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Prop(p) => write!(f, "{p}"),
            Formula::Not(g) => {
                write!(f, "!")?;
                g.write_child(f, 4)
            }
            Formula::Next(g) => {
                write!(f, "X ")?;
                g.write_child(f, 4)
            }
            Formula::Eventually(g) => {
                write!(f, "F ")?;
                g.write_child(f, 4)
            }
            Formula::Always(g) => {
                write!(f, "G ")?;
                g.write_child(f, 4)
            }
            // & and | associate to the left, U to the right.
            Formula::And(a, b) => {
                a.write_child(f, 2)?;
                write!(f, " & ")?;
                b.write_child(f, 3)
            }
            Formula::Or(a, b) => {
                a.write_child(f, 1)?;
                write!(f, " | ")?;
                b.write_child(f, 2)
            }
            Formula::Until(a, b) => {
                a.write_child(f, 4)?;
                write!(f, " U ")?;
                b.write_child(f, 3)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at token {token} (offset {offset}): {message}")]
pub struct ParseError {
    pub message: String,
    /// 1-based token index.
    pub token: usize,
    /// Byte offset in the input.
    pub offset: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    True,
    False,
    Not,
    And,
    Or,
    Next,
    Until,
    Eventually,
    Always,
    LParen,
    RParen,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(p) => return write!(f, "`{p}`"),
            Tok::True => "`true`",
            Tok::False => "`false`",
            Tok::Not => "`!`",
            Tok::And => "`&`",
            Tok::Or => "`|`",
            Tok::Next => "`X`",
            Tok::Until => "`U`",
            Tok::Eventually => "`F`",
            Tok::Always => "`G`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

fn tokenize(text: &str) -> std::result::Result<Vec<(Tok, usize)>, ParseError> {
    let mut toks = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '!' | '~' => Tok::Not,
            '&' => Tok::And,
            '|' => Tok::Or,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                let word = &text[start..i];
                let tok = match word {
                    "X" => Tok::Next,
                    "U" => Tok::Until,
                    "F" => Tok::Eventually,
                    "G" => Tok::Always,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    _ => Tok::Ident(word.to_string()),
                };
                toks.push((tok, start));
                continue;
            }
            other => {
                return Err(ParseError {
                    message: format!("unexpected character `{other}`"),
                    token: toks.len() + 1,
                    offset: start,
                })
            }
        };
        // `&&` and `||` are accepted as synonyms.
        i += 1;
        if (tok == Tok::And || tok == Tok::Or) && i < bytes.len() && bytes[i] == bytes[start] {
            i += 1;
        }
        toks.push((tok, start));
    }
    toks.push((Tok::Eof, text.len()));
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: String) -> ParseError {
        ParseError {
            message,
            token: self.pos + 1,
            offset: self.toks[self.pos].1,
        }
    }

    fn or(&mut self) -> std::result::Result<Formula, ParseError> {
        let mut left = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let right = self.and()?;
            left = Formula::or(left, right);
        }
        Ok(left)
    }

    fn and(&mut self) -> std::result::Result<Formula, ParseError> {
        let mut left = self.until()?;
        while *self.peek() == Tok::And {
            self.bump();
            let right = self.until()?;
            left = Formula::and(left, right);
        }
        Ok(left)
    }

    fn until(&mut self) -> std::result::Result<Formula, ParseError> {
        let left = self.unary()?;
        if *self.peek() == Tok::Until {
            self.bump();
            let right = self.until()?;
            return Ok(Formula::until(left, right));
        }
        Ok(left)
    }

    fn unary(&mut self) -> std::result::Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Next => {
                self.bump();
                Ok(Formula::next(self.unary()?))
            }
            Tok::Eventually => {
                self.bump();
                Ok(Formula::eventually(self.unary()?))
            }
            Tok::Always => {
                self.bump();
                Ok(Formula::always(self.unary()?))
            }
            Tok::True => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::False => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::Ident(p) => {
                self.bump();
                Ok(Formula::Prop(p))
            }
            Tok::LParen => {
                self.bump();
                let f = self.or()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error(format!("expected `)`, found {}", self.peek())));
                }
                self.bump();
                Ok(f)
            }
            other => Err(self.error(format!("expected a formula, found {other}"))),
        }
    }
}

/// Parses `p | !f | f & f | f '|' f | X f | f U f | F f | G f | true | false`
/// with parentheses. Precedence from loosest: `|`, `&`, `U` (right
/// associative), then the unary operators.
pub fn parse_ltlf(text: &str) -> std::result::Result<Formula, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0 };
    let f = p.or()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(format!("unexpected {}", p.peek())));
    }
    Ok(f)
}

/// Negation normal form. Release and weak next are the duals of until and
/// next.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Nnf {
    True,
    False,
    Lit(String, bool),
    And(Vec<Nnf>),
    Or(Vec<Nnf>),
    Next(Box<Nnf>),
    WeakNext(Box<Nnf>),
    Until(Box<Nnf>, Box<Nnf>),
    Release(Box<Nnf>, Box<Nnf>),
    Eventually(Box<Nnf>),
    Always(Box<Nnf>),
}

impl Nnf {
    fn from_formula(f: &Formula, positive: bool) -> Nnf {
        use Formula as F;
        match (f, positive) {
            (F::True, true) | (F::False, false) => Nnf::True,
            (F::True, false) | (F::False, true) => Nnf::False,
            (F::Prop(p), pos) => Nnf::Lit(p.clone(), pos),
            (F::Not(g), pos) => Nnf::from_formula(g, !pos),
            (F::And(a, b), true) | (F::Or(a, b), false) => and(vec![
                Nnf::from_formula(a, positive),
                Nnf::from_formula(b, positive),
            ]),
            (F::Or(a, b), true) | (F::And(a, b), false) => or(vec![
                Nnf::from_formula(a, positive),
                Nnf::from_formula(b, positive),
            ]),
            (F::Next(g), true) => Nnf::Next(Box::new(Nnf::from_formula(g, true))),
            (F::Next(g), false) => Nnf::WeakNext(Box::new(Nnf::from_formula(g, false))),
            (F::Until(a, b), true) => until(Nnf::from_formula(a, true), Nnf::from_formula(b, true)),
            (F::Until(a, b), false) => {
                release(Nnf::from_formula(a, false), Nnf::from_formula(b, false))
            }
            (F::Eventually(g), true) => eventually(Nnf::from_formula(g, true)),
            (F::Eventually(g), false) => always(Nnf::from_formula(g, false)),
            (F::Always(g), true) => always(Nnf::from_formula(g, true)),
            (F::Always(g), false) => eventually(Nnf::from_formula(g, false)),
        }
    }

    /// Truth value on the empty suffix.
    fn holds_at_end(&self) -> bool {
        match self {
            Nnf::True => true,
            Nnf::False => false,
            Nnf::Lit(_, pos) => !pos,
            Nnf::And(v) => v.iter().all(Nnf::holds_at_end),
            Nnf::Or(v) => v.iter().any(Nnf::holds_at_end),
            Nnf::Next(_) | Nnf::Until(..) | Nnf::Eventually(_) => false,
            Nnf::WeakNext(_) | Nnf::Release(..) | Nnf::Always(_) => true,
        }
    }

    /// Obligation on the rest of the word after reading `letter`.
    fn progress(&self, letter: &LabelSet) -> Nnf {
        match self {
            Nnf::True => Nnf::True,
            Nnf::False => Nnf::False,
            Nnf::Lit(p, pos) => {
                if letter.contains(p) == *pos {
                    Nnf::True
                } else {
                    Nnf::False
                }
            }
            Nnf::And(v) => and(v.iter().map(|g| g.progress(letter)).collect()),
            Nnf::Or(v) => or(v.iter().map(|g| g.progress(letter)).collect()),
            // X f needs another letter: `F true` holds iff the suffix is nonempty.
            Nnf::Next(g) => and(vec![nonempty(), (**g).clone()]),
            Nnf::WeakNext(g) => or(vec![empty(), (**g).clone()]),
            Nnf::Until(a, b) => or(vec![
                b.progress(letter),
                and(vec![a.progress(letter), self.clone()]),
            ]),
            Nnf::Release(a, b) => and(vec![
                b.progress(letter),
                or(vec![a.progress(letter), self.clone()]),
            ]),
            Nnf::Eventually(g) => or(vec![g.progress(letter), self.clone()]),
            Nnf::Always(g) => and(vec![g.progress(letter), self.clone()]),
        }
    }

    fn to_formula(&self) -> Formula {
        match self {
            Nnf::True => Formula::True,
            Nnf::False => Formula::False,
            Nnf::Lit(p, true) => Formula::prop(p.clone()),
            Nnf::Lit(p, false) => Formula::not(Formula::prop(p.clone())),
            Nnf::And(v) => fold(v, Formula::True, Formula::and),
            Nnf::Or(v) => fold(v, Formula::False, Formula::or),
            Nnf::Next(g) => Formula::next(g.to_formula()),
            Nnf::WeakNext(g) => Formula::not(Formula::next(Formula::not(g.to_formula()))),
            Nnf::Until(a, b) => Formula::until(a.to_formula(), b.to_formula()),
            Nnf::Release(a, b) => Formula::not(Formula::until(
                Formula::not(a.to_formula()),
                Formula::not(b.to_formula()),
            )),
            Nnf::Eventually(g) => Formula::eventually(g.to_formula()),
            Nnf::Always(g) => Formula::always(g.to_formula()),
        }
    }
}

fn fold(v: &[Nnf], unit: Formula, op: fn(Formula, Formula) -> Formula) -> Formula {
    let mut it = v.iter().map(Nnf::to_formula);
    match it.next() {
        None => unit,
        Some(first) => it.fold(first, op),
    }
}

fn nonempty() -> Nnf {
    Nnf::Eventually(Box::new(Nnf::True))
}

fn empty() -> Nnf {
    Nnf::Always(Box::new(Nnf::False))
}

fn and(parts: Vec<Nnf>) -> Nnf {
    let mut out = Vec::new();
    for p in parts {
        match p {
            Nnf::True => {}
            Nnf::False => return Nnf::False,
            Nnf::And(v) => out.extend(v),
            other => out.push(other),
        }
    }
    out.sort();
    out.dedup();
    match out.len() {
        0 => Nnf::True,
        1 => out.pop().unwrap(),
        _ => Nnf::And(out),
    }
}

fn or(parts: Vec<Nnf>) -> Nnf {
    let mut out = Vec::new();
    for p in parts {
        match p {
            Nnf::False => {}
            Nnf::True => return Nnf::True,
            Nnf::Or(v) => out.extend(v),
            other => out.push(other),
        }
    }
    out.sort();
    out.dedup();
    match out.len() {
        0 => Nnf::False,
        1 => out.pop().unwrap(),
        _ => Nnf::Or(out),
    }
}

fn until(a: Nnf, b: Nnf) -> Nnf {
    match b {
        Nnf::True => nonempty(),
        Nnf::False => Nnf::False,
        b => Nnf::Until(Box::new(a), Box::new(b)),
    }
}

fn release(a: Nnf, b: Nnf) -> Nnf {
    match b {
        Nnf::True => Nnf::True,
        Nnf::False => empty(),
        b => Nnf::Release(Box::new(a), Box::new(b)),
    }
}

fn eventually(g: Nnf) -> Nnf {
    match g {
        Nnf::False => Nnf::False,
        g => Nnf::Eventually(Box::new(g)),
    }
}

fn always(g: Nnf) -> Nnf {
    match g {
        Nnf::True => Nnf::True,
        g => Nnf::Always(Box::new(g)),
    }
}

/// Disjunction of conjunctions of non-Boolean NNF nodes ("atoms").
type Dnf = BTreeSet<BTreeSet<Nnf>>;

fn to_dnf(f: &Nnf) -> Dnf {
    match f {
        Nnf::True => BTreeSet::from([BTreeSet::new()]),
        Nnf::False => BTreeSet::new(),
        Nnf::Or(v) => simplify(v.iter().flat_map(to_dnf).collect()),
        Nnf::And(v) => {
            let mut acc: Dnf = BTreeSet::from([BTreeSet::new()]);
            for g in v {
                let d = to_dnf(g);
                let mut next = Dnf::new();
                for c1 in &acc {
                    for c2 in &d {
                        next.insert(c1.union(c2).cloned().collect());
                    }
                }
                acc = simplify(next);
            }
            acc
        }
        atom => BTreeSet::from([BTreeSet::from([atom.clone()])]),
    }
}

/// Drops contradictory conjuncts and conjuncts subsumed by smaller ones.
fn simplify(d: Dnf) -> Dnf {
    let ne = nonempty();
    let em = empty();
    let mut conj: Vec<BTreeSet<Nnf>> = d
        .into_iter()
        .filter(|c| {
            let lit_clash = c.iter().any(|a| match a {
                Nnf::Lit(p, true) => c.contains(&Nnf::Lit(p.clone(), false)),
                _ => false,
            });
            !(lit_clash || (c.contains(&ne) && c.contains(&em)))
        })
        .collect();
    conj.sort_by_key(BTreeSet::len);
    let mut out: Vec<BTreeSet<Nnf>> = Vec::new();
    for c in conj {
        if !out.iter().any(|o| o.is_subset(&c)) {
            out.push(c);
        }
    }
    out.into_iter().collect()
}

fn dnf_holds_at_end(d: &Dnf) -> bool {
    d.iter().any(|c| c.iter().all(Nnf::holds_at_end))
}

fn dnf_progress(d: &Dnf, letter: &LabelSet) -> Dnf {
    let disj: Vec<Nnf> = d
        .iter()
        .map(|c| and(c.iter().map(|a| a.progress(letter)).collect()))
        .collect();
    to_dnf(&or(disj))
}

fn dnf_to_formula(d: &Dnf) -> Formula {
    let disj: Vec<Nnf> = d.iter().map(|c| and(c.iter().cloned().collect())).collect();
    or(disj).to_formula()
}

/// Builds the minimal complete DFA of `formula` over `alphabet` (each letter
/// a set of propositions drawn from `atomic_props`). States are named after
/// the normalized formula they stand for.
pub fn ltlf_to_dfa(
    formula: &Formula,
    alphabet: &[LabelSet],
    atomic_props: &BTreeSet<String>,
) -> Result<Dfa<LabelSet>> {
    for p in formula.props() {
        if !atomic_props.contains(&p) {
            return Err(Error::UndeclaredProposition(p));
        }
    }
    for letter in alphabet {
        if let Some(p) = letter.iter().find(|p| !atomic_props.contains(*p)) {
            return Err(Error::InvalidArgument(format!(
                "alphabet letter mentions undeclared proposition `{p}`"
            )));
        }
    }
    let mut dfa = Dfa::new(alphabet.to_vec());
    let start = to_dnf(&Nnf::from_formula(formula, true));
    let mut ids: HashMap<Dnf, usize> = HashMap::new();
    let q0 = dfa.add_state(dnf_to_formula(&start).to_string(), dnf_holds_at_end(&start));
    dfa.set_initial(q0);
    ids.insert(start.clone(), q0);
    let mut queue = VecDeque::from([start]);
    while let Some(d) = queue.pop_front() {
        let from = ids[&d];
        for (l, letter) in alphabet.iter().enumerate() {
            let next = dnf_progress(&d, letter);
            let to = match ids.get(&next) {
                Some(&t) => t,
                None => {
                    let t =
                        dfa.add_state(dnf_to_formula(&next).to_string(), dnf_holds_at_end(&next));
                    ids.insert(next.clone(), t);
                    queue.push_back(next);
                    t
                }
            };
            dfa.set_transition(from, l, to);
        }
    }
    Ok(minimal_named(&dfa))
}

/// Minimizes `dfa`, naming each state of the result after the first state
/// of `dfa` (in breadth-first order) that it absorbs.
fn minimal_named(dfa: &Dfa<LabelSet>) -> Dfa<LabelSet> {
    let min = minimize(dfa);
    if min.num_states() == dfa.num_states() {
        return dfa.clone();
    }
    let mut name: Vec<Option<String>> = vec![None; min.num_states()];
    let mut seen = vec![false; dfa.num_states()];
    let mut queue = VecDeque::from([(dfa.initial(), min.initial())]);
    seen[dfa.initial()] = true;
    while let Some((q, m)) = queue.pop_front() {
        name[m].get_or_insert_with(|| dfa.state_name(q).to_string());
        for l in 0..dfa.alphabet().len() {
            let (t, u) = (dfa.step(q, l).unwrap(), min.step(m, l).unwrap());
            if !std::mem::replace(&mut seen[t], true) {
                queue.push_back((t, u));
            }
        }
    }
    let mut out = Dfa::new(dfa.alphabet().to_vec());
    for (m, n) in name.into_iter().enumerate() {
        out.add_state(n.unwrap_or_else(|| m.to_string()), min.is_accepting(m));
    }
    out.set_initial(min.initial());
    for m in 0..min.num_states() {
        for l in 0..min.alphabet().len() {
            out.set_transition(m, l, min.step(m, l).unwrap());
        }
    }
    out
}

/// All subsets of `props`, in size-then-lexicographic order.
pub fn powerset(props: &BTreeSet<String>) -> Vec<LabelSet> {
    let items: Vec<&String> = props.iter().collect();
    let mut out: Vec<LabelSet> = (0..1usize << items.len())
        .map(|mask| {
            items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, p)| (*p).clone())
                .collect()
        })
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}
