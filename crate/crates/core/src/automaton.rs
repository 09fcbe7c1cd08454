//! Substochastic and fully probabilistic automata, complete runs, and support graphs.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use num::{One, Signed, Zero};
use thiserror::Error;

use crate::dfa::TripleAlphabet;
use crate::prob::{fmt_rational, Probability, Rational};

pub type StateId = usize;
pub type ActionId = usize;

/// A positive-weight move `(src, action, dst)` of some host automaton.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub src: StateId,
    pub action: ActionId,
    pub dst: StateId,
}

impl Triple {
    pub fn new(src: StateId, action: ActionId, dst: StateId) -> Self {
        Triple { src, action, dst }
    }
}

/// Outgoing weights of one state: moves keyed by `(action, successor)` plus termination.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SubDistribution {
    moves: BTreeMap<(ActionId, StateId), Probability>,
    term: Option<Probability>,
}

impl SubDistribution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn moves(&self) -> impl Iterator<Item = (ActionId, StateId, &Probability)> + '_ {
        self.moves.iter().map(|(&(a, s), p)| (a, s, p))
    }

    pub fn weight(&self, action: ActionId, succ: StateId) -> Option<&Probability> {
        self.moves.get(&(action, succ))
    }

    pub fn num_moves(&self) -> usize {
        self.moves.len()
    }

    pub fn term(&self) -> Probability {
        self.term.clone().unwrap_or_else(Probability::zero)
    }

    pub fn terminates(&self) -> bool {
        self.term.is_some()
    }

    /// Total mass of moves and termination.
    pub fn mass(&self) -> Rational {
        let moves: Rational = self.moves.values().map(|p| p.value().clone()).sum();
        moves + self.term().into_value()
    }

    /// Adds `w` to the move `(action, succ)`; zero weights are ignored.
    pub(crate) fn accumulate(&mut self, action: ActionId, succ: StateId, w: &Rational) {
        if w.is_zero() {
            return;
        }
        let entry = self.moves.entry((action, succ)).or_insert_with(Probability::zero);
        *entry = Probability::new(entry.value() + w).expect("accumulated weight exceeds 1");
    }

    pub(crate) fn accumulate_term(&mut self, w: &Rational) {
        if w.is_zero() {
            return;
        }
        let cur = self.term();
        self.term = Some(Probability::new(cur.value() + w).expect("termination weight exceeds 1"));
    }
}

/// Unvalidated automaton description with string identifiers.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawAutomaton {
    pub alphabet: Vec<String>,
    pub states: Vec<String>,
    pub initial: String,
    pub transitions: Vec<RawTransition>,
    pub terminations: Vec<(String, Rational)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawTransition {
    pub from: String,
    pub action: String,
    pub to: String,
    pub weight: Rational,
}

impl RawAutomaton {
    pub fn new(initial: &str) -> Self {
        let mut raw = RawAutomaton { initial: initial.to_string(), ..Default::default() };
        raw.declare_state(initial);
        raw
    }

    pub fn declare_state(&mut self, s: &str) {
        if !self.states.iter().any(|x| x == s) {
            self.states.push(s.to_string());
        }
    }

    pub fn declare_action(&mut self, a: &str) {
        if !self.alphabet.iter().any(|x| x == a) {
            self.alphabet.push(a.to_string());
        }
    }

    /// Adds a transition, declaring unseen states and actions in order of appearance.
    pub fn trans(&mut self, from: &str, action: &str, to: &str, weight: Rational) -> &mut Self {
        self.declare_state(from);
        self.declare_action(action);
        self.declare_state(to);
        self.transitions.push(RawTransition {
            from: from.to_string(),
            action: action.to_string(),
            to: to.to_string(),
            weight,
        });
        self
    }

    pub fn term(&mut self, state: &str, weight: Rational) -> &mut Self {
        self.declare_state(state);
        self.terminations.push((state.to_string(), weight));
        self
    }
}

/// One problem found by [`validate_sa`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    DuplicateState(String),
    DuplicateAction(String),
    UnknownInitial(String),
    UnknownState(String),
    UnknownAction(String),
    NonPositiveWeight { state: String, what: String },
    WeightAboveOne { state: String, what: String },
    DuplicateMove { state: String, what: String },
    SumExceedsOne { state: String, sum: Rational },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateState(s) => write!(f, "state `{s}` declared twice"),
            Violation::DuplicateAction(a) => write!(f, "action `{a}` declared twice"),
            Violation::UnknownInitial(s) => write!(f, "initial state `{s}` is not declared"),
            Violation::UnknownState(s) => write!(f, "undeclared state `{s}`"),
            Violation::UnknownAction(a) => write!(f, "undeclared action `{a}`"),
            Violation::NonPositiveWeight { state, what } => {
                write!(f, "state `{state}`: non-positive weight on {what}")
            }
            Violation::WeightAboveOne { state, what } => {
                write!(f, "state `{state}`: weight above 1 on {what}")
            }
            Violation::DuplicateMove { state, what } => {
                write!(f, "state `{state}`: {what} given more than once")
            }
            Violation::SumExceedsOne { state, sum } => {
                write!(f, "state `{state}`: weights sum to {} > 1", fmt_rational(sum))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CoreError {
    #[error("malformed automaton: {}", join_violations(.0))]
    Malformed(Vec<Violation>),
    #[error("state `{state}` is not stochastic: mass {}", fmt_rational(.mass))]
    NotStochastic { state: String, mass: Rational },
    #[error("no terminating state is reachable from `{0}`")]
    DeadState(String),
    #[error("not a run: {0}")]
    NotARun(String),
    #[error("infinitely many observables: visible action `{0}` lies on a cycle")]
    InfiniteObservables(String),
    #[error("duplicate observation label `{0}`")]
    DuplicateLabel(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// A validated substochastic automaton with interned identifiers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubstochasticAutomaton {
    alphabet: Vec<String>,
    states: Vec<String>,
    delta: Vec<SubDistribution>,
    initial: StateId,
}

impl SubstochasticAutomaton {
    /// Assembles an automaton whose invariants the caller guarantees.
    pub(crate) fn from_parts(
        alphabet: Vec<String>,
        states: Vec<String>,
        delta: Vec<SubDistribution>,
        initial: StateId,
    ) -> Self {
        debug_assert_eq!(states.len(), delta.len());
        debug_assert!(delta.iter().all(|d| d.mass() <= Rational::one()));
        SubstochasticAutomaton { alphabet, states, delta, initial }
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.alphabet.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn state_name(&self, q: StateId) -> &str {
        &self.states[q]
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        &self.alphabet[a]
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name)
    }

    pub fn action_id(&self, name: &str) -> Option<ActionId> {
        self.alphabet.iter().position(|s| s == name)
    }

    pub fn dist(&self, q: StateId) -> &SubDistribution {
        &self.delta[q]
    }

    pub fn is_final(&self, q: StateId) -> bool {
        self.delta[q].terminates()
    }

    /// All positive-weight moves, ordered by source, action, then successor.
    pub fn support_triples(&self) -> Vec<Triple> {
        let mut out = Vec::new();
        for (q, d) in self.delta.iter().enumerate() {
            for (a, r, _) in d.moves() {
                out.push(Triple::new(q, a, r));
            }
        }
        out
    }

    pub fn triple_alphabet(&self) -> Arc<TripleAlphabet> {
        Arc::new(TripleAlphabet::new(self.support_triples()))
    }

    /// Forward reachability from the initial state over positive moves.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_states()];
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial] = true;
        while let Some(q) = queue.pop_front() {
            for (_, r, _) in self.delta[q].moves() {
                if !seen[r] {
                    seen[r] = true;
                    queue.push_back(r);
                }
            }
        }
        seen
    }

    /// States from which some terminating state is reachable.
    pub fn coreachable(&self) -> Vec<bool> {
        let n = self.num_states();
        let mut preds: Vec<Vec<StateId>> = vec![Vec::new(); n];
        for (q, d) in self.delta.iter().enumerate() {
            for (_, r, _) in d.moves() {
                preds[r].push(q);
            }
        }
        let mut seen: Vec<bool> = (0..n).map(|q| self.is_final(q)).collect();
        let mut queue: VecDeque<StateId> = (0..n).filter(|&q| seen[q]).collect();
        while let Some(q) = queue.pop_front() {
            for &p in &preds[q] {
                if !seen[p] {
                    seen[p] = true;
                    queue.push_back(p);
                }
            }
        }
        seen
    }

    /// True when the reachable support graph has no cycle.
    pub fn is_acyclic(&self) -> bool {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut mark = vec![0u8; self.num_states()];
        let mut stack: Vec<(StateId, Vec<StateId>)> = Vec::new();
        let succs = |q: StateId| -> Vec<StateId> {
            let set: BTreeSet<StateId> = self.delta[q].moves().map(|(_, r, _)| r).collect();
            set.into_iter().rev().collect()
        };
        mark[self.initial] = 1;
        stack.push((self.initial, succs(self.initial)));
        while let Some((q, pending)) = stack.last_mut() {
            match pending.pop() {
                Some(r) => match mark[r] {
                    1 => return false,
                    0 => {
                        mark[r] = 1;
                        let next = succs(r);
                        stack.push((r, next));
                    }
                    _ => {}
                },
                None => {
                    mark[*q] = 2;
                    stack.pop();
                }
            }
        }
        true
    }
}

/// Checks a raw description and interns it.
pub fn validate_sa(raw: &RawAutomaton) -> Result<SubstochasticAutomaton, CoreError> {
    let mut violations = Vec::new();
    let mut state_ix: HashMap<&str, StateId> = HashMap::new();
    for s in &raw.states {
        if state_ix.insert(s.as_str(), state_ix.len()).is_some() {
            violations.push(Violation::DuplicateState(s.clone()));
        }
    }
    let mut action_ix: HashMap<&str, ActionId> = HashMap::new();
    for a in &raw.alphabet {
        if action_ix.insert(a.as_str(), action_ix.len()).is_some() {
            violations.push(Violation::DuplicateAction(a.clone()));
        }
    }
    let states: Vec<String> = unique(&raw.states);
    let alphabet: Vec<String> = unique(&raw.alphabet);
    let initial = match state_ix.get(raw.initial.as_str()) {
        Some(&q) => q,
        None => {
            violations.push(Violation::UnknownInitial(raw.initial.clone()));
            0
        }
    };

    let one = Rational::one();
    let mut delta = vec![SubDistribution::new(); states.len()];
    for t in &raw.transitions {
        let what = format!("{} -{}-> {}", t.from, t.action, t.to);
        let src = state_ix.get(t.from.as_str()).copied();
        let dst = state_ix.get(t.to.as_str()).copied();
        let act = action_ix.get(t.action.as_str()).copied();
        if src.is_none() {
            violations.push(Violation::UnknownState(t.from.clone()));
        }
        if dst.is_none() {
            violations.push(Violation::UnknownState(t.to.clone()));
        }
        if act.is_none() {
            violations.push(Violation::UnknownAction(t.action.clone()));
        }
        if !t.weight.is_positive() {
            violations.push(Violation::NonPositiveWeight { state: t.from.clone(), what });
            continue;
        }
        if t.weight > one {
            violations.push(Violation::WeightAboveOne { state: t.from.clone(), what });
            continue;
        }
        if let (Some(q), Some(a), Some(r)) = (src, act, dst) {
            if delta[q].weight(a, r).is_some() {
                violations.push(Violation::DuplicateMove { state: t.from.clone(), what });
                continue;
            }
            delta[q].moves.insert((a, r), Probability::new(t.weight.clone()).expect("checked range"));
        }
    }
    for (s, w) in &raw.terminations {
        let what = "termination".to_string();
        let Some(&q) = state_ix.get(s.as_str()) else {
            violations.push(Violation::UnknownState(s.clone()));
            continue;
        };
        if w.is_negative() {
            violations.push(Violation::NonPositiveWeight { state: s.clone(), what });
            continue;
        }
        if *w > one {
            violations.push(Violation::WeightAboveOne { state: s.clone(), what });
            continue;
        }
        if delta[q].term.is_some() {
            violations.push(Violation::DuplicateMove { state: s.clone(), what });
            continue;
        }
        if !w.is_zero() {
            delta[q].term = Some(Probability::new(w.clone()).expect("checked range"));
        }
    }
    for (q, d) in delta.iter().enumerate() {
        let sum = d.mass();
        if sum > one {
            violations.push(Violation::SumExceedsOne { state: states[q].clone(), sum });
        }
    }
    if violations.is_empty() {
        Ok(SubstochasticAutomaton { alphabet, states, delta, initial })
    } else {
        Err(CoreError::Malformed(violations))
    }
}

fn unique(items: &[String]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    items.iter().filter(|s| seen.insert(s.as_str())).cloned().collect()
}

/// An automaton whose every state is stochastic and can terminate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fpfa(SubstochasticAutomaton);

impl Fpfa {
    pub fn as_sa(&self) -> &SubstochasticAutomaton {
        &self.0
    }

    pub fn into_sa(self) -> SubstochasticAutomaton {
        self.0
    }
}

impl Deref for Fpfa {
    type Target = SubstochasticAutomaton;

    fn deref(&self) -> &SubstochasticAutomaton {
        &self.0
    }
}

pub fn validate_fpfa(sa: SubstochasticAutomaton) -> Result<Fpfa, CoreError> {
    for q in 0..sa.num_states() {
        let mass = sa.dist(q).mass();
        if !mass.is_one() {
            return Err(CoreError::NotStochastic { state: sa.state_name(q).to_string(), mass });
        }
    }
    let co = sa.coreachable();
    if let Some(q) = co.iter().position(|&ok| !ok) {
        return Err(CoreError::DeadState(sa.state_name(q).to_string()));
    }
    Ok(Fpfa(sa))
}

/// A run that ends with termination: the start state followed by `(action, successor)` steps.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CompleteRun {
    start: StateId,
    steps: Vec<(ActionId, StateId)>,
}

impl CompleteRun {
    pub fn new(start: StateId) -> Self {
        CompleteRun { start, steps: Vec::new() }
    }

    pub fn from_steps(start: StateId, steps: Vec<(ActionId, StateId)>) -> Self {
        CompleteRun { start, steps }
    }

    pub fn push(&mut self, action: ActionId, succ: StateId) {
        self.steps.push((action, succ));
    }

    pub fn start(&self) -> StateId {
        self.start
    }

    pub fn steps(&self) -> &[(ActionId, StateId)] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last_state(&self) -> StateId {
        self.steps.last().map_or(self.start, |&(_, s)| s)
    }

    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        let sources = std::iter::once(self.start).chain(self.steps.iter().map(|&(_, s)| s));
        sources.zip(self.steps.iter()).map(|(src, &(a, dst))| Triple::new(src, a, dst))
    }

    pub fn trace(&self) -> Vec<ActionId> {
        self.steps.iter().map(|&(a, _)| a).collect()
    }

    pub fn display(&self, sa: &SubstochasticAutomaton) -> String {
        let mut out = sa.state_name(self.start).to_string();
        for &(a, s) in &self.steps {
            out.push_str(&format!(" -{}-> {}", sa.action_name(a), sa.state_name(s)));
        }
        out.push_str(" √");
        out
    }
}

/// Product of step weights times the final termination weight.
pub fn run_probability(sa: &SubstochasticAutomaton, run: &CompleteRun) -> Result<Probability, CoreError> {
    if run.start() != sa.initial() {
        return Err(CoreError::NotARun("does not start at the initial state".into()));
    }
    let mut p = Rational::one();
    for t in run.triples() {
        if t.src >= sa.num_states() || t.dst >= sa.num_states() || t.action >= sa.num_actions() {
            return Err(CoreError::NotARun(format!("unknown identifier in step {t:?}")));
        }
        match sa.dist(t.src).weight(t.action, t.dst) {
            Some(w) => p *= w.value(),
            None => {
                return Err(CoreError::NotARun(format!(
                    "no move {} -{}-> {}",
                    sa.state_name(t.src),
                    sa.action_name(t.action),
                    sa.state_name(t.dst)
                )))
            }
        }
    }
    let last = run.last_state();
    if !sa.is_final(last) {
        return Err(CoreError::NotARun(format!("state `{}` cannot terminate", sa.state_name(last))));
    }
    p *= sa.dist(last).term().value();
    Ok(Probability::new(p).expect("product of probabilities"))
}

/// The underlying nondeterministic automaton of an SA.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nfa {
    pub num_states: usize,
    pub initial: StateId,
    pub transitions: Vec<Triple>,
    pub finals: BTreeSet<StateId>,
}

impl Nfa {
    pub fn accepts(&self, word: &[ActionId]) -> bool {
        let mut current: BTreeSet<StateId> = BTreeSet::from([self.initial]);
        for &a in word {
            current = self
                .transitions
                .iter()
                .filter(|t| t.action == a && current.contains(&t.src))
                .map(|t| t.dst)
                .collect();
            if current.is_empty() {
                return false;
            }
        }
        current.iter().any(|q| self.finals.contains(q))
    }
}

pub fn un_prob(sa: &SubstochasticAutomaton) -> Nfa {
    Nfa {
        num_states: sa.num_states(),
        initial: sa.initial(),
        transitions: sa.support_triples(),
        finals: (0..sa.num_states()).filter(|&q| sa.is_final(q)).collect(),
    }
}
