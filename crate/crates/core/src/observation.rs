//! Predicates and observation partitions over complete runs.

use std::collections::{BTreeSet, HashSet, VecDeque};

use crate::automaton::{ActionId, CoreError, StateId, SubstochasticAutomaton};
use crate::dfa::{TraceDfa, TransitionDfa};

/// Label used for the empty projected word.
pub const EPSILON: &str = "ε";

/// A regular set of runs.
#[derive(Clone, Debug)]
pub struct PredicateSpec {
    pub name: String,
    pub phi: TransitionDfa,
}

impl PredicateSpec {
    pub fn new(name: impl Into<String>, phi: TransitionDfa) -> Self {
        PredicateSpec { name: name.into(), phi }
    }

    pub fn complement(&self) -> PredicateSpec {
        PredicateSpec { name: format!("not {}", self.name), phi: self.phi.complement() }
    }
}

#[derive(Clone, Debug)]
pub struct ObservationClass {
    pub label: String,
    pub dfa: TransitionDfa,
}

/// Labelled regular classes meant to partition the complete runs.
#[derive(Clone, Debug)]
pub struct ObservationSpec {
    pub name: String,
    classes: Vec<ObservationClass>,
}

impl ObservationSpec {
    pub fn new(name: impl Into<String>, classes: Vec<(String, TransitionDfa)>) -> Result<Self, CoreError> {
        let mut seen = HashSet::new();
        for (label, _) in &classes {
            if !seen.insert(label.clone()) {
                return Err(CoreError::DuplicateLabel(label.clone()));
            }
        }
        let classes = classes.into_iter().map(|(label, dfa)| ObservationClass { label, dfa }).collect();
        Ok(ObservationSpec { name: name.into(), classes })
    }

    pub fn classes(&self) -> &[ObservationClass] {
        &self.classes
    }

    pub fn labels(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.label.clone()).collect()
    }
}

/// Formats a projected word as a class label.
pub fn word_label(sa: &SubstochasticAutomaton, word: &[ActionId]) -> String {
    if word.is_empty() {
        EPSILON.to_string()
    } else {
        word.iter().map(|&a| sa.action_name(a)).collect::<Vec<_>>().join(" ")
    }
}

/// One class per distinct projection of a complete-run trace onto `visible`.
pub fn enumerate_projection_observables(
    sa: &SubstochasticAutomaton,
    visible: &[ActionId],
) -> Result<ObservationSpec, CoreError> {
    let reach = sa.reachable();
    let co = sa.coreachable();
    let useful = |q: StateId| reach[q] && co[q];

    // a visible move inside a strongly connected component yields unboundedly many words
    for q in (0..sa.num_states()).filter(|&q| useful(q)) {
        for (a, r, _) in sa.dist(q).moves() {
            if visible.contains(&a) && useful(r) && reaches(sa, r, q, &useful) {
                return Err(CoreError::InfiniteObservables(sa.action_name(a).to_string()));
            }
        }
    }

    let mut words: BTreeSet<(usize, String, Vec<ActionId>)> = BTreeSet::new();
    let mut seen: HashSet<(StateId, Vec<ActionId>)> = HashSet::new();
    let mut queue = VecDeque::new();
    if useful(sa.initial()) {
        seen.insert((sa.initial(), Vec::new()));
        queue.push_back((sa.initial(), Vec::new()));
    }
    while let Some((q, w)) = queue.pop_front() {
        if sa.is_final(q) {
            words.insert((w.len(), word_label(sa, &w), w.clone()));
        }
        for (a, r, _) in sa.dist(q).moves() {
            if !useful(r) {
                continue;
            }
            let mut next = w.clone();
            if visible.contains(&a) {
                next.push(a);
            }
            if seen.insert((r, next.clone())) {
                queue.push_back((r, next));
            }
        }
    }

    let mut classes = Vec::new();
    for (_, label, w) in words {
        let dfa = TraceDfa::projection(sa.num_actions(), visible, &w).lift(sa).expect("alphabet taken from host");
        classes.push((label, dfa));
    }
    let name = format!("project {}", word_label(sa, visible));
    ObservationSpec::new(name, classes)
}

fn reaches(sa: &SubstochasticAutomaton, from: StateId, to: StateId, ok: &dyn Fn(StateId) -> bool) -> bool {
    let mut seen = vec![false; sa.num_states()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(q) = stack.pop() {
        if q == to {
            return true;
        }
        for (_, r, _) in sa.dist(q).moves() {
            if ok(r) && !seen[r] {
                seen[r] = true;
                stack.push(r);
            }
        }
    }
    false
}
