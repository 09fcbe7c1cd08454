//! Complete deterministic automata over actions and over transition triples.

use std::collections::{HashMap, VecDeque};
use std::hash::Hash;
use std::sync::Arc;

use thiserror::Error;

use crate::automaton::{ActionId, StateId, SubstochasticAutomaton, Triple};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DfaError {
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("transition table is not complete: {0}")]
    Incomplete(String),
}

/// The support triples of a host automaton, indexed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripleAlphabet {
    triples: Vec<Triple>,
    index: HashMap<Triple, usize>,
}

impl TripleAlphabet {
    pub fn new(triples: Vec<Triple>) -> Self {
        let index = triples.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        TripleAlphabet { triples, index }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn get(&self, t: &Triple) -> Option<usize> {
        self.index.get(t).copied()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    fn same_as(&self, other: &TripleAlphabet) -> bool {
        self.triples == other.triples
    }
}

/// Reachable-part restriction followed by Moore partition refinement.
fn minimize_table(delta: &[Vec<usize>], initial: usize, accepting: &[bool]) -> (Vec<Vec<usize>>, usize, Vec<bool>) {
    let width = delta.first().map_or(0, |r| r.len());
    let mut order = vec![initial];
    let mut pos = HashMap::from([(initial, 0usize)]);
    let mut i = 0;
    while i < order.len() {
        for &s in &delta[order[i]] {
            if !pos.contains_key(&s) {
                pos.insert(s, order.len());
                order.push(s);
            }
        }
        i += 1;
    }
    let n = order.len();
    let local: Vec<Vec<usize>> = order.iter().map(|&s| delta[s].iter().map(|t| pos[t]).collect()).collect();
    let acc: Vec<bool> = order.iter().map(|&s| accepting[s]).collect();

    let mut class: Vec<usize> = acc.iter().map(|&a| usize::from(a)).collect();
    let mut count = {
        let mut c = class.clone();
        c.sort_unstable();
        c.dedup();
        c.len()
    };
    loop {
        let mut sigs: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
        let mut next = vec![0; n];
        for s in 0..n {
            let sig = (class[s], local[s].iter().map(|&t| class[t]).collect::<Vec<_>>());
            let fresh = sigs.len();
            next[s] = *sigs.entry(sig).or_insert(fresh);
        }
        let new_count = sigs.len();
        class = next;
        if new_count == count {
            break;
        }
        count = new_count;
    }
    // renumber classes in BFS order so the initial state is 0
    let mut renum: HashMap<usize, usize> = HashMap::new();
    for &c in &class {
        let fresh = renum.len();
        renum.entry(c).or_insert(fresh);
    }
    let m = renum.len();
    let mut out = vec![vec![0; width]; m];
    let mut out_acc = vec![false; m];
    for s in 0..n {
        let c = renum[&class[s]];
        out[c] = local[s].iter().map(|&t| renum[&class[t]]).collect();
        out_acc[c] = acc[s];
    }
    (out, 0, out_acc)
}

fn check_table(delta: &[Vec<usize>], width: usize, initial: usize, accepting: &[bool]) -> Result<(), DfaError> {
    let n = delta.len();
    if n == 0 || initial >= n || accepting.len() != n {
        return Err(DfaError::Incomplete("state set, initial state and acceptance disagree".into()));
    }
    for (s, row) in delta.iter().enumerate() {
        if row.len() != width {
            return Err(DfaError::Incomplete(format!("state {s} has {} entries, expected {width}", row.len())));
        }
        if let Some(&t) = row.iter().find(|&&t| t >= n) {
            return Err(DfaError::Incomplete(format!("state {s} targets unknown state {t}")));
        }
    }
    Ok(())
}

/// A complete DFA over an action alphabet `0..num_actions`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceDfa {
    num_actions: usize,
    delta: Vec<Vec<usize>>,
    initial: usize,
    accepting: Vec<bool>,
}

impl TraceDfa {
    pub fn new(num_actions: usize, delta: Vec<Vec<usize>>, initial: usize, accepting: Vec<bool>) -> Result<Self, DfaError> {
        check_table(&delta, num_actions, initial, &accepting)?;
        Ok(TraceDfa { num_actions, delta, initial, accepting })
    }

    /// Accepts every word.
    pub fn universal(num_actions: usize) -> Self {
        TraceDfa { num_actions, delta: vec![vec![0; num_actions]], initial: 0, accepting: vec![true] }
    }

    /// Accepts words whose restriction to `visible` equals `word`.
    pub fn projection(num_actions: usize, visible: &[ActionId], word: &[ActionId]) -> Self {
        let sink = word.len() + 1;
        let mut delta = vec![vec![0; num_actions]; word.len() + 2];
        for (i, row) in delta.iter_mut().enumerate() {
            for (a, cell) in row.iter_mut().enumerate() {
                *cell = if i == sink {
                    sink
                } else if !visible.contains(&a) {
                    i
                } else if i < word.len() && word[i] == a {
                    i + 1
                } else {
                    sink
                };
            }
        }
        let accepting = (0..=sink).map(|i| i == word.len()).collect();
        TraceDfa { num_actions, delta, initial: 0, accepting }
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn is_accepting(&self, s: usize) -> bool {
        self.accepting[s]
    }

    pub fn step(&self, s: usize, a: ActionId) -> usize {
        self.delta[s][a]
    }

    pub fn accepts(&self, word: &[ActionId]) -> bool {
        let end = word.iter().fold(self.initial, |s, &a| self.delta[s][a]);
        self.accepting[end]
    }

    pub fn complement(&self) -> Self {
        let mut out = self.clone();
        out.accepting.iter_mut().for_each(|a| *a = !*a);
        out
    }

    pub fn minimize(&self) -> Self {
        let (delta, initial, accepting) = minimize_table(&self.delta, self.initial, &self.accepting);
        TraceDfa { num_actions: self.num_actions, delta, initial, accepting }
    }

    /// Reads a triple exactly as its action.
    pub fn lift(&self, sa: &SubstochasticAutomaton) -> Result<TransitionDfa, DfaError> {
        lift_trace_dfa(self, sa)
    }
}

pub fn lift_trace_dfa(d: &TraceDfa, sa: &SubstochasticAutomaton) -> Result<TransitionDfa, DfaError> {
    if d.num_actions != sa.num_actions() {
        return Err(DfaError::AlphabetMismatch(format!(
            "trace automaton reads {} actions, host has {}",
            d.num_actions,
            sa.num_actions()
        )));
    }
    let alphabet = sa.triple_alphabet();
    let delta = d
        .delta
        .iter()
        .map(|row| alphabet.triples().iter().map(|t| row[t.action]).collect())
        .collect();
    Ok(TransitionDfa { alphabet, delta, initial: d.initial, accepting: d.accepting.clone() })
}

/// A complete DFA reading the support triples of a host automaton.
#[derive(Clone, Debug)]
pub struct TransitionDfa {
    alphabet: Arc<TripleAlphabet>,
    delta: Vec<Vec<usize>>,
    initial: usize,
    accepting: Vec<bool>,
}

impl TransitionDfa {
    pub fn new(
        alphabet: Arc<TripleAlphabet>,
        delta: Vec<Vec<usize>>,
        initial: usize,
        accepting: Vec<bool>,
    ) -> Result<Self, DfaError> {
        check_table(&delta, alphabet.len(), initial, &accepting)?;
        Ok(TransitionDfa { alphabet, delta, initial, accepting })
    }

    /// Explores the states reachable from `init` under `step`.
    pub fn build<K, F, A>(alphabet: Arc<TripleAlphabet>, init: K, step: F, accept: A) -> Self
    where
        K: Clone + Eq + Hash,
        F: Fn(&K, &Triple) -> K,
        A: Fn(&K) -> bool,
    {
        let mut keys = vec![init.clone()];
        let mut ids = HashMap::from([(init, 0usize)]);
        let mut delta: Vec<Vec<usize>> = Vec::new();
        let mut i = 0;
        while i < keys.len() {
            let mut row = Vec::with_capacity(alphabet.len());
            for t in alphabet.triples() {
                let next = step(&keys[i], t);
                let id = match ids.get(&next) {
                    Some(&id) => id,
                    None => {
                        let id = keys.len();
                        ids.insert(next.clone(), id);
                        keys.push(next);
                        id
                    }
                };
                row.push(id);
            }
            delta.push(row);
            i += 1;
        }
        let accepting = keys.iter().map(accept).collect();
        TransitionDfa { alphabet, delta, initial: 0, accepting }
    }

    /// Accepts every triple sequence.
    pub fn universal(alphabet: Arc<TripleAlphabet>) -> Self {
        let width = alphabet.len();
        TransitionDfa { alphabet, delta: vec![vec![0; width]], initial: 0, accepting: vec![true] }
    }

    pub fn alphabet(&self) -> &Arc<TripleAlphabet> {
        &self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn is_accepting(&self, s: usize) -> bool {
        self.accepting[s]
    }

    pub fn step(&self, s: usize, t: &Triple) -> Option<usize> {
        self.alphabet.get(t).map(|i| self.delta[s][i])
    }

    pub fn step_index(&self, s: usize, i: usize) -> usize {
        self.delta[s][i]
    }

    /// Runs the DFA over `triples`; `None` if some triple is outside the alphabet.
    pub fn run<I: IntoIterator<Item = Triple>>(&self, triples: I) -> Option<usize> {
        let mut s = self.initial;
        for t in triples {
            s = self.step(s, &t)?;
        }
        Some(s)
    }

    pub fn accepts<I: IntoIterator<Item = Triple>>(&self, triples: I) -> bool {
        self.run(triples).is_some_and(|s| self.accepting[s])
    }

    pub fn complement(&self) -> Self {
        let mut out = self.clone();
        out.accepting.iter_mut().for_each(|a| *a = !*a);
        out
    }

    pub fn minimize(&self) -> Self {
        let (delta, initial, accepting) = minimize_table(&self.delta, self.initial, &self.accepting);
        TransitionDfa { alphabet: self.alphabet.clone(), delta, initial, accepting }
    }

    fn check_same_alphabet(&self, other: &TransitionDfa) -> Result<(), DfaError> {
        if Arc::ptr_eq(&self.alphabet, &other.alphabet) || self.alphabet.same_as(&other.alphabet) {
            Ok(())
        } else {
            Err(DfaError::AlphabetMismatch("automata read different triple sets".into()))
        }
    }

    /// Synchronous product of several DFAs; acceptance combines component flags with `accept`.
    pub fn product_with<F>(dfas: &[&TransitionDfa], accept: F) -> Result<Monitor, DfaError>
    where
        F: Fn(&[bool]) -> bool,
    {
        let first = dfas.first().ok_or_else(|| DfaError::AlphabetMismatch("empty product".into()))?;
        for d in dfas {
            first.check_same_alphabet(d)?;
        }
        let init: Vec<usize> = dfas.iter().map(|d| d.initial).collect();
        let mut components = vec![init.clone()];
        let mut ids = HashMap::from([(init, 0usize)]);
        let mut delta = Vec::new();
        let mut i = 0;
        while i < components.len() {
            let mut row = Vec::with_capacity(first.alphabet.len());
            for t in 0..first.alphabet.len() {
                let next: Vec<usize> = components[i].iter().zip(dfas).map(|(&s, d)| d.delta[s][t]).collect();
                let id = match ids.get(&next) {
                    Some(&id) => id,
                    None => {
                        let id = components.len();
                        ids.insert(next.clone(), id);
                        components.push(next);
                        id
                    }
                };
                row.push(id);
            }
            delta.push(row);
            i += 1;
        }
        let accepting = components
            .iter()
            .map(|c| {
                let flags: Vec<bool> = c.iter().zip(dfas).map(|(&s, d)| d.accepting[s]).collect();
                accept(&flags)
            })
            .collect();
        let dfa = TransitionDfa { alphabet: first.alphabet.clone(), delta, initial: 0, accepting };
        Ok(Monitor { dfa, components })
    }

    pub fn intersect(&self, other: &TransitionDfa) -> Result<TransitionDfa, DfaError> {
        Ok(Self::product_with(&[self, other], |f| f[0] && f[1])?.dfa)
    }

    pub fn union(&self, other: &TransitionDfa) -> Result<TransitionDfa, DfaError> {
        Ok(Self::product_with(&[self, other], |f| f[0] || f[1])?.dfa)
    }

    /// No accepting state is reachable.
    pub fn is_empty(&self) -> bool {
        let mut seen = vec![false; self.num_states()];
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial] = true;
        while let Some(s) = queue.pop_front() {
            if self.accepting[s] {
                return false;
            }
            for &t in &self.delta[s] {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        true
    }

    /// Same language, decided by emptiness of the symmetric difference.
    pub fn equivalent(&self, other: &TransitionDfa) -> Result<bool, DfaError> {
        Ok(Self::product_with(&[self, other], |f| f[0] != f[1])?.dfa.is_empty())
    }

    /// Rewrites the DFA to read the triples of `derived`, whose state `s` projects to `origin[s]`.
    pub fn pullback(&self, derived: &SubstochasticAutomaton, origin: &[StateId]) -> Result<TransitionDfa, DfaError> {
        let alphabet = derived.triple_alphabet();
        let mut columns = Vec::with_capacity(alphabet.len());
        for t in alphabet.triples() {
            let host = Triple::new(origin[t.src], t.action, origin[t.dst]);
            let i = self.alphabet.get(&host).ok_or_else(|| {
                DfaError::AlphabetMismatch(format!(
                    "move {} -{}-> {} has no host counterpart",
                    derived.state_name(t.src),
                    derived.action_name(t.action),
                    derived.state_name(t.dst)
                ))
            })?;
            columns.push(i);
        }
        let delta = self.delta.iter().map(|row| columns.iter().map(|&i| row[i]).collect()).collect();
        Ok(TransitionDfa { alphabet, delta, initial: self.initial, accepting: self.accepting.clone() })
    }
}

/// A product DFA remembering the component state tuple of each of its states.
#[derive(Clone, Debug)]
pub struct Monitor {
    pub dfa: TransitionDfa,
    pub components: Vec<Vec<usize>>,
}

pub fn complement_dfa(d: &TransitionDfa) -> TransitionDfa {
    d.complement()
}
