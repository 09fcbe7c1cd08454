//! Synchronized product of an automaton with a triple-reading monitor.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::algebra::{total_probability_with, AlgebraError, SolveMode};
use crate::automaton::{StateId, SubDistribution, SubstochasticAutomaton, Triple};
use crate::dfa::{DfaError, TransitionDfa};
use crate::prob::{Probability, Rational};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ProductError {
    #[error(transparent)]
    Dfa(#[from] DfaError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ProductState {
    pub sys: StateId,
    pub mon: usize,
}

/// `A || K` restricted to pairs reachable from `(q0, k0)`.
#[derive(Clone, Debug)]
pub struct Product {
    pub sa: SubstochasticAutomaton,
    pub states: Vec<ProductState>,
}

impl Product {
    /// Host state of each product state.
    pub fn origin(&self) -> Vec<StateId> {
        self.states.iter().map(|p| p.sys).collect()
    }
}

pub fn sync_product(sa: &SubstochasticAutomaton, k: &TransitionDfa) -> Result<Product, DfaError> {
    let init = ProductState { sys: sa.initial(), mon: k.initial() };
    let mut states = vec![init];
    let mut ids = HashMap::from([(init, 0usize)]);
    let mut delta: Vec<SubDistribution> = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let ProductState { sys: q, mon: m } = states[i];
        let mut d = SubDistribution::new();
        for (a, r, w) in sa.dist(q).moves() {
            let t = Triple::new(q, a, r);
            let m2 = k.step(m, &t).ok_or_else(|| {
                DfaError::AlphabetMismatch(format!(
                    "monitor cannot read {} -{}-> {}",
                    sa.state_name(q),
                    sa.action_name(a),
                    sa.state_name(r)
                ))
            })?;
            let next = ProductState { sys: r, mon: m2 };
            let id = *ids.entry(next).or_insert_with(|| {
                states.push(next);
                states.len() - 1
            });
            d.accumulate(a, id, w.value());
        }
        if k.is_accepting(m) {
            d.accumulate_term(sa.dist(q).term().value());
        }
        delta.push(d);
        i += 1;
    }
    let names = states.iter().map(|p| format!("{}|{}", sa.state_name(p.sys), p.mon)).collect();
    let product = SubstochasticAutomaton::from_parts(sa.alphabet().to_vec(), names, delta, 0);
    Ok(Product { sa: product, states })
}

/// A pruned automaton with the original index of every kept state.
#[derive(Clone, Debug)]
pub struct Pruned {
    pub sa: SubstochasticAutomaton,
    pub kept: Vec<StateId>,
    empty: bool,
}

impl Pruned {
    /// The initial state was removed; the result is the canonical empty automaton.
    pub fn is_empty(&self) -> bool {
        self.empty
    }
}

/// Keeps states that are reachable and can still terminate.
pub fn prune(sa: &SubstochasticAutomaton) -> Pruned {
    let reach = sa.reachable();
    let co = sa.coreachable();
    if !co[sa.initial()] {
        let name = sa.state_name(sa.initial()).to_string();
        let empty = SubstochasticAutomaton::from_parts(sa.alphabet().to_vec(), vec![name], vec![SubDistribution::new()], 0);
        return Pruned { sa: empty, kept: vec![sa.initial()], empty: true };
    }
    let mut new_id = vec![usize::MAX; sa.num_states()];
    let mut kept = Vec::new();
    // breadth-first numbering keeps the initial state first
    let mut queue = VecDeque::from([sa.initial()]);
    new_id[sa.initial()] = 0;
    kept.push(sa.initial());
    while let Some(q) = queue.pop_front() {
        for (_, r, _) in sa.dist(q).moves() {
            if reach[r] && co[r] && new_id[r] == usize::MAX {
                new_id[r] = kept.len();
                kept.push(r);
                queue.push_back(r);
            }
        }
    }
    let delta = kept
        .iter()
        .map(|&q| {
            let src = sa.dist(q);
            let mut d = SubDistribution::new();
            for (a, r, w) in src.moves() {
                if new_id[r] != usize::MAX {
                    d.accumulate(a, new_id[r], w.value());
                }
            }
            d.accumulate_term(src.term().value());
            d
        })
        .collect();
    let names = kept.iter().map(|&q| sa.state_name(q).to_string()).collect();
    let out = SubstochasticAutomaton::from_parts(sa.alphabet().to_vec(), names, delta, 0);
    Pruned { sa: out, kept, empty: false }
}

pub fn language_probability_with(
    sa: &SubstochasticAutomaton,
    k: &TransitionDfa,
    mode: SolveMode,
) -> Result<Rational, ProductError> {
    let product = sync_product(sa, k)?;
    Ok(total_probability_with(&product.sa, mode)?)
}

/// Probability that a complete run of `sa` is accepted by `k`.
pub fn language_probability(sa: &SubstochasticAutomaton, k: &TransitionDfa) -> Result<Probability, DfaError> {
    let product = sync_product(sa, k)?;
    Ok(crate::algebra::total_probability(&product.sa))
}
