#![allow(dead_code)]

use std::collections::BTreeMap;

use proptest::prelude::*;

use opacity::automaton::{validate_fpfa, validate_sa, Fpfa, RawAutomaton};
use opacity::dfa::TransitionDfa;
use opacity::models::{self, ModelBundle};
use opacity::observation::{ObservationSpec, PredicateSpec};
use opacity::prob::{ratio, Rational};

/// Shape of a random FPFA: per state, extra moves `(action, target, weight)`,
/// a forward move `(action, weight)` to the next state, and a termination weight.
#[derive(Clone, Debug)]
pub struct Shape {
    pub actions: usize,
    pub states: Vec<(Vec<(usize, usize, u32)>, (usize, u32), u32)>,
    /// `(delta, accepting)` of a trace DFA for the predicate.
    pub predicate: (Vec<Vec<usize>>, Vec<bool>),
    /// Trace DFA whose final state is the observation.
    pub partition: Vec<Vec<usize>>,
}

#[derive(Clone, Debug)]
pub struct Case {
    pub fpfa: Fpfa,
    pub phi: PredicateSpec,
    pub obs: ObservationSpec,
}

fn table(states: usize, actions: usize) -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec(prop::collection::vec(0..states, actions), states)
}

pub fn shape() -> impl Strategy<Value = Shape> {
    (1usize..=6, 1usize..=3, 1usize..=3, 1usize..=3).prop_flat_map(|(n, m, kp, ko)| {
        let state = (prop::collection::vec((0..m, 0..n, 1u32..=4), 0..=2), (0..m, 1u32..=4), 0u32..=3);
        (
            prop::collection::vec(state, n),
            table(kp, m),
            prop::collection::vec(any::<bool>(), kp),
            table(ko, m),
        )
            .prop_map(move |(states, delta, accepting, partition)| Shape { actions: m, states, predicate: (delta, accepting), partition })
    })
}

pub fn raw(shape: &Shape) -> RawAutomaton {
    let n = shape.states.len();
    let mut raw = RawAutomaton::new("s0");
    for a in 0..shape.actions {
        raw.declare_action(&format!("a{a}"));
    }
    for (i, (extra, (fa, fw), term)) in shape.states.iter().enumerate() {
        raw.declare_state(&format!("s{i}"));
        let mut moves: BTreeMap<(usize, usize), u32> = BTreeMap::new();
        for &(a, t, w) in extra {
            *moves.entry((a, t)).or_default() += w;
        }
        let last = i + 1 == n;
        if !last {
            *moves.entry((*fa, i + 1)).or_default() += fw;
        }
        // the last state always terminates, every other state reaches it
        let term = if last { term + 1 } else { *term };
        let total = i64::from(moves.values().sum::<u32>() + term);
        for ((a, t), w) in moves {
            raw.trans(&format!("s{i}"), &format!("a{a}"), &format!("s{t}"), ratio(i64::from(w), total));
        }
        if term > 0 {
            raw.term(&format!("s{i}"), ratio(i64::from(term), total));
        }
    }
    raw
}

pub fn case(shape: &Shape) -> Case {
    let fpfa = validate_fpfa(validate_sa(&raw(shape)).expect("well-formed")).expect("every state reaches the last");
    let alphabet = fpfa.triple_alphabet();
    let (delta, accepting) = shape.predicate.clone();
    let accept = accepting.clone();
    let phi = TransitionDfa::build(alphabet.clone(), 0usize, move |&k, t| delta[k][t.action], move |&k| accept[k]);
    let classes = (0..shape.partition.len())
        .map(|c| {
            let delta = shape.partition.clone();
            (format!("o{c}"), TransitionDfa::build(alphabet.clone(), 0usize, move |&k, t| delta[k][t.action], move |&k| k == c))
        })
        .collect();
    Case {
        fpfa,
        phi: PredicateSpec::new("phi", phi),
        obs: ObservationSpec::new("partition", classes).expect("distinct labels"),
    }
}

pub fn cases() -> impl Strategy<Value = Case> {
    shape().prop_map(|s| case(&s))
}

/// Every bundled model without cycles.
pub fn acyclic_bundles() -> Vec<ModelBundle> {
    let (a3, a4) = models::ni_examples();
    let mut out = vec![
        a3,
        a4,
        models::debit_card(),
        models::sale(ratio(1, 3), ratio(1, 4), ratio(2, 5)).unwrap(),
        models::dining(ratio(3, 10)).unwrap(),
        models::program_p1(1).unwrap(),
        models::program_p2(1).unwrap(),
    ];
    out.extend((1..=7).map(|id| models::abstract_system(id).unwrap()));
    out
}

pub fn log2(x: f64) -> f64 {
    x.log2()
}

pub fn sale_rpso(a: f64, b: f64, g: f64) -> f64 {
    let m = |x: f64| x.min(1.0 - x);
    -1.0 / (a * log2(m(b)) + (1.0 - a) * log2(m(g)))
}

pub fn dining_rpso(q: f64) -> f64 {
    -1.0 / log2(q.min(1.0 - q))
}

pub fn crowds_rpo(n: i64, c: i64) -> Rational {
    ratio((n - c) * (n - 1) * (n - c - 1), n * (n * n + c * c - 2 * n * c - n + 2 * c))
}

pub fn crowds_rpso(n: i64, c: i64) -> f64 {
    let (nf, h) = (n as f64, (n - c) as f64);
    let inner = if n <= 2 * (c + 1) { (n - c - 1) as f64 } else { (c + 1) as f64 };
    if inner == 0.0 {
        return 0.0;
    }
    1.0 / (log2(nf) - log2(inner) / h)
}

/// Reciprocal closed form of RPO for the two-offer counterexample under weight `p`.
pub fn scheduler_rpo(p: f64) -> f64 {
    let f = 25.0 * p * p - 25.0 * p + 58.0;
    let inv = 1.0 / 8.0 + (49.0 * f / 8.0) * (p / (7.0 * f - 5.0 * p - 49.0) + (1.0 - p) / (7.0 * f - 30.0 * p - 14.0));
    1.0 / inv
}
