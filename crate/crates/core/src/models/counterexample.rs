use std::collections::BTreeMap;

use crate::observation::{ObservationSpec, PredicateSpec};
use crate::prob::{ratio, Rational};
use crate::sched::{restricted_monitor, MemorylessScheduler, Npa, NpaBuilder, RestrictedScheduler, SchedError};

use super::{regex_observation, regex_predicate, ModelError};

/// A nondeterministic system with the predicate and observation it is analysed under.
#[derive(Clone, Debug)]
pub struct NpaBundle {
    pub npa: Npa,
    pub predicate: PredicateSpec,
    pub observation: ObservationSpec,
}

/// Two-choice system at `q0` where the observer sees the last of `o1`, `o2`.
///
/// The first offer favours `a` and leads to `o1`; the second favours `b` and leads
/// to `o2`. The predicate requires the `a`/`b` letters to alternate starting with `a`.
pub fn counterexample_npa() -> NpaBundle {
    let mut b = NpaBuilder::new("q0");
    b.offer("q0", &[("a", "q1", ratio(3, 4)), ("b", "q1", ratio(1, 8))], ratio(1, 8))
        .offer("q0", &[("a", "q2", ratio(1, 8)), ("b", "q2", ratio(3, 4))], ratio(1, 8))
        .offer("q1", &[("o1", "q0", ratio(1, 1))], ratio(0, 1))
        .offer("q2", &[("o2", "q0", ratio(1, 1))], ratio(0, 1));
    let npa = b.build().expect("fixed weights");
    let host = npa.uniform_mix().expect("every offer can terminate");
    let o = "(o1 | o2)*";
    let predicate = regex_predicate(&host, "alternating", &format!("{o} a {o} (b {o} a {o})* (b {o})?"))
        .expect("fixed pattern");
    let observation = regex_observation(
        &host,
        "last",
        &[("ε", "(a | b)*"), ("o1", ".* o1 (a | b)*"), ("o2", ".* o2 (a | b)*")],
    )
    .expect("fixed pattern");
    NpaBundle { npa, predicate, observation }
}

/// Takes the first offer at `q0` with probability `p`.
pub fn fixed_scheduler(bundle: &NpaBundle, p: Rational) -> Result<MemorylessScheduler, ModelError> {
    MemorylessScheduler::from_params(&bundle.npa, &[p]).map_err(|e| ModelError::InvalidParameter(e.to_string()))
}

/// Takes the first offer unless the last observation is `o1`.
pub fn alternating_scheduler(bundle: &NpaBundle) -> Result<RestrictedScheduler, SchedError> {
    let monitor = restricted_monitor(&bundle.predicate, &bundle.observation)?;
    let o1 = 1 + bundle.observation.labels().iter().position(|l| l == "o1").expect("declared class");
    let q0 = bundle.npa.state_id("q0").expect("declared");
    let class_dfa = &bundle.observation.classes()[o1 - 1].dfa;
    let mut choice = BTreeMap::new();
    for (m, comps) in monitor.components.iter().enumerate() {
        let after_o1 = class_dfa.is_accepting(comps[o1]);
        let w = if after_o1 { vec![ratio(0, 1), ratio(1, 1)] } else { vec![ratio(1, 1), ratio(0, 1)] };
        choice.insert((m, q0), w);
    }
    RestrictedScheduler::new(&bundle.npa, monitor.dfa, choice)
}
