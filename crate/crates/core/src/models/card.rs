use std::collections::BTreeMap;

use crate::automaton::RawAutomaton;
use crate::prob::{parse_rational, ratio, Rational};

use super::{fpfa, projection_observation, regex_predicate, ModelBundle};

// (state, amount action, amount weight, call, accept after call, reject after call)
const TIERS: [(&str, &str, &str, &str, &str, &str); 4] = [
    ("high", "x>1000", "0.05", "0.95", "0.8", "0.2"),
    ("medhigh", "500<x<=1000", "0.2", "0.75", "0.9", "0.1"),
    ("medlow", "100<x<=500", "0.45", "0.5", "0.95", "0.05"),
    ("low", "x<=100", "0.3", "0.2", "0.99", "0.01"),
];

fn dec(s: &str) -> Rational {
    parse_rational(s).expect("decimal literal")
}

/// Card purchase: amount tier, optional call to the bank, then accept or reject.
///
/// The predicate holds for purchases above 500; the observer only sees whether a
/// call was made.
pub fn debit_card() -> ModelBundle {
    let mut raw = RawAutomaton::new("start");
    raw.trans("start", "Buy", "amount", ratio(1, 1));
    for (state, guard, weight, call, yes, no) in TIERS {
        let calling = format!("{state}_call");
        raw.trans("amount", guard, state, dec(weight))
            .trans(state, "Call", &calling, dec(call))
            .trans(state, "Accept", "accepted", ratio(1, 1) - dec(call))
            .trans(&calling, "Accept", "accepted", dec(yes))
            .trans(&calling, "Reject", "rejected", dec(no));
    }
    raw.term("accepted", ratio(1, 1)).term("rejected", ratio(1, 1));
    let system = fpfa(&raw).expect("fixed weights");
    let predicate = regex_predicate(&system, "over500", ".* (x>1000 | 500<x<=1000) .*").expect("fixed pattern");
    let observation = projection_observation(&system, &["Call"]).expect("acyclic system");
    ModelBundle { name: "card".into(), system, predicate, observation, params: BTreeMap::new() }
}
