use std::collections::BTreeMap;

use crate::automaton::RawAutomaton;
use crate::prob::{ratio, Rational};

use super::{fpfa, projection_observation, regex_predicate, ModelBundle, ModelError};

/// Three-path system: `l1` to q1, `h` to q1, `h` to q2 with the given weights.
///
/// q1 emits `l2`, q2 emits `l1 l2`; the predicate is "some `h` occurred" and the
/// observer sees the projection on `{l1, l2}`.
pub fn non_interference(name: &str, low: Rational, high_short: Rational, high_long: Rational) -> Result<ModelBundle, ModelError> {
    let mut raw = RawAutomaton::new("q0");
    raw.trans("q0", "l1", "q1", low.clone())
        .trans("q0", "h", "q1", high_short.clone())
        .trans("q0", "h", "q2", high_long.clone())
        .trans("q2", "l1", "q3", ratio(1, 1))
        .trans("q1", "l2", "q4", ratio(1, 1))
        .trans("q3", "l2", "q4", ratio(1, 1))
        .term("q4", ratio(1, 1));
    let system = fpfa(&raw)?;
    let predicate = regex_predicate(&system, "phiNI", ".* h .*")?;
    let observation = projection_observation(&system, &["l1", "l2"])?;
    let params = BTreeMap::from([
        ("low".to_string(), low),
        ("high_short".to_string(), high_short),
        ("high_long".to_string(), high_long),
    ]);
    Ok(ModelBundle { name: name.to_string(), system, predicate, observation, params })
}

/// The two interferent systems: A3 and A4.
pub fn ni_examples() -> (ModelBundle, ModelBundle) {
    let a3 = non_interference("a3", ratio(1, 2), ratio(1, 4), ratio(1, 4)).expect("fixed weights");
    let a4 = non_interference("a4", ratio(1, 8), ratio(3, 4), ratio(1, 8)).expect("fixed weights");
    (a3, a4)
}
