use std::collections::BTreeMap;

use crate::automaton::{RawAutomaton, SubstochasticAutomaton};
use crate::dfa::TransitionDfa;
use crate::observation::{ObservationSpec, PredicateSpec};
use crate::prob::{ratio, Rational};

use super::{fpfa, ModelBundle, ModelError};

fn secret_count(k: u32) -> Result<i64, ModelError> {
    if !(1..=2).contains(&k) {
        return Err(ModelError::InvalidParameter("k must be 1 or 2".into()));
    }
    Ok(1i64 << (8 * k))
}

/// `if H mod 8 = 0 then L := H else L := -1` for a uniform secret of `8k` bits.
pub fn program_p1(k: u32) -> Result<ModelBundle, ModelError> {
    let count = secret_count(k)?;
    let mut raw = RawAutomaton::new("qi");
    for h in 0..count {
        let next = if h % 8 == 0 { format!("q{h}") } else { "q_rest".into() };
        raw.trans("qi", &format!("H={h}"), &next, ratio(1, count));
    }
    for h in (0..count).step_by(8) {
        raw.trans(&format!("q{h}"), &format!("L={h}"), &format!("r{h}"), ratio(1, 1));
        raw.term(&format!("r{h}"), ratio(1, 1));
    }
    raw.trans("q_rest", "L=-1", "r_rest", ratio(1, 1)).term("r_rest", ratio(1, 1));
    program_bundle("p1", raw, k)
}

/// `L := H & (2^k - 1)` for a uniform secret of `8k` bits.
pub fn program_p2(k: u32) -> Result<ModelBundle, ModelError> {
    let count = secret_count(k)?;
    let mask = (1i64 << k) - 1;
    let mut raw = RawAutomaton::new("qi");
    for h in 0..count {
        raw.trans("qi", &format!("H={h}"), &format!("q{}", h & mask), ratio(1, count));
    }
    for l in 0..=mask {
        raw.trans(&format!("q{l}"), &format!("L={l}"), &format!("r{l}"), ratio(1, 1));
        raw.term(&format!("r{l}"), ratio(1, 1));
    }
    program_bundle("p2", raw, k)
}

/// `(variable, value)` carried by an action named `H=v` or `L=v`.
fn assignments(sa: &SubstochasticAutomaton) -> Vec<(char, i64)> {
    sa.alphabet()
        .iter()
        .map(|a| {
            let (var, value) = a.split_once('=').expect("assignment action");
            (var.chars().next().expect("variable"), value.parse().expect("integer value"))
        })
        .collect()
}

fn program_bundle(name: &str, raw: RawAutomaton, k: u32) -> Result<ModelBundle, ModelError> {
    let system = fpfa(&raw)?;
    let alphabet = system.triple_alphabet();
    let assign = assignments(&system);

    #[derive(Clone, PartialEq, Eq, Hash)]
    enum Match {
        Start,
        Read(i64),
        Accept,
        Reject,
    }
    let phi = TransitionDfa::build(
        alphabet.clone(),
        Match::Start,
        |s, t| match (s, assign[t.action]) {
            (Match::Start, ('H', h)) => Match::Read(h),
            (Match::Read(h), ('L', l)) if *h == l => Match::Accept,
            _ => Match::Reject,
        },
        |s| *s == Match::Accept,
    );
    let predicate = PredicateSpec::new("phiEq", phi);

    let mut outputs: Vec<usize> = (0..system.num_actions()).filter(|&a| assign[a].0 == 'L').collect();
    outputs.sort_by_key(|&a| assign[a].1);
    let mut classes = Vec::new();
    for out in outputs {
        let dfa = TransitionDfa::build(alphabet.clone(), false, move |_, t| t.action == out, |&seen| seen);
        classes.push((system.action_name(out).to_string(), dfa));
    }
    let observation = ObservationSpec::new("L", classes)?;
    let params = BTreeMap::from([("k".to_string(), Rational::from_integer(k.into()))]);
    Ok(ModelBundle { name: name.into(), system, predicate, observation, params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{lpo, lpso, rpo, rpso};
    use crate::prob::Probability;

    #[test]
    fn p1_leaks_multiples_of_eight() {
        let j = program_p1(1).unwrap().joint().unwrap();
        assert_eq!(j.len(), 33);
        assert_eq!(lpo(&j), Probability::ratio(1, 8));
        assert_eq!(lpso(&j), Probability::one());
    }

    #[test]
    fn p2_reveals_low_bits() {
        let j = program_p2(1).unwrap().joint().unwrap();
        assert_eq!(lpo(&j), Probability::zero());
        assert_eq!(rpo(&j), Probability::ratio(127, 128));
        assert!((rpso(&j) - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn k_is_bounded() {
        assert!(program_p1(0).is_err());
        assert!(program_p2(3).is_err());
    }
}
