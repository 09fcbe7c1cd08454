use std::collections::BTreeMap;

use num::{One, Signed};

use crate::automaton::RawAutomaton;
use crate::dfa::TransitionDfa;
use crate::observation::{ObservationSpec, PredicateSpec};
use crate::prob::{ratio, Rational};

use super::{fpfa, ModelBundle, ModelError};

/// Crowds with `n` members of which `c` are corrupt and forwarding probability `q`.
///
/// Honest members are `1..=n-c`, corrupt ones `n-c+1..=n`. State `i'` marks that
/// `i` initiated. The predicate is "member 1 initiated"; the observer learns the
/// sender of the last message.
pub fn crowds(n: u32, c: u32, q: Rational) -> Result<ModelBundle, ModelError> {
    crowds_with_initiator(n, c, q, 1)
}

pub fn crowds_with_initiator(n: u32, c: u32, q: Rational, initiator: u32) -> Result<ModelBundle, ModelError> {
    if n <= c {
        return Err(ModelError::InvalidParameter("need n > c".into()));
    }
    if !q.is_positive() || q >= Rational::one() {
        return Err(ModelError::InvalidParameter("q must lie in (0, 1)".into()));
    }
    let honest = n - c;
    if initiator == 0 || initiator > honest {
        return Err(ModelError::InvalidParameter(format!("initiator must be in 1..={honest}")));
    }
    let (n_i, h_i) = (i64::from(n), i64::from(honest));
    let mut raw = RawAutomaton::new("0");
    for i in 1..=honest {
        raw.trans("0", "start", &format!("{i}'"), ratio(1, h_i));
    }
    for i in 1..=honest {
        for j in 1..=n {
            raw.trans(&format!("{i}'"), "route", &j.to_string(), ratio(1, n_i));
        }
    }
    for i in 1..=honest {
        for j in 1..=n {
            raw.trans(&i.to_string(), "route", &j.to_string(), &q / Rational::from_integer(n_i.into()));
        }
        raw.trans(&i.to_string(), "deliver", "S", Rational::one() - &q);
    }
    for j in honest + 1..=n {
        raw.term(&j.to_string(), Rational::one());
    }
    raw.term("S", Rational::one());
    let system = fpfa(&raw)?;

    let alphabet = system.triple_alphabet();
    let start = system.state_id(&format!("{initiator}'")).expect("declared");
    let phi = TransitionDfa::build(alphabet.clone(), 0u8, move |&k, t| if k == 0 { if t.dst == start { 1 } else { 2 } } else { k }, |&k| k == 1);
    let predicate = PredicateSpec::new(format!("init{initiator}"), phi);

    let mut classes = Vec::new();
    for j in 1..=honest {
        let senders = [system.state_id(&j.to_string()).expect("declared"), system.state_id(&format!("{j}'")).expect("declared")];
        let dfa = TransitionDfa::build(alphabet.clone(), false, move |_, t| senders.contains(&t.src), |&k| k);
        classes.push((j.to_string(), dfa));
    }
    let observation = ObservationSpec::new("last sender", classes)?;
    let params = BTreeMap::from([
        ("n".to_string(), Rational::from_integer(n.into())),
        ("c".to_string(), Rational::from_integer(c.into())),
        ("q".to_string(), q),
    ]);
    Ok(ModelBundle { name: "crowds".into(), system, predicate, observation, params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::rpo;
    use crate::prob::Probability;

    #[test]
    fn no_corrupt_members() {
        let b = crowds(4, 0, ratio(1, 2)).unwrap();
        assert_eq!(rpo(&b.joint().unwrap()), Probability::ratio(3, 4));
    }

    #[test]
    fn initiator_reaches_last_honest_member() {
        let (n, c) = (8, 2);
        let b = crowds(n, c, ratio(1, 3)).unwrap();
        let j = b.joint().unwrap();
        let last = (n - c).to_string();
        assert_eq!(j.cell(&last, true), Some(&ratio(1, i64::from((n - c) * n))));
    }

    #[test]
    fn parameters_are_checked() {
        assert!(crowds(3, 3, ratio(1, 2)).is_err());
        assert!(crowds(4, 1, ratio(1, 1)).is_err());
        assert!(crowds_with_initiator(4, 1, ratio(1, 2), 4).is_err());
    }
}
