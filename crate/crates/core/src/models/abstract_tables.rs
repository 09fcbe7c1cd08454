use std::collections::BTreeMap;

use num::Zero;

use crate::automaton::RawAutomaton;
use crate::measures::JointDistribution;
use crate::prob::{ratio, Rational};

use super::{fpfa, regex_observation, regex_predicate, ModelBundle, ModelError};

/// Four equally likely classes with the given `P(phi | o)` per class.
fn quarters(conditionals: [(i64, i64); 4]) -> JointDistribution {
    let labels = ["o1", "o2", "o3", "o4"];
    let rows: Vec<(&str, Rational, Rational)> =
        labels.iter().zip(conditionals).map(|(l, (n, d))| (*l, ratio(1, 4), ratio(n, d))).collect();
    JointDistribution::from_conditionals(&rows).expect("masses sum to one")
}

/// Joint tables of the seven abstract systems, indexed `1..=7`.
pub fn abstract_joint(id: u32) -> Result<JointDistribution, ModelError> {
    let profile = match id {
        1 => [(1, 2), (1, 2), (1, 2), (1, 2)],
        2 => [(1, 4), (1, 4), (1, 4), (1, 4)],
        3 => [(3, 4), (3, 4), (1, 4), (1, 4)],
        4 => [(1, 1), (1, 2), (1, 2), (1, 2)],
        5 | 6 => [(1, 1), (0, 1), (1, 2), (1, 2)],
        7 => [(0, 1), (3, 4), (1, 2), (1, 4)],
        other => return Err(ModelError::UnknownId(other)),
    };
    Ok(quarters(profile))
}

/// Two-step tree realising [`abstract_joint`]: pick the class, then whether phi holds.
pub fn abstract_system(id: u32) -> Result<ModelBundle, ModelError> {
    let joint = abstract_joint(id)?;
    let mut raw = RawAutomaton::new("start");
    let mut classes = Vec::new();
    for (i, label) in joint.labels().iter().enumerate() {
        let mass = joint.class_mass(i);
        raw.trans("start", label, label, mass.clone());
        for (truth, action) in [(true, "phi"), (false, "nphi")] {
            let cell = joint.cell_at(i, truth);
            if !cell.is_zero() {
                let leaf = format!("{label}.{action}");
                raw.trans(label, action, &leaf, cell / &mass);
                raw.term(&leaf, ratio(1, 1));
            }
        }
        classes.push((label.clone(), format!("{label} .*")));
    }
    let system = fpfa(&raw)?;
    let predicate = regex_predicate(&system, "phi", ".* phi")?;
    let classes: Vec<(&str, &str)> = classes.iter().map(|(l, r)| (l.as_str(), r.as_str())).collect();
    let observation = regex_observation(&system, "class", &classes)?;
    let params = BTreeMap::from([("id".to_string(), Rational::from_integer(id.into()))]);
    Ok(ModelBundle { name: format!("abstract{id}"), system, predicate, observation, params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{is_opaque, is_sym_opaque, lpso, rpo};
    use crate::prob::Probability;

    #[test]
    fn ids_are_bounded() {
        assert_eq!(abstract_joint(0).unwrap_err(), ModelError::UnknownId(0));
        assert_eq!(abstract_joint(8).unwrap_err(), ModelError::UnknownId(8));
    }

    #[test]
    fn systems_realise_the_tables() {
        for id in 1..=7 {
            assert_eq!(abstract_system(id).unwrap().joint().unwrap(), abstract_joint(id).unwrap());
        }
    }

    #[test]
    fn seventh_system_is_opaque_but_not_symmetrically() {
        let j = abstract_joint(7).unwrap();
        assert!(is_opaque(&j) && !is_sym_opaque(&j));
        assert_eq!(rpo(&j), Probability::ratio(12, 25));
        assert_eq!(lpso(&j), Probability::ratio(1, 4));
    }
}
