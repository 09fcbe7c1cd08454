use std::collections::BTreeMap;

use crate::automaton::RawAutomaton;
use crate::prob::{ratio, Rational};

use super::{check_probability, fpfa, regex_observation, regex_predicate, ModelBundle, ModelError};

/// Seller offers a cheap product with probability `alpha`, an expensive one otherwise;
/// the buyer is poor with probability `beta` (cheap) or `gamma` (expensive).
pub fn sale(alpha: Rational, beta: Rational, gamma: Rational) -> Result<ModelBundle, ModelError> {
    check_probability("alpha", &alpha)?;
    check_probability("beta", &beta)?;
    check_probability("gamma", &gamma)?;
    let one = ratio(1, 1);
    let mut raw = RawAutomaton::new("init");
    raw.trans("init", "cheap", "c", alpha.clone())
        .trans("init", "expensive", "e", &one - &alpha)
        .trans("c", "poor", "c_poor", beta.clone())
        .trans("c", "rich", "c_rich", &one - &beta)
        .trans("e", "poor", "e_poor", gamma.clone())
        .trans("e", "rich", "e_rich", &one - &gamma);
    raw.transitions.retain(|t| t.weight != ratio(0, 1));
    for leaf in ["c_poor", "c_rich", "e_poor", "e_rich"] {
        raw.term(leaf, one.clone());
    }
    let system = fpfa(&raw)?;
    let predicate = regex_predicate(&system, "poor", ".* poor")?;
    let observation = regex_observation(&system, "product", &[("cheap", "cheap .*"), ("expensive", "expensive .*")])?;
    let params = BTreeMap::from([("alpha".into(), alpha), ("beta".into(), beta), ("gamma".into(), gamma)]);
    Ok(ModelBundle { name: "sale".into(), system, predicate, observation, params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::rpso;

    #[test]
    fn balanced_sale_is_perfect() {
        let b = sale(ratio(1, 2), ratio(1, 2), ratio(1, 2)).unwrap();
        assert_eq!(rpso(&b.joint().unwrap()), 1.0);
    }

    #[test]
    fn quarter_probabilities() {
        let b = sale(ratio(1, 2), ratio(1, 4), ratio(1, 4)).unwrap();
        assert_eq!(rpso(&b.joint().unwrap()), 0.5);
    }

    #[test]
    fn degenerate_parameters_are_allowed() {
        let b = sale(ratio(1, 1), ratio(0, 1), ratio(1, 2)).unwrap();
        let j = b.joint().unwrap();
        assert_eq!(rpso(&j), 0.0);
        assert_eq!(j.empty_labels(), vec!["expensive"]);
        assert!(sale(ratio(3, 2), ratio(0, 1), ratio(0, 1)).is_err());
    }
}
