use std::collections::BTreeMap;

use crate::automaton::{ActionId, RawAutomaton, StateId};
use crate::dfa::TransitionDfa;
use crate::observation::ObservationSpec;
use crate::prob::{ratio, Rational};

use super::{check_probability, fpfa, regex_predicate, ModelBundle, ModelError};

const COINS: [(&str, &str); 3] = [("h12", "t12"), ("h13", "t13"), ("h23", "t23")];

/// Three cryptographers where 2 or 3 pays; coin 23 lands heads with probability `q`.
///
/// Leaves are named `r<a2><a3>` after the two public announcements. The observer
/// sees coins 12 and 13 and the announcements; the predicate is "2 paid".
pub fn dining(q: Rational) -> Result<ModelBundle, ModelError> {
    dining_payer(q, 2)
}

/// As [`dining`], with the predicate "`payer` paid" for `payer` in {2, 3}.
pub fn dining_payer(q: Rational, payer: u8) -> Result<ModelBundle, ModelError> {
    check_probability("q", &q)?;
    if payer != 2 && payer != 3 {
        return Err(ModelError::InvalidParameter("payer must be 2 or 3".into()));
    }
    let half = ratio(1, 2);
    let mut raw = RawAutomaton::new("start");
    for c12 in 0..2u8 {
        let s1 = face(0, c12);
        raw.trans("start", face(0, c12), s1, half.clone());
        for c13 in 0..2u8 {
            let s2 = format!("{s1}.{}", face(1, c13));
            raw.trans(s1, face(1, c13), &s2, half.clone());
            for c23 in 0..2u8 {
                let w = if c23 == 0 { q.clone() } else { ratio(1, 1) - &q };
                let s3 = format!("{s2}.{}", face(2, c23));
                if w != ratio(0, 1) {
                    raw.trans(&s2, face(2, c23), &s3, w);
                }
                for (pay2, action) in [(1u8, "p2"), (0u8, "p3")] {
                    let a2 = c12 ^ c23 ^ pay2;
                    let a3 = c13 ^ c23 ^ (1 - pay2);
                    raw.trans(&s3, action, &format!("r{a2}{a3}"), half.clone());
                }
            }
        }
    }
    for leaf in ["r00", "r01", "r10", "r11"] {
        raw.term(leaf, ratio(1, 1));
    }
    let system = fpfa(&raw)?;
    let predicate = regex_predicate(&system, &format!("p{payer}"), &format!(".* p{payer} .*"))?;

    let visible: Vec<ActionId> =
        ["h12", "t12", "h13", "t13"].iter().map(|a| system.action_id(a).expect("declared")).collect();
    let mut classes = Vec::new();
    for c12 in 0..2u8 {
        for c13 in 0..2u8 {
            for a2 in 0..2u8 {
                // announcement parity is fixed by the two visible coins
                let a3 = c12 ^ c13 ^ 1 ^ a2;
                let leaf = format!("r{a2}{a3}");
                let word = [face(0, c12), face(1, c13)];
                let label = format!("{} {} {leaf}", word[0], word[1]);
                let word: Vec<ActionId> = word.iter().map(|a| system.action_id(a).expect("declared")).collect();
                let target = system.state_id(&leaf).expect("declared");
                classes.push((label, word_then_state(&system.triple_alphabet(), &visible, &word, target)));
            }
        }
    }
    let observation = ObservationSpec::new("coins+announcement", classes)?;
    let params = BTreeMap::from([("q".to_string(), q)]);
    Ok(ModelBundle { name: "dining".into(), system, predicate, observation, params })
}

fn face(coin: usize, tails: u8) -> &'static str {
    if tails == 0 {
        COINS[coin].0
    } else {
        COINS[coin].1
    }
}

/// Runs whose visible projection is `word` and whose last move enters `target`.
fn word_then_state(
    alphabet: &std::sync::Arc<crate::dfa::TripleAlphabet>,
    visible: &[ActionId],
    word: &[ActionId],
    target: StateId,
) -> TransitionDfa {
    // (letters matched, last move entered target); None is the sink
    TransitionDfa::build(
        alphabet.clone(),
        Some((0usize, false)),
        |k, t| {
            let (i, _) = (*k)?;
            if visible.contains(&t.action) {
                if i < word.len() && word[i] == t.action {
                    Some((i + 1, t.dst == target))
                } else {
                    None
                }
            } else {
                Some((i, t.dst == target))
            }
        },
        |k| *k == Some((word.len(), true)),
    )
}
