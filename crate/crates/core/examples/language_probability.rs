//! Probability that a run of a looping automaton stays in `a*`.

use opacity::algebra::{build_linear_system, solve};
use opacity::automaton::{validate_fpfa, validate_sa, RawAutomaton};
use opacity::prob::ratio;
use opacity::product::{language_probability, prune, sync_product};
use opacity::regex::compile_regex;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut raw = RawAutomaton::new("q0");
    raw.trans("q0", "a", "q0", ratio(1, 2))
        .trans("q0", "b", "q1", ratio(1, 4))
        .term("q0", ratio(1, 4))
        .term("q1", ratio(1, 1));
    let a = validate_fpfa(validate_sa(&raw)?)?;

    let k = compile_regex("a*", a.alphabet())?.lift(&a)?;
    println!("P(a*) = {}", language_probability(&a, &k)?);

    // the restricted automaton and its linear system
    let product = sync_product(&a, &k)?;
    let pruned = prune(&product.sa);
    let system = build_linear_system(&pruned.sa)?;
    let solution = solve(&system)?;
    for (i, &q) in system.order().iter().enumerate() {
        println!("L[{}] = {}", pruned.sa.state_name(q), opacity::prob::fmt_rational(&solution.values()[i]));
    }
    Ok(())
}
