//! Restrictive opacity of large purchases when only the bank call is visible.

use opacity::models::debit_card;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let card = debit_card();
    let report = card.report()?;
    println!("rpo = {} ({:.4})", report.rpo, report.rpo.to_f64());
    for c in &report.classes {
        let phi = c.phi_given.as_ref().map(opacity::prob::fmt_rational).unwrap_or_default();
        println!("  O = {:<4} P = {:<8} P(over500 | O) = {phi}", c.label, opacity::prob::fmt_rational(&c.probability));
    }
    Ok(())
}
