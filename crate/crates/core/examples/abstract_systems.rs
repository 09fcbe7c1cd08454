//! The four measures on seven hand-made joint distributions.

use opacity::measures::Measure;
use opacity::models::{abstract_joint, abstract_system};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:<4} {:>6} {:>6} {:>6} {:>6}", "", "lpo", "lpso", "rpo", "rpso");
    for id in 1..=7 {
        let j = abstract_joint(id)?;
        assert_eq!(j, abstract_system(id)?.joint()?);
        let row: Vec<String> = Measure::ALL.iter().map(|m| m.evaluate(&j).to_string()).collect();
        println!("A{id:<3} {:>6} {:>6} {:>6} {:>6}", row[0], row[1], row[2], row[3]);
    }
    Ok(())
}
