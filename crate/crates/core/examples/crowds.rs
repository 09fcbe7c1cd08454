//! Crowds: opacity of the initiator as the crowd grows.

use opacity::measures::{rpo, rpso};
use opacity::models::crowds;
use opacity::prob::ratio;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let c = 2;
    println!("{:>3} {:>12} {:>10}", "n", "rpo", "rpso");
    for n in 4..=16 {
        let j = crowds(n, c, ratio(1, 2))?.joint()?;
        println!("{n:>3} {:>12} {:>10.6}", rpo(&j).to_string(), rpso(&j));
    }
    Ok(())
}
