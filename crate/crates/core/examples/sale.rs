//! RPSO of the sale protocol over a small grid of buyer probabilities.

use opacity::measures::rpso;
use opacity::models::sale;
use opacity::prob::ratio;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alpha = ratio(1, 8);
    print!("{:>6}", "b\\g");
    let steps: Vec<_> = (1..=4).map(|k| ratio(k, 8)).collect();
    for g in &steps {
        print!("{:>8}", g.to_string());
    }
    println!();
    for b in &steps {
        print!("{:>6}", b.to_string());
        for g in &steps {
            let j = sale(alpha.clone(), b.clone(), g.clone())?.joint()?;
            print!("{:>8.4}", rpso(&j));
        }
        println!();
    }
    Ok(())
}
