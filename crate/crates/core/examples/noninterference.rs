//! Liberal opacity of two interferent systems.

use opacity::measures::{lpo, lpso, rpo, rpso};
use opacity::models::ni_examples;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (a3, a4) = ni_examples();
    for b in [a3, a4] {
        let j = b.joint()?;
        println!("{}: observables {:?}", b.name, j.labels());
        for label in j.labels() {
            println!("  {label:<6} phi {}  not phi {}", j.cell(label, true).unwrap(), j.cell(label, false).unwrap());
        }
        println!("  lpo {}  lpso {}  rpo {}  rpso {}", lpo(&j), lpso(&j), rpo(&j), rpso(&j));
    }
    Ok(())
}
