//! Seeded sampling against the exact joint distribution.

use opacity::measures::rpso;
use opacity::models::dining;
use opacity::oracle::{estimate_joint, max_cell_deviation, SampleConfig, RNG_ALGORITHM};
use opacity::prob::ratio;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let b = dining(ratio(3, 10))?;
    let exact = b.joint()?;
    println!("rng {RNG_ALGORITHM}");
    for n in [1_000, 10_000, 100_000] {
        let est = estimate_joint(&b.system, &b.predicate, &b.observation, &SampleConfig::new(n, 7)?)?;
        println!("n = {n:>6}: max deviation {:.5}, rpso {:.4} (exact {:.4})", max_cell_deviation(&est, &exact), rpso(&est), rpso(&exact));
    }
    Ok(())
}
