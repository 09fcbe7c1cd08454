//! Two small programs leaking parts of an 8-bit secret.

use opacity::models::{program_p1, program_p2};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for b in [program_p1(1)?, program_p2(1)?] {
        let r = b.report()?;
        println!(
            "{}: {} states, lpo {}, lpso {}, rpo {}, rpso {:.6}",
            b.name,
            b.system.num_states(),
            r.lpo,
            r.lpso,
            r.rpo,
            r.rpso
        );
    }
    Ok(())
}
