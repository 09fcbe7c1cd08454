//! Load an `.opm` file and report every predicate against every observation.

use opacity::cli::{compile_bundle, parse_model};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/models/a3.opm").into());
    let mf = parse_model(&std::fs::read_to_string(&path)?)?;
    print!("{mf}");
    for p in mf.predicate_names() {
        for o in mf.observation_names() {
            let r = compile_bundle(&mf, p, o)?.report()?;
            println!("{p} / {o}: lpo {} lpso {} rpo {} rpso {:.6}", r.lpo, r.lpso, r.rpo, r.rpso);
        }
    }
    Ok(())
}
