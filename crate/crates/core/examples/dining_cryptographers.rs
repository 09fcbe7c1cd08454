//! Symmetric opacity of the payer as the shared coin gets biased.

use opacity::measures::{rpso, is_sym_opaque};
use opacity::models::dining;
use opacity::prob::ratio;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for k in 0..=10 {
        let q = ratio(k, 10);
        let j = dining(q.clone())?.joint()?;
        let closed = if k == 0 || k == 10 { 0.0 } else { -1.0 / (k.min(10 - k) as f64 / 10.0).log2() };
        println!("q = {:<5} rpso = {:.6}  closed form {:.6}  sym opaque {}", q.to_string(), rpso(&j), closed, is_sym_opaque(&j));
    }
    Ok(())
}
