//! A scheduler with one bit of memory beats every memoryless one.

use opacity::measures::{rpo, Measure};
use opacity::models::{alternating_scheduler, counterexample_npa};
use opacity::prob::{fmt_rational, ratio};
use opacity::sched::{optimize_restricted, schedule_restricted, sweep_memoryless, Direction, DEFAULT_MAX_EVALUATIONS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let b = counterexample_npa();
    let grid: Vec<_> = (0..=100).map(|k| vec![ratio(k, 100)]).collect();
    let table = sweep_memoryless(&b.npa, &b.predicate, &b.observation, Measure::Rpo, &grid);
    let min = table.argmin().expect("non-empty grid");
    println!(
        "memoryless: min rpo {:.6} at p = {}",
        min.value.as_ref().map(|v| v.to_f64()).unwrap_or(f64::NAN),
        fmt_rational(&min.params[0])
    );

    let s = alternating_scheduler(&b)?;
    let scheduled = schedule_restricted(&b.npa, &s)?;
    let j = scheduled.joint(&b.predicate, &b.observation)?;
    println!("alternating: rpo {} ({:.6}), {} states", rpo(&j), rpo(&j).to_f64(), scheduled.fpfa.num_states());

    let (_, best) =
        optimize_restricted(&b.npa, &b.predicate, &b.observation, Measure::Rpo, Direction::Minimize, &ratio(1, 1), DEFAULT_MAX_EVALUATIONS)?;
    println!("best deterministic restricted scheduler: rpo {best} ({:.6})", best.to_f64());
    Ok(())
}
