//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use opacity::automaton::{validate_fpfa, validate_sa, RawAutomaton};
use opacity::measures::{
    class_vulnerability, conditional_entropy, is_opaque, is_sym_opaque, joint_distribution, lpo, lpso, rpo, rpso,
    JointDistribution, Measure, MeasureValue,
};
use opacity::models::{self, abstract_joint};
use opacity::oracle::{enumerate_joint, estimate_joint, SampleConfig};
use opacity::prob::{fmt_rational, ratio, to_f64, Probability, Rational};
use opacity::product::language_probability;
use opacity::regex::compile_regex;
use opacity::sched::{schedule_restricted, sweep_memoryless};

type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol || (a.is_infinite() && a == b)
}

fn exact(p: &Probability, n: i64, d: i64) -> bool {
    *p == Probability::ratio(n, d)
}

fn c1_language_probability() -> Check {
    let mut raw = RawAutomaton::new("q0");
    raw.trans("q0", "a", "q0", ratio(1, 2)).trans("q0", "b", "q1", ratio(1, 4)).term("q0", ratio(1, 4)).term("q1", ratio(1, 1));
    let a1 = validate_fpfa(validate_sa(&raw).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let k = compile_regex("a*", a1.alphabet()).map_err(|e| e.to_string())?.lift(&a1).map_err(|e| e.to_string())?;
    let p = language_probability(&a1, &k).map_err(|e| e.to_string())?;
    ensure!(exact(&p, 1, 2), "P(a*) = {p}");
    Ok(())
}

fn c2_non_interference() -> Check {
    let (a3, a4) = models::ni_examples();
    for (b, expected) in [(a3, (1, 4)), (a4, (3, 4))] {
        let j = b.joint().map_err(|e| e.to_string())?;
        ensure!(exact(&lpo(&j), expected.0, expected.1), "{}: lpo {}", b.name, lpo(&j));
        ensure!(lpso(&j) == lpo(&j), "{}: lpso {}", b.name, lpso(&j));
        ensure!(rpo(&j).is_zero(), "{}: rpo {}", b.name, rpo(&j));
        ensure!(rpso(&j) == 0.0, "{}: rpso {}", b.name, rpso(&j));
    }
    Ok(())
}

fn c3_debit_card() -> Check {
    let j = models::debit_card().joint().map_err(|e| e.to_string())?;
    ensure!(exact(&rpo(&j), 28272, 39377), "rpo {}", rpo(&j));
    let silent = j.cell("ε", true).cloned().unwrap_or_default() + j.cell("ε", false).cloned().unwrap_or_default();
    ensure!(silent == ratio(207, 400), "P(O=ε) = {}", fmt_rational(&silent));
    Ok(())
}

fn c4_sale() -> Check {
    let grid = [ratio(1, 10), ratio(1, 4), ratio(1, 2), ratio(2, 3), ratio(9, 10)];
    for a in &grid {
        for b in &grid {
            for g in &grid {
                let j = models::sale(a.clone(), b.clone(), g.clone()).map_err(|e| e.to_string())?.joint().map_err(|e| e.to_string())?;
                let want = common::sale_rpso(to_f64(a), to_f64(b), to_f64(g));
                ensure!(close(rpso(&j), want, 1e-9), "sale({a},{b},{g}): rpso {} vs {want}", rpso(&j));
            }
        }
    }
    Ok(())
}

fn c5_dining() -> Check {
    for k in 1..=7 {
        let j = models::dining(ratio(k, 8)).unwrap().joint().map_err(|e| e.to_string())?;
        let want = common::dining_rpso(k as f64 / 8.0);
        ensure!(close(rpso(&j), want, 1e-9), "q={k}/8: rpso {} vs {want}", rpso(&j));
    }
    let half = models::dining(ratio(1, 2)).unwrap().joint().map_err(|e| e.to_string())?;
    ensure!(rpso(&half) == 1.0, "q=1/2: rpso {}", rpso(&half));
    for q in [0, 1] {
        let j = models::dining(ratio(q, 1)).unwrap().joint().map_err(|e| e.to_string())?;
        ensure!(rpso(&j) == 0.0 && !is_sym_opaque(&j), "q={q}: rpso {}", rpso(&j));
    }
    Ok(())
}

fn c6_crowds() -> Check {
    for (n, c) in [(4u32, 0u32), (8, 2), (12, 3), (20, 5)] {
        let (ni, ci) = (i64::from(n), i64::from(c));
        let j = models::crowds(n, c, ratio(1, 2)).unwrap().joint().map_err(|e| e.to_string())?;
        let want = common::crowds_rpo(ni, ci);
        ensure!(*rpo(&j).value() == want, "({n},{c}): rpo {} vs {}", rpo(&j), fmt_rational(&want));
        let last = j.cell(&(n - c).to_string(), true).cloned().unwrap_or_default();
        ensure!(last == ratio(1, (ni - ci) * ni), "({n},{c}): P(1 ~> n-c) = {}", fmt_rational(&last));
        let low = models::crowds(n, c, ratio(1, 4)).unwrap().report().map_err(|e| e.to_string())?;
        let high = models::crowds(n, c, ratio(3, 4)).unwrap().report().map_err(|e| e.to_string())?;
        ensure!(low == high, "({n},{c}): report depends on q");
    }
    for (n, c) in [(4u32, 0u32), (8, 2), (12, 3), (20, 5), (7, 5), (10, 5), (12, 5), (5, 1), (6, 2)] {
        let j = models::crowds(n, c, ratio(1, 2)).unwrap().joint().map_err(|e| e.to_string())?;
        let want = common::crowds_rpso(i64::from(n), i64::from(c));
        ensure!(close(rpso(&j), want, 1e-9), "({n},{c}): rpso {} vs {want}", rpso(&j));
    }
    Ok(())
}

fn c7_abstract() -> Check {
    // (lpo, lpso, rpo, rpso) per system
    let table: [[(i64, i64); 4]; 7] = [
        [(0, 1), (0, 1), (1, 2), (1, 1)],
        [(0, 1), (0, 1), (3, 4), (1, 2)],
        [(0, 1), (0, 1), (3, 8), (1, 2)],
        [(1, 4), (1, 4), (0, 1), (0, 1)],
        [(1, 4), (1, 2), (0, 1), (0, 1)],
        [(1, 4), (1, 2), (0, 1), (0, 1)],
        [(0, 1), (1, 4), (12, 25), (0, 1)],
    ];
    for (i, row) in table.iter().enumerate() {
        let id = i as u32 + 1;
        let j = abstract_joint(id).map_err(|e| e.to_string())?;
        for (m, &(n, d)) in Measure::ALL.iter().zip(row) {
            let ok = match m.evaluate(&j) {
                MeasureValue::Exact(r) => r == ratio(n, d),
                MeasureValue::Float(x) => x == n as f64 / d as f64,
            };
            ensure!(ok, "A{id}: {m} = {} (expected {n}/{d})", m.evaluate(&j));
        }
    }
    Ok(())
}

fn c8_programs() -> Check {
    let p1 = models::program_p1(1).unwrap().joint().map_err(|e| e.to_string())?;
    ensure!(exact(&lpo(&p1), 1, 8) && lpso(&p1).is_one(), "P1: lpo {}, lpso {}", lpo(&p1), lpso(&p1));
    ensure!(rpo(&p1).is_zero() && rpso(&p1) == 0.0, "P1: rpo {}, rpso {}", rpo(&p1), rpso(&p1));
    let p2 = models::program_p2(1).unwrap().joint().map_err(|e| e.to_string())?;
    ensure!(lpo(&p2).is_zero() && lpso(&p2).is_zero(), "P2: lpo {}, lpso {}", lpo(&p2), lpso(&p2));
    ensure!(exact(&rpo(&p2), 127, 128), "P2: rpo {}", rpo(&p2));
    ensure!(close(rpso(&p2), 1.0 / 7.0, 1e-9), "P2: rpso {}", rpso(&p2));
    Ok(())
}

/// Exact value of the closed form at a rational `p`.
fn scheduler_rpo_exact(p: &Rational) -> Rational {
    let r = |n: i64| Rational::from_integer(n.into());
    let f = r(25) * p * p - r(25) * p + r(58);
    let a = p / (r(7) * &f - r(5) * p - r(49));
    let b = (r(1) - p) / (r(7) * &f - r(30) * p - r(14));
    let inv = ratio(1, 8) + r(49) * &f / r(8) * (a + b);
    r(1) / inv
}

fn c9_schedulers() -> Check {
    let b = models::counterexample_npa();
    let grid: Vec<Vec<Rational>> = (0..=100).map(|k| vec![ratio(k, 100)]).collect();
    let table = sweep_memoryless(&b.npa, &b.predicate, &b.observation, Measure::Rpo, &grid);
    let mut min = f64::INFINITY;
    for row in &table.rows {
        let p = &row.params[0];
        let v = row.value.clone().map_err(|e| format!("p={p}: {e}"))?;
        let want = scheduler_rpo_exact(p);
        ensure!(v.exact() == Some(&want), "p={}: rpo {v} vs {}", fmt_rational(p), fmt_rational(&want));
        ensure!(close(v.to_f64(), common::scheduler_rpo(to_f64(p)), 1e-9), "p={}: float closed form", fmt_rational(p));
        min = min.min(v.to_f64());
    }
    ensure!(min >= 0.88, "grid minimum {min}");
    let at_one = &table.rows[100].value;
    ensure!(at_one.as_ref().ok().and_then(|v| v.exact().cloned()) == Some(ratio(1408, 1597)), "p=1: {at_one:?}");

    let s = models::alternating_scheduler(&b).map_err(|e| e.to_string())?;
    let scheduled = schedule_restricted(&b.npa, &s).map_err(|e| e.to_string())?;
    let j = scheduled.joint(&b.predicate, &b.observation).map_err(|e| e.to_string())?;
    ensure!(exact(&rpo(&j), 88192, 146509), "sigma_m: rpo {}", rpo(&j));
    let o1 = j.labels().iter().position(|l| l == "o1").ok_or("no class o1")?;
    ensure!(j.class_mass(o1) == ratio(7, 15), "P(o1) = {}", fmt_rational(&j.class_mass(o1)));
    ensure!(*j.cell_at(o1, true) == ratio(3, 14), "P(phi, o1) = {}", fmt_rational(j.cell_at(o1, true)));
    Ok(())
}

fn c10_oracle() -> Check {
    for b in common::acyclic_bundles() {
        let pipeline = b.joint().map_err(|e| format!("{}: {e}", b.name))?;
        let brute = enumerate_joint(&b.system, &b.predicate, &b.observation).map_err(|e| format!("{}: {e}", b.name))?;
        ensure!(pipeline == brute, "{}: joints differ", b.name);
    }
    Ok(())
}

fn check_properties(j: &JointDistribution) -> Result<(), TestCaseError> {
    let (l, ls, r, rs) = (lpo(j), lpso(j), rpo(j), rpso(j));
    for x in [l.to_f64(), ls.to_f64(), r.to_f64(), rs] {
        if !(0.0..=1.0).contains(&x) {
            return Err(TestCaseError::fail(format!("measure {x} outside [0, 1]")));
        }
    }
    let pairs = [
        ("lpo = 0 <=> opaque", l.is_zero(), is_opaque(j)),
        ("lpso = 0 <=> sym opaque", ls.is_zero(), is_sym_opaque(j)),
        ("rpo = 0 <=> not opaque", r.is_zero(), !is_opaque(j)),
        ("rpso = 0 <=> not sym opaque", rs == 0.0, !is_sym_opaque(j)),
        ("lpso = 1 <=> H = 0", ls.is_one(), conditional_entropy(j) < 1e-9),
    ];
    for (name, a, b) in pairs {
        if a != b {
            return Err(TestCaseError::fail(format!("{name}: {a} vs {b}")));
        }
    }
    Ok(())
}

fn c11_properties() -> Check {
    let config = Config { cases: 200, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner
        .run(&common::cases(), |case| {
            let j = joint_distribution(&case.fpfa, &case.phi, &case.obs).map_err(|e| TestCaseError::fail(e.to_string()))?;
            check_properties(&j)?;
            let p = language_probability(&case.fpfa, &case.phi.phi).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let q = language_probability(&case.fpfa, &case.phi.phi.complement()).map_err(|e| TestCaseError::fail(e.to_string()))?;
            if p.value() + q.value() != ratio(1, 1) {
                return Err(TestCaseError::fail(format!("P(L) + P(not L) = {} + {}", p, q)));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn c12_monte_carlo() -> Check {
    let b = models::dining(ratio(3, 10)).unwrap();
    let exact = b.joint().map_err(|e| e.to_string())?;
    let cfg = SampleConfig::new(100_000, 20_240_611).map_err(|e| e.to_string())?;
    let est = estimate_joint(&b.system, &b.predicate, &b.observation, &cfg).map_err(|e| e.to_string())?;
    for (i, label) in exact.labels().iter().enumerate() {
        for truth in [true, false] {
            let d = (to_f64(exact.cell_at(i, truth)) - to_f64(est.cell(label, truth).ok_or("missing class")?)).abs();
            ensure!(d <= 0.02, "{label}/{truth}: deviation {d}");
        }
    }
    ensure!(close(rpso(&est), rpso(&exact), 0.05), "rpso {} vs {}", rpso(&est), rpso(&exact));
    // vulnerability of every class is recomputable from sampled data
    for label in est.labels() {
        class_vulnerability(&est, label).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 12] = [
        ("language probability of a* in A1", c1_language_probability),
        ("non-interference A3/A4", c2_non_interference),
        ("debit card", c3_debit_card),
        ("sale protocol closed form", c4_sale),
        ("dining cryptographers", c5_dining),
        ("crowds closed forms", c6_crowds),
        ("abstract systems table", c7_abstract),
        ("programs P1/P2", c8_programs),
        ("schedulers", c9_schedulers),
        ("oracle equivalence", c10_oracle),
        ("property suite on random FPFAs", c11_properties),
        ("Monte-Carlo cross-check", c12_monte_carlo),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("criterion {:>2}: PASS  {name} ({secs:.2}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name} ({secs:.2}s): {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
