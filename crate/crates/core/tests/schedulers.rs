mod common;

use std::collections::BTreeMap;

use opacity::measures::{joint_distribution, lpo, rpo, Measure, MeasureValue, OpacityReport};
use opacity::models::{alternating_scheduler, counterexample_npa, fixed_scheduler};
use opacity::observation::{ObservationSpec, PredicateSpec};
use opacity::prob::{ratio, to_f64, Rational};
use opacity::regex::compile_regex;
use opacity::sched::{
    memoryless_joint, optimize_restricted, restricted_monitor, schedule_memoryless, schedule_restricted, sweep_memoryless,
    Direction, MemorylessScheduler, NpaBuilder, RestrictedScheduler, SchedError, DEFAULT_MAX_EVALUATIONS,
};

fn grid(n: i64) -> Vec<Vec<Rational>> {
    (0..=n).map(|k| vec![ratio(k, n)]).collect()
}

fn sigma_m_rpo() -> f64 {
    88192.0 / 146509.0
}

#[test]
fn memoryless_grid_follows_closed_form() {
    let b = counterexample_npa();
    let table = sweep_memoryless(&b.npa, &b.predicate, &b.observation, Measure::Rpo, &grid(100));
    assert_eq!(table.rows.len(), 101);
    for row in &table.rows {
        let v = row.value.as_ref().unwrap().to_f64();
        assert!((v - common::scheduler_rpo(to_f64(&row.params[0]))).abs() < 1e-9);
    }
}

#[test]
fn memoryless_minimum_sits_inside_the_grid() {
    let b = counterexample_npa();
    let table = sweep_memoryless(&b.npa, &b.predicate, &b.observation, Measure::Rpo, &grid(100));
    let min = table.argmin().unwrap();
    assert_eq!(min.params, vec![ratio(91, 100)]);
    let v = min.value.as_ref().unwrap().to_f64();
    assert!(v >= 0.88 && (v - 0.880754).abs() < 1e-6, "{v}");
    assert_eq!(table.argmax().unwrap().params, vec![ratio(0, 1)]);
    assert!(v - sigma_m_rpo() > 0.25);
}

#[test]
fn singleton_grid() {
    let b = counterexample_npa();
    let table = sweep_memoryless(&b.npa, &b.predicate, &b.observation, Measure::Lpo, &[vec![ratio(1, 3)]]);
    assert_eq!(table.rows.len(), 1);
    assert_eq!(table.rows[0].value, Ok(MeasureValue::Exact(ratio(0, 1))));
}

#[test]
fn invalid_grid_points_are_reported_per_row() {
    let b = counterexample_npa();
    let table = sweep_memoryless(&b.npa, &b.predicate, &b.observation, Measure::Rpo, &[vec![ratio(3, 2)], vec![ratio(1, 2)]]);
    assert!(table.rows[0].value.is_err());
    assert!(table.rows[1].value.is_ok());
}

#[test]
fn alternating_scheduler_beats_every_memoryless_one() {
    let b = counterexample_npa();
    let s = alternating_scheduler(&b).unwrap();
    let scheduled = schedule_restricted(&b.npa, &s).unwrap();
    let j = scheduled.joint(&b.predicate, &b.observation).unwrap();
    assert_eq!(*rpo(&j).value(), ratio(88192, 146509));
    let monitor_states = s.monitor().num_states();
    assert!(scheduled.fpfa.num_states() <= b.npa.num_states() * monitor_states);
}

#[test]
fn fixed_weight_endpoints() {
    let b = counterexample_npa();
    for (p, want) in [(1, ratio(1408, 1597)), (0, ratio(32, 33))] {
        let j = memoryless_joint(&b.npa, &[ratio(p, 1)], &b.predicate, &b.observation).unwrap();
        assert_eq!(*rpo(&j).value(), want);
    }
}

#[test]
fn constant_restricted_scheduler_matches_memoryless() {
    let b = counterexample_npa();
    let monitor = restricted_monitor(&b.predicate, &b.observation).unwrap();
    let q0 = b.npa.state_id("q0").unwrap();
    let w = vec![ratio(1, 3), ratio(2, 3)];
    let choice: BTreeMap<_, _> = (0..monitor.dfa.num_states()).map(|m| ((m, q0), w.clone())).collect();
    let restricted = RestrictedScheduler::new(&b.npa, monitor.dfa, choice).unwrap();
    let scheduled = schedule_restricted(&b.npa, &restricted).unwrap();
    let a = OpacityReport::from_joint(&scheduled.joint(&b.predicate, &b.observation).unwrap());
    let memoryless = schedule_memoryless(&b.npa, &fixed_scheduler(&b, ratio(1, 3)).unwrap()).unwrap();
    let m = OpacityReport::from_joint(&joint_distribution(&memoryless, &b.predicate, &b.observation).unwrap());
    assert_eq!(a, m);
}

#[test]
fn optimizer_finds_the_alternating_value() {
    let b = counterexample_npa();
    let (s, v) = optimize_restricted(
        &b.npa,
        &b.predicate,
        &b.observation,
        Measure::Rpo,
        Direction::Minimize,
        &ratio(1, 1),
        DEFAULT_MAX_EVALUATIONS,
    )
    .unwrap();
    let best = v.exact().cloned().unwrap();
    assert!(best <= ratio(88192, 146509), "{best}");
    let j = schedule_restricted(&b.npa, &s).unwrap().joint(&b.predicate, &b.observation).unwrap();
    assert_eq!(*rpo(&j).value(), best);
}

#[test]
fn lpo_stays_zero_under_every_scheduler() {
    let b = counterexample_npa();
    let (_, v) = optimize_restricted(
        &b.npa,
        &b.predicate,
        &b.observation,
        Measure::Lpo,
        Direction::Maximize,
        &ratio(1, 1),
        DEFAULT_MAX_EVALUATIONS,
    )
    .unwrap();
    assert_eq!(v, MeasureValue::Exact(ratio(0, 1)));
    let table = sweep_memoryless(&b.npa, &b.predicate, &b.observation, Measure::Lpo, &grid(20));
    assert!(table.rows.iter().all(|r| r.value == Ok(MeasureValue::Exact(ratio(0, 1)))));
}

#[test]
fn evaluation_cap_is_enforced() {
    let b = counterexample_npa();
    let r = optimize_restricted(&b.npa, &b.predicate, &b.observation, Measure::Rpo, Direction::Minimize, &ratio(1, 100), 10);
    assert!(matches!(r, Err(SchedError::Infeasible(_))));
}

/// `s` picks a fair or a biased coin, then stops.
fn coin() -> (opacity::sched::Npa, PredicateSpec, ObservationSpec) {
    let mut b = NpaBuilder::new("s");
    b.offer("s", &[("h", "H", ratio(1, 2)), ("t", "T", ratio(1, 2))], ratio(0, 1))
        .offer("s", &[("h", "H", ratio(1, 4)), ("t", "T", ratio(3, 4))], ratio(0, 1))
        .offer("H", &[("x", "E", ratio(1, 2)), ("y", "E", ratio(1, 2))], ratio(0, 1))
        .offer("T", &[("x", "E", ratio(1, 3)), ("y", "E", ratio(2, 3))], ratio(0, 1))
        .offer("E", &[], ratio(1, 1));
    let npa = b.build().unwrap();
    let host = npa.uniform_mix().unwrap();
    let lift = |p: &str| compile_regex(p, host.alphabet()).unwrap().lift(&host).unwrap();
    let phi = PredicateSpec::new("heads", lift("h .*"));
    let obs = ObservationSpec::new("second", vec![("x".into(), lift(". x")), ("y".into(), lift(". y"))]).unwrap();
    (npa, phi, obs)
}

#[test]
fn mixture_is_linear_on_trees() {
    let (npa, phi, obs) = coin();
    let pure = |w: i64| memoryless_joint(&npa, &[ratio(w, 1)], &phi, &obs).unwrap();
    let (one, zero) = (pure(1), pure(0));
    let w = ratio(2, 7);
    let mixed = memoryless_joint(&npa, &[w.clone()], &phi, &obs).unwrap();
    for (i, _) in mixed.labels().iter().enumerate() {
        for truth in [true, false] {
            let expect = &w * one.cell_at(i, truth) + (ratio(1, 1) - &w) * zero.cell_at(i, truth);
            assert_eq!(*mixed.cell_at(i, truth), expect);
        }
    }
}

#[test]
fn single_choice_npa_has_one_scheduler() {
    let mut b = NpaBuilder::new("s");
    b.offer("s", &[("a", "s", ratio(1, 2))], ratio(1, 2));
    let npa = b.build().unwrap();
    assert_eq!(MemorylessScheduler::param_count(&npa), 0);
    let host = npa.uniform_mix().unwrap();
    let lift = |p: &str| compile_regex(p, host.alphabet()).unwrap().lift(&host).unwrap();
    let phi = PredicateSpec::new("empty", lift(""));
    let obs = ObservationSpec::new("all", vec![("all".into(), lift("a*"))]).unwrap();
    let (s, v) = optimize_restricted(&npa, &phi, &obs, Measure::Lpo, Direction::Maximize, &ratio(1, 1), 10).unwrap();
    assert!(s.choice().is_empty());
    assert_eq!(v, MeasureValue::Exact(ratio(0, 1)));
    let j = schedule_restricted(&npa, &s).unwrap().joint(&phi, &obs).unwrap();
    assert_eq!(*lpo(&j).value(), ratio(0, 1));
}
