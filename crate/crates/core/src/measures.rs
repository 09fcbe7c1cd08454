//! Joint distribution of (predicate, observable) and the four opacity measures.

use std::fmt;
use std::str::FromStr;

use num::{One, Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::SolveMode;
use crate::automaton::{Fpfa, StateId, SubstochasticAutomaton};
use crate::dfa::{DfaError, TransitionDfa};
use crate::observation::{ObservationSpec, PredicateSpec};
use crate::prob::{fmt_rational, to_f64, Probability, Rational};
use crate::product::{language_probability_with, prune, sync_product, ProductError};

/// Tolerance on the total mass of a joint built in floating-point mode.
pub const FLOAT_MASS_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum MeasureError {
    #[error("observation classes do not partition the runs: total mass {0}")]
    NotAPartition(String),
    #[error("negative cell for label `{0}`")]
    NegativeCell(String),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("class `{0}` has probability zero")]
    ZeroClass(String),
    #[error(transparent)]
    Product(#[from] ProductError),
}

impl From<DfaError> for MeasureError {
    fn from(e: DfaError) -> Self {
        MeasureError::Product(ProductError::Dfa(e))
    }
}

/// `P(1_phi = truth, O = label)` for every label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointDistribution {
    labels: Vec<String>,
    // (phi holds, phi fails)
    cells: Vec<(Rational, Rational)>,
    exact: bool,
}

impl JointDistribution {
    /// Cells are `(label, P(phi, o), P(not phi, o))`; the total must be exactly one.
    pub fn new(cells: Vec<(String, Rational, Rational)>) -> Result<Self, MeasureError> {
        Self::assemble(cells, true)
    }

    /// Like [`JointDistribution::new`] but accepts a total within [`FLOAT_MASS_TOLERANCE`] of one.
    pub fn new_approximate(cells: Vec<(String, Rational, Rational)>) -> Result<Self, MeasureError> {
        Self::assemble(cells, false)
    }

    /// Builds a joint from class masses and conditional probabilities of the predicate.
    pub fn from_conditionals(classes: &[(&str, Rational, Rational)]) -> Result<Self, MeasureError> {
        let cells = classes
            .iter()
            .map(|(l, p_o, p_phi)| (l.to_string(), p_o * p_phi, p_o * (Rational::one() - p_phi)))
            .collect();
        Self::new(cells)
    }

    fn assemble(cells: Vec<(String, Rational, Rational)>, exact: bool) -> Result<Self, MeasureError> {
        let mut labels = Vec::with_capacity(cells.len());
        let mut values = Vec::with_capacity(cells.len());
        for (label, t, f) in cells {
            if labels.contains(&label) {
                return Err(MeasureError::DuplicateLabel(label));
            }
            if t.is_negative() || f.is_negative() {
                return Err(MeasureError::NegativeCell(label));
            }
            labels.push(label);
            values.push((t, f));
        }
        let total: Rational = values.iter().map(|(t, f)| t + f).sum();
        let ok = if exact { total.is_one() } else { (to_f64(&total) - 1.0).abs() <= FLOAT_MASS_TOLERANCE };
        if !ok {
            return Err(MeasureError::NotAPartition(fmt_rational(&total)));
        }
        Ok(JointDistribution { labels, cells: values, exact })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    fn index(&self, label: &str) -> Result<usize, MeasureError> {
        self.labels.iter().position(|l| l == label).ok_or_else(|| MeasureError::UnknownLabel(label.to_string()))
    }

    pub fn cell(&self, label: &str, truth: bool) -> Option<&Rational> {
        let i = self.index(label).ok()?;
        Some(self.cell_at(i, truth))
    }

    pub fn cell_at(&self, i: usize, truth: bool) -> &Rational {
        if truth {
            &self.cells[i].0
        } else {
            &self.cells[i].1
        }
    }

    /// `P(O = label_i)`.
    pub fn class_mass(&self, i: usize) -> Rational {
        &self.cells[i].0 + &self.cells[i].1
    }

    pub fn predicate_mass(&self) -> Rational {
        self.cells.iter().map(|(t, _)| t.clone()).sum()
    }

    /// The same table with the predicate negated.
    pub fn swapped(&self) -> Self {
        JointDistribution {
            labels: self.labels.clone(),
            cells: self.cells.iter().map(|(t, f)| (f.clone(), t.clone())).collect(),
            exact: self.exact,
        }
    }

    fn positive(&self) -> impl Iterator<Item = (usize, Rational)> + '_ {
        (0..self.len()).map(|i| (i, self.class_mass(i))).filter(|(_, m)| m.is_positive())
    }

    /// Labels that were declared but carry no probability.
    pub fn empty_labels(&self) -> Vec<&str> {
        (0..self.len()).filter(|&i| self.class_mass(i).is_zero()).map(|i| self.labels[i].as_str()).collect()
    }
}

/// Exact joint via one double product per class and polarity.
pub fn joint_distribution(a: &Fpfa, phi: &PredicateSpec, obs: &ObservationSpec) -> Result<JointDistribution, MeasureError> {
    joint_distribution_with(a, phi, obs, SolveMode::Exact)
}

pub fn joint_distribution_with(
    a: &Fpfa,
    phi: &PredicateSpec,
    obs: &ObservationSpec,
    mode: SolveMode,
) -> Result<JointDistribution, MeasureError> {
    let positive = restrict(a, &phi.phi)?;
    let negative = restrict(a, &phi.phi.complement())?;
    let cells: Result<Vec<_>, MeasureError> = obs
        .classes()
        .par_iter()
        .map(|class| {
            let t = cell_probability(&positive, &class.dfa, mode)?;
            let f = cell_probability(&negative, &class.dfa, mode)?;
            Ok((class.label.clone(), t, f))
        })
        .collect();
    match mode {
        SolveMode::Exact => JointDistribution::new(cells?),
        SolveMode::Float => JointDistribution::new_approximate(cells?),
    }
}

/// The pruned restriction of `a` to `k`, with the host state of every state.
struct Restriction {
    sa: SubstochasticAutomaton,
    origin: Vec<StateId>,
    empty: bool,
}

fn restrict(a: &SubstochasticAutomaton, k: &TransitionDfa) -> Result<Restriction, MeasureError> {
    let product = sync_product(a, k)?;
    let pruned = prune(&product.sa);
    let origin = pruned.kept.iter().map(|&i| product.states[i].sys).collect();
    let empty = pruned.is_empty();
    Ok(Restriction { sa: pruned.sa, origin, empty })
}

fn cell_probability(r: &Restriction, class: &TransitionDfa, mode: SolveMode) -> Result<Rational, MeasureError> {
    if r.empty {
        return Ok(Rational::zero());
    }
    let k = class.pullback(&r.sa, &r.origin)?;
    Ok(language_probability_with(&r.sa, &k, mode)?)
}

/// Mass of the classes entirely inside the predicate.
pub fn lpo(j: &JointDistribution) -> Probability {
    let v: Rational = j.positive().filter(|&(i, _)| j.cell_at(i, false).is_zero()).map(|(_, m)| m).sum();
    Probability::new(v).expect("sub-sum of a distribution")
}

pub fn lpso(j: &JointDistribution) -> Probability {
    let v = lpo(j).into_value() + lpo(&j.swapped()).into_value();
    Probability::new(v).expect("classes cannot be inside both the predicate and its complement")
}

/// Harmonic mean of `P(not phi | o)` weighted by `P(o)`; zero when a class leaks.
pub fn rpo(j: &JointDistribution) -> Probability {
    let mut inv = Rational::zero();
    for (i, m) in j.positive() {
        let f = j.cell_at(i, false);
        if f.is_zero() {
            return Probability::zero();
        }
        inv += &m * &m / f;
    }
    if inv.is_zero() {
        return Probability::zero();
    }
    Probability::new(Rational::one() / inv).expect("weighted harmonic mean of probabilities")
}

/// `k` when `r = 2^-k` exactly.
fn power_of_half(r: &Rational) -> Option<u64> {
    if !r.numer().is_one() {
        return None;
    }
    let d = r.denom();
    let bits = d.bits();
    (bits > 0 && d == &(num::BigInt::one() << (bits - 1))).then_some(bits - 1)
}

fn log2_rational(r: &Rational) -> f64 {
    let f = to_f64(r);
    if f.is_normal() {
        f.log2()
    } else {
        let (n, d) = (r.numer(), r.denom());
        let shift = |x: &num::BigInt| -> f64 {
            let extra = x.bits().saturating_sub(60);
            to_f64(&Rational::from_integer(x >> extra)).log2() + extra as f64
        };
        shift(n) - shift(d)
    }
}

/// `-1 / sum_o P(o) log2(1 - V(o))`; zero when a class is decided.
pub fn rpso(j: &JointDistribution) -> f64 {
    let mut exact = Rational::zero();
    let mut approx = 0.0f64;
    for (i, m) in j.positive() {
        let (t, f) = (j.cell_at(i, true), j.cell_at(i, false));
        let low = if t < f { t } else { f };
        if low.is_zero() {
            return 0.0;
        }
        let min_cond = low / &m;
        match power_of_half(&min_cond) {
            Some(k) => exact += &m * Rational::from_integer(k.into()),
            None => approx -= to_f64(&m) * log2_rational(&min_cond),
        }
    }
    if approx == 0.0 {
        if exact.is_zero() {
            return 0.0;
        }
        return to_f64(&(Rational::one() / exact));
    }
    1.0 / (to_f64(&exact) + approx)
}

pub fn is_opaque(j: &JointDistribution) -> bool {
    j.positive().all(|(i, _)| !j.cell_at(i, false).is_zero())
}

pub fn is_sym_opaque(j: &JointDistribution) -> bool {
    is_opaque(j) && is_opaque(&j.swapped())
}

fn binary_entropy(p: &Rational) -> f64 {
    if p.is_zero() || p.is_one() {
        return 0.0;
    }
    let q = Rational::one() - p;
    -(to_f64(p) * log2_rational(p)) - to_f64(&q) * log2_rational(&q)
}

/// `H(1_phi | O)` in bits.
pub fn conditional_entropy(j: &JointDistribution) -> f64 {
    j.positive().map(|(i, m)| to_f64(&m) * binary_entropy(&(j.cell_at(i, true) / &m))).sum()
}

pub fn class_vulnerability(j: &JointDistribution, label: &str) -> Result<Probability, MeasureError> {
    let i = j.index(label)?;
    let m = j.class_mass(i);
    if m.is_zero() {
        return Err(MeasureError::ZeroClass(label.to_string()));
    }
    let (t, f) = (j.cell_at(i, true), j.cell_at(i, false));
    let high = if t > f { t } else { f };
    Ok(Probability::new(high / m).expect("conditional probability"))
}

/// One of the four measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Measure {
    Lpo,
    Lpso,
    Rpo,
    Rpso,
}

impl Measure {
    pub const ALL: [Measure; 4] = [Measure::Lpo, Measure::Lpso, Measure::Rpo, Measure::Rpso];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Lpo => "lpo",
            Measure::Lpso => "lpso",
            Measure::Rpo => "rpo",
            Measure::Rpso => "rpso",
        }
    }

    pub fn evaluate(self, j: &JointDistribution) -> MeasureValue {
        match self {
            Measure::Lpo => MeasureValue::Exact(lpo(j).into_value()),
            Measure::Lpso => MeasureValue::Exact(lpso(j).into_value()),
            Measure::Rpo => MeasureValue::Exact(rpo(j).into_value()),
            Measure::Rpso => MeasureValue::Float(rpso(j)),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "lpo" => Ok(Measure::Lpo),
            "lpso" => Ok(Measure::Lpso),
            "rpo" => Ok(Measure::Rpo),
            "rpso" => Ok(Measure::Rpso),
            other => Err(format!("unknown measure `{other}` (expected lpo, lpso, rpo or rpso)")),
        }
    }
}

/// A measure value: exact for the rational measures, double for RPSO.
#[derive(Clone, Debug, PartialEq)]
pub enum MeasureValue {
    Exact(Rational),
    Float(f64),
}

impl MeasureValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            MeasureValue::Exact(r) => to_f64(r),
            MeasureValue::Float(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            MeasureValue::Exact(r) => Some(r),
            MeasureValue::Float(_) => None,
        }
    }
}

impl fmt::Display for MeasureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureValue::Exact(r) => f.write_str(&fmt_rational(r)),
            MeasureValue::Float(x) => f.write_str(&format_float(*x)),
        }
    }
}

/// Twelve significant digits, `.` separator, trailing zeros trimmed.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&magnitude) {
        return format!("{x:.11e}");
    }
    let decimals = (11 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Per-class figures reported next to the measures.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassDiagnostics {
    pub label: String,
    pub probability: Rational,
    pub phi_given: Option<Rational>,
    pub vulnerability: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OpacityReport {
    pub lpo: Probability,
    pub lpso: Probability,
    pub rpo: Probability,
    pub rpso: f64,
    pub opaque: bool,
    pub sym_opaque: bool,
    pub conditional_entropy: f64,
    pub classes: Vec<ClassDiagnostics>,
    pub warnings: Vec<String>,
}

impl OpacityReport {
    pub fn from_joint(j: &JointDistribution) -> Self {
        let classes = (0..j.len())
            .map(|i| {
                let m = j.class_mass(i);
                let (phi_given, vulnerability) = if m.is_zero() {
                    (None, None)
                } else {
                    let v = class_vulnerability(j, &j.labels()[i]).expect("positive class").into_value();
                    (Some(j.cell_at(i, true) / &m), Some(v))
                };
                ClassDiagnostics { label: j.labels()[i].clone(), probability: m, phi_given, vulnerability }
            })
            .collect();
        let warnings = j
            .empty_labels()
            .into_iter()
            .map(|l| format!("observable `{l}` has probability zero and is ignored"))
            .collect();
        OpacityReport {
            lpo: lpo(j),
            lpso: lpso(j),
            rpo: rpo(j),
            rpso: rpso(j),
            opaque: is_opaque(j),
            sym_opaque: is_sym_opaque(j),
            conditional_entropy: conditional_entropy(j),
            classes,
            warnings,
        }
    }

    pub fn value(&self, m: Measure) -> MeasureValue {
        match m {
            Measure::Lpo => MeasureValue::Exact(self.lpo.value().clone()),
            Measure::Lpso => MeasureValue::Exact(self.lpso.value().clone()),
            Measure::Rpo => MeasureValue::Exact(self.rpo.value().clone()),
            Measure::Rpso => MeasureValue::Float(self.rpso),
        }
    }
}

pub fn report(a: &Fpfa, phi: &PredicateSpec, obs: &ObservationSpec) -> Result<OpacityReport, MeasureError> {
    Ok(OpacityReport::from_joint(&joint_distribution(a, phi, obs)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::ratio;

    fn uniform(conds: &[(i64, i64)]) -> JointDistribution {
        let n = conds.len() as i64;
        let labels: Vec<String> = (1..=conds.len()).map(|i| format!("o{i}")).collect();
        let rows: Vec<(&str, Rational, Rational)> =
            labels.iter().zip(conds).map(|(l, &(p, q))| (l.as_str(), ratio(1, n), ratio(p, q))).collect();
        JointDistribution::from_conditionals(&rows).unwrap()
    }

    #[test]
    fn joint_must_sum_to_one() {
        let err = JointDistribution::new(vec![("a".into(), ratio(1, 2), ratio(1, 4))]).unwrap_err();
        assert_eq!(err, MeasureError::NotAPartition("3/4".into()));
        let err = JointDistribution::new(vec![("a".into(), ratio(1, 2), ratio(0, 1)), ("a".into(), ratio(1, 2), ratio(0, 1))]);
        assert_eq!(err.unwrap_err(), MeasureError::DuplicateLabel("a".into()));
    }

    #[test]
    fn balanced_classes() {
        let j = uniform(&[(1, 2); 4]);
        assert_eq!(lpo(&j), Probability::zero());
        assert_eq!(lpso(&j), Probability::zero());
        assert_eq!(rpo(&j), Probability::ratio(1, 2));
        assert_eq!(rpso(&j), 1.0);
        assert!(is_opaque(&j) && is_sym_opaque(&j));
        assert!((conditional_entropy(&j) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_decided_class() {
        let j = uniform(&[(1, 1), (1, 2), (1, 2), (1, 2)]);
        assert_eq!(lpo(&j), Probability::ratio(1, 4));
        assert_eq!(rpo(&j), Probability::zero());
        assert_eq!(rpso(&j), 0.0);
        assert!(!is_opaque(&j));
        assert!((conditional_entropy(&j) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn extreme_predicates() {
        let all = JointDistribution::new(vec![("ε".into(), ratio(1, 1), ratio(0, 1))]).unwrap();
        assert_eq!(lpo(&all), Probability::one());
        assert_eq!(lpso(&all), Probability::one());
        assert_eq!(conditional_entropy(&all), 0.0);
        let none = all.swapped();
        assert_eq!(rpo(&none), Probability::one());
        assert_eq!(lpo(&none), Probability::zero());
    }

    #[test]
    fn mixed_classes_have_no_liberal_leak() {
        let j = uniform(&[(1, 3), (2, 5), (7, 9)]);
        assert_eq!(lpso(&j), Probability::zero());
        assert!(rpso(&j) > 0.0 && rpso(&j) < 1.0);
    }

    #[test]
    fn vulnerability() {
        let j = uniform(&[(1, 4), (1, 2), (1, 1)]);
        assert_eq!(class_vulnerability(&j, "o1").unwrap(), Probability::ratio(3, 4));
        assert_eq!(class_vulnerability(&j, "o2").unwrap(), Probability::ratio(1, 2));
        assert_eq!(class_vulnerability(&j, "o3").unwrap(), Probability::one());
        assert!(matches!(class_vulnerability(&j, "nope"), Err(MeasureError::UnknownLabel(_))));
        let z = JointDistribution::new(vec![("a".into(), ratio(1, 1), ratio(0, 1)), ("b".into(), ratio(0, 1), ratio(0, 1))]).unwrap();
        assert_eq!(class_vulnerability(&z, "b"), Err(MeasureError::ZeroClass("b".into())));
    }

    #[test]
    fn empty_classes_are_reported_not_weighted() {
        let j = JointDistribution::new(vec![
            ("a".into(), ratio(1, 2), ratio(1, 2)),
            ("b".into(), ratio(0, 1), ratio(0, 1)),
        ])
        .unwrap();
        let r = OpacityReport::from_joint(&j);
        assert_eq!(r.rpo, Probability::ratio(1, 2));
        assert_eq!(r.rpso, 1.0);
        assert_eq!(r.warnings.len(), 1);
        assert!(r.classes[1].phi_given.is_none());
    }

    #[test]
    fn power_of_half_detection() {
        assert_eq!(power_of_half(&ratio(1, 2)), Some(1));
        assert_eq!(power_of_half(&ratio(1, 128)), Some(7));
        assert_eq!(power_of_half(&ratio(1, 3)), None);
        assert_eq!(power_of_half(&ratio(3, 8)), None);
        assert_eq!(power_of_half(&ratio(1, 1)), Some(0));
    }

    #[test]
    fn float_formatting() {
        assert_eq!(format_float(1.0), "1");
        assert_eq!(format_float(0.5), "0.5");
        assert_eq!(format_float(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_float(0.880754), "0.880754");
        assert_eq!(format_float(123.456), "123.456");
    }

    #[test]
    fn measure_names_round_trip() {
        for m in Measure::ALL {
            assert_eq!(m.name().parse::<Measure>().unwrap(), m);
        }
        assert!("foo".parse::<Measure>().is_err());
    }
}
