//! Generators for the bundled example systems.
//!
//! Each generator returns a [`ModelBundle`]: a validated FPFA with the predicate
//! and observation it is analysed under.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::automaton::{validate_fpfa, validate_sa, CoreError, Fpfa, RawAutomaton, SubstochasticAutomaton};
use crate::dfa::DfaError;
use crate::measures::{joint_distribution, JointDistribution, MeasureError, OpacityReport};
use crate::observation::{enumerate_projection_observables, ObservationSpec, PredicateSpec};
use crate::prob::Rational;
use crate::regex::{compile_regex, RegexError};

mod abstract_tables;
mod card;
mod counterexample;
mod crowds;
mod dining;
mod ni;
mod programs;
mod sale;

pub use abstract_tables::{abstract_joint, abstract_system};
pub use card::debit_card;
pub use counterexample::{alternating_scheduler, counterexample_npa, fixed_scheduler, NpaBundle};
pub use crowds::{crowds, crowds_with_initiator};
pub use dining::{dining, dining_payer};
pub use ni::{ni_examples, non_interference};
pub use programs::{program_p1, program_p2};
pub use sale::sale;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Regex(#[from] RegexError),
    #[error(transparent)]
    Dfa(#[from] DfaError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown abstract system {0} (expected 1..7)")]
    UnknownId(u32),
}

/// A system together with the predicate and observation it is analysed under.
#[derive(Clone, Debug)]
pub struct ModelBundle {
    pub name: String,
    pub system: Fpfa,
    pub predicate: PredicateSpec,
    pub observation: ObservationSpec,
    pub params: BTreeMap<String, Rational>,
}

impl ModelBundle {
    pub fn joint(&self) -> Result<JointDistribution, MeasureError> {
        joint_distribution(&self.system, &self.predicate, &self.observation)
    }

    pub fn report(&self) -> Result<OpacityReport, MeasureError> {
        Ok(OpacityReport::from_joint(&self.joint()?))
    }
}

pub(crate) fn fpfa(raw: &RawAutomaton) -> Result<Fpfa, ModelError> {
    Ok(validate_fpfa(validate_sa(raw)?)?)
}

pub(crate) fn regex_predicate(sa: &SubstochasticAutomaton, name: &str, pattern: &str) -> Result<PredicateSpec, ModelError> {
    let dfa = compile_regex(pattern, sa.alphabet())?.lift(sa)?;
    Ok(PredicateSpec::new(name, dfa))
}

pub(crate) fn regex_observation(
    sa: &SubstochasticAutomaton,
    name: &str,
    classes: &[(&str, &str)],
) -> Result<ObservationSpec, ModelError> {
    let mut out = Vec::new();
    for (label, pattern) in classes {
        out.push((label.to_string(), compile_regex(pattern, sa.alphabet())?.lift(sa)?));
    }
    Ok(ObservationSpec::new(name, out)?)
}

pub(crate) fn projection_observation(sa: &SubstochasticAutomaton, visible: &[&str]) -> Result<ObservationSpec, ModelError> {
    let ids = visible
        .iter()
        .map(|v| sa.action_id(v).ok_or_else(|| ModelError::InvalidParameter(format!("unknown action {v}"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(enumerate_projection_observables(sa, &ids)?)
}

pub(crate) fn check_probability(name: &str, p: &Rational) -> Result<(), ModelError> {
    use num::{One, Signed};
    if p.is_negative() || *p > Rational::one() {
        return Err(ModelError::InvalidParameter(format!("{name} must lie in [0, 1]")));
    }
    Ok(())
}
