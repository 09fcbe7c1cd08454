//! Independent cross-checks: seeded Monte-Carlo sampling and exhaustive run enumeration.

use num::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::automaton::{ActionId, CompleteRun, Fpfa, StateId, SubstochasticAutomaton};
use crate::measures::{JointDistribution, MeasureError};
use crate::observation::{ObservationSpec, PredicateSpec};
use crate::prob::{to_f64, Probability, Rational};

/// Generator used by [`estimate_joint`]; substream `w` is `set_stream(w)`.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Number of independent substreams the samples are split over.
pub const SUBSTREAMS: u64 = 16;

pub const DEFAULT_MAX_LEN: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum OracleError {
    #[error("invalid sampling configuration: {0}")]
    InvalidConfig(String),
    #[error("run exceeded {0} steps")]
    LengthCap(usize),
    #[error("the automaton has a reachable cycle")]
    Cyclic,
    #[error("run `{0}` belongs to no observation class")]
    Unclassified(String),
    #[error("run `{0}` belongs to several observation classes")]
    Overlap(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleConfig {
    pub n_samples: u64,
    pub seed: u64,
    pub max_len: usize,
}

impl SampleConfig {
    pub fn new(n_samples: u64, seed: u64) -> Result<Self, OracleError> {
        Self::with_max_len(n_samples, seed, DEFAULT_MAX_LEN)
    }

    pub fn with_max_len(n_samples: u64, seed: u64, max_len: usize) -> Result<Self, OracleError> {
        if n_samples == 0 {
            return Err(OracleError::InvalidConfig("n_samples must be at least 1".into()));
        }
        if max_len == 0 {
            return Err(OracleError::InvalidConfig("max_len must be at least 1".into()));
        }
        Ok(SampleConfig { n_samples, seed, max_len })
    }
}

/// Cumulative per-state tables for drawing successors.
pub struct Sampler<'a> {
    sa: &'a SubstochasticAutomaton,
    tables: Vec<Vec<(f64, Option<(ActionId, StateId)>)>>,
}

impl<'a> Sampler<'a> {
    pub fn new(a: &'a Fpfa) -> Self {
        let tables = (0..a.num_states())
            .map(|q| {
                let d = a.dist(q);
                let mut acc = 0.0;
                let mut row = Vec::with_capacity(d.num_moves() + 1);
                for (act, r, w) in d.moves() {
                    acc += w.to_f64();
                    row.push((acc, Some((act, r))));
                }
                if d.terminates() {
                    acc += d.term().to_f64();
                    row.push((acc, None));
                }
                row
            })
            .collect();
        Sampler { sa: a.as_sa(), tables }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, max_len: usize) -> Result<CompleteRun, OracleError> {
        let mut run = CompleteRun::new(self.sa.initial());
        let mut q = self.sa.initial();
        loop {
            let row = &self.tables[q];
            let total = row.last().map_or(0.0, |e| e.0);
            let u = rng.random::<f64>() * total;
            let pick = row.iter().find(|e| u < e.0).unwrap_or_else(|| row.last().expect("stochastic state"));
            match pick.1 {
                None => return Ok(run),
                Some((a, r)) => {
                    if run.len() >= max_len {
                        return Err(OracleError::LengthCap(max_len));
                    }
                    run.push(a, r);
                    q = r;
                }
            }
        }
    }
}

/// Draws one complete run.
pub fn sample_run<R: Rng + ?Sized>(a: &Fpfa, rng: &mut R, max_len: usize) -> Result<CompleteRun, OracleError> {
    Sampler::new(a).sample(rng, max_len)
}

/// `(class index, predicate holds)` of a run.
fn classify(sa: &SubstochasticAutomaton, run: &CompleteRun, phi: &PredicateSpec, obs: &ObservationSpec) -> Result<(usize, bool), OracleError> {
    let mut hit = None;
    for (i, class) in obs.classes().iter().enumerate() {
        if class.dfa.accepts(run.triples()) {
            if hit.is_some() {
                return Err(OracleError::Overlap(run.display(sa)));
            }
            hit = Some(i);
        }
    }
    let i = hit.ok_or_else(|| OracleError::Unclassified(run.display(sa)))?;
    Ok((i, phi.phi.accepts(run.triples())))
}

/// Empirical joint from `cfg.n_samples` runs; cells have denominator `n_samples`.
pub fn estimate_joint(a: &Fpfa, phi: &PredicateSpec, obs: &ObservationSpec, cfg: &SampleConfig) -> Result<JointDistribution, OracleError> {
    let sampler = Sampler::new(a);
    let k = obs.classes().len();
    let counts: Vec<Vec<[u64; 2]>> = (0..SUBSTREAMS)
        .into_par_iter()
        .map(|w| {
            let share = cfg.n_samples / SUBSTREAMS + u64::from(w < cfg.n_samples % SUBSTREAMS);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(w);
            let mut local = vec![[0u64; 2]; k];
            for _ in 0..share {
                let run = sampler.sample(&mut rng, cfg.max_len)?;
                let (i, truth) = classify(a, &run, phi, obs)?;
                local[i][usize::from(truth)] += 1;
            }
            Ok(local)
        })
        .collect::<Result<_, OracleError>>()?;
    let n = Rational::from_integer(cfg.n_samples.into());
    let cells = obs
        .classes()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let total = |t: usize| counts.iter().map(|local| local[i][t]).sum::<u64>();
            let t = Rational::from_integer(total(1).into()) / &n;
            let f = Rational::from_integer(total(0).into()) / &n;
            (c.label.clone(), t, f)
        })
        .collect();
    Ok(JointDistribution::new(cells)?)
}

/// Every complete run of an acyclic automaton with its probability.
pub fn enumerate_runs(a: &Fpfa) -> Result<Vec<(CompleteRun, Probability)>, OracleError> {
    if !a.is_acyclic() {
        return Err(OracleError::Cyclic);
    }
    let mut out = Vec::new();
    let mut stack = vec![(CompleteRun::new(a.initial()), Rational::from_integer(1.into()))];
    while let Some((run, p)) = stack.pop() {
        let q = run.last_state();
        let d = a.dist(q);
        if d.terminates() {
            let v = &p * d.term().value();
            out.push((run.clone(), Probability::new(v).expect("product of probabilities")));
        }
        for (act, r, w) in d.moves() {
            let mut next = run.clone();
            next.push(act, r);
            stack.push((next, &p * w.value()));
        }
    }
    out.sort_by(|x, y| x.0.cmp(&y.0));
    Ok(out)
}

/// Exact joint by classifying every complete run.
pub fn enumerate_joint(a: &Fpfa, phi: &PredicateSpec, obs: &ObservationSpec) -> Result<JointDistribution, OracleError> {
    let mut cells = vec![(Rational::zero(), Rational::zero()); obs.classes().len()];
    for (run, p) in enumerate_runs(a)? {
        let (i, truth) = classify(a, &run, phi, obs)?;
        let cell = if truth { &mut cells[i].0 } else { &mut cells[i].1 };
        *cell += p.value();
    }
    let cells = obs.classes().iter().zip(cells).map(|(c, (t, f))| (c.label.clone(), t, f)).collect();
    Ok(JointDistribution::new(cells)?)
}

/// Largest absolute difference between corresponding cells.
pub fn max_cell_deviation(a: &JointDistribution, b: &JointDistribution) -> f64 {
    let mut worst = 0.0f64;
    for (i, label) in a.labels().iter().enumerate() {
        for truth in [true, false] {
            let other = b.cell(label, truth).map_or(f64::INFINITY, to_f64);
            worst = worst.max((to_f64(a.cell_at(i, truth)) - other).abs());
        }
    }
    worst
}
