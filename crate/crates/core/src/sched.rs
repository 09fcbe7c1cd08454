//! Nondeterministic probabilistic automata and the schedulers that resolve them.

use std::collections::{BTreeMap, HashMap, VecDeque};

use num::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::automaton::{validate_fpfa, CoreError, Fpfa, StateId, SubDistribution, SubstochasticAutomaton, Triple};
use crate::dfa::{DfaError, Monitor, TransitionDfa};
use crate::measures::{joint_distribution, JointDistribution, Measure, MeasureError, MeasureValue};
use crate::observation::{ObservationClass, ObservationSpec, PredicateSpec};
use crate::prob::{fmt_rational, Rational};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SchedError {
    #[error("invalid automaton: {0}")]
    InvalidNpa(String),
    #[error("scheduler does not fit the automaton: {0}")]
    UnsupportedChoice(String),
    #[error("no choice given for state `{state}` under monitor state {monitor}")]
    MissingChoice { state: String, monitor: usize },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Dfa(#[from] DfaError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("search space too large: {0}")]
    Infeasible(String),
    #[error("resolution must be 1/N for a positive integer N")]
    InvalidResolution,
}

/// An automaton offering a finite set of full distributions at each state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Npa {
    alphabet: Vec<String>,
    states: Vec<String>,
    delta: Vec<Vec<SubDistribution>>,
    initial: StateId,
}

/// Builder for [`Npa`] using string identifiers.
#[derive(Clone, Debug, Default)]
pub struct NpaBuilder {
    alphabet: Vec<String>,
    states: Vec<String>,
    offers: Vec<(String, Vec<(String, String, Rational)>, Rational)>,
}

fn intern(list: &mut Vec<String>, name: &str) -> usize {
    match list.iter().position(|s| s == name) {
        Some(i) => i,
        None => {
            list.push(name.to_string());
            list.len() - 1
        }
    }
}

impl NpaBuilder {
    pub fn new(initial: &str) -> Self {
        let mut b = NpaBuilder::default();
        intern(&mut b.states, initial);
        b
    }

    /// Offers the distribution `moves` plus termination weight `term` at `state`.
    pub fn offer(&mut self, state: &str, moves: &[(&str, &str, Rational)], term: Rational) -> &mut Self {
        intern(&mut self.states, state);
        for (a, to, _) in moves {
            intern(&mut self.alphabet, a);
            intern(&mut self.states, to);
        }
        let moves = moves.iter().map(|(a, to, w)| (a.to_string(), to.to_string(), w.clone())).collect();
        self.offers.push((state.to_string(), moves, term));
        self
    }

    pub fn build(&self) -> Result<Npa, SchedError> {
        let mut delta = vec![Vec::new(); self.states.len()];
        for (state, moves, term) in &self.offers {
            let q = self.states.iter().position(|s| s == state).expect("interned");
            let mut d = SubDistribution::new();
            for (a, to, w) in moves {
                if !w.is_positive() {
                    return Err(SchedError::InvalidNpa(format!("non-positive weight at `{state}`")));
                }
                let a = self.alphabet.iter().position(|x| x == a).expect("interned");
                let r = self.states.iter().position(|x| x == to).expect("interned");
                if d.weight(a, r).is_some() {
                    return Err(SchedError::InvalidNpa(format!("repeated move in a distribution of `{state}`")));
                }
                d.accumulate(a, r, w);
            }
            if term.is_negative() {
                return Err(SchedError::InvalidNpa(format!("negative termination at `{state}`")));
            }
            d.accumulate_term(term);
            if !d.mass().is_one() {
                return Err(SchedError::InvalidNpa(format!(
                    "distribution at `{state}` has mass {}",
                    fmt_rational(&d.mass())
                )));
            }
            delta[q].push(d);
        }
        if let Some(q) = delta.iter().position(|d| d.is_empty()) {
            return Err(SchedError::InvalidNpa(format!("state `{}` offers nothing", self.states[q])));
        }
        Ok(Npa { alphabet: self.alphabet.clone(), states: self.states.clone(), delta, initial: 0 })
    }
}

impl Npa {
    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn offered(&self, q: StateId) -> &[SubDistribution] {
        &self.delta[q]
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name)
    }

    /// The equal-weight mixture: an FPFA whose support is every offered move.
    ///
    /// Predicates and observations of the NPA are written against its triples.
    pub fn uniform_mix(&self) -> Result<Fpfa, SchedError> {
        let choice = self.delta.iter().map(|d| vec![Rational::new(1.into(), d.len().into()); d.len()]).collect();
        schedule_memoryless(self, &MemorylessScheduler::new(self, choice)?)
    }

    fn mix(&self, q: StateId, weights: &[Rational], mut target: impl FnMut(&Triple) -> Result<StateId, SchedError>) -> Result<SubDistribution, SchedError> {
        let mut out = SubDistribution::new();
        for (w, d) in weights.iter().zip(&self.delta[q]) {
            if w.is_zero() {
                continue;
            }
            for (a, r, p) in d.moves() {
                let id = target(&Triple::new(q, a, r))?;
                out.accumulate(a, id, &(w * p.value()));
            }
            out.accumulate_term(&(w * d.term().value()));
        }
        Ok(out)
    }
}

fn check_weights(npa: &Npa, q: StateId, w: &[Rational]) -> Result<(), SchedError> {
    let name = &npa.states[q];
    if w.len() != npa.delta[q].len() {
        return Err(SchedError::UnsupportedChoice(format!(
            "`{name}` offers {} distributions, scheduler weighs {}",
            npa.delta[q].len(),
            w.len()
        )));
    }
    if w.iter().any(|x| x.is_negative()) || !w.iter().sum::<Rational>().is_one() {
        return Err(SchedError::UnsupportedChoice(format!("weights at `{name}` are not a distribution")));
    }
    Ok(())
}

/// Per-state weights over the offered distributions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemorylessScheduler {
    choice: Vec<Vec<Rational>>,
}

impl MemorylessScheduler {
    pub fn new(npa: &Npa, choice: Vec<Vec<Rational>>) -> Result<Self, SchedError> {
        if choice.len() != npa.num_states() {
            return Err(SchedError::UnsupportedChoice("one weight vector per state is required".into()));
        }
        for (q, w) in choice.iter().enumerate() {
            check_weights(npa, q, w)?;
        }
        Ok(MemorylessScheduler { choice })
    }

    /// Reads weights from a flat vector: for each state offering `m > 1`
    /// distributions, in state order, `m - 1` weights with the last implied.
    pub fn from_params(npa: &Npa, params: &[Rational]) -> Result<Self, SchedError> {
        let mut it = params.iter();
        let mut choice = Vec::new();
        for q in 0..npa.num_states() {
            let m = npa.delta[q].len();
            let mut w: Vec<Rational> = Vec::with_capacity(m);
            for _ in 1..m {
                let p = it.next().ok_or_else(|| SchedError::UnsupportedChoice("too few parameters".into()))?;
                w.push(p.clone());
            }
            let rest = Rational::one() - w.iter().sum::<Rational>();
            w.push(rest);
            choice.push(w);
        }
        if it.next().is_some() {
            return Err(SchedError::UnsupportedChoice("too many parameters".into()));
        }
        Self::new(npa, choice)
    }

    /// Number of parameters [`MemorylessScheduler::from_params`] expects.
    pub fn param_count(npa: &Npa) -> usize {
        npa.delta.iter().map(|d| d.len() - 1).sum()
    }

    pub fn weights(&self, q: StateId) -> &[Rational] {
        &self.choice[q]
    }
}

pub fn schedule_memoryless(npa: &Npa, s: &MemorylessScheduler) -> Result<Fpfa, SchedError> {
    let mut delta = Vec::with_capacity(npa.num_states());
    for q in 0..npa.num_states() {
        check_weights(npa, q, &s.choice[q])?;
        delta.push(npa.mix(q, &s.choice[q], |t| Ok(t.dst))?);
    }
    let sa = SubstochasticAutomaton::from_parts(npa.alphabet.clone(), npa.states.clone(), delta, npa.initial);
    Ok(validate_fpfa(sa)?)
}

/// Scheduler whose choice depends on the system state and a monitor state.
#[derive(Clone, Debug)]
pub struct RestrictedScheduler {
    monitor: TransitionDfa,
    choice: BTreeMap<(usize, StateId), Vec<Rational>>,
}

impl RestrictedScheduler {
    /// `choice` maps `(monitor state, system state)` to weights; states offering a
    /// single distribution may be omitted.
    pub fn new(npa: &Npa, monitor: TransitionDfa, choice: BTreeMap<(usize, StateId), Vec<Rational>>) -> Result<Self, SchedError> {
        for (&(m, q), w) in &choice {
            if m >= monitor.num_states() || q >= npa.num_states() {
                return Err(SchedError::UnsupportedChoice(format!("pair ({m}, {q}) is out of range")));
            }
            check_weights(npa, q, w)?;
        }
        Ok(RestrictedScheduler { monitor, choice })
    }

    pub fn monitor(&self) -> &TransitionDfa {
        &self.monitor
    }

    pub fn choice(&self) -> &BTreeMap<(usize, StateId), Vec<Rational>> {
        &self.choice
    }

    fn weights(&self, npa: &Npa, m: usize, q: StateId) -> Result<Vec<Rational>, SchedError> {
        match self.choice.get(&(m, q)) {
            Some(w) => Ok(w.clone()),
            None if npa.delta[q].len() == 1 => Ok(vec![Rational::one()]),
            None => Err(SchedError::MissingChoice { state: npa.states[q].clone(), monitor: m }),
        }
    }
}

/// The monitor tracking a predicate and every observation class.
pub fn restricted_monitor(phi: &PredicateSpec, obs: &ObservationSpec) -> Result<Monitor, DfaError> {
    let mut dfas = vec![&phi.phi];
    dfas.extend(obs.classes().iter().map(|c| &c.dfa));
    TransitionDfa::product_with(&dfas, |f| f[0])
}

/// A scheduled FPFA whose states project to NPA states through `origin`.
#[derive(Clone, Debug)]
pub struct ScheduledNpa {
    pub fpfa: Fpfa,
    pub origin: Vec<StateId>,
}

impl ScheduledNpa {
    pub fn predicate(&self, phi: &PredicateSpec) -> Result<PredicateSpec, DfaError> {
        Ok(PredicateSpec::new(phi.name.clone(), phi.phi.pullback(&self.fpfa, &self.origin)?))
    }

    pub fn observation(&self, obs: &ObservationSpec) -> Result<ObservationSpec, SchedError> {
        let classes = obs
            .classes()
            .iter()
            .map(|ObservationClass { label, dfa }| Ok((label.clone(), dfa.pullback(&self.fpfa, &self.origin)?)))
            .collect::<Result<Vec<_>, DfaError>>()?;
        Ok(ObservationSpec::new(obs.name.clone(), classes)?)
    }

    pub fn joint(&self, phi: &PredicateSpec, obs: &ObservationSpec) -> Result<JointDistribution, SchedError> {
        Ok(joint_distribution(&self.fpfa, &self.predicate(phi)?, &self.observation(obs)?)?)
    }
}

pub fn schedule_restricted(npa: &Npa, s: &RestrictedScheduler) -> Result<ScheduledNpa, SchedError> {
    let init = (npa.initial, s.monitor.initial());
    let mut pairs = vec![init];
    let mut ids = HashMap::from([(init, 0usize)]);
    let mut delta = Vec::new();
    let mut i = 0;
    while i < pairs.len() {
        let (q, m) = pairs[i];
        let weights = s.weights(npa, m, q)?;
        let d = npa.mix(q, &weights, |t| {
            let m2 = s.monitor.step(m, t).ok_or_else(|| {
                DfaError::AlphabetMismatch(format!("monitor cannot read a move of `{}`", npa.states[t.src]))
            })?;
            let key = (t.dst, m2);
            Ok(*ids.entry(key).or_insert_with(|| {
                pairs.push(key);
                pairs.len() - 1
            }))
        })?;
        delta.push(d);
        i += 1;
    }
    let names = pairs.iter().map(|&(q, m)| format!("{}|{m}", npa.states[q])).collect();
    let origin = pairs.iter().map(|&(q, _)| q).collect();
    let sa = SubstochasticAutomaton::from_parts(npa.alphabet.clone(), names, delta, 0);
    Ok(ScheduledNpa { fpfa: validate_fpfa(sa)?, origin })
}

/// One evaluated grid point.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub params: Vec<Rational>,
    pub value: Result<MeasureValue, String>,
}

#[derive(Clone, Debug)]
pub struct SweepTable {
    pub measure: Measure,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    fn extreme(&self, better: impl Fn(f64, f64) -> bool) -> Option<&SweepRow> {
        let mut best: Option<&SweepRow> = None;
        for row in &self.rows {
            let Ok(v) = &row.value else { continue };
            if best.is_none_or(|b| better(v.to_f64(), b.value.as_ref().expect("kept only ok rows").to_f64())) {
                best = Some(row);
            }
        }
        best
    }

    pub fn argmin(&self) -> Option<&SweepRow> {
        self.extreme(|a, b| a < b)
    }

    pub fn argmax(&self) -> Option<&SweepRow> {
        self.extreme(|a, b| a > b)
    }
}

/// Evaluates `measure` for the memoryless scheduler of every grid point.
pub fn sweep_memoryless(
    npa: &Npa,
    phi: &PredicateSpec,
    obs: &ObservationSpec,
    measure: Measure,
    grid: &[Vec<Rational>],
) -> SweepTable {
    let rows = grid
        .par_iter()
        .map(|params| {
            let value = MemorylessScheduler::from_params(npa, params)
                .and_then(|s| schedule_memoryless(npa, &s))
                .and_then(|a| Ok(joint_distribution(&a, phi, obs)?))
                .map(|j| measure.evaluate(&j))
                .map_err(|e| e.to_string());
            SweepRow { params: params.clone(), value }
        })
        .collect();
    SweepTable { measure, rows }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

/// Default cap on the number of schedulers [`optimize_restricted`] evaluates.
pub const DEFAULT_MAX_EVALUATIONS: usize = 100_000;

/// All weight vectors of length `m` whose entries are multiples of `1/n`.
fn simplex(m: usize, n: u64) -> Vec<Vec<Rational>> {
    fn rec(m: usize, left: u64, n: u64, prefix: &mut Vec<u64>, out: &mut Vec<Vec<Rational>>) {
        if m == 1 {
            prefix.push(left);
            out.push(prefix.iter().map(|&k| Rational::new(k.into(), n.into())).collect());
            prefix.pop();
            return;
        }
        for k in (0..=left).rev() {
            prefix.push(k);
            rec(m - 1, left - k, n, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, n, n, &mut Vec::new(), &mut out);
    out
}

/// Grid search over restricted schedulers; the best point found is returned,
/// with no claim of global optimality.
pub fn optimize_restricted(
    npa: &Npa,
    phi: &PredicateSpec,
    obs: &ObservationSpec,
    measure: Measure,
    direction: Direction,
    resolution: &Rational,
    max_evaluations: usize,
) -> Result<(RestrictedScheduler, MeasureValue), SchedError> {
    if !resolution.is_positive() || !resolution.numer().is_one() {
        return Err(SchedError::InvalidResolution);
    }
    let steps = resolution.denom().to_u64().ok_or(SchedError::InvalidResolution)?;
    let monitor = restricted_monitor(phi, obs)?.dfa;

    // pairs reachable under some scheduler
    let mut seen = HashMap::from([((npa.initial, monitor.initial()), ())]);
    let mut queue = VecDeque::from([(npa.initial, monitor.initial())]);
    let mut choice_pairs = Vec::new();
    while let Some((q, m)) = queue.pop_front() {
        if npa.delta[q].len() > 1 {
            choice_pairs.push((m, q));
        }
        for d in &npa.delta[q] {
            for (a, r, _) in d.moves() {
                let m2 = monitor.step(m, &Triple::new(q, a, r)).ok_or_else(|| {
                    DfaError::AlphabetMismatch("monitor does not read the automaton's moves".into())
                })?;
                if seen.insert((r, m2), ()).is_none() {
                    queue.push_back((r, m2));
                }
            }
        }
    }
    choice_pairs.sort_unstable();

    let options: Vec<Vec<Vec<Rational>>> =
        choice_pairs.iter().map(|&(_, q)| simplex(npa.delta[q].len(), steps)).collect();
    let mut total: usize = 1;
    for o in &options {
        total = total
            .checked_mul(o.len())
            .filter(|&t| t <= max_evaluations)
            .ok_or_else(|| SchedError::Infeasible(format!("more than {max_evaluations} schedulers over {} choice pairs", choice_pairs.len())))?;
    }

    let decode = |mut index: usize| -> BTreeMap<(usize, StateId), Vec<Rational>> {
        let mut choice = BTreeMap::new();
        for (pair, opts) in choice_pairs.iter().zip(&options).rev() {
            choice.insert(*pair, opts[index % opts.len()].clone());
            index /= opts.len();
        }
        choice
    };
    let results: Vec<(usize, MeasureValue)> = (0..total)
        .into_par_iter()
        .filter_map(|index| {
            let s = RestrictedScheduler { monitor: monitor.clone(), choice: decode(index) };
            let j = schedule_restricted(npa, &s).ok()?.joint(phi, obs).ok()?;
            Some((index, measure.evaluate(&j)))
        })
        .collect();
    let better = |a: f64, b: f64| match direction {
        Direction::Minimize => a < b,
        Direction::Maximize => a > b,
    };
    let mut best: Option<&(usize, MeasureValue)> = None;
    for r in &results {
        if best.is_none_or(|b| better(r.1.to_f64(), b.1.to_f64())) {
            best = Some(r);
        }
    }
    let (index, value) = best.ok_or_else(|| SchedError::Infeasible("no grid point yields a valid FPFA".into()))?;
    Ok((RestrictedScheduler { monitor, choice: decode(*index) }, value.clone()))
}

/// Joint distribution under a memoryless scheduler given by flat parameters.
pub fn memoryless_joint(
    npa: &Npa,
    params: &[Rational],
    phi: &PredicateSpec,
    obs: &ObservationSpec,
) -> Result<JointDistribution, SchedError> {
    let s = MemorylessScheduler::from_params(npa, params)?;
    Ok(joint_distribution(&schedule_memoryless(npa, &s)?, phi, obs)?)
}
