//! The linear system whose solution gives each state's termination probability.

use std::collections::BTreeMap;

use num::{One, Signed, Zero};
use thiserror::Error;

use crate::automaton::{StateId, SubstochasticAutomaton};
use crate::prob::{to_f64, Probability, Rational};
use crate::product::prune;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum AlgebraError {
    #[error("state `{0}` cannot reach a terminating state")]
    NotPruned(String),
    #[error("the system is singular at column {0}")]
    Singular(usize),
    #[error("floating-point residual {0:e} exceeds tolerance")]
    Residual(f64),
}

/// Arithmetic used by the solver.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SolveMode {
    #[default]
    Exact,
    Float,
}

pub const FLOAT_RESIDUAL_TOLERANCE: f64 = 1e-12;

/// `X = alpha X + beta`, stored by sparse rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearSystem {
    order: Vec<StateId>,
    alpha: Vec<BTreeMap<usize, Rational>>,
    beta: Vec<Rational>,
}

impl LinearSystem {
    pub fn dim(&self) -> usize {
        self.order.len()
    }

    pub fn order(&self) -> &[StateId] {
        &self.order
    }

    pub fn alpha(&self, i: usize, j: usize) -> Rational {
        self.alpha[i].get(&j).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn alpha_row(&self, i: usize) -> &BTreeMap<usize, Rational> {
        &self.alpha[i]
    }

    pub fn beta(&self, i: usize) -> &Rational {
        &self.beta[i]
    }
}

/// Exact value of each state's termination probability.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionVector {
    order: Vec<StateId>,
    values: Vec<Rational>,
}

impl SolutionVector {
    pub fn get(&self, q: StateId) -> Option<&Rational> {
        self.order.iter().position(|&s| s == q).map(|i| &self.values[i])
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }
}

pub fn build_linear_system(sa: &SubstochasticAutomaton) -> Result<LinearSystem, AlgebraError> {
    let co = sa.coreachable();
    if let Some(q) = co.iter().position(|&ok| !ok) {
        return Err(AlgebraError::NotPruned(sa.state_name(q).to_string()));
    }
    let n = sa.num_states();
    let mut alpha = vec![BTreeMap::new(); n];
    let mut beta = Vec::with_capacity(n);
    for (q, row) in alpha.iter_mut().enumerate() {
        let d = sa.dist(q);
        for (_, r, w) in d.moves() {
            *row.entry(r).or_insert_with(Rational::zero) += w.value();
        }
        beta.push(d.term().into_value());
    }
    Ok(LinearSystem { order: (0..n).collect(), alpha, beta })
}

/// Gaussian elimination over rationals on `(I - alpha) X = beta`.
pub fn solve(sys: &LinearSystem) -> Result<SolutionVector, AlgebraError> {
    let n = sys.dim();
    let mut rows: Vec<BTreeMap<usize, Rational>> = (0..n)
        .map(|i| {
            let mut row: BTreeMap<usize, Rational> = sys.alpha[i].iter().map(|(&j, v)| (j, -v.clone())).collect();
            *row.entry(i).or_insert_with(Rational::zero) += Rational::one();
            row.retain(|_, v| !v.is_zero());
            row
        })
        .collect();
    let mut rhs = sys.beta.clone();

    for k in 0..n {
        let p = (k..n).find(|&i| rows[i].contains_key(&k)).ok_or(AlgebraError::Singular(k))?;
        rows.swap(k, p);
        rhs.swap(k, p);
        let pivot = rows[k][&k].clone();
        if !pivot.is_one() {
            for v in rows[k].values_mut() {
                *v /= &pivot;
            }
            rhs[k] /= &pivot;
        }
        let (head, tail) = rows.split_at_mut(k + 1);
        let pivot_row = &head[k];
        for (off, row) in tail.iter_mut().enumerate() {
            let Some(f) = row.remove(&k) else { continue };
            for (&j, v) in pivot_row.range(k + 1..) {
                let e = row.entry(j).or_insert_with(Rational::zero);
                *e -= &f * v;
                if e.is_zero() {
                    row.remove(&j);
                }
            }
            let delta = &f * &rhs[k];
            rhs[k + 1 + off] -= delta;
        }
    }

    let mut x = vec![Rational::zero(); n];
    for k in (0..n).rev() {
        let mut v = rhs[k].clone();
        for (&j, c) in rows[k].range(k + 1..) {
            v -= c * &x[j];
        }
        x[k] = v;
    }
    Ok(SolutionVector { order: sys.order.clone(), values: x })
}

/// Dense partial-pivoting elimination in double precision with a residual check.
pub fn solve_float(sys: &LinearSystem) -> Result<Vec<f64>, AlgebraError> {
    let n = sys.dim();
    let mut m = vec![vec![0.0f64; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        for (&j, v) in &sys.alpha[i] {
            row[j] -= to_f64(v);
        }
        row[i] += 1.0;
    }
    let original = m.clone();
    let mut b: Vec<f64> = sys.beta.iter().map(to_f64).collect();
    let b0 = b.clone();

    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))
            .ok_or(AlgebraError::Singular(k))?;
        if m[p][k] == 0.0 {
            return Err(AlgebraError::Singular(k));
        }
        m.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| m[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / m[k][k];
    }
    let residual = original
        .iter()
        .zip(&b0)
        .map(|(row, bi)| (row.iter().zip(&x).map(|(a, xi)| a * xi).sum::<f64>() - bi).abs())
        .fold(0.0, f64::max);
    if residual > FLOAT_RESIDUAL_TOLERANCE {
        return Err(AlgebraError::Residual(residual));
    }
    Ok(x)
}

/// Probability of terminating from the initial state, under `mode`.
pub fn total_probability_with(sa: &SubstochasticAutomaton, mode: SolveMode) -> Result<Rational, AlgebraError> {
    let pruned = prune(sa);
    if pruned.is_empty() {
        return Ok(Rational::zero());
    }
    let sys = build_linear_system(&pruned.sa)?;
    let init = pruned.sa.initial();
    match mode {
        SolveMode::Exact => Ok(solve(&sys)?.values[init].clone()),
        SolveMode::Float => {
            let x = solve_float(&sys)?;
            let v = x[init].clamp(0.0, 1.0);
            Ok(Rational::from_float(v).unwrap_or_else(Rational::zero))
        }
    }
}

/// Exact probability of terminating from the initial state.
pub fn total_probability(sa: &SubstochasticAutomaton) -> Probability {
    let v = total_probability_with(sa, SolveMode::Exact).expect("a pruned system is nonsingular");
    debug_assert!(!v.is_negative());
    Probability::new(v).expect("termination probability lies in [0, 1]")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::tests::{a1_raw, a2_raw};
    use crate::automaton::{validate_sa, RawAutomaton};
    use crate::prob::ratio;

    #[test]
    fn coefficients_of_a1_and_a2() {
        let a1 = validate_sa(&a1_raw()).unwrap();
        let sys = build_linear_system(&a1).unwrap();
        assert_eq!(sys.alpha(0, 0), ratio(1, 2));
        assert_eq!(sys.alpha(0, 1), ratio(1, 4));
        assert_eq!(sys.alpha(1, 0), ratio(0, 1));
        assert_eq!(sys.alpha(1, 1), ratio(0, 1));
        assert_eq!((sys.beta(0), sys.beta(1)), (&ratio(1, 4), &ratio(1, 1)));

        let a2 = validate_sa(&a2_raw()).unwrap();
        let sys = build_linear_system(&a2).unwrap();
        assert_eq!(sys.dim(), 1);
        assert_eq!(sys.alpha(0, 0), ratio(1, 2));
        assert_eq!(sys.beta(0), &ratio(1, 4));
    }

    #[test]
    fn single_terminating_state() {
        let mut raw = RawAutomaton::new("s");
        raw.term("s", ratio(1, 1));
        let sys = build_linear_system(&validate_sa(&raw).unwrap()).unwrap();
        assert_eq!(sys.alpha(0, 0), ratio(0, 1));
        assert_eq!(sys.beta(0), &ratio(1, 1));
        assert_eq!(solve(&sys).unwrap().values(), &[ratio(1, 1)]);
    }

    #[test]
    fn unpruned_system_is_rejected() {
        let mut raw = RawAutomaton::new("s");
        raw.trans("s", "a", "t", ratio(1, 2)).term("s", ratio(1, 2)).declare_state("u");
        let sa = validate_sa(&raw).unwrap();
        assert_eq!(build_linear_system(&sa), Err(AlgebraError::NotPruned("t".into())));
    }

    #[test]
    fn solutions_of_a1_and_a2() {
        let a2 = validate_sa(&a2_raw()).unwrap();
        assert_eq!(solve(&build_linear_system(&a2).unwrap()).unwrap().get(0), Some(&ratio(1, 2)));
        let a1 = validate_sa(&a1_raw()).unwrap();
        let sol = solve(&build_linear_system(&a1).unwrap()).unwrap();
        assert_eq!(sol.values(), &[ratio(1, 1), ratio(1, 1)]);
    }

    #[test]
    fn float_path_agrees() {
        let a2 = validate_sa(&a2_raw()).unwrap();
        let x = solve_float(&build_linear_system(&a2).unwrap()).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-15);
        assert_eq!(total_probability_with(&a2, SolveMode::Float).unwrap(), ratio(1, 2));
    }

    #[test]
    fn total_probability_cases() {
        assert_eq!(total_probability(&validate_sa(&a2_raw()).unwrap()), Probability::ratio(1, 2));
        assert_eq!(total_probability(&validate_sa(&a1_raw()).unwrap()), Probability::one());
        let mut raw = RawAutomaton::new("s");
        raw.trans("s", "a", "s", ratio(1, 2));
        assert_eq!(total_probability(&validate_sa(&raw).unwrap()), Probability::zero());
    }

    #[test]
    fn solution_satisfies_every_equation() {
        let mut raw = RawAutomaton::new("x");
        raw.trans("x", "a", "y", ratio(1, 3))
            .trans("x", "b", "x", ratio(1, 5))
            .trans("y", "a", "x", ratio(2, 7))
            .trans("y", "b", "z", ratio(1, 7))
            .trans("z", "a", "y", ratio(1, 2))
            .term("z", ratio(1, 3))
            .term("x", ratio(1, 9));
        let sa = validate_sa(&raw).unwrap();
        let sys = build_linear_system(&sa).unwrap();
        let sol = solve(&sys).unwrap();
        for i in 0..sys.dim() {
            let rhs: Rational = sys.alpha_row(i).iter().map(|(&j, a)| a * &sol.values()[j]).sum::<Rational>() + sys.beta(i);
            assert_eq!(rhs, sol.values()[i]);
        }
    }
}
