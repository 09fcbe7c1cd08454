//! `--builtin name:param=value,...` resolution.

use std::collections::BTreeMap;

use crate::algebra::SolveMode;
use crate::measures::{joint_distribution_with, JointDistribution};
use crate::models::{self, ModelBundle};
use crate::prob::{parse_rational, ratio, Rational};
use crate::sched::{schedule_memoryless, schedule_restricted};

use super::CliError;

/// Builtin names with their parameters and defaults.
pub const BUILTINS: &[(&str, &str)] = &[
    ("a3", ""),
    ("a4", ""),
    ("ni", "low=1/2 high_short=1/4 high_long=1/4"),
    ("card", ""),
    ("sale", "alpha=1/2 beta=1/2 gamma=1/2"),
    ("dining", "q=1/2 payer=2"),
    ("crowds", "n=4 c=0 q=1/2 initiator=1"),
    ("p1", "k=1"),
    ("p2", "k=1"),
    ("abstract", "id=1"),
    ("counterexample", "sched=m | p=<prob>"),
];

/// Exact or floating-point joint of a bundle.
pub fn bundle_joint(b: &ModelBundle, mode: SolveMode) -> Result<JointDistribution, CliError> {
    Ok(joint_distribution_with(&b.system, &b.predicate, &b.observation, mode)?)
}

/// Splits `name:k=v,k=v` into the name and its assignments.
pub fn parse_builtin(spec: &str) -> Result<(String, BTreeMap<String, String>), CliError> {
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut params = BTreeMap::new();
    for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("expected `param=value`, found `{item}`")))?;
        if params.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(CliError::Usage(format!("parameter `{}` given twice", k.trim())));
        }
    }
    Ok((name.trim().to_string(), params))
}

struct Params<'a> {
    name: &'a str,
    given: &'a BTreeMap<String, String>,
}

impl Params<'_> {
    fn check(&self, allowed: &[&str]) -> Result<(), CliError> {
        match self.given.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) if allowed.is_empty() => Err(CliError::Usage(format!("builtin `{}` takes no parameters (got `{k}`)", self.name))),
            Some(k) => Err(CliError::Usage(format!(
                "unknown parameter `{k}` for builtin `{}` (expected {})",
                self.name,
                allowed.join(", ")
            ))),
            None => Ok(()),
        }
    }

    fn rational(&self, key: &str, default: Rational) -> Result<Rational, CliError> {
        match self.given.get(key) {
            None => Ok(default),
            Some(v) => parse_rational(v).ok_or_else(|| CliError::Invalid(format!("{key}: `{v}` is not a rational number"))),
        }
    }

    fn integer(&self, key: &str, default: u32) -> Result<u32, CliError> {
        match self.given.get(key) {
            None => Ok(default),
            Some(v) => {
                let r = parse_rational(v).filter(|r| r.is_integer());
                r.and_then(|r| u32::try_from(r.to_integer()).ok())
                    .ok_or_else(|| CliError::Invalid(format!("{key}: `{v}` is not a non-negative integer")))
            }
        }
    }
}

/// Builds the named builtin model.
pub fn resolve_builtin(name: &str, given: &BTreeMap<String, String>) -> Result<ModelBundle, CliError> {
    let p = Params { name, given };
    let bundle = match name {
        "a3" | "a4" => {
            p.check(&[])?;
            let (a3, a4) = models::ni_examples();
            if name == "a3" {
                a3
            } else {
                a4
            }
        }
        "ni" => {
            p.check(&["low", "high_short", "high_long"])?;
            models::non_interference(
                "ni",
                p.rational("low", ratio(1, 2))?,
                p.rational("high_short", ratio(1, 4))?,
                p.rational("high_long", ratio(1, 4))?,
            )?
        }
        "card" => {
            p.check(&[])?;
            models::debit_card()
        }
        "sale" => {
            p.check(&["alpha", "beta", "gamma"])?;
            let half = ratio(1, 2);
            models::sale(p.rational("alpha", half.clone())?, p.rational("beta", half.clone())?, p.rational("gamma", half)?)?
        }
        "dining" => {
            p.check(&["q", "payer"])?;
            let payer = u8::try_from(p.integer("payer", 2)?).unwrap_or(u8::MAX);
            models::dining_payer(p.rational("q", ratio(1, 2))?, payer)?
        }
        "crowds" => {
            p.check(&["n", "c", "q", "initiator"])?;
            models::crowds_with_initiator(
                p.integer("n", 4)?,
                p.integer("c", 0)?,
                p.rational("q", ratio(1, 2))?,
                p.integer("initiator", 1)?,
            )?
        }
        "p1" => {
            p.check(&["k"])?;
            models::program_p1(p.integer("k", 1)?)?
        }
        "p2" => {
            p.check(&["k"])?;
            models::program_p2(p.integer("k", 1)?)?
        }
        "abstract" => {
            p.check(&["id"])?;
            models::abstract_system(p.integer("id", 1)?)?
        }
        "counterexample" => {
            p.check(&["p", "sched"])?;
            counterexample(given)?
        }
        other => {
            let names: Vec<&str> = BUILTINS.iter().map(|b| b.0).collect();
            return Err(CliError::Usage(format!("unknown builtin `{other}` (expected one of {})", names.join(", "))));
        }
    };
    Ok(bundle)
}

fn counterexample(given: &BTreeMap<String, String>) -> Result<ModelBundle, CliError> {
    let b = models::counterexample_npa();
    match (given.get("p"), given.get("sched").map(String::as_str)) {
        (Some(_), Some(_)) => Err(CliError::Usage("give either `p` or `sched`, not both".into())),
        (Some(v), None) => {
            let p = parse_rational(v).ok_or_else(|| CliError::Invalid(format!("p: `{v}` is not a rational number")))?;
            let s = models::fixed_scheduler(&b, p.clone())?;
            let system = schedule_memoryless(&b.npa, &s)?;
            Ok(ModelBundle {
                name: "counterexample".into(),
                system,
                predicate: b.predicate,
                observation: b.observation,
                params: BTreeMap::from([("p".to_string(), p)]),
            })
        }
        (None, None | Some("m" | "alternating")) => {
            let s = models::alternating_scheduler(&b)?;
            let scheduled = schedule_restricted(&b.npa, &s)?;
            Ok(ModelBundle {
                name: "counterexample".into(),
                predicate: scheduled.predicate(&b.predicate)?,
                observation: scheduled.observation(&b.observation)?,
                system: scheduled.fpfa,
                params: BTreeMap::new(),
            })
        }
        (None, Some(other)) => Err(CliError::Invalid(format!("sched: unknown scheduler `{other}` (expected m)"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_syntax() {
        let (name, params) = parse_builtin("dining:q=1/3, payer=3").unwrap();
        assert_eq!(name, "dining");
        assert_eq!(params["q"], "1/3");
        assert_eq!(params["payer"], "3");
        assert!(parse_builtin("sale:alpha").is_err());
        assert!(parse_builtin("sale:alpha=1,alpha=2").is_err());
    }

    #[test]
    fn every_builtin_resolves_with_defaults() {
        for (name, _) in BUILTINS {
            let bundle = resolve_builtin(name, &BTreeMap::new()).unwrap();
            bundle_joint(&bundle, SolveMode::Exact).unwrap();
        }
    }

    #[test]
    fn bad_parameters() {
        let with = |k: &str, v: &str| BTreeMap::from([(k.to_string(), v.to_string())]);
        assert!(matches!(resolve_builtin("card", &with("q", "1")), Err(CliError::Usage(_))));
        assert!(matches!(resolve_builtin("nope", &BTreeMap::new()), Err(CliError::Usage(_))));
        assert!(matches!(resolve_builtin("crowds", &with("n", "2.5")), Err(CliError::Invalid(_))));
        assert!(matches!(resolve_builtin("sale", &with("alpha", "3/2")), Err(CliError::Invalid(_))));
        assert!(matches!(resolve_builtin("abstract", &with("id", "9")), Err(CliError::Invalid(_))));
    }
}
