//! Canonical example problems.

use super::{validate_problem, DecisionProblem, ProblemBundle, ProductStructure, Task};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{Map, Value};
use std::collections::BTreeMap;

pub type Params = BTreeMap<String, String>;

pub const GENERATORS: &[&str] = &[
    "quadratic-loss",
    "star",
    "state-matching",
    "close-guess",
    "mc-test",
    "cycle-rich-safe",
];

/// Parses `key=value` items into a parameter map.
pub fn parse_params<S: AsRef<str>>(items: &[S]) -> Result<Params> {
    items
        .iter()
        .map(|item| {
            let item = item.as_ref();
            item.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::InvalidParam(format!("expected key=value, got `{item}`")))
        })
        .collect()
}

fn get_usize(params: &Params, key: &str, default: usize) -> Result<usize> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| Error::InvalidParam(format!("{key} must be a positive integer, got `{v}`"))),
    }
}

fn get_f64(params: &Params, key: &str, default: f64) -> Result<f64> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => super::parse_numeric_label(v)
            .ok_or_else(|| Error::InvalidParam(format!("{key} must be a number, got `{v}`"))),
    }
}

fn get_list(params: &Params, key: &str) -> Result<Option<Vec<f64>>> {
    params
        .get(key)
        .map(|v| {
            v.split(',')
                .map(|x| {
                    super::parse_numeric_label(x)
                        .ok_or_else(|| Error::InvalidParam(format!("{key}: bad number `{x}`")))
                })
                .collect()
        })
        .transpose()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn fraction_label(i: usize, n: usize) -> String {
    if i == 0 {
        return "0".into();
    }
    let g = gcd(i, n);
    if n / g == 1 {
        format!("{}", i / g)
    } else {
        format!("{}/{}", i / g, n / g)
    }
}

fn labels(prefix: &str, range: std::ops::Range<usize>) -> Vec<String> {
    range.map(|i| format!("{prefix}{i}")).collect()
}

/// Builds one of the named example problems. The question profile is left
/// empty; see [`super::builtin_question`].
pub fn gen_canonical(name: &str, params: &Params) -> Result<ProblemBundle> {
    let (problem, product) = match name {
        "quadratic-loss" => (quadratic_loss(get_usize(params, "n", 4)?)?, None),
        "star" => (star(get_usize(params, "theta", 4)?, get_f64(params, "s", 0.6)?)?, None),
        "state-matching" => {
            let r = match get_list(params, "r")? {
                Some(r) => r,
                None => vec![get_f64(params, "R", 1.0)?; get_usize(params, "n", 3)?],
            };
            (state_matching(&r)?, None)
        }
        "close-guess" => {
            let r = get_list(params, "r")?.unwrap_or_else(|| vec![0.7, 1.0, 1.3, 1.6]);
            (close_guess(&r)?, None)
        }
        "mc-test" => {
            let prod = mc_test(get_usize(params, "i", 3)?, get_usize(params, "omega", 2)?)?;
            (prod.expand(super::DEFAULT_SIZE_CAP)?, Some(prod))
        }
        "cycle-rich-safe" => (safe_state_matching(&[0.5, 0.5, 1.0, 1.0], 0.3)?, None),
        other => return Err(Error::UnknownGenerator(other.to_string())),
    };
    let mut bundle = ProblemBundle::new(problem);
    bundle.product = product;
    let mut meta = Map::new();
    meta.insert("generator".into(), Value::String(name.to_string()));
    meta.insert(
        "params".into(),
        Value::Object(params.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect()),
    );
    bundle.metadata = meta;
    Ok(bundle)
}

/// Forecast `a ∈ {0, 1/n, …, 1}` of `θ` on the same grid, `u = −(a−θ)²`.
pub fn quadratic_loss(n: usize) -> Result<DecisionProblem> {
    if n < 1 {
        return Err(Error::InvalidParam("quadratic-loss needs n ≥ 1".into()));
    }
    let names: Vec<String> = (0..=n).map(|i| fraction_label(i, n)).collect();
    let utility = (0..=n)
        .map(|a| {
            (0..=n)
                .map(|t| {
                    let diff = (a as f64 - t as f64) / n as f64;
                    -diff * diff
                })
                .collect()
        })
        .collect();
    DecisionProblem::new(names.clone(), names, utility)
}

/// Guess the state (payoff 1) or take the safe action `a_s` (payoff `s`).
pub fn star(k: usize, s: f64) -> Result<DecisionProblem> {
    if k < 2 {
        return Err(Error::InvalidParam("star needs at least 2 states".into()));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParam(format!("star needs s in (0,1), got {s}")));
    }
    safe_state_matching(&vec![1.0; k], s).map(|mut p| {
        p.states = labels("theta", 1..k + 1);
        p.actions = labels("theta", 1..k + 1);
        p.actions.push("a_s".into());
        p
    })
}

/// `u(a;θ) = r_θ·𝟙{a=θ}`.
pub fn state_matching(r: &[f64]) -> Result<DecisionProblem> {
    check_rewards(r)?;
    let names = labels("theta", 1..r.len() + 1);
    let utility = (0..r.len())
        .map(|a| (0..r.len()).map(|t| if a == t { r[t] } else { 0.0 }).collect())
        .collect();
    DecisionProblem::new(names.clone(), names, utility)
}

/// State matching with partial credit `r_θ/2` for guesses one off.
pub fn close_guess(r: &[f64]) -> Result<DecisionProblem> {
    check_rewards(r)?;
    let names: Vec<String> = (1..=r.len()).map(|i| i.to_string()).collect();
    let utility = (0..r.len())
        .map(|a| {
            (0..r.len())
                .map(|t| match a.abs_diff(t) {
                    0 => r[t],
                    1 => r[t] / 2.0,
                    _ => 0.0,
                })
                .collect()
        })
        .collect();
    DecisionProblem::new(names.clone(), names, utility)
}

/// State matching plus a safe action paying `s` in every state.
pub fn safe_state_matching(r: &[f64], s: f64) -> Result<DecisionProblem> {
    check_rewards(r)?;
    let k = r.len();
    let mut utility: Vec<Vec<f64>> = (0..k)
        .map(|a| (0..k).map(|t| if a == t { r[t] } else { 0.0 }).collect())
        .collect();
    utility.push(vec![s; k]);
    let mut actions = labels("theta", 0..k);
    actions.push("a_s".into());
    DecisionProblem::new(labels("theta", 0..k), actions, utility)
}

fn check_rewards(r: &[f64]) -> Result<()> {
    if r.len() < 2 {
        return Err(Error::InvalidParam("need at least two rewards".into()));
    }
    if r.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::InvalidParam("rewards must be positive".into()));
    }
    Ok(())
}

/// `tasks` multiple-choice questions with `omega` options each; the payoff
/// is the raw number of correct answers.
pub fn mc_test(tasks: usize, omega: usize) -> Result<ProductStructure> {
    if tasks < 1 || omega < 2 {
        return Err(Error::InvalidParam("mc-test needs i ≥ 1 and omega ≥ 2".into()));
    }
    let opts: Vec<String> = (0..omega).map(|k| k.to_string()).collect();
    let utility = (0..omega)
        .map(|a| (0..omega).map(|t| if a == t { 1.0 } else { 0.0 }).collect())
        .collect::<Vec<Vec<f64>>>();
    Ok(ProductStructure {
        tasks: (0..tasks)
            .map(|_| Task { states: opts.clone(), actions: opts.clone(), utility: utility.clone() })
            .collect(),
    })
}

/// A random problem with entries uniform on [-1, 1] that passes
/// validation; redraws until it does.
pub fn random_problem(n_states: usize, n_actions: usize, seed: u64) -> Result<DecisionProblem> {
    if n_states < 2 || n_actions < 2 {
        return Err(Error::InvalidParam("random problems need ≥ 2 states and actions".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let utility = (0..n_actions)
            .map(|_| (0..n_states).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let p = DecisionProblem::new(labels("s", 0..n_states), labels("a", 0..n_actions), utility)?;
        if validate_problem(&p, super::DEFAULT_VALIDATION_TOL).passed {
            return Ok(p);
        }
    }
}
