//! Built-in question profiles.

use super::{parse_numeric_label, ProblemBundle, QuestionProfile};
use crate::error::{Error, Result};
use crate::model::Params;

pub const QUESTION_KINDS: &[&str] = &[
    "expost",
    "regret",
    "within-x",
    "expected-payoff",
    "threshold",
    "improvement",
];

fn incompatible(kind: &str, reason: impl Into<String>) -> Error {
    Error::IncompatibleQuestion { kind: kind.to_string(), reason: reason.into() }
}

fn param_f64(kind: &str, params: &Params, key: &str) -> Result<Option<f64>> {
    params
        .get(key)
        .map(|v| {
            parse_numeric_label(v)
                .ok_or_else(|| incompatible(kind, format!("parameter {key} is not a number: `{v}`")))
        })
        .transpose()
}

/// Builds one of the named question profiles for `bundle`.
pub fn builtin_question(bundle: &ProblemBundle, kind: &str, params: &Params) -> Result<QuestionProfile> {
    let p = &bundle.problem;
    let (na, ns) = (p.n_actions(), p.n_states());
    let col_max: Vec<f64> = (0..ns)
        .map(|t| p.utility.iter().map(|r| r[t]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let values: Vec<Vec<f64>> = match kind {
        "expost" => {
            let tie = 1e-12 * (1.0 + p.scale());
            (0..na)
                .map(|a| {
                    (0..ns)
                        .map(|t| if p.utility[a][t] >= col_max[t] - tie { 1.0 } else { 0.0 })
                        .collect()
                })
                .collect()
        }
        "regret" => (0..na)
            .map(|a| (0..ns).map(|t| col_max[t] - p.utility[a][t]).collect())
            .collect(),
        "expected-payoff" => p.utility.clone(),
        "within-x" => {
            let x = param_f64(kind, params, "x")?
                .ok_or_else(|| incompatible(kind, "missing parameter x"))?;
            let parse_all = |labels: &[String]| -> Result<Vec<f64>> {
                labels
                    .iter()
                    .map(|l| {
                        parse_numeric_label(l)
                            .ok_or_else(|| incompatible(kind, format!("label `{l}` is not numeric")))
                    })
                    .collect()
            };
            let acts = parse_all(&p.actions)?;
            let states = parse_all(&p.states)?;
            acts.iter()
                .map(|a| {
                    states
                        .iter()
                        .map(|t| if (a - t).abs() <= x + 1e-12 { 1.0 } else { 0.0 })
                        .collect()
                })
                .collect()
        }
        "threshold" | "improvement" => {
            let prod = bundle
                .product
                .as_ref()
                .ok_or_else(|| incompatible(kind, "needs a product structure"))?;
            let n_tasks = prod.n_tasks();
            let task_u = |a: usize, t: usize| -> Vec<f64> {
                let (ac, sc) = (prod.action_coords(a), prod.state_coords(t));
                (0..n_tasks).map(|i| prod.tasks[i].utility[ac[i]][sc[i]]).collect()
            };
            if kind == "threshold" {
                let z = param_f64(kind, params, "z")?
                    .ok_or_else(|| incompatible(kind, "missing parameter z"))?;
                (0..na)
                    .map(|a| {
                        (0..ns)
                            .map(|t| {
                                let score: f64 = task_u(a, t).iter().sum();
                                if score >= z - 1e-12 { 1.0 } else { 0.0 }
                            })
                            .collect()
                    })
                    .collect()
            } else {
                let split = match params.get("split") {
                    Some(v) => v
                        .parse::<usize>()
                        .map_err(|_| incompatible(kind, format!("split must be an integer: `{v}`")))?,
                    None => n_tasks / 2,
                };
                if split == 0 || split >= n_tasks {
                    return Err(incompatible(kind, format!("split {split} must lie in 1..{n_tasks}")));
                }
                let (i1, i2) = (split as f64, (n_tasks - split) as f64);
                (0..na)
                    .map(|a| {
                        (0..ns)
                            .map(|t| {
                                let u = task_u(a, t);
                                let first: f64 = u[..split].iter().sum();
                                let second: f64 = u[split..].iter().sum();
                                second / i2 - first / i1
                            })
                            .collect()
                    })
                    .collect()
            }
        }
        other => return Err(incompatible(other, "unknown question kind")),
    };
    Ok(QuestionProfile::new(values))
}
