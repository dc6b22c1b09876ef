//! Bundle files and the canonical JSON writer.
//!
//! Canonical form: object keys sorted, floats printed with 17 significant
//! digits in exponent notation, one matrix row per line. Saving a loaded
//! canonical file reproduces it byte for byte.

use super::{check_matrix, DecisionProblem, ProblemBundle, ProductStructure, QuestionProfile, Task};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};
use std::fmt::Write as _;
use std::path::Path;

/// Largest number of global states or actions a product may expand to.
pub const DEFAULT_SIZE_CAP: usize = 4096;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskFile {
    states: Vec<String>,
    actions: Vec<String>,
    utility: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProductFile {
    tasks: Vec<TaskFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    states: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    actions: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    utility: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    question: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    product: Option<ProductFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<Map<String, Value>>,
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<ProblemBundle> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    bundle_from_json(&text, DEFAULT_SIZE_CAP)
}

pub fn save_bundle(bundle: &ProblemBundle, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, bundle_to_json(bundle)).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn bundle_from_json(text: &str, cap: usize) -> Result<ProblemBundle> {
    let file: BundleFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let product = file.product.map(|p| ProductStructure {
        tasks: p
            .tasks
            .into_iter()
            .map(|t| Task { states: t.states, actions: t.actions, utility: t.utility })
            .collect(),
    });

    let problem = match (&product, file.states, file.actions, file.utility) {
        (Some(prod), states, actions, utility) => {
            let derived = prod.expand(cap)?;
            match (states, actions, utility) {
                (None, None, None) => derived,
                (Some(s), Some(a), Some(u)) => {
                    let given = DecisionProblem::new(s, a, u)?;
                    cross_check(&given, &derived)?;
                    given
                }
                _ => {
                    return Err(Error::Parse(
                        "states, actions and utility must be given together or not at all".into(),
                    ))
                }
            }
        }
        (None, Some(s), Some(a), Some(u)) => DecisionProblem::new(s, a, u)?,
        (None, ..) => {
            return Err(Error::Parse(
                "bundle needs states, actions and utility unless a product section is present".into(),
            ))
        }
    };

    let question = match file.question {
        Some(q) => {
            check_matrix("question", &q, problem.n_actions(), problem.n_states())?;
            Some(QuestionProfile::new(q))
        }
        None => None,
    };
    let alpha = file.alpha.unwrap_or(super::DEFAULT_ALPHA);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParam(format!("alpha must lie in (0,1), got {alpha}")));
    }
    Ok(ProblemBundle {
        problem,
        question,
        product,
        alpha,
        metadata: file.metadata.unwrap_or_default(),
    })
}

fn cross_check(given: &DecisionProblem, derived: &DecisionProblem) -> Result<()> {
    if given.n_states() != derived.n_states() || given.n_actions() != derived.n_actions() {
        return Err(Error::Dimension(format!(
            "global problem is {}x{} but the product expands to {}x{}",
            given.n_actions(),
            given.n_states(),
            derived.n_actions(),
            derived.n_states()
        )));
    }
    let scale = 1.0 + given.scale().max(derived.scale());
    for (a, (g, d)) in given.utility.iter().zip(&derived.utility).enumerate() {
        for (t, (x, y)) in g.iter().zip(d).enumerate() {
            if (x - y).abs() > 1e-9 * scale {
                return Err(Error::Dimension(format!(
                    "global utility at ({a},{t}) is {x}, product sum is {y}"
                )));
            }
        }
    }
    Ok(())
}

/// Serializes in canonical form. Product bundles store only the tasks;
/// the global problem is re-derived on load.
pub fn bundle_to_json(bundle: &ProblemBundle) -> String {
    let p = &bundle.problem;
    let file = BundleFile {
        states: bundle.product.is_none().then(|| p.states.clone()),
        actions: bundle.product.is_none().then(|| p.actions.clone()),
        utility: bundle.product.is_none().then(|| p.utility.clone()),
        question: bundle.question.as_ref().map(|q| q.values.clone()),
        alpha: Some(bundle.alpha),
        product: bundle.product.as_ref().map(|prod| ProductFile {
            tasks: prod
                .tasks
                .iter()
                .map(|t| TaskFile {
                    states: t.states.clone(),
                    actions: t.actions.clone(),
                    utility: t.utility.clone(),
                })
                .collect(),
        }),
        metadata: (!bundle.metadata.is_empty()).then(|| bundle.metadata.clone()),
    };
    let value = serde_json::to_value(&file).expect("bundle serializes");
    to_canonical_json(&value)
}

/// Renders any JSON value in the canonical layout.
pub fn to_canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn write_number(out: &mut String, n: &Number) {
    if n.is_f64() {
        let x = n.as_f64().unwrap_or(0.0);
        let x = if x == 0.0 { 0.0 } else { x }; // drop negative zero
        let _ = write!(out, "{x:.16e}");
    } else {
        let _ = write!(out, "{n}");
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn write_value(out: &mut String, value: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(out, n),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(items) => {
            if items.iter().all(is_scalar) {
                out.push('[');
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, v, indent);
                }
                out.push(']');
            } else {
                out.push_str("[\n");
                for (i, v) in items.iter().enumerate() {
                    out.push_str(&pad(indent + 1));
                    write_value(out, v, indent + 1);
                    if i + 1 < items.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                out.push_str(&pad(indent));
                out.push(']');
            }
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&serde_json::to_string(k).expect("key serializes"));
                out.push_str(": ");
                write_value(out, &map[*k], indent + 1);
                if i + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}
