//! Decision problems, question profiles, product structure and bundles.

mod generators;
mod io;
mod questions;

pub use generators::{
    close_guess, gen_canonical, mc_test, parse_params, quadratic_loss, random_problem,
    safe_state_matching, star, state_matching, Params, GENERATORS,
};
pub use io::{
    bundle_from_json, bundle_to_json, load_bundle, save_bundle, to_canonical_json,
    DEFAULT_SIZE_CAP,
};
pub use questions::{builtin_question, QUESTION_KINDS};

use crate::error::{Error, Result};
use crate::geometry;
use crate::linalg::max_abs;
use serde::Serialize;

/// Default relative tolerance for row-equality checks.
pub const DEFAULT_VALIDATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionProblem {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    /// Rows are actions, columns are states.
    pub utility: Vec<Vec<f64>>,
}

impl DecisionProblem {
    pub fn new(states: Vec<String>, actions: Vec<String>, utility: Vec<Vec<f64>>) -> Result<Self> {
        let p = DecisionProblem { states, actions, utility };
        p.check_shape()?;
        Ok(p)
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn action_index(&self, label: &str) -> Result<usize> {
        self.actions
            .iter()
            .position(|a| a == label)
            .ok_or_else(|| Error::UnknownAction(label.to_string()))
    }

    /// Largest absolute utility entry.
    pub fn scale(&self) -> f64 {
        self.utility.iter().fold(0.0, |m, r| m.max(max_abs(r)))
    }

    fn check_shape(&self) -> Result<()> {
        if self.states.len() < 2 || self.actions.len() < 2 {
            return Err(Error::Dimension(format!(
                "need at least 2 states and 2 actions, got {} and {}",
                self.states.len(),
                self.actions.len()
            )));
        }
        check_matrix("utility", &self.utility, self.actions.len(), self.states.len())
    }
}

pub(crate) fn check_matrix(what: &str, m: &[Vec<f64>], rows: usize, cols: usize) -> Result<()> {
    if m.len() != rows {
        return Err(Error::Dimension(format!("{what} has {} rows, expected {rows}", m.len())));
    }
    for (i, r) in m.iter().enumerate() {
        if r.len() != cols {
            return Err(Error::Dimension(format!(
                "{what} row {i} has {} columns, expected {cols}",
                r.len()
            )));
        }
        if r.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parse(format!("{what} row {i} has a non-finite entry")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuestionProfile {
    /// Rows are actions, columns are states.
    pub values: Vec<Vec<f64>>,
}

impl QuestionProfile {
    pub fn new(values: Vec<Vec<f64>>) -> Self {
        QuestionProfile { values }
    }

    pub fn check_against(&self, problem: &DecisionProblem) -> Result<()> {
        check_matrix("question", &self.values, problem.n_actions(), problem.n_states())
    }

    pub fn row(&self, a: usize) -> &[f64] {
        &self.values[a]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub utility: Vec<Vec<f64>>,
}

impl Task {
    pub fn as_problem(&self) -> Result<DecisionProblem> {
        DecisionProblem::new(self.states.clone(), self.actions.clone(), self.utility.clone())
    }
}

/// Index arithmetic for product problems. Global indices are mixed-radix
/// numbers with task 0 as the most significant digit.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductStructure {
    pub tasks: Vec<Task>,
}

fn mixed_radix(mut idx: usize, radices: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radices.len()];
    for (slot, &r) in out.iter_mut().zip(radices).rev() {
        *slot = idx % r;
        idx /= r;
    }
    out
}

fn from_mixed_radix(coords: &[usize], radices: &[usize]) -> usize {
    coords.iter().zip(radices).fold(0, |acc, (&c, &r)| acc * r + c)
}

impl ProductStructure {
    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    fn state_radices(&self) -> Vec<usize> {
        self.tasks.iter().map(|t| t.states.len()).collect()
    }

    fn action_radices(&self) -> Vec<usize> {
        self.tasks.iter().map(|t| t.actions.len()).collect()
    }

    /// Number of global states, saturating on overflow.
    pub fn n_states(&self) -> usize {
        self.tasks.iter().fold(1usize, |acc, t| acc.saturating_mul(t.states.len()))
    }

    pub fn n_actions(&self) -> usize {
        self.tasks.iter().fold(1usize, |acc, t| acc.saturating_mul(t.actions.len()))
    }

    pub fn state_coords(&self, idx: usize) -> Vec<usize> {
        mixed_radix(idx, &self.state_radices())
    }

    pub fn action_coords(&self, idx: usize) -> Vec<usize> {
        mixed_radix(idx, &self.action_radices())
    }

    pub fn state_index(&self, coords: &[usize]) -> usize {
        from_mixed_radix(coords, &self.state_radices())
    }

    pub fn action_index(&self, coords: &[usize]) -> usize {
        from_mixed_radix(coords, &self.action_radices())
    }

    /// `Ū_i(a_i)` is built from this: the per-task utility of `a_i` lifted
    /// to a function of the global state.
    pub fn lifted_task_row(&self, task: usize, a_i: usize) -> Vec<f64> {
        (0..self.n_states())
            .map(|s| self.tasks[task].utility[a_i][self.state_coords(s)[task]])
            .collect()
    }

    fn check(&self) -> Result<()> {
        if self.tasks.is_empty() {
            return Err(Error::Parse("product section has no tasks".into()));
        }
        for (i, t) in self.tasks.iter().enumerate() {
            if t.states.is_empty() || t.actions.is_empty() {
                return Err(Error::Dimension(format!("task {i} has no states or actions")));
            }
            check_matrix(&format!("task {i} utility"), &t.utility, t.actions.len(), t.states.len())?;
        }
        Ok(())
    }

    /// Builds the global problem. Fails when either dimension exceeds `cap`.
    pub fn expand(&self, cap: usize) -> Result<DecisionProblem> {
        self.check()?;
        let (ns, na) = (self.n_states(), self.n_actions());
        if ns > cap || na > cap {
            return Err(Error::TooLarge(format!(
                "product expands to {ns} states and {na} actions (cap {cap})"
            )));
        }
        let state_coords: Vec<Vec<usize>> = (0..ns).map(|s| self.state_coords(s)).collect();
        let states = state_coords
            .iter()
            .map(|c| join_labels(c.iter().enumerate().map(|(i, &k)| &self.tasks[i].states[k])))
            .collect();
        let mut actions = Vec::with_capacity(na);
        let mut utility = Vec::with_capacity(na);
        for a in 0..na {
            let ac = self.action_coords(a);
            actions.push(join_labels(ac.iter().enumerate().map(|(i, &k)| &self.tasks[i].actions[k])));
            utility.push(
                state_coords
                    .iter()
                    .map(|sc| {
                        self.tasks
                            .iter()
                            .enumerate()
                            .map(|(i, t)| t.utility[ac[i]][sc[i]])
                            .sum()
                    })
                    .collect(),
            );
        }
        DecisionProblem::new(states, actions, utility)
    }
}

fn join_labels<'a>(parts: impl Iterator<Item = &'a String>) -> String {
    parts.map(String::as_str).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemBundle {
    pub problem: DecisionProblem,
    pub question: Option<QuestionProfile>,
    pub product: Option<ProductStructure>,
    /// Probability that the decision problem (rather than the question) is paid.
    pub alpha: f64,
    pub metadata: serde_json::Map<String, serde_json::Value>,
}

pub const DEFAULT_ALPHA: f64 = 0.5;

impl ProblemBundle {
    pub fn new(problem: DecisionProblem) -> Self {
        ProblemBundle {
            problem,
            question: None,
            product: None,
            alpha: DEFAULT_ALPHA,
            metadata: serde_json::Map::new(),
        }
    }

    pub fn with_question(mut self, q: QuestionProfile) -> Result<Self> {
        q.check_against(&self.problem)?;
        self.question = Some(q);
        Ok(self)
    }

    pub fn question(&self) -> Result<&QuestionProfile> {
        self.question
            .as_ref()
            .ok_or_else(|| Error::Parse("bundle has no question profile".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonRationalizable {
    pub action: usize,
    /// Best achievable margin of this action over all others.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub redundant_pairs: Vec<(usize, usize)>,
    pub non_rationalizable: Vec<NonRationalizable>,
    pub passed: bool,
}

/// Checks the two standing assumptions: no two actions share a utility
/// row, and every action is the unique optimum at some belief.
pub fn validate_problem(problem: &DecisionProblem, tol: f64) -> ValidationReport {
    let scale = 1.0 + problem.scale();
    let n = problem.n_actions();
    let mut redundant_pairs = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let diff = problem.utility[a]
                .iter()
                .zip(&problem.utility[b])
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            if diff <= tol * scale {
                redundant_pairs.push((a, b));
            }
        }
    }
    let non_rationalizable = (0..n)
        .filter_map(|a| {
            let r = geometry::rationalizability(problem, a);
            (!r.strict).then_some(NonRationalizable { action: a, slack: r.slack })
        })
        .collect::<Vec<_>>();
    let passed = redundant_pairs.is_empty() && non_rationalizable.is_empty();
    ValidationReport { redundant_pairs, non_rationalizable, passed }
}

/// Validation that exploits product structure: when every task passes,
/// the global problem does too, so large products are checked per task.
pub fn validate_bundle(bundle: &ProblemBundle, tol: f64) -> Result<ValidationReport> {
    match &bundle.product {
        Some(product) if bundle.problem.n_actions() > geometry::DIRECT_LP_LIMIT => {
            let mut all_ok = true;
            for t in &product.tasks {
                let task_problem = t.as_problem()?;
                all_ok &= validate_problem(&task_problem, tol).passed;
            }
            if all_ok {
                Ok(ValidationReport {
                    redundant_pairs: vec![],
                    non_rationalizable: vec![],
                    passed: true,
                })
            } else {
                Ok(validate_problem(&bundle.problem, tol))
            }
        }
        _ => Ok(validate_problem(&bundle.problem, tol)),
    }
}

/// Parses numeric labels such as `0.25`, `-3` or `3/4`.
pub fn parse_numeric_label(label: &str) -> Option<f64> {
    let s = label.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: f64 = num.trim().parse().ok()?;
        let d: f64 = den.trim().parse().ok()?;
        (d != 0.0).then_some(n / d)
    } else {
        s.parse().ok().filter(|x: &f64| x.is_finite())
    }
}
