//! Incentivizability verdicts: sufficiency certificates first, then the
//! characterization whose hypotheses the problem actually satisfies.

use super::sets::{alignment_fit, piecewise_alignment, AlignmentCertificate, PiecewiseAlignment};
use super::weighted::{trivial_dependence, weighted_fit, WeightedAlignmentCertificate};
use super::{pairwise_fit, payoff_delta};
use crate::error::Result;
use crate::geometry::{
    adjacency_graph, classify_graph, cycle_rich, AdjacencyGraph, CycleRichLimits, TIE_TOL,
};
use crate::linalg::rank;
use crate::model::{DecisionProblem, ProblemBundle, ProductStructure, QuestionProfile};
use serde::Serialize;

/// Names of the results a verdict can rest on.
pub mod theorem {
    pub const ALIGNMENT_SUFFICIENCY: &str = "alignment sufficiency";
    pub const PIECEWISE_SUFFICIENCY: &str = "piecewise alignment sufficiency";
    pub const WEIGHTED_SUFFICIENCY: &str = "weighted alignment sufficiency (product problems)";
    pub const TREE: &str = "tree characterization";
    pub const COMPLETE: &str = "complete-graph characterization";
    pub const PRODUCT: &str = "product characterization (weighted alignment)";
    pub const CYCLE_RICH: &str = "cycle-rich necessity";
    pub const ADJACENCY_LEMMA: &str = "adjacency lemma (necessity)";
    pub const NONE: &str = "none";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Incentivizable,
    NotIncentivizable,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    Aligned(AlignmentCertificate),
    Piecewise(PiecewiseAlignment),
    Weighted(WeightedAlignmentCertificate),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: String,
    /// The failing pair, or every action for whole-set failures.
    pub actions: Vec<usize>,
    /// Least-squares residual relative to the input scale.
    pub relative_residual: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub status: Status,
    pub certificate: Option<Certificate>,
    pub violation: Option<Violation>,
    pub theorem: String,
    pub notes: Vec<String>,
}

impl Verdict {
    fn yes(cert: Certificate, theorem: &str, notes: Vec<String>) -> Self {
        Verdict { status: Status::Incentivizable, certificate: Some(cert), violation: None, theorem: theorem.into(), notes }
    }

    fn no(v: Violation, theorem: &str, notes: Vec<String>) -> Self {
        Verdict { status: Status::NotIncentivizable, certificate: None, violation: Some(v), theorem: theorem.into(), notes }
    }

    fn maybe(theorem: &str, notes: Vec<String>) -> Self {
        Verdict { status: Status::Inconclusive, certificate: None, violation: None, theorem: theorem.into(), notes }
    }
}

const TRIPLE_CHECK_CAP: usize = 500_000;

/// For every `a` and distinct `b_0,b_1,b_2 ≠ a`, `{Δ_a^{b_i}}` has rank 3.
/// `None` when there are too many triples to check.
fn triples_independent(problem: &DecisionProblem, actions: &[usize]) -> Option<bool> {
    let n = actions.len();
    let triples = n * (n - 1) * (n - 2) * (n - 3) / 6;
    if triples > TRIPLE_CHECK_CAP {
        return None;
    }
    for &a in actions {
        let others: Vec<usize> = actions.iter().copied().filter(|&b| b != a).collect();
        let deltas: Vec<Vec<f64>> = others.iter().map(|&b| payoff_delta(problem, a, b)).collect();
        for i in 0..others.len() {
            for j in i + 1..others.len() {
                for l in j + 1..others.len() {
                    if rank(&[deltas[i].clone(), deltas[j].clone(), deltas[l].clone()]) < 3 {
                        return Some(false);
                    }
                }
            }
        }
    }
    Some(true)
}

/// Per-task hypotheses of the product characterization: binary action
/// set, or a complete task graph with pairwise independent differences.
fn task_hypotheses(product: &ProductStructure) -> Result<bool> {
    for task in &product.tasks {
        if task.actions.len() == 2 {
            continue;
        }
        let tp = task.as_problem()?;
        let g = adjacency_graph(&tp, TIE_TOL);
        if !classify_graph(&g, None).complete {
            return Ok(false);
        }
        let n = tp.n_actions();
        for a in 0..n {
            for b in 0..n {
                for c in b + 1..n {
                    if a == b || a == c {
                        continue;
                    }
                    let pair = [payoff_delta(&tp, a, b), payoff_delta(&tp, a, c)];
                    if rank(&pair) < 2 {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

fn whole_set_violation(kind: &str, n: usize, rel: f64, detail: Option<String>) -> Violation {
    Violation {
        kind: kind.into(),
        actions: (0..n).collect(),
        relative_residual: rel,
        detail: detail.unwrap_or_default(),
    }
}

/// First edge failing the pairwise condition, if any.
fn failing_edge(problem: &DecisionProblem, x: &QuestionProfile, graph: &AdjacencyGraph, tol: f64) -> Option<Violation> {
    graph.edges.iter().find_map(|e| {
        let fit = pairwise_fit(problem, x, e.a, e.b, tol);
        fit.coefficients.is_none().then(|| Violation {
            kind: "pairwise".into(),
            actions: vec![e.a, e.b],
            relative_residual: fit.relative_residual,
            detail: fit.reason.unwrap_or_default(),
        })
    })
}

/// Decides whether the bundle's question is incentivizable.
pub fn decide_incentivizable(bundle: &ProblemBundle, graph: &AdjacencyGraph, tol: f64) -> Result<Verdict> {
    let problem = &bundle.problem;
    let x = bundle.question()?;
    let n = problem.n_actions();
    let all: Vec<usize> = (0..n).collect();
    let mut notes = Vec::new();

    let global = alignment_fit(problem, x, &all, tol);
    if let Some(cert) = global.certificate {
        return Ok(Verdict::yes(Certificate::Aligned(cert), theorem::ALIGNMENT_SUFFICIENCY, notes));
    }

    let class = classify_graph(graph, bundle.product.as_ref());
    if !class.connected {
        notes.push("adjacency graph is disconnected; the problem violates the standing assumptions".into());
        return Ok(Verdict::maybe(theorem::NONE, notes));
    }

    if let Some(pw) = piecewise_alignment(problem, x, graph, tol) {
        if pw.collection.parts.len() > 1 {
            return Ok(Verdict::yes(Certificate::Piecewise(pw), theorem::PIECEWISE_SUFFICIENCY, notes));
        }
    }

    let weighted = bundle.product.as_ref().map(|p| (p, weighted_fit(p, problem, x, tol)));
    if let Some((_, fit)) = &weighted {
        if let Some(cert) = &fit.certificate {
            return Ok(Verdict::yes(Certificate::Weighted(cert.clone()), theorem::WEIGHTED_SUFFICIENCY, notes));
        }
    }

    if problem.n_states() <= 3 {
        notes.push(format!(
            "only {} states: the necessity results have little or no bite, so a failed alignment proves nothing",
            problem.n_states()
        ));
        return Ok(Verdict::maybe(theorem::NONE, notes));
    }

    if class.tree {
        return Ok(match failing_edge(problem, x, graph, tol) {
            Some(v) => Verdict::no(v, theorem::TREE, notes),
            None => {
                notes.push("every edge passes the pairwise test yet piecewise alignment failed".into());
                Verdict::maybe(theorem::TREE, notes)
            }
        });
    }

    if class.complete && n >= 4 {
        match triples_independent(problem, &all) {
            Some(true) => {
                return Ok(Verdict::no(
                    whole_set_violation("global alignment", n, global.relative_residual, global.reason),
                    theorem::COMPLETE,
                    notes,
                ))
            }
            Some(false) => notes.push("complete graph, but some triple of payoff differences is dependent".into()),
            None => notes.push("complete graph too large to check triple independence".into()),
        }
    }

    if let Some((product, fit)) = &weighted {
        if class.product_consistent && product.n_tasks() >= 3 {
            if task_hypotheses(product)? {
                let nontrivial = (0..product.n_tasks())
                    .filter(|&i| !trivial_dependence(product, x, i, tol))
                    .count();
                if nontrivial >= 3 {
                    return Ok(Verdict::no(
                        whole_set_violation("weighted alignment", n, fit.relative_residual, fit.reason.clone()),
                        theorem::PRODUCT,
                        notes,
                    ));
                }
                notes.push(format!("question depends nontrivially on only {nontrivial} tasks"));
            } else {
                notes.push("some task fails the per-task hypotheses of the product characterization".into());
            }
        }
    }

    let limits = CycleRichLimits::default();
    if n >= 4 && n <= limits.max_set {
        let rich = cycle_rich(problem, &all, graph, &limits);
        if rich.is_rich() {
            return Ok(Verdict::no(
                whole_set_violation("global alignment", n, global.relative_residual, global.reason),
                theorem::CYCLE_RICH,
                notes,
            ));
        }
    }

    Ok(match failing_edge(problem, x, graph, tol) {
        Some(v) => Verdict::no(v, theorem::ADJACENCY_LEMMA, notes),
        None => {
            notes.push("every adjacent pair passes the pairwise test; no sufficiency result applies".into());
            Verdict::maybe(theorem::NONE, notes)
        }
    })
}
