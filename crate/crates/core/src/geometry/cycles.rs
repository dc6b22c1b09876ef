//! Internal independence of adjacency cycles and cycle-richness.

use super::adjacency::AdjacencyGraph;
use super::graph::{enumerate_cycles_within, Cycle};
use crate::alignment::payoff_delta;
use crate::linalg::{intersection_dim, rank_with_tol};
use crate::model::DecisionProblem;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Independence {
    pub independent: bool,
    pub rank: usize,
}

/// `V_C` spanning set: `Δ_{a_0}^{a_i}` for `i = 1..n−1`.
fn cycle_span(problem: &DecisionProblem, cycle: &Cycle) -> Vec<Vec<f64>> {
    let a0 = cycle.actions[0];
    cycle.actions[1..].iter().map(|&ai| payoff_delta(problem, a0, ai)).collect()
}

/// Rank of the cycle's payoff differences from its first action, with a
/// relative pivot threshold `tol`.
pub fn internal_independence(problem: &DecisionProblem, cycle: &Cycle, tol: f64) -> Independence {
    let rank = rank_with_tol(&cycle_span(problem, cycle), tol);
    Independence { independent: rank + 1 == cycle.len(), rank }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleRichLimits {
    pub max_set: usize,
    pub max_cycles: usize,
    pub rank_tol: f64,
}

impl Default for CycleRichLimits {
    fn default() -> Self {
        CycleRichLimits { max_set: 8, max_cycles: 100_000, rank_tol: crate::linalg::RANK_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", content = "reason", rename_all = "snake_case")]
pub enum Richness {
    Rich,
    NotRich,
    Unknown(String),
}

/// For one proper subset `B'`: the action whose cycle subspaces meet only
/// in zero, or `None` if no action works.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetCertificate {
    pub subset: Vec<usize>,
    pub action: Option<usize>,
    pub cycles_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleRichness {
    pub verdict: Richness,
    pub certificate: Vec<SubsetCertificate>,
}

impl CycleRichness {
    pub fn is_rich(&self) -> bool {
        self.verdict == Richness::Rich
    }
}

/// Tests whether `set` is cycle-rich, using internally independent cycles
/// that stay inside `set`. Stops at the first uncertified subset.
pub fn cycle_rich(
    problem: &DecisionProblem,
    set: &[usize],
    graph: &AdjacencyGraph,
    limits: &CycleRichLimits,
) -> CycleRichness {
    let mut set = set.to_vec();
    set.sort_unstable();
    set.dedup();
    let unknown = |why: String| CycleRichness { verdict: Richness::Unknown(why), certificate: vec![] };
    if set.len() < 4 {
        return CycleRichness { verdict: Richness::NotRich, certificate: vec![] };
    }
    if set.len() > limits.max_set {
        return unknown(format!("set has {} actions (limit {})", set.len(), limits.max_set));
    }
    let mut allowed = vec![false; graph.n];
    for &a in &set {
        allowed[a] = true;
    }
    let list = enumerate_cycles_within(graph, &allowed, set.len(), limits.max_cycles);
    if list.truncated {
        return unknown(format!("more than {} cycles", limits.max_cycles));
    }
    let k = problem.n_states();
    let independent: Vec<(Cycle, Vec<Vec<f64>>)> = list
        .cycles
        .into_iter()
        .filter(|c| internal_independence(problem, c, limits.rank_tol).independent)
        .map(|c| {
            let span = cycle_span(problem, &c);
            (c, span)
        })
        .collect();

    let m = set.len();
    let mut certificate = Vec::new();
    for mask in 1u32..(1 << m) - 1 {
        if mask.count_ones() < 3 {
            continue;
        }
        let subset: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| set[i]).collect();
        let mut found = None;
        for i in (0..m).filter(|i| mask >> i & 1 == 0) {
            let a = set[i];
            let spans: Vec<Vec<Vec<f64>>> = independent
                .iter()
                .filter(|(c, _)| {
                    c.contains(a) && c.actions.iter().filter(|x| subset.contains(x)).count() >= 2
                })
                .map(|(_, s)| s.clone())
                .collect();
            if !spans.is_empty() && intersection_dim(&spans, k) == 0 {
                found = Some((a, spans.len()));
                break;
            }
        }
        let ok = found.is_some();
        certificate.push(SubsetCertificate {
            subset,
            action: found.map(|f| f.0),
            cycles_used: found.map_or(0, |f| f.1),
        });
        if !ok {
            return CycleRichness { verdict: Richness::NotRich, certificate };
        }
    }
    CycleRichness { verdict: Richness::Rich, certificate }
}
