//! Max-slack linear programs for rationalizability and adjacency.

use super::Belief;
use crate::error::Result;
use crate::linalg::dot;
use crate::lp::{Cmp, Lp, LpOutcome};
use crate::model::{DecisionProblem, ProblemBundle, ProductStructure};
use rayon::prelude::*;
use serde::Serialize;

/// Minimum LP margin (on utilities scaled to max-abs 1) for a pair to count
/// as adjacent or an action as strictly rationalizable.
pub const SLACK_THRESHOLD: f64 = 1e-7;

/// Half-width of the band that stands in for the tie `E_p u(a) = E_p u(b)`.
pub const TIE_TOL: f64 = 1e-9;

/// Product problems with more global actions than this get their graph by
/// lifting the per-task graphs instead of solving one LP per pair.
pub const DIRECT_LP_LIMIT: usize = 64;

// Scaled utility differences live in [-2, 2]; shifting the slack variable
// by this keeps it nonnegative.
const SLACK_SHIFT: f64 = 3.0;
const SLACK_CAP: f64 = 1.0;

fn scaled_rows(problem: &DecisionProblem) -> Vec<Vec<f64>> {
    let s = problem.scale();
    let s = if s > 0.0 { s } else { 1.0 };
    problem.utility.iter().map(|r| r.iter().map(|x| x / s).collect()).collect()
}

fn diff(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

/// Solves `max s` over `(p, s)` with `p` in the simplex, the given tie rows
/// held within ±`tie`, and `margin · p ≥ s` for every margin row.
fn max_slack(k: usize, ties: &[Vec<f64>], margins: &[Vec<f64>], tie: f64) -> Option<(Vec<f64>, f64)> {
    let mut obj = vec![0.0; k + 1];
    obj[k] = 1.0;
    let mut lp = Lp::new(obj);
    let mut simplex = vec![1.0; k + 1];
    simplex[k] = 0.0;
    lp.constrain(simplex, Cmp::Eq, 1.0);
    for t in ties {
        let mut row = t.clone();
        row.push(0.0);
        lp.constrain(row.clone(), Cmp::Le, tie);
        lp.constrain(row, Cmp::Ge, -tie);
    }
    for m in margins {
        // m·p − (s' − shift) ≥ 0  ⇔  −m·p + s' ≤ shift
        let mut row: Vec<f64> = m.iter().map(|x| -x).collect();
        row.push(1.0);
        lp.constrain(row, Cmp::Le, SLACK_SHIFT);
    }
    let mut cap = vec![0.0; k + 1];
    cap[k] = 1.0;
    lp.constrain(cap, Cmp::Le, SLACK_SHIFT + SLACK_CAP);
    match lp.solve() {
        LpOutcome::Optimal { x, value } => Some((x[..k].to_vec(), value - SLACK_SHIFT)),
        _ => None,
    }
}

/// Moves `p` within its support so that `delta · p = 0` exactly (up to
/// rounding), undoing the slop the tie band allows.
fn snap_to_tie(p: &mut [f64], delta: &[f64]) {
    let support: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 1e-12).collect();
    if support.len() < 2 {
        return;
    }
    let mean = support.iter().map(|&i| delta[i]).sum::<f64>() / support.len() as f64;
    let mut dir = vec![0.0; p.len()];
    for &i in &support {
        dir[i] = delta[i] - mean;
    }
    let denom = dot(delta, &dir);
    if denom.abs() < 1e-15 {
        return;
    }
    let step = dot(delta, p) / denom;
    let moved: Vec<f64> = p.iter().zip(&dir).map(|(x, d)| x - step * d).collect();
    if moved.iter().all(|x| *x >= 0.0) {
        p.copy_from_slice(&moved);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rationalizability {
    pub strict: bool,
    pub slack: f64,
    pub witness: Option<Belief>,
}

/// Is `a` the unique optimum at some belief? Reports the best margin.
pub fn rationalizability(problem: &DecisionProblem, a: usize) -> Rationalizability {
    let rows = scaled_rows(problem);
    let margins: Vec<Vec<f64>> = (0..rows.len())
        .filter(|&b| b != a)
        .map(|b| diff(&rows[a], &rows[b]))
        .collect();
    match max_slack(problem.n_states(), &[], &margins, 0.0) {
        Some((p, slack)) => Rationalizability {
            strict: slack > SLACK_THRESHOLD,
            slack,
            witness: Some(Belief::normalized(p)),
        },
        None => Rationalizability { strict: false, slack: f64::NEG_INFINITY, witness: None },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjacencyTest {
    pub adjacent: bool,
    pub witness: Option<Belief>,
    /// LP margin; `-inf` when the tie hyperplane misses the simplex.
    pub slack: f64,
}

fn adjacency_scaled(rows: &[Vec<f64>], a: usize, b: usize, tie: f64) -> AdjacencyTest {
    // always solve in a fixed orientation so the test is symmetric
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    let k = rows[a].len();
    let delta = diff(&rows[a], &rows[b]);
    let margins: Vec<Vec<f64>> = (0..rows.len())
        .filter(|&c| c != a && c != b)
        .map(|c| diff(&rows[a], &rows[c]))
        .collect();
    match max_slack(k, std::slice::from_ref(&delta), &margins, tie) {
        Some((mut p, slack)) => {
            let adjacent = slack > SLACK_THRESHOLD;
            if adjacent {
                snap_to_tie(&mut p, &delta);
            }
            AdjacencyTest { adjacent, witness: Some(Belief::normalized(p)), slack }
        }
        None => AdjacencyTest { adjacent: false, witness: None, slack: f64::NEG_INFINITY },
    }
}

/// Decides whether `{a, b}` is exactly the optimal set at some belief.
/// `tol` is the half-width of the tie band ([`TIE_TOL`] by default).
pub fn adjacency_test(problem: &DecisionProblem, a: usize, b: usize, tol: f64) -> AdjacencyTest {
    adjacency_scaled(&scaled_rows(problem), a, b, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub slack: f64,
    pub witness: Belief,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyGraph {
    pub n: usize,
    /// Sorted by `(a, b)` with `a < b`.
    pub edges: Vec<Edge>,
    neighbors: Vec<Vec<usize>>,
}

impl AdjacencyGraph {
    pub fn from_edges(n: usize, mut edges: Vec<Edge>) -> Self {
        for e in edges.iter_mut() {
            if e.a > e.b {
                std::mem::swap(&mut e.a, &mut e.b);
            }
        }
        edges.sort_by_key(|e| (e.a, e.b));
        let mut neighbors = vec![Vec::new(); n];
        for e in &edges {
            neighbors[e.a].push(e.b);
            neighbors[e.b].push(e.a);
        }
        for nb in neighbors.iter_mut() {
            nb.sort_unstable();
        }
        AdjacencyGraph { n, edges, neighbors }
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < self.n && self.neighbors[a].binary_search(&b).is_ok()
    }

    pub fn edge(&self, a: usize, b: usize) -> Option<&Edge> {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edges
            .binary_search_by_key(&key, |e| (e.a, e.b))
            .ok()
            .map(|i| &self.edges[i])
    }

    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.a, e.b)).collect()
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &self.neighbors[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Runs the adjacency LP on every pair (in parallel; results are ordered).
pub fn adjacency_graph(problem: &DecisionProblem, tol: f64) -> AdjacencyGraph {
    let rows = scaled_rows(problem);
    let n = problem.n_actions();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let edges: Vec<Edge> = pairs
        .par_iter()
        .filter_map(|&(a, b)| {
            let t = adjacency_scaled(&rows, a, b, tol);
            match (t.adjacent, t.witness) {
                (true, Some(w)) => Some(Edge { a, b, slack: t.slack, witness: w }),
                _ => None,
            }
        })
        .collect();
    AdjacencyGraph::from_edges(n, edges)
}

fn min_gap(u: &[Vec<f64>], p: &Belief, best: usize, skip: &[usize]) -> f64 {
    let eb = p.expect(&u[best]);
    (0..u.len())
        .filter(|c| !skip.contains(c))
        .map(|c| eb - p.expect(&u[c]))
        .fold(f64::INFINITY, f64::min)
}

/// The adjacency graph of a product problem built from its tasks: two
/// global actions are adjacent iff they differ in exactly one task and are
/// adjacent there. Witnesses are product beliefs.
pub fn lifted_product_graph(product: &ProductStructure, global_scale: f64, tol: f64) -> Result<AdjacencyGraph> {
    let n_tasks = product.n_tasks();
    let mut task_graphs = Vec::with_capacity(n_tasks);
    let mut task_rat = Vec::with_capacity(n_tasks);
    for t in &product.tasks {
        let tp = t.as_problem()?;
        task_graphs.push(adjacency_graph(&tp, tol));
        task_rat.push(
            (0..tp.n_actions())
                .map(|a| {
                    let r = rationalizability(&tp, a);
                    let w = r.witness.unwrap_or_else(|| Belief::uniform(tp.n_states()));
                    let gap = min_gap(&t.utility, &w, a, &[a]);
                    (w, gap)
                })
                .collect::<Vec<_>>(),
        );
    }
    let scale = if global_scale > 0.0 { global_scale } else { 1.0 };
    let n = product.n_actions();
    let ns = product.n_states();
    let state_coords: Vec<Vec<usize>> = (0..ns).map(|s| product.state_coords(s)).collect();

    let mut specs = Vec::new();
    for a in 0..n {
        let ac = product.action_coords(a);
        for (i, g) in task_graphs.iter().enumerate() {
            for &bi in g.neighbors(ac[i]) {
                if bi > ac[i] {
                    let mut bc = ac.clone();
                    bc[i] = bi;
                    specs.push((a, product.action_index(&bc), ac.clone(), i, bi));
                }
            }
        }
    }
    let edges: Vec<Edge> = specs
        .par_iter()
        .map(|(a, b, ac, i, bi)| {
            let task_edge = task_graphs[*i].edge(ac[*i], *bi).expect("task edge exists");
            let mut gap = min_gap(&product.tasks[*i].utility, &task_edge.witness, ac[*i], &[ac[*i], *bi]);
            let factors: Vec<&Belief> = (0..n_tasks)
                .map(|j| {
                    if j == *i {
                        &task_edge.witness
                    } else {
                        let (w, g) = &task_rat[j][ac[j]];
                        gap = gap.min(*g);
                        w
                    }
                })
                .collect();
            let probs: Vec<f64> = state_coords
                .iter()
                .map(|sc| factors.iter().enumerate().map(|(j, f)| f.probs[sc[j]]).product())
                .collect();
            let slack = if gap.is_finite() { gap / scale } else { SLACK_CAP };
            Edge { a: *a, b: *b, slack, witness: Belief::normalized(probs) }
        })
        .collect();
    Ok(AdjacencyGraph::from_edges(n, edges))
}

/// Graph for a bundle, lifting per-task graphs for large products.
pub fn graph_for_bundle(bundle: &ProblemBundle, tol: f64) -> Result<AdjacencyGraph> {
    match &bundle.product {
        Some(prod) if bundle.problem.n_actions() > DIRECT_LP_LIMIT => {
            lifted_product_graph(prod, bundle.problem.scale(), tol)
        }
        _ => Ok(adjacency_graph(&bundle.problem, tol)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::optimal_actions;
    use crate::model::{mc_test, quadratic_loss, star};

    #[test]
    fn quadratic_loss_neighbors_only() {
        let p = quadratic_loss(4).unwrap();
        let t = adjacency_test(&p, 0, 1, TIE_TOL);
        assert!(t.adjacent);
        let w = t.witness.unwrap();
        assert_eq!(optimal_actions(&p, &w, 1e-9), vec![0, 1]);
        let t = adjacency_test(&p, 0, 2, TIE_TOL);
        assert!(!t.adjacent);
    }

    #[test]
    fn star_leaves_not_adjacent() {
        let p = star(4, 0.6).unwrap();
        assert!(!adjacency_test(&p, 0, 1, TIE_TOL).adjacent);
        assert!(adjacency_test(&p, 0, 4, TIE_TOL).adjacent);
    }

    #[test]
    fn symmetric_slack() {
        let p = star(5, 0.3).unwrap();
        let x = adjacency_test(&p, 1, 3, TIE_TOL);
        let y = adjacency_test(&p, 3, 1, TIE_TOL);
        assert!((x.slack - y.slack).abs() <= 1e-9);
    }

    #[test]
    fn infeasible_tie_gives_sentinel() {
        // a strictly dominates b everywhere: the tie plane misses the simplex
        let p = DecisionProblem::new(
            vec!["x".into(), "y".into()],
            vec!["a".into(), "b".into()],
            vec![vec![2.0, 2.0], vec![1.0, 1.0]],
        )
        .unwrap();
        let t = adjacency_test(&p, 0, 1, TIE_TOL);
        assert!(!t.adjacent);
        assert_eq!(t.slack, f64::NEG_INFINITY);
        assert!(t.witness.is_none());
    }

    #[test]
    fn lifted_graph_matches_direct_lp() {
        let prod = mc_test(3, 2).unwrap();
        let global = prod.expand(100).unwrap();
        let direct = adjacency_graph(&global, TIE_TOL);
        let lifted = lifted_product_graph(&prod, global.scale(), TIE_TOL).unwrap();
        assert_eq!(direct.edge_pairs(), lifted.edge_pairs());
        assert_eq!(direct.edges.len(), 12);
        for e in &lifted.edges {
            assert_eq!(optimal_actions(&global, &e.witness, 1e-9), vec![e.a, e.b]);
            assert!(e.slack > SLACK_THRESHOLD);
        }
    }
}
