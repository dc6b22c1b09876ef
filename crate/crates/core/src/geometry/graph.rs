//! Graph-structural predicates over the adjacency graph.

use super::adjacency::{lifted_product_graph, AdjacencyGraph, TIE_TOL};
use crate::error::{Error, Result};
use crate::model::ProductStructure;
use serde::Serialize;

pub const DEFAULT_CYCLE_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphClass {
    pub n_actions: usize,
    pub n_edges: usize,
    pub connected: bool,
    pub tree: bool,
    pub complete: bool,
    pub product_consistent: bool,
    /// One of `tree (path)`, `tree (star)`, `tree`, `complete`,
    /// `product-consistent`, `other`, `disconnected`.
    pub kind: String,
}

/// Reports the shape of the graph. `product_consistent` is only ever true
/// when a product structure is supplied and the edge set equals the lift
/// of the per-task graphs.
pub fn classify_graph(graph: &AdjacencyGraph, product: Option<&ProductStructure>) -> GraphClass {
    let n = graph.n;
    let m = graph.edges.len();
    let connected = graph.is_connected();
    let tree = connected && m + 1 == n;
    let complete = n >= 2 && m == n * (n - 1) / 2;
    let product_consistent = product
        .filter(|p| p.n_actions() == n)
        .and_then(|p| lifted_product_graph(p, 1.0, TIE_TOL).ok())
        .map(|lifted| lifted.edge_pairs() == graph.edge_pairs())
        .unwrap_or(false);
    let kind = if !connected {
        "disconnected"
    } else if tree && (0..n).all(|v| graph.degree(v) <= 2) {
        "tree (path)"
    } else if tree && (0..n).any(|v| graph.degree(v) == n - 1) {
        "tree (star)"
    } else if tree {
        "tree"
    } else if complete {
        "complete"
    } else if product_consistent {
        "product-consistent"
    } else {
        "other"
    };
    GraphClass {
        n_actions: n,
        n_edges: m,
        connected,
        tree,
        complete,
        product_consistent,
        kind: kind.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplittingCollection {
    /// Each part sorted ascending; parts sorted lexicographically.
    pub parts: Vec<Vec<usize>>,
    pub splitting_actions: Vec<usize>,
}

struct Blocks<'a> {
    g: &'a AdjacencyGraph,
    disc: Vec<usize>,
    low: Vec<usize>,
    timer: usize,
    stack: Vec<(usize, usize)>,
    blocks: Vec<Vec<usize>>,
    articulation: Vec<bool>,
}

impl Blocks<'_> {
    fn visit(&mut self, v: usize, parent: Option<usize>) {
        self.timer += 1;
        self.disc[v] = self.timer;
        self.low[v] = self.timer;
        let mut children = 0;
        for i in 0..self.g.neighbors(v).len() {
            let w = self.g.neighbors(v)[i];
            if self.disc[w] == 0 {
                children += 1;
                self.stack.push((v, w));
                self.visit(w, Some(v));
                self.low[v] = self.low[v].min(self.low[w]);
                if self.low[w] >= self.disc[v] {
                    if parent.is_some() {
                        self.articulation[v] = true;
                    }
                    let mut block = Vec::new();
                    while let Some((x, y)) = self.stack.pop() {
                        block.push(x);
                        block.push(y);
                        if (x, y) == (v, w) {
                            break;
                        }
                    }
                    block.sort_unstable();
                    block.dedup();
                    self.blocks.push(block);
                }
            } else if Some(w) != parent && self.disc[w] < self.disc[v] {
                self.stack.push((v, w));
                self.low[v] = self.low[v].min(self.disc[w]);
            }
        }
        if parent.is_none() && children > 1 {
            self.articulation[v] = true;
        }
    }
}

/// Decomposes the graph into biconnected blocks glued at articulation
/// actions. For a tree this is the set of edges.
pub fn splitting_collections(graph: &AdjacencyGraph) -> Result<SplittingCollection> {
    if !graph.is_connected() {
        return Err(Error::Disconnected);
    }
    let n = graph.n;
    let mut st = Blocks {
        g: graph,
        disc: vec![0; n],
        low: vec![0; n],
        timer: 0,
        stack: Vec::new(),
        blocks: Vec::new(),
        articulation: vec![false; n],
    };
    if n > 0 {
        st.visit(0, None);
    }
    let mut parts = st.blocks;
    if parts.is_empty() {
        parts.push((0..n).collect());
    }
    parts.sort();
    let splitting_actions = (0..n).filter(|&v| st.articulation[v]).collect();
    Ok(SplittingCollection { parts, splitting_actions })
}

/// A simple cycle `a_0, …, a_{n−1}` (the closing repeat of `a_0` is implied).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cycle {
    pub actions: Vec<usize>,
}

impl Cycle {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn contains(&self, a: usize) -> bool {
        self.actions.contains(&a)
    }

    /// The same cycle started at position `k`, optionally reversed.
    pub fn relabeled(&self, k: usize, reverse: bool) -> Cycle {
        let n = self.len();
        let actions = (0..n)
            .map(|i| {
                let j = if reverse { (k + n - i) % n } else { (k + i) % n };
                self.actions[j]
            })
            .collect();
        Cycle { actions }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleList {
    pub cycles: Vec<Cycle>,
    pub truncated: bool,
}

/// All simple cycles of length `3..=max_len`, each listed once, starting
/// at its smallest action and oriented so the second entry is smaller than
/// the last.
pub fn enumerate_cycles(graph: &AdjacencyGraph, max_len: usize, cap: usize) -> CycleList {
    enumerate_cycles_within(graph, &vec![true; graph.n], max_len, cap)
}

/// As [`enumerate_cycles`] but only through actions with `allowed[v]`.
pub fn enumerate_cycles_within(graph: &AdjacencyGraph, allowed: &[bool], max_len: usize, cap: usize) -> CycleList {
    let mut out = CycleList { cycles: Vec::new(), truncated: false };
    let mut on_path = vec![false; graph.n];
    for s in 0..graph.n {
        if !allowed[s] {
            continue;
        }
        let mut path = vec![s];
        on_path[s] = true;
        extend(graph, allowed, s, &mut path, &mut on_path, max_len, cap, &mut out);
        on_path[s] = false;
        if out.truncated {
            break;
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn extend(
    g: &AdjacencyGraph,
    allowed: &[bool],
    start: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    max_len: usize,
    cap: usize,
    out: &mut CycleList,
) {
    let v = *path.last().expect("path is nonempty");
    for &w in g.neighbors(v) {
        if out.truncated {
            return;
        }
        if w == start && path.len() >= 3 && path[1] < v {
            if out.cycles.len() >= cap {
                out.truncated = true;
                return;
            }
            out.cycles.push(Cycle { actions: path.clone() });
        } else if w > start && allowed[w] && !on_path[w] && path.len() < max_len {
            path.push(w);
            on_path[w] = true;
            extend(g, allowed, start, path, on_path, max_len, cap, out);
            on_path[w] = false;
            path.pop();
        }
    }
}
