//! Beliefs, optimal actions, the adjacency graph and the structural
//! predicates that decide which characterization applies.

mod adjacency;
mod cycles;
mod graph;

pub use adjacency::{
    adjacency_graph, adjacency_test, graph_for_bundle, lifted_product_graph, rationalizability,
    AdjacencyGraph, AdjacencyTest, Edge, Rationalizability, DIRECT_LP_LIMIT, SLACK_THRESHOLD,
    TIE_TOL,
};
pub use cycles::{
    cycle_rich, internal_independence, CycleRichLimits, CycleRichness, Independence, Richness,
    SubsetCertificate,
};
pub use graph::{
    classify_graph, enumerate_cycles, enumerate_cycles_within, splitting_collections, Cycle,
    CycleList, GraphClass, SplittingCollection, DEFAULT_CYCLE_CAP,
};

use crate::error::{Error, Result};
use crate::model::DecisionProblem;
use serde::Serialize;

/// A probability vector over states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Belief {
    pub probs: Vec<f64>,
}

impl Belief {
    /// Checks nonnegativity and that the entries sum to one within 1e-12.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidParam("belief entries must be finite and nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParam(format!("belief sums to {total}, not 1")));
        }
        Ok(Belief { probs })
    }

    /// Clips negative entries and rescales to sum one.
    pub fn normalized(mut w: Vec<f64>) -> Self {
        for x in w.iter_mut() {
            if x.is_nan() || *x <= 0.0 {
                *x = 0.0;
            }
        }
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            for x in w.iter_mut() {
                *x /= total;
            }
        } else {
            let k = w.len() as f64;
            w.iter_mut().for_each(|x| *x = 1.0 / k);
        }
        Belief { probs: w }
    }

    pub fn uniform(k: usize) -> Self {
        Belief { probs: vec![1.0 / k as f64; k] }
    }

    pub fn point(k: usize, i: usize) -> Self {
        let mut probs = vec![0.0; k];
        probs[i] = 1.0;
        Belief { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn expect(&self, row: &[f64]) -> f64 {
        self.probs.iter().zip(row).map(|(p, x)| p * x).sum()
    }
}

/// Expected utility of every action.
pub fn expected_utilities(problem: &DecisionProblem, p: &Belief) -> Vec<f64> {
    problem.utility.iter().map(|row| p.expect(row)).collect()
}

/// Indices whose value is within `tol·(1+|max|)` of the maximum.
pub fn tol_argmax(values: &[f64], tol: f64) -> Vec<usize> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cut = max - tol * (1.0 + max.abs());
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v >= cut)
        .map(|(i, _)| i)
        .collect()
}

/// The set `A(p)` of optimal actions, up to a relative tolerance.
pub fn optimal_actions(problem: &DecisionProblem, p: &Belief, tol: f64) -> Vec<usize> {
    tol_argmax(&expected_utilities(problem, p), tol)
}
