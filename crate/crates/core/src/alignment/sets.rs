//! Alignment on a set of actions, and piecewise alignment over a
//! splitting collection.

use super::{collinear, is_zero, project_zero_sum, scale_of};
use crate::geometry::{splitting_collections, AdjacencyGraph, SplittingCollection};
use crate::linalg::{dot, max_abs, mean, SparseSystem};
use crate::model::{DecisionProblem, QuestionProfile};
use serde::Serialize;

/// `X(a) = γ(a)(u(a) + d) + κ(a)` on `scope` (nontrivial), or
/// `X(a) = γ(a)d + κ(a)` (trivial).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentCertificate {
    pub trivial: bool,
    pub scope: Vec<usize>,
    /// Parallel to `scope`.
    pub gamma: Vec<f64>,
    /// Parallel to `scope`.
    pub kappa: Vec<f64>,
    pub d: Vec<f64>,
    /// Max-abs re-substitution residual of the defining identity.
    pub residual: f64,
}

impl AlignmentCertificate {
    pub fn position(&self, a: usize) -> Option<usize> {
        self.scope.iter().position(|&s| s == a)
    }

    pub fn gamma_of(&self, a: usize) -> Option<f64> {
        self.position(a).map(|i| self.gamma[i])
    }

    pub fn kappa_of(&self, a: usize) -> Option<f64> {
        self.position(a).map(|i| self.kappa[i])
    }

    /// The vector the question is an affine image of: `u(a)+d` or `d`.
    pub fn base_row(&self, problem: &DecisionProblem, a: usize) -> Vec<f64> {
        if self.trivial {
            self.d.clone()
        } else {
            problem.utility[a].iter().zip(&self.d).map(|(u, d)| u + d).collect()
        }
    }

    /// Max-abs of `X(a) − γ(a)·base(a) − κ(a)` over the scope.
    pub fn residual_on(&self, problem: &DecisionProblem, x: &QuestionProfile) -> f64 {
        self.scope
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                self.base_row(problem, a)
                    .iter()
                    .zip(&x.values[a])
                    .map(|(b, xv)| (xv - self.gamma[i] * b - self.kappa[i]).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentFit {
    pub certificate: Option<AlignmentCertificate>,
    /// Least-squares residual of the linearized system over the input scale.
    pub relative_residual: f64,
    pub reason: Option<String>,
}

fn trivial_certificate(
    problem: &DecisionProblem,
    x: &QuestionProfile,
    scope: &[usize],
    thr: f64,
) -> Option<AlignmentCertificate> {
    let bars: Vec<Vec<f64>> = scope.iter().map(|&a| project_zero_sum(&x.values[a])).collect();
    let zero: Vec<bool> = bars.iter().map(|b| is_zero(b, thr)).collect();
    let k = problem.n_states();
    let mut cert = AlignmentCertificate {
        trivial: true,
        scope: scope.to_vec(),
        gamma: vec![1.0; scope.len()],
        kappa: scope.iter().map(|&a| mean(&x.values[a])).collect(),
        d: vec![0.0; k],
        residual: 0.0,
    };
    if zero.iter().all(|z| *z) {
        cert.residual = cert.residual_on(problem, x);
        return Some(cert);
    }
    // a constant row next to a nonconstant one cannot be γ·d with γ ≠ 0
    if zero.iter().any(|z| *z) {
        return None;
    }
    let d = bars[0].clone();
    if !bars.iter().all(|b| collinear(&d, b, thr)) {
        return None;
    }
    let dd = dot(&d, &d);
    cert.gamma = bars.iter().map(|b| dot(b, &d) / dd).collect();
    cert.d = d;
    cert.residual = cert.residual_on(problem, x);
    Some(cert)
}

/// Alignment on `scope` with full diagnostics.
pub fn alignment_fit(problem: &DecisionProblem, x: &QuestionProfile, scope: &[usize], tol: f64) -> AlignmentFit {
    let scale = scale_of(problem, x, scope);
    let thr = tol * scale;
    if let Some(cert) = trivial_certificate(problem, x, scope, thr) {
        return AlignmentFit { certificate: Some(cert), relative_residual: 0.0, reason: None };
    }

    // unknowns: g(a) for nonconstant rows, then D(θ)
    let k = problem.n_states();
    let bars: Vec<Vec<f64>> = scope.iter().map(|&a| project_zero_sum(&x.values[a])).collect();
    let mut gidx = vec![None; scope.len()];
    let mut ng = 0;
    for (i, b) in bars.iter().enumerate() {
        if !is_zero(b, thr) {
            gidx[i] = Some(ng);
            ng += 1;
        }
    }
    let mut sys = SparseSystem::new(ng + k);
    for (i, &a) in scope.iter().enumerate() {
        let ub = project_zero_sum(&problem.utility[a]);
        for t in 0..k {
            let mut row = vec![(ng + t, -1.0)];
            if let Some(g) = gidx[i] {
                row.push((g, bars[i][t]));
            }
            sys.push(row, ub[t]);
        }
    }
    sys.push((0..k).map(|t| (ng + t, 1.0)).collect(), 0.0);
    let sol = sys.solve();
    let relative_residual = sol.residual / scale;
    if sol.residual > thr {
        return AlignmentFit {
            certificate: None,
            relative_residual,
            reason: Some("no common shift d aligns the question with u".into()),
        };
    }
    let d: Vec<f64> = sol.x[ng..].to_vec();
    let mut gamma = Vec::with_capacity(scope.len());
    let mut kappa = Vec::with_capacity(scope.len());
    for (i, &a) in scope.iter().enumerate() {
        let g = match gidx[i] {
            Some(j) => {
                let g = sol.x[j];
                // g·X̄(a) has to carry real weight for γ = 1/g to be finite
                if g.abs() * max_abs(&bars[i]) <= thr {
                    return AlignmentFit {
                        certificate: None,
                        relative_residual,
                        reason: Some(format!("γ would be infinite for action {a}")),
                    };
                }
                g
            }
            None => 1.0,
        };
        let gm = 1.0 / g;
        gamma.push(gm);
        kappa.push(mean(&x.values[a]) - gm * (mean(&problem.utility[a]) + mean(&d)));
    }
    let mut cert = AlignmentCertificate { trivial: false, scope: scope.to_vec(), gamma, kappa, d, residual: 0.0 };
    cert.residual = cert.residual_on(problem, x);
    AlignmentFit { certificate: Some(cert), relative_residual, reason: None }
}

/// Certificate that the question is aligned with `u` on `scope`.
pub fn alignment_on_set(
    problem: &DecisionProblem,
    x: &QuestionProfile,
    scope: &[usize],
    tol: f64,
) -> Option<AlignmentCertificate> {
    alignment_fit(problem, x, scope, tol).certificate
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseAlignment {
    pub collection: SplittingCollection,
    /// One certificate per part, in the collection's order.
    pub certs: Vec<AlignmentCertificate>,
}

/// Alignment on every part of the graph's splitting collection.
pub fn piecewise_alignment(
    problem: &DecisionProblem,
    x: &QuestionProfile,
    graph: &AdjacencyGraph,
    tol: f64,
) -> Option<PiecewiseAlignment> {
    let collection = splitting_collections(graph).ok()?;
    let certs = collection
        .parts
        .iter()
        .map(|part| alignment_on_set(problem, x, part, tol))
        .collect::<Option<Vec<_>>>()?;
    Some(PiecewiseAlignment { collection, certs })
}
