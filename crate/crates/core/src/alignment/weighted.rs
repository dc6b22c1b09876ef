//! Weighted alignment for product problems.

use super::{collinear, is_zero, project_zero_sum, scale_of};
use crate::linalg::{max_abs, mean, SparseSystem};
use crate::model::{DecisionProblem, ProductStructure, QuestionProfile};
use serde::Serialize;

/// `X(a;θ) = κ(a) + v(a)(d(θ) + Σ_i τ_i u_i(a_i,θ_i))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedAlignmentCertificate {
    pub v: Vec<f64>,
    pub kappa: Vec<f64>,
    pub tau: Vec<f64>,
    pub d: Vec<f64>,
    /// Max-abs re-substitution residual.
    pub residual: f64,
}

impl WeightedAlignmentCertificate {
    /// `d(θ) + Σ_i τ_i u_i(a_i, θ_i)` for every state.
    pub fn base_row(&self, product: &ProductStructure, a: usize) -> Vec<f64> {
        let ac = product.action_coords(a);
        (0..self.d.len())
            .map(|t| {
                let sc = product.state_coords(t);
                self.d[t]
                    + self
                        .tau
                        .iter()
                        .enumerate()
                        .map(|(i, tau)| tau * product.tasks[i].utility[ac[i]][sc[i]])
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn residual_on(&self, product: &ProductStructure, x: &QuestionProfile) -> f64 {
        (0..x.values.len())
            .map(|a| {
                self.base_row(product, a)
                    .iter()
                    .zip(&x.values[a])
                    .map(|(b, xv)| (xv - self.kappa[a] - self.v[a] * b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

/// Does the question depend on task `i` only through collinear rows?
pub fn trivial_dependence(product: &ProductStructure, x: &QuestionProfile, task: usize, tol: f64) -> bool {
    let n = product.n_actions();
    let scale = 1.0 + x.values.iter().map(|r| max_abs(r)).fold(0.0, f64::max);
    let thr = tol * scale;
    let bars: Vec<Vec<f64>> = x.values.iter().map(|r| project_zero_sum(r)).collect();
    let mut seen = vec![false; n];
    for a in 0..n {
        if seen[a] {
            continue;
        }
        let ac = product.action_coords(a);
        let group: Vec<usize> = (0..product.tasks[task].actions.len())
            .map(|ai| {
                let mut c = ac.clone();
                c[task] = ai;
                product.action_index(&c)
            })
            .collect();
        for &g in &group {
            seen[g] = true;
        }
        for (i, &p) in group.iter().enumerate() {
            for &q in &group[i + 1..] {
                if !collinear(&bars[p], &bars[q], thr) {
                    return false;
                }
            }
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedFit {
    pub certificate: Option<WeightedAlignmentCertificate>,
    pub relative_residual: f64,
    pub reason: Option<String>,
}

/// Solves `g(a)X̄(a) − Σ_i τ_i Ū_i(a_i) − D = 0` with `ΣD = 0` and the
/// first nonconstant row pinned to `g = 1`.
pub fn weighted_fit(
    product: &ProductStructure,
    problem: &DecisionProblem,
    x: &QuestionProfile,
    tol: f64,
) -> WeightedFit {
    let na = problem.n_actions();
    let k = problem.n_states();
    let n_tasks = product.n_tasks();
    let all: Vec<usize> = (0..na).collect();
    let scale = scale_of(problem, x, &all);
    let thr = tol * scale;
    let bars: Vec<Vec<f64>> = x.values.iter().map(|r| project_zero_sum(r)).collect();

    let mut gidx = vec![None; na];
    let mut ng = 0;
    for a in 0..na {
        if !is_zero(&bars[a], thr) {
            gidx[a] = Some(ng);
            ng += 1;
        }
    }
    let Some(pinned) = gidx.iter().position(|g| g.is_some()) else {
        // constant question: κ(a) = X(a), v = 1, τ = 0, d = 0
        let cert = WeightedAlignmentCertificate {
            v: vec![1.0; na],
            kappa: x.values.iter().map(|r| mean(r)).collect(),
            tau: vec![0.0; n_tasks],
            d: vec![0.0; k],
            residual: 0.0,
        };
        return WeightedFit { certificate: Some(cert), relative_residual: 0.0, reason: None };
    };

    // projected lifts Ū_i(a_i), cached per (task, action)
    let lifts: Vec<Vec<Vec<f64>>> = (0..n_tasks)
        .map(|i| {
            (0..product.tasks[i].actions.len())
                .map(|ai| project_zero_sum(&product.lifted_task_row(i, ai)))
                .collect()
        })
        .collect();

    let tau0 = ng;
    let d0 = ng + n_tasks;
    let mut sys = SparseSystem::new(ng + n_tasks + k);
    for a in 0..na {
        let ac = product.action_coords(a);
        for t in 0..k {
            let mut row = Vec::with_capacity(n_tasks + 2);
            if let Some(g) = gidx[a] {
                row.push((g, bars[a][t]));
            }
            for i in 0..n_tasks {
                let v = lifts[i][ac[i]][t];
                if v != 0.0 {
                    row.push((tau0 + i, -v));
                }
            }
            row.push((d0 + t, -1.0));
            sys.push(row, 0.0);
        }
    }
    sys.push((0..k).map(|t| (d0 + t, 1.0)).collect(), 0.0);
    sys.push(vec![(gidx[pinned].expect("pinned row has g"), 1.0)], 1.0);
    let sol = sys.solve();
    let relative_residual = sol.residual / scale;
    if sol.residual > thr {
        return WeightedFit {
            certificate: None,
            relative_residual,
            reason: Some("no weights τ and shift d fit every action".into()),
        };
    }

    let tau = sol.x[tau0..d0].to_vec();
    let d = sol.x[d0..].to_vec();
    let mut v = vec![1.0; na];
    for a in 0..na {
        if let Some(j) = gidx[a] {
            let g = sol.x[j];
            if g.abs() * max_abs(&bars[a]) <= thr {
                return WeightedFit {
                    certificate: None,
                    relative_residual,
                    reason: Some(format!("v would be infinite for action {a}")),
                };
            }
            v[a] = 1.0 / g;
        }
    }
    let mut cert = WeightedAlignmentCertificate { v, kappa: vec![0.0; na], tau, d, residual: 0.0 };
    for a in 0..na {
        cert.kappa[a] = mean(&x.values[a]) - cert.v[a] * mean(&cert.base_row(product, a));
    }
    cert.residual = cert.residual_on(product, x);
    WeightedFit { certificate: Some(cert), relative_residual, reason: None }
}

pub fn weighted_alignment(
    product: &ProductStructure,
    problem: &DecisionProblem,
    x: &QuestionProfile,
    tol: f64,
) -> Option<WeightedAlignmentCertificate> {
    weighted_fit(product, problem, x, tol).certificate
}
