//! Projection calculus and the alignment characterizations.

mod sets;
mod verdict;
mod weighted;

pub use sets::{alignment_fit, alignment_on_set, piecewise_alignment, AlignmentCertificate, AlignmentFit, PiecewiseAlignment};
pub use verdict::{decide_incentivizable, theorem, Certificate, Status, Verdict, Violation};
pub use weighted::{trivial_dependence, weighted_alignment, weighted_fit, WeightedAlignmentCertificate, WeightedFit};

use crate::linalg::{dot, max_abs, mean, SparseSystem};
use crate::model::{DecisionProblem, QuestionProfile};
use serde::Serialize;

/// Default relative tolerance for alignment residuals.
pub const DEFAULT_TOL: f64 = 1e-8;

/// `v − mean(v)·1`.
pub fn project_zero_sum(v: &[f64]) -> Vec<f64> {
    let m = mean(v);
    v.iter().map(|x| x - m).collect()
}

/// `Δ_a^b = ū(b) − ū(a)`.
pub fn payoff_delta(problem: &DecisionProblem, a: usize, b: usize) -> Vec<f64> {
    project_zero_sum(
        &problem.utility[b]
            .iter()
            .zip(&problem.utility[a])
            .map(|(x, y)| x - y)
            .collect::<Vec<_>>(),
    )
}

/// `1 + max|entry|` over the utility and question rows of `actions`.
pub(crate) fn scale_of(problem: &DecisionProblem, x: &QuestionProfile, actions: &[usize]) -> f64 {
    1.0 + actions
        .iter()
        .map(|&a| max_abs(&problem.utility[a]).max(max_abs(&x.values[a])))
        .fold(0.0, f64::max)
}

pub(crate) fn is_zero(v: &[f64], thr: f64) -> bool {
    max_abs(v) <= thr
}

/// Whether `y` is a multiple of `x` (zero vectors are collinear with all).
pub(crate) fn collinear(x: &[f64], y: &[f64], thr: f64) -> bool {
    if is_zero(x, thr) || is_zero(y, thr) {
        return true;
    }
    let c = dot(x, y) / dot(x, x);
    y.iter().zip(x).all(|(b, a)| (b - c * a).abs() <= thr)
}

/// Finds `γ ≠ 0, κ` with `x = γ y + κ 1`, accepting a relative residual
/// up to `tol`. When `y` is constant, succeeds only for constant `x`
/// (with `γ = 1`).
pub fn questions_equivalent(x: &[f64], y: &[f64], tol: f64) -> Option<(f64, f64)> {
    let scale = 1.0 + max_abs(x).max(max_abs(y));
    let thr = tol * scale;
    let (xb, yb) = (project_zero_sum(x), project_zero_sum(y));
    if is_zero(&yb, thr) {
        return is_zero(&xb, thr).then(|| (1.0, mean(x) - mean(y)));
    }
    let gamma = dot(&xb, &yb) / dot(&yb, &yb);
    let kappa = mean(x) - gamma * mean(y);
    let residual = x
        .iter()
        .zip(y)
        .map(|(a, b)| (a - gamma * b - kappa).abs())
        .fold(0.0, f64::max);
    (residual <= thr && gamma.abs() * max_abs(&yb) > thr).then_some((gamma, kappa))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseCoefficients {
    pub rho: f64,
    pub sigma: f64,
    /// Max-abs of `X̄(b) − ρΔ_a^b − σX̄(a)`.
    pub residual: f64,
    /// False when `Δ_a^b` and `X̄(a)` are collinear and the pair was
    /// picked from a line of solutions.
    pub unique: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseFit {
    pub coefficients: Option<PairwiseCoefficients>,
    /// Residual divided by the input scale.
    pub relative_residual: f64,
    pub reason: Option<String>,
}

/// Least-squares fit of `X̄(b) = ρΔ_a^b + σX̄(a)` with diagnostics.
pub fn pairwise_fit(problem: &DecisionProblem, x: &QuestionProfile, a: usize, b: usize, tol: f64) -> PairwiseFit {
    let scale = scale_of(problem, x, &[a, b]);
    let thr = tol * scale;
    let delta = payoff_delta(problem, a, b);
    let xa = project_zero_sum(&x.values[a]);
    let xb = project_zero_sum(&x.values[b]);
    let k = delta.len();

    let mut sys = SparseSystem::new(2);
    for t in 0..k {
        sys.push(vec![(0, delta[t]), (1, xa[t])], xb[t]);
    }
    let sol = sys.solve();
    let (mut rho, mut sigma) = (sol.x[0], sol.x[1]);
    let residual_of = |r: f64, s: f64| {
        (0..k).map(|t| (xb[t] - r * delta[t] - s * xa[t]).abs()).fold(0.0, f64::max)
    };
    let residual = residual_of(rho, sigma);
    if residual > thr {
        return PairwiseFit {
            coefficients: None,
            relative_residual: residual / scale,
            reason: Some("X̄(b) is not in span{Δ, X̄(a)}".into()),
        };
    }

    let unique = !collinear(&delta, &xa, thr) || is_zero(&delta, thr);
    let unit = 1e-9 * (1.0 + rho.abs() + sigma.abs());
    let small = |v: f64| v.abs() <= unit;
    if !unique {
        // X̄(a) = cΔ: every (ρ, σ) with ρ + σc = ρ₀ + σ₀c fits equally well
        let c = dot(&xa, &delta) / dot(&delta, &delta);
        let target = rho + sigma * c;
        if small(sigma) || small(rho) {
            sigma = 1.0;
            rho = target - c;
            if small(rho) {
                sigma = 2.0;
                rho = target - 2.0 * c;
            }
        }
    }
    if small(sigma) {
        return PairwiseFit {
            coefficients: None,
            relative_residual: residual / scale,
            reason: Some("only σ = 0 fits".into()),
        };
    }
    let residual = residual_of(rho, sigma);
    PairwiseFit {
        coefficients: Some(PairwiseCoefficients { rho, sigma, residual, unique }),
        relative_residual: residual / scale,
        reason: None,
    }
}

/// The pairwise necessary condition on an adjacent pair.
pub fn pairwise_alignment(
    problem: &DecisionProblem,
    x: &QuestionProfile,
    a: usize,
    b: usize,
    tol: f64,
) -> Option<PairwiseCoefficients> {
    pairwise_fit(problem, x, a, b, tol).coefficients
}
