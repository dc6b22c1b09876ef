//! Behavioral checks of a mechanism over the belief simplex: grids,
//! random beliefs, indifference faces, and a refining witness search.

mod check;

pub use check::{
    check_belief, find_distortion_witness, oracle_cross_check, verify_incentivizability,
    BeliefOutcome, CrossCheck, VerificationReport, Witness,
};

use crate::error::{Error, Result};
use crate::geometry::{adjacency_test, Belief, Edge, TIE_TOL};
use crate::linalg::dot;
use crate::model::DecisionProblem;
use crate::synth::ElicitationMethod;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::Serialize;

pub const GRID_CAP: u128 = 2_000_000;
/// Largest state count for which rational grids are used.
pub const GRID_MAX_STATES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub denominator: usize,
    pub samples: usize,
    pub seed: u64,
    pub boundary_per_edge: usize,
    pub tol_action: f64,
    pub tol_report: f64,
    pub refine_rounds: usize,
    pub max_denominator: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            denominator: 12,
            samples: 2000,
            seed: 0,
            boundary_per_edge: 4,
            tol_action: 1e-7,
            tol_report: 1e-6,
            refine_rounds: 4,
            max_denominator: 64,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.denominator < 1 {
            return Err(Error::InvalidParam("grid denominator must be at least 1".into()));
        }
        if !(self.tol_action > 0.0 && self.tol_report > 0.0) {
            return Err(Error::InvalidParam("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// `C(m+k−1, k−1)`, saturating.
pub fn grid_size(k: usize, m: usize) -> u128 {
    let (n, r) = ((m + k - 1) as u128, (k - 1).min(m) as u128);
    let mut c: u128 = 1;
    for i in 0..r {
        c = match c.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    c
}

/// Every belief with entries in `{0, 1/m, …, 1}`, in lexicographic order.
pub fn belief_grid(k: usize, m: usize) -> Result<Vec<Belief>> {
    if k < 2 || m < 1 {
        return Err(Error::InvalidParam("belief grid needs k ≥ 2 and m ≥ 1".into()));
    }
    let count = grid_size(k, m);
    if count > GRID_CAP {
        return Err(Error::GridTooLarge { count, cap: GRID_CAP });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut parts = vec![0usize; k];
    fn fill(out: &mut Vec<Belief>, parts: &mut [usize], i: usize, left: usize, m: usize) {
        if i + 1 == parts.len() {
            parts[i] = left;
            out.push(Belief { probs: parts.iter().map(|&n| n as f64 / m as f64).collect() });
            return;
        }
        for n in 0..=left {
            parts[i] = n;
            fill(out, parts, i + 1, left - n, m);
        }
    }
    fill(&mut out, &mut parts, 0, m, m);
    Ok(out)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn dirichlet_one(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// `n` uniform draws from the simplex.
pub fn dirichlet_sample(k: usize, n: usize, seed: u64) -> Vec<Belief> {
    let mut rng = rng_for(seed, 1);
    (0..n).map(|_| Belief::normalized(dirichlet_one(&mut rng, k))).collect()
}

/// `n` uniform draws from random faces with two to four vertices.
pub fn sparse_sample(k: usize, n: usize, seed: u64) -> Vec<Belief> {
    let mut rng = rng_for(seed, 2);
    (0..n)
        .map(|_| {
            let size = rng.random_range(2..=4usize.min(k));
            let support = rand::seq::index::sample(&mut rng, k, size);
            let w = dirichlet_one(&mut rng, size);
            let mut probs = vec![0.0; k];
            for (i, s) in support.iter().enumerate() {
                probs[s] = w[i];
            }
            Belief::normalized(probs)
        })
        .collect()
}

/// Orthonormal basis completion: `v` minus its projections on `basis`.
fn orthogonalize(mut v: Vec<f64>, basis: &[Vec<f64>]) -> Vec<f64> {
    for b in basis {
        let c = dot(&v, b);
        v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
    }
    v
}

/// Beliefs on the face where `a` and `b` tie and stay optimal, spread
/// around a known point of that face.
pub(crate) fn boundary_from_witness(
    problem: &DecisionProblem,
    edge: &Edge,
    n: usize,
    seed: u64,
    stream: u64,
) -> Vec<Belief> {
    if n == 0 {
        return Vec::new();
    }
    let w = &edge.witness;
    let mut out = vec![w.clone()];
    let k = w.len();
    let (ua, ub) = (&problem.utility[edge.a], &problem.utility[edge.b]);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in [vec![1.0; k], ua.iter().zip(ub).map(|(x, y)| x - y).collect::<Vec<_>>()] {
        let o = orthogonalize(v, &basis);
        let nrm = dot(&o, &o).sqrt();
        if nrm > 1e-12 {
            basis.push(o.into_iter().map(|x| x / nrm).collect());
        }
    }
    if basis.len() >= k {
        return out;
    }
    let margins: Vec<(f64, Vec<f64>)> = (0..problem.n_actions())
        .filter(|&c| c != edge.a && c != edge.b)
        .map(|c| {
            let d: Vec<f64> = ua.iter().zip(&problem.utility[c]).map(|(x, y)| x - y).collect();
            (w.expect(&d), d)
        })
        .collect();
    let mut rng = rng_for(seed, stream);
    let mut attempts = 0;
    while out.len() < n && attempts < 8 * n {
        attempts += 1;
        let raw: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
        let dir = orthogonalize(raw, &basis);
        let nrm = dot(&dir, &dir).sqrt();
        if nrm < 1e-12 {
            continue;
        }
        let dir: Vec<f64> = dir.into_iter().map(|x| x / nrm).collect();
        // ratio test: stay in the simplex and keep every other action weakly worse
        let mut t_max = f64::INFINITY;
        for (p, d) in w.probs.iter().zip(&dir) {
            if *d < 0.0 {
                t_max = t_max.min(p / -d);
            }
        }
        for (m, d) in &margins {
            let rate = dot(&dir, d);
            if rate < 0.0 {
                t_max = t_max.min(m.max(0.0) / -rate);
            }
        }
        if !(t_max.is_finite() && t_max > 0.0) {
            continue;
        }
        let t = t_max * rng.random_range(0.05..0.95);
        let probs: Vec<f64> = w.probs.iter().zip(&dir).map(|(p, d)| p + t * d).collect();
        out.push(Belief::normalized(probs));
    }
    out
}

/// Beliefs where `a` and `b` are both optimal. The first one is the
/// adjacency witness itself.
pub fn boundary_beliefs(problem: &DecisionProblem, a: usize, b: usize, n: usize, seed: u64) -> Result<Vec<Belief>> {
    let test = adjacency_test(problem, a, b, TIE_TOL);
    match (test.adjacent, test.witness) {
        (true, Some(witness)) => {
            let edge = Edge { a: a.min(b), b: a.max(b), slack: test.slack, witness };
            Ok(boundary_from_witness(problem, &edge, n, seed, 3))
        }
        _ => Err(Error::NotAdjacent(a, b)),
    }
}

/// Vertex of the concave quadratic `r ↦ E_p V(r, a, ·)`: the optimal
/// internal report and the value there.
pub fn expected_payoff(method: &ElicitationMethod, p: &Belief, a: usize) -> (f64, f64) {
    let r = p.expect(&method.c1[a]);
    (r, p.expect(&method.c0[a]) + 0.5 * r * r)
}

/// `V*(p)`, the best expected payment over actions and reports.
pub fn value_of_information(method: &ElicitationMethod, p: &Belief) -> f64 {
    (0..method.n_actions())
        .map(|a| expected_payoff(method, p, a).1)
        .fold(f64::NEG_INFINITY, f64::max)
}
