use super::{
    belief_grid, boundary_from_witness, dirichlet_sample, expected_payoff, sparse_sample, GridSpec,
    GRID_MAX_STATES,
};
use crate::alignment::{decide_incentivizable, Status};
use crate::error::{Error, Result};
use crate::geometry::{expected_utilities, graph_for_bundle, tol_argmax, Belief, TIE_TOL};
use crate::model::{ProblemBundle, QuestionProfile};
use crate::synth::{naive_bdm, synthesize, ElicitationMethod};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub belief: Belief,
    pub u_optimal: Vec<usize>,
    pub v_optimal: Vec<usize>,
    /// Largest distance between a chosen internal report and the image
    /// of the true expectation.
    pub report_gap: f64,
    /// `V*(p)` minus the worst value among u-optimal actions.
    pub value_gap: f64,
}

impl Witness {
    /// Whether the discrepancy clears ten times the tolerances.
    pub fn confirmed(&self, spec: &GridSpec) -> bool {
        self.value_gap > 10.0 * spec.tol_action || self.report_gap > 10.0 * spec.tol_report
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BeliefOutcome {
    Pass,
    Ambiguous,
    Fail(Witness),
}

fn near_tie(values: &[f64], tol: f64) -> bool {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s = 1.0 + max.abs();
    values.iter().any(|v| {
        let gap = (max - v) / s;
        gap > tol / 10.0 && gap <= 10.0 * tol
    })
}

/// Compares the u-optimal and V-optimal action sets at one belief, and
/// the chosen reports against the truthful ones.
pub fn check_belief(
    bundle: &ProblemBundle,
    x: &QuestionProfile,
    method: &ElicitationMethod,
    p: &Belief,
    spec: &GridSpec,
) -> BeliefOutcome {
    let eu = expected_utilities(&bundle.problem, p);
    let payoffs: Vec<(f64, f64)> = (0..method.n_actions()).map(|a| expected_payoff(method, p, a)).collect();
    let vals: Vec<f64> = payoffs.iter().map(|v| v.1).collect();
    let u_optimal = tol_argmax(&eu, spec.tol_action);
    let v_optimal = tol_argmax(&vals, spec.tol_action);
    let report_gap = v_optimal
        .iter()
        .map(|&a| {
            let truthful = method.transform[a].apply(p.expect(&x.values[a]));
            (payoffs[a].0 - truthful).abs() / (1.0 + truthful.abs())
        })
        .fold(0.0, f64::max);
    if u_optimal == v_optimal && report_gap <= spec.tol_report {
        return BeliefOutcome::Pass;
    }
    let vstar = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let worst = u_optimal.iter().map(|&a| vals[a]).fold(f64::INFINITY, f64::min);
    let value_gap = (vstar - worst) / (1.0 + vstar.abs());
    let w = Witness { belief: p.clone(), u_optimal, v_optimal, report_gap, value_gap };
    if !w.confirmed(spec) && (near_tie(&eu, spec.tol_action) || near_tie(&vals, spec.tol_action)) {
        BeliefOutcome::Ambiguous
    } else {
        BeliefOutcome::Fail(w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checked: usize,
    pub passes: usize,
    pub boundary_ambiguous: usize,
    pub failures: Vec<Witness>,
    pub passed: bool,
    pub spec: GridSpec,
    pub notes: Vec<String>,
}

/// Grid (small state spaces), Dirichlet draws and indifference-face
/// beliefs for every adjacent pair.
fn test_beliefs(bundle: &ProblemBundle, spec: &GridSpec, notes: &mut Vec<String>) -> Result<Vec<Belief>> {
    let k = bundle.problem.n_states();
    let mut beliefs = Vec::new();
    if k <= GRID_MAX_STATES {
        match belief_grid(k, spec.denominator) {
            Ok(g) => beliefs.extend(g),
            Err(Error::GridTooLarge { count, .. }) => {
                notes.push(format!("grid with {count} points skipped; relying on samples"))
            }
            Err(e) => return Err(e),
        }
    } else {
        notes.push(format!("{k} states: grid skipped, Dirichlet sampling only"));
    }
    beliefs.extend(dirichlet_sample(k, spec.samples, spec.seed));
    if spec.boundary_per_edge > 0 {
        let graph = graph_for_bundle(bundle, TIE_TOL)?;
        let faces: Vec<Vec<Belief>> = graph
            .edges
            .par_iter()
            .enumerate()
            .map(|(i, e)| boundary_from_witness(&bundle.problem, e, spec.boundary_per_edge, spec.seed, 16 + i as u64))
            .collect();
        beliefs.extend(faces.into_iter().flatten());
    }
    Ok(beliefs)
}

/// Checks that `method` makes truthful reporting after a u-optimal action
/// optimal, and nothing else, at every test belief.
pub fn verify_incentivizability(
    bundle: &ProblemBundle,
    method: &ElicitationMethod,
    spec: &GridSpec,
) -> Result<VerificationReport> {
    spec.validate()?;
    let x = bundle.question()?;
    method.check_dims(bundle.problem.n_actions(), bundle.problem.n_states())?;
    let mut notes = Vec::new();
    let beliefs = test_beliefs(bundle, spec, &mut notes)?;
    let outcomes: Vec<BeliefOutcome> =
        beliefs.par_iter().map(|p| check_belief(bundle, x, method, p, spec)).collect();
    let mut report = VerificationReport {
        checked: outcomes.len(),
        passes: 0,
        boundary_ambiguous: 0,
        failures: Vec::new(),
        passed: false,
        spec: *spec,
        notes,
    };
    for o in outcomes {
        match o {
            BeliefOutcome::Pass => report.passes += 1,
            BeliefOutcome::Ambiguous => report.boundary_ambiguous += 1,
            BeliefOutcome::Fail(w) => report.failures.push(w),
        }
    }
    report.passed = report.failures.is_empty();
    Ok(report)
}

fn score(o: &BeliefOutcome, spec: &GridSpec) -> f64 {
    match o {
        BeliefOutcome::Fail(w) => (w.value_gap / spec.tol_action).max(w.report_gap / spec.tol_report),
        _ => 0.0,
    }
}

fn first_confirmed(outcomes: Vec<BeliefOutcome>, spec: &GridSpec) -> Option<Witness> {
    outcomes.into_iter().find_map(|o| match o {
        BeliefOutcome::Fail(w) if w.confirmed(spec) => Some(w),
        _ => None,
    })
}

/// Moves of `±(e_i − e_j)/m` from `p`; sampled when `k` is large.
fn neighbours(p: &Belief, m: usize, rng: &mut ChaCha8Rng) -> Vec<Belief> {
    let k = p.len();
    let step = 1.0 / m as f64;
    let pairs: Vec<(usize, usize)> = if k <= 32 {
        (0..k).flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j))).collect()
    } else {
        (0..1000)
            .map(|_| {
                let i = rng.random_range(0..k);
                let j = (i + rng.random_range(1..k)) % k;
                (i, j)
            })
            .collect()
    };
    pairs
        .into_iter()
        .filter(|&(_, j)| p.probs[j] >= step)
        .map(|(i, j)| {
            let mut q = p.probs.clone();
            q[i] += step;
            q[j] -= step;
            Belief::normalized(q)
        })
        .collect()
}

/// Searches for a belief at which `method` distorts the decision or the
/// report. Returns the first confirmed witness.
pub fn find_distortion_witness(
    bundle: &ProblemBundle,
    method: &ElicitationMethod,
    spec: &GridSpec,
) -> Result<Option<Witness>> {
    spec.validate()?;
    let x = bundle.question()?;
    method.check_dims(bundle.problem.n_actions(), bundle.problem.n_states())?;
    let k = bundle.problem.n_states();
    let mut notes = Vec::new();
    let mut beliefs: Vec<Belief> = (0..k).map(|i| Belief::point(k, i)).collect();
    beliefs.extend(test_beliefs(bundle, spec, &mut notes)?);
    beliefs.extend(sparse_sample(k, spec.samples, spec.seed));
    let outcomes: Vec<BeliefOutcome> =
        beliefs.par_iter().map(|p| check_belief(bundle, x, method, p, spec)).collect();

    let mut best = outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| (score(o, spec), i))
        .fold((0.0, 0), |acc, s| if s.0 > acc.0 { s } else { acc });
    let mut center = beliefs[best.1].clone();
    if let Some(w) = first_confirmed(outcomes, spec) {
        return Ok(Some(w));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed);
    let mut m = spec.denominator.max(1);
    for _ in 0..spec.refine_rounds {
        m = (2 * m).min(spec.max_denominator.max(1));
        let around = neighbours(&center, m, &mut rng);
        let outcomes: Vec<BeliefOutcome> =
            around.par_iter().map(|p| check_belief(bundle, x, method, p, spec)).collect();
        for (i, o) in outcomes.iter().enumerate() {
            let s = score(o, spec);
            if s > best.0 {
                best = (s, i);
                center = around[i].clone();
            }
        }
        if let Some(w) = first_confirmed(outcomes, spec) {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheck {
    pub status: Status,
    /// `None` for inconclusive verdicts.
    pub consistent: Option<bool>,
    pub detail: String,
}

/// Largest `|Θ|·|A|` the cross-check will attempt.
pub const CROSS_CHECK_GUARD: usize = 70_000;

/// Ties the algebraic verdict to behavior: incentivizable verdicts must
/// yield a mechanism that verifies, negative ones must let the naive BDM
/// be caught distorting.
pub fn oracle_cross_check(bundle: &ProblemBundle, tol: f64, spec: &GridSpec) -> Result<CrossCheck> {
    let size = bundle.problem.n_states() * bundle.problem.n_actions();
    if size > CROSS_CHECK_GUARD {
        return Err(Error::Guard(format!("|Θ|·|A| = {size} exceeds {CROSS_CHECK_GUARD}")));
    }
    let graph = graph_for_bundle(bundle, TIE_TOL)?;
    let verdict = decide_incentivizable(bundle, &graph, tol)?;
    Ok(match verdict.status {
        Status::Incentivizable => {
            let cert = verdict.certificate.as_ref().expect("incentivizable verdict has a certificate");
            let method = synthesize(bundle, cert)?;
            let report = verify_incentivizability(bundle, &method, spec)?;
            CrossCheck {
                status: verdict.status,
                consistent: Some(report.passed),
                detail: format!(
                    "{} beliefs checked, {} failures, {} ambiguous",
                    report.checked,
                    report.failures.len(),
                    report.boundary_ambiguous
                ),
            }
        }
        Status::NotIncentivizable => {
            let method = naive_bdm(bundle, bundle.alpha)?;
            let witness = find_distortion_witness(bundle, &method, spec)?;
            CrossCheck {
                status: verdict.status,
                consistent: Some(witness.is_some()),
                detail: match witness {
                    Some(w) => format!("naive BDM distorts at a belief with value gap {:.3e}", w.value_gap),
                    None => "no distortion of the naive BDM found".into(),
                },
            }
        }
        Status::Inconclusive => CrossCheck {
            status: verdict.status,
            consistent: None,
            detail: "inconclusive verdict; nothing to cross-check".into(),
        },
    })
}
