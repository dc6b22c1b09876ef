//! The probability-equivalent BDM lottery behind a quadratic method.
//!
//! With `X̂ = (c1 − L)/(M − L)` and `q = (t − L)/(M − L)`,
//! `V(t) = (M−L)²·prize(q, X̂) + direct`, where `prize` is the winning
//! probability of the uniform-threshold protocol and `direct` does not
//! depend on the report.

use super::{ElicitationMethod, Provenance};
use crate::error::{Error, Result};
use crate::model::DecisionProblem;
use serde::{Deserialize, Serialize};

pub const PROTOCOL: &str = "bdm-uniform-z";

/// Winning probability when reporting `q` against a uniform threshold
/// `z`: if `q ≥ z` the prize comes with probability `x̂`, else with
/// probability `z`.
pub fn bdm_prize(q: f64, xhat: f64) -> f64 {
    q * xhat + 0.5 * (1.0 - q * q)
}

/// Expected prize weight under a truthful report of `q`: `(1 + q²)/2`.
pub fn expected_prize_weight(q: f64) -> f64 {
    bdm_prize(q, q)
}

/// Report-only note on the relative strength of the two payment channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Advisory {
    /// Spread of decision payoffs.
    pub decision_range: f64,
    /// Prize size of the elicitation lottery.
    pub prize: f64,
    /// `α · decision_range ≥ (1 − α) · prize`.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LotteryForm {
    pub protocol: String,
    pub alpha: f64,
    /// `X̂(a;θ) ∈ [0,1]`.
    pub normalized_question: Vec<Vec<f64>>,
    /// Report-independent payment per `(a, θ)`.
    pub direct_payment: Vec<Vec<f64>>,
    /// `(M − L)²`, the prize size in units of `V`.
    pub prize_scale: f64,
    /// Actions grouped by the part whose normalization they use.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parts: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advisory: Option<Advisory>,
}

impl LotteryForm {
    /// `V` recomposed from the lottery at normalized report `q`.
    pub fn value(&self, q: f64, a: usize, theta: usize) -> f64 {
        self.prize_scale * bdm_prize(q, self.normalized_question[a][theta]) + self.direct_payment[a][theta]
    }
}

/// Lottery representation of `method`. The quadratic-scoring control has
/// none.
pub fn lottery_form(method: &ElicitationMethod, problem: &DecisionProblem, alpha: f64) -> Result<LotteryForm> {
    if let Provenance::QuadraticScoring { .. } = method.provenance {
        return Err(Error::UnsupportedProvenance(
            "quadratic scoring has no uniform-threshold lottery form".into(),
        ));
    }
    method.check_dims(problem.n_actions(), problem.n_states())?;
    let [l, m] = method.report_range;
    let w = m - l;
    let prize_scale = w * w;
    let normalized_question = method
        .c1
        .iter()
        .map(|r| r.iter().map(|c| ((c - l) / w).clamp(0.0, 1.0)).collect())
        .collect();
    let direct_payment = method
        .c0
        .iter()
        .zip(&method.c1)
        .map(|(r0, r1)| r0.iter().zip(r1).map(|(c0, c1)| c0 + l * c1 - 0.5 * l * l - 0.5 * prize_scale).collect())
        .collect();
    let parts = match &method.provenance {
        Provenance::Piecewise { parts, .. } => Some(parts.iter().map(|p| p.members.clone()).collect()),
        _ => None,
    };
    let advisory = match method.provenance {
        Provenance::Product { .. } => {
            let (lo, hi) = problem
                .utility
                .iter()
                .flatten()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &u| (lo.min(u), hi.max(u)));
            let decision_range = hi - lo;
            Some(Advisory { decision_range, prize: prize_scale, holds: alpha * decision_range >= (1.0 - alpha) * prize_scale })
        }
        _ => None,
    };
    Ok(LotteryForm {
        protocol: PROTOCOL.into(),
        alpha,
        normalized_question,
        direct_payment,
        prize_scale,
        parts,
        advisory,
    })
}
