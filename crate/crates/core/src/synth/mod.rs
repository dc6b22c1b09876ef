//! Payment schemes built from alignment certificates.
//!
//! Every method is stored as `V(t, a, θ) = c0(a,θ) + c1(a,θ)·t − ½t²` in an
//! internal report `t`, together with a per-action affine map from the
//! natural report (the expectation of the raw question) to `t`.

mod build;
mod lottery;

pub use build::{
    naive_bdm, piecewise_part_value, quadratic_scoring, synth_aligned, synth_piecewise,
    synth_product, synthesize,
};
pub use lottery::{bdm_prize, expected_prize_weight, lottery_form, Advisory, LotteryForm, PROTOCOL};

use crate::error::{Error, Result};
use crate::model::to_canonical_json;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub slope: f64,
    pub intercept: f64,
}

impl Affine {
    pub fn apply(&self, r: f64) -> f64 {
        self.slope * r + self.intercept
    }

    pub fn invert(&self, t: f64) -> f64 {
        (t - self.intercept) / self.slope
    }
}

/// Coordinates of one part of a stitched method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartFrame {
    pub members: Vec<usize>,
    pub gamma: Vec<f64>,
    pub kappa: Vec<f64>,
    pub trivial: bool,
    /// Positive scale `s_i`.
    pub s: f64,
    /// State-dependent shift `w_i(θ)`.
    pub w: Vec<f64>,
    /// Constant shift `ω_i`.
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "construction", rename_all = "snake_case")]
pub enum Provenance {
    Aligned { trivial: bool, lower: f64 },
    Piecewise { lower: f64, parts: Vec<PartFrame> },
    Product { lambda: f64, mu: f64, tau: Vec<f64> },
    NaiveBdm { alpha: f64 },
    QuadraticScoring { alpha: f64 },
}

impl Provenance {
    pub fn name(&self) -> &'static str {
        match self {
            Provenance::Aligned { .. } => "aligned",
            Provenance::Piecewise { .. } => "piecewise",
            Provenance::Product { .. } => "product",
            Provenance::NaiveBdm { .. } => "naive_bdm",
            Provenance::QuadraticScoring { .. } => "quadratic_scoring",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElicitationMethod {
    /// `[L, M]` in internal units.
    pub report_range: [f64; 2],
    pub c0: Vec<Vec<f64>>,
    pub c1: Vec<Vec<f64>>,
    /// Natural report to internal report, one per action.
    pub transform: Vec<Affine>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub value: f64,
    pub internal_report: f64,
    /// Set when the report fell outside the range widened by 10% and was
    /// pulled back to its edge.
    pub clamped: bool,
}

impl ElicitationMethod {
    pub fn n_actions(&self) -> usize {
        self.c0.len()
    }

    pub fn n_states(&self) -> usize {
        self.c0.first().map_or(0, Vec::len)
    }

    /// `V` at an internal report.
    pub fn value_internal(&self, t: f64, a: usize, theta: usize) -> f64 {
        self.c0[a][theta] + self.c1[a][theta] * t - 0.5 * t * t
    }

    pub fn check_dims(&self, n_actions: usize, n_states: usize) -> Result<()> {
        let ok = self.c0.len() == n_actions
            && self.c1.len() == n_actions
            && self.transform.len() == n_actions
            && self.c0.iter().chain(&self.c1).all(|r| r.len() == n_states);
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "mechanism does not match a problem with {n_actions} actions and {n_states} states"
            )))
        }
    }
}

/// On-disk form of a mechanism: the analytic method, flattened, plus its
/// lottery representation when one exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismFile {
    #[serde(flatten)]
    pub method: ElicitationMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lottery: Option<LotteryForm>,
}

pub fn mechanism_to_json(method: &ElicitationMethod, lottery: Option<&LotteryForm>) -> String {
    let file = MechanismFile { method: method.clone(), lottery: lottery.cloned() };
    to_canonical_json(&serde_json::to_value(&file).expect("mechanism serializes"))
}

pub fn mechanism_from_json(text: &str) -> Result<MechanismFile> {
    let file: MechanismFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let m = &file.method;
    m.check_dims(m.c0.len(), m.n_states())?;
    if m.transform.iter().any(|t| t.slope == 0.0 || !t.slope.is_finite() || !t.intercept.is_finite()) {
        return Err(Error::Parse("mechanism transform slopes must be finite and nonzero".into()));
    }
    if m.c0.iter().chain(&m.c1).flatten().any(|v| !v.is_finite()) {
        return Err(Error::Parse("mechanism coefficients must be finite".into()));
    }
    Ok(file)
}

/// Evaluates `V` at a natural (raw) report.
pub fn eval_method(method: &ElicitationMethod, r: f64, a: usize, theta: usize) -> Evaluation {
    let t = method.transform[a].apply(r);
    let [lo, hi] = method.report_range;
    let pad = 0.1 * (hi - lo);
    let clamped_t = t.clamp(lo - pad, hi + pad);
    Evaluation {
        value: method.value_internal(clamped_t, a, theta),
        internal_report: clamped_t,
        clamped: clamped_t != t,
    }
}
