use super::{Affine, ElicitationMethod, PartFrame, Provenance};
use crate::alignment::{
    AlignmentCertificate, Certificate, PiecewiseAlignment, WeightedAlignmentCertificate,
};
use crate::error::{Error, Result};
use crate::geometry::SplittingCollection;
use crate::model::{DecisionProblem, ProblemBundle, QuestionProfile};
use std::collections::VecDeque;

fn range_of(rows: &[Vec<f64>]) -> (f64, f64) {
    rows.iter().flatten().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

fn padded_range(c1: &[Vec<f64>]) -> [f64; 2] {
    let (lo, hi) = range_of(c1);
    [lo - 1.0, hi + 1.0]
}

/// Coefficients of one part's method for action `a` at position `i`:
/// transform, `c0` row and `c1` row.
fn part_rows(
    problem: &DecisionProblem,
    x: &QuestionProfile,
    frame: &PartFrame,
    i: usize,
    lower: f64,
) -> (Affine, Vec<f64>, Vec<f64>) {
    let a = frame.members[i];
    let (g, k, s) = (frame.gamma[i], frame.kappa[i], frame.s);
    let root = s.sqrt();
    let transform = Affine { slope: root / g, intercept: -root * k / g };
    let triv = if frame.trivial { 1.0 } else { 0.0 };
    let mut c0 = Vec::with_capacity(x.values[a].len());
    let mut c1 = Vec::with_capacity(x.values[a].len());
    for (t, &xv) in x.values[a].iter().enumerate() {
        c1.push(root * (xv - k) / g);
        c0.push(-(s / g) * (xv - k) * lower + triv * s * problem.utility[a][t] + frame.w[t] - frame.omega);
    }
    (transform, c0, c1)
}

fn frame_from_cert(cert: &AlignmentCertificate, n_states: usize) -> PartFrame {
    PartFrame {
        members: cert.scope.clone(),
        gamma: cert.gamma.clone(),
        kappa: cert.kappa.clone(),
        trivial: cert.trivial,
        s: 1.0,
        w: vec![0.0; n_states],
        omega: 0.0,
    }
}

fn lowest_base(problem: &DecisionProblem, certs: &[AlignmentCertificate]) -> f64 {
    certs
        .iter()
        .flat_map(|c| c.scope.iter().map(move |&a| (c, a)))
        .flat_map(|(c, a)| c.base_row(problem, a))
        .fold(f64::INFINITY, f64::min)
}

/// The aligned BDM method from a certificate covering every action.
pub fn synth_aligned(
    problem: &DecisionProblem,
    x: &QuestionProfile,
    cert: &AlignmentCertificate,
) -> Result<ElicitationMethod> {
    let n = problem.n_actions();
    let mut scope = cert.scope.clone();
    scope.sort_unstable();
    if scope != (0..n).collect::<Vec<_>>() {
        return Err(Error::Certificate("aligned synthesis needs a certificate covering every action".into()));
    }
    let lower = lowest_base(problem, std::slice::from_ref(cert)) - 1.0;
    let frame = frame_from_cert(cert, problem.n_states());
    let mut transform = vec![Affine { slope: 1.0, intercept: 0.0 }; n];
    let mut c0 = vec![Vec::new(); n];
    let mut c1 = vec![Vec::new(); n];
    for i in 0..frame.members.len() {
        let a = frame.members[i];
        let (t, r0, r1) = part_rows(problem, x, &frame, i, lower);
        transform[a] = t;
        c0[a] = r0;
        c1[a] = r1;
    }
    let report_range = padded_range(&c1);
    Ok(ElicitationMethod {
        report_range,
        c0,
        c1,
        transform,
        provenance: Provenance::Aligned { trivial: cert.trivial, lower },
    })
}

/// Stitches per-part aligned methods so that they coincide on shared
/// splitting actions.
pub fn synth_piecewise(
    problem: &DecisionProblem,
    x: &QuestionProfile,
    collection: &SplittingCollection,
    certs: &[AlignmentCertificate],
) -> Result<ElicitationMethod> {
    let n = problem.n_actions();
    let k = problem.n_states();
    let parts = &collection.parts;
    if parts.is_empty() || certs.len() != parts.len() {
        return Err(Error::Collection("one certificate per part is required".into()));
    }
    for (p, c) in parts.iter().zip(certs) {
        let mut s = c.scope.clone();
        s.sort_unstable();
        if &s != p {
            return Err(Error::Collection("certificate scope differs from its part".into()));
        }
    }
    let lower = lowest_base(problem, certs) - 1.0;
    let mut frames: Vec<Option<PartFrame>> = vec![None; parts.len()];
    frames[0] = Some(frame_from_cert(&certs[0], k));
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let fi = frames[i].clone().expect("visited part has a frame");
        for j in 0..parts.len() {
            if frames[j].is_some() {
                continue;
            }
            let Some(&a0) = parts[i].iter().find(|a| parts[j].contains(a)) else { continue };
            let (pi, pj) = (fi.members.iter().position(|&m| m == a0).expect("shared action in part"),
                            certs[j].position(a0).expect("shared action in part"));
            let (gi, ki) = (fi.gamma[pi], fi.kappa[pi]);
            let (gj, kj) = (certs[j].gamma[pj], certs[j].kappa[pj]);
            let si = fi.s;
            let sj = si * gj * gj / (gi * gi);
            let c = si / (gi * gi);
            let (ti, tj) = (f64::from(u8::from(fi.trivial)), f64::from(u8::from(certs[j].trivial)));
            let w: Vec<f64> = (0..k)
                .map(|t| {
                    let xv = x.values[a0][t];
                    fi.w[t] + c * xv * (kj - ki) + lower * xv * (sj / gj - si / gi)
                        - (tj * sj - ti * si) * problem.utility[a0][t]
                })
                .collect();
            let omega = fi.omega + 0.5 * c * (kj * kj - ki * ki) + lower * (sj * kj / gj - si * ki / gi);
            let mut fj = frame_from_cert(&certs[j], k);
            fj.s = sj;
            fj.w = w;
            fj.omega = omega;
            frames[j] = Some(fj);
            queue.push_back(j);
        }
    }
    let frames: Vec<PartFrame> = frames
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Collection("parts are not chained by shared splitting actions".into()))?;

    let mut transform = vec![Affine { slope: 1.0, intercept: 0.0 }; n];
    let mut c0 = vec![Vec::new(); n];
    let mut c1 = vec![Vec::new(); n];
    let mut filled = vec![false; n];
    for frame in &frames {
        for i in 0..frame.members.len() {
            let a = frame.members[i];
            if filled[a] {
                continue;
            }
            let (t, r0, r1) = part_rows(problem, x, frame, i, lower);
            transform[a] = t;
            c0[a] = r0;
            c1[a] = r1;
            filled[a] = true;
        }
    }
    if filled.iter().any(|f| !f) {
        return Err(Error::Collection("parts do not cover every action".into()));
    }
    let report_range = padded_range(&c1);
    Ok(ElicitationMethod { report_range, c0, c1, transform, provenance: Provenance::Piecewise { lower, parts: frames } })
}

/// `V` of part `part` of a stitched method at raw report `r`, evaluated
/// from the part's own frame. `None` if `a` is not in that part.
pub fn piecewise_part_value(
    problem: &DecisionProblem,
    x: &QuestionProfile,
    method: &ElicitationMethod,
    part: usize,
    r: f64,
    a: usize,
    theta: usize,
) -> Option<f64> {
    let Provenance::Piecewise { lower, parts } = &method.provenance else { return None };
    let frame = parts.get(part)?;
    let i = frame.members.iter().position(|&m| m == a)?;
    let (t, c0, c1) = part_rows(problem, x, frame, i, *lower);
    let y = t.apply(r);
    Some(c0[theta] + c1[theta] * y - 0.5 * y * y)
}

/// The product-problem method: a BDM on the rescaled weighted question
/// plus the decision payoff itself.
pub fn synth_product(
    bundle: &ProblemBundle,
    x: &QuestionProfile,
    cert: &WeightedAlignmentCertificate,
) -> Result<ElicitationMethod> {
    let product = bundle
        .product
        .as_ref()
        .ok_or_else(|| Error::Certificate("product synthesis needs a product structure".into()))?;
    let problem = &bundle.problem;
    let scale = 1.0 + range_of(&x.values).0.abs().max(range_of(&x.values).1.abs()).max(problem.scale());
    let resid = cert.residual_on(product, x);
    if resid > 1e-6 * scale {
        return Err(Error::Certificate(format!("weighted certificate residual {resid:.3e} is too large")));
    }
    let n = problem.n_actions();
    let base: Vec<Vec<f64>> = (0..n).map(|a| cert.base_row(product, a)).collect();
    let (lo, hi) = range_of(&base);
    let tau_max = cert.tau.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let mut lambda = f64::INFINITY;
    if hi - lo > 0.0 {
        lambda = lambda.min(1.0 / (hi - lo));
    }
    if tau_max > 0.0 {
        lambda = lambda.min(1.0 / (2.0 * tau_max));
    }
    if !lambda.is_finite() {
        lambda = 1.0;
    }
    let mu = 0.5 * (1.0 - lambda * (hi + lo));
    let c1: Vec<Vec<f64>> = base.iter().map(|r| r.iter().map(|b| lambda * b + mu).collect()).collect();
    let c0 = problem.utility.clone();
    let transform = (0..n)
        .map(|a| Affine { slope: lambda / cert.v[a], intercept: mu - lambda * cert.kappa[a] / cert.v[a] })
        .collect();
    Ok(ElicitationMethod {
        report_range: [0.0, 1.0],
        c0,
        c1,
        transform,
        provenance: Provenance::Product { lambda, mu, tau: cert.tau.iter().map(|t| lambda * t).collect() },
    })
}

/// Builds the method matching a verdict's certificate.
pub fn synthesize(bundle: &ProblemBundle, cert: &Certificate) -> Result<ElicitationMethod> {
    let x = bundle.question()?;
    match cert {
        Certificate::Aligned(c) => synth_aligned(&bundle.problem, x, c),
        Certificate::Piecewise(pw) => {
            let PiecewiseAlignment { collection, certs } = pw;
            synth_piecewise(&bundle.problem, x, collection, certs)
        }
        Certificate::Weighted(c) => synth_product(bundle, x, c),
    }
}

/// `X̂` in [0,1] by global min-max normalization, plus the raw-to-`X̂` map.
fn normalized_question(x: &QuestionProfile) -> (Vec<Vec<f64>>, f64, f64) {
    let (lo, hi) = range_of(&x.values);
    let width = if hi > lo { hi - lo } else { 1.0 };
    let xhat = x.values.iter().map(|r| r.iter().map(|v| (v - lo) / width).collect()).collect();
    (xhat, lo, width)
}

/// Control: a standard BDM on the normalized question paid with
/// probability `1 − α`, the decision problem with probability `α`, and no
/// alignment transform.
pub fn naive_bdm(bundle: &ProblemBundle, alpha: f64) -> Result<ElicitationMethod> {
    let x = bundle.question()?;
    let (xhat, lo, width) = normalized_question(x);
    let root = (1.0 - alpha).sqrt();
    let c1 = xhat.iter().map(|r| r.iter().map(|v| root * v).collect()).collect();
    let c0 = bundle
        .problem
        .utility
        .iter()
        .map(|r| r.iter().map(|u| alpha * u + 0.5 * (1.0 - alpha)).collect())
        .collect();
    let slope = root / width;
    Ok(ElicitationMethod {
        report_range: [0.0, root],
        c0,
        c1,
        transform: vec![Affine { slope, intercept: -slope * lo }; bundle.problem.n_actions()],
        provenance: Provenance::NaiveBdm { alpha },
    })
}

/// Control: quadratic scoring of the normalized question, mixed with the
/// decision payoff like [`naive_bdm`].
pub fn quadratic_scoring(bundle: &ProblemBundle, alpha: f64) -> Result<ElicitationMethod> {
    let x = bundle.question()?;
    let (xhat, lo, width) = normalized_question(x);
    let root = (2.0 * (1.0 - alpha)).sqrt();
    let c1 = xhat.iter().map(|r| r.iter().map(|v| root * v).collect()).collect();
    let c0 = bundle
        .problem
        .utility
        .iter()
        .zip(&xhat)
        .map(|(ur, xr)| ur.iter().zip(xr).map(|(u, v)| alpha * u + (1.0 - alpha) * (1.0 - v * v)).collect())
        .collect();
    let slope = root / width;
    Ok(ElicitationMethod {
        report_range: [0.0, root],
        c0,
        c1,
        transform: vec![Affine { slope, intercept: -slope * lo }; bundle.problem.n_actions()],
        provenance: Provenance::QuadraticScoring { alpha },
    })
}
