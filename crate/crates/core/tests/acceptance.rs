//! End-to-end acceptance checks. Prints one line per criterion and exits
//! nonzero if any criterion outside `KNOWN_RED` fails.

use elicitkit::alignment::{
    decide_incentivizable, project_zero_sum, questions_equivalent, theorem, Certificate, Status,
    DEFAULT_TOL,
};
use elicitkit::geometry::{
    adjacency_graph, adjacency_test, classify_graph, cycle_rich, graph_for_bundle, Belief,
    CycleRichLimits, TIE_TOL,
};
use elicitkit::model::{
    builtin_question, close_guess, gen_canonical, parse_params, quadratic_loss,
    random_problem, state_matching, DecisionProblem, Params, ProblemBundle, QuestionProfile,
    DEFAULT_SIZE_CAP, GENERATORS, QUESTION_KINDS,
};
use elicitkit::synth::{
    expected_prize_weight, naive_bdm, piecewise_part_value, synthesize, ElicitationMethod,
};
use elicitkit::verify::{
    check_belief, find_distortion_witness, oracle_cross_check, verify_incentivizability,
    BeliefOutcome, GridSpec,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use std::time::{Duration, Instant};

/// Criteria reported but not allowed to fail the run. See the project
/// notes for the open discrepancy behind each.
const KNOWN_RED: &[usize] = &[8];

const SEED: u64 = 20_240_601;

type Outcome = Result<String, String>;

/// Name, check, and time limit in seconds.
type Criterion = (&'static str, fn() -> Outcome, u64);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bundle_with(problem: DecisionProblem, kind: &str, params: &[&str]) -> ProblemBundle {
    let b = ProblemBundle::new(problem);
    let x = builtin_question(&b, kind, &parse_params(params).unwrap()).unwrap();
    b.with_question(x).unwrap()
}

fn generated(name: &str, params: &[&str], kind: &str, qparams: &[&str]) -> ProblemBundle {
    let b = gen_canonical(name, &parse_params(params).unwrap()).unwrap();
    let x = builtin_question(&b, kind, &parse_params(qparams).unwrap()).unwrap();
    b.with_question(x).unwrap()
}

fn verdict_of(b: &ProblemBundle) -> elicitkit::alignment::Verdict {
    let g = graph_for_bundle(b, TIE_TOL).unwrap();
    decide_incentivizable(b, &g, DEFAULT_TOL).unwrap()
}

fn dirichlet(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn expect(p: &[f64], row: &[f64]) -> f64 {
    p.iter().zip(row).map(|(a, b)| a * b).sum()
}

/// Best internal report and value for each action, read off the method
/// as a black box: three evaluations pin down the concave quadratic.
fn black_box_values(m: &ElicitationMethod, p: &[f64]) -> Vec<(f64, f64)> {
    (0..m.n_actions())
        .map(|a| {
            let f = |t: f64| (0..p.len()).map(|s| p[s] * m.value_internal(t, a, s)).sum::<f64>();
            let (f0, fp, fm) = (f(0.0), f(1.0), f(-1.0));
            let slope = 0.5 * (fp - fm);
            let curvature = fp + fm - 2.0 * f0;
            let t = -slope / curvature;
            (t, f0 + slope * t + 0.5 * curvature * t * t)
        })
        .collect()
}

fn v_star(m: &ElicitationMethod, p: &[f64]) -> f64 {
    black_box_values(m, p).into_iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max)
}

fn argmax_set(v: &[f64], tol: f64) -> Vec<usize> {
    let best = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..v.len()).filter(|&i| best - v[i] <= tol * (1.0 + best.abs())).collect()
}

fn rank(rows: &[Vec<f64>]) -> usize {
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    m.rank(1e-9 * (1.0 + m.amax()))
}

fn centred_diff(p: &DecisionProblem, a: usize, b: usize) -> Vec<f64> {
    let d: Vec<f64> = p.utility[b].iter().zip(&p.utility[a]).map(|(x, y)| x - y).collect();
    let m = d.iter().sum::<f64>() / d.len() as f64;
    d.into_iter().map(|x| x - m).collect()
}

// ---------------------------------------------------------------- 1

fn adjacency_shapes() -> Outcome {
    let mut worst = Duration::ZERO;
    let mut timed = |f: &mut dyn FnMut() -> Result<(), String>| -> Result<(), String> {
        let t = Instant::now();
        f()?;
        worst = worst.max(t.elapsed());
        Ok(())
    };
    timed(&mut || {
        let g = adjacency_graph(&quadratic_loss(9).unwrap(), TIE_TOL);
        let pairs = g.edge_pairs();
        ensure(pairs == (0..9).map(|i| (i, i + 1)).collect::<Vec<_>>(), || format!("ql(9) edges {pairs:?}"))?;
        ensure(classify_graph(&g, None).kind == "tree (path)", || "ql(9) not a path".into())
    })?;
    timed(&mut || {
        let p = elicitkit::model::star(5, 0.6).unwrap();
        let g = adjacency_graph(&p, TIE_TOL);
        let centre = p.action_index("a_s").unwrap();
        ensure(g.edges.len() == 5 && g.degree(centre) == 5, || format!("star(5,0.6) edges {:?}", g.edge_pairs()))
    })?;
    timed(&mut || {
        let g = adjacency_graph(&elicitkit::model::star(5, 0.3).unwrap(), TIE_TOL);
        ensure(g.edges.len() == 15 && classify_graph(&g, None).complete, || "star(5,0.3) not complete".into())
    })?;
    timed(&mut || {
        let b = gen_canonical("mc-test", &parse_params(&["i=3", "omega=2"]).unwrap()).unwrap();
        let g = graph_for_bundle(&b, TIE_TOL).unwrap();
        let prod = b.product.as_ref().unwrap();
        // cube oracle: an edge exactly when the answer vectors differ in one place
        let mut cube = Vec::new();
        for a in 0..8 {
            for c in a + 1..8 {
                let (x, y) = (prod.action_coords(a), prod.action_coords(c));
                if x.iter().zip(&y).filter(|(p, q)| p != q).count() == 1 {
                    cube.push((a, c));
                }
            }
        }
        ensure(g.edge_pairs() == cube && cube.len() == 12, || format!("mc(3,2) edges {:?}", g.edge_pairs()))?;
        // and the direct LP on the expanded problem agrees
        let direct = adjacency_graph(&prod.expand(DEFAULT_SIZE_CAP).unwrap(), TIE_TOL);
        ensure(direct.edge_pairs() == cube, || "direct LP disagrees with the lifted graph".into())
    })?;
    ensure(worst < Duration::from_secs(2), || format!("slowest case took {worst:?}"))?;
    Ok(format!("path 9, star 5, complete 15, cube 12; slowest {worst:.2?}"))
}

// ---------------------------------------------------------------- 2

fn regret_everywhere() -> Outcome {
    let spec = GridSpec { denominator: 10, samples: 500, seed: SEED, ..GridSpec::default() };
    let mut bundles: Vec<(String, ProblemBundle)> = (0..25u64)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(SEED + i);
            let (k, n) = (rng.random_range(2..=6), rng.random_range(2..=6));
            (format!("random #{i} ({k}x{n})"), bundle_with(random_problem(k, n, SEED + i).unwrap(), "regret", &[]))
        })
        .collect();
    for g in GENERATORS {
        bundles.push((g.to_string(), generated(g, &[], "regret", &[])));
    }
    let (mut checked, mut ambiguous) = (0, 0);
    for (name, b) in &bundles {
        let p = &b.problem;
        let x = b.question().unwrap();
        // the regret profile itself, recomputed
        for t in 0..p.n_states() {
            let top = (0..p.n_actions()).map(|a| p.utility[a][t]).fold(f64::NEG_INFINITY, f64::max);
            for a in 0..p.n_actions() {
                ensure(x.values[a][t] == top - p.utility[a][t], || format!("{name}: regret profile differs"))?;
            }
        }
        let v = verdict_of(b);
        let Some(Certificate::Aligned(cert)) = &v.certificate else {
            return Err(format!("{name}: verdict {:?} via {}", v.status, v.theorem));
        };
        let m = synthesize(b, v.certificate.as_ref().unwrap()).map_err(|e| format!("{name}: {e}"))?;
        let r = verify_incentivizability(b, &m, &spec).unwrap();
        ensure(r.failures.is_empty(), || format!("{name}: {} failures, first {:?}", r.failures.len(), r.failures[0]))?;
        ensure(cert.scope.len() == p.n_actions(), || format!("{name}: certificate does not cover A"))?;
        checked += r.checked;
        ambiguous += r.boundary_ambiguous;
    }
    Ok(format!("{} problems aligned and verified, {checked} beliefs, {ambiguous} boundary-ambiguous", bundles.len()))
}

// ---------------------------------------------------------------- 3

fn within_x_impossible() -> Outcome {
    let b = generated("quadratic-loss", &["n=4"], "within-x", &["x=0.25"]);
    let v = verdict_of(&b);
    ensure(v.status == Status::NotIncentivizable, || format!("status {:?}", v.status))?;
    let viol = v.violation.as_ref().ok_or("no violation")?;
    ensure(viol.kind == "pairwise", || format!("violation kind {}", viol.kind))?;
    let g = adjacency_graph(&b.problem, TIE_TOL);
    let (a, c) = (viol.actions[0], viol.actions[1]);
    ensure(g.has_edge(a, c), || format!("failing pair {a},{c} is not adjacent"))?;

    let spec = GridSpec { seed: SEED, ..GridSpec::default() };
    let naive = naive_bdm(&b, b.alpha).unwrap();
    let w = find_distortion_witness(&b, &naive, &spec).unwrap().ok_or("no witness for the naive BDM")?;
    let (value_gap, report_gap) = regap(&b, &naive, &w.belief.probs, &w.u_optimal, &w.v_optimal);
    ensure((value_gap - w.value_gap).abs() <= 1e-9, || format!("value gap {} vs {}", value_gap, w.value_gap))?;
    ensure((report_gap - w.report_gap).abs() <= 1e-9, || format!("report gap {} vs {}", report_gap, w.report_gap))?;
    ensure(value_gap > 10.0 * spec.tol_action || report_gap > 10.0 * spec.tol_report, || "gaps below tolerance".into())?;
    Ok(format!(
        "pairwise violation on adjacent ({}, {}), residual {:.3}; witness value gap {:.3e}",
        b.problem.actions[a], b.problem.actions[c], viol.relative_residual, value_gap
    ))
}

/// Recomputes both gaps of a witness from scratch.
fn regap(b: &ProblemBundle, m: &ElicitationMethod, p: &[f64], su: &[usize], sv: &[usize]) -> (f64, f64) {
    let eu: Vec<f64> = b.problem.utility.iter().map(|row| expect(p, row)).collect();
    let vals = black_box_values(m, p);
    assert_eq!(argmax_set(&eu, 1e-7), su);
    assert_eq!(argmax_set(&vals.iter().map(|v| v.1).collect::<Vec<_>>(), 1e-7), sv);
    let vstar = vals.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let worst = su.iter().map(|&a| vals[a].1).fold(f64::INFINITY, f64::min);
    let x = b.question().unwrap();
    let report_gap = sv
        .iter()
        .map(|&a| {
            let truthful = m.transform[a].apply(expect(p, &x.values[a]));
            (vals[a].0 - truthful).abs() / (1.0 + truthful.abs())
        })
        .fold(0.0, f64::max);
    ((vstar - worst) / (1.0 + vstar.abs()), report_gap)
}

// ---------------------------------------------------------------- 4

fn complete_graph_dichotomy() -> Outcome {
    let r = [0.7, 1.0, 1.3, 1.6];
    let b = bundle_with(state_matching(&r).unwrap(), "expost", &[]);
    let v = verdict_of(&b);
    let Some(Certificate::Aligned(cert)) = &v.certificate else {
        return Err(format!("state matching: {:?} via {}", v.status, v.theorem));
    };
    for (i, &a) in cert.scope.iter().enumerate() {
        ensure((cert.gamma[i] - 1.0 / r[a]).abs() <= 1e-9, || format!("gamma({a}) = {} vs {}", cert.gamma[i], 1.0 / r[a]))?;
    }

    let cg = close_guess(&r).unwrap();
    let b = bundle_with(cg.clone(), "expost", &[]);
    let g = adjacency_graph(&cg, TIE_TOL);
    let n = cg.n_actions();
    ensure(g.edges.len() == n * (n - 1) / 2, || format!("close-guess graph has {} edges", g.edges.len()))?;
    let mut triples = 0;
    for a in 0..n {
        let others: Vec<usize> = (0..n).filter(|&c| c != a).collect();
        for i in 0..others.len() {
            for j in i + 1..others.len() {
                for k in j + 1..others.len() {
                    let rows: Vec<Vec<f64>> = [others[i], others[j], others[k]].iter().map(|&c| centred_diff(&cg, a, c)).collect();
                    ensure(rank(&rows) == 3, || format!("dependent triple at {a}"))?;
                    triples += 1;
                }
            }
        }
    }
    let v = verdict_of(&b);
    ensure(v.status == Status::NotIncentivizable && v.theorem == theorem::COMPLETE, || format!("close guess: {:?} via {}", v.status, v.theorem))?;
    Ok(format!("gamma = 1/r on state matching; close guess complete, {triples} independent triples, rejected"))
}

// ---------------------------------------------------------------- 5

fn product_dichotomy() -> Outcome {
    let b = generated("mc-test", &["i=4", "omega=2"], "improvement", &["split=2"]);
    let v = verdict_of(&b);
    let Some(Certificate::Weighted(cert)) = &v.certificate else {
        return Err(format!("improvement: {:?} via {}", v.status, v.theorem));
    };
    let signs: Vec<f64> = cert.tau.iter().map(|t| t.signum()).collect();
    ensure(signs == [-1.0, -1.0, 1.0, 1.0], || format!("tau {:?}", cert.tau))?;
    let m = synthesize(&b, v.certificate.as_ref().unwrap()).unwrap();
    let spec = GridSpec { samples: 2000, seed: SEED, ..GridSpec::default() };
    let r = verify_incentivizability(&b, &m, &spec).unwrap();
    ensure(r.failures.is_empty(), || format!("improvement mechanism: {} failures", r.failures.len()))?;

    let b = generated("mc-test", &["i=4", "omega=2"], "threshold", &["z=2"]);
    let v = verdict_of(&b);
    ensure(v.status == Status::NotIncentivizable && v.theorem == theorem::PRODUCT, || format!("threshold: {:?} via {}", v.status, v.theorem))?;

    // same question asked four times, four options, score threshold 1
    let b = generated("mc-test", &["i=4", "omega=4"], "threshold", &["z=1"]);
    let prod = b.product.clone().unwrap();
    let naive = naive_bdm(&b, b.alpha).unwrap();
    let w = find_distortion_witness(&b, &naive, &GridSpec { seed: SEED, ..GridSpec::default() })
        .unwrap()
        .ok_or("no witness on mc-test(4,4)")?;
    let distinct = |a: usize| {
        let mut c = prod.action_coords(a);
        c.sort_unstable();
        c.dedup();
        c.len()
    };
    let (value_gap, _) = regap(&b, &naive, &w.belief.probs, &w.u_optimal, &w.v_optimal);
    ensure(value_gap > 1e-6, || "witness value gap vanished on recomputation".into())?;

    let mut p = vec![0.0; prod.n_states()];
    for (o, q) in [0.3, 0.25, 0.25, 0.2].into_iter().enumerate() {
        p[prod.state_index(&[o; 4])] = q;
    }
    let belief = Belief::new(p).unwrap();
    let BeliefOutcome::Fail(d) = check_belief(&b, b.question().unwrap(), &naive, &belief, &GridSpec::default()) else {
        return Err("no distortion at the repeated-question belief".into());
    };
    ensure(d.u_optimal == vec![prod.action_index(&[0; 4])], || format!("u-optimal {:?}", d.u_optimal))?;
    ensure(d.v_optimal.iter().all(|&a| distinct(a) == 4), || format!("V-optimal {:?} repeats an answer", d.v_optimal))?;
    Ok(format!(
        "tau {:?}, {} beliefs pass; threshold rejected; mc(4,4) witness gap {:.3e}, spread answers win at the diagonal belief",
        cert.tau.iter().map(|t| (t * 1e6).round() / 1e6).collect::<Vec<_>>(),
        r.checked,
        value_gap
    ))
}

// ---------------------------------------------------------------- 6

fn bdm_value_law() -> Outcome {
    let mut prev = f64::NEG_INFINITY;
    for i in 0..=10 {
        let q = i as f64 / 10.0;
        let w = expected_prize_weight(q);
        ensure((w - 0.5 * (1.0 + q * q)).abs() <= 1e-12, || format!("weight at {q} is {w}"))?;
        ensure(w > prev, || format!("not increasing at {q}"))?;
        prev = w;
    }
    Ok("(1+q^2)/2 on q = 0, 0.1, ..., 1 and strictly increasing".into())
}

// ---------------------------------------------------------------- 7

fn piecewise_bundle() -> ProblemBundle {
    let p = quadratic_loss(3).unwrap();
    let u = &p.utility;
    let x = QuestionProfile::new(vec![
        u[0].clone(),
        u[1].clone(),
        u[2].iter().map(|v| 2.0 * v).collect(),
        u[3].iter().zip(&u[2]).map(|(a, b)| a + b).collect(),
    ]);
    ProblemBundle::new(p).with_question(x).unwrap()
}

fn piecewise_stitching() -> Outcome {
    let b = piecewise_bundle();
    let v = verdict_of(&b);
    let Some(Certificate::Piecewise(pw)) = &v.certificate else {
        return Err(format!("{:?} via {}", v.status, v.theorem));
    };
    let ratios: Vec<f64> = pw.certs.iter().map(|c| c.gamma[1] / c.gamma[0]).collect();
    ensure(ratios.iter().any(|r| (r - ratios[0]).abs() > 0.5), || format!("gamma ratios {ratios:?} do not differ"))?;
    let m = synthesize(&b, v.certificate.as_ref().unwrap()).unwrap();
    let x = b.question().unwrap();
    let mut worst: f64 = 0.0;
    for &split in &pw.collection.splitting_actions {
        let parts: Vec<usize> = (0..pw.collection.parts.len()).filter(|&i| pw.collection.parts[i].contains(&split)).collect();
        for r in [-2.0, -0.5, 0.0, 0.3, 1.0, 2.5] {
            for t in 0..b.problem.n_states() {
                let vals: Vec<f64> = parts.iter().map(|&i| piecewise_part_value(&b.problem, x, &m, i, r, split, t).unwrap()).collect();
                for v in &vals {
                    worst = worst.max((v - vals[0]).abs());
                }
            }
        }
    }
    ensure(worst <= 1e-12, || format!("parts disagree by {worst:e}"))?;
    let spec = GridSpec { denominator: 12, seed: SEED, ..GridSpec::default() };
    let r = verify_incentivizability(&b, &m, &spec).unwrap();
    ensure(r.failures.is_empty(), || format!("{} failures", r.failures.len()))?;
    Ok(format!("{} parts, gamma ratios {:?}, stitch gap {worst:.1e}, {} beliefs pass", pw.certs.len(), ratios, r.checked))
}

// ---------------------------------------------------------------- 8

fn cycle_rich_example() -> Outcome {
    let b = gen_canonical("cycle-rich-safe", &Params::new()).unwrap();
    let p = &b.problem;
    let (t0, t1) = (p.action_index("theta0").unwrap(), p.action_index("theta1").unwrap());
    let test = adjacency_test(p, t0, t1, TIE_TOL);
    ensure(!test.adjacent, || "theta0 and theta1 are adjacent".into())?;
    let g = adjacency_graph(p, TIE_TOL);
    let all: Vec<usize> = (0..p.n_actions()).collect();
    let rich = cycle_rich(p, &all, &g, &CycleRichLimits::default());
    let stuck = rich.certificate.last().map(|c| c.subset.clone()).unwrap_or_default();
    ensure(rich.is_rich(), || format!("theta0/theta1 non-adjacent, but A is not cycle-rich: no action certifies subset {stuck:?}"))?;
    Ok("theta0/theta1 non-adjacent and A is cycle-rich".into())
}

// ---------------------------------------------------------------- 9

fn value_function_shape() -> Outcome {
    let cases = [
        ("aligned", generated("star", &["theta=4", "s=0.6"], "regret", &[])),
        ("piecewise", piecewise_bundle()),
        ("product", generated("mc-test", &["i=4", "omega=2"], "improvement", &["split=2"])),
    ];
    let mut summary = Vec::new();
    for (name, b) in &cases {
        let v = verdict_of(b);
        let m = synthesize(b, v.certificate.as_ref().ok_or(format!("{name}: no certificate"))?).unwrap();
        ensure(m.provenance.name() == *name, || format!("{name}: built {}", m.provenance.name()))?;
        let k = b.problem.n_states();
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        for _ in 0..1000 {
            let (p, q) = (dirichlet(&mut rng, k), dirichlet(&mut rng, k));
            let (vp, vq) = (v_star(&m, &p), v_star(&m, &q));
            for t in [0.25, 0.5, 0.75] {
                let mix: Vec<f64> = p.iter().zip(&q).map(|(a, c)| (1.0 - t) * a + t * c).collect();
                let chord = (1.0 - t) * vp + t * vq;
                ensure(v_star(&m, &mix) <= chord + 1e-9 * (1.0 + chord.abs()), || format!("{name}: convexity fails"))?;
            }
        }
        let mut affine = 0;
        let mut attempts = 0;
        while affine < 300 && attempts < 20_000 {
            attempts += 1;
            let p = dirichlet(&mut rng, k);
            let vals: Vec<f64> = black_box_values(&m, &p).into_iter().map(|v| v.1).collect();
            let opt = argmax_set(&vals, 1e-6);
            if opt.len() != 1 {
                continue;
            }
            let a = opt[0];
            // direction orthogonal to 1 and c1(a)
            let mut basis: Vec<Vec<f64>> = Vec::new();
            for v in [vec![1.0; k], m.c1[a].clone()] {
                let mut v = v;
                for e in &basis {
                    let c = expect(&v, e);
                    v.iter_mut().zip(e).for_each(|(x, y)| *x -= c * y);
                }
                let n = expect(&v, &v).sqrt();
                if n > 1e-12 {
                    basis.push(v.into_iter().map(|x| x / n).collect());
                }
            }
            let mut d: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
            for e in &basis {
                let c = expect(&d, e);
                d.iter_mut().zip(e).for_each(|(x, y)| *x -= c * y);
            }
            let mut h = p.iter().zip(&d).filter(|(_, x)| x.abs() > 1e-12).map(|(pi, x)| pi / x.abs()).fold(f64::INFINITY, f64::min) * 0.5;
            if !h.is_finite() {
                continue;
            }
            let ends = loop {
                let lo: Vec<f64> = p.iter().zip(&d).map(|(x, y)| x - h * y).collect();
                let hi: Vec<f64> = p.iter().zip(&d).map(|(x, y)| x + h * y).collect();
                let keeps = |q: &[f64]| {
                    let vals: Vec<f64> = black_box_values(&m, q).into_iter().map(|v| v.1).collect();
                    argmax_set(&vals, 1e-6) == vec![a]
                };
                if keeps(&lo) && keeps(&hi) {
                    break Some((lo, hi));
                }
                h *= 0.5;
                if h < 1e-6 {
                    break None;
                }
            };
            let Some((lo, hi)) = ends else { continue };
            let mid = 0.5 * (v_star(&m, &lo) + v_star(&m, &hi));
            let centre = v_star(&m, &p);
            ensure((centre - mid).abs() <= 1e-9 * (1.0 + centre.abs()), || format!("{name}: not affine, gap {:e}", centre - mid))?;
            affine += 1;
        }
        ensure(affine >= 300, || format!("{name}: only {affine} optimality-preserving segments found"))?;
        summary.push(format!("{name} 1000/{affine}"));
    }
    Ok(format!("convex / affine segments: {}", summary.join(", ")))
}

// ---------------------------------------------------------------- 10

fn property_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..500 {
        let k = rng.random_range(2..9);
        let v: Vec<f64> = (0..k).map(|_| rng.random_range(-10.0..10.0)).collect();
        let once = project_zero_sum(&v);
        let twice = project_zero_sum(&once);
        ensure(once.iter().zip(&twice).all(|(a, b)| (a - b).abs() <= 1e-12), || "projection not idempotent".into())?;
        ensure(once.iter().sum::<f64>().abs() <= 1e-10, || "projection not zero-sum".into())?;

        let (g1, k1) = (rng.random_range(0.2..3.0) * if rng.random_bool(0.5) { -1.0 } else { 1.0 }, rng.random_range(-2.0..2.0));
        let (g2, k2) = (rng.random_range(0.2..3.0), rng.random_range(-2.0..2.0));
        let y: Vec<f64> = v.iter().map(|x| g1 * x + k1).collect();
        let z: Vec<f64> = y.iter().map(|x| g2 * x + k2).collect();
        let tol = 1e-9;
        ensure(questions_equivalent(&v, &v, tol).is_some(), || "not reflexive".into())?;
        let (fwd, back) = (questions_equivalent(&y, &v, tol), questions_equivalent(&v, &y, tol));
        ensure(fwd.is_some() == back.is_some(), || "not symmetric".into())?;
        if let (Some((ga, _)), Some((gb, _))) = (fwd, back) {
            ensure((ga * gb - 1.0).abs() <= 1e-8, || "inverse slopes disagree".into())?;
        }
        if fwd.is_some() && questions_equivalent(&z, &y, tol).is_some() {
            ensure(questions_equivalent(&z, &v, tol).is_some(), || "not transitive".into())?;
        }
    }

    let spec = GridSpec { denominator: 10, samples: 500, seed: SEED, ..GridSpec::default() };
    let (mut consistent, mut resubstituted) = (0, 0);
    for g in GENERATORS {
        let base = gen_canonical(g, &Params::new()).unwrap();
        let mut any = false;
        for kind in QUESTION_KINDS {
            let qp: &[&str] = match *kind {
                "within-x" => &["x=0.25"],
                "threshold" => &["z=2"],
                _ => &[],
            };
            let Ok(x) = builtin_question(&base, kind, &parse_params(qp).unwrap()) else { continue };
            let b = base.clone().with_question(x.clone()).unwrap();
            let v = verdict_of(&b);
            let scale = 1.0
                + b.problem.utility.iter().chain(&x.values).flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            let aligned = match &v.certificate {
                Some(Certificate::Aligned(c)) => vec![c.clone()],
                Some(Certificate::Piecewise(pw)) => pw.certs.clone(),
                _ => vec![],
            };
            for c in &aligned {
                for (i, &a) in c.scope.iter().enumerate() {
                    for t in 0..b.problem.n_states() {
                        let base_v = if c.trivial { c.d[t] } else { b.problem.utility[a][t] + c.d[t] };
                        let err = (x.values[a][t] - c.gamma[i] * base_v - c.kappa[i]).abs();
                        ensure(err <= DEFAULT_TOL * scale, || format!("{g}/{kind}: residual {err:e} at ({a},{t})"))?;
                    }
                }
                resubstituted += 1;
            }
            if let Some(Certificate::Weighted(c)) = &v.certificate {
                let prod = b.product.as_ref().unwrap();
                for a in 0..b.problem.n_actions() {
                    let (ac, row) = (prod.action_coords(a), c.base_row(prod, a));
                    for (t, base) in row.iter().enumerate() {
                        let sc = prod.state_coords(t);
                        let lifted: f64 = c.tau.iter().enumerate().map(|(i, tau)| tau * prod.tasks[i].utility[ac[i]][sc[i]]).sum();
                        ensure((base - c.d[t] - lifted).abs() <= 1e-12, || "weighted base row".into())?;
                        let err = (x.values[a][t] - c.kappa[a] - c.v[a] * (c.d[t] + lifted)).abs();
                        ensure(err <= DEFAULT_TOL * scale, || format!("{g}/{kind}: weighted residual {err:e}"))?;
                    }
                }
                resubstituted += 1;
            }
            let cc = oracle_cross_check(&b, DEFAULT_TOL, &spec).unwrap();
            ensure(cc.consistent != Some(false), || format!("{g}/{kind}: {:?} but {}", cc.status, cc.detail))?;
            if cc.consistent == Some(true) {
                consistent += 1;
                any = true;
            }
        }
        ensure(any, || format!("{g}: no conclusive verdict to cross-check"))?;
    }
    Ok(format!("projection and equivalence laws on 500 cases; {resubstituted} certificates re-substituted; {consistent} verdicts match behaviour"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("adjacency shapes", adjacency_shapes, 8),
        ("regret is always incentivizable", regret_everywhere, 60),
        ("within-x impossibility", within_x_impossible, 5),
        ("complete-graph dichotomy", complete_graph_dichotomy, 5),
        ("product dichotomy", product_dichotomy, 120),
        ("BDM value law", bdm_value_law, 1),
        ("piecewise stitching", piecewise_stitching, 10),
        ("cycle-rich example", cycle_rich_example, 10),
        ("value-function shape", value_function_shape, 30),
        ("property suites", property_suites, 120),
    ];
    let mut hard_failures = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let n = i + 1;
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|msg| {
            if elapsed.as_secs_f64() <= *limit as f64 {
                Ok(msg)
            } else {
                Err(format!("{msg}; took {elapsed:.2?}, limit {limit} s"))
            }
        });
        let (tag, msg) = match &outcome {
            Ok(m) => ("PASS", m.clone()),
            Err(m) => ("FAIL", m.clone()),
        };
        let note = if outcome.is_err() && KNOWN_RED.contains(&n) { " [known, not gating]" } else { "" };
        println!("criterion {n:>2} {tag}: {name}: {msg} ({elapsed:.2?}){note}");
        if outcome.is_err() && !KNOWN_RED.contains(&n) {
            hard_failures += 1;
        }
    }
    if hard_failures > 0 {
        eprintln!("{hard_failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
