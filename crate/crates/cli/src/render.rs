//! Markdown renderings of the JSON reports. Numbers are printed from the
//! same values the JSON carries.

use elicitkit::model::ProblemBundle;
use serde_json::Value;
use std::fmt::Write;

fn num(v: &Value) -> String {
    match v.as_f64() {
        Some(x) if v.is_f64() => format!("{x:.6e}"),
        _ => v.to_string(),
    }
}

fn labels(bundle: &ProblemBundle, idx: &Value) -> String {
    idx.as_array()
        .map(|a| {
            a.iter()
                .filter_map(Value::as_u64)
                .map(|i| bundle.problem.actions.get(i as usize).cloned().unwrap_or_else(|| i.to_string()))
                .collect::<Vec<_>>()
                .join(", ")
        })
        .unwrap_or_default()
}

pub fn classification(r: &Value) -> String {
    let c = &r["class"];
    let mut s = String::from("# Adjacency graph\n\n");
    let _ = writeln!(s, "- kind: **{}**", c["kind"].as_str().unwrap_or("?"));
    for key in ["n_actions", "n_edges", "connected", "tree", "complete", "product_consistent"] {
        let _ = writeln!(s, "- {key}: {}", c[key]);
    }
    s.push_str("\n## Edges\n\n| a | b | slack |\n|---|---|---|\n");
    for e in r["edges"].as_array().into_iter().flatten() {
        let _ = writeln!(s, "| {} | {} | {} |", e["a"].as_str().unwrap_or(""), e["b"].as_str().unwrap_or(""), num(&e["slack"]));
    }
    s.push_str("\n## Splitting collection\n\n");
    match r["splitting"].as_object() {
        Some(sp) => {
            for p in sp["parts"].as_array().into_iter().flatten() {
                let names: Vec<&str> = p.as_array().into_iter().flatten().filter_map(Value::as_str).collect();
                let _ = writeln!(s, "- {{{}}}", names.join(", "));
            }
            let names: Vec<&str> = sp["splitting_actions"].as_array().into_iter().flatten().filter_map(Value::as_str).collect();
            let _ = writeln!(s, "\nsplitting actions: {}", if names.is_empty() { "none".into() } else { names.join(", ") });
        }
        None => s.push_str("none (graph is disconnected)\n"),
    }
    let cy = &r["cycles"];
    let _ = writeln!(
        s,
        "\n## Cycles\n\n{} simple cycles of length at most {}{}",
        cy["count"],
        cy["max_len"],
        if cy["truncated"].as_bool() == Some(true) { " (truncated)" } else { "" }
    );
    for (len, count) in cy["by_length"].as_object().into_iter().flatten() {
        let _ = writeln!(s, "- length {len}: {count}");
    }
    s
}

pub fn verdict(r: &Value, bundle: &ProblemBundle) -> String {
    let mut s = String::from("# Verdict\n\n");
    let _ = writeln!(s, "- status: **{}**", r["status"].as_str().unwrap_or("?"));
    let _ = writeln!(s, "- theorem: {}", r["theorem"].as_str().unwrap_or("?"));
    let _ = writeln!(s, "- graph: {}", r["graph"].as_str().unwrap_or("?"));
    let _ = writeln!(s, "- tol: {}", num(&r["tol"]));
    if let Some(c) = r["certificate"].as_object() {
        let _ = writeln!(s, "\n## Certificate ({})\n", c["kind"].as_str().unwrap_or("?"));
        for key in ["residual", "trivial"] {
            if let Some(v) = c.get(key) {
                let _ = writeln!(s, "- {key}: {}", num(v));
            }
        }
        if let Some(g) = c.get("gamma") {
            let _ = writeln!(s, "- gamma: {}", g.as_array().into_iter().flatten().map(num).collect::<Vec<_>>().join(", "));
        }
        if let Some(t) = c.get("tau") {
            let _ = writeln!(s, "- tau: {}", t.as_array().into_iter().flatten().map(num).collect::<Vec<_>>().join(", "));
        }
        if let Some(certs) = c.get("certs").and_then(Value::as_array) {
            let _ = writeln!(s, "- parts: {}", certs.len());
            for cert in certs {
                let _ = writeln!(s, "  - {{{}}}: residual {}", labels(bundle, &cert["scope"]), num(&cert["residual"]));
            }
        }
    }
    if let Some(v) = r["violation"].as_object() {
        s.push_str("\n## Violation\n\n");
        let _ = writeln!(s, "- kind: {}", v["kind"].as_str().unwrap_or("?"));
        let _ = writeln!(s, "- actions: {}", labels(bundle, &v["actions"]));
        let _ = writeln!(s, "- relative residual: {}", num(&v["relative_residual"]));
        if let Some(d) = v["detail"].as_str().filter(|d| !d.is_empty()) {
            let _ = writeln!(s, "- detail: {d}");
        }
    }
    let notes: Vec<&str> = r["notes"].as_array().into_iter().flatten().filter_map(Value::as_str).collect();
    if !notes.is_empty() {
        s.push_str("\n## Notes\n\n");
        for n in notes {
            let _ = writeln!(s, "- {n}");
        }
    }
    s
}

fn witness_rows(s: &mut String, w: &Value) {
    let probs: Vec<String> = w["belief"]["probs"].as_array().into_iter().flatten().map(num).collect();
    let _ = writeln!(s, "- belief: ({})", probs.join(", "));
    let _ = writeln!(s, "- u-optimal: {}", w["u_optimal"]);
    let _ = writeln!(s, "- V-optimal: {}", w["v_optimal"]);
    let _ = writeln!(s, "- report gap: {}", num(&w["report_gap"]));
    let _ = writeln!(s, "- value gap: {}", num(&w["value_gap"]));
}

pub fn verification(r: &Value) -> String {
    let mut s = String::from("# Verification\n\n");
    let _ = writeln!(s, "- passed: **{}**", r["passed"]);
    for key in ["checked", "passes", "boundary_ambiguous"] {
        let _ = writeln!(s, "- {key}: {}", r[key]);
    }
    let failures = r["failures"].as_array().cloned().unwrap_or_default();
    let _ = writeln!(s, "- failures: {}", failures.len());
    for n in r["notes"].as_array().into_iter().flatten().filter_map(Value::as_str) {
        let _ = writeln!(s, "- note: {n}");
    }
    if let Some(first) = failures.first() {
        s.push_str("\n## First failure\n\n");
        witness_rows(&mut s, first);
    }
    s
}

pub fn witness(r: &Value, bundle: &ProblemBundle) -> String {
    let mut s = String::from("# Distortion witness\n\n");
    if r["found"].as_bool() == Some(true) {
        let w = &r["witness"];
        witness_rows(&mut s, w);
        let _ = writeln!(s, "- u-optimal actions: {}", labels(bundle, &w["u_optimal"]));
        let _ = writeln!(s, "- V-optimal actions: {}", labels(bundle, &w["v_optimal"]));
    } else {
        s.push_str("none found\n");
    }
    s
}
