use elicitkit::model::{gen_canonical, load_bundle, Params};
use elicitkit::synth::{mechanism_from_json, mechanism_to_json, naive_bdm};
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_elicitkit"));
    c.env_remove("ELICITKIT_TOL").env_remove("ELICITKIT_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

static COUNTER: AtomicUsize = AtomicUsize::new(0);

/// A fresh scratch directory under the system temp dir.
fn scratch() -> PathBuf {
    let n = COUNTER.fetch_add(1, Ordering::SeqCst);
    let dir = std::env::temp_dir().join(format!("elicitkit-cli-{}-{n}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn gen(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let path = dir.join(format!("{name}.json"));
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", path.to_str().unwrap()]);
    let o = run(&full);
    assert_eq!(code(&o), 0, "gen {args:?}: {}", String::from_utf8_lossy(&o.stderr));
    path
}

fn json_of(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn type_matches(t: &str, v: &Value) -> bool {
    match t {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "number" => v.is_number(),
        "integer" => v.is_u64() || v.is_i64(),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        _ => false,
    }
}

/// Validator for the keywords the shipped schemas use.
fn validate(root: &Value, s: &Value, v: &Value, at: &str, errs: &mut Vec<String>) {
    if let Some(r) = s.get("$ref").and_then(Value::as_str) {
        let target = r.trim_start_matches("#/").split('/').fold(root, |acc, k| &acc[k]);
        return validate(root, target, v, at, errs);
    }
    if let Some(t) = s.get("type") {
        let ok = match t {
            Value::String(t) => type_matches(t, v),
            Value::Array(ts) => ts.iter().filter_map(Value::as_str).any(|t| type_matches(t, v)),
            _ => true,
        };
        if !ok {
            errs.push(format!("{at}: expected type {t}, got {v}"));
            return;
        }
    }
    if let Some(e) = s.get("enum").and_then(Value::as_array) {
        if !e.contains(v) {
            errs.push(format!("{at}: {v} not in {e:?}"));
        }
    }
    if let Some(x) = v.as_f64() {
        let bound = |k: &str| s.get(k).and_then(Value::as_f64);
        if bound("minimum").is_some_and(|m| x < m)
            || bound("maximum").is_some_and(|m| x > m)
            || bound("exclusiveMinimum").is_some_and(|m| x <= m)
            || bound("exclusiveMaximum").is_some_and(|m| x >= m)
        {
            errs.push(format!("{at}: {x} out of bounds"));
        }
    }
    if let Some(obj) = v.as_object() {
        for r in s.get("required").and_then(Value::as_array).into_iter().flatten() {
            let key = r.as_str().unwrap();
            if !obj.contains_key(key) {
                errs.push(format!("{at}: missing `{key}`"));
            }
        }
        if let Some(props) = s.get("properties").and_then(Value::as_object) {
            for (k, sub) in props {
                if let Some(child) = obj.get(k) {
                    validate(root, sub, child, &format!("{at}/{k}"), errs);
                }
            }
        }
    }
    if let Some(arr) = v.as_array() {
        let count = |k: &str| s.get(k).and_then(Value::as_u64);
        if count("minItems").is_some_and(|m| (arr.len() as u64) < m) || count("maxItems").is_some_and(|m| arr.len() as u64 > m) {
            errs.push(format!("{at}: array length {} out of bounds", arr.len()));
        }
        if let Some(items) = s.get("items") {
            for (i, child) in arr.iter().enumerate() {
                validate(root, items, child, &format!("{at}/{i}"), errs);
            }
        }
    }
}

fn assert_schema(name: &str, v: &Value) {
    let s = schema(name);
    let mut errs = Vec::new();
    validate(&s, &s, v, "", &mut errs);
    assert!(errs.is_empty(), "{name} schema violations: {errs:#?}");
}

#[test]
fn schema_checker_rejects_bad_documents() {
    let s = schema("verdict");
    let mut errs = Vec::new();
    validate(&s, &s, &serde_json::json!({"status": "maybe", "tol": -1.0}), "", &mut errs);
    assert!(errs.iter().any(|e| e.contains("missing `theorem`")));
    assert!(errs.iter().any(|e| e.contains("not in")));
    assert!(errs.iter().any(|e| e.contains("out of bounds")));
}

#[test]
fn gen_spec_examples_write_valid_bundles() {
    let dir = scratch();
    for (name, args) in [
        ("ql4", vec!["quadratic-loss", "--n", "4", "--question", "within-x", "--x", "0.25"]),
        ("mc", vec!["mc-test", "--i", "4", "--omega", "2", "--question", "improvement", "--split", "2"]),
        ("star", vec!["star", "--theta", "4", "--s", "0.6", "--question", "regret"]),
    ] {
        let path = gen(&dir, name, &args);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_schema("bundle", &serde_json::from_str(&text).unwrap());
        let b = load_bundle(&path).unwrap();
        assert!(b.question.is_some());
    }
}

#[test]
fn unknown_generator_and_bad_params_exit_2() {
    assert_eq!(code(&run(&["gen", "no-such-thing"])), 2);
    assert_eq!(code(&run(&["gen", "star", "--s", "1.5"])), 2);
    assert_eq!(code(&run(&["gen", "quadratic-loss", "--question", "bogus"])), 2);
    assert_eq!(code(&run(&["--tol", "-1", "gen", "star"])), 2);
}

#[test]
fn missing_or_broken_files_exit_2() {
    let dir = scratch();
    assert_eq!(code(&run(&["classify", dir.join("absent.json").to_str().unwrap()])), 2);
    let junk = dir.join("junk.json");
    std::fs::write(&junk, "{ not json").unwrap();
    assert_eq!(code(&run(&["check", junk.to_str().unwrap()])), 2);
    // no question attached
    let plain = gen(&dir, "plain", &["quadratic-loss", "--n", "4"]);
    let o = run(&["check", plain.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(!o.stderr.is_empty());
}

#[test]
fn classify_reports_graph_kinds() {
    let dir = scratch();
    for (name, args, kind, edges) in [
        ("ql9", vec!["quadratic-loss", "--n", "9"], "tree (path)", 9),
        ("star", vec!["star", "--theta", "5", "--s", "0.3"], "complete", 15),
        ("mc", vec!["mc-test", "--i", "3", "--omega", "2"], "product-consistent", 12),
    ] {
        let path = gen(&dir, name, &args);
        let o = run(&["classify", path.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        let v = json_of(&o);
        assert_schema("classification", &v);
        assert_eq!(v["class"]["kind"], kind);
        assert_eq!(v["edges"].as_array().unwrap().len(), edges);

        let md = run(&["classify", "--format", "md", path.to_str().unwrap()]);
        let text = String::from_utf8(md.stdout).unwrap();
        assert!(text.contains(kind));
        assert!(text.contains(&format!("n_edges: {edges}")));
    }
}

#[test]
fn check_exit_codes() {
    let dir = scratch();
    let regret = gen(&dir, "regret", &["star", "--theta", "4", "--s", "0.6", "--question", "regret"]);
    let o = run(&["check", regret.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v = json_of(&o);
    assert_schema("verdict", &v);
    assert_eq!(v["status"], "incentivizable");

    let within = gen(&dir, "within", &["quadratic-loss", "--n", "4", "--question", "within-x", "--x", "0.25"]);
    let o = run(&["check", within.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let v = json_of(&o);
    assert_schema("verdict", &v);
    assert_eq!(v["violation"]["kind"], "pairwise");

    // three states, complete graph, question with no structure
    let base = gen(&dir, "s3", &["star", "--theta", "3", "--s", "0.4"]);
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&base).unwrap()).unwrap();
    doc["question"] = serde_json::json!([
        [0.134, 0.847, 0.764],
        [0.255, 0.495, 0.449],
        [0.652, 0.789, 0.094],
        [0.028, 0.836, 0.433]
    ]);
    let odd = dir.join("odd.json");
    std::fs::write(&odd, doc.to_string()).unwrap();
    let o = run(&["check", odd.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
    let v = json_of(&o);
    assert_schema("verdict", &v);
    assert!(v["notes"][0].as_str().unwrap().contains("3 states"));
}

#[test]
fn tol_flag_beats_env() {
    let dir = scratch();
    let regret = gen(&dir, "regret", &["star", "--theta", "4", "--s", "0.6", "--question", "regret"]);
    let p = regret.to_str().unwrap();
    let from_env = bin().env("ELICITKIT_TOL", "1e-6").args(["check", p]).output().unwrap();
    assert_eq!(json_of(&from_env)["tol"], 1e-6);
    let from_flag = bin().env("ELICITKIT_TOL", "1e-6").args(["check", "--tol", "1e-9", p]).output().unwrap();
    assert_eq!(json_of(&from_flag)["tol"], 1e-9);
}

#[test]
fn md_verdict_names_theorem_and_numbers() {
    let dir = scratch();
    let within = gen(&dir, "within", &["quadratic-loss", "--n", "4", "--question", "within-x", "--x", "0.25"]);
    let v = json_of(&run(&["check", within.to_str().unwrap()]));
    let md = String::from_utf8(run(&["check", "--format", "md", within.to_str().unwrap()]).stdout).unwrap();
    assert!(md.contains(v["theorem"].as_str().unwrap()));
    let r = v["violation"]["relative_residual"].as_f64().unwrap();
    assert!(md.contains(&format!("{r:.6e}")));
}

fn synthesize_ok(dir: &Path, bundle: &Path, name: &str) -> PathBuf {
    let out = dir.join(format!("{name}-mech.json"));
    let o = run(&["synthesize", bundle.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_schema("mechanism", &serde_json::from_str(&text).unwrap());
    assert!(mechanism_from_json(&text).unwrap().lottery.is_some());
    out
}

#[test]
fn synthesize_and_verify_three_constructions() {
    let dir = scratch();
    let cases = [
        ("aligned", vec!["star", "--theta", "4", "--s", "0.6", "--question", "regret"], "aligned"),
        ("product", vec!["mc-test", "--i", "4", "--omega", "2", "--question", "improvement", "--split", "2"], "product"),
        ("matching", vec!["state-matching", "--r", "0.7,1,1.3,1.6", "--question", "expost"], "aligned"),
    ];
    for (name, args, construction) in cases {
        let bundle = gen(&dir, name, &args);
        let mech = synthesize_ok(&dir, &bundle, name);
        let doc: Value = serde_json::from_str(&std::fs::read_to_string(&mech).unwrap()).unwrap();
        assert_eq!(doc["provenance"]["construction"], construction);
        let o = run(&["verify", "--grid", "6", "--samples", "200", bundle.to_str().unwrap(), mech.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{name}");
        let v = json_of(&o);
        assert_schema("verification", &v);
        assert_eq!(v["passed"], true);
        assert_eq!(v["failures"].as_array().unwrap().len(), 0);
    }
}

#[test]
fn synthesize_refuses_negative_verdicts() {
    let dir = scratch();
    let within = gen(&dir, "within", &["quadratic-loss", "--n", "4", "--question", "within-x", "--x", "0.25"]);
    let o = run(&["synthesize", within.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("pairwise"));
}

fn naive_file(dir: &Path, bundle: &Path) -> PathBuf {
    let b = load_bundle(bundle).unwrap();
    let m = naive_bdm(&b, b.alpha).unwrap();
    let path = dir.join("naive.json");
    std::fs::write(&path, mechanism_to_json(&m, None)).unwrap();
    path
}

#[test]
fn naive_mechanism_fails_verification_and_yields_witness() {
    let dir = scratch();
    let within = gen(&dir, "within", &["quadratic-loss", "--n", "4", "--question", "within-x", "--x", "0.25"]);
    let naive = naive_file(&dir, &within);
    let (b, m) = (within.to_str().unwrap(), naive.to_str().unwrap());

    let o = run(&["verify", "--samples", "100", b, m]);
    assert_eq!(code(&o), 3);
    let v = json_of(&o);
    assert_schema("verification", &v);
    assert!(!v["failures"].as_array().unwrap().is_empty());

    let o = run(&["witness", "--samples", "100", b, m]);
    assert_eq!(code(&o), 0);
    let v = json_of(&o);
    assert_schema("witness", &v);
    assert_eq!(v["found"], true);
    assert_ne!(v["witness"]["u_optimal"], v["witness"]["v_optimal"]);

    let md = String::from_utf8(run(&["witness", "--samples", "100", "--format", "md", b, m]).stdout).unwrap();
    let gap = v["witness"]["value_gap"].as_f64().unwrap();
    assert!(md.contains(&format!("{gap:.6e}")));
}

#[test]
fn witness_on_sound_mechanism_exits_5() {
    let dir = scratch();
    let bundle = gen(&dir, "regret", &["star", "--theta", "4", "--s", "0.6", "--question", "regret"]);
    let mech = synthesize_ok(&dir, &bundle, "regret");
    let o = run(&["witness", "--samples", "200", "--grid", "6", bundle.to_str().unwrap(), mech.to_str().unwrap()]);
    assert_eq!(code(&o), 5);
    let v = json_of(&o);
    assert_schema("witness", &v);
    assert_eq!(v["found"], false);
    assert!(v["witness"].is_null());
}

#[test]
fn mismatched_mechanism_exits_2() {
    let dir = scratch();
    let small = gen(&dir, "small", &["star", "--theta", "4", "--s", "0.6", "--question", "regret"]);
    let big = gen(&dir, "big", &["star", "--theta", "5", "--s", "0.6", "--question", "regret"]);
    let mech = synthesize_ok(&dir, &small, "small");
    assert_eq!(code(&run(&["verify", big.to_str().unwrap(), mech.to_str().unwrap()])), 2);
    assert_eq!(code(&run(&["witness", big.to_str().unwrap(), mech.to_str().unwrap()])), 2);
}

#[test]
fn seeded_runs_are_bit_identical() {
    let dir = scratch();
    let within = gen(&dir, "within", &["quadratic-loss", "--n", "4", "--question", "within-x", "--x", "0.25"]);
    let naive = naive_file(&dir, &within);
    let args = ["verify", "--seed", "7", "--samples", "300", within.to_str().unwrap(), naive.to_str().unwrap()];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.stdout, b.stdout);
    let env_seeded = bin().env("ELICITKIT_SEED", "7").args(["verify", "--samples", "300", within.to_str().unwrap(), naive.to_str().unwrap()]).output().unwrap();
    assert_eq!(a.stdout, env_seeded.stdout);
}

#[test]
fn gen_output_round_trips_through_library() {
    let dir = scratch();
    let path = gen(&dir, "cg", &["close-guess", "--question", "expost"]);
    let b = load_bundle(&path).unwrap();
    let fresh = gen_canonical("close-guess", &Params::new()).unwrap();
    assert_eq!(b.problem.utility, fresh.problem.utility);
}
