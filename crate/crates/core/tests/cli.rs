use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_norden"));
    c.env_remove("NORDEN_TOL_ABS").env_remove("NORDEN_TOL_REL");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_variant(dir: &Path, name: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(data("paper_g.json")).unwrap()).unwrap();
    edit(&mut v);
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    p
}

fn records(json: &str) -> Vec<(String, String)> {
    let v: Value = serde_json::from_str(json).unwrap();
    let report = v.get("report").unwrap_or(&v);
    report["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["name"].as_str().unwrap().to_string(), r["verdict"].as_str().unwrap().to_string()))
        .collect()
}

#[test]
fn verify_paper_passes_and_is_byte_identical() {
    let args = ["verify-paper", "--lambda", "1", "--mu", "2", "--trials", "50", "--seed", "7", "--format", "json"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    let recs = records(&stdout(&a));
    assert!(recs.iter().any(|(n, v)| n == "R-prime flat" && v == "pass"), "{recs:?}");
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["report"]["seed"], 7);
    assert_eq!(v["report"]["schema_version"], 1);

    let text = run(&["verify-paper", "--lambda", "1", "--mu", "2", "--trials", "50", "--seed", "7"]);
    let t = stdout(&text);
    assert!(t.contains("R-prime flat: PASS"));
    assert!(t.contains("seed: 7"));
    let text_lines: Vec<&str> = t.lines().filter(|l| l.contains("  (residual ")).collect();
    assert_eq!(text_lines.len(), recs.len());
}

#[test]
fn perturbed_metric_fails_and_skips() {
    let o = run(&["verify-paper", "--lambda", "3", "--mu", "-1", "--trials", "50", "--perturb-g11", "1e-3"]);
    assert_eq!(o.status.code(), Some(1));
    let t = stdout(&o);
    assert!(t.contains("W1: FAIL"));
    assert!(t.contains("R-prime flat: SKIP"));
}

#[test]
fn classify_flat_model() {
    let f = data("flat_kahler.json");
    let o = run(&["classify", "--input", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("W0: PASS"));
}

#[test]
fn shipped_example_validates() {
    let f = data("paper_g.json");
    let o = run(&["validate", "--input", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    // the file is the serialized example with lambda = 1, mu = 2
    let m = norden::manifold_file::load(&f).unwrap().manifold;
    let e = norden::example::build_example(&norden::example::ExampleParams::new(1.0, 2.0));
    assert_eq!(m.structure_constants(), e.structure_constants());
    assert_eq!(m.metric(), e.metric());
    assert_eq!(m.complex_structure(), e.complex_structure());
}

#[test]
fn canonical_connection_two_ways() {
    let f = data("paper_g.json");
    let f = f.to_str().unwrap();
    for cmd in ["curvature", "connection"] {
        let a = run(&[cmd, "--input", f, "--family", "natural", "--params", "0.25", "0", "--format", "json", "--full"]);
        let b = run(&[
            cmd, "--input", f, "--family", "prime", "--params", "0", "0", "0", "0", "0", "-0.25", "0", "0.25", "--format",
            "json", "--full",
        ]);
        let c = run(&[cmd, "--input", f, "--family", "canonical", "--format", "json", "--full"]);
        assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
        assert_eq!(b.status.code(), Some(0), "{}", stdout(&b));
        let ta: Value = serde_json::from_slice(&a.stdout).unwrap();
        let tb: Value = serde_json::from_slice(&b.stdout).unwrap();
        let tc: Value = serde_json::from_slice(&c.stdout).unwrap();
        assert_eq!(ta["tensors"], tb["tensors"]);
        assert_eq!(ta["tensors"], tc["tensors"]);
        assert!(!ta["tensors"][0]["components"].as_array().unwrap().is_empty());
    }
}

#[test]
fn connection_output_carries_defining_property() {
    for (fam, params) in [
        ("levi-civita", vec![]),
        ("prime", vec!["0.1", "0.2", "-0.3", "0.4", "0.5", "-0.6", "0.7", "-0.8"]),
        ("symmetric", vec!["0.1", "-0.2", "0.3", "0.4"]),
        ("natural", vec!["0.3", "-0.1"]),
        ("zero", vec![]),
        ("canonical", vec![]),
        ("yano", vec![]),
    ] {
        let mut args = vec!["connection", "--lambda", "1", "--mu", "-2", "--family", fam];
        if !params.is_empty() {
            args.push("--params");
            args.extend(params.iter().copied());
        }
        let o = run(&args);
        assert_eq!(o.status.code(), Some(0), "{fam}: {}{}", stdout(&o), stderr(&o));
        assert!(stdout(&o).contains(&format!("{fam} defining property: PASS")), "{}", stdout(&o));
    }
}

#[test]
fn usage_errors_exit_2() {
    let o = run(&["curvature", "--family", "prime", "--params", "1", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("8 parameters"));
    assert_eq!(run(&["verify-paper", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let o = run(&["validate", "--input", "/nonexistent/file.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn corrupted_files_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_variant(dir.path(), "unknown.json", |v| {
        v["metric"] = v["g"].clone();
        v.as_object_mut().unwrap().remove("g");
    });
    let o = run(&["validate", "--input", unknown.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("metric"), "{}", stderr(&o));

    let order = write_variant(dir.path(), "order.json", |v| {
        v["C"][2]["i"] = Value::from(4);
        v["C"][2]["j"] = Value::from(2);
    });
    let o = run(&["validate", "--input", order.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("C[2]"), "{}", stderr(&o));

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\n  \"n\": 2,\n  \"g\": [[1, 0\n").unwrap();
    let o = run(&["classify", "--input", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));

    let missing = write_variant(dir.path(), "missing.json", |v| {
        v.as_object_mut().unwrap().remove("J");
    });
    let o = run(&["validate", "--input", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`J`"), "{}", stderr(&o));
}

#[test]
fn non_symmetric_metric_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_variant(dir.path(), "asym.json", |v| {
        v["g"][0][1] = Value::from(0.5);
    });
    let o = run(&["validate", "--input", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("g symmetry: FAIL"), "{}", stdout(&o));
    let o = run(&["curvature", "--input", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("g symmetry"));
}

#[test]
fn tolerance_from_environment() {
    let o = bin()
        .args(["validate", "--format", "json"])
        .env("NORDEN_TOL_ABS", "1e-6")
        .env("NORDEN_TOL_REL", "0")
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["report"]["tolerance"]["absolute"], 1e-6);
    assert_eq!(v["report"]["tolerance"]["relative"], 0.0);
}

#[test]
fn conformal_command() {
    let o = run(&["conformal", "--lambda", "1", "--mu", "2", "--factor", "0.5", "--trials", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let t = stdout(&o);
    assert!(t.contains("theta-bar vanishes: PASS"));
    assert!(t.contains("R-bar lemma: PASS"));
    let o = run(&["conformal", "--sigma", "0.5", "0", "0", "0.2", "--factor", "1.5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("R0-bar invariance: XFAIL"));
    assert!(stdout(&o).contains("shift curvature identity: PASS"));
}

#[test]
fn properties_command() {
    let o = run(&["properties", "--trials", "6", "--seed", "5", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let recs = records(&stdout(&o));
    assert!(recs.iter().any(|(n, _)| n == "Bochner invariance"));
    assert!(recs.iter().all(|(_, v)| v == "pass"));
}
