mod common;

use std::fs;
use std::path::Path;

use common::*;
use dnnf_lab::cli::dispatch;
use dnnf_lab::cnf::{from_dimacs, to_dimacs};
use dnnf_lab::compile::compile_primal;
use dnnf_lab::diagram::{self, figure_one};
use dnnf_lab::formula::vc;
use dnnf_lab::BUILD_ID;

fn run(args: &[&str]) -> (u8, String, String) {
    let argv: Vec<String> = std::iter::once("dnnf-lab").chain(args.iter().copied()).map(String::from).collect();
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = dispatch(&argv, &mut o, &mut e);
    (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

#[test]
fn gen_psi_grid2() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "psi2.cnf");
    let (c, o, _) = run(&["gen", "--family", "psi", "--grid", "2", "--out", &out]);
    assert_eq!(c, 0);
    let v: serde_json::Value = serde_json::from_str(o.trim()).unwrap();
    assert_eq!((v["vars"].as_u64(), v["clauses"].as_u64()), (Some(8), Some(10)));
    let phi = from_dimacs(&fs::read_to_string(&out).unwrap(), None).unwrap();
    assert_eq!(phi.len(), 10);
}

#[test]
fn count_compiled_c4() {
    let dir = tempfile::tempdir().unwrap();
    let g = cycle(4);
    let cnf = p(dir.path(), "c4.cnf");
    let (text, map) = to_dimacs(&vc(&g).unwrap());
    fs::write(&cnf, format!("{map}{text}")).unwrap();
    let d = p(dir.path(), "c4.json");
    let (c, _, e) = run(&["compile", "--method", "primal", "--cnf", &cnf, "--out", &d]);
    assert_eq!(c, 0, "{e}");
    assert_eq!(run(&["count", "--diagram", &d]).1.trim(), "7");
    assert_eq!(run(&["count", "--cnf", &cnf]).1.trim(), "7");
    let (c, o, _) = run(&["eval", "--diagram", &d, "--assignment", "c1=1,c2=0,c3=1,c4=0"]);
    assert_eq!((c, o.trim()), (0, "1"));
}

#[test]
fn validate_rejects_non_decomposable() {
    let dir = tempfile::tempdir().unwrap();
    let bad = p(dir.path(), "bad.json");
    fs::write(
        &bad,
        r#"{"source": 4, "vars": ["x"], "nodes": [
            {"id": 0, "kind": "sink", "value": 0},
            {"id": 1, "kind": "sink", "value": 1},
            {"id": 2, "kind": "decision", "var": "x", "lo": 0, "hi": 1},
            {"id": 3, "kind": "decision", "var": "x", "lo": 1, "hi": 0},
            {"id": 4, "kind": "and", "left": 2, "right": 3}]}"#,
    )
    .unwrap();
    let (c, _, e) = run(&["validate", "--diagram", &bad]);
    assert_eq!(c, 1);
    let v: serde_json::Value = serde_json::from_str(e.lines().next().unwrap()).unwrap();
    assert_eq!(v["level"], "error");
}

#[test]
fn malformed_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let junk = p(dir.path(), "junk.json");
    fs::write(&junk, "{not json").unwrap();
    assert_eq!(run(&["validate", "--diagram", &junk]).0, 2);
    assert_eq!(run(&["count", "--nope"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    // randomized verbs need a seed
    let cnf = p(dir.path(), "e.cnf");
    fs::write(&cnf, "p cnf 2 1\n1 2 0\n").unwrap();
    assert_eq!(run(&["minobdd", "--cnf", &cnf, "--sample", "10"]).0, 2);
}

#[test]
fn version_is_build_id() {
    let (c, o, _) = run(&["--version"]);
    assert_eq!((c, o.trim()), (0, BUILD_ID));
}

#[test]
fn align_and_frontier_on_figure_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = p(dir.path(), "fig.json");
    fs::write(&d, diagram::to_json(&figure_one())).unwrap();
    let order = p(dir.path(), "order.txt");
    fs::write(&order, "x2\nx1\nx3\nx5\nx4\nx6\n").unwrap();
    let aligned = p(dir.path(), "aligned.json");
    let (c, o, e) = run(&["align", "--diagram", &d, "--assignment", "x2=1", "--order", &order, "--out", &aligned]);
    assert_eq!(c, 0, "{e}");
    let fr: serde_json::Value = serde_json::from_str(o.trim()).unwrap();
    assert_eq!(fr["L"].as_array().unwrap().len(), 1);
    assert_eq!(fr["X"], serde_json::json!(["x1", "x3"]));
    // not a prefix
    let (c, _, _) = run(&["align", "--diagram", &d, "--assignment", "x1=1", "--order", &order]);
    assert_eq!(c, 1);
}

#[test]
fn restrict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = path(3);
    let phi = vc(&g).unwrap();
    let (b, _) = compile_primal(&phi, &primal_decomposition(&phi)).unwrap();
    let d = p(dir.path(), "p3.json");
    fs::write(&d, diagram::to_json(&b)).unwrap();
    let r = p(dir.path(), "r.json");
    let (c, _, e) = run(&["restrict", "--diagram", &d, "--var", "p2", "--value", "0", "--out", &r]);
    assert_eq!(c, 0, "{e}");
    // p1 ∧ p3
    assert_eq!(run(&["count", "--diagram", &r]).1.trim(), "1");
}

#[test]
fn width_and_minobdd_report_caps() {
    let dir = tempfile::tempdir().unwrap();
    let g = p(dir.path(), "c4.graph");
    fs::write(&g, cycle(4).render()).unwrap();
    let (c, o, _) = run(&["width", "--graph", &g, "--measure", "tw"]);
    assert_eq!(c, 0);
    assert!(o.contains("\"width\":2"));
    let (c, o, _) = run(&["width", "--graph", &g, "--measure", "lsim", "--exhaustive"]);
    assert_eq!(c, 0, "{o}");
    let cnf = p(dir.path(), "c4.cnf");
    let (text, map) = to_dimacs(&vc(&cycle(4)).unwrap());
    fs::write(&cnf, format!("{map}{text}")).unwrap();
    let (c, o, _) = run(&["lb", "minobdd", "--cnf", &cnf, "--exhaustive"]);
    assert_eq!(c, 0);
    let v: serde_json::Value = serde_json::from_str(o.trim()).unwrap();
    assert_eq!(v["exhaustive_cap"], 8);
    assert_eq!(v["cap"], 22);
}

#[test]
fn fooling_manifest_certifies_three() {
    let dir = tempfile::tempdir().unwrap();
    let m = Path::new(env!("CARGO_MANIFEST_DIR")).join("manifests/fooling-q3.json");
    let out = dir.path().join("bundle");
    let (c, _, e) = run(&["run", "--manifest", &m.display().to_string(), "--out", &out.display().to_string()]);
    assert_eq!(c, 0, "{e}");
    let cert: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("certify.out")).unwrap()).unwrap();
    assert_eq!(cert["bound"], 3);
    assert_eq!(cert["injective"], true);
    assert!(cert.get("wall_clock_ms").is_none());
    let summary = fs::read_to_string(out.join("summary.tsv")).unwrap();
    assert!(summary.starts_with("step\tstatus\tstdout_sha256\tfirst_line\n"));
    assert_eq!(summary.lines().count(), 5);
}

#[test]
fn failing_step_aborts_run() {
    let dir = tempfile::tempdir().unwrap();
    let m = p(dir.path(), "m.json");
    fs::write(
        &m,
        r#"{"name": "broken", "steps": [
            {"id": "ok", "args": ["--version"]},
            {"id": "bad", "args": ["count", "--diagram", "{bundle}/missing.json"]},
            {"id": "never", "args": ["--version"]}]}"#,
    )
    .unwrap();
    let out = dir.path().join("b");
    let (c, _, e) = run(&["run", "--manifest", &m, "--out", &out.display().to_string()]);
    assert_eq!(c, 2);
    assert!(e.contains("\"step\":\"bad\""), "{e}");
    assert!(!out.join("never.out").exists());
}

#[test]
fn empty_manifest_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let m = p(dir.path(), "m.json");
    fs::write(&m, "{}").unwrap();
    let out = dir.path().join("b");
    assert_eq!(run(&["run", "--manifest", &m, "--out", &out.display().to_string()]).0, 0);
    assert_eq!(fs::read_to_string(out.join("summary.tsv")).unwrap().lines().count(), 1);
}
