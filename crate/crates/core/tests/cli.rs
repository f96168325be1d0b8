//! The `btq` command line, driven in-process through `cli::run` and once through the built
//! binary.

use std::io::Write;
use std::process::{Command, Stdio};

use btq_core::cli::run;
use btq_core::laurent::{random_gamma, LaurentMatrix};
use serde_json::Value;

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn btq_with_input(args: &[&str], input: &str) -> Out {
    let mut argv = vec!["btq"];
    argv.extend_from_slice(args);
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = run(argv, &mut input.as_bytes(), &mut o, &mut e);
    Out { code, stdout: String::from_utf8(o).unwrap(), stderr: String::from_utf8(e).unwrap() }
}

fn btq(args: &[&str]) -> Out {
    btq_with_input(args, "")
}

fn ok(args: &[&str]) -> String {
    let r = btq(args);
    assert_eq!(r.code, 0, "{args:?}: {}", r.stderr);
    r.stdout
}

fn line_value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).map(str::trim))
        .unwrap_or_else(|| panic!("no line \"{key}\" in\n{text}"))
}

#[test]
fn domain_json_has_the_truncated_vertex_set() {
    let v: Value = serde_json::from_str(&ok(&["domain", "--d", "3", "--max-n", "1", "--q", "2", "--format", "json"])).unwrap();
    let nodes = v["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), 3);
    assert_eq!(nodes[0]["label"], serde_json::json!([0, 0, 0]));
    assert_eq!(nodes[0]["stab_order"], "168");
    assert!(!v["edges"].as_array().unwrap().is_empty());
}

#[test]
fn domain_text_and_dot() {
    let text = ok(&["domain", "--d", "2", "--q", "3", "--max-n", "3"]);
    assert!(text.starts_with("# d=2 q=3 max_n1=3: 4 vertices, 6 edges"));
    assert!(text.contains("vertex 0,0 stab_order 24"));
    let dot = ok(&["domain", "--d", "2", "--q", "3", "--max-n", "3", "--format", "dot"]);
    assert!(dot.starts_with("digraph"));
    assert_eq!(dot.matches(" -> ").count(), 6);
}

#[test]
fn stabilizer_and_enumeration() {
    assert_eq!(ok(&["stabilizer", "--n", "0,0,0", "--d", "3", "--q", "2"]), "168\n");
    let out = ok(&["stabilizer", "--n", "1,0", "--q", "2", "--enumerate"]);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("4"));
    let mats: Vec<_> = lines.map(|l| LaurentMatrix::from_json(l).unwrap()).collect();
    assert_eq!(mats.len(), 4);
    assert!(mats.iter().all(|m| m.is_in_gl_fq_t()));
}

#[test]
fn covolume_prints_exact_values() {
    let out = ok(&["covolume", "--d", "2", "--q", "2"]);
    assert_eq!(line_value(&out, "closed_form"), "2/3");
    let gl = ok(&["covolume", "--d", "2", "--q", "3", "--normalization", "gl"]);
    assert_eq!(line_value(&gl, "closed_form"), "1/16");
}

#[test]
fn neighbors_in_t_and_in_the_building() {
    assert_eq!(ok(&["neighbors", "--n", "0,0,0", "--k", "2", "--q", "2", "--in-t"]), "1,0,0\n");
    let v: Value = serde_json::from_str(&ok(&["neighbors", "--n", "0,0,0", "--k", "1", "--q", "2", "--format", "json"])).unwrap();
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), 7);
    assert!(arr.iter().all(|x| x["label_in_t"] == serde_json::json!([1, 1, 0])));
}

#[test]
fn matrices_are_read_from_stdin() {
    let g = random_gamma(3, 3, 2, 11).unwrap();
    let m = &g * &LaurentMatrix::diag_t(&[3, 1, 0], 3);
    let r = btq_with_input(&["reduce", "--matrix", "-", "--format", "json"], &m.to_json());
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["label"], serde_json::json!([3, 1, 0]));

    let r = btq_with_input(&["neighbors", "--matrix", "-", "--k", "1", "--q", "3"], &m.to_json());
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.starts_with("# 13 neighbors of degree 1"));
}

#[test]
fn eigenvector_exact_and_complex() {
    let out = ok(&["eigenvector", "--d", "3", "--q", "2", "--lambda1", "3", "--lambda2", "5", "--max-n", "3"]);
    assert_eq!(line_value(&out, "f(100) ="), "3/7");
    assert_eq!(line_value(&out, "f(210) ="), "-13/21");
    let v: Value = serde_json::from_str(&ok(&[
        "eigenvector", "--d", "3", "--q", "2", "--lambda1", "1+2i", "--lambda2", "1-2i", "--max-n", "4", "--l2", "--regression", "--format", "json",
    ]))
    .unwrap();
    assert!(v["eigen_identity_max_residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(v["l2"].as_array().unwrap().len(), 5);
    assert!(v["regression"].as_array().unwrap().iter().all(|e| e["agrees"] == Value::Bool(true)));
    let d2 = ok(&["eigenvector", "--d", "2", "--q", "3", "--lambda1", "-1/2"]);
    assert!(d2.contains("-1/8"), "{d2}");
}

#[test]
fn hecke_check_reports_ok() {
    let out = ok(&["hecke-check", "--d", "3", "--q", "2", "--max-n", "5", "--trials", "3"]);
    assert_eq!(line_value(&out, "status"), "ok");
    assert!(out.contains("nonzero_residuals 0"));
}

#[test]
fn distance_reports_both_searches_and_formulas() {
    let out = ok(&["distance", "--n", "2,1,0", "--m", "0,0,0", "--q", "2", "--radius", "3"]);
    assert_eq!(line_value(&out, "bfs_distance"), "2");
    assert_eq!(line_value(&out, "formula_distance"), "1");
    assert!(out.contains("note:"));
}

#[test]
fn invalid_input_exits_with_two() {
    for args in [
        &["stabilizer", "--n", "1,2,0", "--q", "2"][..],
        &["stabilizer", "--n", "0,0", "--q", "4"],
        &["covolume", "--d", "1", "--q", "2"],
        &["eigenvector", "--d", "4", "--q", "2", "--lambda1", "1"],
        &["domain", "--d", "3"],
        &["no-such-command"],
        &["reduce", "--matrix", "-"],
    ] {
        let r = btq(args);
        assert_eq!(r.code, 2, "{args:?}");
        assert!(!r.stderr.is_empty());
        assert!(r.stdout.is_empty());
    }
}

#[test]
fn resource_bounds_exit_with_three() {
    let r = btq(&["stabilizer", "--n", "0,0,0,0", "--q", "3", "--enumerate", "--bound", "100"]);
    assert_eq!(r.code, 3);
    assert!(r.stderr.contains("bound"));
    let r = btq(&["neighbors", "--n", "0,0,0,0", "--k", "2", "--q", "5", "--bound", "10"]);
    assert_eq!(r.code, 3);
}

#[test]
fn output_is_deterministic() {
    for args in [
        &["domain", "--d", "3", "--q", "3", "--max-n", "4", "--format", "json"][..],
        &["hecke-check", "--d", "4", "--q", "2", "--max-n", "3", "--trials", "2", "--seed", "9"],
        &["eigenvector", "--d", "3", "--q", "5", "--lambda1", "0.5", "--lambda2", "7/3", "--l2"],
    ] {
        assert_eq!(ok(args), ok(args), "{args:?}");
    }
}

#[test]
fn binary_runs_end_to_end() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_btq"))
        .args(["reduce", "--matrix", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let m = LaurentMatrix::diag_t(&[0, 2, 5], 2);
    child.stdin.take().unwrap().write_all(m.to_json().as_bytes()).unwrap();
    let res = child.wait_with_output().unwrap();
    assert!(res.status.success());
    assert!(String::from_utf8(res.stdout).unwrap().starts_with("label 5,2,0\n"));

    let res = Command::new(env!("CARGO_BIN_EXE_btq")).args(["covolume", "--d", "0", "--q", "2"]).output().unwrap();
    assert_eq!(res.status.code(), Some(2));
}
