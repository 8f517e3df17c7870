use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qhyper::sampling::{perturb_config, random_bounded_member, random_config, random_conjugation, random_isometry, task_rng};
use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qhyper"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, v: &impl serde::Serialize) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad json ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn diagonal_hyperbolic(dir: &Path) -> PathBuf {
    write(dir, "d.json", &json!({"n": 1, "rows": [[[2, 0, 0, 0], [0, 0, 0, 0]], [[0, 0, 0, 0], [0.5, 0, 0, 0]]]}))
}

#[test]
fn classify_diagonal() {
    let dir = TempDir::new().unwrap();
    let o = run(&["classify", s(&diagonal_hyperbolic(dir.path()))]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["type"], "hyperbolic");
    assert_eq!(v["real_trace"].as_array().unwrap().len(), 1);
    assert!((v["real_trace"][0].as_f64().unwrap() + 5.0).abs() < 1e-12);
}

#[test]
fn classify_reads_stdin() {
    let dir = TempDir::new().unwrap();
    let text = std::fs::read(diagonal_hyperbolic(dir.path())).unwrap();
    let mut child = bin()
        .args(["classify", "-"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    use std::io::Write;
    child.stdin.take().unwrap().write_all(&text).unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["type"], "hyperbolic");
}

#[test]
fn errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.json", &json!({"n": 1, "rows": [[[2, 0, 0, 0], [0, 0, 0, 0]], [[0, 0, 0, 0], [1, 0, 0, 0]]]}));
    let o = run(&["classify", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    assert_eq!(run(&["classify"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["classify", s(&dir.path().join("missing.json"))]).status.code(), Some(2));
    let o = run(&["--signature", "2", "classify", s(&diagonal_hyperbolic(dir.path()))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn congruence_exit_codes() {
    let dir = TempDir::new().unwrap();
    let mut r = task_rng(21, 0);
    let a = random_config(2, 5, 3, &mut r).unwrap();
    let g = random_bounded_member(2, &mut r).unwrap();
    let b = a.act(&g).unwrap();
    let c = perturb_config(&a, 0.05, &mut r).unwrap();
    let (pa, pb, pc) = (write(dir.path(), "a.json", &a), write(dir.path(), "b.json", &b), write(dir.path(), "c.json", &c));

    let o = run(&["congruent", s(&pa), s(&pb)]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["verdict"], "congruent");
    assert!(v["residual"].as_f64().unwrap() < 1e-7);
    assert_eq!(v["witness"]["rows"].as_array().unwrap().len(), 3);

    let o = run(&["congruent", s(&pa), s(&pc)]);
    assert_eq!(o.status.code(), Some(1));
    let v = stdout_json(&o);
    assert_eq!(v["verdict"], "not_congruent");
    assert_eq!(v["reason"], "gram_orbit");
}

#[test]
fn pair_exit_codes() {
    let dir = TempDir::new().unwrap();
    let mut r = task_rng(22, 0);
    let (_, a) = random_isometry(2, &mut r).unwrap();
    let (_, b) = random_isometry(2, &mut r).unwrap();
    let (_, img) = random_conjugation(&[&a, &b], &mut r).unwrap();
    let m = |x: &qhyper::isom::Isometry| x.matrix().clone();
    let files: Vec<PathBuf> =
        [m(&a), m(&b), m(&img[0]), m(&img[1])].iter().enumerate().map(|(k, x)| write(dir.path(), &format!("m{k}.json"), x)).collect();
    let o = run(&["conjugate-pair", s(&files[0]), s(&files[1]), s(&files[2]), s(&files[3])]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["verdict"], "conjugate");
    assert!(v["residual"].as_f64().unwrap() < 1e-7);

    let o = run(&["conjugate-pair", s(&files[0]), s(&files[1]), s(&files[3]), s(&files[2])]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout_json(&o)["verdict"], "not_conjugate");
}

#[test]
fn sampled_objects_round_trip() {
    let dir = TempDir::new().unwrap();
    let o = run(&["--seed", "5", "sample", "isometry", "--count", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    let batch = v.as_array().unwrap();
    assert_eq!(batch.len(), 3);
    for (k, item) in batch.iter().enumerate() {
        assert_eq!(item["index"], k as u64);
        assert_eq!(item["seed"], 5);
        let p = write(dir.path(), &format!("s{k}.json"), &item["object"]["matrix"]);
        let c = run(&["classify", s(&p)]);
        assert_eq!(c.status.code(), Some(0));
        assert_eq!(stdout_json(&c)["type"], item["object"]["spec"]["kind"]);
    }
    let o = run(&["--seed", "5", "sample", "config", "--m", "5", "--i", "3"]);
    let cfg = &stdout_json(&o)[0]["object"];
    let p = write(dir.path(), "cfg.json", cfg);
    let inv = run(&["invariants", s(&p)]);
    assert_eq!(inv.status.code(), Some(0));
    let prof = stdout_json(&inv);
    assert_eq!(prof["m"], 5);
    assert_eq!(prof["i"], 3);
}

#[test]
fn output_is_deterministic() {
    let a = run(&["--seed", "9", "sample", "pair", "--count", "4"]);
    let b = run(&["--seed", "9", "sample", "pair", "--count", "4"]);
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["--seed", "10", "sample", "pair", "--count", "4"]);
    assert_ne!(a.stdout, c.stdout);
    let one = bin().args(["--format", "csv", "verify", "--suite", "quick"]).env("QHYPER_THREADS", "1").output().unwrap();
    let many = bin().args(["--format", "csv", "verify", "--suite", "quick"]).env("QHYPER_THREADS", "4").output().unwrap();
    assert_eq!(one.stdout, many.stdout);
}

#[test]
fn csv_uses_component_columns() {
    let dir = TempDir::new().unwrap();
    let mut r = task_rng(23, 0);
    let p = write(dir.path(), "a.json", &random_config(2, 4, 4, &mut r).unwrap());
    let o = run(&["--format", "csv", "invariants", s(&p)]);
    assert_eq!(o.status.code(), Some(0));
    let mut rd = csv::Reader::from_reader(o.stdout.as_slice());
    let headers = rd.headers().unwrap().clone();
    for c in ["value.w", "value.x", "value.y", "value.z"] {
        assert!(headers.iter().any(|h| h == c), "missing {c} in {headers:?}");
    }
    assert!(rd.records().count() > 0);
    let o = run(&["--format", "csv", "classify", s(&diagonal_hyperbolic(dir.path()))]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("type,real_trace.1,"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn quick_suite_reports_every_criterion() {
    let o = run(&["--format", "csv", "verify", "--suite", "quick"]);
    let mut rd = csv::Reader::from_reader(o.stdout.as_slice());
    let ids: Vec<String> = rd.records().map(|r| r.unwrap()[0].to_string()).collect();
    assert_eq!(ids.len(), 23);
    assert!(ids.iter().any(|i| i == "11"));
    // the stated inequality fails, so the suite as a whole does too
    assert_eq!(o.status.code(), Some(1));
}
