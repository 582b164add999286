use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn spreadlab() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_spreadlab"));
    c.env("SPREADLAB_THREADS", "2");
    c
}

fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(format!("{name}.schema.json"));
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn run_json(dir: &Path, name: &str, args: &[&str]) -> Value {
    let out = dir.join(format!("{name}.json"));
    let o = spreadlab().args(args).arg("--output").arg(&out).output().unwrap();
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema(name)).unwrap();
    let errors: Vec<String> = validator.iter_errors(&report).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{name} report violates its schema: {errors:?}");
    assert_eq!(report["subcommand"], name);
    report
}

fn write_rational(path: &Path, rows: usize, cols: usize, entries: &[&str]) {
    std::fs::write(path, format!("SPRD1\n{rows}\n{cols}\nrational\n{}\n", entries.join("\n"))).unwrap();
}

fn gen_fixture(dir: &Path) -> PathBuf {
    let path = dir.join("a.sprd");
    let o = spreadlab()
        .args(["gen", "--kind", "gaussian", "--n", "200", "--d", "5", "--seed", "1", "--matrix-out"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(o.status.success());
    path
}

#[test]
fn every_subcommand_matches_its_schema() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let fixture = gen_fixture(d);
    let f = fixture.to_str().unwrap();
    let spark_in = d.join("s.sprd");
    write_rational(&spark_in, 2, 3, &["1", "0", "1", "0", "1", "1"]);

    run_json(d, "gen", &["gen", "--kind", "planted", "--n", "128", "--d", "4", "--rho", "0.1", "--noise-sigma", "0.1"]);
    let r = run_json(d, "spread-check", &["spread-check", "--input", f, "--m", "2", "--delta", "0.5"]);
    assert!(r["result"]["verdict"]["status"].is_string());
    run_json(d, "certify", &["certify", "--input", f]);
    let r = run_json(d, "kl", &["kl", "--alpha", "0.1", "--lambda", "0.2", "--shift", "1,2"]);
    let kl = r["result"]["entries"][0]["kl"].as_f64().unwrap();
    assert!((kl - 2.113_652_477_485_714e-2).abs() < 1e-15);
    run_json(d, "fano", &["fano", "--construction", "logd-over-alpha2", "--n", "128", "--d", "64", "--alpha", "0.25", "--gamma", "2"]);
    run_json(d, "lowdeg", &["lowdeg", "--n", "1000", "--d", "50000", "--rho", "0.1", "--sigma", "0.1", "--degree", "12"]);
    run_json(d, "distinguish", &["distinguish", "--n", "500", "--d", "2", "--rho", "0.5", "--sigma", "0", "--trials", "10"]);
    run_json(d, "regress", &["regress", "--design", "gaussian", "--n", "300", "--d", "3", "--alpha", "0.25", "--seeds", "4"]);
    let r = run_json(d, "spark", &["spark", "--input", spark_in.to_str().unwrap(), "--m", "2"]);
    assert_eq!(r["result"]["spark"], 3);
}

fn exit(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn invalid_input_exits_2_without_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.sprd");
    std::fs::write(&bad, b"NOTSPRD\x00\x00").unwrap();
    let out = dir.path().join("r.json");
    let o = spreadlab().args(["certify", "--input"]).arg(&bad).arg("--output").arg(&out).output().unwrap();
    assert_eq!(exit(&o), 2);
    assert!(!out.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1, "no temporary files left behind");

    let o = spreadlab().args(["kl", "--alpha", "0.1", "--lambda", "1.5", "--shift", "1"]).output().unwrap();
    assert_eq!(exit(&o), 2);
    let o = spreadlab().args(["fano", "--construction", "nope", "--n", "8", "--d", "2", "--alpha", "0.1"]).output().unwrap();
    assert_eq!(exit(&o), 2);
    let o = spreadlab().args(["no-such-command"]).output().unwrap();
    assert_eq!(exit(&o), 2);
    let o = spreadlab().env("SPREADLAB_THREADS", "zero").args(["kl", "--alpha", "0.1", "--lambda", "0.2", "--shift", "1"]).output().unwrap();
    assert_eq!(exit(&o), 2);
}

#[test]
fn numeric_failure_exits_3() {
    // Three equal columns span a one-dimensional space.
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("rank1.sprd");
    write_rational(&input, 4, 3, &["1", "1", "1", "2", "2", "2", "3", "3", "3", "4", "4", "4"]);
    let o = spreadlab().args(["spark", "--input"]).arg(&input).output().unwrap();
    assert_eq!(exit(&o), 0, "a rank-deficient spark instance is fine");

    // An all-zero design has no spectrum to certify.
    let sprd = dir.path().join("zero.sprd");
    let o = spreadlab()
        .args(["gen", "--kind", "gaussian", "--n", "4", "--d", "1", "--matrix-out"])
        .arg(&sprd)
        .output()
        .unwrap();
    assert!(o.status.success());
    let mut bytes = std::fs::read(&sprd).unwrap();
    let len = bytes.len();
    bytes[len - 32..].fill(0);
    std::fs::write(&sprd, &bytes).unwrap();
    let o = spreadlab().args(["certify", "--input"]).arg(&sprd).output().unwrap();
    assert_eq!(exit(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn csv_output_has_table_or_key_value_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("kl.csv");
    let o = spreadlab()
        .args(["kl", "--alpha", "0.1", "--lambda", "0.2", "--shift", "1,2,3", "--format", "csv", "--output"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("shift,"));
    assert_eq!(lines.count(), 3);

    let out = dir.path().join("fano.csv");
    let o = spreadlab()
        .args(["fano", "--construction", "logd-over-alpha2", "--n", "128", "--d", "64", "--alpha", "0.25", "--gamma", "1", "--format", "csv", "--output"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("key,value\n"));
    assert!(text.contains("\nsubcommand,fano\n"));
}

#[test]
fn same_seed_same_bytes_different_seed_different_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, name: &str| {
        let cwd = dir.path().join(name);
        std::fs::create_dir(&cwd).unwrap();
        let o = spreadlab()
            .current_dir(&cwd)
            .args(["regress", "--design", "gaussian", "--n", "200", "--d", "3", "--alpha", "0.25", "--seeds", "3", "--seed", seed])
            .args(["--output", "report.json"])
            .output()
            .unwrap();
        assert!(o.status.success());
        std::fs::read_to_string(cwd.join("report.json")).unwrap()
    };
    assert_eq!(run("4", "a"), run("4", "b"));
    assert_ne!(run("4", "c"), run("5", "d"));
}
