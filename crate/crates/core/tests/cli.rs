use std::io::Write;
use std::process::{Command, Output, Stdio};

use maxnorm::specfun::std_normal_pdf;

fn maxnorm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxnorm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn grid_bivariate_default_lattice() {
    let o = maxnorm(&["grid", "-p", "2", "--range", "-3:3", "--steps", "61"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines = data_lines(&text);
    assert_eq!(lines[0], "x1,x2,density");
    assert_eq!(lines.len() - 1, 3721);
    assert!(lines.contains(&"0.0,0.0,0.25"));
}

#[test]
fn grid_univariate_is_normal_pdf() {
    let o = maxnorm(&["grid", "-p", "1", "--range", "-1:1", "--steps", "3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let values: Vec<f64> = doc["data"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["density"].as_f64().unwrap())
        .collect();
    assert_eq!(
        values,
        vec![std_normal_pdf(-1.0), std_normal_pdf(0.0), std_normal_pdf(1.0)]
    );
    assert_eq!(doc["meta"]["dim"], 1);
}

#[test]
fn grid_trivariate_center_is_inf() {
    let o = maxnorm(&["grid", "-p", "3", "--range", "-1:1", "--steps", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().any(|l| l == "0.0,0.0,0.0,inf"));
}

#[test]
fn grid_writes_to_file() {
    let dir = std::env::temp_dir().join(format!("maxnorm-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("grid.csv");
    let o = maxnorm(&["grid", "-p", "2", "--steps", "5", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(data_lines(&written).len(), 26);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sample_header_and_determinism() {
    let a = maxnorm(&["sample", "-p", "2", "-n", "5", "--seed", "7"]);
    let b = maxnorm(&["sample", "-p", "2", "-n", "5", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    for key in ["# seed=7", "# p=2", "# n=5", "# generator_id="] {
        assert!(text.lines().any(|l| l.starts_with(key)), "missing {key}");
    }
    assert_eq!(data_lines(&text).len(), 6);
}

#[test]
fn sample_rejects_empty() {
    assert_eq!(maxnorm(&["sample", "-p", "1", "-n", "0"]).status.code(), Some(2));
}

#[test]
fn sample_piped_into_verify() {
    let sample = maxnorm(&["sample", "-p", "2", "-n", "200000", "--seed", "1"]);
    assert_eq!(sample.status.code(), Some(0));
    let mut child = Command::new(env!("CARGO_BIN_EXE_maxnorm"))
        .args(["verify", "--suites", "sampler", "--samples", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(&sample.stdout).unwrap();
    let o = child.wait_with_output().unwrap();
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(o.status.code(), Some(0), "{doc}");
    assert_eq!(doc["meta"]["seed"], 1);
    assert_eq!(doc["meta"]["sample_size"], 200000);
    assert_eq!(doc["summary"]["failures"], 0);
}

#[test]
fn verify_single_suites() {
    let o = maxnorm(&["verify", "--suites", "mixture", "--tol", "1e-8"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let grid_checks = doc["data"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["name"].as_str().unwrap().starts_with("mixture("))
        .count();
    assert_eq!(grid_checks, 441);

    let o = maxnorm(&["verify", "--suites", "posterior"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for check in doc["data"].as_array().unwrap() {
        if check["name"].as_str().unwrap().starts_with("normalization") {
            assert!(check["abs_error"].as_f64().unwrap() <= 1e-6);
        }
    }

    let o = maxnorm(&["verify", "--suites", "laplace"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["summary"]["checks"], 5);
}

#[test]
fn verify_reports_failure_with_exit_1() {
    // A sample file whose columns are uniform fails the KS check.
    let mut csv = String::from("# seed=0\n# generator_id=test\nx1,x2\n");
    for i in 0..2000 {
        let u = -1.0 + 2.0 * (f64::from(i) + 0.5) / 2000.0;
        csv.push_str(&format!("{u},{u}\n"));
    }
    let dir = std::env::temp_dir().join(format!("maxnorm-verify-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("uniform.csv");
    std::fs::write(&path, csv).unwrap();
    let o = maxnorm(&["verify", "--suites", "sampler", "--samples", path.to_str().unwrap()]);
    std::fs::remove_dir_all(&dir).unwrap();
    assert_eq!(o.status.code(), Some(1));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(doc["summary"]["failures"].as_u64().unwrap() > 0);
}

#[test]
fn posterior_and_bayes_factor() {
    let o = maxnorm(&["posterior", "0", "0", "--grid-size", "64"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines = data_lines(&text);
    assert_eq!(lines[0], "rho,density");
    assert_eq!(lines.len(), 65);
    for line in &lines[1..] {
        let (r, v) = line.split_once(',').unwrap();
        let (r, v): (f64, f64) = (r.parse().unwrap(), v.parse().unwrap());
        assert!((v - 1.0 / (std::f64::consts::PI * (1.0 - r * r).sqrt())).abs() <= 1e-10);
    }
    assert!(text.lines().any(|l| l.starts_with("# normalization_residual=")));

    let o = maxnorm(&["posterior", "-1.5", "2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["meta"]["x1"], -1.5);
    assert!(doc["meta"]["normalization_residual"].as_f64().unwrap().abs() <= 1e-8);

    assert_eq!(
        maxnorm(&["posterior", "0", "0", "--grid-size", "8"]).status.code(),
        Some(2)
    );

    let o = maxnorm(&["bf", "0", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "0.636619772367581\n");
}

#[test]
fn argument_errors() {
    assert_eq!(maxnorm(&["grid", "-p", "0"]).status.code(), Some(2));
    assert_eq!(maxnorm(&["grid", "-p", "2", "--range", "1:1"]).status.code(), Some(2));
    assert_eq!(maxnorm(&["verify", "--tol", "1e-13"]).status.code(), Some(2));
    assert_eq!(maxnorm(&["bogus"]).status.code(), Some(2));
    assert_eq!(maxnorm(&["--help"]).status.code(), Some(0));
}
