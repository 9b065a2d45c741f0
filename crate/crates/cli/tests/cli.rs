use std::path::Path;
use std::process::{Command, Output};

fn qosc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qosc"))
        .args(args)
        .env_remove("QOSC_SEED")
        .output()
        .expect("qosc runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// `(branch, k, re, im)` for every data row of a CSV table.
fn rows(text: &str) -> Vec<(String, usize, f64, f64)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next(), Some("branch,k,x,re,im"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].to_string(),
                f[1].parse().unwrap_or(usize::MAX),
                f[3].parse().unwrap(),
                f[4].parse().unwrap(),
            )
        })
        .collect()
}

fn read(path: &Path) -> Vec<(String, usize, f64, f64)> {
    rows(&std::fs::read_to_string(path).unwrap())
}

#[test]
fn low_degree_polynomials_at_one() {
    for n in ["0", "1"] {
        let o = qosc(&[
            "eval", "poly", "--q", "0.5", "--mu", "1", "--n", n, "--x", "1",
        ]);
        assert!(o.status.success());
        let text = stdout(&o);
        assert!(text.starts_with("# qosc v1\n"));
        let r = rows(&text);
        assert_eq!(r.len(), 1);
        assert_eq!((r[0].0.as_str(), r[0].1), ("pos", 0));
        assert_eq!((r[0].2, r[0].3), (1.0, 0.0));
    }
}

#[test]
fn weight_column_is_positive() {
    let o = qosc(&["eval", "weight", "--q", "0.5", "--mu", "2", "--K", "40"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 82);
    assert!(r.iter().all(|row| row.2 > 0.0 && row.3 == 0.0));
}

#[test]
fn json_table_has_constant_width() {
    let o = qosc(&[
        "eval",
        "wavefunction",
        "--n",
        "2",
        "--K",
        "5",
        "--format",
        "json",
    ]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["schema"], "qosc v1");
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r.as_array().unwrap().len() == 5));
}

#[test]
fn full_suite_passes_at_defaults() {
    let o = qosc(&[
        "verify", "all", "--q", "0.5", "--mu", "1", "--nmax", "10", "--tol", "1e-8",
    ]);
    let text = stdout(&o);
    assert!(o.status.success(), "{text}");
    assert!(text.contains("all 50 checks passed"), "{text}");
}

#[test]
fn json_reports() {
    let o = qosc(&[
        "verify", "coherent", "--alpha", "0+0.2i", "--format", "json",
    ]);
    assert!(o.status.success());
    let reports: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let reports = reports.as_array().unwrap();
    assert!(!reports.is_empty());
    for r in reports {
        for key in ["check", "params", "residual", "tol", "pass", "ms"] {
            assert!(r.get(key).is_some(), "{key} missing in {r}");
        }
        assert_eq!(r["pass"], true);
        assert_eq!(r["params"]["alpha"], "0+0.2i");
    }
}

#[test]
fn failing_check_exits_with_one() {
    // a tolerance below rounding cannot be met
    let o = qosc(&["verify", "operators", "--tol", "1e-30"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn invalid_parameters_exit_with_two() {
    let o = qosc(&["verify", "operators", "--q", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("q must lie in (0,1)"));

    let o = qosc(&["eval", "poly", "--mu", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = qosc(&["eval", "banana"]);
    assert_eq!(o.status.code(), Some(2));
    let o = qosc(&["eval", "poly", "--t", "1+"]);
    assert_eq!(o.status.code(), Some(2));
    let o = qosc(&[
        "verify", "biortho", "--mu", "1", "--mu2", "2", "--t1", "1", "--t2", "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("constraint violated"));
}

#[test]
fn seed_comes_from_the_environment() {
    let run = |seed: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_qosc"))
            .args(["verify", "operators", "--format", "json"])
            .env("QOSC_SEED", seed)
            .output()
            .unwrap();
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        v.as_array()
            .unwrap()
            .iter()
            .find(|r| r["check"] == "adjointness")
            .unwrap()["params"]["seed"]
            .clone()
    };
    assert_eq!(run("7"), 7);
    let o = Command::new(env!("CARGO_BIN_EXE_qosc"))
        .args(["verify", "operators"])
        .env("QOSC_SEED", "seven")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn transform_maps_psi3_to_its_eigenvalue() {
    let dir = tempfile::tempdir().unwrap();
    let psi = dir.path().join("psi3.csv");
    let out = dir.path().join("out.csv");
    let o = qosc(&[
        "eval",
        "wavefunction",
        "--n",
        "3",
        "--output",
        psi.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let o = qosc(&[
        "transform",
        "--t",
        "0+1i",
        "--input",
        psi.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (a, b) = (read(&psi), read(&out));
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!((&x.0, x.1), (&y.0, y.1));
        // i³ = -i
        assert!(
            (y.2 - 0.0).abs() < 1e-8 && (y.3 + x.2).abs() < 1e-8,
            "{x:?} {y:?}"
        );
    }
}

#[test]
fn zeros_map_to_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("zero.csv");
    let mut text = String::from("# qosc v1\nbranch,k,re,im\n");
    for k in 0..=30 {
        text.push_str(&format!("pos,{k},0,0\nneg,{k},0,0\n"));
    }
    std::fs::write(&input, text).unwrap();
    let o = qosc(&[
        "transform",
        "--t",
        "0.3-0.4i",
        "--input",
        input.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 62);
    assert!(r.iter().all(|row| row.2 == 0.0 && row.3 == 0.0));
}

#[test]
fn four_transforms_restore_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let start = dir.path().join("f0.csv");
    let o = qosc(&[
        "eval",
        "coherent",
        "--alpha",
        "0.3+0.2i",
        "--output",
        start.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let mut current = start.clone();
    for step in 1..=4 {
        let next = dir.path().join(format!("f{step}.csv"));
        let o = qosc(&[
            "transform",
            "--input",
            current.to_str().unwrap(),
            "--output",
            next.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        current = next;
    }
    let (a, b) = (read(&start), read(&current));
    let worst = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x.2 - y.2).hypot(x.3 - y.3))
        .fold(0.0, f64::max);
    assert!(worst < 1e-7, "{worst}");
}

#[test]
fn schema_mismatch_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    std::fs::write(&input, "branch,k,re,im\npos,0,1,0\npos,1,1,0\n").unwrap();
    let o = qosc(&["transform", "--input", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing"));

    std::fs::write(&input, "branch,k,x,re,im\npos,0,2.0,1,0\nneg,0,-1,0,0\n").unwrap();
    let o = qosc(&["transform", "--input", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
