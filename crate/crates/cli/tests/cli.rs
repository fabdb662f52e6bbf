use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dfi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dfi")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// y = 2a + b² + noise-free wiggle, with a third feature correlated with a.
fn write_csv(path: &Path, n: usize) {
    let mut text = String::from("a,b,c,y\n");
    for i in 0..n {
        let t = i as f64;
        let a = (t * 0.37).sin() * 1.5;
        let b = (t * 0.11).cos();
        let c = 0.6 * a + 0.5 * (t * 0.73).sin();
        let y = 2.0 * a + b * b + 0.3 * (t * 1.7).cos();
        text.push_str(&format!("{a},{b},{c},{y}\n"));
    }
    std::fs::write(path, text).unwrap();
}

fn analyze_args<'a>(input: &'a str, output: &'a str) -> Vec<&'a str> {
    vec![
        "analyze", "--input", input, "--target", "y", "--seed", "42", "--output", output, "--trees", "20", "--m", "5",
    ]
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn analyze_writes_a_consistent_report() {
    let dir = tempfile::tempdir().unwrap();
    let (input, output) = (dir.path().join("d.csv"), dir.path().join("r.json"));
    write_csv(&input, 200);
    let out = dfi(&analyze_args(s(&input), s(&output)));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config: {"));
    let rep = dfi::read_report(&output).unwrap();
    assert_eq!(rep.d(), 3);
    assert!(rep.sigma_decomposition_gap() < 1e-10);
    let sum: f64 = rep.attributed.iter().map(|e| e.estimate).sum();
    assert!((sum - rep.totals.attributed).abs() < 1e-12);
    assert!(rep.standardization.is_some());
    let v = read_json(&output);
    for key in ["config", "latent", "attributed", "groups", "totals", "sigma_diag"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn groups_covering_all_features_sum_to_total() {
    let dir = tempfile::tempdir().unwrap();
    let (input, output, groups) = (dir.path().join("d.csv"), dir.path().join("r.json"), dir.path().join("g.json"));
    write_csv(&input, 200);
    std::fs::write(&groups, r#"{"first": ["a", "c"], "second": ["b"]}"#).unwrap();
    let mut args = analyze_args(s(&input), s(&output));
    args.extend(["--groups", s(&groups)]);
    let out = dfi(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = dfi::read_report(&output).unwrap();
    let g = rep.groups.unwrap();
    assert_eq!(g[0].name, "first");
    assert!((g[0].estimate + g[1].estimate - rep.totals.attributed).abs() < 1e-10);
}

#[test]
fn baselines_are_embedded_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let (input, output) = (dir.path().join("d.csv"), dir.path().join("r.json"));
    write_csv(&input, 120);
    let mut args = analyze_args(s(&input), s(&output));
    args.extend(["--with-loco", "--with-cpi", "--verbose"]);
    let out = dfi(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&output);
    let b = v["baselines"].as_array().unwrap();
    assert_eq!(b[0]["method"], "loco");
    assert_eq!(b[1]["method"], "cpi");
    assert_eq!(v["transports"].as_array().unwrap().len(), 2);
}

#[test]
fn duplicate_columns_fail_with_singularity() {
    let dir = tempfile::tempdir().unwrap();
    let (input, output) = (dir.path().join("d.csv"), dir.path().join("r.json"));
    let mut text = String::from("u,v,w,y\n");
    for i in 0..60 {
        let t = i as f64;
        text.push_str(&format!("{},{},{},{}\n", t.sin(), t.sin(), (t * 0.3).cos(), t.sin() + 0.1 * t.cos()));
    }
    std::fs::write(&input, text).unwrap();
    let out = dfi(&analyze_args(s(&input), s(&output)));
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("singular") && err.contains("u") && err.contains("v"), "{err}");
    assert!(!output.exists());
}

#[test]
fn output_is_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("d.csv");
    write_csv(&input, 150);
    let (o1, o2) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let mut a1 = vec!["--threads", "1"];
    a1.extend(analyze_args(s(&input), s(&o1)));
    let mut a2 = vec!["--threads", "3"];
    a2.extend(analyze_args(s(&input), s(&o2)));
    assert!(dfi(&a1).status.success());
    assert!(dfi(&a2).status.success());
    assert_eq!(std::fs::read(&o1).unwrap(), std::fs::read(&o2).unwrap());
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("s");
    let o = s(&out_dir);
    for args in [
        vec!["simulate", "--model", "m9", "--n", "100", "--reps", "1", "--seed", "1", "--out", o],
        vec!["simulate", "--model", "m1", "--rho", "1.5", "--n", "100", "--reps", "1", "--seed", "1", "--out", o],
        vec!["simulate", "--model", "m4", "--rho", "0.5", "--n", "100", "--reps", "1", "--seed", "1", "--out", o],
        vec!["analyze", "--input", "x.csv", "--target", "y", "--seed", "1", "--output", "r.json", "--bogus"],
        vec!["analyze", "--input", "x.csv", "--target", "y", "--output", "r.json"],
        vec!["analyze", "--input", "x.csv", "--target", "y", "--seed", "1", "--output", "r.json", "--folds", "1"],
        vec!["simulate", "--model", "m1", "--n", "100", "--reps", "1", "--seed", "1", "--alpha", "0.6", "--out", o],
    ] {
        let out = dfi(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn wide_alpha_runs_without_inflation() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("s");
    let args = ["simulate", "--model", "m1", "--n", "100", "--reps", "2", "--trees", "10", "--seed", "1", "--alpha", "0.6", "--no-inflate", "--out", s(&out_dir)];
    let out = dfi(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_input_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dfi(&analyze_args(s(&dir.path().join("none.csv")), s(&dir.path().join("r.json"))));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_writes_replicates_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("s");
    let out = dfi(&[
        "simulate", "--model", "m1", "--rho", "0.8", "--n", "200", "--reps", "2", "--seed", "1", "--trees", "20", "--m", "5", "--out",
        s(&out_dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("replicates.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "replicate,feature,estimate,se,ci_lo,ci_hi,covered");
    assert_eq!(lines.count(), 20);
    let summary = read_json(&out_dir.join("summary.json"));
    assert_eq!(summary["features"].as_array().unwrap().len(), 10);
}

#[test]
fn simulate_m3_oracle_recovers_population_values() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("s");
    let out = dfi(&[
        "simulate", "--model", "m3", "--rho", "0.2", "--oracle", "--n", "2000", "--reps", "20", "--seed", "3", "--out",
        s(&out_dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_json(&out_dir.join("summary.json"));
    // closed forms: 9/16(ρ²+2), (14ρ²+13)/16, (ρ²+2)/4
    let want = [1.1475, 1.1475, 0.8475, 0.51, 0.51];
    for (f, w) in summary["features"].as_array().unwrap().iter().zip(want) {
        let m = f["mean"].as_f64().unwrap();
        assert!((m - w).abs() < 0.15, "{}: {m} vs {w}", f["name"]);
    }
}

#[test]
fn report_renders_svg_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (input, output) = (dir.path().join("d.csv"), dir.path().join("r.json"));
    write_csv(&input, 200);
    assert!(dfi(&analyze_args(s(&input), s(&output))).status.success());

    // force one negative estimate to check the display rule
    let mut rep = dfi::read_report(&output).unwrap();
    rep.attributed[2].estimate = -0.25;
    dfi::write_report(&rep, &output).unwrap();

    let svg_path = dir.path().join("r.svg");
    let out = dfi(&["report", "--input", s(&output), "--format", "svg", "--out", s(&svg_path)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert_eq!(svg.matches(r#"<rect class="bar""#).count(), 3);
    assert_eq!(svg.matches(r#"<line class="errbar""#).count(), 3);
    assert!(svg.contains("total"));
    let neg = svg.lines().find(|l| l.contains(r#"class="bar""#) && l.contains("<title>c:")).unwrap();
    assert!(neg.contains(r#"height="0.00""#), "{neg}");

    let csv_path = dir.path().join("r.csv");
    let out = dfi(&["report", "--input", s(&output), "--format", "csv", "--out", s(&csv_path)]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "name,estimate,se,ci_lo,ci_hi,z,p");
    assert!(csv.contains("c,-0.25,"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn report_accepts_study_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("s");
    let out = dfi(&[
        "simulate", "--model", "m1", "--oracle", "--n", "100", "--reps", "3", "--seed", "2", "--out", s(&out_dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg_path = dir.path().join("s.svg");
    let out = dfi(&["report", "--input", s(&out_dir.join("summary.json")), "--out", s(&svg_path)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert_eq!(svg.matches(r#"<rect class="bar""#).count(), 10);
}

#[test]
fn malformed_report_input_fails() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"latent\": [1, 2").unwrap();
    let out = dfi(&["report", "--input", s(&bad), "--out", s(&dir.path().join("x.svg"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("byte"));
}
