//! End-to-end checks of the command-line interface: output formats, exit
//! codes, and byte-level determinism.

use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cosdyn"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn constants_match_known_values() {
    let out = run(&["constants", "--a", "0.5", "--b", "0.5"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let t_ab = doc["t_ab"].as_f64().unwrap();
    assert!((t_ab - 4.7726).abs() < 1e-3, "t_ab = {t_ab}");
    assert!((doc["r_escape"].as_f64().unwrap() - 4.343).abs() < 1e-2);
    assert_eq!(doc["v1"][0].as_f64().unwrap(), 1.0);
}

#[test]
fn constants_with_address() {
    let out = run(&[
        "constants",
        "--a",
        "0.5",
        "--b",
        "0.5",
        "--addr",
        r#"{"kind":"fast","x":1.0,"scale":1.0,"sides":["R"]}"#,
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["t_s"].as_f64().unwrap(), 1.0);
    assert!(doc["is_fast"].as_bool().unwrap());
    assert!(doc["t_s_threshold"].as_f64().unwrap() >= doc["t_ab"].as_f64().unwrap());
}

#[test]
fn ray_csv_shape_and_realness() {
    let out = run(&[
        "ray",
        "--a",
        "0.5",
        "--b",
        "0.5",
        "--addr",
        r#"{"kind":"periodic","pre":[],"per":[[0,"R"]]}"#,
        "--t-lo",
        "auto",
        "--t-hi",
        "15",
        "-n",
        "64",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# {"), "config line");
    assert_eq!(
        lines.next().unwrap(),
        "t,re,im,depth,err_est,via_pullback"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 64);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 6);
        let im: f64 = cols[2].parse().unwrap();
        assert!(im.abs() < 1e-9, "real ray row: {row}");
        assert_eq!(cols[5], "false");
    }
}

#[test]
fn ray_extension_adds_pullback_rows() {
    let out = run(&[
        "ray",
        "--a",
        "0.5",
        "--b",
        "0.5",
        "--addr",
        r#"{"kind":"periodic","pre":[],"per":[[0,"R"]]}"#,
        "--t-hi",
        "8",
        "-n",
        "8",
        "--extend-to",
        "1.0",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let pullback = text
        .lines()
        .filter(|l| l.ends_with(",true"))
        .count();
    assert!(pullback > 0, "expected pullback rows:\n{text}");
    // rows stay sorted by potential
    let ts: Vec<f64> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(ts.windows(2).all(|w| w[1] > w[0]));
    assert!(ts[0] <= 1.0 + 1e-9);
}

#[test]
fn byte_identical_reruns() {
    let args = [
        "ray",
        "--a",
        "0.5",
        "--b",
        "0.5",
        "--addr",
        r#"{"kind":"periodic","pre":[],"per":[[1,"R"],[0,"L"]]}"#,
        "--t-hi",
        "12",
        "-n",
        "32",
    ];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout, "ray output must be deterministic");

    let fr = [
        "fraction",
        "--a",
        "0.5",
        "--b",
        "0.5",
        "--window",
        "10,16.28,0,6.28",
        "--samples",
        "4000",
        "--k-budget",
        "16",
        "--seed",
        "9",
    ];
    let f1 = run(&fr);
    let f2 = run(&fr);
    assert!(f1.status.success());
    assert_eq!(f1.stdout, f2.stdout, "seeded Monte Carlo is deterministic");
}

#[test]
fn classify_batch_csv() {
    let dir = std::env::temp_dir().join("cosdyn-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let input = dir.join("points.csv");
    std::fs::write(&input, "re,im\n10.0,0.0\n0.0,0.0\n").unwrap();
    let out = run(&[
        "classify",
        "--a",
        "0.5",
        "--b",
        "0.5",
        "--points",
        input.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].contains("on_ray"), "{}", rows[0]);
    assert!(rows[0].contains("0R"), "{}", rows[0]);
    assert!(rows[1].contains("boundary_ambiguous"), "{}", rows[1]);
}

#[test]
fn render_pgm_header_and_uniform_zero_budget() {
    let out = run(&[
        "render",
        "--a",
        "0.5",
        "--b",
        "0.5",
        "--window",
        "-10,10,-10,10",
        "--size",
        "32x16",
        "--budget",
        "0",
    ]);
    assert!(out.status.success());
    assert!(out.stdout.starts_with(b"P5\n"));
    let payload = &out.stdout[out.stdout.len() - 32 * 16..];
    assert!(payload.iter().all(|&b| b == 0), "uniform raster at budget 0");
}

#[test]
fn dimension_json_report() {
    let out = run(&[
        "dimension",
        "--a",
        "0.5",
        "--b",
        "0.5",
        "--p",
        "1",
        "--xi",
        "20",
        "--window",
        "20,23,-0.001,0.001",
        "--grid",
        "600x41",
        "--scale-steps",
        "6",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["target"].as_f64().unwrap(), 2.0);
    assert!(doc["slope"].as_f64().unwrap() > 0.5);
    assert_eq!(
        doc["counts"].as_array().unwrap().len(),
        doc["scales"].as_array().unwrap().len()
    );
    assert!(doc["config"]["command"].as_str().unwrap() == "dimension");
}

#[test]
fn dimension_default_window() {
    // the stock window resolves the wide parabola (p = 1); a modest grid
    // keeps the test quick
    let out = run(&[
        "dimension",
        "--a",
        "0.5",
        "--b",
        "0.5",
        "--p",
        "1",
        "--xi",
        "20",
        "--grid",
        "512x257",
        "--scale-steps",
        "5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let slope = doc["slope"].as_f64().unwrap();
    assert!(slope > 0.5 && slope <= 2.2, "slope {slope}");
    assert_eq!(doc["config"]["window"][0].as_f64().unwrap(), 20.0);
}

#[test]
fn exit_codes() {
    // usage error: missing required flag
    let out = run(&["ray", "--a", "0.5", "--b", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("\"kind\":\"usage\""), "{err}");

    // numeric failure: zero parameter
    let out = run(&["constants", "--a", "0", "--b", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("\"kind\":\"numeric\""), "{err}");

    // numeric failure: sampling below the tail threshold
    let out = run(&[
        "ray",
        "--a",
        "0.5",
        "--b",
        "0.5",
        "--addr",
        r#"{"kind":"periodic","pre":[],"per":[[0,"R"]]}"#,
        "--t-lo",
        "1.0",
        "--t-hi",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
