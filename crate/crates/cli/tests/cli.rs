use std::process::Command;

fn choquard(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_choquard"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &std::process::Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn hls_constants_suite() {
    let out = choquard(&["verify", "hls-constants", "--dim", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["suite"], "hls-constants");
    assert_eq!(v["report_version"], 1);
    let rows = v["records"].as_array().unwrap();
    let first = rows[0]["normalized"].as_f64().unwrap();
    assert!((first - 1.0).abs() < 1e-3);
}

#[test]
fn invalid_arguments_exit_with_usage() {
    let out = choquard(&["groundstate", "--alpha", "1.5", "--dim", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Usage:"), "{err}");
    for args in [
        &["groundstate"][..],
        &["groundstate", "--alpha", "0.5", "--points", "1000"],
        &["sweep", "--mode", "sideways"],
        &["sweep", "--alphas", "0.1,0.2"],
        &["verify", "nonsense"],
        &["constants", "--alpha", "0.5", "--alphas", "0.1,0.2"],
        &["groundstate", "--alpha", "0.5", "--format", "xml"],
    ] {
        let out = choquard(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn solver_failure_exits_one() {
    let out = choquard(&[
        "groundstate", "--alpha", "0.5", "--points", "256", "--box", "15", "--max-iters", "2",
        "--tol", "1e-14",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn groundstate_is_deterministic() {
    let args = ["groundstate", "--alpha", "0.5", "--points", "256", "--box", "15"];
    let a = choquard(&args);
    let b = choquard(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = stdout_json(&a);
    assert_eq!(v["solve"]["termination"], "converged");
    assert!(v["solve"]["residual_h1"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn sweep_writes_report_and_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = choquard(&[
        "sweep", "--mode", "alpha0", "--alphas", "0.4,0.2", "--box", "20", "--points", "512",
        "--format", "csv", "--out", out_dir,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["mode"], "alpha0");
    assert_eq!(report["records"].as_array().unwrap().len(), 2);
    assert!(dir.path().join("report.csv").exists());
    for i in 0..2 {
        for kind in ["groundstate", "nodal"] {
            let path = dir.path().join(format!("alpha_{i:02}_{kind}.chqf"));
            let field: choquard::Field = choquard::io::load(&path).unwrap();
            let points = report["records"][i]["box"]["points_per_axis"].as_u64().unwrap();
            assert_eq!(field.grid().points_per_axis() as u64, points);
        }
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("alpha,c_gst,c_nod"));
}

#[test]
fn reference_and_constants() {
    let out = choquard(&["reference", "--p", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    // κ_{3,2} = √(2/5) in one dimension
    let k2 = v["kappa_p_2"].as_f64().unwrap();
    assert!((k2 - 0.4f64.sqrt()).abs() < 1e-9, "{k2}");
    let out = choquard(&["constants", "--alpha", "0.5", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "alpha,hls_normalized,hls_unnormalized,normalization_ratio,riesz_constant"
    );
    let cells: Vec<f64> = lines.next().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    let direct = gamma_quarter_ratio();
    assert!((cells[2] - direct).abs() < 1e-9 * direct);
}

/// Γ(1/4)/Γ(3/4) from tabulated values.
fn gamma_quarter_ratio() -> f64 {
    3.625_609_908_221_908 / 1.225_416_702_465_178
}
