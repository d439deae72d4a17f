use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tkahler(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tkahler")).args(args).output().expect("run tkahler")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}\n{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

#[test]
fn roots_of_two_sphere() {
    let out = tkahler(&["roots", "--space", "sphere:2"]);
    assert_eq!(code(&out), 0);
    let r = &report(&out)["roots"];
    assert_eq!(r["rank"], 1);
    assert_eq!(r["roots"].as_array().unwrap().len(), 1);
    assert_eq!(r["roots"][0]["multiplicity"], 1);
    assert_eq!(r["dim_h"], 0);
}

#[test]
fn ricci_scan_on_eguchi_hanson() {
    let out = tkahler(&["ricci-scan", "--space", "sphere:2", "--C", "1", "--C1", "0", "--cZ", "0"]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    assert_eq!(r["ricci_flat"], true);
    assert!((r["const"].as_f64().unwrap() - 4.0).abs() < 1e-10);
}

#[test]
fn ricci_scan_is_byte_identical() {
    let args = ["ricci-scan", "--space", "sphere:2", "--C", "2", "--cZ", "0.5", "--C1", "1"];
    let a = tkahler(&args);
    let b = tkahler(&args);
    let one = Command::new(env!("CARGO_BIN_EXE_tkahler")).args(args).env("TKAHLER_THREADS", "1").output().unwrap();
    assert_eq!(code(&a), 0);
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, one.stdout);
}

#[test]
fn json_floats_have_seventeen_digits() {
    let out = tkahler(&["ricci-scan", "--cZ", "1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut floats = 0;
    for tok in text.split(|c: char| c.is_whitespace() || c == ',' || c == '[' || c == ']') {
        if tok.contains('e') && tok.parse::<f64>().is_ok() {
            let mantissa = tok.trim_start_matches('-').split('e').next().unwrap();
            assert_eq!(mantissa.len(), 18, "{tok}");
            floats += 1;
        }
    }
    assert!(floats > 5);
}

#[test]
fn punctured_family_does_not_extend() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("family.csv");
    let out = tkahler(&["s2-family", "--C1", "0.5", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(report(&out)["extends_to_zero"], false);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "x,f',f'',w11,|w12|,w22,detw,g_xx,g_XX,g_YY,g_ZZ,g_XZ,g_xY,f_U,h");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 64);
    for row in rows {
        let det: f64 = row.split(',').nth(6).unwrap().parse().unwrap();
        assert!((det - 4.0).abs() < 1e-10);
    }
    let out = tkahler(&["s2-family", "--cZ", "1"]);
    assert_eq!(report(&out)["extends_to_zero"], true);
}

#[test]
fn config_file_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let json_out = dir.path().join("out.json");
    fs::write(
        &cfg,
        r#"{"space": "sphere:2", "ansatz": {"s2": {"C": 2, "C1": 0, "c_Z": 1}},
            "grid": {"min": 0.1, "max": 2, "count": 9, "spacing": "linear"}}"#,
    )
    .unwrap();
    let out = tkahler(&["ricci-scan", "--config", cfg.to_str().unwrap(), "--json", json_out.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&fs::read_to_string(&json_out).unwrap()).unwrap();
    assert!((r["const"].as_f64().unwrap() - 8.0).abs() < 1e-10);
    assert_eq!(r["grid"]["count"], 9);

    let out = tkahler(&["ricci-scan", "--config", cfg.to_str().unwrap(), "--C", "3"]);
    assert!((report(&out)["const"].as_f64().unwrap() - 12.0).abs() < 1e-10);
}

#[test]
fn other_sphere2_pipelines_pass() {
    let out = tkahler(&["eh-compare", "--ell", "2"]);
    assert_eq!(code(&out), 0);
    assert!(report(&out)["max_pullback_error"].as_f64().unwrap() < 1e-10);

    let out = tkahler(&["completeness", "--cZ", "1"]);
    assert_eq!(code(&out), 0);
    assert_eq!(report(&out)["strictly_increasing"], true);

    let out = tkahler(&["curvature-verify", "--cZ", "-1", "--points", "3"]);
    assert_eq!(code(&out), 0);
    assert!(report(&out)["max_ricci_entry"].as_f64().unwrap() < 1e-4);
}

#[test]
fn failed_checks_exit_one() {
    // The quadratic default potential is Kähler but not Ricci-flat on S^4.
    let out = tkahler(&["ricci-scan", "--space", "sphere:4"]);
    assert_eq!(code(&out), 1);
    let r = report(&out);
    assert_eq!(r["kahler_on_grid"], true);
    assert_eq!(r["ricci_flat"], false);
    // f'^2 < 0 near the zero section when c_Y != 0.
    assert_eq!(code(&tkahler(&["kahler-check", "--cY", "1"])), 1);
}

#[test]
fn config_errors_exit_two() {
    assert_eq!(code(&tkahler(&["s2-family", "--space", "sphere:3"])), 2);
    assert_eq!(code(&tkahler(&["ricci-scan", "--space", "sphere:3", "--C", "1"])), 2);
    assert_eq!(code(&tkahler(&["ricci-scan", "--grid-min", "-1"])), 2);
    assert_eq!(code(&tkahler(&["ricci-scan", "--C", "0"])), 2);
    assert_eq!(code(&tkahler(&["roots", "--space", "klein:2"])), 2);
    assert_eq!(code(&tkahler(&["eh-compare", "--cZ", "1"])), 2);
    assert_eq!(code(&tkahler(&["nonsense"])), 2);
    let missing = Path::new(env!("CARGO_MANIFEST_DIR")).join("no-such-config.json");
    assert_eq!(code(&tkahler(&["roots", "--config", missing.to_str().unwrap()])), 2);
    let out = Command::new(env!("CARGO_BIN_EXE_tkahler"))
        .args(["roots"])
        .env("TKAHLER_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn numerical_errors_exit_three() {
    // Sample points beyond the injectivity radius of the exponential chart.
    let out = tkahler(&["curvature-verify", "--u-max", "3", "--points", "2"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("chart"));
}

#[test]
fn custom_algebra_file() {
    // so(3) with sigma = diag(1, -1, -1): the two-sphere again.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("so3.json");
    // [e_i, e_j] in the X, Y, Z basis: [X,Y] = -Z, [X,Z] = Y, [Y,Z] = -X.
    let mut c = vec![vec![vec![0.0; 3]; 3]; 3];
    let mut set = |i: usize, j: usize, k: usize, v: f64| {
        c[i][j][k] = v;
        c[j][i][k] = -v;
    };
    set(0, 1, 2, -1.0);
    set(0, 2, 1, 1.0);
    set(1, 2, 0, -1.0);
    let file = serde_json::json!({
        "structure_constants": c,
        "inner_product": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        "sigma": [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]],
    });
    fs::write(&path, file.to_string()).unwrap();
    let space = format!("custom:{}", path.display());
    let out = tkahler(&["roots", "--space", &space]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = &report(&out)["roots"];
    assert_eq!(r["rank"], 1);
    assert_eq!(r["roots"][0]["multiplicity"], 1);
}
