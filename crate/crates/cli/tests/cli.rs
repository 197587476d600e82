//! End-to-end tests of the `birkhoff` binary: exit codes, output schemas,
//! and determinism contracts.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_birkhoff"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn sphere_config(out: &str, extra: &str) -> String {
    format!(
        r#"{{
  "surface": {{"family": "sphere", "radius": 1.0, "dimension": 3}},
  "sweep": {{"count": 10, "seed": 3}},
  "audit": {{"samples": 512, "epsilon_samples": 256}}{extra},
  "output": {{"directory": "{out}"}}
}}"#
    )
}

#[test]
fn audit_passes_on_ellipsoid_with_epsilon() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "e.json",
        r#"{
  "surface": {"family": "ellipsoid", "semiaxes": [2, 1, 1]},
  "audit": {"samples": 512, "epsilon_samples": 256},
  "output": {"directory": "out"}
}"#,
    );
    let out = run_in(tmp.path(), &["audit", "--config", &cfg]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/audit.json")).unwrap())
            .unwrap();
    assert_eq!(report["format_version"], 1);
    assert_eq!(report["report"]["passed"], true);
    let eps = report["report"]["epsilon_estimate"].as_f64().unwrap();
    assert!(eps > 0.0);
    // The resolved config is embedded.
    assert_eq!(report["config"]["surface"]["family"], "ellipsoid");
}

#[test]
fn audit_fails_with_witness_on_asymmetric_surface() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{
  "surface": {"expression": "x0^3 + x0^2 + x1^2 + x2^2 - 1", "dimension": 3},
  "audit": {"samples": 512, "epsilon_samples": 128},
  "output": {"directory": "out"}
}"#,
    );
    let out = run_in(tmp.path(), &["audit", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    // Report still written, carrying the witness.
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/audit.json")).unwrap())
            .unwrap();
    assert_eq!(report["report"]["passed"], false);
    assert!(report["report"]["symmetry"]["witness"].is_array());
}

#[test]
fn malformed_json_exits_one_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.json", "{\"surface\": {\n  broken\n}}");
    let out = run_in(tmp.path(), &["audit", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line"), "stderr: {stderr}");
}

#[test]
fn unknown_config_key_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "extra.json",
        r#"{"surface": {"family": "sphere", "radius": 1}, "surprise": 1}"#,
    );
    let out = run_in(tmp.path(), &["audit", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("surprise"));
}

#[test]
fn section_sweep_on_sphere_returns_identity_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.json", &sphere_config("out", ""));
    let out = run_in(tmp.path(), &["section", "--config", &cfg]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("out/section.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# format_version: 1"));
    assert!(lines[1].starts_with("# config: "));
    let header: Vec<&str> = lines[2].split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let tau = 2.0 * std::f64::consts::PI;
    let mut records = 0;
    for line in &lines[3..] {
        let fields: Vec<&str> = line.split(',').collect();
        if fields[0] != "record" {
            continue;
        }
        records += 1;
        let parse = |name: &str| fields[col(name)].parse::<f64>().unwrap();
        assert!((parse("tau") - tau).abs() < 1e-8);
        for axis in ["x0", "x1", "x2", "y0", "y1", "y2"] {
            let s = parse(&format!("start_{axis}"));
            let e = parse(&format!("end_{axis}"));
            assert!((s - e).abs() < 1e-8, "{axis}: {s} vs {e}");
        }
        assert!(parse("tau") < parse("tau_bound"));
        assert!(fields[col("error")].is_empty());
    }
    assert_eq!(records, 10);
    assert!(lines.last().unwrap().starts_with("summary,"));
}

#[test]
fn section_is_bit_identical_under_fixed_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.json", &sphere_config("out_a", ""));
    assert!(run_in(tmp.path(), &["section", "--config", &cfg]).status.success());
    let first = std::fs::read(tmp.path().join("out_a/section.csv")).unwrap();
    assert!(run_in(
        tmp.path(),
        &["section", "--config", &cfg, "--out", "out_b"]
    )
    .status
    .success());
    let second = std::fs::read(tmp.path().join("out_b/section.csv")).unwrap();
    // Directories differ inside the embedded config; compare from the header on.
    let strip = |bytes: &[u8]| {
        let text = String::from_utf8(bytes.to_vec()).unwrap();
        text.lines().skip(2).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(strip(&first), strip(&second));
}

#[test]
fn section_refuses_failed_audit_without_force() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{
  "surface": {"expression": "x0^3 + x0^2 + x1^2 + x2^2 - 1", "dimension": 3},
  "audit": {"samples": 256, "epsilon_samples": 64},
  "sweep": {"count": 2, "seed": 1},
  "output": {"directory": "out"}
}"#,
    );
    let out = run_in(tmp.path(), &["section", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn section_rows_report_errors_and_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.json", &sphere_config("out", ""));
    let out = run_in(
        tmp.path(),
        &[
            "section",
            "--config",
            &cfg,
            "--set",
            "integrator.max_steps=10",
            "--set",
            "sweep.count=3",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
    let csv = std::fs::read_to_string(tmp.path().join("out/section.csv")).unwrap();
    let error_rows = csv
        .lines()
        .filter(|l| l.starts_with("record") && l.contains("steps"))
        .count();
    assert_eq!(error_rows, 3, "every row carries the max-steps error");
}

#[test]
fn compare_sphere_matches_identity_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "cmp.json",
        r#"{
  "surface": {"family": "ellipsoid", "semiaxes": [1, 1, 1]},
  "sweep": {"count": 5, "seed": 9},
  "compare": {"tolerance": 1e-8},
  "output": {"directory": "out"}
}"#,
    );
    let out = run_in(tmp.path(), &["compare", "--config", &cfg]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("out/compare.csv")).unwrap();
    let summary = csv.lines().last().unwrap();
    let max_delta: f64 = summary.split(',').rev().nth(1).unwrap().parse().unwrap();
    assert!(max_delta < 1e-8, "max delta {max_delta}");
    assert!(tmp.path().join("out/g_table.csv").exists());
}

#[test]
fn compare_rejects_generic_expression_surfaces() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "cmp.json",
        r#"{
  "surface": {"expression": "x0^2/4 + x1^2 + x2^2 - 1", "dimension": 3},
  "output": {"directory": "out"}
}"#,
    );
    let out = run_in(tmp.path(), &["compare", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unsupported surface"));
}

#[test]
fn compare_revolution_profile_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "rev.json",
        r#"{
  "surface": {"family": "revolution", "profile": "0.5*sin(phi)", "dimension": 3},
  "sweep": {"count": 3, "seed": 2},
  "compare": {"tolerance": 1e-6},
  "output": {"directory": "out"}
}"#,
    );
    let out = run_in(tmp.path(), &["compare", "--config", &cfg]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let g_table = std::fs::read_to_string(tmp.path().join("out/g_table.csv")).unwrap();
    assert!(g_table.lines().nth(3).unwrap().contains("0.5*sin(phi)"));
}

#[test]
fn flow_dump_has_residual_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "f.json",
        &sphere_config(
            "out",
            r#",
  "flow": {"start_x": [1.1, 0.0, 0.0], "start_y": [0.0, 1.0, 0.0], "t_final": 3.14, "output_every": 50}"#,
        ),
    );
    let out = run_in(tmp.path(), &["flow", "--config", &cfg]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("out/trajectory.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[2],
        "t,x0,x1,x2,y0,y1,y2,abs_f,abs_y_dot_grad_f,y_norm_minus_1,unwrapped_angle"
    );
    for line in &lines[3..] {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert!(fields[7] < 1e-10 && fields[8] < 1e-10 && fields[9].abs() < 1e-10);
    }
}

#[test]
fn set_overrides_apply_to_resolved_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.json", &sphere_config("out", ""));
    let out = run_in(
        tmp.path(),
        &[
            "epsilon",
            "--config",
            &cfg,
            "--set",
            "audit.epsilon_samples=128",
            "--set",
            "integrator.base_step=1e-3",
        ],
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("out/epsilon.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["config"]["audit"]["epsilon_samples"], 128);
    assert_eq!(report["config"]["integrator"]["base_step"], 1e-3);
    let eps = report["report"]["epsilon_estimate"].as_f64().unwrap();
    assert!((eps - 1.0).abs() < 1e-9, "sphere epsilon {eps}");
}

#[test]
fn bad_override_value_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.json", &sphere_config("out", ""));
    let out = run_in(
        tmp.path(),
        &["audit", "--config", &cfg, "--set", "integrator.base_step=-2"],
    );
    assert_eq!(out.status.code(), Some(1));
}
