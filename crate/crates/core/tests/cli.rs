use std::path::{Path, PathBuf};
use std::process::Command;

use cluster_scattering::cli::*;

fn scene(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("examples/scenes")
        .join(format!("{name}.json"))
}

fn scene_text(name: &str) -> String {
    std::fs::read_to_string(scene(name)).unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cluster-scattering"))
}

fn run_bin(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn execute_scene(name: &str) -> RunOutput {
    let cfg = parse_config(&scene_text(name)).unwrap();
    execute(&cfg, &RunPlan::from_config(&cfg), true)
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn is_seventeen_digits(field: &str) -> bool {
    // d.dddddddddddddddde±x
    let (mantissa, exp) = match field.split_once('e') {
        Some(p) => p,
        None => return false,
    };
    let digits = mantissa.trim_start_matches('-').replace('.', "");
    digits.len() == 17 && digits.chars().all(|c| c.is_ascii_digit()) && exp.parse::<i32>().is_ok()
}

#[test]
fn matched_scene_reports_bare_source() {
    let out = execute_scene("matched_report");
    assert_eq!(out.exit_code, EXIT_OK, "{}", out.message);
    let cs = &out.files["cross_sections.csv"];
    let rows = csv_rows(cs);
    assert_eq!(rows[0], ["row", "member", "sigma_m2", "ratio", "sigma_c_m2", "ratio_c"]);
    let summary = rows.iter().find(|r| r[0] == "summary").unwrap();
    let sigma: f64 = summary[2].parse().unwrap();
    assert!((sigma - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    assert!(!cs.contains('\r'));
    assert!(cs.ends_with('\n'));
    for row in &rows[1..] {
        for f in &row[2..] {
            assert!(f.is_empty() || is_seventeen_digits(f), "{f}");
        }
    }
    assert!(out.files.contains_key("convergence.csv"));
    let report = &out.report;
    assert_eq!(report.config_hash_sha256.len(), 64);
    assert!(report.grids.is_some());
    assert!(report.model.as_ref().unwrap().l_used >= 16);
}

#[test]
fn oscs_scene_passes() {
    let out = execute_scene("lossless_oscs");
    assert_eq!(out.exit_code, EXIT_OK, "{}", out.message);
    let v = out.report.verifications.iter().find(|v| v.name == "oscs").unwrap();
    assert!(v.passed && v.rel_residual < 1e-6, "{v:?}");
}

#[test]
fn flux_limit_scene_passes() {
    let out = execute_scene("flux_limit");
    assert_eq!(out.exit_code, EXIT_OK, "{}", out.message);
    assert!(out
        .report
        .verifications
        .iter()
        .any(|v| v.name == "flux_limit" && v.passed));
    assert!(out.files.keys().any(|k| k.contains("flux_limit")));
}

#[test]
fn sweep_scene_passes() {
    let out = execute_scene("lossy_sweep");
    assert_eq!(out.exit_code, EXIT_OK, "{}", out.message);
    let sweep = out.report.sweep.as_ref().unwrap();
    assert!(sweep.verdict);
    assert_eq!(csv_rows(&out.files["sweep.csv"]).len(), 1 + 5);
}

#[test]
fn bounds_scene_is_deterministic() {
    let a = execute_scene("bounds");
    let b = execute_scene("bounds");
    assert_eq!(a.exit_code, EXIT_OK, "{}", a.message);
    assert_eq!(a.files, b.files);
    let summary = &a.report.bounds_suite.as_ref().unwrap().summary;
    assert_eq!(summary.trials, 1000);
    assert_eq!(summary.rc_mean + summary.rc_min + summary.rc_max + summary.removal, 0);
}

#[test]
fn binary_writes_identical_csvs_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let d1 = dir.path().join("a");
    let d2 = dir.path().join("b");
    for d in [&d1, &d2] {
        let (code, err) = run_bin(&[
            "--quiet",
            "run",
            scene("flux_limit").to_str().unwrap(),
            "--out",
            d.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK, "{err}");
    }
    let mut names: Vec<String> = std::fs::read_dir(&d1)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.contains(&"report.json".to_string()));
    assert!(names.contains(&"cross_sections.csv".to_string()));
    for n in names.iter().filter(|n| n.ends_with(".csv")) {
        assert_eq!(
            std::fs::read(d1.join(n)).unwrap(),
            std::fs::read(d2.join(n)).unwrap(),
            "{n}"
        );
    }
    // The reports differ at most in the timestamp.
    let strip = |p: &Path| {
        let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("timestamp_unix_s");
        v
    };
    assert_eq!(strip(&d1.join("report.json")), strip(&d2.join("report.json")));
}

#[test]
fn effective_config_round_trips() {
    let out = execute_scene("flux_limit");
    let json = serde_json::to_string_pretty(&out.report.effective_config).unwrap();
    let cfg = parse_config(&json).unwrap();
    assert_eq!(config_hash(&cfg), out.report.config_hash_sha256);
    let again = execute(&cfg, &RunPlan::from_config(&cfg), true);
    assert_eq!(again.files, out.files);
}

#[test]
fn verify_subcommand_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let full = scene("lossless_full");
    let lossy = scene("lossy_cluster");
    // Active fixed-strength scatterers break the host-only overall-SCS formula.
    let (code, err) = run_bin(&["--quiet", "verify", full.to_str().unwrap(), "--name", "oscs"]);
    assert_eq!(code, EXIT_FAILED);
    assert!(err.contains("oscs"));
    // Lossless-only relation on a lossy host.
    let (code, err) = run_bin(&["--quiet", "verify", lossy.to_str().unwrap(), "--name", "oscs"]);
    assert_eq!(code, EXIT_CONFIG, "{err}");
    let (code, _) = run_bin(&["--quiet", "verify", lossy.to_str().unwrap(), "--name", "nope"]);
    assert_eq!(code, EXIT_CONFIG);
    let out = dir.path().join("v");
    let (code, err) = run_bin(&[
        "--quiet",
        "verify",
        full.to_str().unwrap(),
        "--name",
        "pointlike_overall",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.join("verifications.csv").exists());
}

#[test]
fn sweep_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let cfg = scene("lossy_sweep");
    let args = [
        "--quiet",
        "sweep",
        cfg.to_str().unwrap(),
        "--param",
        "omega",
        "--from",
        "3",
        "--to",
        "0.03",
        "--points",
        "5",
        "--out",
        out.to_str().unwrap(),
    ];
    let (code, err) = run_bin(&args);
    assert_eq!(code, EXIT_OK, "{err}");
    let rows = csv_rows(&std::fs::read_to_string(out.join("sweep.csv")).unwrap());
    assert_eq!(rows.len(), 6);
    let (code, _) = run_bin(&[
        "--quiet",
        "sweep",
        cfg.to_str().unwrap(),
        "--param",
        "omega",
        "--from",
        "3",
        "--to",
        "1",
        "--points",
        "2",
    ]);
    assert_eq!(code, EXIT_CONFIG);
    let (code, _) = run_bin(&[
        "--quiet",
        "sweep",
        cfg.to_str().unwrap(),
        "--param",
        "radius",
        "--from",
        "3",
        "--to",
        "0.03",
        "--points",
        "5",
    ]);
    assert_eq!(code, EXIT_CONFIG);
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn config_errors_are_line_anchored() {
    let base = scene_text("lossy_cluster");
    let cases = [
        // (edit, expected line)
        (base.replace("\"density_kg_m3\": 1.4", "\"density_kg_m3\": -1.4"), 5),
        (base.replace("\"schema_version\": 1", "\"schema_version\": 7"), 2),
        (base.replace("\"radius_m\": 1.0", "\"radius_m\": 1.0, \"colour\": 3"), 7),
        (base.replace("[2.5, 0.3, 0.0]", "[0.5, 0.3, 0.0]"), 11),
        (base.replace("\"exterior\": \"air\"", "\"exterior\": \"water\""), 8),
        (
            base.replace("\"medium\": \"lossy_gel\" }", "\"medium\": \"lossy_gel\" },"),
            7,
        ),
    ];
    for (text, line) in &cases {
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.line, *line, "{err}");
        assert!(err.to_string().starts_with(&format!("line {line}, column ")));
    }
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", &cases[0].0);
    let (code, err) = run_bin(&[
        "run",
        bad.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("line 5"), "{err}");
    let (code, _) = run_bin(&["run", dir.path().join("missing.json").to_str().unwrap(), "--out", "x"]);
    assert_eq!(code, EXIT_CONFIG);
}

#[test]
fn non_convergence_exits_three_naming_the_task() {
    let mut v: serde_json::Value = serde_json::from_str(&scene_text("lossy_cluster")).unwrap();
    v["source"]["position_m"] = serde_json::json!([0.0, 0.0, 0.97]);
    v["numerics"] = serde_json::json!({ "l_trunc": 4 });
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "nc.json", &serde_json::to_string_pretty(&v).unwrap());
    let (code, err) = run_bin(&[
        "--quiet",
        "run",
        p.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_NUMERICAL);
    assert!(
        err.contains("verify:host_surface") && err.contains("non-convergence"),
        "{err}"
    );
}

#[test]
fn task_round_trip() {
    for t in ["report", "sweep", "bounds:10", "verify:all", "verify:flux_limit"] {
        assert_eq!(Task::parse(t).unwrap().to_string(), t);
    }
    assert!(Task::parse("bounds:0").is_err());
    assert!(Task::parse("frobnicate").is_err());
}
