use std::path::Path;
use std::process::{Command, Output};

use dce_core::cli::parse_config;
use dce_core::CavityConfig;

const SMALL: [&str; 10] = [
    "--epsilon",
    "1e-3",
    "--t-final",
    "20",
    "--a-right",
    "1",
    "--gamma-right",
    "2",
    "--k-max",
    "6",
];

fn dce(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dce"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small(command: &str, extra: &[&str]) -> Output {
    let mut args = vec![command, "--quiet"];
    args.extend(SMALL);
    args.extend(extra);
    dce(&args)
}

fn body(csv: &str) -> String {
    csv.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn spectrum_csv_is_reproducible() {
    let (a, b) = (small("spectrum", &[]), small("spectrum", &[]));
    assert_eq!(a.status.code(), Some(0));
    let text = stdout(&a);
    assert!(text.starts_with("# "));
    assert!(text.contains("# tolerances: "));
    let body_a = body(&text);
    assert_eq!(body_a.lines().next(), Some("k,engine,N_k"));
    assert_eq!(body_a.lines().count(), 1 + 2 * 6);
    assert_eq!(body_a, body(&stdout(&b)));
}

#[test]
fn json_output_round_trips_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.json");
    let o = small("spectrum", &["--engine", "analytic", "--phi-left", "0.1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let cfg: CavityConfig = serde_json::from_value(doc["metadata"]["config"].clone()).unwrap();
    let expected = CavityConfig::new(1e-3, 20.0).with_left(0.0, 2.0, 0.0).with_right(1.0, 2.0, 0.0);
    assert_eq!(cfg.phi_left, 0.1);
    assert_eq!(CavityConfig { phi_left: 0.0, ..cfg }, expected);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 6);
    assert_eq!(doc["metadata"]["output_format"], "json");
}

#[test]
fn config_files_and_overrides_combine() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "epsilon = 1e-3\nt_final = 20\na_right = 1\ngamma_right = 2\nk_max = 6\n").unwrap();
    let (cfg, _) = parse_config(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(cfg.gamma_right, 2.0);
    let o = dce(&["spectrum", "--quiet", "--engine", "analytic", "--config", path.to_str().unwrap(), "--t-final", "40"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("\"t_final\":40.0"), "{text}");
}

#[test]
fn exit_codes_separate_usage_from_success() {
    assert_eq!(dce(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(dce(&["spectrum", "--quiet", "--t-final", "10"]).status.code(), Some(2));
    let bad = dce(&["spectrum", "--quiet", "--epsilon", "1e-4", "--t-final", "10", "--gamma-right", "-1"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("gamma_right"));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "epsilon = 1e-4\nt_final = 10\nwall = 3\n").unwrap();
    let o = dce(&["spectrum", "--quiet", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(dce(&["--help"]).status.code(), Some(0));
}

#[test]
fn validate_passes_for_a_static_cavity() {
    let o = dce(&["validate", "--quiet", "--epsilon", "0", "--t-final", "50", "--gamma-right", "2", "--k-max", "6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(body(&text).starts_with("check,status,value,tolerance,detail"));
    assert!(!text.contains(",fail,"));
}

#[test]
fn phase_scan_emits_one_row_per_point_and_mode() {
    let o = small("phase-scan", &["--points", "4", "--engine", "analytic"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let b = body(&text);
    assert_eq!(b.lines().next(), Some("axis_value,engine,k,N_k"));
    assert_eq!(b.lines().count(), 1 + 4 * 6);
}

#[test]
fn failed_runs_leave_no_partial_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never.csv");
    let o = dce(&["spectrum", "--quiet", "--t-final", "10", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!Path::new(&out).exists());
    let entries = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(entries, 0);
}
