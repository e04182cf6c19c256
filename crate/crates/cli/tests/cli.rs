use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_harper-le"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn report(out: &Output) -> Value {
    assert_eq!(code(out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert_eq!(text.lines().count(), 1, "one JSON record per line");
    serde_json::from_str(&text).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn f(v: &Value, key: &str) -> f64 {
    v["outputs"][key].as_f64().unwrap_or_else(|| panic!("missing output {key}: {v}"))
}

const IDENTITY: &str = r#"{"entries": [{"coeffs": [[0, 1, 0]]}, {"coeffs": []}, {"coeffs": []}, {"coeffs": [[0, 1, 0]]}]}"#;
const DIAG: &str = r#"{"entries": [{"coeffs": [[0, 2, 0]]}, {"coeffs": []}, {"coeffs": []}, {"coeffs": [[0, 1, 0]]}]}"#;

fn schema() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schema/report.schema.json");
    let s: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&s).unwrap()
}

fn assert_valid(v: &Value) {
    let errors: Vec<String> = schema().iter_errors(v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?} in {v}");
    if let Some(t) = v.get("table") {
        let n = t["columns"].as_array().unwrap().len();
        assert!(t["rows"].as_array().unwrap().iter().all(|r| r.as_array().unwrap().len() == n));
    }
}

#[test]
fn identity_matrix_has_zero_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "identity.json", IDENTITY);
    let v = report(&run(&["le", "--matrix", m.to_str().unwrap(), "--beta", "1/3"]));
    assert_eq!(f(&v, "estimate"), 0.0);
    assert_eq!(v["inputs"]["beta"], "1/3");
    assert_valid(&v);
}

#[test]
fn almost_mathieu_mid_band_exponent_is_log_two() {
    let v = report(&run(&["le", "--model", "harper", "--lambda", "0,0.5,0", "--beta", "golden", "--n", "10000"]));
    assert!((f(&v, "estimate") - 2f64.ln()).abs() < 0.02, "{v}");
    assert!(v["diagnostics"]["energy_source"].as_str().unwrap().contains("mid-band"));
    assert_valid(&v);
}

#[test]
fn region_three_exponent_vanishes_on_the_spectrum() {
    let v = report(&run(&["le", "--lambda", "1,0.5,0.5", "--beta", "golden"]));
    assert!(f(&v, "estimate").abs() < 0.02, "{v}");
}

#[test]
fn rational_backend_reports_its_error_estimate() {
    let v = report(&run(&["le", "--lambda", "0.3,0.8,0.1", "--beta", "2/5", "--E", "0.3", "--backend", "rational"]));
    assert!(f(&v, "error_estimate") < 1e-8);
    assert_eq!(v["outputs"]["backend"], "rational");
    assert_valid(&v);
}

#[test]
fn constant_sweep_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "diag.json", DIAG);
    let v = report(&run(&["sweep", "--matrix", m.to_str().unwrap(), "--steps", "11", "--n", "200"]));
    let rows = v["table"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 11);
    for r in rows {
        assert!((r[1].as_f64().unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!(r[2].as_f64().unwrap().abs() < 1e-9);
    }
    assert_eq!(v["outputs"]["kinks"].as_array().unwrap().len(), 0);
    assert_valid(&v);
}

fn segment_omegas(v: &Value) -> Vec<f64> {
    v["outputs"]["segment_omegas"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn sweeps_show_a_v_shape_with_unit_slopes() {
    for lam in ["0,0.5,0", "0.25,0.25,0.25"] {
        let v = report(&run(&[
            "sweep", "--lambda", lam, "--eps-min", "-0.5", "--eps-max", "0.5", "--steps", "21", "--n", "4000", "--N",
            "300", "--thetas", "8",
        ]));
        let om = segment_omegas(&v);
        assert_eq!(om.len(), 2, "{lam}: {v}");
        assert!((om[0] + 1.0).abs() < 0.05 && (om[1] - 1.0).abs() < 0.05, "{lam}: {om:?}");
        let kinks = v["outputs"]["kinks"].as_array().unwrap();
        assert!(kinks[0]["eps"].as_f64().unwrap().abs() < 0.05);
        let marked = v["table"]["rows"].as_array().unwrap().iter().filter(|r| r[4] == true).count();
        assert_eq!(marked, 1);
        assert_valid(&v);
    }
}

#[test]
fn acceleration_away_from_the_kink_is_an_integer() {
    let v = report(&run(&["accel", "--lambda", "0.25,0.25,0.25", "--E", "0.5", "--at", "0.3", "--n", "3000"]));
    assert_eq!(v["outputs"]["nearest_int"], 1);
    assert!(f(&v, "residual") < 0.05);
    assert_valid(&v);
}

#[test]
fn acceleration_at_a_kink_is_a_runtime_error() {
    let out = run(&["accel", "--lambda", "0.25,0.25,0.25", "--E", "0.5", "--at", "0.0", "--n", "2000"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("kink"));
}

#[test]
fn region_and_duality_reports() {
    let v = report(&run(&["region", "--lambda", "0.2,2,0.3"]));
    assert_eq!(v["outputs"]["region"], "II");
    assert_eq!(f(&v, "le_on_spectrum"), 0.0);
    assert_valid(&v);
    let d = report(&run(&["duality", "--lambda", "0.5,0.2,0.2"]));
    assert_eq!(d["outputs"]["dual"], "1,5,2.5");
    assert_eq!(d["outputs"]["dual_region"], "II");
    assert_valid(&d);
}

#[test]
fn duality_check_residual_is_small() {
    let v = report(&run(&["duality", "--lambda", "0.25,0.25,0.25", "--check", "--N", "300", "--thetas", "8"]));
    assert!(f(&v, "residual") < 0.03, "{v}");
    assert_valid(&v);
}

#[test]
fn spectrum_reports_intervals_and_samples() {
    let v = report(&run(&["spectrum", "--lambda", "0,0.5,0", "--beta", "1/2", "--method", "floquet", "--thetas", "64"]));
    assert_eq!(v["table"]["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["outputs"]["sample_energies"].as_array().unwrap().len(), 2);
    let bound = f(&v, "norm_bound");
    for r in v["table"]["rows"].as_array().unwrap() {
        assert!(r[0].as_f64().unwrap() >= -bound && r[1].as_f64().unwrap() <= bound);
    }
    assert_valid(&v);
    let t = report(&run(&["spectrum", "--lambda", "0,0.5,0", "--N", "200", "--thetas", "4"]));
    assert_valid(&t);
}

#[test]
fn bad_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_cfg = write(dir.path(), "bad.toml", "lamda = \"1,1,1\"\n");
    let cases: Vec<Vec<&str>> = vec![
        vec!["le", "--lambda", "0,-1,0"],
        vec!["le", "--lambda", "0,0,0"],
        vec!["le", "--lambda", "1,2"],
        vec!["le", "--lambda", "1,1,1", "--beta", "1/0"],
        vec!["le", "--lambda", "1,1,1", "--beta", "pi"],
        vec!["le", "--lambda", "1,1,1", "--E", "nan"],
        vec!["le", "--lambda", "1,1,1", "--E", "0", "--backend", "rational"],
        vec!["le", "--lambda", "1,1,1", "--E", "0", "--n", "0"],
        vec!["le", "--model", "ising", "--lambda", "1,1,1"],
        vec!["le"],
        vec!["sweep", "--lambda", "1,1,1", "--E", "0", "--eps-min", "1", "--eps-max", "0"],
        vec!["spectrum", "--lambda", "1,1,1", "--N", "10"],
        vec!["spectrum", "--lambda", "1,1,1", "--method", "floquet"],
        vec!["duality", "--lambda", "1,0,1"],
        vec!["verify", "nonsense"],
        vec!["--threads", "0", "region", "--lambda", "1,1,1"],
        vec!["--config", bad_cfg.to_str().unwrap(), "region"],
        vec!["--config", "/nonexistent.toml", "region", "--lambda", "1,1,1"],
    ];
    for args in cases {
        let out = run(&args);
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn verify_jensen_passes_and_fails_under_a_tight_tolerance() {
    let v = report(&run(&["verify", "jensen"]));
    assert_eq!(v["outputs"]["failures"], 0);
    assert_eq!(v["outputs"]["checks"], 301);
    let rows = v["table"]["rows"].as_array().unwrap();
    assert!(rows.iter().all(|r| r[5] == "PASS"));
    assert!(rows.iter().all(|r| r[3].as_f64().unwrap() == 1e-6));
    assert_valid(&v);

    let out = run(&["verify", "jensen", "--tol", "1e-300"]);
    assert_eq!(code(&out), 1);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["outputs"]["failures"].as_u64().unwrap() > 0);
    assert_eq!(v["outputs"]["passed"], false);
}

#[test]
fn reports_are_bit_identical_across_runs_and_thread_counts() {
    let args = ["sweep", "--lambda", "0.3,0.8,0.1", "--E", "0.4", "--steps", "9", "--n", "2000"];
    let a = run(&args);
    let b = run(&args);
    let mut threaded = vec!["--threads", "3"];
    threaded.extend(args);
    let c = run(&threaded);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn config_files_supply_missing_flags_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.toml",
        "lambda = \"0.3,0.8,0.1\"\nbeta = \"2/5\"\nE = 0.4\nn = 500\n\n[le]\nn = 700\nphases = [4]\n",
    );
    let cfg = cfg.to_str().unwrap();
    let v = report(&run(&["--config", cfg, "le"]));
    assert_eq!(v["inputs"]["lambda"], "0.3,0.8,0.1");
    assert_eq!(v["inputs"]["n"], 700);
    assert_eq!(v["inputs"]["phases"], 4);
    let w = report(&run(&["--config", cfg, "le", "--lambda", "0.5,0.2,0.2", "--n", "300"]));
    assert_eq!(w["inputs"]["lambda"], "0.5,0.2,0.2");
    assert_eq!(w["inputs"]["n"], 300);
    assert_eq!(w["inputs"]["beta"], "2/5");
}

#[test]
fn resolved_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep", "--lambda", "0.30,0.8,0.10", "--beta", "8/13", "--E=-0.25", "--eps-min=-0.5", "--eps-max", "0.5",
        "--steps", "7", "--n", "400", "--phases", "2",
    ];
    let mut dump_args = vec!["--dump-config"];
    dump_args.extend(args);
    let first = run(&dump_args);
    assert_eq!(code(&first), 0);
    let text = String::from_utf8(first.stdout).unwrap();
    assert!(text.contains("lambda = \"0.3,0.8,0.1\""), "{text}");
    let cfg = write(dir.path(), "dumped.toml", &text);
    let cfg = cfg.to_str().unwrap();
    let second = run(&["--dump-config", "--config", cfg, "sweep"]);
    assert_eq!(String::from_utf8(second.stdout).unwrap(), text);

    let from_flags = run(&args);
    let from_config = run(&["--config", cfg, "sweep"]);
    assert_eq!(code(&from_flags), 0);
    assert_eq!(from_flags.stdout, from_config.stdout);
}

#[test]
fn csv_output_has_a_header_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = run(&[
        "--format", "csv", "--output", path.to_str().unwrap(), "sweep", "--lambda", "0.3,0.8,0.1", "--E", "0.4",
        "--steps", "5", "--n", "200",
    ]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let mut rdr = csv::Reader::from_path(&path).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["eps", "L", "omega", "noise", "kink"]);
    assert_eq!(rdr.records().count(), 5);

    let region = run(&["--format", "csv", "region", "--lambda", "0.5,0.2,0.2"]);
    let text = String::from_utf8(region.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().split(',').any(|h| h == "region"));
    assert_eq!(lines.count(), 1);
}

#[test]
fn help_states_units_and_exit_codes() {
    let out = run(&["--help"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("nats"));
    assert!(text.contains("Exit codes"));
}
