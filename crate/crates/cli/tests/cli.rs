use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pdirac(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pdirac"));
    cmd.current_dir(dir).args(args).env_remove("PDIRAC_WORKERS").env_remove("PDIRAC_OUT_DIR");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.json");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn probe_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = pdirac(dir.path(), &["probe", "--lambda", "0,0"], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["f_p"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((v["discriminant"][0].as_f64().unwrap() - 2.0 * 1f64.cosh()).abs() < 1e-12);

    let o = pdirac(dir.path(), &["probe", "--lambda", "-2.5,-0.75"], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["f_p"].as_f64().unwrap() < 1.0);

    let o = pdirac(dir.path(), &["probe", "--lambda", "3,0"], &[]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["on_essential"], Value::Bool(true));
    assert!(v["f_p"].is_null());
}

#[test]
fn greens_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = pdirac(dir.path(), &["greens", "--lambda", "0.5,1", "--x", "-0.3", "--t", "1.7"], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let (a, b) = (v["frobenius"].as_f64().unwrap(), v["frobenius_closed_form"].as_f64().unwrap());
    assert!((a - b).abs() <= 1e-8 * b);
}

#[test]
fn bands_free_case() {
    let dir = tempfile::tempdir().unwrap();
    let o = pdirac(dir.path(), &["bands"], &[("PDIRAC_OUT_DIR", "out")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/bands.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2, "{csv}");
    let hi: f64 = rows[0][2].parse().unwrap();
    let lo: f64 = rows[1][1].parse().unwrap();
    assert!((hi + 1.0).abs() < 1e-9 && (lo - 1.0).abs() < 1e-9);
    assert_eq!((rows[0][4], rows[1][3]), ("jordan", "jordan"));
}

#[test]
fn map_with_unit_norm_has_no_contours() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"perturbation": {"kind": "norm_only", "p": 1, "norm": 1.0}, "grid": {"nx": 41, "ny": 31}, "sampling": {"n_samples": 256}}"#,
    );
    let o = pdirac(dir.path(), &["--config", &cfg, "map"], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let contours = fs::read_to_string(dir.path().join("contours.csv")).unwrap();
    assert_eq!(contours.lines().count(), 1, "{contours}");
    let map = fs::read_to_string(dir.path().join("map.csv")).unwrap();
    assert_eq!(map.lines().count(), 1 + 41 * 31);
    assert!(fs::read_to_string(dir.path().join("contours.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn map_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
  "mass": 0.7,
  "potential": {"period": 1.0, "kind": "piecewise_constant", "breakpoints": [0.0, 0.45], "values": [1.5, -1.0]},
  "perturbation": {"kind": "norm_only", "p": 2.0, "norm": 0.3},
  "window": {"re": [-6.0, 6.0], "im": [-3.0, 3.0]},
  "grid": {"nx": 80, "ny": 60},
  "sampling": {"n_samples": 256}
}"#,
    );
    let mut outputs = Vec::new();
    for workers in ["1", "4"] {
        let out = format!("out{workers}");
        let o = pdirac(dir.path(), &["--config", &cfg, "map"], &[("PDIRAC_WORKERS", workers), ("PDIRAC_OUT_DIR", &out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        let read = |f: &str| fs::read(dir.path().join(&out).join(f)).unwrap();
        outputs.push((read("map.csv"), read("contours.csv"), read("contours.svg")));
    }
    assert!(outputs[0].1.len() > 40, "expected some contour vertices");
    assert!(outputs[0] == outputs[1]);
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"mass": 0.25, "potential": {"period": 2.0, "kind": "fourier", "mean": 0.1, "cos": [0.3333333333333333]}, "asymptotics": {"mu": 1.3}}"#,
    );
    let first = pdirac(dir.path(), &["--config", &cfg, "--dump-config"], &[("PDIRAC_WORKERS", "3")]);
    assert!(first.status.success(), "{}", stderr(&first));
    let dumped = String::from_utf8(first.stdout).unwrap();
    assert!(dumped.contains("\"workers\": 3"));
    let again = write_config(dir.path(), &dumped);
    let second = pdirac(dir.path(), &["--config", &again, "--dump-config"], &[]);
    assert_eq!(String::from_utf8(second.stdout).unwrap(), dumped);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{\n  \"mass\": 1.0,\n  \"grid\": {\n    \"nx\": 1\n  }\n}\n");
    let o = pdirac(dir.path(), &["--config", &cfg, "map"], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));

    let cfg = write_config(dir.path(), "{\n  \"mass\": 1.0,\n  \"grid\": }\n");
    let o = pdirac(dir.path(), &["--config", &cfg, "bands"], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let o = pdirac(dir.path(), &["bands"], &[("PDIRAC_WORKERS", "lots")]);
    assert_eq!(o.status.code(), Some(2));

    let o = pdirac(dir.path(), &["probe", "--lambda", "1"], &[]);
    assert_eq!(o.status.code(), Some(2));

    let o = pdirac(dir.path(), &["probe", "--lambda", "-1,0"], &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("lambda = -1+0i"), "{}", stderr(&o));

    let o = pdirac(dir.path(), &["greens", "--lambda", "0,1", "--x", "0.5", "--t", "0.5"], &[]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn verify_asymptotics_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"asymptotics": {"alpha0": 40, "count": 5}, "sampling": {"n_x": 512}}"#);
    let o = pdirac(dir.path(), &["--config", &cfg, "verify-asymptotics"], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("asymptotics.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "alpha,phi_err,k_err,gamma_err,gpm_err,vpm_err");
    assert_eq!(lines.iter().filter(|l| !l.starts_with('#')).count(), 6);
    assert!(lines.iter().any(|l| l.starts_with("# exponents")));
}

#[test]
fn edge_limits_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = pdirac(dir.path(), &["edge-limits"], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("edge_limits.csv")).unwrap();
    // free case on [-5, 5]: two touch points and two Jordan edges, 5 offsets x 3 directions each
    assert_eq!(csv.lines().count(), 1 + 4 * 15);
    for l in csv.lines().skip(1) {
        let f: Vec<&str> = l.split(',').collect();
        let (t_re, t_im): (f64, f64) = (f[3].parse().unwrap(), f[4].parse().unwrap());
        if f[2] == "full_periodic" && t_re.hypot(t_im) <= 1e-4 {
            let ratio: f64 = f[7].parse().unwrap();
            assert!((ratio - 1.0).abs() < 0.02, "{l}");
        }
    }
}
