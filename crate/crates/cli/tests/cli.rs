//! End-to-end tests of the `bmv` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BASE: &str = "mass_kg = 1e-14\nd_m = 300e-6\ns_m = 100e-6\n";

fn bmv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bmv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

/// Runs `command` on `body` (with `[output] path = "out"` appended) and
/// returns the output file.
fn run_to_file(dir: &TempDir, command: &str, body: &str, extra: &[&str]) -> (Output, String) {
    let cfg = write_config(
        dir.path(),
        &format!("{command}.toml"),
        &format!("{body}\n[output]\npath = \"{command}.out\"\n"),
    );
    let mut args = vec![command, "--config", cfg.to_str().unwrap(), "--quiet"];
    args.extend_from_slice(extra);
    let out = bmv(&args);
    let text =
        std::fs::read_to_string(dir.path().join(format!("{command}.out"))).unwrap_or_default();
    (out, text)
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn run_eq5_reaches_two() {
    let dir = TempDir::new().unwrap();
    let body = format!("{BASE}t_grav_s = 1\ndphi1_rad = 2.0\ndphi2_rad = 1.1415926535897932\nphase_convention = \"eq5\"\n");
    let (out, text) = run_to_file(&dir, "run", &body, &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = csv_rows(&text);
    assert_eq!(rows.len(), 1);
    let w = rows[0][column(&header, "witness_exact")];
    assert!((w - 2.0).abs() < 1e-12, "{w}");
    let stderr = rows[0][column(&header, "stderr")];
    for col in ["witness_strategy1", "witness_strategy2"] {
        assert!((rows[0][column(&header, col)] - 2.0).abs() <= 5.0 * stderr);
    }
}

#[test]
fn zero_time_has_no_entanglement() {
    let dir = TempDir::new().unwrap();
    let body = format!("{BASE}t_grav_s = 0\nphase_convention = \"eq5\"\n");
    let (out, text) = run_to_file(&dir, "run", &body, &[]);
    assert!(out.status.success());
    let (header, rows) = csv_rows(&text);
    for col in [
        "dphi1",
        "dphi2",
        "concurrence",
        "negativity",
        "witness_exact",
    ] {
        assert!(rows[0][column(&header, col)].abs() < 1e-12, "{col}");
    }
    let stderr = rows[0][column(&header, "stderr")];
    for col in ["witness_strategy1", "witness_strategy2"] {
        assert!(rows[0][column(&header, col)].abs() <= 5.0 * stderr, "{col}");
    }
}

#[test]
fn run_writes_measurement_records() {
    let dir = TempDir::new().unwrap();
    let body = format!(
        "{BASE}t_grav_s = 1\nshots = 10\n[output]\npath = \"row.csv\"\nrecords = \"records.csv\"\n"
    );
    let cfg = write_config(dir.path(), "c.toml", &body);
    let out = bmv(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "shot,strategy,term,outcome_A,outcome_B,product"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 20);
    assert!(rows[0].starts_with("0,strategy1,ZA_XB,"));
    assert!(rows[11].starts_with("1,strategy2,XA_ZB,"));
    for r in rows {
        let f: Vec<i32> = r.split(',').skip(3).map(|x| x.parse().unwrap()).collect();
        assert!(f[0].abs() == 1 && f[1].abs() == 1 && f[2] == f[0] * f[1]);
    }
}

#[test]
fn sweep_t_grav_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let body = format!(
        "{BASE}t_grav_s = 1\n[sweep]\nparam = \"t_grav_s\"\nmin = 0\nmax = 90\nsteps = 10\n"
    );
    let (out, text) = run_to_file(&dir, "sweep", &body, &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = csv_rows(&text);
    assert_eq!(header[0], "t_grav_s");
    assert_eq!(rows.len(), 10);
    for row in &rows {
        let sum = row[column(&header, "dphi1")] + row[column(&header, "dphi2")];
        let c = row[column(&header, "concurrence")];
        assert!((c - (sum / 2.0).sin().abs()).abs() < 1e-10);
    }
}

#[test]
fn sweep_s_increases_closest_phase() {
    let dir = TempDir::new().unwrap();
    let body = format!(
        "{BASE}t_grav_s = 1\n[sweep]\nparam = \"s_m\"\nmin = 10e-6\nmax = 150e-6\nsteps = 8\n"
    );
    let (out, text) = run_to_file(&dir, "sweep", &body, &[]);
    assert!(out.status.success());
    let (header, rows) = csv_rows(&text);
    let d1 = column(&header, "dphi1");
    assert!(rows.windows(2).all(|w| w[1][d1] > w[0][d1]));
}

#[test]
fn one_point_sweep_equals_run() {
    let dir = TempDir::new().unwrap();
    let body = format!("{BASE}t_grav_s = 20\nshots = 500\n");
    let (_, run) = run_to_file(&dir, "run", &body, &[]);
    let sweep_body =
        format!("{body}[sweep]\nparam = \"t_grav_s\"\nmin = 20\nmax = 20\nsteps = 1\n");
    let (_, sweep) = run_to_file(&dir, "sweep", &sweep_body, &[]);
    let run_row = run.lines().nth(1).unwrap();
    let sweep_row = sweep.lines().nth(1).unwrap();
    assert_eq!(sweep_row, format!("20.0,{run_row}"));
}

#[test]
fn multi_axis_sweep_is_row_major() {
    let dir = TempDir::new().unwrap();
    let body = format!(
        "{BASE}t_grav_s = 1\nshots = 100\n[[sweep]]\nparam = \"dphi1_rad\"\nmin = 0\nmax = 1\nsteps = 2\n\
         [[sweep]]\nparam = \"dphi2_rad\"\nmin = 0\nmax = 2\nsteps = 3\n"
    );
    let (out, text) = run_to_file(&dir, "sweep", &body, &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = csv_rows(&text);
    assert_eq!(&header[..3], &["dphi1_rad", "dphi2_rad", "dphi1"]);
    let swept: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
    assert_eq!(
        swept,
        vec![
            (0.0, 0.0),
            (0.0, 1.0),
            (0.0, 2.0),
            (1.0, 0.0),
            (1.0, 1.0),
            (1.0, 2.0)
        ]
    );
}

#[test]
fn sweep_is_independent_of_jobs() {
    let dir = TempDir::new().unwrap();
    let body = format!("{BASE}t_grav_s = 1\nshots = 1000\n[sweep]\nparam = \"t_grav_s\"\nmin = 0\nmax = 60\nsteps = 12\n");
    let (_, one) = run_to_file(&dir, "sweep", &body, &["--jobs", "1"]);
    let (_, four) = run_to_file(&dir, "sweep", &body, &["--jobs", "4"]);
    assert_eq!(one, four);
}

#[test]
fn json_output_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        &format!(
            "{BASE}t_grav_s = 1\nshots = 100\n[output]\npath = \"o.json\"\nformat = \"json\"\n"
        ),
    );
    assert!(bmv(&["run", "--config", cfg.to_str().unwrap()])
        .status
        .success());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o.json")).unwrap()).unwrap();
    let row = &v.as_array().unwrap()[0];
    assert!(row["witness_exact"].is_number());
    assert_eq!(row.as_object().unwrap().keys().next().unwrap(), "dphi1");
}

#[test]
fn csv_floats_round_trip() {
    let dir = TempDir::new().unwrap();
    let body = format!("{BASE}t_grav_s = 1\nshots = 100\n[sweep]\nparam = \"t_grav_s\"\nmin = 0.1\nmax = 0.7\nsteps = 7\n");
    let (_, text) = run_to_file(&dir, "sweep", &body, &[]);
    for field in text.lines().skip(1).flat_map(|l| l.split(',')) {
        let x: f64 = field.parse().unwrap();
        assert_eq!(format!("{x:?}"), field);
    }
}

#[test]
fn feasibility_reports() {
    let dir = TempDir::new().unwrap();
    let (out, text) = run_to_file(&dir, "feasibility", BASE, &[]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["casimir"]["pass"], true);
    assert_eq!(v["casimir"]["margin_m"], 0.0);
    assert!((v["d1_m"].as_f64().unwrap() - 200e-6).abs() < 1e-18);
    let t = v["required_t_grav_s"].as_f64().unwrap();
    let rate = v["phase_sum_rate_rad_s"].as_f64().unwrap();
    assert!((t * rate - std::f64::consts::PI).abs() < 1e-12);
    assert!((t - 59.57).abs() < 0.01, "{t}");

    let (out, text) = run_to_file(
        &dir,
        "feasibility",
        "mass_kg = 1e-14\nd_m = 300e-6\ns_m = 250e-6\n",
        &[],
    );
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["casimir"]["pass"], false);
    assert!((v["d1_m"].as_f64().unwrap() - 50e-6).abs() < 1e-15);
}

#[test]
fn gwt_report() {
    let dir = TempDir::new().unwrap();
    let (out, text) = run_to_file(&dir, "gwt", "gwt_samples = 2000\nseed = 7\n", &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let keys: Vec<&String> = v.as_object().unwrap().keys().take(4).collect();
    assert_eq!(keys, ["n", "accepted", "max_negativity", "seed"]);
    assert_eq!(v["accepted"], 2000);
    assert_eq!(v["seed"], 7);
    assert!(v["max_negativity"].as_f64().unwrap() <= 1e-9);
    assert!((v["counterexample_negativity"].as_f64().unwrap() - 0.5).abs() < 1e-10);
    let (_, again) = run_to_file(
        &dir,
        "gwt",
        "gwt_samples = 2000\nseed = 7\n",
        &["--jobs", "3"],
    );
    assert_eq!(text, again);
}

#[test]
fn seed_flag_overrides_file() {
    let dir = TempDir::new().unwrap();
    let body = format!("{BASE}t_grav_s = 20\nshots = 100\nseed = 5\n");
    let (_, from_file) = run_to_file(&dir, "run", &body, &[]);
    let (_, flag_same) = run_to_file(
        &dir,
        "run",
        &format!("{BASE}t_grav_s = 20\nshots = 100\n"),
        &["--seed", "5"],
    );
    let (_, flag_other) = run_to_file(&dir, "run", &body, &["--seed", "6"]);
    assert_eq!(from_file, flag_same);
    assert_ne!(from_file, flag_other);
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("massq = 1e-14\n", "mass_kg"),
        (
            "mass_kg = 1e-14\nd_m = 100e-6\ns_m = 200e-6\nt_grav_s = 1\n",
            "BranchGeometry",
        ),
        ("mass_kg = 1e-14\nd_m = = 1\n", ":2:"),
    ];
    for (body, needle) in cases {
        let cfg = write_config(dir.path(), "bad.toml", body);
        let out = bmv(&["run", "--config", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{body}");
        let msg = String::from_utf8_lossy(&out.stderr);
        assert!(msg.contains(needle), "{msg}");
    }
    let out = bmv(&[
        "run",
        "--config",
        dir.path().join("missing.toml").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = bmv(&["run"]);
    assert_eq!(out.status.code(), Some(2));
    let cfg = write_config(dir.path(), "nosweep.toml", &format!("{BASE}t_grav_s = 1\n"));
    assert_eq!(
        bmv(&["sweep", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn numeric_failure_exits_3() {
    // The draw budget cannot be met on the full unit cube.
    let dir = TempDir::new().unwrap();
    let (out, _) = run_to_file(&dir, "gwt", "gwt_samples = 16\ngwt_half_width = 1.0\n", &[]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
