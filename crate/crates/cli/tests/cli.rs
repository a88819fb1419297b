use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use elastic_surfaces::io::{load_surface, read_summary, synth_named};
use elastic_surfaces::SphericalGrid;

const SMALL: &[&str] = &["--grid", "12x13", "--deg", "3", "--deg-bar", "2", "--T", "3"];

fn esurf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_esurf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_writes_a_loadable_grid_and_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ell.grid");
    let o = esurf(&["synth", "ellipsoid:c=1.5", "--grid", "10x9", "--out", s(&out), "--obj"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (g, f) = load_surface(&out).unwrap();
    assert_eq!((g.n_theta(), g.n_phi()), (10, 9));
    let expected = synth_named(&SphericalGrid::new(10, 9).unwrap(), "ellipsoid:c=1.5").unwrap();
    assert_eq!(f, expected);
    assert!(dir.path().join("ell.obj").exists());
}

#[test]
fn geodesic_writes_an_archive_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut args = vec!["geodesic", "synth:sphere", "synth:ellipsoid", "--N", "0", "--out", s(&out)];
    args.extend_from_slice(SMALL);
    let o = esurf(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("distance "));
    let summary = read_summary(&out).unwrap();
    assert_eq!(summary.t_count, 3);
    assert_eq!(summary.grid, [12, 13]);
    for i in 0..=3 {
        assert!(out.join(format!("frame_{i:03}.obj")).exists());
    }

    let again = dir.path().join("again");
    let cfg = out.join("config.json");
    let o = esurf(&["geodesic", "--config", s(&cfg), "--out", s(&again)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rerun = read_summary(&again).unwrap();
    assert_eq!(rerun.distance.to_bits(), summary.distance.to_bits());
}

#[test]
fn distance_of_a_surface_to_itself_is_zero() {
    let mut args = vec!["distance", "synth:ellipsoid", "synth:ellipsoid", "--N", "0"];
    args.extend_from_slice(SMALL);
    let o = esurf(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let d: f64 = stdout(&o).trim().parse().unwrap();
    assert!(d.abs() < 1e-10, "{d}");
}

#[test]
fn unconverged_runs_exit_three_and_still_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut args = vec![
        "geodesic",
        "synth:sphere",
        "synth:cylinder:bend=0.4",
        "--N",
        "0",
        "--max-iter",
        "1",
        "--out",
        s(&out),
    ];
    args.extend_from_slice(SMALL);
    let o = esurf(&args);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!read_summary(&out).unwrap().converged);
}

#[test]
fn invalid_settings_exit_two() {
    let bad_weights = esurf(&["distance", "synth:sphere", "synth:sphere", "--weights", "1,-1,1,1"]);
    assert_eq!(code(&bad_weights), 2);
    let bad_t = esurf(&["distance", "synth:sphere", "synth:sphere", "--T", "1"]);
    assert_eq!(code(&bad_t), 2);
    let bad_shape = esurf(&["distance", "synth:teapot", "synth:sphere"]);
    assert_eq!(code(&bad_shape), 2);
    let one_input = esurf(&["distance", "synth:sphere"]);
    assert_eq!(code(&one_input), 2);
    let bad_mode = esurf(&["distance", "synth:sphere", "synth:sphere", "--mode", "fast"]);
    assert_eq!(code(&bad_mode), 2);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"inputs": ["synth:sphere", "synth:sphere"], "wieghts": [1, 1, 1, 1]}"#).unwrap();
    let o = esurf(&["distance", "--config", s(&cfg)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("wieghts"));
}

#[test]
fn file_system_errors_exit_four() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.grid");
    let o = esurf(&["distance", s(&missing), "synth:sphere"]);
    assert_eq!(code(&o), 4);
    let o = esurf(&["distance", "--config", s(&dir.path().join("nope.json"))]);
    assert_eq!(code(&o), 4);
}

#[test]
fn bound_check_reports_the_bound_and_jacobians() {
    let dir = tempfile::tempdir().unwrap();
    let coeffs = dir.path().join("xv.txt");
    let mut xv = vec![0.0; 6];
    xv[0] = 0.5;
    fs::write(&coeffs, xv.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")).unwrap();
    let o = esurf(&["bound-check", s(&coeffs), "--grid", "16x17", "--t", "0.1,100", "--json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let bound = v["bound"].as_f64().unwrap();
    assert!(bound > 0.1 && bound < 100.0, "{bound}");
    assert_eq!(v["deg_bar"], 1);
    let steps = v["steps"].as_array().unwrap();
    assert_eq!(steps[0]["certified"], true);
    assert!(steps[0]["min_jacobian"].as_f64().unwrap() > 0.0);
    assert_eq!(steps[1]["certified"], false);

    fs::write(&coeffs, "1 2 3").unwrap();
    assert_eq!(code(&esurf(&["bound-check", s(&coeffs)])), 2);
}

#[test]
fn srnf_compare_prints_one_row_per_t() {
    let o = esurf(&[
        "srnf-compare",
        "synth:sphere",
        "synth:ellipsoid",
        "--grid",
        "12x13",
        "--t-list",
        "4,8",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 3, "{text}");
    assert!(text.contains("# srnf_distance"));
}

#[test]
fn mean_writes_grid_and_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mean");
    let mut args = vec![
        "mean",
        "synth:ellipsoid:c=1.2",
        "synth:ellipsoid:c=1.4",
        "synth:ellipsoid:c=1.3,a=1.1",
        "--N",
        "0",
        "--iterations",
        "3",
        "--out",
        s(&out),
    ];
    args.extend_from_slice(SMALL);
    let o = esurf(&args);
    assert!(matches!(code(&o), 0 | 3), "{}", String::from_utf8_lossy(&o.stderr));
    let (g, _) = load_surface(out.join("mean.grid")).unwrap();
    assert_eq!((g.n_theta(), g.n_phi()), (12, 13));
    assert!(out.join("mean.obj").exists());
}

#[test]
fn multires_schedule_finishes_on_the_last_level() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = esurf(&[
        "geodesic",
        "synth:sphere",
        "synth:ellipsoid",
        "--N",
        "0",
        "--multires",
        "8x9/2/1/2,12x13/3/2/3",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = read_summary(&out).unwrap();
    assert_eq!(summary.grid, [12, 13]);
    assert_eq!(summary.t_count, 3);
}
