use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use robcal_cli::args::MethodArg;
use robcal_cli::commands::{calibrate, render_calibration};
use robcal_cli::report::{emit_report, render_report, render_trace};
use robcal_core::estimator::{irls, ols_estimate, IrlsOptions};
use robcal_core::io::{bundled_model, read_measurements, read_noise};
use robcal_core::kinematics::Axis;
use robcal_core::nalgebra::{DMatrix, DVector};
use robcal_core::regressor::{RowTag, StackedSystem};
use tempfile::TempDir;

fn robcal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robcal"))
        .args(args)
        .env_remove("ROBCAL_OUT")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = robcal(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Simulated study in `dir/sim`.
fn simulated(dir: &Path, seed: &str) -> PathBuf {
    let sim = dir.join("sim");
    ok(&["simulate", "--seed", seed, "--out", path(&sim)]);
    sim
}

fn data_rows(p: &Path) -> Vec<String> {
    fs::read_to_string(p).unwrap().lines().skip(1).map(str::to_string).collect()
}

#[test]
fn simulate_counts_records() {
    let dir = TempDir::new().unwrap();
    let sim = simulated(dir.path(), "1");
    assert_eq!(data_rows(&sim.join("measurements.csv")).len(), 270);
    assert_eq!(data_rows(&sim.join("truth.csv")).len(), 9);
    assert_eq!(data_rows(&sim.join("noise.csv")).len(), 15);

    let small = dir.path().join("small");
    ok(&["simulate", "--repetitions", "1", "--markers", "1", "--out", path(&small)]);
    assert_eq!(data_rows(&small.join("measurements.csv")).len(), 15);
}

#[test]
fn output_directory_from_environment() {
    let dir = TempDir::new().unwrap();
    let target = dir.path().join("from_env");
    let out = Command::new(env!("CARGO_BIN_EXE_robcal"))
        .args(["simulate", "--markers", "1"])
        .env("ROBCAL_OUT", &target)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(target.join("measurements.csv").exists());
}

#[test]
fn calibrate_matches_in_process_estimates_bit_exactly() {
    let dir = TempDir::new().unwrap();
    let sim = simulated(dir.path(), "3");
    let out = dir.path().join("cal");
    let meas = sim.join("measurements.csv");
    let noise = sim.join("noise.csv");
    ok(&[
        "calibrate",
        "--measurements",
        path(&meas),
        "--noise",
        path(&noise),
        "--method",
        "irls",
        "--out",
        path(&out),
    ]);

    let mf = bundled_model();
    let records = read_measurements(&meas, 6).unwrap();
    let nm = read_noise(&noise).unwrap();
    let cal = calibrate(&mf, &records, Some(&nm), MethodArg::Irls, &IrlsOptions::default()).unwrap();
    let weighted = cal.weighted.as_ref().unwrap();

    let rows = data_rows(&out.join("params.csv"));
    assert_eq!(rows.len(), 9);
    for (i, row) in rows.iter().enumerate() {
        let cols: Vec<&str> = row.split(',').collect();
        let v: Vec<f64> = cols[2..6].iter().map(|c| c.parse().unwrap()).collect();
        assert_eq!(v[0].to_bits(), cal.ols.x_hat[i].to_bits());
        assert_eq!(v[1].to_bits(), cal.ols.ci3[i].to_bits());
        assert_eq!(v[2].to_bits(), weighted.x_hat[i].to_bits());
        assert_eq!(v[3].to_bits(), weighted.ci3[i].to_bits());
    }
    for f in render_calibration(&cal).unwrap() {
        assert_eq!(fs::read_to_string(out.join(&f.name)).unwrap(), f.contents, "{}", f.name);
    }
}

#[test]
fn weighted_fit_narrows_every_interval() {
    let dir = TempDir::new().unwrap();
    let sim = simulated(dir.path(), "4");
    let out = dir.path().join("cal");
    ok(&[
        "calibrate",
        "--measurements",
        path(&sim.join("measurements.csv")),
        "--noise",
        path(&sim.join("noise.csv")),
        "--method",
        "wls",
        "--out",
        path(&out),
    ]);
    let rows = data_rows(&out.join("params.csv"));
    for row in rows {
        let ratio: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!(ratio > 1.0, "{row}");
    }
    assert!(fs::read_to_string(out.join("params.txt")).unwrap().contains("CI_OLS / CI_method"));
}

#[test]
fn malformed_row_names_its_line_and_writes_nothing() {
    let dir = TempDir::new().unwrap();
    let sim = simulated(dir.path(), "5");
    let text = fs::read_to_string(sim.join("measurements.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    lines[6] = lines[6].replacen(",4,", ",4,x", 1);
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, lines.join("\n")).unwrap();

    let out_dir = dir.path().join("out");
    let out = robcal(&["calibrate", "--measurements", path(&bad), "--out", path(&out_dir)]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    assert!(stderr.starts_with("error[E_PARSE]: "), "{stderr}");
    assert!(stderr.contains("bad.csv:7:"), "{stderr}");
    assert!(!out_dir.exists());
}

#[test]
fn error_paths_have_codes() {
    let dir = TempDir::new().unwrap();
    let sim = simulated(dir.path(), "6");
    let meas = sim.join("measurements.csv");

    let missing = robcal(&["calibrate", "--measurements", path(&dir.path().join("none.csv"))]);
    assert_eq!(missing.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error[E_IO]"));

    let partial = dir.path().join("partial_noise.csv");
    let noise = fs::read_to_string(sim.join("noise.csv")).unwrap();
    fs::write(&partial, noise.lines().take(10).collect::<Vec<_>>().join("\n")).unwrap();
    let out = robcal(&["calibrate", "--measurements", path(&meas), "--noise", path(&partial), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(6));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[E_NOISE]"));

    // a single configuration cannot separate the bucketed compliances
    let text = fs::read_to_string(&meas).unwrap();
    let one: Vec<&str> = text.lines().take(19).collect();
    let single = dir.path().join("single.csv");
    fs::write(&single, one.join("\n")).unwrap();
    let out = robcal(&["calibrate", "--measurements", path(&single), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(7), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[E_RANK]"));

    let out = robcal(&["calibrate", "--measurements", path(&meas), "--sigma0", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = robcal(&["calibrate", "--method", "lasso", "--measurements", path(&meas)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&out.stderr).lines().count(), 1);
}

#[test]
fn reruns_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [a.path(), b.path()] {
        let sim = simulated(dir, "7");
        ok(&[
            "calibrate",
            "--measurements",
            path(&sim.join("measurements.csv")),
            "--method",
            "irls",
            "--out",
            path(&dir.join("cal")),
        ]);
        ok(&["compare", "--seed", "7", "--trials", "100", "--out", path(&dir.join("cmp"))]);
    }
    for rel in [
        "sim/measurements.csv",
        "sim/noise.csv",
        "sim/truth.csv",
        "cal/params.txt",
        "cal/params.csv",
        "cal/trace.csv",
        "cal/residuals.csv",
        "cmp/compare.txt",
        "cmp/compare.csv",
        "cmp/compare_trace.csv",
    ] {
        assert_eq!(fs::read(a.path().join(rel)).unwrap(), fs::read(b.path().join(rel)).unwrap(), "{rel}");
    }
}

fn one_parameter_system() -> StackedSystem {
    // two configurations, two repetitions of an (x, y, z) observation each
    let tags = (0..12)
        .map(|i| RowTag {
            config: 1 + i / 6,
            marker: 0,
            repetition: 1 + (i / 3) % 2,
            axis: Axis::ALL[i as usize % 3],
        })
        .collect();
    let b = [1.0, 2.0, 1.0, 0.5, 1.5, 0.8, 1.2, 0.7, 2.0, 1.0, 0.6, 1.4];
    let noise = [0.02, -0.05, 0.01, 0.04, -0.03, 0.0, 0.3, -0.2, 0.1, -0.4, 0.25, -0.15];
    let sigma: Vec<f64> = (0..12).map(|i| if i < 6 { 0.05 } else { 0.3 }).collect();
    StackedSystem::new(
        DMatrix::from_column_slice(12, 1, &b),
        DVector::from_iterator(12, b.iter().zip(noise).map(|(b, n)| 1.1 * b + n)),
        DVector::from_vec(sigma),
        tags,
        vec!["k".into()],
    )
    .unwrap()
}

#[test]
fn single_parameter_report() {
    let dir = TempDir::new().unwrap();
    let r = ols_estimate(&one_parameter_system()).unwrap();
    let files = emit_report(&[&r], dir.path()).unwrap();
    assert_eq!(files.len(), 2);
    assert_eq!(data_rows(&dir.path().join("params.csv")).len(), 1);
    let txt = fs::read_to_string(dir.path().join("params.txt")).unwrap();
    assert!(txt.contains("k") && !txt.contains("ratio"));
}

#[test]
fn ratio_section_requires_both_methods() {
    let sys = one_parameter_system();
    let ols = ols_estimate(&sys).unwrap();
    let opts = IrlsOptions {
        sigma0: 0.1,
        ..Default::default()
    };
    let rw = irls(&sys, &opts).unwrap();
    let has_ratio = |files: &[robcal_cli::output::OutputFile]| {
        files.iter().all(|f| f.contents.contains("ratio"))
    };
    assert!(has_ratio(&render_report(&[&ols, &rw]).unwrap()));
    assert!(!render_report(&[&ols]).unwrap().iter().any(|f| f.contents.contains("ratio")));
    assert!(!render_report(&[&rw]).unwrap().iter().any(|f| f.contents.contains("ratio")));
}

#[test]
fn ten_pass_trace_has_ten_rows() {
    let mf = bundled_model();
    let mut design =
        robcal_core::simulator::StudyDesign::kr270(mf.compliance.clone().unwrap(), mf.load_marker.unwrap());
    design.seed = 9;
    let records = robcal_core::simulator::simulate_measurements(&design, &mf.model).unwrap();
    let opts = IrlsOptions {
        max_iter: 10,
        rel_tol: 0.0,
        ..Default::default()
    };
    let cal = calibrate(&mf, &records, None, MethodArg::Irls, &opts).unwrap();
    let trace = render_trace(cal.weighted.as_ref().unwrap());
    assert_eq!(trace.name, "trace.csv");
    assert_eq!(trace.contents.lines().count(), 11);
    assert!(trace.contents.lines().next().unwrap().starts_with("iteration,max_rel_change,k2_1,k2_1_ci3"));
}
