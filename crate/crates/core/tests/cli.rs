use std::fs;
use std::path::{Path, PathBuf};

use bbwaves::cli::{execute, load_config, main_with_args, read_profile, ExperimentKind, RunOptions};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(kind: ExperimentKind, cfg: &Path, overrides: &[&str], out: &Path) -> bbwaves::cli::RunReport {
    let ov: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    let config = load_config(Some(cfg), &ov).unwrap();
    execute(kind, config, &RunOptions { out: Some(out.to_path_buf()), jobs: 1, quiet: true }).unwrap()
}

fn cli(args: &[&str]) -> i32 {
    let mut all = vec!["bbwaves"];
    all.extend_from_slice(args);
    main_with_args(all)
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "csv") {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn every_fixture_parses_and_resolves() {
    for entry in fs::read_dir(fixture("")).unwrap() {
        let p = entry.unwrap().path();
        let name = p.file_name().unwrap().to_string_lossy().to_string();
        if name == "classification_table.json" {
            continue;
        }
        let cfg = load_config(Some(&p), &[]).unwrap_or_else(|e| panic!("{name}: {e}"));
        let kind = cfg.experiment.unwrap_or_else(|| panic!("{name} names no experiment"));
        bbwaves::cli::resolve(cfg, kind).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"grid\": {\"half_length\": 1.0, \"n_modes\": 8,}}").unwrap();
    assert_eq!(cli(&["evolve", "--config", bad.to_str().unwrap(), "--out", out, "--quiet"]), 2);
    fs::write(&bad, "{\"grid\": {\"half_length\": 1.0, \"n_modes\": 8, \"extra\": 1}}").unwrap();
    assert_eq!(cli(&["evolve", "--config", bad.to_str().unwrap(), "--out", out, "--quiet"]), 2);
    let both = fixture("exact_benchmark.json");
    let both = both.to_str().unwrap();
    assert_eq!(
        cli(&["exact", "--config", both, "--override", "physical.gamma=0.5", "--out", out, "--quiet"]),
        2
    );
    assert_eq!(cli(&["solitary", "--config", both, "--out", out, "--quiet"]), 2);
    assert_eq!(cli(&["exact", "--config", both, "--override", "grid.n_modes=7", "--out", out, "--quiet"]), 2);
    assert_eq!(cli(&["nonsense"]), 2);
    assert_eq!(cli(&["exact", "--config", "/nonexistent/x.json", "--quiet"]), 2);
}

#[test]
fn zero_guess_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("solitary_a3_elevation.json");
    let code = cli(&[
        "solitary",
        "--config",
        cfg.to_str().unwrap(),
        "--override",
        "wave.guess={\"kind\":\"sech2\",\"amplitude\":0.0,\"width\":1.0}",
        "--out",
        dir.path().to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(code, 2);
}

#[test]
fn non_convergence_exits_with_3_and_keeps_history() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("solitary_a3_elevation.json");
    let code = cli(&[
        "solitary",
        "--config",
        cfg.to_str().unwrap(),
        "--override",
        "wave.petviashvili.max_iters=4",
        "--override",
        "grid.n_modes=1024",
        "--out",
        dir.path().to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(code, 3);
    assert!(dir.path().join("residuals.csv").exists());
    assert!(dir.path().join("profile_partial.csv").exists());
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["exit_code"], 3);
}

#[test]
fn blow_up_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"quadruple": {"a": -0.3333333333333333, "b": 0.3333333333333333, "c": -0.6666666666666666,
                          "d": 1.1835978835978835, "gamma": 0.5, "delta": 0.9},
            "grid": {"half_length": 20.0, "n_modes": 256},
            "stepper": {"dt": 0.05, "final_time": 50.0},
            "initial": {"kind": "gaussian", "amplitude": 500.0, "tau": 1.0}}"#,
    )
    .unwrap();
    let code = cli(&["evolve", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap(), "--quiet"]);
    assert_eq!(code, 4);
    assert!(dir.path().join("o/final_state.csv").exists());
    assert!(dir.path().join("o/invariants.csv").exists());
}

#[test]
fn speed_offset_resolves_and_echo_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("classify_a3.json");
    let first = run(ExperimentKind::Classify, &cfg, &["wave.speed_offset=0.1"], &dir.path().join("a"));
    let c_s = first.config.wave.as_ref().unwrap().speed.unwrap();
    assert!((c_s - 0.6976).abs() < 1e-4, "{c_s}");
    assert!((first.c_sound - 0.597614).abs() < 1e-6);

    let cfg = fixture("solitary_a4_slow.json");
    let a = run(ExperimentKind::Solitary, &cfg, &["grid.n_modes=1024", "grid.half_length=128"], &dir.path().join("s1"));
    let echo = dir.path().join("s1/config.json");
    let b = run(ExperimentKind::Solitary, &echo, &[], &dir.path().join("s2"));
    assert_eq!(a.config, b.config);
    let fa = csv_files(&dir.path().join("s1"));
    let fb = csv_files(&dir.path().join("s2"));
    assert!(!fa.is_empty());
    assert_eq!(fa, fb);
}

#[test]
fn evolve_is_deterministic_and_reloads_its_profile() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("solitary_a3_elevation.json");
    let sol = run(ExperimentKind::Solitary, &cfg, &["grid.n_modes=1024", "grid.half_length=64"], &dir.path().join("w"));
    for f in &sol.files {
        assert!(fs::metadata(dir.path().join("w").join(f)).unwrap().len() > 0, "{f}");
    }
    let profile = dir.path().join("w/profile.csv");
    let p = read_profile(&profile).unwrap();
    assert_eq!(p.meta.n_modes, 1024);

    let evolve_cfg = dir.path().join("evolve.json");
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("w/config.json")).unwrap()).unwrap();
    v["experiment"] = "evolve".into();
    v["stepper"] = serde_json::json!({"dt": 0.02, "final_time": 1.0});
    v["initial"] = serde_json::json!({"kind": "profile", "path": profile});
    v["output"] = serde_json::json!({"snapshot_interval": 0.5});
    fs::write(&evolve_cfg, serde_json::to_string(&v).unwrap()).unwrap();
    let r1 = run(ExperimentKind::Evolve, &evolve_cfg, &[], &dir.path().join("e1"));
    let r2 = run(ExperimentKind::Evolve, &evolve_cfg, &[], &dir.path().join("e2"));
    let f1 = csv_files(&dir.path().join("e1"));
    assert_eq!(f1, csv_files(&dir.path().join("e2")));
    assert!(f1.iter().any(|(n, _)| n.starts_with("snapshots")));
    for f in &r1.files {
        assert!(fs::metadata(dir.path().join("e1").join(f)).unwrap().len() > 0, "{f}");
    }
    let peaks = &r2.summary["peaks"][0];
    let rel = peaks["relative_amplitude_change"].as_f64().unwrap();
    assert!(rel.abs() < 1e-6, "{rel}");
    let speed = peaks["relative_speed_change"].as_f64().unwrap();
    assert!(speed.abs() < 1e-3, "{speed}");
}

#[test]
fn left_moving_wave_mirrors_right_moving_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("collide_headon_symmetric.json");
    let r = run(
        ExperimentKind::Collide,
        &cfg,
        &["grid.n_modes=1024", "grid.half_length=128", "stepper.final_time=2", "stepper.dt=0.02"],
        &dir.path().join("c"),
    );
    let peaks = r.summary["peaks"].as_array().unwrap();
    assert_eq!(peaks.len(), 2);
    let x0 = peaks[0]["final_location"].as_f64().unwrap();
    let x1 = peaks[1]["final_location"].as_f64().unwrap();
    assert!((x0 + x1).abs() < 1e-8, "{x0} {x1}");
    let s0 = peaks[0]["mean_speed"].as_f64().unwrap();
    let s1 = peaks[1]["mean_speed"].as_f64().unwrap();
    assert!(s0 > 1.0 && (s0 + s1).abs() < 1e-8);
}

#[test]
fn warnings_are_raised_by_their_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let inconsistent = run(ExperimentKind::Exact, &fixture("exact_benchmark.json"), &[], &dir.path().join("a"));
    assert!(inconsistent.warnings.iter().any(|w| w.contains("consistency residual")), "{:?}", inconsistent.warnings);
    let wrap = run(ExperimentKind::Exact, &fixture("exact_wrapped.json"), &[], &dir.path().join("b"));
    assert!(wrap.warnings.iter().any(|w| w.contains("decay")), "{:?}", wrap.warnings);
    let cfl = run(
        ExperimentKind::Convergence,
        &fixture("convergence_table.json"),
        &["stepper.final_time=0.025", "convergence.dts=[0.025]"],
        &dir.path().join("c"),
    );
    assert!(cfl.warnings.iter().any(|w| w.contains("CFL")), "{:?}", cfl.warnings);
    let quiet = run(ExperimentKind::Solitary, &fixture("solitary_a6_slow.json"), &["grid.n_modes=2048"], &dir.path().join("d"));
    assert!(quiet.warnings.is_empty(), "{:?}", quiet.warnings);
}

#[test]
fn single_dt_convergence_has_empty_rates() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(
        ExperimentKind::Convergence,
        &fixture("convergence_ci.json"),
        &["stepper.final_time=0.5", "convergence.dts=[0.05]", "grid.n_modes=512"],
        &dir.path().join("c"),
    );
    assert!(r.summary["rows"][0]["rate_zeta"].is_null());
    let text = fs::read_to_string(dir.path().join("c/convergence.csv")).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[6], "");
}

#[test]
fn derive_classify_and_dispersion_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let d = run(ExperimentKind::DeriveParams, &fixture("derive_params.json"), &[], &dir.path().join("d"));
    assert!(d.classification["consistency_residual"].as_f64().unwrap().abs() < 1e-14);
    let c = run(ExperimentKind::Classify, &fixture("classify_a3.json"), &[], &dir.path().join("c"));
    assert_eq!(c.summary["classification"]["nft"]["nft_case"], "A3");
    let p = run(ExperimentKind::Dispersion, &fixture("dispersion_a3.json"), &[], &dir.path().join("p"));
    assert_eq!(p.summary["phi_at_zero"].as_f64().unwrap(), 1.0);
    let rows = fs::read_to_string(dir.path().join("p/dispersion.csv")).unwrap().lines().count();
    assert_eq!(rows, 202);
}
