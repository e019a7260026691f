//! End-to-end tests of the command-line interface: flag handling, exit
//! codes, output confinement and byte determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn beltrami(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beltrami"))
        .args(args)
        .current_dir(cwd)
        .env_remove("BELTRAMI_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn kernel_info_prints_constants() {
    let dir = tempfile::tempdir().unwrap();
    let out = beltrami(&["kernel-info", "--kernel", "indicator", "--dim", "2"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    // c0 = pi/4 and unit variation moment
    assert!(text.contains("c0 = 0.785398163397448"), "{text}");
    assert!(text.contains("bv_moment(d+3) = 1"), "{text}");

    let out = beltrami(&["kernel-info", "--kernel", "box", "--dim", "2"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = beltrami(&["rate", "--config", "missing.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_and_unknown_fields_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"experiment":"rate","manifold":{"name":"s2"},"surprise":true}"#).unwrap();
    let out = beltrami(&["rate", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("surprise"), "diagnostics name the field: {err}");

    fs::write(&cfg, "{ not json").unwrap();
    let out = beltrami(&["rate", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sample_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for run in ["a", "b"] {
        let out = beltrami(
            &[
                "sample", "--manifold", "s2", "--n", "100", "--seed", "7",
                "--out-dir", run,
            ],
            dir.path(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(dir.path().join("a/cloud_s2_n100_seed7.csv")).unwrap();
    let b = fs::read(dir.path().join("b/cloud_s2_n100_seed7.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn dry_run_validates_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("rate.json");
    fs::write(
        &cfg,
        r#"{
            "experiment": "rate",
            "manifold": {"name": "s2"},
            "n_grid": [512, 1024],
            "h_rule": {"constant": 1.0, "exponent": -0.16666666666666666},
            "seeds": [1, 2],
            "eval_grid": 32,
            "out_dir": "results"
        }"#,
    )
    .unwrap();
    let out = beltrami(&["rate", "--config", cfg.to_str().unwrap(), "--dry-run"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("config ok"));
    assert!(!dir.path().join("results").exists(), "dry run writes nothing");

    // window condition violation is caught by --dry-run
    let bad = dir.path().join("bad_rate.json");
    fs::write(
        &bad,
        r#"{
            "experiment": "rate",
            "manifold": {"name": "s2"},
            "n_grid": [512],
            "h_rule": {"constant": 0.02, "exponent": -0.16666666666666666},
            "seeds": [1]
        }"#,
    )
    .unwrap();
    let out = beltrami(&["rate", "--config", bad.to_str().unwrap(), "--dry-run"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("window condition"));
}

#[test]
fn rate_experiment_writes_into_out_dir_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("rate.json");
    fs::write(
        &cfg,
        r#"{
            "experiment": "rate",
            "manifold": {"name": "s2"},
            "n_grid": [256, 512],
            "h_rule": {"constant": 1.0, "exponent": -0.16666666666666666},
            "seeds": [1, 2],
            "eval_grid": 16,
            "parallelism": 2,
            "plot_script": true,
            "out_dir": "results"
        }"#,
    )
    .unwrap();
    let before = fs::read_dir(dir.path()).unwrap().count();
    let out = beltrami(&["rate", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let results = dir.path().join("results");
    assert!(results.join("rate.csv").exists());
    assert!(results.join("rate_summary.json").exists());
    assert!(results.join("rate.plt").exists());
    // nothing outside the output directory: only the config and results dir
    let after: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(after.len(), before + 1, "entries {after:?}");

    // summary echoes the resolved config and version
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(results.join("rate_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["config"]["experiment"], "rate");
    assert_eq!(summary["config"]["parallelism"], 2);
    assert!(summary["version"].is_string());
    assert!(summary["slope"].is_null() || summary["slope"]["slope"].is_number());
}

#[test]
fn parallel_degrees_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    for (name, par) in [("p1", 1), ("p4", 4)] {
        let cfg = dir.path().join(format!("{name}.json"));
        fs::write(
            &cfg,
            format!(
                r#"{{
                    "experiment": "geometry",
                    "manifold": {{"name": "s2"}},
                    "seeds": [3],
                    "mc_draws": 20000,
                    "parallelism": {par},
                    "out_dir": "{name}"
                }}"#
            ),
        )
        .unwrap();
        let out = beltrami(&["geometry", "--config", cfg.to_str().unwrap()], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        csvs.push(fs::read(dir.path().join(name).join("geometry.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn laplacian_subcommands_write_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = beltrami(
        &[
            "laplacian", "--manifold", "s2", "--n", "400", "--seed", "3", "--kernel",
            "indicator", "--h", "0.4", "--function", "coordinate:0", "--grid", "8",
            "--out-dir", "lap",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("lap/laplacian.csv")).unwrap();
    assert!(text.contains("value,operator,h_or_k,n,seed"));
    assert!(text.lines().count() > 8);

    let out = beltrami(
        &[
            "knn-laplacian", "--manifold", "torus", "--n", "400", "--seed", "3", "--k", "20",
            "--function", "cross:0,2", "--grid", "9", "--out-dir", "klap",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("klap/knn_laplacian.csv").exists());
}

#[test]
fn env_var_sets_default_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_beltrami"))
        .args(["sample", "--manifold", "s1", "--n", "10", "--seed", "1"])
        .current_dir(dir.path())
        .env("BELTRAMI_OUT_DIR", "from-env")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("from-env/cloud_s1_n10_seed1.csv").exists());
}

#[test]
fn cloud_round_trip_through_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = beltrami(
        &["sample", "--manifold", "torus", "--n", "300", "--seed", "11", "--out-dir", "c"],
        dir.path(),
    );
    assert!(out.status.success());
    let cloud = dir.path().join("c/cloud_torus_n300_seed11.csv");
    let out = beltrami(
        &[
            "laplacian", "--cloud-file", cloud.to_str().unwrap(), "--kernel", "triangular",
            "--h", "0.5", "--grid", "8", "--out-dir", "lap2",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("lap2/laplacian.csv").exists());
}
