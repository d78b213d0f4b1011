use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn entperc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entperc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_rectangular(path: &Path) {
    // the reader rejects rows whose length differs from the header
    let mut reader = csv::Reader::from_path(path).unwrap();
    let width = reader.headers().unwrap().len();
    for record in reader.records() {
        assert_eq!(record.expect("rectangular row").len(), width, "{}", path.display());
    }
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn dist_stats_table_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = entperc(&["dist-stats", "--reproduce-table1", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("dist_stats.json")).unwrap()).unwrap();
    let rows = json["rows"].as_array().unwrap();
    let haar = rows.iter().find(|r| r["kind"] == "haar").unwrap();
    assert!((haar["stats"]["expected_min"].as_f64().unwrap() - 1.0 / 7.0).abs() < 1e-9);
    let bern = rows.iter().find(|r| r["kind"] == "bernoulli").unwrap();
    assert!((bern["stats"]["expected_min"].as_f64().unwrap() - 0.09).abs() < 1e-12);
    assert!(bern["stats"]["shape_constant"].is_null());
    for r in rows {
        assert!(r["max_abs_deviation"].as_f64().unwrap() < 1e-8, "{}", r["label"]);
    }
}

#[test]
fn point_mass_has_no_penalty() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"distributions":[{"kind":"empirical","params":{"samples":[0.7]}}]}"#).unwrap();
    let out = entperc(&[
        "dist-stats",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("dist_stats.json")).unwrap()).unwrap();
    assert_eq!(json["rows"][0]["stats"]["penalty"].as_f64(), Some(0.0));
}

#[test]
fn same_config_and_seed_give_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let d = dir.path().to_str().unwrap();
        let runs: [&[&str]; 3] = [
            &["dist-stats", "--reproduce-table1", "--out", d],
            &["percolate", "--size", "16", "--trials", "300", "--seed", "5", "--compare-shapes", "--out", d],
            &["qswap-penalty", "--size", "8", "--trials", "20", "--seed", "3", "--out", d],
        ];
        for args in runs {
            let out = entperc(args);
            assert!(out.status.success(), "{:?}: {}", args, String::from_utf8_lossy(&out.stderr));
        }
    }
    let (fa, fb) = (read_dir_sorted(a.path()), read_dir_sorted(b.path()));
    assert_eq!(fa.len(), 5);
    assert_eq!(fa, fb);
    for (name, _) in &fa {
        if name.ends_with(".csv") {
            assert_rectangular(&a.path().join(name));
        }
    }
}

#[test]
fn pdl_outputs_for_small_budget() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"pdl_models":[{"kind":"maxwellian","mean_db":2.35},
                          {"kind":"concatenated-link","elements_db":[0.8,1.2,1.4,1.0,0.7]},
                          {"kind":"concatenated-link","elements_db":[0.0]}],
            "grid":{"points":128}}"#,
    )
    .unwrap();
    let d = dir.path().to_str().unwrap();
    let out = entperc(&["pdl", "--config", cfg.to_str().unwrap(), "--trials", "20000", "--out", d]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("pdl_summary.json")).unwrap()).unwrap();
    let models = summary["models"].as_array().unwrap();
    assert_eq!(models[0]["density"], "analytic");
    assert!((models[0]["grid_density_integral"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    assert_eq!(models[1]["density"], "kernel-estimate");
    assert_eq!(models[2]["density"], "point-mass");
    assert_eq!(models[2]["mean_scp"].as_f64(), Some(1.0));
    // P ≡ 0 puts the whole SCP mass at x = 1
    let cdf = fs::read_to_string(dir.path().join("scp_cdf_model2_concatenated-link.csv")).unwrap();
    assert!(cdf.lines().skip(1).all(|l| l.ends_with(",0")));
    let est = fs::read_to_string(dir.path().join("scp_density_model1_concatenated-link.csv")).unwrap();
    assert!(est.starts_with("x,f_X_estimate\n"));
    for f in fs::read_dir(dir.path()).unwrap() {
        let p = f.unwrap().path();
        if p.extension().is_some_and(|e| e == "csv") {
            assert_rectangular(&p);
        }
    }
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"lattice":{"kind":"triangular","size":12},"trials":50,"seed":1,"mean":0.3}"#).unwrap();
    let d = dir.path().to_str().unwrap();
    let out = entperc(&["percolate", "--config", cfg.to_str().unwrap(), "--trials", "80", "--size", "10", "--out", d]);
    assert!(out.status.success());
    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("percolate.json")).unwrap()).unwrap();
    assert_eq!(json["trials"], 80);
    assert_eq!(json["seed"], 1);
    assert_eq!(json["details"]["lattice"], "triangular(L=10, open)");
    assert_eq!(json["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn rqep_reports_effective_bond_mean() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"distribution":{"kind":"haar"},"mode":"rqep","lattice":{"kind":"honeycomb","size":16}}"#).unwrap();
    let d = dir.path().to_str().unwrap();
    let out = entperc(&["percolate", "--config", cfg.to_str().unwrap(), "--trials", "300", "--out", d]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("percolate.json")).unwrap()).unwrap();
    let m = &json["effective_bond_mean"];
    let (mean, se) = (m["mean"].as_f64().unwrap(), m["stderr"].as_f64().unwrap());
    assert!((mean - 1.0 / 7.0).abs() <= 4.0 * se);
}

#[test]
fn sweep_and_threshold_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"sweep":{"start":0.3,"stop":0.7,"points":5}}"#).unwrap();
    let out = entperc(&["percolate", "--config", cfg.to_str().unwrap(), "--size", "16", "--trials", "200", "--out", d]);
    assert!(out.status.success());
    let curve = fs::read_to_string(dir.path().join("percolate_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 6);
    assert!(curve.starts_with("x,y,yerr\n"));

    let out = entperc(&["percolate", "--threshold", "--size", "16", "--trials", "400", "--out", d]);
    assert!(out.status.success());
    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("threshold.json")).unwrap()).unwrap();
    assert!((json["estimate"].as_f64().unwrap() - 0.5).abs() < 0.05);
    assert_eq!(json["exact_threshold"].as_f64(), Some(0.5));
    assert_rectangular(&dir.path().join("threshold_points.csv"));
}

#[test]
fn bad_input_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"distributions":[{"kind":"bernoulli","params":{"mean":1.5}}]}"#).unwrap();
    let cases: [&[&str]; 6] = [
        &["dist-stats", "--out", d],
        &["dist-stats", "--config", cfg.to_str().unwrap(), "--out", d],
        &["dist-stats", "--config", "/nonexistent/cfg.json"],
        &["percolate", "--mode", "rqep", "--out", d],
        &["percolate", "--lattice", "kagome"],
        &["percolate", "--trials", "0", "--out", d],
    ];
    for args in cases {
        let out = entperc(args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(!out.stderr.is_empty());
    }
}
