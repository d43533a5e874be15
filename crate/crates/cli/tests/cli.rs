use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

fn sfbm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfbm"))
        .args(args)
        .env("SFBM_OUT_DIR", dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_column(path: &Path, col: usize) -> Vec<f64> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn spectrum_writes_analytic_values_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("s.json");
    let args = ["spectrum", "--hurst", "0.5", "--lmax", "2", "--out", json.to_str().unwrap()];
    let o = sfbm(dir.path(), &args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = dir.path().join("s.csv");
    let first = std::fs::read(&csv).unwrap();
    let header = String::from_utf8_lossy(&first).lines().next().unwrap().to_string();
    assert_eq!(header, "ell,d_ell,abs_d_ell,ell_scaled");
    let d = csv_column(&csv, 1);
    assert!((d[0] - PI).abs() <= 1e-8);
    assert!((d[1] + PI / 4.0).abs() <= 1e-8);

    // The CSV carries the cache values without loss.
    let cache: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    for (i, v) in d.iter().enumerate() {
        assert_eq!(cache["values"][i].as_f64().unwrap().to_bits(), v.to_bits());
    }

    assert_eq!(code(&sfbm(dir.path(), &args)), 0);
    assert_eq!(std::fs::read(&csv).unwrap(), first);
    assert!(dir.path().join("manifest_spectrum.json").exists());
}

#[test]
fn spectrum_defaults_to_out_dir_and_rejects_bad_hurst() {
    let dir = tempfile::tempdir().unwrap();
    let o = sfbm(dir.path(), &["spectrum", "--hurst", "0.3", "--lmax", "4", "--method", "mehler"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert!(names.iter().any(|n| n.starts_with("spectrum_H0.3_L4_") && n.ends_with("_mehler_v1.json")), "{names:?}");

    let o = sfbm(dir.path(), &["spectrum", "--hurst", "0.6", "--lmax", "4"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("(0, 1/2]"), "{}", stderr(&o));
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let o = sfbm(dir.path(), &["verify", "--suite", "harmonics", "--report", report.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["all_passed"], true);
    assert!(r["checks"][0]["measured"].as_f64().unwrap() <= 1e-9);

    assert_eq!(code(&sfbm(dir.path(), &["verify", "--suite", "bogus"])), 2);
    assert_eq!(code(&sfbm(dir.path(), &["verify", "--suite", "harmonics", "--hurst-set", "0.7"])), 2);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"format_version\": 1, \"values\": [").unwrap();
    let o = sfbm(dir.path(), &["verify", "--suite", "harmonics", "--spectrum", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("integrity"), "{}", stderr(&o));
}

#[test]
fn simulate_is_reproducible_and_pinned() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let args = ["simulate", "--hurst", "0.3", "--lmax", "24", "--samples", "1", "--grid", "fibonacci:100", "--seed", "7"];
        let o = sfbm(dir.path(), &[&args[..], &["--out", out.to_str().unwrap()]].concat());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    assert_eq!(
        std::fs::read(a.join("realization_00000.csv")).unwrap(),
        std::fs::read(b.join("realization_00000.csv")).unwrap()
    );
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("manifest_simulate.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 7);
    assert_eq!(m["n_samples"], 1);
    assert!(Path::new(m["spectrum_file"].as_str().unwrap()).exists());

    let pts = dir.path().join("pts.csv");
    std::fs::write(&pts, "theta,phi\n0,0\n1.0,2.0\n").unwrap();
    let o = sfbm(
        dir.path(),
        &["simulate", "--hurst", "0.25", "--lmax", "24", "--samples", "3", "--points", pts.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for i in 0..3 {
        let v = csv_column(&dir.path().join(format!("realization_{i:05}.csv")), 2);
        assert!(v[0].abs() <= 1e-10);
        assert!(v[1] != 0.0);
    }

    let o = sfbm(dir.path(), &["simulate", "--hurst", "0.25", "--points", "/nonexistent/pts.csv"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn slnd_contract() {
    let dir = tempfile::tempdir().unwrap();
    let o = sfbm(dir.path(), &["slnd", "--hurst", "0.3", "--trials", "1", "--nmax", "0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("slnd.json")).unwrap()).unwrap();
    assert!((r["min_ratio"].as_f64().unwrap() - 1.0).abs() <= 1e-12);

    let runs: Vec<f64> = (0..2)
        .map(|_| {
            let o = sfbm(dir.path(), &["slnd", "--hurst", "0.4", "--seed", "3"]);
            assert_eq!(code(&o), 0, "{}", stderr(&o));
            let r: serde_json::Value =
                serde_json::from_str(&std::fs::read_to_string(dir.path().join("slnd.json")).unwrap()).unwrap();
            assert_eq!(r["trials"], 200);
            r["min_ratio"].as_f64().unwrap()
        })
        .collect();
    assert_eq!(runs[0].to_bits(), runs[1].to_bits());
    assert!(runs[0] > 0.0);
    assert_eq!(std::fs::read_to_string(dir.path().join("slnd.csv")).unwrap().lines().count(), 201);

    assert_eq!(code(&sfbm(dir.path(), &["slnd", "--hurst", "0.4", "--eps-min", "0"])), 2);
    assert_eq!(code(&sfbm(dir.path(), &["slnd", "--hurst", "0.4", "--eps-min", "-1"])), 2);
}
