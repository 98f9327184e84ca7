use std::path::Path;
use std::process::{Command, Output};

use bss_core::config::{parse_kernel, parse_vol};
use bss_core::pathsim::{simulate_bss, write_csv, BssOptions};

fn bss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bss")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs"))
}

fn simulate_to(path: &Path, kernel: &str, seed: &str) -> Output {
    bss(&["simulate", "--kernel", kernel, "--vol", "const:1", "--n", "1024", "--T", "1", "--seed", seed, "-o", path.to_str().unwrap()])
}

#[test]
fn simulate_writes_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("path.csv");
    let o = simulate_to(&p, "powerlaw:delta=-0.3", "42");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&p).unwrap();
    assert_eq!(text.lines().count(), 1 + 1025);
}

#[test]
fn simulate_is_reproducible_and_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("c.csv"));
    simulate_to(&a, "powerlaw:delta=-0.3", "7");
    simulate_to(&b, "powerlaw:delta=-0.3", "7");
    let lib = simulate_bss(
        &parse_kernel("powerlaw:delta=-0.3").unwrap(),
        &parse_vol("const:1").unwrap(),
        1024,
        1.0,
        7,
        &BssOptions::default(),
    )
    .unwrap();
    write_csv(&lib, &c).unwrap();
    let read = |p: &Path| std::fs::read(p).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_eq!(read(&a), read(&c));
}

#[test]
fn simulate_rejects_out_of_range_delta() {
    let dir = tempfile::tempdir().unwrap();
    let o = simulate_to(&dir.path().join("x.csv"), "powerlaw:delta=0.7", "1");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("(-1/2, 1/2)"), "{}", stderr(&o));
}

#[test]
fn seed_is_mandatory_and_unknown_flags_fail() {
    let o = bss(&["simulate", "--kernel", "powerlaw:delta=-0.3", "--n", "16", "-o", "/tmp/never.csv"]);
    assert_eq!(o.status.code(), Some(2));
    let o = bss(&["constants", "--psi", "0", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn binary_round_trip_through_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("path.bin");
    let o = bss(&["simulate", "--kernel", "fgn:alpha=1", "--n", "4096", "--seed", "3", "-o", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = bss(&["estimate", "-i", p.to_str().unwrap(), "--powers", "2", "--kernel", "fgn:alpha=1", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let vals = v["statistics"][0]["values"].as_array().unwrap();
    let terminal = vals.last().unwrap().as_f64().unwrap();
    // sd of V(2)_1 for Brownian motion is sqrt(2/4096) ≈ 0.022
    assert!((terminal - 1.0).abs() < 0.1, "{terminal}");
}

#[test]
fn estimate_reports_two_statistics_and_rvr() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("path.csv");
    simulate_to(&p, "powerlaw:delta=-0.3", "5");
    let prefix = dir.path().join("est");
    let o = bss(&[
        "estimate",
        "-i",
        p.to_str().unwrap(),
        "--powers",
        "1,1;2,0",
        "--tau",
        "auto",
        "-o",
        prefix.to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["statistics"].as_array().unwrap().len(), 2);
    assert!(v["rvr"].is_object());
    assert_eq!(v["tau_source"], "auto");
    assert!(dir.path().join("est.json").exists() && dir.path().join("est.csv").exists());
}

#[test]
fn estimate_flags_nan_rows_as_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("ext.csv");
    std::fs::write(&p, "t,Y\n0,0\n0.25,0.1\n0.5,NaN\n0.75,0.2\n1,0.3\n").unwrap();
    let o = bss(&["estimate", "-i", p.to_str().unwrap(), "--tau", "1"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let o = bss(&["estimate", "-i", p.to_str().unwrap(), "--tau", "1", "--powers", "-1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn constants_match_closed_forms() {
    let o = bss(&["constants", "--psi", "0", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["psi"]["value"].as_f64().unwrap(), 1.0);

    let o = bss(&["constants", "--rho", "alpha=1.5", "jmax=3", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let r: Vec<f64> = v["rho"]["values"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let direct = |j: f64| 0.5 * ((j + 1.0).powf(1.5) - 2.0 * j.powf(1.5) + (j - 1.0).powf(1.5));
    for (j, rj) in r.iter().enumerate() {
        assert!((rj - direct(j as f64 + 1.0)).abs() < 1e-12);
    }

    let o = bss(&["constants", "--A", "powers=1,1", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let two_pi = 2.0 / std::f64::consts::PI;
    let expect = 1.0 + 2.0 * two_pi - 3.0 * two_pi * two_pi;
    assert!((v["A"]["value"].as_f64().unwrap() - expect).abs() < 1e-10);
}

#[test]
fn constants_reject_alpha_outside_validity() {
    let o = bss(&["constants", "--beta", "alpha=1.6", "powers=2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("only converges for alpha in (0, 3/2)"), "{}", stderr(&o));
}

#[test]
fn experiment_config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "kind=clt\nkernel=powerlaw:delta=-0.3\nn_list=256\nreplications=10\nseed=1\n").unwrap();
    let o = bss(&["experiment", "-c", cfg.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("100"));
}

#[test]
fn bundled_degenerate_config_reports_two_term_check() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let cfg = configs().join("degenerate_exp.cfg");
    let o = bss(&["experiment", "-c", cfg.to_str().unwrap(), "--seed", "11", "--out-json", json.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("two-term limit"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["verdicts"][0]["rule"], 6);
}

#[test]
fn bundled_lln_config_passes() {
    let cfg = configs().join("lln_powerlaw.cfg");
    let o = bss(&["experiment", "-c", cfg.to_str().unwrap(), "--seed", "20240601"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn failed_verdict_exits_five() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("strict.cfg");
    std::fs::write(
        &cfg,
        "kind=lln\nkernel=powerlaw:delta=-0.3\nn_list=64\nreplications=10\nseed=1\nthreshold.lln_error=1e-9\n",
    )
    .unwrap();
    let o = bss(&["experiment", "-c", cfg.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn conditions_regions() {
    let run = |extra: &[&str]| {
        let mut args = vec!["conditions", "--json"];
        args.extend_from_slice(extra);
        let o = bss(&args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        serde_json::from_str::<serde_json::Value>(&stdout(&o)).unwrap()
    };
    let v = run(&["--kernel", "powerlaw:delta=-0.3", "--powers", "2", "--gamma", "0.6"]);
    assert_eq!(v["clt_ok"], true);
    let v = run(&["--kernel", "powerlaw:delta=-0.3", "--powers", "0.75,0.75", "--gamma", "0.6"]);
    assert_eq!(v["clt_ok"], false);
    let v = run(&["--kernel", "gamma:nu=1.6,lambda=1"]);
    assert!((v["alpha"].as_f64().unwrap() - 2.2).abs() < 1e-12);
    assert_eq!(v["lln_ok"], false);
}
