//! End-to-end library pipelines behind the command-line tool.

use std::path::PathBuf;

use bss_core::config::{parse_kernel, parse_vol};
use bss_core::gaussmom::PowerVector;
use bss_core::harness::{run, ExperimentConfig, ExperimentReport};
use bss_core::kernels::build_covariance;
use bss_core::mpv::multipower;
use bss_core::pathsim::{read_binary, read_csv, simulate_bss, write_binary, write_csv, BssOptions};

fn bundled() -> Vec<PathBuf> {
    let dir = PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/configs"));
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "cfg"))
        .collect();
    v.sort();
    v
}

#[test]
fn readme_example_runs() {
    let kernel = parse_kernel("powerlaw:delta=-0.3").unwrap();
    let vol = parse_vol("const:1").unwrap();
    let path = simulate_bss(&kernel, &vol, 4096, 1.0, 42, &BssOptions::default()).unwrap();
    let model = build_covariance(&kernel, &Default::default()).unwrap();
    let v = multipower(path.series().unwrap(), 4096, &PowerVector::new(vec![2.0]).unwrap(), model.tau_n(4096).unwrap(), None)
        .unwrap();
    // the finite-n centering for p = 2 is 1; sd of V(2)_1 is about sqrt(2.5/4096)
    assert!((v.terminal() - 1.0).abs() < 0.15, "{}", v.terminal());
}

#[test]
fn paths_round_trip_through_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let kernel = parse_kernel("gamma:nu=0.8,lambda=1").unwrap();
    let vol = parse_vol("expfrac:H=0.75,vol_of_vol=0.5").unwrap();
    let b = simulate_bss(&kernel, &vol, 256, 2.0, 9, &BssOptions::default()).unwrap();
    let bin = dir.path().join("p.bin");
    write_binary(&b, &bin).unwrap();
    assert_eq!(read_binary(&bin).unwrap(), b);
    let csv = dir.path().join("p.csv");
    write_csv(&b, &csv).unwrap();
    let back = read_csv(&csv).unwrap();
    assert_eq!(back.n, 256);
    assert_eq!(back.len(), b.len());
    // CSV stores shortest round-trip decimal text
    assert_eq!(back.y_path, b.y_path);
}

#[test]
fn bundled_configs_parse() {
    let all = bundled();
    assert!(all.len() >= 10);
    for p in all {
        ExperimentConfig::from_file(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
}

#[test]
fn reports_round_trip_and_ignore_thread_count() {
    let text = "kind=clt\nkernel=powerlaw:delta=-0.3\npowers=1,1;2,0\nn_list=256\nreplications=120\nseed=4\n";
    let cfg = ExperimentConfig::parse(text).unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| run(&cfg)).unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| run(&cfg)).unwrap();
    assert_eq!(one.to_json().unwrap(), four.to_json().unwrap());
    let back: ExperimentReport = serde_json::from_str(&one.to_json().unwrap()).unwrap();
    assert_eq!(back, one);
    assert!(one.verdicts.iter().all(|v| v.rule == 4));
    assert!(one.rows_csv().unwrap().starts_with("n,statistic,mean,sd,se,target\n"));
}

#[test]
fn seed_changes_the_numbers() {
    let text = "kind=lln\nkernel=powerlaw:delta=-0.3\nn_list=128\nreplications=20\nseed=1\n";
    let a = run(&ExperimentConfig::parse(text).unwrap()).unwrap();
    let b = run(&ExperimentConfig::parse(&text.replace("seed=1", "seed=2")).unwrap()).unwrap();
    assert_ne!(a.rows[0].mean, b.rows[0].mean);
}
