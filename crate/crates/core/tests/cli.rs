use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rnfilter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rnfilter"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_is_deterministic() {
    let args = ["simulate", "--network", "bistable", "--t-end", "3", "--seed", "7"];
    let a = rnfilter(&args);
    let b = rnfilter(&args);
    assert_eq!(a.status.code(), Some(0));
    assert!(a.stdout.starts_with(b"t,x1\n"));
    assert_eq!(a.stdout, b.stdout);
    let c = rnfilter(&["simulate", "--network", "bistable", "--t-end", "3", "--seed", "8"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn simulate_observe_filter_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("path.csv");
    let obs = dir.path().join("obs.csv");
    let trail = dir.path().join("gpf.csv");
    let net = configs().join("limitcycle.net");
    let out = rnfilter(&[
        "simulate",
        "--network",
        s(&net),
        "--t-end",
        "2",
        "--seed",
        "3",
        "--out",
        s(&path),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = rnfilter(&[
        "observe",
        "--path",
        s(&path),
        "--dt",
        "0.5",
        "--v",
        "5000",
        "--seed",
        "4",
        "--out",
        s(&obs),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let obs_text = std::fs::read_to_string(&obs).unwrap();
    assert_eq!(obs_text.lines().count(), 1 + 4);
    let out = rnfilter(&[
        "filter",
        "--kind",
        "gpf",
        "--network",
        s(&net),
        "--obs",
        s(&obs),
        "--v",
        "5000",
        "--t-end",
        "2",
        "--out",
        s(&trail),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&trail).unwrap();
    assert!(text.starts_with("t,map_1,map_2,map_3,param_1,"));
    assert_eq!(text.lines().count(), 1 + 201);
}

#[test]
fn qpf_on_the_oscillator_is_a_usage_error() {
    let net = configs().join("limitcycle.net");
    let out = rnfilter(&[
        "filter",
        "--kind",
        "qpf",
        "--network",
        s(&net),
        "--obs",
        "missing.csv",
        "--v",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("univariate only"));
}

#[test]
fn usage_errors() {
    assert_eq!(rnfilter(&["teleport"]).status.code(), Some(1));
    assert_eq!(
        rnfilter(&["simulate", "--network", "bistable", "--t-end", "1", "--bogus"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        rnfilter(&["simulate", "--network", "nowhere.net", "--t-end", "1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        rnfilter(&["experiment", "--config", "nowhere.cfg", "--out", "x"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn numerical_failures_exit_two() {
    // a box this small cannot hold the bistable law
    let out = rnfilter(&[
        "oracle",
        "--network",
        "bistable",
        "--x0",
        "106",
        "--box",
        "150",
        "--t-end",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    // κ = 1 is a pole of the shape equation
    let out = rnfilter(&[
        "closure-compare",
        "--a1",
        "1",
        "--a2",
        "-1",
        "--k1",
        "1",
        "--k2",
        "0.01",
        "--mu",
        "10",
        "--var",
        "100",
        "--t-end",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_and_closure_compare_write_csv() {
    let out = rnfilter(&[
        "oracle",
        "--network",
        "bistable",
        "--x0",
        "106",
        "--box",
        "1000",
        "--t-end",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("x1,p\n"));
    let mass: f64 = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((mass - 1.0).abs() < 1e-6);

    let out = rnfilter(&[
        "closure-compare",
        "--a1",
        "1",
        "--a2",
        "-1",
        "--k1",
        "1",
        "--k2",
        "0.01",
        "--mu",
        "50",
        "--var",
        "60",
        "--t-end",
        "1",
        "--dt",
        "0.25",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("t,mu_projection,var_projection,mu_closure,var_closure\n"));
    assert_eq!(text.lines().count(), 1 + 5);
}

#[test]
fn experiment_writes_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    let net = configs().join("bistable.net");
    std::fs::write(
        &cfg,
        format!(
            "network = {}\nT = 3\nV_grid = 500, 3000\ndt_grid = 0.5, 1\nreps = 2\nseed = 5\nfilters = gpf, lna\nout_grid = 0.05\n",
            net.display()
        ),
    )
    .unwrap();
    let out_dir = dir.path().join("results");
    let out = rnfilter(&["experiment", "--config", s(&cfg), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["cells"].as_array().unwrap().len(), 2 * 3);
    let v = std::fs::read_to_string(out_dir.join("mse_vs_V.csv")).unwrap();
    assert!(v.starts_with("V,filter,mean_mse,stderr,n_diverged\n"));
    let dt = std::fs::read_to_string(out_dir.join("mse_vs_dt.csv")).unwrap();
    assert!(dt.starts_with("dt,filter,mean_mse,stderr,n_diverged\n"));
    assert_eq!(dt.lines().count(), 1 + 4);
}

#[test]
fn shipped_configs_parse() {
    for name in ["bistable.cfg", "limitcycle.cfg"] {
        rnfilter::bench::ExperimentConfig::from_file(&configs().join(name)).unwrap();
    }
}
