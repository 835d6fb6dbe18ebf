//! Black-box tests of the `nstars` binary: exit codes, CSV shapes,
//! determinism, and the divergent-parameter pathway.

use std::path::Path;
use std::process::{Command, Output};

fn nstars(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nstars"))
        .args(args)
        .output()
        .expect("spawn nstars")
}

fn stdout_lines(out: &Output) -> Vec<String> {
    String::from_utf8_lossy(&out.stdout).lines().map(str::to_string).collect()
}

fn field(lines: &[String], key: &str) -> String {
    lines
        .iter()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("missing key {key}"))
        .to_string()
}

const EXP1: &[&str] = &["--N", "4", "--p", "0.4", "--q", "0.4", "--r", "0.4"];
const EXP6: &[&str] = &["--N", "5", "--p", "0.9", "--q", "0.5", "--r", "0.9"];

#[test]
fn derive_reports_constants_and_conditions() {
    let out = nstars(&[&["derive"], EXP1].concat());
    assert!(out.status.success());
    let lines = stdout_lines(&out);
    let beta1: f64 = field(&lines, "beta1").parse().unwrap();
    assert!((beta1 - 0.9).abs() < 1e-12);
    assert_eq!(field(&lines, "m_finite"), "true");

    let out = nstars(&[&["derive"], EXP6].concat());
    assert!(out.status.success());
    assert_eq!(field(&stdout_lines(&out), "m_finite"), "false");
}

#[test]
fn derive_rejects_small_n_with_exit_2() {
    let out = nstars(&["derive", "--N", "2", "--p", "0.4", "--q", "0.4", "--r", "0.4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analytic_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = nstars(
        &[&["analytic"], EXP1, &["--w1max", "8", "--w2max", "8", "--out-dir", out_dir]].concat(),
    );
    assert!(out.status.success());

    let moments = std::fs::read_to_string(dir.path().join("moments.csv")).unwrap();
    let mut rows = moments.lines();
    assert_eq!(rows.next().unwrap(), "w1,marginal,E,M");
    let first: Vec<&str> = rows.next().unwrap().split(',').collect();
    assert_eq!(first[0], "0");
    let marginal: f64 = first[1].parse().unwrap();
    assert!((marginal - 0.2105263).abs() < 1e-6);

    let joint = std::fs::read_to_string(dir.path().join("joint.csv")).unwrap();
    let origin = joint.lines().nth(1).unwrap();
    let fields: Vec<&str> = origin.split(',').collect();
    assert_eq!((fields[0], fields[1]), ("0", "0"));
    assert_eq!(fields[2].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn analytic_divergent_params_write_div() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = nstars(
        &[&["analytic"], EXP6, &["--w1max", "6", "--w2max", "6", "--out-dir", out_dir]].concat(),
    );
    assert!(out.status.success());
    let moments = std::fs::read_to_string(dir.path().join("moments.csv")).unwrap();
    for line in moments.lines().skip(1) {
        assert_eq!(line.split(',').nth(3).unwrap(), "div", "row: {line}");
    }
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("taylor_constant=div"));
}

fn simulate_exp1(steps: &str, seed: &str, out_dir: &Path) -> Output {
    nstars(
        &[
            &["simulate"],
            EXP1,
            &["--steps", steps, "--seed", seed, "--out-dir", out_dir.to_str().unwrap()],
        ]
        .concat(),
    )
}

#[test]
fn simulate_zero_steps_initial_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate_exp1("0", "1", dir.path());
    assert!(out.status.success());
    let joint = std::fs::read_to_string(dir.path().join("empirical_joint.csv")).unwrap();
    // initial N = 4 star: one (1,0) center, three (0,1) peripherals
    let rows: Vec<&str> = joint.lines().skip(1).collect();
    assert_eq!(rows, ["0,1,3", "1,0,1"]);
}

#[test]
fn simulate_is_deterministic() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    assert!(simulate_exp1("20000", "9", dir_a.path()).status.success());
    assert!(simulate_exp1("20000", "9", dir_b.path()).status.success());
    for name in ["empirical_joint.csv", "moments_w1.csv", "moments_w2.csv"] {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn simulate_conserves_central_weight() {
    let dir = tempfile::tempdir().unwrap();
    let steps = 1_000_000u64;
    assert!(simulate_exp1(&steps.to_string(), "5", dir.path()).status.success());
    let joint = std::fs::read_to_string(dir.path().join("empirical_joint.csv")).unwrap();
    let total: u64 = joint
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            f[0].parse::<u64>().unwrap() * f[2].parse::<u64>().unwrap()
        })
        .sum();
    assert_eq!(total, steps + 1);
}

#[test]
fn fit_recovers_exact_power_law() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("moments.csv");
    let mut csv = String::from("w,count,marginal,mean,second_moment\n");
    for w in 1..=20u64 {
        let e = w as f64;
        csv.push_str(&format!("{w},100,0.05,{e},{}\n", 10.0 * e * e));
    }
    std::fs::write(&path, csv).unwrap();
    let out = nstars(&["fit", "--moments", path.to_str().unwrap(), "--min-count", "30"]);
    assert!(out.status.success());
    let lines = stdout_lines(&out);
    let slope: f64 = field(&lines, "slope").parse().unwrap();
    let intercept: f64 = field(&lines, "intercept").parse().unwrap();
    assert!((slope - 2.0).abs() < 1e-12);
    assert!((intercept - 1.0).abs() < 1e-12);
}

#[test]
fn fit_insufficient_data_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("moments.csv");
    std::fs::write(&path, "w,count,marginal,mean,second_moment\n1,5,0.5,2.0,8.0\n").unwrap();
    let out = nstars(&["fit", "--moments", path.to_str().unwrap(), "--min-count", "30"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn fit_reports_divergent_constant() {
    let dir = tempfile::tempdir().unwrap();
    let sim_dir = dir.path().join("sim");
    let out = nstars(
        &[
            &["simulate"],
            EXP6,
            &["--steps", "50000", "--seed", "3", "--out-dir", sim_dir.to_str().unwrap()],
        ]
        .concat(),
    );
    assert!(out.status.success());
    let moments = sim_dir.join("moments_w1.csv");
    let out = nstars(
        &[&["fit", "--moments", moments.to_str().unwrap(), "--min-count", "30"], EXP6].concat(),
    );
    assert!(out.status.success());
    assert_eq!(field(&stdout_lines(&out), "theoretical_C"), "div");
}

#[test]
fn compare_columns_and_marginal_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let out = nstars(
        &[
            &["compare"],
            EXP1,
            &[
                "--steps",
                "1000000",
                "--seed",
                "5",
                "--min-count",
                "100",
                "--out-dir",
                dir.path().to_str().unwrap(),
            ],
        ]
        .concat(),
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "w1,analytic_marginal,empirical_marginal,rel_err,analytic_E,empirical_E,rel_err_E,analytic_M,empirical_M,rel_err_M"
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "0");
    let rel_err: f64 = first[3].parse().unwrap();
    assert!(rel_err <= 0.02, "w1=0 marginal rel err {rel_err}");
}

#[test]
fn compare_divergent_rows_have_empty_error_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = nstars(
        &[
            &["compare"],
            EXP6,
            &[
                "--steps",
                "100000",
                "--seed",
                "5",
                "--min-count",
                "100",
                "--out-dir",
                dir.path().to_str().unwrap(),
            ],
        ]
        .concat(),
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[7], "div", "row: {line}");
        assert_eq!(f[9], "", "row: {line}");
    }
}

#[test]
fn config_file_supplies_missing_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp1.cfg");
    std::fs::write(&cfg, "N=4\np=0.4\nq=0.4\nr=0.4\n").unwrap();
    let out = nstars(&["derive", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(field(&stdout_lines(&out), "N"), "4");

    // flag wins over config
    let out = nstars(&["derive", "--config", cfg.to_str().unwrap(), "--N", "5"]);
    assert!(out.status.success());
    assert_eq!(field(&stdout_lines(&out), "N"), "5");
}
