use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BASE: &str = r#"
[physics]
mu = 0.1
g = 9.8
lambda = 1.0
m_over_mc = 0.5

[grid]
L = 1.0
h = 1.0
N1 = 16
N2 = 16

[profile]
kind = "affine"
rho_bottom = 2.0
rho_top = 3.0

[time]
dt = 0.05
t_end = 0.5

[output]
cadence = 0.1
snapshot = true

[seed]
delta = 1e-4
n_max = 4
"#;

struct Case {
    dir: TempDir,
}

impl Case {
    fn new(config: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("run.toml"), config).unwrap();
        Self { dir }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn run(&self, args: &[&str], out: &str) -> Output {
        Command::new(env!("CARGO_BIN_EXE_mrt"))
            .args(args)
            .arg("--config")
            .arg(self.path("run.toml"))
            .arg("--out")
            .arg(self.path(out))
            .arg("--quiet")
            .output()
            .unwrap()
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn rows(p: &Path) -> Vec<Vec<String>> {
    read(p)
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(table: &[Vec<String>], name: &str) -> usize {
    table[0].iter().position(|h| h == name).unwrap()
}

#[test]
fn mc_reports_the_affine_threshold() {
    let case = Case::new(BASE);
    let o = case.run(&["mc"], "mc");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = rows(&case.path("mc/mc.csv"));
    let mc: f64 = t[1][column(&t, "mc")].parse().unwrap();
    let exact = (9.8 / (std::f64::consts::PI.powi(2) + 1.0)).sqrt();
    assert!((mc - exact).abs() < 1e-8 * exact, "{mc} vs {exact}");
    assert_eq!(t[1][column(&t, "argmax_n")], "1");
    assert_eq!(t[1][column(&t, "bound_ok")], "1");
    assert_eq!(rows(&case.path("mc/eigenfunction.csv")).len(), 130);
    let manifest = read(&case.path("mc/manifest.toml"));
    assert!(manifest.contains("mc.csv") && manifest.contains("completed"));
}

#[test]
fn dispersion_covers_every_field_strength() {
    let config = format!("{BASE}\n[dispersion]\nm_over_mc = [0.0, 2.0]\nn_max = 5\n");
    let case = Case::new(&config);
    let o = case.run(&["dispersion"], "disp");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = rows(&case.path("disp/dispersion.csv"));
    assert_eq!(t.len(), 1 + 2 * 5);
}

#[test]
fn simulate_then_restart() {
    let case = Case::new(BASE);
    let o = case.run(&["simulate"], "sim");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let energy = rows(&case.path("sim/energy.csv"));
    assert_eq!(energy.len(), 1 + 6);
    let t = column(&energy, "t");
    let last: f64 = energy.last().unwrap()[t].parse().unwrap();
    assert!((last - 0.5).abs() < 1e-9);
    assert!(case.path("sim/snapshot").is_dir());
    assert!(case.path("sim/fits.csv").is_file());
    assert!(!case.path("sim/verdict.csv").exists());

    let longer = BASE.replace("t_end = 0.5", "t_end = 1.0");
    fs::write(case.path("run.toml"), longer).unwrap();
    let snap = case.path("sim/snapshot");
    let o = case.run(
        &["simulate", "--restart", snap.to_str().unwrap()],
        "resumed",
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let energy = rows(&case.path("resumed/energy.csv"));
    let first: f64 = energy[1][t].parse().unwrap();
    let last: f64 = energy.last().unwrap()[t].parse().unwrap();
    assert!((first - 0.5).abs() < 1e-9 && (last - 1.0).abs() < 1e-9);
}

#[test]
fn stable_run_writes_a_verdict_consistent_with_the_exit_code() {
    let config = BASE
        .replace("m_over_mc = 0.5", "m_over_mc = 1.5")
        .replace("t_end = 0.5", "t_end = 30.0")
        .replace("cadence = 0.1", "cadence = 0.5")
        .replace("delta = 1e-4", "delta = 1e-3\nn = 1");
    let case = Case::new(&config);
    let o = case.run(&["simulate"], "stable");
    let verdict = rows(&case.path("stable/verdict.csv"));
    let pass = &verdict[1][column(&verdict, "pass")];
    assert_eq!(code(&o), if pass == "1" { 0 } else { 1 });
    assert_eq!(pass, "1", "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn study_sweeps_the_seed_amplitude() {
    let config = format!(
        "{BASE}\n[escape]\nepsilon = 1e-2\n\n[sweep]\nparameter = \"delta\"\nvalues = [1e-4, 5e-5]\n"
    )
    .replace("t_end = 0.5", "t_end = 2.0");
    let case = Case::new(&config);
    let o = case.run(&["study"], "study");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = rows(&case.path("study/study.csv"));
    assert_eq!(t.len(), 3);
    assert!(t[1..].iter().all(|r| r[column(&t, "status")] == "ok"));
    assert!(case.path("study/run_000/manifest.toml").is_file());
    assert!(case.path("study/run_001/energy.csv").is_file());
}

#[test]
fn usage_errors_exit_with_code_two() {
    let case = Case::new(BASE);
    let o = Command::new(env!("CARGO_BIN_EXE_mrt"))
        .args(["mc", "--config"])
        .arg(case.path("missing.toml"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);

    let bad = [
        BASE.replace("[time]", "[time]\nbogus = 1"),
        BASE.replace("m_over_mc = 0.5", "m_over_mc = 0.5\nm = 0.2"),
        BASE.replace(
            "kind = \"affine\"",
            "kind = \"table\"\nfile = \"nowhere.dat\"",
        ),
        BASE.replace("N2 = 16", "N2 = 0"),
        format!("{BASE}\n[sweep]\nparameter = \"mu\"\nvalues = [0.1]\n"),
    ];
    for (i, text) in bad.iter().enumerate() {
        let case = Case::new(text);
        let cmd = if i == 4 { "study" } else { "simulate" };
        let o = case.run(&[cmd], "bad");
        assert_eq!(
            code(&o),
            2,
            "case {i}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let o = case.run(&["dispersion"], "nodisp");
    assert_eq!(code(&o), 2);
}

#[test]
fn convergence_suite_reports_second_order() {
    let config = format!("{BASE}\n[linstab]\nmodes = 128\n")
        .replace("N1 = 16\nN2 = 16", "N1 = 32\nN2 = 32")
        .replace("dt = 0.05\nt_end = 0.5", "dt = 0.01\nt_end = 1.0")
        .replace("delta = 1e-4", "delta = 1e-3");
    let case = Case::new(&config);
    let o = case.run(&["convergence"], "conv");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = rows(&case.path("conv/convergence.csv"));
    let ratio: f64 = t[3][column(&t, "ratio")].parse().unwrap();
    assert!((3.2..=4.8).contains(&ratio), "{ratio}");
    assert_eq!(t.len(), 1 + 3 + 6);
    assert!(case.path("conv/dt_2/energy.csv").is_file());
}
