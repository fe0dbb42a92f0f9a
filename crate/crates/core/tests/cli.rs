use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const DUAL_CONFIG: &str = r#"
[model]
type = "dual_of_spin_half"
omega0 = 1.0
omega = 0.05
theta = 1.5707963267948966

[grid]
t_end = 62.83185307179586
steps = 4000

[output]
csv = "curve.csv"
summary = "summary.json"
plot = "curve.gp"
"#;

fn adiabat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adiabat")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

/// Constant two-level table `[[a, b], [b, -a]]` over `[0, t_end]`.
fn constant_table(a: f64, b: f64, t_end: f64) -> String {
    format!(
        "t, h_re_0_0, h_im_0_0, h_re_0_1, h_im_0_1, h_re_1_1, h_im_1_1\n0, {a}, 0, {b}, 0, {m}, 0\n{t_end}, {a}, 0, {b}, 0, {m}, 0\n",
        m = -a
    )
}

#[test]
fn simulate_writes_csv_summary_and_plot() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.toml", DUAL_CONFIG);
    let out = adiabat(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,fidelity,fidelity_squared,cond_pointwise_max,gap_min,phase_dynamic,phase_geometric,unitarity_defect"
    );
    assert_eq!(lines.count(), 4001);
    assert!(!csv.contains('\r'));
    let s = summary(dir.path());
    assert_eq!(s["model"], "dual_of_spin_half");
    assert!(s["dual"]["fidelity_min"].as_f64().unwrap() < 1e-3);
    assert!(s["primal"]["fidelity_min"].as_f64().unwrap() > 0.99);
    // Stdout carries the same summary.
    let printed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(printed, s);
    assert!(std::fs::read_to_string(dir.path().join("curve.gp")).unwrap().contains("curve.csv"));
}

#[test]
fn quiet_suppresses_the_summary() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.toml", DUAL_CONFIG);
    let out = adiabat(&["simulate", "--config", cfg.to_str().unwrap(), "--quiet", "--override", "grid.steps=400"]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    assert_eq!(summary(dir.path())["steps"], 400);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.toml", DUAL_CONFIG);
    let cfg = cfg.to_str().unwrap();
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let o = format!("output.csv={name}");
        assert_eq!(code(&adiabat(&["simulate", "--config", cfg, "--quiet", "--override", &o])), 0);
        outputs.push(std::fs::read(dir.path().join(name)).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn usage_and_config_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.toml", DUAL_CONFIG);
    let cfg = cfg.to_str().unwrap();
    let missing = dir.path().join("nope.toml");
    let bad = write(dir.path(), "bad.toml", "[model\ntype = 1");
    let cases: Vec<Vec<&str>> = vec![
        vec!["simulate", "--config", missing.to_str().unwrap()],
        vec!["simulate", "--config", bad.to_str().unwrap()],
        vec!["simulate", "--config", cfg, "--override", "grid.steps=1"],
        vec!["simulate", "--config", cfg, "--override", "model.theta=0.0"],
        vec!["simulate", "--config", cfg, "--override", "nonsense"],
        vec!["sweep", "--config", cfg],
        vec!["sweep", "--config", cfg, "--override", "sweep.parameter=omega0", "--override", "sweep.values=[]"],
        vec!["simulate"],
        vec!["frobnicate", "--config", cfg],
    ];
    for args in cases {
        let out = adiabat(&args);
        assert_eq!(code(&out), 1, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn degenerate_spectrum_exits_with_two() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "h.csv", &constant_table(0.0, 0.0, 1.0));
    let cfg = write(
        dir.path(),
        "run.toml",
        "[model]\ntype = \"sampled\"\npath = \"h.csv\"\n[grid]\nt_end = 1.0\nsteps = 10\n",
    );
    let out = adiabat(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate"));
}

#[test]
fn verify_passes_for_spin_half_defaults() {
    let dir = TempDir::new().unwrap();
    let text = DUAL_CONFIG.replace("dual_of_spin_half", "spin_half").replace("omega = 0.05", "omega = 0.1").replace(
        "t_end = 62.83185307179586",
        "t_end = 31.41592653589793",
    );
    let cfg = write(dir.path(), "run.toml", &text.replace("steps = 4000", "steps = 40000"));
    let out = adiabat(&["verify", "--config", cfg.to_str().unwrap(), "--quiet"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path());
    let ids = &s["identities"];
    for key in ["eigenvalue_residual", "eigenvector_overlap_deficit", "coupling_modulus_residual", "condition_equivalence_deviation", "propagator_conjugacy"] {
        assert!(ids[key].as_f64().unwrap() <= 1e-6, "{key} = {}", ids[key]);
    }
    let ms = &s["marzlin_sanders"];
    assert!((ms["exact_value"][0].as_f64().unwrap() - 1.0).abs() <= 1e-10);
    // theta = pi/2 and omega t_end = pi: the adiabatic value vanishes.
    assert!(ms["adiabatic_modulus_squared"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn verify_failure_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.toml", DUAL_CONFIG);
    // On a coarse grid the finite-difference couplings of the dual miss 1e-6.
    let out = adiabat(&["verify", "--config", cfg.to_str().unwrap(), "--quiet", "--override", "grid.steps=1500"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path());
    assert!(!s["failures"].as_array().unwrap().is_empty());
}

#[test]
fn constant_sampled_model_has_vanishing_residuals() {
    let dir = TempDir::new().unwrap();
    let (a, b, t_end, steps) = (0.6, 0.8, 2.0, 2000);
    write(dir.path(), "h.csv", &constant_table(a, b, t_end));
    let cfg = write(
        dir.path(),
        "run.toml",
        &format!(
            "[model]\ntype = \"sampled\"\npath = \"h.csv\"\n[grid]\nt_end = {t_end:?}\nsteps = {steps}\n[output]\nsummary = \"summary.json\"\n"
        ),
    );
    let out = adiabat(&["verify", "--config", cfg.to_str().unwrap(), "--quiet"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path());
    assert_eq!(s["kind"], "sampled_table");
    let ids = &s["identities"];
    for key in ["eigenvalue_residual", "eigenvector_overlap_deficit", "coupling_modulus_residual", "condition_equivalence_deviation", "propagator_conjugacy"] {
        assert!(ids[key].as_f64().unwrap() <= 1e-10, "{key} = {}", ids[key]);
    }
    // In the transported gauge the dual eigenvectors carry e^{iEt}; the
    // difference of that phase is off by E^3 h^2 / 6 (centered) and
    // E^3 h^2 / 3 (one-sided, at the ends).
    let e: f64 = (a * a + b * b).sqrt();
    let h = t_end / steps as f64;
    let transported = ids["coupling_transported_residual"].as_f64().unwrap();
    assert!(transported <= e.powi(3) * h * h / 3.0 * 1.01 + 1e-12, "{transported:e}");
    assert!((s["marzlin_sanders"]["exact_deviation_max"].as_f64().unwrap()) <= 1e-10);
    assert!((s["primal"]["fidelity_min"].as_f64().unwrap() - 1.0).abs() <= 1e-10);
}

#[test]
fn sweep_rows_keep_input_order() {
    let dir = TempDir::new().unwrap();
    let order = [FRAC_PI_2, FRAC_PI_6, FRAC_PI_4];
    let text = DUAL_CONFIG.replace("steps = 4000", "steps = 2000")
        + &format!("\n[sweep]\nparameter = \"theta\"\nvalues = [{:?}, {:?}, {:?}]\n", order[0], order[1], order[2]);
    let cfg = write(dir.path(), "run.toml", &text);
    let out = adiabat(&["sweep", "--config", cfg.to_str().unwrap(), "--override", "output.csv=sweep.csv"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "value,cond_pointwise_max,roland_epsilon,fidelity_min_primal,fidelity_min_dual");
    let values: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(values, order);
}
