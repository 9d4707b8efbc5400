use std::path::Path;
use std::process::{Command, Output};

const PI: f64 = std::f64::consts::PI;

fn reference(omega: f64, ell: f64) -> serde_json::Value {
    serde_json::json!({
        "waveguide": {"width": PI, "speed": 1.0, "boundary": "dirichlet"},
        "frequency": {"omega": omega},
        "covariance": {"kind": "gaussian", "ell_nu": ell},
        "source": {"x0": 0.3 * PI},
        "simulation": {"l_max": 30, "checkpoints": [0.0, 0.1, 0.5]}
    })
}

fn a5() -> serde_json::Value {
    serde_json::json!({
        "waveguide": {"width": PI, "speed": 1.0, "boundary": "dirichlet"},
        "frequency": {"omega": 5.5},
        "covariance": {"kind": "gaussian", "ell_nu": 3.0 / 5.5},
        "source": {"x0": 0.3 * PI},
        "simulation": {"epsilon": 0.05, "range": 0.02, "checkpoints": [0.004, 0.008, 0.012, 0.016, 0.02], "realizations": 2000, "seed": 7}
    })
}

fn small_ensemble() -> serde_json::Value {
    let mut v = a5();
    v["simulation"] = serde_json::json!({"epsilon": 0.05, "range": 0.004, "checkpoints": [0.0, 0.004], "realizations": 16, "seed": 3});
    v
}

fn run(dir: &Path, cfg: &serde_json::Value, args: &[&str]) -> Output {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    Command::new(env!("CARGO_BIN_EXE_rwguide"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(name)).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn modes_lists_the_propagating_modes() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &reference(10.5, 3.0 / 10.5), &["modes"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = read(d.path(), "modes.csv");
    let mut lines = csv.lines();
    let head = lines.next().unwrap();
    assert!(head.starts_with(&format!("# rwguide {} config=", env!("CARGO_PKG_VERSION"))));
    assert!(head.ends_with(" seed=0"));
    let hash = head.split("config=").nth(1).unwrap().split(' ').next().unwrap();
    assert_eq!(hash.len(), 64);
    assert_eq!(lines.next(), Some("j,lambda,beta,dphi0,dphiX,phiX"));
    assert_eq!(lines.count(), 10);
}

#[test]
fn reruns_are_byte_identical_and_hash_tracks_the_config() {
    let d = tempfile::tempdir().unwrap();
    let cfg = reference(10.5, 3.0 / 10.5);
    run(d.path(), &cfg, &["gamma"]);
    let first = read(d.path(), "gamma_c.csv");
    run(d.path(), &cfg, &["gamma"]);
    assert_eq!(first, read(d.path(), "gamma_c.csv"));
    run(d.path(), &reference(10.5, 0.3), &["gamma"]);
    let other = read(d.path(), "gamma_c.csv");
    assert_ne!(first.lines().next(), other.lines().next());
}

#[test]
fn gamma_below_the_correlation_bound_only_warns() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &reference(10.5, 1.0 / 10.5), &["gamma"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning"), "{}", stderr(&o));
    assert!(read(d.path(), "forward_check.csv").contains("status,warn"));
    for f in ["gamma_c.csv", "gamma_0.csv", "gamma_s.csv"] {
        assert!(read(d.path(), f).lines().nth(1) == Some("j,l,value"));
    }
}

#[test]
fn json_tables_carry_the_header() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &reference(10.5, 3.0 / 10.5), &["lengthscales", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&read(d.path(), "lengthscales.json")).unwrap();
    assert!(v["header"].as_str().unwrap().starts_with("rwguide "));
    assert_eq!(v["records"].as_array().unwrap().len(), 10);
    assert!(v["records"][0]["smfp"].as_f64().unwrap() > 0.0);
}

#[test]
fn theory_commands_write_their_tables() {
    let d = tempfile::tempdir().unwrap();
    let cfg = reference(10.5, 3.0 / 10.5);
    for (cmd, file, cols) in [
        ("coupling", "coupling.csv", "j,l,c_nu,c_mu,d_nu,d_mu"),
        ("kappa", "kappa.csv", "j,kappa_a,kappa_e,tail_bound"),
        ("moments", "moments.csv", "z,j,P1"),
        ("fourth", "fourth.csv", "z,j,l,P2"),
        ("estimates", "estimates.csv", "quantity,j,exact,asymptotic,ratio"),
        ("interior-compare", "interior.csv", "j,K_tilde,J_tilde,K,J,K_tilde_over_K,J_tilde_over_J,J_tilde_over_K_tilde"),
    ] {
        let o = run(d.path(), &cfg, &[cmd]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
        assert_eq!(read(d.path(), file).lines().nth(1), Some(cols), "{cmd}");
    }
    assert_eq!(read(d.path(), "moments.csv").lines().count(), 2 + 3 * 10);
}

#[test]
fn compare_on_the_reference_ensemble_passes() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &a5(), &["compare", "--workers", "8"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert_eq!(out.lines().last(), Some("pass"));
    assert!(read(d.path(), "summary.txt").ends_with("pass\n"));
    assert!(read(d.path(), "comparison.csv").lines().nth(1).unwrap().starts_with("z,z_eff,j,l,moment,estimate,stderr,theory,zscore"));
}

#[test]
fn compare_failure_exits_with_four() {
    let d = tempfile::tempdir().unwrap();
    let mut cfg = small_ensemble();
    cfg["theory"] = serde_json::json!({"z_threshold": 1e-9, "bias_factor": 0.0, "required_fraction": 1.0});
    let o = run(d.path(), &cfg, &["compare"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().last(), Some("fail"));
}

#[test]
fn simulate_exports_moments_and_one_realization() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &small_ensemble(), &["simulate", "--workers", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(read(d.path(), "ensemble.csv").lines().next().unwrap().ends_with("seed=3"));
    assert_eq!(read(d.path(), "trajectory.csv").lines().nth(1), Some("z,j,re_a,im_a,abs2_a"));
    assert_eq!(read(d.path(), "realization.csv").lines().nth(1), Some("zeta,nu,dnu,ddnu,mu,dmu,ddmu"));
    let o = run(d.path(), &small_ensemble(), &["simulate", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&read(d.path(), "ensemble.json")).unwrap();
    assert_eq!(v["result"]["m"], 16);
}

#[test]
fn forward_gate_can_be_overridden() {
    let d = tempfile::tempdir().unwrap();
    let mut cfg = small_ensemble();
    cfg["covariance"]["ell_nu"] = serde_json::json!(0.05);
    cfg["simulation"]["realizations"] = serde_json::json!(2);
    let o = run(d.path(), &cfg, &["simulate"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(d.path(), &cfg, &["simulate", "--override-forward-check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn validation_errors_exit_with_two() {
    let d = tempfile::tempdir().unwrap();
    let mut cfg = reference(10.5, 0.3);
    cfg["waveguide"]["colour"] = serde_json::json!("blue");
    assert_eq!(run(d.path(), &cfg, &["modes"]).status.code(), Some(2));
    let mut cfg = reference(10.5, 0.3);
    cfg["source"]["x0"] = serde_json::json!(4.0);
    assert_eq!(run(d.path(), &cfg, &["moments"]).status.code(), Some(2));
    let mut cfg = reference(10.5, 0.3);
    cfg["frequency"]["k"] = serde_json::json!(10.5);
    assert_eq!(run(d.path(), &cfg, &["modes"]).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_rwguide")).arg("modes").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_three() {
    let d = tempfile::tempdir().unwrap();
    let mut cfg = reference(10.5, 0.3);
    cfg["theory"] = serde_json::json!({"kappa_tail_tol": 1e-300});
    let o = run(d.path(), &cfg, &["kappa"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn mixed_guide_commands() {
    let d = tempfile::tempdir().unwrap();
    let mut cfg = reference(10.6, 0.3);
    cfg["waveguide"]["boundary"] = serde_json::json!("dirichlet_neumann");
    assert_eq!(run(d.path(), &cfg, &["modes"]).status.code(), Some(0));
    assert_eq!(read(d.path(), "modes.csv").lines().count(), 2 + 11);
    assert_eq!(run(d.path(), &cfg, &["coupling"]).status.code(), Some(0));
    assert!(read(d.path(), "coupling_mixed.csv").contains("q_nu_comb"));
    assert_eq!(run(d.path(), &cfg, &["moments"]).status.code(), Some(0));
    assert_eq!(run(d.path(), &cfg, &["kappa"]).status.code(), Some(2));
}
