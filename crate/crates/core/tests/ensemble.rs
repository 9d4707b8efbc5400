mod common;

use common::closed_dd;
use num_complex::Complex64;
use rwguide::boundary::Covariance;
use rwguide::ensemble::{compare_to_limit, run_ensemble};
use rwguide::*;
use std::f64::consts::PI;

const OMEGA: f64 = 3.5;

fn small() -> (ModeBasis64, CouplingTables64, CovarianceModel64, SourceExcitation<f64>) {
    let (b, t) = closed_dd(OMEGA, 10);
    let model = CovarianceModel::gaussian(3.0 / OMEGA).unwrap();
    (b, t, model, SourceExcitation { x0: 0.3 * PI, fhat: Complex64::new(1.0, 0.0) })
}

fn cfg(m: usize, workers: Option<usize>) -> EnsembleConfig<f64> {
    EnsembleConfig {
        m,
        seed: 17,
        sim: SimulationConfig { epsilon: 0.05, range: 0.01, step: None, checkpoints: vec![0.0, 0.005, 0.01] },
        workers,
        override_forward: false,
        clip: None,
    }
}

#[test]
fn flat_model_reproduces_the_ideal_guide() {
    let (b, t, _, src) = small();
    let flat = CovarianceModel { nu: Covariance::gaussian(0.5, 0.0).unwrap(), mu: Covariance::gaussian(0.5, 0.0).unwrap() };
    let r = run_ensemble(&b, &t, &flat, &src, &cfg(2, None)).unwrap();
    let a0 = solver::initial_amplitudes(&b, &src).unwrap();
    for c in 0..3 {
        for j in 0..3 {
            assert_eq!(r.mean_re[c][j], a0[j].re);
            assert_eq!(r.mean_im[c][j], a0[j].im);
            assert_eq!(r.power[c][j], a0[j].norm_sqr());
            assert_eq!(r.mean_re_se[c][j], 0.0);
            assert_eq!(r.power_se[c][j], 0.0);
        }
        assert_eq!(r.energy_se[c], 0.0);
        assert!(r.fourth_se[c].iter().all(|&s| s == 0.0));
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let (b, t, model, src) = small();
    let one = run_ensemble(&b, &t, &model, &src, &cfg(70, Some(1))).unwrap();
    let eight = run_ensemble(&b, &t, &model, &src, &cfg(70, Some(8))).unwrap();
    assert!(one == eight);
    assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&eight).unwrap());
}

#[test]
fn standard_error_shrinks_like_root_m() {
    let (b, t, model, src) = small();
    let r1 = run_ensemble(&b, &t, &model, &src, &cfg(100, None)).unwrap();
    let r2 = run_ensemble(&b, &t, &model, &src, &cfg(200, None)).unwrap();
    let mut ratios = Vec::new();
    for c in 1..3 {
        for j in 0..3 {
            ratios.push(r1.power_se[c][j] / r2.power_se[c][j]);
        }
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!((1.2..1.7).contains(&mean), "{ratios:?}");
}

#[test]
fn origin_checkpoint_has_zero_scores() {
    let (b, t, model, src) = small();
    let r = run_ensemble(&b, &t, &model, &src, &cfg(8, None)).unwrap();
    let st = SpectralTables::build(&model, &b).unwrap();
    let g = GeneratorCoefficients::dirichlet(&b, &st).unwrap();
    let rep = compare_to_limit(&r, &g, &CompareOptions::default()).unwrap();
    let at0: Vec<_> = rep.rows.iter().filter(|row| row.z == 0.0).collect();
    assert_eq!(at0.len(), 3 + 3 + 6 + 1);
    assert!(at0.iter().all(|row| row.zscore == 0.0 && row.pass));
    assert_eq!(rep.summary_lines().last().map(String::as_str), Some(if rep.pass { "pass" } else { "fail" }));
}

#[test]
fn generator_of_another_guide_is_rejected() {
    let (b, t, model, src) = small();
    let r = run_ensemble(&b, &t, &model, &src, &cfg(2, None)).unwrap();
    let (b5, _) = closed_dd(5.5, 15);
    let st = SpectralTables::build(&model, &b5).unwrap();
    let g = GeneratorCoefficients::dirichlet(&b5, &st).unwrap();
    assert!(matches!(compare_to_limit(&r, &g, &CompareOptions::default()), Err(Error::Provenance(_))));
}

#[test]
fn invalid_requests_are_refused() {
    let (b, t, model, src) = small();
    assert!(run_ensemble(&b, &t, &model, &src, &cfg(1, None)).is_err());
    assert!(run_ensemble(&b, &t, &model, &src, &cfg(4, Some(0))).is_err());
    // short correlation length puts energy into backscattering
    let rough = CovarianceModel::gaussian(0.05).unwrap();
    assert!(run_ensemble(&b, &t, &rough, &src, &cfg(2, None)).is_err());
    let forced = EnsembleConfig { override_forward: true, ..cfg(2, None) };
    assert!(run_ensemble(&b, &t, &rough, &src, &forced).is_ok());
}

#[test]
fn flat_table_layout() {
    let (b, t, model, src) = small();
    let r = run_ensemble(&b, &t, &model, &src, &cfg(2, None)).unwrap();
    let csv = r.table().to_csv("h");
    assert_eq!(csv.lines().nth(1), Some("z,j,l,moment,estimate,stderr"));
    // per checkpoint: re, im, P1 per mode, N² fourth moments, energy
    assert_eq!(csv.lines().count(), 2 + 3 * (3 * 3 + 9 + 1));
}
