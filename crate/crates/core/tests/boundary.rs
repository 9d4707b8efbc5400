mod common;

use common::closed_dd;
use rwguide::boundary::validate_forward_scattering;
use rwguide::quad::{integrate, QuadOpts};
use rwguide::*;

fn synth(ell: f64, z_max: f64) -> Synthesizer<f64> {
    let model = CovarianceModel::gaussian(ell).unwrap();
    Synthesizer::new(&model, SynthGrid { dz: ell / 10.0, z_max, taper_width: None, clip: None }).unwrap()
}

#[test]
fn grid_preconditions() {
    let model = CovarianceModel::gaussian(0.5).unwrap();
    let g = |dz: f64, z_max: f64| SynthGrid { dz, z_max, taper_width: None, clip: None };
    assert!(Synthesizer::new(&model, g(0.06, 20.0)).is_err());
    assert!(Synthesizer::new(&model, g(0.05, 4.0)).is_err());
    let s = Synthesizer::new(&model, g(0.05, 20.0)).unwrap();
    assert!(s.spectral_lines() >= 2048);
}

#[test]
fn same_seed_and_index_reproduce_the_path() {
    let s = synth(0.5, 20.0);
    let a = s.synthesize(42, 7);
    let b = s.synthesize(42, 7);
    assert_eq!(a.nu, b.nu);
    assert_eq!(a.mu, b.mu);
    assert_ne!(a.nu[0], s.synthesize(42, 8).nu[0]);
    assert_ne!(a.nu[0], s.synthesize(43, 7).nu[0]);
    // the two processes are drawn from separate streams
    assert_ne!(a.nu[0], a.mu[0]);
}

#[test]
fn taper_silences_the_origin() {
    let s = synth(0.5, 20.0);
    let p = s.synthesize(1, 0);
    for o in 0..4 {
        assert_eq!(p.nu[o][0], 0.0);
        assert_eq!(p.mu[o][0], 0.0);
    }
    assert_eq!(s.taper().width, 2.5);
}

#[test]
fn sample_mean_is_zero() {
    let s = synth(0.5, 5.0);
    let m = 10_000;
    let i = 80;
    let mean = (0..m).map(|k| s.synthesize(5, k).nu[0][i]).sum::<f64>() / m as f64;
    assert!(mean.abs() < 4.0 / (m as f64).sqrt(), "{mean}");
}

#[test]
fn covariance_at_one_correlation_length() {
    let ell = 0.5;
    let s = synth(ell, 1500.0);
    let lag = 10;
    // batch means over blocks of 40ℓ give the standard error
    let block = 400;
    let mut batches = Vec::new();
    for idx in 0..4 {
        let p = s.synthesize(9, idx);
        let v = &p.nu[0];
        let start = 100;
        let mut i = start;
        while i + block + lag < v.len() {
            let b: f64 = (i..i + block).map(|k| v[k] * v[k + lag]).sum::<f64>() / block as f64;
            batches.push(b);
            i += block;
        }
    }
    let n = batches.len() as f64;
    let mean = batches.iter().sum::<f64>() / n;
    let var = batches.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let want = (-0.5f64).exp();
    assert!((mean - want).abs() < 5.0 * se, "{mean} ± {se} vs {want}");
}

/// Largest centered-difference error of ν and the `dz²/6 max|ν‴|` scale.
fn fd_error(dz: f64) -> (f64, f64) {
    let model = CovarianceModel::gaussian(1.0).unwrap();
    let s = Synthesizer::new(&model, SynthGrid { dz, z_max: 60.0, taper_width: None, clip: None }).unwrap();
    let p = s.synthesize(2, 0);
    let v = &p.nu;
    let mut err = 0.0f64;
    let mut d3 = 0.0f64;
    for i in 1..p.nodes() - 1 {
        let fd = (v[0][i + 1] - v[0][i - 1]) / (2.0 * dz);
        err = err.max((fd - v[1][i]).abs());
        d3 = d3.max(v[3][i].abs());
    }
    (err, dz * dz / 6.0 * d3)
}

#[test]
fn stored_derivative_matches_finite_difference() {
    let (e1, s1) = fd_error(0.1);
    let (e2, s2) = fd_error(0.05);
    assert!(e1 <= 1.05 * s1 && e2 <= 1.05 * s2, "{e1} {s1} {e2} {s2}");
    let ratio = e1 / e2;
    assert!((2.5..6.0).contains(&ratio), "{ratio}");
}

#[test]
fn clip_bounds_the_path() {
    let model = CovarianceModel::gaussian(0.5).unwrap();
    let grid = SynthGrid { dz: 0.05, z_max: 400.0, taper_width: None, clip: Some(1.0) };
    let p = Synthesizer::new(&model, grid).unwrap().synthesize(0, 0);
    assert!(p.nu[0].iter().all(|v: &f64| v.abs() <= 1.0));
    assert!(p.nu[0].iter().any(|v: &f64| v.abs() == 1.0));
}

#[test]
fn spectral_tables_match_cosine_transform() {
    let (b, _) = closed_dd(10.5, 30);
    let model = CovarianceModel::gaussian(3.0 / 10.5).unwrap();
    let t = SpectralTables::build(&model, &b).unwrap();
    let beta = b.beta_prop();
    let opts = QuadOpts { abs_tol: 1e-14, rel_tol: 1e-12, ..Default::default() };
    let ell: f64 = 3.0 / 10.5;
    for (j, l) in [(0, 1), (0, 9), (4, 7), (2, 2)] {
        let w = beta[j] - beta[l];
        let want = 2.0 * integrate(|z| (w * z).cos() * (-z * z / (2.0 * ell * ell)).exp(), 0.0, 15.0 * ell, opts).unwrap();
        assert!((t.psd_nu_diff[(j, l)] - want).abs() < 1e-8, "{j} {l}");
        let g = 2.0 * integrate(|z| (w * z).sin() * (-z * z / (2.0 * ell * ell)).exp(), 0.0, 15.0 * ell, opts).unwrap();
        assert!((t.gamma_nu[(j, l)] - g).abs() < 1e-8, "{j} {l}");
    }
}

#[test]
fn forward_check_statuses() {
    let (b, _) = closed_dd(10.5, 30);
    // bound 3√N/(2√(2α)) with α = 0.5
    let bound = 3.0 * 10f64.sqrt() / 2.0;
    let good = CovarianceModel::gaussian(1.01 * bound / 10.5).unwrap();
    let r = validate_forward_scattering(&good, &b);
    assert_eq!(r.status, CheckStatus::Pass);
    assert!((r.kl_bound.unwrap() - bound).abs() < 1e-12);
    let white = CovarianceModel::gaussian(1e-3).unwrap();
    let r = validate_forward_scattering(&white, &b);
    assert_eq!(r.status, CheckStatus::Warn);
    assert!(r.max_ratio() > 0.99);
    // 2β_N ℓ ≥ 6 leaves only the e^{-18} tail
    let beta_n = b.beta[9];
    let wide = CovarianceModel::gaussian(3.0 / beta_n).unwrap();
    assert!(validate_forward_scattering(&wide, &b).max_ratio() <= (-18.0f64).exp());
}
