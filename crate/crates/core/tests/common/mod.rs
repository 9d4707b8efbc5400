#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rwguide::solver::{propagate_forward, CouplingField, RandomCoupling, StepPlan};
use rwguide::*;
use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};

pub fn closed_dd(omega: f64, l_max: usize) -> (ModeBasis64, CouplingTables64) {
    let spec = WaveguideSpec::constant(PI, 1.0, BoundaryKind::Dirichlet).unwrap();
    let basis = ModeBasis::build(&spec, omega, &ModeOptions { l_max: Some(l_max), ..Default::default() }).unwrap();
    let t = CouplingTables::build(&basis, &spec).unwrap();
    (basis, t)
}

/// Coupling that is constant on blocks of `steps_per_seg` RK4 steps. The
/// segment is taken from the call counter so that the shared endpoint of two
/// steps reads the matrix of the step being taken.
struct Piecewise {
    segs: Vec<DMatrix<Complex64>>,
    steps_per_seg: usize,
    calls: AtomicUsize,
}

impl CouplingField<f64> for Piecewise {
    fn n(&self) -> usize {
        self.segs[0].nrows()
    }

    fn fill(&self, _zeta: f64, out: &mut [Complex64]) {
        let step = self.calls.fetch_add(1, Ordering::Relaxed) / 4;
        let m = &self.segs[(step / self.steps_per_seg).min(self.segs.len() - 1)];
        let n = m.nrows();
        for j in 0..n {
            for l in 0..n {
                out[j * n + l] = m[(j, l)];
            }
        }
    }
}

/// Largest deviation between RK4 and the product of matrix exponentials for a
/// two-mode guide with piecewise-constant coupling.
pub fn piecewise_oracle_error() -> f64 {
    let beta = [2.9, 2.2];
    let eps = 0.1;
    let h = 2.5e-3;
    let steps_per_seg = 400;
    let segs: Vec<DMatrix<Complex64>> = [(0.7, -0.3, 0.4, 1.1), (-0.5, 0.8, 0.2, -0.9), (1.2, 0.1, -0.6, 0.3)]
        .iter()
        .map(|&(a, b, c, d)| {
            DMatrix::from_row_slice(
                2,
                2,
                &[
                    Complex64::new(a, 0.2),
                    Complex64::new(b, -c),
                    Complex64::new(c, d),
                    Complex64::new(d, -0.1),
                ],
            ) * Complex64::new(4.0, 0.0)
        })
        .collect();
    let field = Piecewise { segs: segs.clone(), steps_per_seg, calls: AtomicUsize::new(0) };
    let steps = steps_per_seg * segs.len();
    let plan = StepPlan { h, steps, checkpoint_steps: vec![steps], epsilon: eps };
    let a0 = [Complex64::new(0.6, -0.2), Complex64::new(0.1, 0.7)];
    let traj = propagate_forward(&field, &beta, &a0, &plan, (0, 0)).unwrap();

    // b = e^{iβζ} a obeys b' = i(B + εC) b
    let mut b = DVector::from_column_slice(&a0);
    for m in &segs {
        let mut g = m * Complex64::new(0.0, eps);
        for j in 0..2 {
            g[(j, j)] += Complex64::new(0.0, beta[j]);
        }
        b = (g * Complex64::new(h * steps_per_seg as f64, 0.0)).exp() * b;
    }
    let zend = h * steps as f64;
    (0..2)
        .map(|j| (b[j] * Complex64::from_polar(1.0, -beta[j] * zend) - traj.amplitudes[0][j]).norm())
        .fold(0.0, f64::max)
}

/// Observed RK4 order from three step sizes on one synthesized path.
pub fn rk4_observed_order() -> f64 {
    let (basis, tables) = closed_dd(5.5, 15);
    let model = CovarianceModel::gaussian(1.0).unwrap();
    let h = 0.2;
    let dz = h / 8.0;
    let z_end = 40.0;
    let synth = Synthesizer::new(&model, SynthGrid { dz, z_max: z_end + 1.0, taper_width: None, clip: None }).unwrap();
    let path = synth.synthesize(11, 0);
    let field = RandomCoupling { tables: &tables, path: &path };
    let src = SourceExcitation { x0: 0.3 * PI, fhat: Complex64::new(1.0, 0.0) };
    let a0 = rwguide::solver::initial_amplitudes(&basis, &src).unwrap();
    let run = |h: f64| {
        let steps = (z_end / h).round() as usize;
        let plan = StepPlan { h, steps, checkpoint_steps: vec![steps], epsilon: 0.1 };
        propagate_forward(&field, basis.beta_prop(), &a0, &plan, (11, 0)).unwrap().amplitudes[0].clone()
    };
    let (a1, a2, a3) = (run(h), run(h / 2.0), run(h / 4.0));
    let diff = |x: &[Complex64], y: &[Complex64]| x.iter().zip(y).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
    (diff(&a1, &a2) / diff(&a2, &a3)).log2()
}
