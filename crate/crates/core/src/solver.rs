//! Forward-scattering coupled-mode equations for one boundary realization.

use crate::boundary::{BoundaryRealization, Process};
use crate::coupling::CouplingTables;
use crate::error::{invalid, Error, Result};
use crate::num::{cabs, cis, Real};
use crate::row;
use crate::table::Table;
use crate::waveguide::{BoundaryKind, ModeBasis};
use nalgebra::DMatrix;
use num_complex::Complex;

/// Point source at cross-range `x0` with spectral weight `fhat`.
#[derive(Clone, Copy, Debug)]
pub struct SourceExcitation<T> {
    pub x0: T,
    pub fhat: Complex<T>,
}

/// `â_{j,o} = f̂ φ_j(x0) / (2i √β_j)` for the propagating modes.
pub fn initial_amplitudes<T: Real>(basis: &ModeBasis<T>, src: &SourceExcitation<T>) -> Result<Vec<Complex<T>>> {
    if !(src.x0 > T::zero() && src.x0 < basis.width) {
        return invalid("source position must lie strictly inside the section");
    }
    let two = T::lit(2.0);
    Ok((0..basis.n_prop)
        .map(|m| {
            let v = basis.phi(m, src.x0) / (two * basis.beta[m].sqrt());
            // 1/(2i) = -i/2
            src.fhat * Complex::new(T::zero(), -v)
        })
        .collect())
}

/// Random coupling matrix `C^{(1)}(ζ)` as a function of range.
pub trait CouplingField<T: Real>: Sync {
    fn n(&self) -> usize;
    /// Writes `C_jl` row-major into `out` (length `n²`).
    fn fill(&self, zeta: T, out: &mut [Complex<T>]);
}

/// `C^{(1)}` built from coupling tables and one boundary path.
pub struct RandomCoupling<'a, T: Real> {
    pub tables: &'a CouplingTables<T>,
    pub path: &'a BoundaryRealization<T>,
}

/// Process values at `ζ`: exact at grid nodes, cubic in between.
fn values<T: Real>(path: &BoundaryRealization<T>, p: Process, zeta: T) -> [T; 4] {
    let s = zeta / path.dz;
    let r = s.round();
    let node = r.to_usize().unwrap_or(0);
    let on_grid = (s - r).abs() < T::lit(1e-9) && node < path.nodes();
    let mut v = [T::zero(); 4];
    for (o, x) in v.iter_mut().enumerate() {
        *x = if on_grid { path.at(p, o, node) } else { path.sample(p, o, zeta) };
    }
    v
}

impl<'a, T: Real> CouplingField<T> for RandomCoupling<'a, T> {
    fn n(&self) -> usize {
        self.tables.n_prop
    }

    fn fill(&self, zeta: T, out: &mut [Complex<T>]) {
        let t = self.tables;
        let n = t.n_prop;
        let nu = values(self.path, Process::Nu, zeta);
        let mu = values(self.path, Process::Mu, zeta);
        let two = T::lit(2.0);
        for j in 0..n {
            for l in 0..n {
                let b = t.beta[l];
                let c = match (t.bc, &t.mixed) {
                    (BoundaryKind::Mixed, Some(m)) => Complex::new(
                        t.c_nu[(j, l)] * nu[0] + m.e_nu[(j, l)] * nu[2] + t.c_mu[(j, l)] * mu[0] + t.d_mu[(j, l)] * mu[2],
                        b * t.d_nu[(j, l)] * nu[1] + b * m.f_nu[(j, l)] * nu[3] + two * b * t.d_mu[(j, l)] * mu[1],
                    ),
                    _ => Complex::new(
                        t.c_nu[(j, l)] * nu[0] + t.d_nu[(j, l)] * nu[2] + t.c_mu[(j, l)] * mu[0] + t.d_mu[(j, l)] * mu[2],
                        two * b * (t.d_nu[(j, l)] * nu[1] + t.d_mu[(j, l)] * mu[1]),
                    ),
                };
                out[j * n + l] = c;
            }
        }
    }
}

/// `C^{(1)}(ζ)` as a matrix.
pub fn c1_matrix<T: Real>(tables: &CouplingTables<T>, path: &BoundaryRealization<T>, zeta: T) -> DMatrix<Complex<T>> {
    let f = RandomCoupling { tables, path };
    let n = f.n();
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n * n];
    f.fill(zeta, &mut buf);
    DMatrix::from_row_slice(n, n, &buf)
}

/// Perturbation size, scaled range and checkpoints.
#[derive(Clone, Debug)]
pub struct SimulationConfig<T> {
    pub epsilon: T,
    /// Final scaled range `L`; physical range is `L/ε²`.
    pub range: T,
    /// Step in physical range; `None` applies [`step_rule`].
    pub step: Option<T>,
    /// Scaled ranges at which amplitudes are recorded.
    pub checkpoints: Vec<T>,
}

/// Largest step resolving both the correlation length and the fastest phase:
/// `min(ℓ/20, (2π/max|β_j-β_l|)/20)`.
pub fn step_rule<T: Real>(beta: &[T], ell: T) -> T {
    let mut spread = T::zero();
    for &a in beta {
        for &b in beta {
            spread = spread.max((a - b).abs());
        }
    }
    let by_ell = ell / T::lit(20.0);
    if spread == T::zero() {
        by_ell
    } else {
        by_ell.min(T::two_pi() / spread / T::lit(20.0))
    }
}

/// Uniform steps covering `[0, L/ε²]` with checkpoints on step boundaries.
#[derive(Clone, Debug)]
pub struct StepPlan<T> {
    pub h: T,
    pub steps: usize,
    pub checkpoint_steps: Vec<usize>,
    pub epsilon: T,
}

impl<T: Real> StepPlan<T> {
    /// Scaled range reached after `step` steps.
    pub fn scaled(&self, step: usize) -> T {
        self.h * T::from_int(step) * self.epsilon * self.epsilon
    }

    pub fn physical_end(&self) -> T {
        self.h * T::from_int(self.steps)
    }
}

impl<T: Real> SimulationConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > T::zero() && self.epsilon <= T::lit(0.1)) {
            return invalid("epsilon must lie in (0, 0.1]");
        }
        if !(self.range > T::zero()) {
            return invalid("range must be positive");
        }
        if self.checkpoints.iter().any(|&z| z < T::zero() || z > self.range * (T::one() + T::lit(1e-12))) {
            return invalid("checkpoints must lie in [0, L]");
        }
        Ok(())
    }

    /// Step plan with step no larger than `h_max` (or the configured step).
    pub fn plan(&self, h_max: T) -> Result<StepPlan<T>> {
        self.validate()?;
        let h_req = match self.step {
            Some(h) if h > h_max * (T::one() + T::lit(1e-9)) => {
                return invalid(format!("step {h} exceeds the resolution limit {h_max}"))
            }
            Some(h) if !(h > T::zero()) => return invalid("step must be positive"),
            Some(h) => h,
            None => h_max,
        };
        let e2 = self.epsilon * self.epsilon;
        let z_end = self.range / e2;
        let steps = (z_end / h_req * (T::one() - T::lit(1e-12))).ceil().to_usize().unwrap().max(1);
        let h = z_end / T::from_int(steps);
        let checkpoint_steps = self
            .checkpoints
            .iter()
            .map(|&z| (z / e2 / h).round().to_usize().unwrap().min(steps))
            .collect();
        Ok(StepPlan { h, steps, checkpoint_steps, epsilon: self.epsilon })
    }
}

/// Amplitudes recorded at checkpoints.
#[derive(Clone, Debug)]
pub struct AmplitudeTrajectory<T> {
    /// Scaled ranges actually reached.
    pub z: Vec<T>,
    pub amplitudes: Vec<Vec<Complex<T>>>,
    pub energy: Vec<T>,
    pub seed: u64,
    pub index: u64,
}

impl<T: Real> AmplitudeTrajectory<T> {
    /// Columns `z, j, re_a, im_a, abs2_a`.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["z", "j", "re_a", "im_a", "abs2_a"]);
        for (z, a) in self.z.iter().zip(&self.amplitudes) {
            for (j, v) in a.iter().enumerate() {
                t.push(row![z.f64(), j + 1, v.re.f64(), v.im.f64(), v.norm_sqr().f64()]);
            }
        }
        t
    }
}

/// Integrates `dâ_j/dζ = iε Σ_l C_jl(ζ) e^{i(β_l-β_j)ζ} â_l` by classical RK4.
/// Phases are evaluated analytically at each stage.
pub fn propagate_forward<T: Real, F: CouplingField<T>>(
    field: &F,
    beta: &[T],
    a0: &[Complex<T>],
    plan: &StepPlan<T>,
    provenance: (u64, u64),
) -> Result<AmplitudeTrajectory<T>> {
    let n = field.n();
    assert_eq!(a0.len(), n);
    let zero = Complex::new(T::zero(), T::zero());
    let ieps = Complex::new(T::zero(), plan.epsilon);
    let mut cbuf = vec![zero; n * n];
    let mut ph = vec![zero; n];
    let mut rhs = |zeta: T, a: &[Complex<T>], out: &mut [Complex<T>]| {
        field.fill(zeta, &mut cbuf);
        for (p, &b) in ph.iter_mut().zip(beta) {
            *p = cis(b * zeta);
        }
        for j in 0..n {
            let mut s = zero;
            for l in 0..n {
                s += cbuf[j * n + l] * ph[l] * a[l];
            }
            out[j] = ieps * s * ph[j].conj();
        }
    };
    let mut order: Vec<(usize, usize)> = plan.checkpoint_steps.iter().copied().enumerate().map(|(i, s)| (s, i)).collect();
    order.sort();
    let ncp = plan.checkpoint_steps.len();
    let mut amps = vec![Vec::new(); ncp];
    let mut next = 0;
    let mut a = a0.to_vec();
    let record = |a: &[Complex<T>], step: usize, next: &mut usize, amps: &mut Vec<Vec<Complex<T>>>| {
        while *next < order.len() && order[*next].0 == step {
            amps[order[*next].1] = a.to_vec();
            *next += 1;
        }
    };
    record(&a, 0, &mut next, &mut amps);
    let (mut k1, mut k2, mut k3, mut k4) = (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
    let mut tmp = vec![zero; n];
    let h = plan.h;
    let half = T::lit(0.5);
    let sixth = h / T::lit(6.0);
    let last = order.last().map(|o| o.0).unwrap_or(0).max(if ncp == 0 { plan.steps } else { 0 });
    for step in 0..last {
        let z0 = h * T::from_int(step);
        let zm = z0 + h * half;
        let z1 = h * T::from_int(step + 1);
        rhs(z0, &a, &mut k1);
        for i in 0..n {
            tmp[i] = a[i] + k1[i] * (h * half);
        }
        rhs(zm, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = a[i] + k2[i] * (h * half);
        }
        rhs(zm, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = a[i] + k3[i] * h;
        }
        rhs(z1, &tmp, &mut k4);
        for i in 0..n {
            a[i] += (k1[i] + (k2[i] + k3[i]) * T::lit(2.0) + k4[i]) * sixth;
        }
        if a.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite { zeta: z1.f64(), index: provenance.1, seed: provenance.0 });
        }
        record(&a, step + 1, &mut next, &mut amps);
    }
    let energy = amps.iter().map(|v| v.iter().fold(T::zero(), |s, c| s + cabs(*c).powi(2))).collect();
    Ok(AmplitudeTrajectory {
        z: plan.checkpoint_steps.iter().map(|&s| plan.scaled(s)).collect(),
        amplitudes: amps,
        energy,
        seed: provenance.0,
        index: provenance.1,
    })
}

/// Plans steps with [`step_rule`] and integrates one realization.
pub fn propagate<T: Real>(
    basis: &ModeBasis<T>,
    tables: &CouplingTables<T>,
    path: &BoundaryRealization<T>,
    a0: &[Complex<T>],
    cfg: &SimulationConfig<T>,
    ell_min: T,
) -> Result<AmplitudeTrajectory<T>> {
    let beta = basis.beta_prop();
    let plan = cfg.plan(step_rule(beta, ell_min))?;
    if path.z_max() < plan.physical_end() {
        return invalid("boundary path is shorter than the propagation range");
    }
    if path.dz > plan.h / T::lit(2.0) * (T::one() + T::lit(1e-9)) {
        return invalid("boundary grid must be at least twice as fine as the step");
    }
    let field = RandomCoupling { tables, path };
    propagate_forward(&field, beta, a0, &plan, (path.seed, path.index))
}
