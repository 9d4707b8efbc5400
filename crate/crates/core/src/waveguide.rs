//! Ideal waveguide: cross-range eigenmodes at a fixed frequency.

use crate::eigen::Tridiag;
use crate::error::{invalid, Error, Result};
use crate::num::Real;
use crate::quad::{simpson, trapezoid};
use crate::row;
use crate::spline::UniformSpline;
use crate::table::Table;
use serde::{Deserialize, Serialize};

/// Boundary conditions on the straightened cross-section `[0, X]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    /// Pressure release at both boundaries.
    Dirichlet,
    /// Pressure release at `ξ = 0`, rigid at `ξ = X`.
    Mixed,
}

/// Wave speed across the section.
#[derive(Clone, Debug, PartialEq)]
pub enum SpeedProfile<T> {
    Constant(T),
    /// Samples on a uniform grid covering `[0, X]` end to end.
    Sampled(Vec<T>),
}

/// Geometry and medium of the unperturbed waveguide.
#[derive(Clone, Debug)]
pub struct WaveguideSpec<T> {
    width: T,
    speed: SpeedProfile<T>,
    bc: BoundaryKind,
    inv_c2: Option<UniformSpline<T>>,
}

impl<T: Real> WaveguideSpec<T> {
    pub fn new(width: T, speed: SpeedProfile<T>, bc: BoundaryKind) -> Result<Self> {
        if !(width > T::zero()) || !width.is_finite() {
            return invalid("width must be positive and finite");
        }
        let inv_c2 = match &speed {
            SpeedProfile::Constant(c) => {
                if !(*c > T::zero()) || !c.is_finite() {
                    return invalid("constant speed must be positive");
                }
                None
            }
            SpeedProfile::Sampled(s) => {
                if s.len() < 16 {
                    return invalid("sampled speed profile needs at least 16 points");
                }
                if s.iter().any(|&c| !(c > T::zero()) || !c.is_finite()) {
                    return invalid("speed samples must be strictly positive");
                }
                let h = width / T::from_int(s.len() - 1);
                Some(UniformSpline::new(T::zero(), h, s.iter().map(|&c| T::one() / (c * c)).collect()))
            }
        };
        Ok(Self { width, speed, bc, inv_c2 })
    }

    /// Constant-speed Dirichlet guide, the most common case.
    pub fn constant(width: T, c0: T, bc: BoundaryKind) -> Result<Self> {
        Self::new(width, SpeedProfile::Constant(c0), bc)
    }

    pub fn width(&self) -> T {
        self.width
    }
    pub fn bc(&self) -> BoundaryKind {
        self.bc
    }
    pub fn speed(&self) -> &SpeedProfile<T> {
        &self.speed
    }

    /// Spacing of the sampled profile, if any.
    pub fn grid_spacing(&self) -> Option<T> {
        match &self.speed {
            SpeedProfile::Sampled(s) => Some(self.width / T::from_int(s.len() - 1)),
            SpeedProfile::Constant(_) => None,
        }
    }

    /// `c^{-2}(ξ)` with its first two derivatives.
    pub fn inv_c2(&self, xi: T) -> (T, T, T) {
        match (&self.speed, &self.inv_c2) {
            (_, Some(s)) => s.eval3(xi),
            (SpeedProfile::Constant(c), None) => (T::one() / (*c * *c), T::zero(), T::zero()),
            _ => unreachable!(),
        }
    }

    pub fn constant_speed(&self) -> Option<T> {
        match self.speed {
            SpeedProfile::Constant(c) => Some(c),
            SpeedProfile::Sampled(_) => None,
        }
    }
}

/// Knobs for mode construction.
#[derive(Clone, Debug)]
pub struct ModeOptions<T> {
    /// Number of evanescent modes retained; `None` means `3N`.
    pub l_max: Option<usize>,
    /// Minimum distance of `kX/π` (or `kX/π + 1/2`) from an integer.
    pub cutoff_margin: T,
    /// Reject when `min |λ_j| < lambda_guard (π/X)²`.
    pub lambda_guard: T,
    /// Finite-difference cells of the coarse and fine grids (sampled speed).
    pub coarse_cells: usize,
    pub fine_cells: usize,
}

impl<T: Real> Default for ModeOptions<T> {
    fn default() -> Self {
        Self {
            l_max: None,
            cutoff_margin: T::lit(1e-6),
            lambda_guard: T::lit(1e-4),
            coarse_cells: 1600,
            fine_cells: 3200,
        }
    }
}

/// Nodal eigenfunction data for modes computed numerically.
#[derive(Clone, Debug)]
pub struct TabulatedModes<T> {
    /// Grid spacing; node `i` sits at `i*h`, `i = 0..=cells`.
    pub h: T,
    pub values: Vec<Vec<T>>,
    pub derivs: Vec<Vec<T>>,
    /// Largest change of an eigenvalue between the two grids.
    pub richardson_delta: T,
    splines: Vec<UniformSpline<T>>,
}

impl<T: Real> TabulatedModes<T> {
    pub fn cells(&self) -> usize {
        self.values[0].len() - 1
    }
}

#[derive(Clone, Debug)]
pub enum ModeRepr<T> {
    Closed,
    Tabulated(TabulatedModes<T>),
}

/// Spectral data of the ideal waveguide. Index `m` is 0-based; mode `j = m+1`.
#[derive(Clone, Debug)]
pub struct ModeBasis<T> {
    pub omega: T,
    pub width: T,
    pub bc: BoundaryKind,
    /// `ω/c_o` for constant speed.
    pub k: Option<T>,
    /// Fractional part locating the highest propagating mode (constant speed).
    pub alpha: Option<T>,
    pub n_prop: usize,
    /// Eigenvalues in descending order, propagating first.
    pub lambda: Vec<T>,
    pub beta: Vec<T>,
    pub dphi0: Vec<T>,
    pub dphix: Vec<T>,
    pub phix: Vec<T>,
    pub repr: ModeRepr<T>,
}

fn frac_param<T: Real>(spec: &WaveguideSpec<T>, k: T) -> T {
    let base = k * spec.width / T::pi();
    match spec.bc {
        BoundaryKind::Dirichlet => base,
        BoundaryKind::Mixed => base + T::lit(0.5),
    }
}

/// Number of propagating modes at frequency `omega`.
pub fn count_propagating<T: Real>(spec: &WaveguideSpec<T>, omega: T, opts: &ModeOptions<T>) -> Result<usize> {
    if !(omega > T::zero()) {
        return invalid("frequency must be positive");
    }
    match spec.constant_speed() {
        Some(c) => {
            let t = frac_param(spec, omega / c);
            let n = t.floor();
            let dist = (t - n).min(n + T::one() - t);
            if n < T::one() {
                return Err(Error::NoPropagatingMode(t.f64()));
            }
            if dist < opts.cutoff_margin {
                return Err(Error::NearCutoff(format!("cutoff parameter {} is within {} of an integer", t, opts.cutoff_margin)));
            }
            let n = n.to_usize().unwrap();
            let pi_x = T::pi() / spec.width;
            let k = omega / c;
            let lam = |m: usize| k * k - (mode_p::<T>(spec.bc, m) * pi_x).powi(2);
            let guard = (lam(n - 1).abs()).min(lam(n).abs());
            if guard < opts.lambda_guard * pi_x * pi_x {
                return Err(Error::NearCutoff(format!("|lambda| = {guard} below guard")));
            }
            Ok(n)
        }
        None => Ok(sampled_count(spec, omega, opts)?.0),
    }
}

/// `(j)` for Dirichlet and `(j - 1/2)` for mixed, as a multiple of `π/X`.
fn mode_p<T: Real>(bc: BoundaryKind, m: usize) -> T {
    match bc {
        BoundaryKind::Dirichlet => T::from_int(m + 1),
        BoundaryKind::Mixed => T::from_int(m) + T::lit(0.5),
    }
}

impl<T: Real> ModeBasis<T> {
    pub fn build(spec: &WaveguideSpec<T>, omega: T, opts: &ModeOptions<T>) -> Result<Self> {
        let n = count_propagating(spec, omega, opts)?;
        let l_max = opts.l_max.unwrap_or(3 * n);
        if l_max < 1 {
            return invalid("at least one evanescent mode must be retained");
        }
        match spec.constant_speed() {
            Some(c) => Ok(Self::closed(spec, omega, c, n, l_max)),
            None => Self::tabulated(spec, omega, n, l_max, opts),
        }
    }

    fn closed(spec: &WaveguideSpec<T>, omega: T, c: T, n: usize, l_max: usize) -> Self {
        let x = spec.width;
        let k = omega / c;
        let pi_x = T::pi() / x;
        let amp = (T::lit(2.0) / x).sqrt();
        let total = n + l_max;
        let mut lambda = Vec::with_capacity(total);
        let (mut dphi0, mut dphix, mut phix) = (vec![], vec![], vec![]);
        for m in 0..total {
            let p = mode_p::<T>(spec.bc, m) * pi_x;
            lambda.push(k * k - p * p);
            let sign = if m % 2 == 0 { T::one() } else { -T::one() };
            dphi0.push(amp * p);
            match spec.bc {
                BoundaryKind::Dirichlet => {
                    // φ'(X) = amp p cos(jπ) = amp p (-1)^j
                    dphix.push(-sign * amp * p);
                    phix.push(T::zero());
                }
                BoundaryKind::Mixed => {
                    dphix.push(T::zero());
                    phix.push(sign * amp);
                }
            }
        }
        let beta = lambda.iter().map(|l| l.abs().sqrt()).collect();
        let t = frac_param(spec, k);
        Self {
            omega,
            width: x,
            bc: spec.bc,
            k: Some(k),
            alpha: Some(t - t.floor()),
            n_prop: n,
            lambda,
            beta,
            dphi0,
            dphix,
            phix,
            repr: ModeRepr::Closed,
        }
    }

    fn tabulated(spec: &WaveguideSpec<T>, omega: T, n: usize, l_max: usize, opts: &ModeOptions<T>) -> Result<Self> {
        let total = n + l_max;
        let mc = opts.coarse_cells;
        if opts.fine_cells != 2 * mc || !mc.is_multiple_of(2) {
            return invalid("fine grid must have twice the (even) coarse cell count");
        }
        if total * 8 > mc {
            return invalid(format!("{total} modes need more than {mc} coarse cells"));
        }
        let coarse = fd_operator(spec, omega, mc);
        let fine = fd_operator(spec, omega, 2 * mc);
        let x = spec.width;
        let h = x / T::from_int(mc);
        let mut lambda = Vec::with_capacity(total);
        let mut values = Vec::with_capacity(total);
        let mut delta = T::zero();
        let three = T::lit(3.0);
        for m in 0..total {
            let lc = coarse.diag_op.eigenvalue(coarse.diag_op.len() - 1 - m);
            let lf = fine.diag_op.eigenvalue(fine.diag_op.len() - 1 - m);
            delta = delta.max((lf - lc).abs());
            lambda.push((T::lit(4.0) * lf - lc) / three);
            let vc = coarse.nodal(&coarse.diag_op.eigenvector(lc), h);
            let vf = fine.nodal(&fine.diag_op.eigenvector(lf), h / T::lit(2.0));
            let mut v: Vec<T> = (0..=mc).map(|i| (T::lit(4.0) * vf[2 * i] - vc[i]) / three).collect();
            let sq: Vec<T> = v.iter().map(|&a| a * a).collect();
            let norm = simpson(&sq, h).sqrt();
            for a in &mut v {
                *a /= norm;
            }
            values.push(v);
        }
        let scale = (T::pi() / x).powi(2);
        for m in 0..total - 1 {
            if lambda[m] - lambda[m + 1] < T::lit(1e-8) * scale {
                return Err(Error::Degenerate(m + 1, m + 2));
            }
        }
        let derivs: Vec<Vec<T>> = values.iter().map(|v| fd4_derivative(v, h)).collect();
        let dphi0 = derivs.iter().map(|d| d[0]).collect();
        let dphix = match spec.bc {
            BoundaryKind::Dirichlet => derivs.iter().map(|d| d[mc]).collect(),
            BoundaryKind::Mixed => vec![T::zero(); total],
        };
        let phix = match spec.bc {
            BoundaryKind::Dirichlet => vec![T::zero(); total],
            BoundaryKind::Mixed => values.iter().map(|v| v[mc]).collect(),
        };
        let beta = lambda.iter().map(|l| l.abs().sqrt()).collect();
        let splines = values.iter().map(|v| UniformSpline::new(T::zero(), h, v.clone())).collect();
        Ok(Self {
            omega,
            width: x,
            bc: spec.bc,
            k: None,
            alpha: None,
            n_prop: n,
            lambda,
            beta,
            dphi0,
            dphix,
            phix,
            repr: ModeRepr::Tabulated(TabulatedModes { h, values, derivs, richardson_delta: delta, splines }),
        })
    }

    /// Total retained modes (propagating plus evanescent).
    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn l_max(&self) -> usize {
        self.len() - self.n_prop
    }

    /// Propagating wavenumbers `β_1..β_N`.
    pub fn beta_prop(&self) -> &[T] {
        &self.beta[..self.n_prop]
    }

    /// `φ_{m+1}(ξ)`.
    pub fn phi(&self, m: usize, xi: T) -> T {
        self.phi_dphi(m, xi).0
    }

    /// `φ_{m+1}(ξ)` and its derivative.
    pub fn phi_dphi(&self, m: usize, xi: T) -> (T, T) {
        match &self.repr {
            ModeRepr::Closed => {
                let p = mode_p::<T>(self.bc, m) * T::pi() / self.width;
                let amp = (T::lit(2.0) / self.width).sqrt();
                (amp * (p * xi).sin(), amp * p * (p * xi).cos())
            }
            ModeRepr::Tabulated(t) => {
                let (v, d, _) = t.splines[m].eval3(xi);
                (v, d)
            }
        }
    }

    /// Table with columns `j, lambda, beta, dphi0, dphiX, phiX` for modes in `range`.
    pub fn table(&self, range: std::ops::Range<usize>) -> Table {
        let mut t = Table::new(&["j", "lambda", "beta", "dphi0", "dphiX", "phiX"]);
        for m in range {
            t.push(row![
                m + 1,
                self.lambda[m].f64(),
                self.beta[m].f64(),
                self.dphi0[m].f64(),
                self.dphix[m].f64(),
                self.phix[m].f64()
            ]);
        }
        t
    }
}

struct FdOperator<T> {
    diag_op: Tridiag<T>,
    bc: BoundaryKind,
    cells: usize,
}

impl<T: Real> FdOperator<T> {
    /// Eigenvector of the symmetrized matrix to nodal values on `0..=cells`,
    /// normalized with the trapezoid rule.
    fn nodal(&self, v: &[T], h: T) -> Vec<T> {
        let mut out = vec![T::zero(); self.cells + 1];
        match self.bc {
            BoundaryKind::Dirichlet => out[1..self.cells].copy_from_slice(v),
            BoundaryKind::Mixed => {
                out[1..=self.cells].copy_from_slice(v);
                out[self.cells] *= T::lit(2.0).sqrt();
            }
        }
        let sq: Vec<T> = out.iter().map(|&a| a * a).collect();
        let norm = trapezoid(&sq, h).sqrt();
        let sign = if out[1] < T::zero() { -T::one() } else { T::one() };
        for a in &mut out {
            *a *= sign / norm;
        }
        out
    }
}

/// Second-order finite differences of `∂² + ω²c^{-2}`; the Neumann end uses
/// a ghost node and is symmetrized with a half-weight similarity transform.
fn fd_operator<T: Real>(spec: &WaveguideSpec<T>, omega: T, cells: usize) -> FdOperator<T> {
    let h = spec.width / T::from_int(cells);
    let ih2 = T::one() / (h * h);
    let w2 = omega * omega;
    let unknowns: Vec<usize> = match spec.bc {
        BoundaryKind::Dirichlet => (1..cells).collect(),
        BoundaryKind::Mixed => (1..=cells).collect(),
    };
    let diag = unknowns
        .iter()
        .map(|&i| -T::lit(2.0) * ih2 + w2 * spec.inv_c2(h * T::from_int(i)).0)
        .collect();
    let mut off = vec![ih2; unknowns.len() - 1];
    if spec.bc == BoundaryKind::Mixed {
        *off.last_mut().unwrap() = ih2 * T::lit(2.0).sqrt();
    }
    FdOperator { diag_op: Tridiag { diag, off }, bc: spec.bc, cells }
}

/// Propagating count and the eigenvalues it was decided from.
fn sampled_count<T: Real>(spec: &WaveguideSpec<T>, omega: T, opts: &ModeOptions<T>) -> Result<(usize, Vec<T>)> {
    let coarse = fd_operator(spec, omega, opts.coarse_cells);
    let fine = fd_operator(spec, omega, opts.fine_cells);
    let pos = fine.diag_op.len() - fine.diag_op.count_below(T::zero());
    let want = pos + 2;
    let three = T::lit(3.0);
    let lam: Vec<T> = (0..want)
        .map(|m| {
            let lc = coarse.diag_op.eigenvalue(coarse.diag_op.len() - 1 - m);
            let lf = fine.diag_op.eigenvalue(fine.diag_op.len() - 1 - m);
            (T::lit(4.0) * lf - lc) / three
        })
        .collect();
    let n = lam.iter().take_while(|&&l| l > T::zero()).count();
    if n == 0 {
        return Err(Error::NoPropagatingMode((lam[0].max(T::zero()).sqrt() * spec.width / T::pi()).f64()));
    }
    let pi_x = T::pi() / spec.width;
    let guard = lam[n - 1].abs().min(lam[n].abs());
    if guard < opts.lambda_guard * pi_x * pi_x {
        return Err(Error::NearCutoff(format!("|lambda| = {guard} below guard")));
    }
    Ok((n, lam))
}

/// Fourth-order first derivative on a uniform grid (one-sided at the ends).
pub(crate) fn fd4_derivative<T: Real>(v: &[T], h: T) -> Vec<T> {
    let n = v.len();
    assert!(n >= 5);
    let c = |x: f64| T::lit(x);
    let d12 = T::lit(12.0) * h;
    let mut d = vec![T::zero(); n];
    d[0] = (c(-25.0) * v[0] + c(48.0) * v[1] - c(36.0) * v[2] + c(16.0) * v[3] - c(3.0) * v[4]) / d12;
    d[1] = (c(-3.0) * v[0] - c(10.0) * v[1] + c(18.0) * v[2] - c(6.0) * v[3] + v[4]) / d12;
    for i in 2..n - 2 {
        d[i] = (v[i - 2] - c(8.0) * v[i - 1] + c(8.0) * v[i + 1] - v[i + 2]) / d12;
    }
    let l = n - 1;
    d[l - 1] = (c(3.0) * v[l] + c(10.0) * v[l - 1] - c(18.0) * v[l - 2] + c(6.0) * v[l - 3] - v[l - 4]) / d12;
    d[l] = (c(25.0) * v[l] - c(48.0) * v[l - 1] + c(36.0) * v[l - 2] - c(16.0) * v[l - 3] + c(3.0) * v[l - 4]) / d12;
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn dd() -> WaveguideSpec<f64> {
        WaveguideSpec::constant(PI, 1.0, BoundaryKind::Dirichlet).unwrap()
    }

    #[test]
    fn counts() {
        let o = ModeOptions::default();
        assert_eq!(count_propagating(&dd(), 10.5, &o).unwrap(), 10);
        let dn = WaveguideSpec::constant(PI, 1.0, BoundaryKind::Mixed).unwrap();
        assert_eq!(count_propagating(&dn, 10.6, &o).unwrap(), 11);
        assert!(matches!(count_propagating(&dd(), 0.5, &o), Err(Error::NoPropagatingMode(_))));
        assert!(matches!(count_propagating(&dd(), 10.0 + 1e-8, &o), Err(Error::NearCutoff(_))));
    }

    #[test]
    fn reference_wavenumbers_and_traces() {
        let b = ModeBasis::build(&dd(), 10.5, &ModeOptions { l_max: Some(30), ..Default::default() }).unwrap();
        assert_eq!(b.len(), 40);
        assert!((b.beta[0] - 10.452_272_480_183_437).abs() < 1e-10);
        assert!((b.beta[9] - 3.201_562_118_716_424).abs() < 1e-10);
        for m in 0..10 {
            let j = (m + 1) as f64;
            let expect = (2.0 / PI).sqrt() * j * if (m + 1) % 2 == 0 { 1.0 } else { -1.0 };
            assert!((b.dphix[m] - expect).abs() < 1e-13);
        }
        assert!((b.alpha.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fd4_is_fourth_order() {
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let v: Vec<f64> = (0..=n).map(|i| (2.0 * i as f64 * h).sin()).collect();
            let d = fd4_derivative(&v, h);
            d.iter().enumerate().map(|(i, x)| (x - 2.0 * (2.0 * i as f64 * h).cos()).abs()).fold(0.0, f64::max)
        };
        let ratio = err(50) / err(100);
        assert!(ratio > 14.0, "{ratio}");
    }
}
