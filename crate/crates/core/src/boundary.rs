//! Statistics and sample paths of the boundary fluctuations `ν`, `μ`.

use crate::error::{invalid, Error, Result};
use crate::num::Real;
use crate::quad::{integrate, QuadOpts};
use crate::row;
use crate::spline::UniformSpline;
use crate::table::Table;
use crate::waveguide::ModeBasis;
use nalgebra::DMatrix;
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftNum, FftPlanner};
use std::sync::Arc;

/// Covariance of one stationary process.
#[derive(Clone, Debug)]
pub enum Covariance<T> {
    /// `R(z) = r0 exp(-z²/2ℓ²)`.
    Gaussian { ell: T, r0: T },
    Tabulated(TabulatedSpectrum<T>),
}

/// A process given by its power spectral density sampled at `β = i·dβ`.
#[derive(Clone, Debug)]
pub struct TabulatedSpectrum<T> {
    pub dbeta: T,
    pub beta_max: T,
    psd: UniformSpline<T>,
    r: UniformSpline<T>,
    r2: UniformSpline<T>,
    z_max: T,
    r0: T,
    r2_0: T,
}

impl<T: Real> TabulatedSpectrum<T> {
    /// Samples must be nonnegative; the spectrum is taken as zero past the
    /// last sample. The covariance is recovered by cosine transform.
    pub fn new(dbeta: T, samples: Vec<T>) -> Result<Self> {
        if samples.len() < 8 || !(dbeta > T::zero()) {
            return invalid("tabulated spectrum needs at least 8 samples and a positive spacing");
        }
        if samples.iter().any(|&s| s < T::zero() || !s.is_finite()) {
            return invalid("power spectral density must be nonnegative");
        }
        let beta_max = dbeta * T::from_int(samples.len() - 1);
        let psd = UniformSpline::new(T::zero(), dbeta, samples);
        let opts = QuadOpts { abs_tol: T::lit(1e-14), rel_tol: T::lit(1e-10), max_intervals: 4000 };
        let s = |b: T| psd.eval(b).max(T::zero());
        let inv_pi = T::one() / T::pi();
        let r0 = integrate(s, T::zero(), beta_max, opts)? * inv_pi;
        let r2_0 = -integrate(|b| b * b * s(b), T::zero(), beta_max, opts)? * inv_pi;
        if !(r0 > T::zero()) || !(r2_0 < T::zero()) {
            return invalid("tabulated spectrum has no power");
        }
        let ell = (-r0 / r2_0).sqrt();
        let z_max = T::lit(15.0) * ell;
        let nz = 2048;
        let dz = z_max / T::from_int(nz - 1);
        let mut rv = Vec::with_capacity(nz);
        let mut r2v = Vec::with_capacity(nz);
        for i in 0..nz {
            let z = dz * T::from_int(i);
            rv.push(integrate(|b| s(b) * (b * z).cos(), T::zero(), beta_max, opts)? * inv_pi);
            r2v.push(-integrate(|b| b * b * s(b) * (b * z).cos(), T::zero(), beta_max, opts)? * inv_pi);
        }
        let tail = rv[nz - 1].abs();
        if tail > T::lit(1e-6) * r0 {
            return Err(Error::Quadrature { a: 0.0, b: z_max.f64(), err: tail.f64() });
        }
        Ok(Self {
            dbeta,
            beta_max,
            r: UniformSpline::new(T::zero(), dz, rv),
            r2: UniformSpline::new(T::zero(), dz, r2v),
            psd,
            z_max,
            r0,
            r2_0,
        })
    }
}

impl<T: Real> Covariance<T> {
    pub fn gaussian(ell: T, r0: T) -> Result<Self> {
        if !(ell > T::zero()) || !(r0 >= T::zero()) {
            return invalid("Gaussian covariance needs ell > 0 and r0 >= 0");
        }
        Ok(Covariance::Gaussian { ell, r0 })
    }

    /// `R(0)`.
    pub fn r0(&self) -> T {
        match self {
            Covariance::Gaussian { r0, .. } => *r0,
            Covariance::Tabulated(t) => t.r0,
        }
    }

    /// Correlation length; `sqrt(-R(0)/R''(0))` for tabulated spectra.
    pub fn ell(&self) -> T {
        match self {
            Covariance::Gaussian { ell, .. } => *ell,
            Covariance::Tabulated(t) => (-t.r0 / t.r2_0).sqrt(),
        }
    }

    /// `R(z)`.
    pub fn r(&self, z: T) -> T {
        match self {
            Covariance::Gaussian { ell, r0 } => *r0 * (-(z * z) / (T::lit(2.0) * *ell * *ell)).exp(),
            Covariance::Tabulated(t) => {
                if z.abs() >= t.z_max {
                    T::zero()
                } else {
                    t.r.eval(z.abs())
                }
            }
        }
    }

    /// `R''(z)`.
    pub fn r2(&self, z: T) -> T {
        match self {
            Covariance::Gaussian { ell, r0 } => {
                let l2 = *ell * *ell;
                *r0 * (z * z / (l2 * l2) - T::one() / l2) * (-(z * z) / (T::lit(2.0) * l2)).exp()
            }
            Covariance::Tabulated(t) => {
                if z == T::zero() {
                    t.r2_0
                } else if z.abs() >= t.z_max {
                    T::zero()
                } else {
                    t.r2.eval(z.abs())
                }
            }
        }
    }

    /// Power spectral density `R̂(β) = ∫ R(z) e^{iβz} dz`.
    pub fn psd(&self, beta: T) -> T {
        let b = beta.abs();
        match self {
            Covariance::Gaussian { ell, r0 } => {
                *r0 * (T::two_pi()).sqrt() * *ell * (-(b * b * *ell * *ell) / T::lit(2.0)).exp()
            }
            Covariance::Tabulated(t) => {
                if b > t.beta_max {
                    T::zero()
                } else {
                    t.psd.eval(b).max(T::zero())
                }
            }
        }
    }

    /// Range beyond which `R` is negligible.
    pub fn support(&self) -> T {
        match self {
            Covariance::Gaussian { ell, .. } => T::lit(12.0) * *ell,
            Covariance::Tabulated(t) => t.z_max,
        }
    }

    /// Largest wavenumber retained by synthesis.
    pub fn spectral_cutoff(&self) -> T {
        match self {
            Covariance::Gaussian { ell, .. } => T::lit(6.0) / *ell,
            Covariance::Tabulated(t) => t.beta_max,
        }
    }

    /// `γ(b) = 2 ∫_0^∞ sin(bz) R(z) dz`; odd in `b`.
    pub fn gamma_sine(&self, b: T) -> Result<T> {
        if b == T::zero() || self.r0() == T::zero() {
            return Ok(T::zero());
        }
        if b < T::zero() {
            return Ok(-self.gamma_sine(-b)?);
        }
        let opts = QuadOpts { abs_tol: T::lit(1e-14), rel_tol: T::lit(1e-11), max_intervals: 4000 };
        // the Gaussian tail past 12ℓ is below e^{-72} R(0)
        let v = integrate(|z| (b * z).sin() * self.r(z), T::zero(), self.support(), opts)?;
        Ok(T::lit(2.0) * v)
    }
}

/// Statistics of the two boundary processes.
#[derive(Clone, Debug)]
pub struct CovarianceModel<T> {
    pub nu: Covariance<T>,
    pub mu: Covariance<T>,
}

impl<T: Real> CovarianceModel<T> {
    /// Both processes Gaussian with the same length and unit variance.
    pub fn gaussian(ell: T) -> Result<Self> {
        Ok(Self { nu: Covariance::gaussian(ell, T::one())?, mu: Covariance::gaussian(ell, T::one())? })
    }

    /// Larger of the two correlation lengths.
    pub fn ell_max(&self) -> T {
        self.nu.ell().max(self.mu.ell())
    }

    pub fn ell_min(&self) -> T {
        self.nu.ell().min(self.mu.ell())
    }
}

/// Spectral quantities evaluated at the mode wavenumbers.
#[derive(Clone, Debug)]
pub struct SpectralTables<T> {
    pub psd_nu_diff: DMatrix<T>,
    pub psd_mu_diff: DMatrix<T>,
    pub psd_nu_sum: DMatrix<T>,
    pub psd_mu_sum: DMatrix<T>,
    pub gamma_nu: DMatrix<T>,
    pub gamma_mu: DMatrix<T>,
    pub psd_nu0: T,
    pub psd_mu0: T,
    pub r_nu0: T,
    pub r_mu0: T,
    pub r2_nu0: T,
    pub r2_mu0: T,
}

impl<T: Real> SpectralTables<T> {
    pub fn build(model: &CovarianceModel<T>, basis: &ModeBasis<T>) -> Result<Self> {
        let b = basis.beta_prop();
        let n = b.len();
        let mk = |f: &dyn Fn(usize, usize) -> T| DMatrix::from_fn(n, n, f);
        let mut gamma_nu = DMatrix::zeros(n, n);
        let mut gamma_mu = DMatrix::zeros(n, n);
        for j in 0..n {
            for l in j + 1..n {
                let gn = model.nu.gamma_sine(b[j] - b[l])?;
                let gm = model.mu.gamma_sine(b[j] - b[l])?;
                gamma_nu[(j, l)] = gn;
                gamma_nu[(l, j)] = -gn;
                gamma_mu[(j, l)] = gm;
                gamma_mu[(l, j)] = -gm;
            }
        }
        Ok(Self {
            psd_nu_diff: mk(&|j, l| model.nu.psd(b[j] - b[l])),
            psd_mu_diff: mk(&|j, l| model.mu.psd(b[j] - b[l])),
            psd_nu_sum: mk(&|j, l| model.nu.psd(b[j] + b[l])),
            psd_mu_sum: mk(&|j, l| model.mu.psd(b[j] + b[l])),
            gamma_nu,
            gamma_mu,
            psd_nu0: model.nu.psd(T::zero()),
            psd_mu0: model.mu.psd(T::zero()),
            r_nu0: model.nu.r0(),
            r_mu0: model.mu.r0(),
            r2_nu0: model.nu.r2(T::zero()),
            r2_mu0: model.mu.r2(T::zero()),
        })
    }
}

/// Outcome of the forward-scattering diagnostic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Warn,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ForwardReport {
    /// `max_{j,l} R̂(β_j+β_l)/R̂(0)` per process.
    pub ratio_nu: f64,
    pub ratio_mu: f64,
    /// `kℓ` (smaller correlation length) and the lower bound it should meet.
    pub kl: Option<f64>,
    pub kl_bound: Option<f64>,
    pub status: CheckStatus,
}

impl ForwardReport {
    pub fn max_ratio(&self) -> f64 {
        self.ratio_nu.max(self.ratio_mu)
    }
}

/// Checks that backscattering is negligible: sum-wavenumber spectra and the
/// `kℓ ≳ 3√N/(2√(2α))` bound (constant speed only).
pub fn validate_forward_scattering<T: Real>(model: &CovarianceModel<T>, basis: &ModeBasis<T>) -> ForwardReport {
    let b = basis.beta_prop();
    let ratio = |c: &Covariance<T>| {
        let p0 = c.psd(T::zero());
        if p0 == T::zero() {
            return 0.0;
        }
        let mut m = T::zero();
        for &bj in b {
            for &bl in b {
                m = m.max(c.psd(bj + bl) / p0);
            }
        }
        m.f64()
    };
    let (ratio_nu, ratio_mu) = (ratio(&model.nu), ratio(&model.mu));
    let (kl, kl_bound) = match (basis.k, basis.alpha) {
        (Some(k), Some(a)) => {
            let kl = (k * model.ell_min()).f64();
            let bound = 3.0 * (basis.n_prop as f64).sqrt() / (2.0 * (2.0 * a.f64()).sqrt());
            (Some(kl), Some(bound))
        }
        _ => (None, None),
    };
    let ok = match (kl, kl_bound) {
        (Some(kl), Some(bound)) => kl >= bound * (1.0 - 1e-9),
        // without a bound the spectra alone decide
        _ => ratio_nu.max(ratio_mu) <= 1e-3,
    };
    ForwardReport { ratio_nu, ratio_mu, kl, kl_bound, status: if ok { CheckStatus::Pass } else { CheckStatus::Warn } }
}

/// Septic smoothstep ramp `w(t) = 35t⁴ - 84t⁵ + 70t⁶ - 20t⁷`, `t = ζ/width`.
/// Vanishes with three derivatives at the origin and joins 1 with three
/// vanishing derivatives.
#[derive(Clone, Copy, Debug)]
pub struct Taper<T> {
    pub width: T,
}

impl<T: Real> Taper<T> {
    /// `w` and its first three range derivatives.
    pub fn eval(&self, zeta: T) -> [T; 4] {
        if self.width <= T::zero() || zeta >= self.width {
            return [T::one(), T::zero(), T::zero(), T::zero()];
        }
        if zeta <= T::zero() {
            return [T::zero(); 4];
        }
        let c = |x: f64| T::lit(x);
        let t = zeta / self.width;
        let iw = T::one() / self.width;
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        [
            t4 * (c(35.0) - c(84.0) * t + c(70.0) * t2 - c(20.0) * t3),
            t3 * (c(140.0) - c(420.0) * t + c(420.0) * t2 - c(140.0) * t3) * iw,
            t2 * (c(420.0) - c(1680.0) * t + c(2100.0) * t2 - c(840.0) * t3) * iw * iw,
            t * (c(840.0) - c(5040.0) * t + c(8400.0) * t2 - c(4200.0) * t3) * iw * iw * iw,
        ]
    }

    /// `∫_0^ζ w(s)² ds`.
    pub fn integral_sq(&self, zeta: T) -> T {
        if zeta <= T::zero() {
            return T::zero();
        }
        if self.width <= T::zero() {
            return zeta;
        }
        let q = |a: T, b: T| {
            // the integrand is a degree-14 polynomial; one Kronrod panel is exact
            integrate(|s| self.eval(s)[0].powi(2), a, b, QuadOpts::default()).unwrap_or(T::zero())
        };
        if zeta >= self.width {
            q(T::zero(), self.width) + zeta - self.width
        } else {
            q(T::zero(), zeta)
        }
    }
}

/// One sampled path of `ν, μ` and their first three derivatives.
#[derive(Clone, Debug)]
pub struct BoundaryRealization<T> {
    pub dz: T,
    /// `nu[m]` holds the `m`-th derivative on the grid `i*dz`.
    pub nu: [Vec<T>; 4],
    pub mu: [Vec<T>; 4],
    pub seed: u64,
    pub index: u64,
    pub taper: Taper<T>,
}

/// Which process to read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Process {
    Nu,
    Mu,
}

impl<T: Real> BoundaryRealization<T> {
    /// A path that is identically zero.
    pub fn zero(dz: T, nodes: usize) -> Self {
        let z = || vec![T::zero(); nodes];
        Self {
            dz,
            nu: [z(), z(), z(), z()],
            mu: [z(), z(), z(), z()],
            seed: 0,
            index: 0,
            taper: Taper { width: T::zero() },
        }
    }

    pub fn nodes(&self) -> usize {
        self.nu[0].len()
    }

    pub fn z_max(&self) -> T {
        self.dz * T::from_int(self.nodes() - 1)
    }

    /// Derivative `order` of a process at a grid node.
    #[inline]
    pub fn at(&self, p: Process, order: usize, i: usize) -> T {
        match p {
            Process::Nu => self.nu[order][i],
            Process::Mu => self.mu[order][i],
        }
    }

    /// Four-point Lagrange interpolation at arbitrary range.
    pub fn sample(&self, p: Process, order: usize, zeta: T) -> T {
        let n = self.nodes();
        let s = zeta / self.dz;
        let i = s.floor().to_usize().unwrap_or(0).clamp(1, n - 3);
        let t = s - T::from_int(i);
        let (a, b, c, d) = (
            self.at(p, order, i - 1),
            self.at(p, order, i),
            self.at(p, order, i + 1),
            self.at(p, order, i + 2),
        );
        let one = T::one();
        let two = T::lit(2.0);
        let six = T::lit(6.0);
        -a * t * (t - one) * (t - two) / six + b * (t + one) * (t - one) * (t - two) / two
            - c * (t + one) * t * (t - two) / two
            + d * (t + one) * t * (t - one) / six
    }

    /// Columns `zeta, nu, dnu, ddnu, mu, dmu, ddmu`.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["zeta", "nu", "dnu", "ddnu", "mu", "dmu", "ddmu"]);
        for i in 0..self.nodes() {
            t.push(row![
                (self.dz * T::from_int(i)).f64(),
                self.nu[0][i].f64(),
                self.nu[1][i].f64(),
                self.nu[2][i].f64(),
                self.mu[0][i].f64(),
                self.mu[1][i].f64(),
                self.mu[2][i].f64()
            ]);
        }
        t
    }
}

/// Grid and options for path synthesis.
#[derive(Clone, Copy, Debug)]
pub struct SynthGrid<T> {
    pub dz: T,
    pub z_max: T,
    /// Taper width; `None` means five times the larger correlation length.
    pub taper_width: Option<T>,
    /// Optional symmetric clip of the path values in units of `sqrt(R(0))`.
    pub clip: Option<T>,
}

/// Precomputed FFT synthesis of stationary Gaussian paths.
///
/// Each process is `Re Σ_k c_k e^{iκ_k ζ}` on a periodic grid much longer
/// than the requested range, with complex Gaussian `c_k` of variance
/// `R̂(κ_k)Δκ/π`. Derivatives multiply the spectrum by `(iκ)^m`, so they are
/// exact derivatives of the sampled trigonometric sum.
pub struct Synthesizer<T: Real + FftNum> {
    grid: SynthGrid<T>,
    nodes: usize,
    nfft: usize,
    kappa: Vec<T>,
    sd_nu: Vec<T>,
    sd_mu: Vec<T>,
    fft: Arc<dyn Fft<T>>,
    taper: Taper<T>,
    taper_vals: Vec<[T; 4]>,
    clip_nu: Option<T>,
    clip_mu: Option<T>,
}

/// Minimum count of retained spectral lines per path.
pub const MIN_SPECTRAL_LINES: usize = 2048;

impl<T: Real + FftNum> Synthesizer<T> {
    pub fn new(model: &CovarianceModel<T>, grid: SynthGrid<T>) -> Result<Self> {
        let ell_min = model.ell_min();
        let ell_max = model.ell_max();
        if !(grid.dz > T::zero()) || grid.dz > ell_min / T::lit(10.0) * (T::one() + T::lit(1e-12)) {
            return invalid("range step must not exceed a tenth of the correlation length");
        }
        let width = grid.taper_width.unwrap_or(T::lit(5.0) * ell_max);
        if grid.z_max < T::lit(10.0) * ell_max || grid.z_max < width {
            return invalid("path must cover ten correlation lengths and the taper");
        }
        let nodes = (grid.z_max / grid.dz).ceil().to_usize().unwrap() + 4;
        let cut_max = model.nu.spectral_cutoff().max(model.mu.spectral_cutoff());
        let cut_min = model.nu.spectral_cutoff().min(model.mu.spectral_cutoff());
        // enough lines below the lower cutoff, and a period that avoids wrap-around correlation
        let by_lines = T::from_int(MIN_SPECTRAL_LINES) * T::two_pi() / (cut_min * grid.dz);
        let by_length = T::from_int(nodes) + T::lit(2.0) * model.nu.support().max(model.mu.support()) / grid.dz;
        let need = by_lines.max(by_length).ceil().to_usize().unwrap();
        let nfft = need.next_power_of_two();
        let dk = T::two_pi() / (T::from_int(nfft) * grid.dz);
        let kmax = (cut_max / dk).floor().to_usize().unwrap();
        if 2 * kmax >= nfft {
            return invalid("spectral cutoff exceeds the grid Nyquist wavenumber");
        }
        let kappa: Vec<T> = (0..=kmax).map(|k| dk * T::from_int(k)).collect();
        let sd = |c: &Covariance<T>| -> Vec<T> {
            kappa
                .iter()
                .enumerate()
                .map(|(k, &kap)| {
                    if kap > c.spectral_cutoff() {
                        return T::zero();
                    }
                    let w = if k == 0 { T::lit(0.5) } else { T::one() };
                    (c.psd(kap) * dk * w / T::pi()).sqrt()
                })
                .collect()
        };
        let taper = Taper { width };
        let taper_vals = (0..nodes).map(|i| taper.eval(grid.dz * T::from_int(i))).collect();
        let clip_nu = grid.clip.map(|c| c * model.nu.r0().sqrt());
        let clip_mu = grid.clip.map(|c| c * model.mu.r0().sqrt());
        Ok(Self {
            grid,
            nodes,
            nfft,
            sd_nu: sd(&model.nu),
            sd_mu: sd(&model.mu),
            kappa,
            fft: FftPlanner::new().plan_fft_inverse(nfft),
            taper,
            taper_vals,
            clip_nu,
            clip_mu,
        })
    }

    pub fn fft_len(&self) -> usize {
        self.nfft
    }

    pub fn spectral_lines(&self) -> usize {
        self.kappa.len()
    }

    pub fn taper(&self) -> Taper<T> {
        self.taper
    }

    fn coefficients(&self, seed: u64, stream: u64, sd: &[T]) -> Vec<Complex<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        sd.iter()
            .enumerate()
            .map(|(k, &s)| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                if k == 0 {
                    Complex::new(s * T::lit(a), T::zero())
                } else {
                    Complex::new(s * T::lit(a), -s * T::lit(b))
                }
            })
            .collect()
    }

    /// Path number `index` under `seed`; pure and thread-safe.
    pub fn synthesize(&self, seed: u64, index: u64) -> BoundaryRealization<T> {
        let cn = self.coefficients(seed, 2 * index, &self.sd_nu);
        let cm = self.coefficients(seed, 2 * index + 1, &self.sd_mu);
        let n = self.nfft;
        let half = T::lit(0.5);
        let i = Complex::new(T::zero(), T::one());
        let mut raw_nu: [Vec<T>; 4] = Default::default();
        let mut raw_mu: [Vec<T>; 4] = Default::default();
        let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); self.fft.get_inplace_scratch_len()];
        for order in 0..4 {
            for v in buf.iter_mut() {
                *v = Complex::new(T::zero(), T::zero());
            }
            for (k, &kap) in self.kappa.iter().enumerate() {
                let mut f = Complex::new(T::one(), T::zero());
                for _ in 0..order {
                    f = f * i * kap;
                }
                let a = cn[k] * f;
                let b = cm[k] * f;
                if k == 0 {
                    buf[0] = Complex::new(a.re, b.re);
                } else {
                    // Hermitian halves so that the real part is ν and the imaginary part μ
                    buf[k] += (a + i * b) * half;
                    buf[n - k] += (a.conj() + i * b.conj()) * half;
                }
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            raw_nu[order] = buf[..self.nodes].iter().map(|c| c.re).collect();
            raw_mu[order] = buf[..self.nodes].iter().map(|c| c.im).collect();
        }
        let nu = self.apply_taper(raw_nu, self.clip_nu);
        let mu = self.apply_taper(raw_mu, self.clip_mu);
        BoundaryRealization { dz: self.grid.dz, nu, mu, seed, index, taper: self.taper }
    }

    fn apply_taper(&self, v: [Vec<T>; 4], clip: Option<T>) -> [Vec<T>; 4] {
        let three = T::lit(3.0);
        let two = T::lit(2.0);
        let mut out: [Vec<T>; 4] = Default::default();
        for o in out.iter_mut() {
            o.reserve(self.nodes);
        }
        for i in 0..self.nodes {
            let [w0, w1, w2, w3] = self.taper_vals[i];
            let mut v0 = v[0][i];
            if let Some(c) = clip {
                v0 = v0.max(-c).min(c);
            }
            let (v1, v2, v3) = (v[1][i], v[2][i], v[3][i]);
            out[0].push(w0 * v0);
            out[1].push(w1 * v0 + w0 * v1);
            out[2].push(w2 * v0 + two * w1 * v1 + w0 * v2);
            out[3].push(w3 * v0 + three * w2 * v1 + three * w1 * v2 + w0 * v3);
        }
        out
    }
}
