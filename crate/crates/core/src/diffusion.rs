//! Closed-form quantities of the diffusion limit: generator coefficients,
//! phase coefficients, moment equations and derived length scales.

use crate::boundary::{Covariance, CovarianceModel, SpectralTables};
use crate::coupling::CouplingTables;
use crate::error::{invalid, Error, Result};
use crate::num::{cabs, cis, Real};
use crate::quad::{integrate, QuadOpts};
use crate::row;
use crate::table::Table;
use crate::waveguide::{BoundaryKind, ModeBasis, ModeOptions, WaveguideSpec};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

/// Squared boundary weights multiplying the spectra in every generator
/// entry, one matrix per boundary process.
#[derive(Clone, Debug)]
pub struct BoundaryWeights<T> {
    pub nu: DMatrix<T>,
    pub mu: DMatrix<T>,
}

/// How the two spectra are paired with the mixed-guide weights.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixedPairing {
    /// `R̂_ν` with `Q_ν` and `R̂_μ` with `Q_μ`.
    #[default]
    Paired,
    /// `R̂_μ` with both weights.
    Literal,
}

impl<T: Real> BoundaryWeights<T> {
    /// `X²(φ_j'(b)φ_l'(b))²/(4β_jβ_l)` at `b = X` (ν) and `b = 0` (μ).
    pub fn dirichlet(basis: &ModeBasis<T>) -> Self {
        let n = basis.n_prop;
        let x2 = basis.width * basis.width;
        let b = &basis.beta;
        let w = |d: &[T]| {
            DMatrix::from_fn(n, n, |j, l| x2 * (d[j] * d[l]).powi(2) / (T::lit(4.0) * b[j] * b[l]))
        };
        Self { nu: w(&basis.dphix), mu: w(&basis.dphi0) }
    }

    /// `Q_ν²` and `Q_μ²` from the closed boundary-value forms.
    pub fn mixed(coupling: &CouplingTables<T>) -> Result<Self> {
        let m = match &coupling.mixed {
            Some(m) => m,
            None => return invalid("mixed weights need mixed coupling tables"),
        };
        Ok(Self { nu: m.q_nu.map(|q| q * q), mu: m.q_mu.map(|q| q * q) })
    }

    pub fn for_guide(basis: &ModeBasis<T>, coupling: Option<&CouplingTables<T>>) -> Result<Self> {
        match basis.bc {
            BoundaryKind::Dirichlet => Ok(Self::dirichlet(basis)),
            BoundaryKind::Mixed => match coupling {
                Some(c) => Self::mixed(c),
                None => invalid("mixed guide needs coupling tables"),
            },
        }
    }
}

fn assemble<T: Real>(w: &BoundaryWeights<T>, f: impl Fn(usize, usize) -> (T, T)) -> DMatrix<T> {
    let n = w.nu.nrows();
    DMatrix::from_fn(n, n, |j, l| {
        let (a, b) = f(j, l);
        a * w.nu[(j, l)] + b * w.mu[(j, l)]
    })
}

fn set_negative_row_sums<T: Real>(g: &mut DMatrix<T>) {
    for j in 0..g.nrows() {
        g[(j, j)] = T::zero();
        let s = g.row(j).iter().fold(T::zero(), |a, &b| a + b);
        g[(j, j)] = -s;
    }
}

fn coupling_matrix<T: Real>(w: &BoundaryWeights<T>, t: &SpectralTables<T>, pairing: MixedPairing) -> DMatrix<T> {
    let mut g = assemble(w, |j, l| match pairing {
        MixedPairing::Paired => (t.psd_nu_diff[(j, l)], t.psd_mu_diff[(j, l)]),
        MixedPairing::Literal => (t.psd_mu_diff[(j, l)], t.psd_mu_diff[(j, l)]),
    });
    set_negative_row_sums(&mut g);
    g
}

fn zero_matrix<T: Real>(w: &BoundaryWeights<T>, t: &SpectralTables<T>, pairing: MixedPairing) -> DMatrix<T> {
    let nu0 = if pairing == MixedPairing::Literal { t.psd_mu0 } else { t.psd_nu0 };
    assemble(w, |_, _| (nu0, t.psd_mu0))
}

fn sine_matrix<T: Real>(w: &BoundaryWeights<T>, t: &SpectralTables<T>, pairing: MixedPairing) -> DMatrix<T> {
    let mut g = assemble(w, |j, l| match pairing {
        MixedPairing::Paired => (t.gamma_nu[(j, l)], t.gamma_mu[(j, l)]),
        MixedPairing::Literal => (t.gamma_mu[(j, l)], t.gamma_mu[(j, l)]),
    });
    set_negative_row_sums(&mut g);
    g
}

/// `Γ^(c)` for the Dirichlet guide; the diagonal closes the rows to zero.
pub fn gamma_c<T: Real>(basis: &ModeBasis<T>, tables: &SpectralTables<T>) -> DMatrix<T> {
    coupling_matrix(&BoundaryWeights::dirichlet(basis), tables, MixedPairing::Paired)
}

/// `Γ^(0)`: every entry, the diagonal included, uses `R̂(0)`.
pub fn gamma_0<T: Real>(basis: &ModeBasis<T>, tables: &SpectralTables<T>) -> DMatrix<T> {
    zero_matrix(&BoundaryWeights::dirichlet(basis), tables, MixedPairing::Paired)
}

/// `Γ^(s)`: sine transforms off the diagonal, negative row sums on it.
pub fn gamma_s<T: Real>(basis: &ModeBasis<T>, tables: &SpectralTables<T>) -> DMatrix<T> {
    sine_matrix(&BoundaryWeights::dirichlet(basis), tables, MixedPairing::Paired)
}

/// Generator matrices of the mixed guide built from `Q_ν`, `Q_μ`.
pub fn mixed_gamma<T: Real>(
    coupling: &CouplingTables<T>,
    tables: &SpectralTables<T>,
    pairing: MixedPairing,
) -> Result<GeneratorCoefficients<T>> {
    let w = BoundaryWeights::mixed(coupling)?;
    GeneratorCoefficients::from_matrices(
        coupling_matrix(&w, tables, pairing),
        zero_matrix(&w, tables, pairing),
        sine_matrix(&w, tables, pairing),
    )
}

/// Phase coefficients split into direct and evanescent parts.
#[derive(Clone, Debug, serde::Serialize)]
pub struct KappaResult<T> {
    pub a: Vec<T>,
    pub e: Vec<T>,
    /// Bound on the neglected part of the evanescent series, per mode.
    pub tail: Vec<T>,
    pub l_max: usize,
}

impl<T: Real> KappaResult<T> {
    pub fn total(&self) -> Vec<T> {
        self.a.iter().zip(&self.e).map(|(a, e)| *a + *e).collect()
    }

    /// Columns `j, kappa_a, kappa_e, tail_bound`.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["j", "kappa_a", "kappa_e", "tail_bound"]);
        for j in 0..self.a.len() {
            t.push(row![j + 1, self.a[j].f64(), self.e[j].f64(), self.tail[j].f64()]);
        }
        t
    }
}

#[derive(Clone, Copy, Debug)]
pub struct KappaOptions<T> {
    /// Fail when any tail bound exceeds this value.
    pub tail_tol: Option<T>,
}

impl<T> Default for KappaOptions<T> {
    fn default() -> Self {
        Self { tail_tol: None }
    }
}

/// `∫_0^∞ e^{-β_l s} R''(s)[(β_l²-β_j²)cos β_j s - 2β_jβ_l sin β_j s] ds`.
fn evanescent_integral<T: Real>(cov: &Covariance<T>, bj: T, bl: T) -> Result<T> {
    let r2_0 = cov.r2(T::zero()).abs();
    if r2_0 == T::zero() {
        return Ok(T::zero());
    }
    // e^{-46} is below double rounding relative to the integrand peak
    let upper = cov.support().min(T::lit(46.0) / bl);
    let scale = r2_0 * (bl * bl + bj * bj) / bl;
    let opts = QuadOpts { abs_tol: T::lit(1e-14) * scale, rel_tol: T::lit(1e-10), max_intervals: 4000 };
    integrate(
        |s| {
            let (sn, cs) = (bj * s).sin_cos();
            (-bl * s).exp() * cov.r2(s) * ((bl * bl - bj * bj) * cs - T::lit(2.0) * bj * bl * sn)
        },
        T::zero(),
        upper,
        opts,
    )
}

/// `κ^(a)` and `κ^(e)` for the Dirichlet guide; the evanescent series is cut at
/// the retained rows of the coupling tables.
pub fn kappa<T: Real>(
    basis: &ModeBasis<T>,
    coupling: &CouplingTables<T>,
    model: &CovarianceModel<T>,
    opts: &KappaOptions<T>,
) -> Result<KappaResult<T>> {
    if basis.bc != BoundaryKind::Dirichlet {
        return invalid("phase coefficients are only defined for the Dirichlet guide");
    }
    let n = basis.n_prop;
    let rows = coupling.c_nu.nrows();
    let b = &basis.beta;
    let x = basis.width;
    let w2 = basis.omega * basis.omega;
    let (two, four) = (T::lit(2.0), T::lit(4.0));
    let (rn0, rm0) = (model.nu.r0(), model.mu.r0());
    let (rn2, rm2) = (model.nu.r2(T::zero()), model.mu.r2(T::zero()));
    let mut ka = Vec::with_capacity(n);
    let mut ke = Vec::with_capacity(n);
    let mut tail = Vec::with_capacity(n);
    for j in 0..n {
        let bj = b[j];
        let mi = &coupling.mode_integrals[j];
        let part = |r0: T, r2: T, ddc: T, x2dphi: T, d: &DMatrix<T>, c: &DMatrix<T>| {
            let mut s0 = w2 / (four * bj) * ddc - T::lit(1.5) / bj * mi.dphi2;
            let mut s2 = T::one() / (four * bj) - x2dphi / (two * bj);
            for l in (0..n).filter(|&l| l != j) {
                let bl = b[l];
                let djl = d[(j, l)];
                s0 += (bl + bj) * (djl * djl * (bl * bl - bj * bj) + two * djl * c[(j, l)]);
                s2 += (bl - bj) * djl * djl;
            }
            r0 * s0 - r2 * s2
        };
        ka.push(
            part(rn0, rn2, mi.xi2_phi2_ddc, mi.xi2_dphi2, &coupling.d_nu, &coupling.c_nu)
                + part(rm0, rm2, mi.xmxi2_phi2_ddc, mi.xmxi2_dphi2, &coupling.d_mu, &coupling.c_mu),
        );
        let mut sum = T::zero();
        let mut last = T::zero();
        for l in n..rows {
            let bl = b[l];
            let den = two * bj * bl * (bj * bj + bl * bl).powi(2);
            let mut term = T::zero();
            for (cov, tr, d, c, r0, r2) in [
                (&model.nu, &basis.dphix, &coupling.d_nu, &coupling.c_nu, rn0, rn2),
                (&model.mu, &basis.dphi0, &coupling.d_mu, &coupling.c_mu, rm0, rm2),
            ] {
                let wgt = x * x * (tr[j] * tr[l]).powi(2) / den;
                term += wgt * evanescent_integral(cov, bj, bl)?;
                let (dlj, clj) = (d[(l, j)], c[(l, j)]);
                term += two * bl * (-dlj * dlj * r2 + clj * clj / (bj * bj + bl * bl) * r0);
            }
            sum += term;
            last = term;
        }
        ke.push(sum);
        // terms decay like l^{-2}, so the remainder is about l_last·|t_last|
        let bound = T::from_int(rows) * last.abs();
        if let Some(tol) = opts.tail_tol {
            if bound > tol {
                return Err(Error::TailBound { bound: bound.f64(), tol: tol.f64() });
            }
        }
        tail.push(bound);
    }
    Ok(KappaResult { a: ka, e: ke, tail, l_max: rows - n })
}

/// Generator matrices with the spectral decomposition of `Γ^(c)`.
#[derive(Clone, Debug)]
pub struct GeneratorCoefficients<T: Real> {
    pub gamma_c: DMatrix<T>,
    pub gamma_0: DMatrix<T>,
    pub gamma_s: DMatrix<T>,
    pub kappa: Option<KappaResult<T>>,
    /// Eigenvalues of `Γ^(c)` in decreasing order; the first is pinned to 0.
    pub eigenvalues: Vec<T>,
    /// Matching orthonormal eigenvectors as columns.
    pub eigenvectors: DMatrix<T>,
}

impl<T: Real> GeneratorCoefficients<T> {
    pub fn from_matrices(gamma_c: DMatrix<T>, gamma_0: DMatrix<T>, gamma_s: DMatrix<T>) -> Result<Self> {
        let n = gamma_c.nrows();
        if n == 0 {
            return invalid("empty generator");
        }
        let sym = (&gamma_c + gamma_c.transpose()) * T::lit(0.5);
        let eig = SymmetricEigen::new(sym);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
        let mut eigenvalues: Vec<T> = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
        // rows sum to zero, so the top pair is exactly (0, 1/√N)
        eigenvalues[0] = T::zero();
        let u = T::one() / T::from_int(n).sqrt();
        eigenvectors.column_mut(0).fill(u);
        Ok(Self { gamma_c, gamma_0, gamma_s, kappa: None, eigenvalues, eigenvectors })
    }

    /// Dirichlet generator from spectral tables.
    pub fn dirichlet(basis: &ModeBasis<T>, tables: &SpectralTables<T>) -> Result<Self> {
        Self::from_matrices(gamma_c(basis, tables), gamma_0(basis, tables), gamma_s(basis, tables))
    }

    /// Either guide; the mixed one needs coupling tables.
    pub fn build(
        basis: &ModeBasis<T>,
        coupling: Option<&CouplingTables<T>>,
        tables: &SpectralTables<T>,
        pairing: MixedPairing,
    ) -> Result<Self> {
        match basis.bc {
            BoundaryKind::Dirichlet => Self::dirichlet(basis, tables),
            BoundaryKind::Mixed => match coupling {
                Some(c) => mixed_gamma(c, tables, pairing),
                None => invalid("mixed guide needs coupling tables"),
            },
        }
    }

    pub fn with_kappa(mut self, k: KappaResult<T>) -> Self {
        self.kappa = Some(k);
        self
    }

    pub fn n(&self) -> usize {
        self.gamma_c.nrows()
    }

    /// `Λ_2`, or `None` for a single mode.
    pub fn lambda2(&self) -> Option<T> {
        self.eigenvalues.get(1).copied()
    }

    fn long(m: &DMatrix<T>) -> Table {
        let mut t = Table::new(&["j", "l", "value"]);
        for j in 0..m.nrows() {
            for l in 0..m.ncols() {
                t.push(row![j + 1, l + 1, m[(j, l)].f64()]);
            }
        }
        t
    }

    pub fn gamma_c_table(&self) -> Table {
        Self::long(&self.gamma_c)
    }

    pub fn gamma_0_table(&self) -> Table {
        Self::long(&self.gamma_0)
    }

    pub fn gamma_s_table(&self) -> Table {
        Self::long(&self.gamma_s)
    }

    /// Largest violation of symmetry, zero row sums and off-diagonal sign,
    /// relative to the largest entry.
    pub fn structure_violation(&self) -> T {
        let g = &self.gamma_c;
        let n = g.nrows();
        let scale = g.amax().max(T::eps() * T::eps());
        let mut v = T::zero();
        for j in 0..n {
            let mut s = T::zero();
            for l in 0..n {
                s += g[(j, l)];
                v = v.max((g[(j, l)] - g[(l, j)]).abs());
                if j != l {
                    v = v.max(-g[(j, l)]);
                }
            }
            v = v.max(s.abs());
        }
        v / scale
    }
}

/// `E[â_j(z)] = â_{j,o} exp{[(Γc_jj-Γ0_jj)/2]z + i[Γs_jj/2 + κ_j]z}`.
/// Missing phase coefficients count as zero.
pub fn mean_amplitude<T: Real>(c: &GeneratorCoefficients<T>, a0: &[Complex<T>], z: T) -> Vec<Complex<T>> {
    let half = T::lit(0.5);
    let kap = c.kappa.as_ref().map(|k| k.total());
    a0.iter()
        .enumerate()
        .map(|(j, &a)| {
            let decay = (c.gamma_c[(j, j)] - c.gamma_0[(j, j)]) * half * z;
            let phase = (c.gamma_s[(j, j)] * half + kap.as_ref().map_or(T::zero(), |k| k[j])) * z;
            a * cis(phase) * decay.exp()
        })
        .collect()
}

/// `P^(1)(z) = exp(Γ^(c) z) P0` through the eigendecomposition.
pub fn mean_powers<T: Real>(c: &GeneratorCoefficients<T>, p0: &[T], z: T) -> Vec<T> {
    if z == T::zero() {
        return p0.to_vec();
    }
    let v = &c.eigenvectors;
    let p = DVector::from_column_slice(p0);
    let mut y = v.transpose() * p;
    for (k, lam) in c.eigenvalues.iter().enumerate() {
        y[k] *= (*lam * z).exp();
    }
    (v * y).iter().copied().collect()
}

/// Linear system for `P^(2)_jl`, stored on the index set `j ≤ l`.
pub struct FourthMomentSystem<T: Real> {
    n: usize,
    pairs: Vec<(usize, usize)>,
    op: DMatrix<T>,
    eig: Option<(Vec<T>, DMatrix<T>)>,
}

/// Largest mode count solved by dense diagonalization.
pub const DENSE_FOURTH_LIMIT: usize = 60;

impl<T: Real> FourthMomentSystem<T> {
    pub fn new(gamma_c: &DMatrix<T>) -> Self {
        let n = gamma_c.nrows();
        let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
        for j in 0..n {
            for l in j..n {
                pairs.push((j, l));
            }
        }
        let m = pairs.len();
        let pos = |a: usize, b: usize| {
            let (j, l) = if a <= b { (a, b) } else { (b, a) };
            j * n - j * (j + 1) / 2 + l
        };
        let g = gamma_c;
        let mut op = DMatrix::zeros(m, m);
        for (r, &(j, l)) in pairs.iter().enumerate() {
            if j == l {
                for k in (0..n).filter(|&k| k != j) {
                    op[(r, pos(j, k))] += T::lit(4.0) * g[(j, k)];
                    op[(r, r)] -= T::lit(2.0) * g[(j, k)];
                }
            } else {
                op[(r, r)] -= T::lit(2.0) * g[(j, l)];
                for k in 0..n {
                    op[(r, pos(j, k))] += g[(l, k)];
                    op[(r, r)] -= g[(l, k)];
                    op[(r, pos(l, k))] += g[(j, k)];
                    op[(r, r)] -= g[(j, k)];
                }
            }
        }
        let eig = (n <= DENSE_FOURTH_LIMIT).then(|| {
            // diag(w) A diag(w)^{-1} is symmetric with w = 1 on j = l and 2 off it
            let w: Vec<T> = pairs.iter().map(|&(j, l)| if j == l { T::one() } else { T::lit(2.0) }).collect();
            let s = DMatrix::from_fn(m, m, |a, b| w[a] * op[(a, b)] / w[b]);
            let s = (&s + s.transpose()) * T::lit(0.5);
            let e = SymmetricEigen::new(s);
            (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
        });
        Self { n, pairs, op, eig }
    }

    fn pack(&self, p: &DMatrix<T>) -> DVector<T> {
        DVector::from_iterator(self.pairs.len(), self.pairs.iter().map(|&(j, l)| p[(j, l)]))
    }

    fn unpack(&self, v: &DVector<T>) -> DMatrix<T> {
        let mut p = DMatrix::zeros(self.n, self.n);
        for (k, &(j, l)) in self.pairs.iter().enumerate() {
            p[(j, l)] = v[k];
            p[(l, j)] = v[k];
        }
        p
    }

    /// Right-hand side at `P^(2)`.
    pub fn rhs(&self, p: &DMatrix<T>) -> DMatrix<T> {
        self.unpack(&(&self.op * self.pack(p)))
    }

    /// Moments at range `z` from `P^(2)(0)`.
    pub fn evolve(&self, p0: &DMatrix<T>, z: T) -> DMatrix<T> {
        if z == T::zero() {
            return p0.clone();
        }
        let v0 = self.pack(p0);
        match &self.eig {
            Some((lam, vecs)) => {
                let w: Vec<T> = self.pairs.iter().map(|&(j, l)| if j == l { T::one() } else { T::lit(2.0) }).collect();
                let y0 = DVector::from_iterator(v0.len(), v0.iter().zip(&w).map(|(a, b)| *a * *b));
                let mut c = vecs.transpose() * y0;
                for (k, l) in lam.iter().enumerate() {
                    c[k] *= (*l * z).exp();
                }
                let y = vecs * c;
                self.unpack(&DVector::from_iterator(y.len(), y.iter().zip(&w).map(|(a, b)| *a / *b)))
            }
            None => self.unpack(&self.rk4(v0, z)),
        }
    }

    fn rk4(&self, mut v: DVector<T>, z: T) -> DVector<T> {
        let radius = (0..self.op.nrows())
            .map(|r| self.op.row(r).iter().fold(T::zero(), |a, b| a + b.abs()))
            .fold(T::zero(), |a, b| a.max(b));
        if z <= T::zero() || radius == T::zero() {
            return v;
        }
        let steps = (z * radius).ceil().to_usize().unwrap().max(1);
        let h = z / T::from_int(steps);
        let two = T::lit(2.0);
        for _ in 0..steps {
            let k1 = &self.op * &v;
            let k2 = &self.op * (&v + &k1 * (h / two));
            let k3 = &self.op * (&v + &k2 * (h / two));
            let k4 = &self.op * (&v + &k3 * h);
            v += (k1 + (k2 + k3) * two + k4) * (h / T::lit(6.0));
        }
        v
    }
}

/// Fourth moments at `z`.
pub fn fourth_moments<T: Real>(c: &GeneratorCoefficients<T>, p2_0: &DMatrix<T>, z: T) -> DMatrix<T> {
    FourthMomentSystem::new(&c.gamma_c).evolve(p2_0, z)
}

/// Limit moments at a list of ranges.
#[derive(Clone, Debug)]
pub struct MomentTrajectory<T> {
    pub z: Vec<T>,
    pub mean_amplitude: Vec<Vec<Complex<T>>>,
    pub p1: Vec<Vec<T>>,
    pub p2: Option<Vec<DMatrix<T>>>,
    /// `R_o² = Σ_j |â_{j,o}|²`.
    pub total: T,
}

impl<T: Real> MomentTrajectory<T> {
    pub fn compute(c: &GeneratorCoefficients<T>, a0: &[Complex<T>], z: &[T], fourth: bool) -> Self {
        let p0: Vec<T> = a0.iter().map(|a| a.norm_sqr()).collect();
        let p2 = fourth.then(|| {
            let sys = FourthMomentSystem::new(&c.gamma_c);
            let init = DMatrix::from_fn(p0.len(), p0.len(), |j, l| p0[j] * p0[l]);
            z.iter().map(|&zz| sys.evolve(&init, zz)).collect()
        });
        Self {
            z: z.to_vec(),
            mean_amplitude: z.iter().map(|&zz| mean_amplitude(c, a0, zz)).collect(),
            p1: z.iter().map(|&zz| mean_powers(c, &p0, zz)).collect(),
            p2,
            total: p0.iter().fold(T::zero(), |a, &b| a + b),
        }
    }

    /// Columns `z, j, P1`.
    pub fn powers_table(&self) -> Table {
        let mut t = Table::new(&["z", "j", "P1"]);
        for (z, p) in self.z.iter().zip(&self.p1) {
            for (j, v) in p.iter().enumerate() {
                t.push(row![z.f64(), j + 1, v.f64()]);
            }
        }
        t
    }

    /// Columns `z, j, re_mean, im_mean, abs_mean`.
    pub fn mean_table(&self) -> Table {
        let mut t = Table::new(&["z", "j", "re_mean", "im_mean", "abs_mean"]);
        for (z, a) in self.z.iter().zip(&self.mean_amplitude) {
            for (j, v) in a.iter().enumerate() {
                t.push(row![z.f64(), j + 1, v.re.f64(), v.im.f64(), cabs(*v).f64()]);
            }
        }
        t
    }

    /// Columns `z, j, l, P2`.
    pub fn fourth_table(&self) -> Option<Table> {
        let p2 = self.p2.as_ref()?;
        let mut t = Table::new(&["z", "j", "l", "P2"]);
        for (z, m) in self.z.iter().zip(p2) {
            for j in 0..m.nrows() {
                for l in 0..m.ncols() {
                    t.push(row![z.f64(), j + 1, l + 1, m[(j, l)].f64()]);
                }
            }
        }
        Some(t)
    }
}

/// Attenuation and exchange rates.
#[derive(Clone, Debug, serde::Serialize)]
pub struct LengthScales<T> {
    /// `𝒦_j = (Γ0_jj - Γc_jj)/2`.
    pub attenuation: Vec<T>,
    /// `𝒥_j = -Γc_jj/2`.
    pub exchange: Vec<T>,
    /// `1/|Λ_2|`; absent for one mode.
    pub equipartition: Option<T>,
}

impl<T: Real> LengthScales<T> {
    /// Columns `j, K, J, smfp, tmfp`, then a scalar record.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["j", "K", "J", "smfp", "tmfp"]);
        for j in 0..self.attenuation.len() {
            let (k, e) = (self.attenuation[j].f64(), self.exchange[j].f64());
            t.push(row![j + 1, k, e, 1.0 / k, 1.0 / e]);
        }
        t
    }

    pub fn equipartition_table(&self) -> Table {
        let mut t = Table::new(&["quantity", "value"]);
        t.push(row!["equipartition_distance", self.equipartition.map_or(f64::INFINITY, |v| v.f64())]);
        t
    }
}

pub fn length_scales<T: Real>(c: &GeneratorCoefficients<T>) -> Result<LengthScales<T>> {
    let n = c.n();
    let half = T::lit(0.5);
    let attenuation = (0..n).map(|j| (c.gamma_0[(j, j)] - c.gamma_c[(j, j)]) * half).collect();
    let exchange = (0..n).map(|j| -c.gamma_c[(j, j)] * half).collect();
    let equipartition = match c.lambda2() {
        None => None,
        Some(l2) => {
            let scale = c.gamma_c.amax();
            if l2 >= -T::lit(1e-13) * scale {
                return Err(Error::ReducibleCoupling(l2.f64()));
            }
            Some(-T::one() / l2)
        }
    };
    Ok(LengthScales { attenuation, exchange, equipartition })
}

/// Range of `kℓ` relative to `√N` and `N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    BelowSqrtN,
    Intermediate,
    AboveN,
}

impl Regime {
    pub fn classify(n: usize, kl: f64) -> Self {
        let n = n as f64;
        if kl < n.sqrt() {
            Regime::BelowSqrtN
        } else if kl < n {
            Regime::Intermediate
        } else {
            Regime::AboveN
        }
    }

    pub fn warning(&self) -> Option<&'static str> {
        match self {
            Regime::Intermediate => None,
            Regime::BelowSqrtN => Some("k*ell is below sqrt(N); high-frequency asymptotics are outside their regime"),
            Regime::AboveN => Some("k*ell is at least N; intermediate-mode asymptotics do not apply"),
        }
    }
}

/// Constant-speed Dirichlet guide with `X`, `kX/π = N + α`, Gaussian
/// boundaries of equal length `ℓ = kℓ/k`.
pub struct ReferenceGuide {
    pub basis: ModeBasis<f64>,
    pub model: CovarianceModel<f64>,
    pub n: usize,
    pub alpha: f64,
    pub kl: f64,
    pub x: f64,
}

impl ReferenceGuide {
    pub fn new(n: usize, alpha: f64, kl: f64, x: f64) -> Result<Self> {
        if n == 0 || !(alpha > 0.0 && alpha < 1.0) || !(kl > 0.0) || !(x > 0.0) {
            return invalid("need N >= 1, 0 < alpha < 1, k*ell > 0 and X > 0");
        }
        let spec = WaveguideSpec::constant(x, 1.0, BoundaryKind::Dirichlet)?;
        let k = (n as f64 + alpha) * std::f64::consts::PI / x;
        let basis = ModeBasis::build(&spec, k, &ModeOptions { l_max: Some(1), ..Default::default() })?;
        let model = CovarianceModel::gaussian(kl / k)?;
        Ok(Self { basis, model, n, alpha, kl, x })
    }

    /// Diagonals of `Γ^(c)` and `Γ^(0)` without the sine transforms.
    pub fn diagonals(&self) -> (Vec<f64>, Vec<f64>) {
        let w = BoundaryWeights::dirichlet(&self.basis);
        let b = self.basis.beta_prop();
        let n = b.len();
        let (p0n, p0m) = (self.model.nu.psd(0.0), self.model.mu.psd(0.0));
        let mut gc = vec![0.0; n];
        let mut g0 = vec![0.0; n];
        for j in 0..n {
            g0[j] = p0n * w.nu[(j, j)] + p0m * w.mu[(j, j)];
            for l in (0..n).filter(|&l| l != j) {
                let d = b[j] - b[l];
                gc[j] -= self.model.nu.psd(d) * w.nu[(j, l)] + self.model.mu.psd(d) * w.mu[(j, l)];
            }
        }
        (gc, g0)
    }

    /// Full `Γ^(c)` with its decomposition; `Γ^(s)` is left at zero.
    pub fn generator(&self) -> Result<GeneratorCoefficients<f64>> {
        let w = BoundaryWeights::dirichlet(&self.basis);
        let b = self.basis.beta_prop().to_vec();
        let psd = |j: usize, l: usize| (self.model.nu.psd(b[j] - b[l]), self.model.mu.psd(b[j] - b[l]));
        let mut gc = assemble(&w, psd);
        set_negative_row_sums(&mut gc);
        let g0 = assemble(&w, |_, _| (self.model.nu.psd(0.0), self.model.mu.psd(0.0)));
        let n = b.len();
        GeneratorCoefficients::from_matrices(gc, g0, DMatrix::zeros(n, n))
    }
}

/// One exact-versus-asymptotic record.
#[derive(Clone, Debug, serde::Serialize)]
pub struct EstimateRow {
    pub quantity: String,
    pub j: usize,
    pub exact: f64,
    pub asymptotic: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct EstimateReport {
    pub n: usize,
    pub alpha: f64,
    pub kl: f64,
    pub x: f64,
    pub regime: Regime,
    pub rows: Vec<EstimateRow>,
    /// Constant in `-Γc_NN ~ (2π)^{3/2}N³/(2C(α)kℓX)` implied by the series.
    pub c_alpha: f64,
    pub attenuation_monotone: bool,
    pub attenuation: Vec<f64>,
    pub exchange: Vec<f64>,
}

impl EstimateReport {
    pub fn find(&self, quantity: &str, j: usize) -> Option<&EstimateRow> {
        self.rows.iter().find(|r| r.quantity == quantity && r.j == j)
    }

    /// Columns `quantity, j, exact, asymptotic, ratio`.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["quantity", "j", "exact", "asymptotic", "ratio"]);
        for r in &self.rows {
            t.push(row![r.quantity.as_str(), r.j, r.exact, r.asymptotic, r.ratio]);
        }
        t
    }
}

/// `(2π)^{3/2}`.
fn c32() -> f64 {
    (2.0 * std::f64::consts::PI).powf(1.5)
}

/// Series in the `-Γc_NN` estimate for `kℓ ~ √N`, without its prefactor.
fn gamma_nn_series(n: usize, alpha: f64, kl: f64) -> f64 {
    let a = kl * kl / (2.0 * n as f64);
    let mut s = 0.0;
    let mut q = 1u64;
    loop {
        let qa = q as f64 + alpha;
        let e = -a * (qa.sqrt() - alpha.sqrt()).powi(2);
        let t = e.exp() / qa.sqrt();
        s += t;
        if e < -745.0 || (t < 1e-17 * s && q > 8) || q > 50_000_000 {
            break;
        }
        q += 1;
    }
    s
}

/// Appendix-style high-frequency estimates against exact sums.
pub fn hf_estimates(n: usize, alpha: f64, kl: f64, x: f64) -> Result<EstimateReport> {
    let g = ReferenceGuide::new(n, alpha, kl, x)?;
    let (gc, g0) = g.diagonals();
    let nf = n as f64;
    let na = nf + alpha;
    let mut rows = Vec::new();
    let mut push = |q: &str, j: usize, exact: f64, asym: f64| {
        rows.push(EstimateRow { quantity: q.into(), j, exact, asymptotic: asym, ratio: exact / asym });
    };
    for j in 1..=n {
        let jf = j as f64;
        let ee6 = c32() / x * kl / nf * jf.powi(4) / (na * na - jf * jf);
        push("gamma0_jj", j, g0[j - 1], ee6);
    }
    push("gamma0_11_extreme", 1, g0[0], c32() / x * kl / nf.powi(3));
    push("gamma0_NN_extreme", n, g0[n - 1], c32() / (2.0 * alpha * x) * kl * nf * nf);
    let sq = |j: f64| (na * na - j * j).sqrt();
    for j in 1..=n {
        let jf = j as f64;
        let mut s = 0.0;
        for l in (1..=n).filter(|&l| l != j) {
            let lf = l as f64;
            let d = (1.0 - jf * jf / (na * na)).sqrt() - (1.0 - lf * lf / (na * na)).sqrt();
            s += lf * lf * kl / (nf * sq(lf)) * (-kl * kl / 2.0 * d * d).exp();
        }
        let ee8 = c32() * jf * jf / (x * sq(jf)) * s;
        push("minus_gammac_jj_sum", j, -gc[j - 1], ee8);
        let ee8b = (2.0 * std::f64::consts::PI).powi(2) * jf.powi(3) / (x * sq(jf));
        push("minus_gammac_jj_intermediate", j, -gc[j - 1], ee8b);
    }
    let watson = c32() * statrs::function::gamma::gamma(0.75) * 2f64.powf(0.25) / (x * kl.sqrt());
    push("minus_gammac_11_watson", 1, -gc[0], watson);
    let series = gamma_nn_series(n, alpha, kl);
    let nn_sqrt = c32() * nf * nf * kl / (2.0 * alpha.sqrt() * x) * series;
    push("minus_gammac_NN_sqrtN_series", n, -gc[n - 1], nn_sqrt);
    let nn_large = c32() * nf * nf * kl / (2.0 * (alpha * (1.0 + alpha)).sqrt() * x)
        * (-kl * kl / (2.0 * nf) * ((1.0 + alpha).sqrt() - alpha.sqrt()).powi(2)).exp();
    push("minus_gammac_NN_large", n, -gc[n - 1], nn_large);
    // equate the series form with (2π)^{3/2}N³/(2C kℓ X)
    let c_alpha = nf * alpha.sqrt() / (kl * kl * series);
    let attenuation: Vec<f64> = (0..n).map(|j| (g0[j] - gc[j]) / 2.0).collect();
    let exchange: Vec<f64> = (0..n).map(|j| -gc[j] / 2.0).collect();
    // scaling laws; ratios are the implied O(1) constants
    push("K_1_X_scaled", 1, attenuation[0] * x, kl.powf(-0.5));
    push("J_1_X_scaled", 1, exchange[0] * x, kl.powf(-0.5));
    if n >= 2 {
        let jm = n / 2;
        let t = jm as f64 / nf;
        let law = nf * nf * t.powi(3) / (1.0 - t * t).sqrt();
        push("K_mid_X_scaled", jm, attenuation[jm - 1] * x, law);
        push("J_mid_X_scaled", jm, exchange[jm - 1] * x, law);
    }
    push("K_N_X_scaled", n, attenuation[n - 1] * x, kl * nf * nf);
    push("J_N_X_scaled", n, exchange[n - 1] * x, nf.powi(3) / kl);
    let attenuation_monotone = attenuation.windows(2).all(|w| w[1] >= w[0]);
    Ok(EstimateReport {
        n,
        alpha,
        kl,
        x,
        regime: Regime::classify(n, kl),
        rows,
        c_alpha,
        attenuation_monotone,
        attenuation,
        exchange,
    })
}

/// Interior-inhomogeneity rates next to the boundary ones.
#[derive(Clone, Debug, serde::Serialize)]
pub struct InteriorReport {
    pub n: usize,
    pub alpha: f64,
    pub kl: f64,
    pub x: f64,
    pub regime: Regime,
    pub k_tilde: Vec<f64>,
    pub j_tilde: Vec<f64>,
    pub attenuation: Vec<f64>,
    pub exchange: Vec<f64>,
    /// Leading forms of `K̃X`, `J̃X` for `j ~ 1` and `j ~ N`.
    pub k_tilde_low: f64,
    pub j_tilde_low: f64,
    pub k_tilde_high: f64,
    pub j_tilde_high: f64,
}

impl InteriorReport {
    /// Columns `j, K_tilde, J_tilde, K, J, K_tilde_over_K, J_tilde_over_J, J_tilde_over_K_tilde`.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "j",
            "K_tilde",
            "J_tilde",
            "K",
            "J",
            "K_tilde_over_K",
            "J_tilde_over_J",
            "J_tilde_over_K_tilde",
        ]);
        for j in 0..self.n {
            let (kt, jt, k, e) = (self.k_tilde[j], self.j_tilde[j], self.attenuation[j], self.exchange[j]);
            t.push(row![j + 1, kt, jt, k, e, kt / k, jt / e, jt / kt]);
        }
        t
    }

    /// Columns `quantity, exact, asymptotic, ratio` for the leading forms.
    pub fn asymptotic_table(&self) -> Table {
        let mut t = Table::new(&["quantity", "exact", "asymptotic", "ratio"]);
        let n = self.n;
        let x = self.x;
        for (q, e, a) in [
            ("K_tilde_1_X", self.k_tilde[0] * x, self.k_tilde_low),
            ("J_tilde_1_X", self.j_tilde[0] * x, self.j_tilde_low),
            ("K_tilde_N_X", self.k_tilde[n - 1] * x, self.k_tilde_high),
            ("J_tilde_N_X", self.j_tilde[n - 1] * x, self.j_tilde_high),
            ("K_tilde_1_X_over_N_kl", self.k_tilde[0] * x, n as f64 * self.kl),
            ("K_tilde_N_X_over_N2_kl", self.k_tilde[n - 1] * x, (n * n) as f64 * self.kl),
        ] {
            t.push(row![q, e, a, e / a]);
        }
        t
    }
}

/// Interior rates for isotropic Gaussian speed fluctuations of length `ℓ`.
pub fn interior_comparison(n: usize, alpha: f64, kl: f64, x: f64) -> Result<InteriorReport> {
    let g = ReferenceGuide::new(n, alpha, kl, x)?;
    let (gc, g0) = g.diagonals();
    let nf = n as f64;
    let a = (1.0 + alpha / nf).powi(2);
    let pref = std::f64::consts::PI * kl * kl / (8.0 * x);
    let k2 = kl * kl;
    let mut k_tilde = Vec::with_capacity(n);
    let mut j_tilde = Vec::with_capacity(n);
    for j in 1..=n {
        let tj = j as f64 / nf;
        let sj = (a - tj * tj).sqrt();
        let mut s = 0.0;
        for l in (1..=n).filter(|&l| l != j) {
            let tl = l as f64 / nf;
            let sl = (a - tl * tl).sqrt();
            let e = (-k2 / 2.0 * (sj - sl).powi(2)).exp() / (sj * sl);
            s += e * ((-k2 / 2.0 * (tj - tl).powi(2)).exp() + (-k2 / 2.0 * (tj + tl).powi(2)).exp());
        }
        let jt = pref * s;
        j_tilde.push(jt);
        k_tilde.push(pref * (2.0 + (-2.0 * k2 * tj * tj).exp()) / (a - tj * tj) + jt);
    }
    let pi = std::f64::consts::PI;
    let low = pi * k2 / 8.0;
    let high = pi * nf * k2 / (8.0 * alpha);
    let r_low = nf * (pi / 2.0).sqrt() / kl;
    let r_high = pi.sqrt() * nf / (2.0 * 2f64.sqrt() * kl);
    Ok(InteriorReport {
        n,
        alpha,
        kl,
        x,
        regime: Regime::classify(n, kl),
        k_tilde,
        j_tilde,
        attenuation: (0..n).map(|j| (g0[j] - gc[j]) / 2.0).collect(),
        exchange: (0..n).map(|j| -gc[j] / 2.0).collect(),
        k_tilde_low: low * (2.0 + (-2.0 * k2 / (nf * nf)).exp() + r_low),
        j_tilde_low: low * r_low,
        k_tilde_high: high * (1.0 + r_high),
        j_tilde_high: high * r_high,
    })
}
