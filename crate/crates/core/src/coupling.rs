//! Deterministic coupling integrals between ideal modes.

use crate::error::Result;
use crate::num::Real;
use crate::quad::{integrate, simpson, QuadOpts};
use crate::row;
use crate::table::Table;
use crate::waveguide::{BoundaryKind, ModeBasis, ModeRepr, TabulatedModes, WaveguideSpec};
use nalgebra::DMatrix;

/// Extra tables for the mixed (Dirichlet/Neumann) guide, propagating block only.
#[derive(Clone, Debug)]
pub struct MixedTables<T> {
    pub e_nu: DMatrix<T>,
    pub f_nu: DMatrix<T>,
    /// Closed forms in terms of boundary values.
    pub q_nu: DMatrix<T>,
    pub q_mu: DMatrix<T>,
    /// The same quantities assembled from the component tables.
    pub q_nu_comb: DMatrix<T>,
    pub q_mu_comb: DMatrix<T>,
}

/// Per-mode integrals entering the phase coefficient.
#[derive(Clone, Copy, Debug)]
pub struct ModeIntegrals<T> {
    /// `∫ ξ² (φ')²`
    pub xi2_dphi2: T,
    /// `∫ (X-ξ)² (φ')²`
    pub xmxi2_dphi2: T,
    /// `∫ (φ')²`
    pub dphi2: T,
    /// `∫ ξ² φ² ∂²c^{-2}`
    pub xi2_phi2_ddc: T,
    /// `∫ (X-ξ)² φ² ∂²c^{-2}`
    pub xmxi2_phi2_ddc: T,
}

/// Coupling coefficients; rows span all retained modes, columns the
/// propagating ones.
#[derive(Clone, Debug)]
pub struct CouplingTables<T> {
    pub bc: BoundaryKind,
    pub n_prop: usize,
    pub c_nu: DMatrix<T>,
    pub c_mu: DMatrix<T>,
    pub d_nu: DMatrix<T>,
    pub d_mu: DMatrix<T>,
    pub mixed: Option<MixedTables<T>>,
    pub mode_integrals: Vec<ModeIntegrals<T>>,
    /// Built from exact antiderivatives rather than quadrature.
    pub exact: bool,
    pub beta: Vec<T>,
}

struct Pt<T> {
    xi: T,
    pj: T,
    dpj: T,
    pl: T,
    dpl: T,
    c2: T,
    dc2: T,
    ddc2: T,
}

enum Quad<'a, T: Real> {
    Adaptive { basis: &'a ModeBasis<T>, spec: &'a WaveguideSpec<T>, opts: QuadOpts<T> },
    Grid { tab: &'a TabulatedModes<T>, c2: Vec<(T, T, T)> },
}

impl<'a, T: Real> Quad<'a, T> {
    fn new(basis: &'a ModeBasis<T>, spec: &'a WaveguideSpec<T>) -> Self {
        match &basis.repr {
            ModeRepr::Closed => Quad::Adaptive {
                basis,
                spec,
                opts: QuadOpts { abs_tol: T::lit(1e-13), rel_tol: T::lit(1e-10), max_intervals: 4000 },
            },
            ModeRepr::Tabulated(tab) => {
                let c2 = (0..=tab.cells()).map(|i| spec.inv_c2(tab.h * T::from_int(i))).collect();
                Quad::Grid { tab, c2 }
            }
        }
    }

    fn pair(&self, j: usize, l: usize, f: impl Fn(&Pt<T>) -> T) -> Result<T> {
        match self {
            Quad::Adaptive { basis, spec, opts } => integrate(
                |xi| {
                    let (pj, dpj) = basis.phi_dphi(j, xi);
                    let (pl, dpl) = basis.phi_dphi(l, xi);
                    let (c2, dc2, ddc2) = spec.inv_c2(xi);
                    f(&Pt { xi, pj, dpj, pl, dpl, c2, dc2, ddc2 })
                },
                T::zero(),
                basis.width,
                *opts,
            ),
            Quad::Grid { tab, c2 } => {
                let y: Vec<T> = (0..=tab.cells())
                    .map(|i| {
                        let (c2, dc2, ddc2) = c2[i];
                        f(&Pt {
                            xi: tab.h * T::from_int(i),
                            pj: tab.values[j][i],
                            dpj: tab.derivs[j][i],
                            pl: tab.values[l][i],
                            dpl: tab.derivs[l][i],
                            c2,
                            dc2,
                            ddc2,
                        })
                    })
                    .collect();
                Ok(simpson(&y, tab.h))
            }
        }
    }
}

fn sign<T: Real>(n: usize) -> T {
    if n.is_multiple_of(2) {
        T::one()
    } else {
        -T::one()
    }
}

impl<T: Real> CouplingTables<T> {
    pub fn build(basis: &ModeBasis<T>, spec: &WaveguideSpec<T>) -> Result<Self> {
        let closed_dd = matches!(basis.repr, ModeRepr::Closed) && basis.bc == BoundaryKind::Dirichlet;
        if closed_dd {
            Ok(Self::closed_dirichlet(basis))
        } else {
            Self::numeric(basis, spec)
        }
    }

    fn closed_dirichlet(basis: &ModeBasis<T>) -> Self {
        let (r, n) = (basis.len(), basis.n_prop);
        let b = &basis.beta;
        let x = basis.width;
        let pi_x = T::pi() / x;
        let mut c_nu = DMatrix::zeros(r, n);
        let mut c_mu = DMatrix::zeros(r, n);
        let mut d_nu = DMatrix::zeros(r, n);
        let mut d_mu = DMatrix::zeros(r, n);
        for jm in 0..r {
            for lm in 0..n {
                let (j, l) = (T::from_int(jm + 1), T::from_int(lm + 1));
                let sb = (b[jm] * b[lm]).sqrt();
                if jm == lm {
                    let p = j * pi_x;
                    c_nu[(jm, lm)] = p * p / b[jm];
                    c_mu[(jm, lm)] = -p * p / b[jm];
                    d_nu[(jm, lm)] = T::one() / (T::lit(4.0) * b[jm]);
                    d_mu[(jm, lm)] = -T::one() / (T::lit(4.0) * b[jm]);
                } else {
                    let base = j * l / (sb * (j * j - l * l));
                    d_nu[(jm, lm)] = sign::<T>(jm + lm) * base;
                    d_mu[(jm, lm)] = -base;
                }
            }
        }
        let mode_integrals = (0..n)
            .map(|m| {
                let p = T::from_int(m + 1) * pi_x;
                let v = p * p * x * x / T::lit(3.0) + T::lit(0.5);
                ModeIntegrals {
                    xi2_dphi2: v,
                    xmxi2_dphi2: v,
                    dphi2: p * p,
                    xi2_phi2_ddc: T::zero(),
                    xmxi2_phi2_ddc: T::zero(),
                }
            })
            .collect();
        Self {
            bc: basis.bc,
            n_prop: n,
            c_nu,
            c_mu,
            d_nu,
            d_mu,
            mixed: None,
            mode_integrals,
            exact: true,
            beta: basis.beta.clone(),
        }
    }

    fn numeric(basis: &ModeBasis<T>, spec: &WaveguideSpec<T>) -> Result<Self> {
        let q = Quad::new(basis, spec);
        let (r, n) = (basis.len(), basis.n_prop);
        let b = &basis.beta;
        let lam = &basis.lambda;
        let x = basis.width;
        let w2 = basis.omega * basis.omega;
        let two = T::lit(2.0);
        let constant = spec.constant_speed();
        let mut c_nu = DMatrix::zeros(r, n);
        let mut c_mu = DMatrix::zeros(r, n);
        let mut d_nu = DMatrix::zeros(r, n);
        let mut d_mu = DMatrix::zeros(r, n);
        let mixed = basis.bc == BoundaryKind::Mixed;
        let mut e_nu = DMatrix::zeros(n, n);
        let mut f_nu = DMatrix::zeros(n, n);
        for jm in 0..r {
            for lm in 0..n {
                let s = T::one() / (two * (b[jm] * b[lm]).sqrt());
                let delta = if jm == lm { T::one() } else { T::zero() };
                let (ic, ixdc, ixmdc) = match constant {
                    Some(c) => (delta / (c * c), T::zero(), T::zero()),
                    None => (
                        q.pair(jm, lm, |p| p.c2 * p.pj * p.pl)?,
                        q.pair(jm, lm, |p| p.xi * p.dc2 * p.pj * p.pl)?,
                        q.pair(jm, lm, |p| (x - p.xi) * p.dc2 * p.pj * p.pl)?,
                    ),
                };
                // φ'' = (λ - ω²c^{-2})φ removes second derivatives
                c_nu[(jm, lm)] = s * (-two * lam[lm] * delta + two * w2 * ic + w2 * ixdc);
                c_mu[(jm, lm)] = s * (two * lam[lm] * delta - two * w2 * ic + w2 * ixmdc);
                let a = q.pair(jm, lm, |p| p.xi * p.pj * p.dpl)?;
                let bb = q.pair(jm, lm, |p| (x - p.xi) * p.pj * p.dpl)?;
                d_mu[(jm, lm)] = -s * bb;
                if mixed {
                    d_nu[(jm, lm)] = two * s * bb;
                    if jm < n {
                        let c2 = q.pair(jm, lm, |p| (x - p.xi) * p.pj * p.pl)?;
                        e_nu[(jm, lm)] = s * (-a + two * x * b[lm] * b[lm] * c2);
                        f_nu[(jm, lm)] = -s * x * c2;
                    }
                } else {
                    d_nu[(jm, lm)] = -s * a;
                }
            }
        }
        let mut mode_integrals = Vec::with_capacity(n);
        for m in 0..n {
            let (ddc, ddcm) = if constant.is_some() {
                (T::zero(), T::zero())
            } else {
                (
                    q.pair(m, m, |p| p.xi * p.xi * p.pj * p.pj * p.ddc2)?,
                    q.pair(m, m, |p| (x - p.xi) * (x - p.xi) * p.pj * p.pj * p.ddc2)?,
                )
            };
            mode_integrals.push(ModeIntegrals {
                xi2_dphi2: q.pair(m, m, |p| p.xi * p.xi * p.dpj * p.dpj)?,
                xmxi2_dphi2: q.pair(m, m, |p| (x - p.xi) * (x - p.xi) * p.dpj * p.dpj)?,
                dphi2: q.pair(m, m, |p| p.dpj * p.dpj)?,
                xi2_phi2_ddc: ddc,
                xmxi2_phi2_ddc: ddcm,
            });
        }
        let mixed_tables = if mixed {
            let c_x = spec.inv_c2(x).0;
            let mut q_nu = DMatrix::zeros(n, n);
            let mut q_mu = DMatrix::zeros(n, n);
            let mut q_nu_comb = DMatrix::zeros(n, n);
            let mut q_mu_comb = DMatrix::zeros(n, n);
            for jm in 0..n {
                for lm in 0..n {
                    let s = T::one() / (two * (b[jm] * b[lm]).sqrt());
                    q_nu[(jm, lm)] = x * s * (w2 * c_x - b[lm] * b[jm]) * basis.phix[jm] * basis.phix[lm];
                    q_mu[(jm, lm)] = x * s * basis.dphi0[jm] * basis.dphi0[lm];
                    let db = b[lm] - b[jm];
                    q_nu_comb[(jm, lm)] = c_nu[(jm, lm)] + d_nu[(jm, lm)] * b[lm] * db
                        - db * db * (e_nu[(jm, lm)] + f_nu[(jm, lm)] * b[lm] * db);
                    q_mu_comb[(jm, lm)] = c_mu[(jm, lm)] + d_mu[(jm, lm)] * (b[lm] * b[lm] - b[jm] * b[jm]);
                }
            }
            Some(MixedTables { e_nu, f_nu, q_nu, q_mu, q_nu_comb, q_mu_comb })
        } else {
            None
        };
        Ok(Self {
            bc: basis.bc,
            n_prop: n,
            c_nu,
            c_mu,
            d_nu,
            d_mu,
            mixed: mixed_tables,
            mode_integrals,
            exact: false,
            beta: basis.beta.clone(),
        })
    }

    /// All coefficient tables in long format.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["j", "l", "c_nu", "c_mu", "d_nu", "d_mu"]);
        for j in 0..self.c_nu.nrows() {
            for l in 0..self.n_prop {
                t.push(row![
                    j + 1,
                    l + 1,
                    self.c_nu[(j, l)].f64(),
                    self.c_mu[(j, l)].f64(),
                    self.d_nu[(j, l)].f64(),
                    self.d_mu[(j, l)].f64()
                ]);
            }
        }
        t
    }

    /// Mixed-guide tables, if present.
    pub fn mixed_table(&self) -> Option<Table> {
        let m = self.mixed.as_ref()?;
        let mut t = Table::new(&["j", "l", "e_nu", "f_nu", "q_nu", "q_mu", "q_nu_comb", "q_mu_comb"]);
        for j in 0..self.n_prop {
            for l in 0..self.n_prop {
                t.push(row![
                    j + 1,
                    l + 1,
                    m.e_nu[(j, l)].f64(),
                    m.f_nu[(j, l)].f64(),
                    m.q_nu[(j, l)].f64(),
                    m.q_mu[(j, l)].f64(),
                    m.q_nu_comb[(j, l)].f64(),
                    m.q_mu_comb[(j, l)].f64()
                ]);
            }
        }
        Some(t)
    }

    /// Maximal violations of the structural identities.
    pub fn verify_symmetries(&self) -> SymmetryReport {
        let n = self.n_prop;
        let b = &self.beta;
        let mut rep = SymmetryReport {
            threshold: if self.exact { 1e-8 } else { 1e-7 },
            ..Default::default()
        };
        // the mixed d_nu is -2 d_mu, so its symmetric part doubles
        let (nu_target, mu_target) = match self.bc {
            BoundaryKind::Dirichlet => (0.5, -0.5),
            BoundaryKind::Mixed => (1.0, -0.5),
        };
        for j in 0..n {
            for l in 0..n {
                let d = if j == l { (T::one() / (b[j] * b[l]).sqrt()).f64() } else { 0.0 };
                let upd = |v: &mut f64, x: T| *v = v.max(x.f64().abs());
                upd(&mut rep.c_nu, self.c_nu[(j, l)] - self.c_nu[(l, j)]);
                upd(&mut rep.c_mu, self.c_mu[(j, l)] - self.c_mu[(l, j)]);
                rep.d_nu = rep.d_nu.max(((self.d_nu[(j, l)] + self.d_nu[(l, j)]).f64() - nu_target * d).abs());
                rep.d_mu = rep.d_mu.max(((self.d_mu[(j, l)] + self.d_mu[(l, j)]).f64() - mu_target * d).abs());
                if let Some(m) = &self.mixed {
                    let qn = rep.q_nu.get_or_insert(0.0);
                    *qn = qn.max((m.q_nu[(j, l)] - m.q_nu[(l, j)]).f64().abs());
                    let qm = rep.q_mu.get_or_insert(0.0);
                    *qm = qm.max((m.q_mu[(j, l)] - m.q_mu[(l, j)]).f64().abs());
                    let scale = m.q_nu[(j, l)].f64().abs().max(1.0);
                    let qi = rep.q_nu_identity.get_or_insert(0.0);
                    *qi = qi.max((m.q_nu_comb[(j, l)] - m.q_nu[(j, l)]).f64().abs() / scale);
                    // the component combination carries the opposite sign
                    let scale = m.q_mu[(j, l)].f64().abs().max(1.0);
                    let qi = rep.q_mu_identity.get_or_insert(0.0);
                    *qi = qi.max((m.q_mu_comb[(j, l)] + m.q_mu[(j, l)]).f64().abs() / scale);
                }
            }
        }
        rep.pass = rep.max_violation() <= rep.threshold;
        rep
    }
}

/// Largest absolute violation of each identity.
#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct SymmetryReport {
    pub c_nu: f64,
    pub c_mu: f64,
    pub d_nu: f64,
    pub d_mu: f64,
    pub q_nu: Option<f64>,
    pub q_mu: Option<f64>,
    /// Relative mismatch between component and closed forms.
    pub q_nu_identity: Option<f64>,
    pub q_mu_identity: Option<f64>,
    pub threshold: f64,
    pub pass: bool,
}

impl SymmetryReport {
    pub fn max_violation(&self) -> f64 {
        [self.c_nu, self.c_mu, self.d_nu, self.d_mu]
            .into_iter()
            .chain([self.q_nu, self.q_mu, self.q_nu_identity, self.q_mu_identity].into_iter().flatten())
            .fold(0.0, f64::max)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["identity", "violation", "threshold", "pass"]);
        let items = [
            ("c_nu_symmetric", Some(self.c_nu)),
            ("c_mu_symmetric", Some(self.c_mu)),
            ("d_nu_sum", Some(self.d_nu)),
            ("d_mu_sum", Some(self.d_mu)),
            ("q_nu_symmetric", self.q_nu),
            ("q_mu_symmetric", self.q_mu),
            ("q_nu_combination", self.q_nu_identity),
            ("q_mu_combination", self.q_mu_identity),
        ];
        for (name, v) in items {
            if let Some(v) = v {
                t.push(row![name, v, self.threshold, if v <= self.threshold { "true" } else { "false" }]);
            }
        }
        t
    }
}
