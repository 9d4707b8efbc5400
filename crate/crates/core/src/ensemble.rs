//! Monte Carlo ensembles of boundary realizations and their comparison with
//! the diffusion limit.

use crate::boundary::{
    validate_forward_scattering, BoundaryRealization, CheckStatus, CovarianceModel, ForwardReport, SynthGrid, Synthesizer,
};
use crate::coupling::CouplingTables;
use crate::diffusion::{mean_amplitude, mean_powers, FourthMomentSystem, GeneratorCoefficients};
use crate::error::{invalid, Error, Result};
use crate::num::{cabs, KahanSum, Real};
use crate::row;
use crate::solver::{
    initial_amplitudes, propagate_forward, step_rule, AmplitudeTrajectory, RandomCoupling, SimulationConfig, SourceExcitation,
    StepPlan,
};
use crate::table::{Cell, Table};
use crate::waveguide::ModeBasis;
use nalgebra::DMatrix;
use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftNum;

/// Realizations integrated between two sequential merges.
pub const BLOCK: usize = 64;

/// Sum-wavenumber spectral ratio above which the ensemble refuses to run.
pub const FORWARD_RATIO_LIMIT: f64 = 0.1;

/// Rough cap on memory held by paths in flight.
const MEMORY_LIMIT_BYTES: f64 = 8.0 * 1024.0 * 1024.0 * 1024.0;

#[derive(Clone, Debug)]
pub struct EnsembleConfig<T> {
    pub m: usize,
    pub seed: u64,
    pub sim: SimulationConfig<T>,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Run even when the forward-scattering gate fails.
    pub override_forward: bool,
    /// Symmetric clip of boundary values in standard deviations.
    pub clip: Option<T>,
}

/// Accepts a diagnostic unless the backscattering spectra are too large.
pub fn forward_gate(report: &ForwardReport, override_forward: bool) -> Result<()> {
    if report.max_ratio() > FORWARD_RATIO_LIMIT && !override_forward {
        return Err(Error::ForwardScattering(report.max_ratio()));
    }
    Ok(())
}

/// Ensemble estimates per checkpoint; mode-pair arrays are row-major `N×N`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct EnsembleResult<T> {
    pub m: usize,
    pub seed: u64,
    pub n: usize,
    pub epsilon: T,
    pub z: Vec<T>,
    /// `ε²∫w²`: scaled range weighted by the squared taper.
    pub z_eff: Vec<T>,
    pub a0_re: Vec<T>,
    pub a0_im: Vec<T>,
    pub mean_re: Vec<Vec<T>>,
    pub mean_im: Vec<Vec<T>>,
    pub mean_re_se: Vec<Vec<T>>,
    pub mean_im_se: Vec<Vec<T>>,
    pub power: Vec<Vec<T>>,
    pub power_se: Vec<Vec<T>>,
    pub fourth: Vec<Vec<T>>,
    pub fourth_se: Vec<Vec<T>>,
    pub energy: Vec<T>,
    pub energy_se: Vec<T>,
}

/// Compensated sums of deviations from the first sample.
struct Acc<T> {
    shift: Option<T>,
    s: KahanSum<T>,
    s2: KahanSum<T>,
}

impl<T: Real> Acc<T> {
    fn new() -> Self {
        Self { shift: None, s: KahanSum::default(), s2: KahanSum::default() }
    }

    fn add(&mut self, x: T) {
        let d = x - *self.shift.get_or_insert(x);
        self.s.add(d);
        self.s2.add(d * d);
    }

    /// Mean and standard error of the mean.
    fn finish(&self, m: usize) -> (T, T) {
        let mf = T::from_int(m);
        let k = self.shift.unwrap_or(T::zero());
        let s = self.s.value();
        let var = ((self.s2.value() - s * s / mf) / T::from_int(m - 1)).max(T::zero());
        (k + s / mf, (var / mf).sqrt())
    }
}

struct CheckpointAcc<T> {
    re: Vec<Acc<T>>,
    im: Vec<Acc<T>>,
    p: Vec<Acc<T>>,
    pp: Vec<Acc<T>>,
    e: Acc<T>,
}

impl<T: Real> CheckpointAcc<T> {
    fn new(n: usize) -> Self {
        let v = |k: usize| (0..k).map(|_| Acc::new()).collect();
        Self { re: v(n), im: v(n), p: v(n), pp: v(n * n), e: Acc::new() }
    }

    fn add(&mut self, a: &[Complex<T>]) {
        let n = a.len();
        let p: Vec<T> = a.iter().map(|v| v.norm_sqr()).collect();
        let mut e = T::zero();
        for j in 0..n {
            self.re[j].add(a[j].re);
            self.im[j].add(a[j].im);
            self.p[j].add(p[j]);
            e += p[j];
            for l in 0..n {
                self.pp[j * n + l].add(p[j] * p[l]);
            }
        }
        self.e.add(e);
    }
}

fn split<T: Real>(acc: &[Acc<T>], m: usize) -> (Vec<T>, Vec<T>) {
    acc.iter().map(|a| a.finish(m)).unzip()
}

/// Synthesis grid twice as fine as the step and long enough for the run.
fn synth_grid<T: Real>(plan: &StepPlan<T>, model: &CovarianceModel<T>, clip: Option<T>) -> SynthGrid<T> {
    SynthGrid {
        dz: plan.h / T::lit(2.0),
        z_max: plan.physical_end().max(T::lit(10.0) * model.ell_max()),
        taper_width: None,
        clip,
    }
}

/// Boundary path and amplitudes of realization `index`, exactly as the
/// ensemble would produce them.
pub fn realization<T: Real + FftNum>(
    basis: &ModeBasis<T>,
    coupling: &CouplingTables<T>,
    model: &CovarianceModel<T>,
    src: &SourceExcitation<T>,
    cfg: &EnsembleConfig<T>,
    index: u64,
) -> Result<(BoundaryRealization<T>, AmplitudeTrajectory<T>)> {
    forward_gate(&validate_forward_scattering(model, basis), cfg.override_forward)?;
    let beta = basis.beta_prop();
    let plan = cfg.sim.plan(step_rule(beta, model.ell_min()))?;
    let synth = Synthesizer::new(model, synth_grid(&plan, model, cfg.clip))?;
    let path = synth.synthesize(cfg.seed, index);
    let a0 = initial_amplitudes(basis, src)?;
    let field = RandomCoupling { tables: coupling, path: &path };
    let traj = propagate_forward(&field, beta, &a0, &plan, (cfg.seed, index))?;
    Ok((path, traj))
}

/// Integrates `cfg.m` realizations indexed `0..M` under `cfg.seed`.
///
/// Work is split into fixed blocks; within a block realizations run in
/// parallel and are merged in index order, so results do not depend on the
/// worker count.
pub fn run_ensemble<T: Real + FftNum>(
    basis: &ModeBasis<T>,
    coupling: &CouplingTables<T>,
    model: &CovarianceModel<T>,
    src: &SourceExcitation<T>,
    cfg: &EnsembleConfig<T>,
) -> Result<EnsembleResult<T>> {
    if cfg.m < 2 {
        return invalid("ensemble needs at least two realizations");
    }
    if cfg.workers == Some(0) {
        return invalid("worker count must be positive");
    }
    forward_gate(&validate_forward_scattering(model, basis), cfg.override_forward)?;
    let n = basis.n_prop;
    let beta = basis.beta_prop().to_vec();
    let plan = cfg.sim.plan(step_rule(&beta, model.ell_min()))?;
    let z_end = plan.physical_end();
    let grid = synth_grid(&plan, model, cfg.clip);
    let synth = Synthesizer::new(model, grid)?;
    let threads = cfg.workers.unwrap_or_else(rayon::current_num_threads).max(1);
    let bytes = (z_end / grid.dz).f64() * 8.0 * std::mem::size_of::<T>() as f64 * (threads + BLOCK) as f64;
    if bytes > MEMORY_LIMIT_BYTES {
        return invalid(format!("boundary paths would need about {:.1} GiB", bytes / 1024f64.powi(3)));
    }
    let a0 = initial_amplitudes(basis, src)?;
    let ncp = plan.checkpoint_steps.len();
    let mut accs: Vec<CheckpointAcc<T>> = (0..ncp).map(|_| CheckpointAcc::new(n)).collect();
    let one = |index: usize| -> Result<Vec<Vec<Complex<T>>>> {
        let path = synth.synthesize(cfg.seed, index as u64);
        let field = RandomCoupling { tables: coupling, path: &path };
        Ok(propagate_forward(&field, &beta, &a0, &plan, (cfg.seed, index as u64))?.amplitudes)
    };
    let run = |accs: &mut Vec<CheckpointAcc<T>>| -> Result<()> {
        let mut start = 0;
        while start < cfg.m {
            let end = (start + BLOCK).min(cfg.m);
            let out: Vec<Result<Vec<Vec<Complex<T>>>>> = (start..end).into_par_iter().map(one).collect();
            for r in out {
                for (acc, a) in accs.iter_mut().zip(r?) {
                    acc.add(&a);
                }
            }
            start = end;
        }
        Ok(())
    };
    match cfg.workers {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Invalid(e.to_string()))?
            .install(|| run(&mut accs))?,
        None => run(&mut accs)?,
    }
    let taper = synth.taper();
    let e2 = cfg.sim.epsilon * cfg.sim.epsilon;
    let m = cfg.m;
    let mut res = EnsembleResult {
        m,
        seed: cfg.seed,
        n,
        epsilon: cfg.sim.epsilon,
        z: plan.checkpoint_steps.iter().map(|&s| plan.scaled(s)).collect(),
        z_eff: plan
            .checkpoint_steps
            .iter()
            .map(|&s| e2 * taper.integral_sq(plan.h * T::from_int(s)))
            .collect(),
        a0_re: a0.iter().map(|a| a.re).collect(),
        a0_im: a0.iter().map(|a| a.im).collect(),
        mean_re: vec![],
        mean_im: vec![],
        mean_re_se: vec![],
        mean_im_se: vec![],
        power: vec![],
        power_se: vec![],
        fourth: vec![],
        fourth_se: vec![],
        energy: vec![],
        energy_se: vec![],
    };
    for acc in &accs {
        let (v, s) = split(&acc.re, m);
        res.mean_re.push(v);
        res.mean_re_se.push(s);
        let (v, s) = split(&acc.im, m);
        res.mean_im.push(v);
        res.mean_im_se.push(s);
        let (v, s) = split(&acc.p, m);
        res.power.push(v);
        res.power_se.push(s);
        let (v, s) = split(&acc.pp, m);
        res.fourth.push(v);
        res.fourth_se.push(s);
        let (v, s) = acc.e.finish(m);
        res.energy.push(v);
        res.energy_se.push(s);
    }
    Ok(res)
}

impl<T: Real> EnsembleResult<T> {
    pub fn a0(&self) -> Vec<Complex<T>> {
        self.a0_re.iter().zip(&self.a0_im).map(|(r, i)| Complex::new(*r, *i)).collect()
    }

    /// Columns `z, j, l, moment, estimate, stderr`.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["z", "j", "l", "moment", "estimate", "stderr"]);
        let n = self.n;
        let none = || Cell::Text(String::new());
        for (c, z) in self.z.iter().enumerate() {
            let z = z.f64();
            for j in 0..n {
                t.push(vec![z.into(), (j + 1).into(), none(), "re_a".into(), self.mean_re[c][j].f64().into(), self.mean_re_se[c][j].f64().into()]);
                t.push(vec![z.into(), (j + 1).into(), none(), "im_a".into(), self.mean_im[c][j].f64().into(), self.mean_im_se[c][j].f64().into()]);
                t.push(vec![z.into(), (j + 1).into(), none(), "P1".into(), self.power[c][j].f64().into(), self.power_se[c][j].f64().into()]);
            }
            for j in 0..n {
                for l in 0..n {
                    t.push(row![z, j + 1, l + 1, "P2", self.fourth[c][j * n + l].f64(), self.fourth_se[c][j * n + l].f64()]);
                }
            }
            t.push(vec![z.into(), none(), none(), "energy".into(), self.energy[c].f64().into(), self.energy_se[c].f64().into()]);
        }
        t
    }
}

/// Thresholds for the comparison.
#[derive(Clone, Copy, Debug)]
pub struct CompareOptions {
    /// Multiple of the standard error always allowed.
    pub z_threshold: f64,
    /// Finite-ε bias allowance as a multiple of `ε·theory`.
    pub bias_factor: f64,
    /// Fraction of records that must pass for a gated moment.
    pub required_fraction: f64,
    /// Include fourth moments in the overall verdict.
    pub gate_fourth: bool,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self { z_threshold: 3.0, bias_factor: 5.0, required_fraction: 0.95, gate_fourth: false }
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ComparisonRow {
    pub z: f64,
    pub z_eff: f64,
    pub j: Option<usize>,
    pub l: Option<usize>,
    pub moment: &'static str,
    pub estimate: f64,
    pub stderr: f64,
    pub theory: f64,
    pub zscore: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct MomentSummary {
    pub moment: &'static str,
    pub total: usize,
    pub passed: usize,
    pub fraction: f64,
    pub gated: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub summary: Vec<MomentSummary>,
    pub pass: bool,
    /// Phases of the mean amplitudes are recorded but never gated.
    pub note: &'static str,
}

impl ComparisonReport {
    pub fn summary_for(&self, moment: &str) -> Option<&MomentSummary> {
        self.summary.iter().find(|s| s.moment == moment)
    }

    /// Columns `z, z_eff, j, l, moment, estimate, stderr, theory, zscore, tolerance, pass`.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "z", "z_eff", "j", "l", "moment", "estimate", "stderr", "theory", "zscore", "tolerance", "pass",
        ]);
        let opt = |v: Option<usize>| v.map_or(Cell::Text(String::new()), Cell::from);
        for r in &self.rows {
            t.push(vec![
                r.z.into(),
                r.z_eff.into(),
                opt(r.j),
                opt(r.l),
                r.moment.into(),
                r.estimate.into(),
                r.stderr.into(),
                r.theory.into(),
                r.zscore.into(),
                r.tolerance.into(),
                (if r.pass { "pass" } else { "fail" }).into(),
            ]);
        }
        t
    }

    /// One line per moment kind and the verdict.
    pub fn summary_lines(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .summary
            .iter()
            .map(|s| {
                format!(
                    "{}: {}/{} within tolerance ({:.1}%){}",
                    s.moment,
                    s.passed,
                    s.total,
                    100.0 * s.fraction,
                    if s.gated { "" } else { " [not gated]" }
                )
            })
            .collect();
        out.push(if self.pass { "pass".into() } else { "fail".into() });
        out
    }
}

fn zscore(est: f64, theory: f64, se: f64) -> f64 {
    if se > 0.0 {
        (est - theory) / se
    } else if est == theory {
        0.0
    } else {
        f64::INFINITY.copysign(est - theory)
    }
}

/// Compares ensemble moments with the limit theory evaluated at `z_eff`.
pub fn compare_to_limit<T: Real>(
    result: &EnsembleResult<T>,
    coeffs: &GeneratorCoefficients<T>,
    opts: &CompareOptions,
) -> Result<ComparisonReport> {
    let n = result.n;
    if coeffs.n() != n || result.a0_re.len() != n {
        return Err(Error::Provenance(format!("ensemble has {n} modes, generator has {}", coeffs.n())));
    }
    if result.z.len() != result.power.len() {
        return Err(Error::Provenance("checkpoint count does not match stored moments".into()));
    }
    let eps = result.epsilon.f64();
    let a0 = result.a0();
    let p0: Vec<T> = a0.iter().map(|a| a.norm_sqr()).collect();
    let total: f64 = p0.iter().map(|p| p.f64()).sum();
    let sys = FourthMomentSystem::new(&coeffs.gamma_c);
    let p2_0 = DMatrix::from_fn(n, n, |j, l| p0[j] * p0[l]);
    let mut rows = Vec::new();
    let mut row_for = |z: f64, ze: f64, j: Option<usize>, l: Option<usize>, moment: &'static str, est: f64, se: f64, th: f64| {
        let tol = (opts.z_threshold * se).max(opts.bias_factor * eps * th.abs());
        rows.push(ComparisonRow {
            z,
            z_eff: ze,
            j,
            l,
            moment,
            estimate: est,
            stderr: se,
            theory: th,
            zscore: zscore(est, th, se),
            tolerance: tol,
            pass: (est - th).abs() <= tol,
        });
    };
    for c in 0..result.z.len() {
        let (z, ze) = (result.z[c].f64(), result.z_eff[c].f64());
        let zt = result.z_eff[c];
        let amp = mean_amplitude(coeffs, &a0, zt);
        let p1 = mean_powers(coeffs, &p0, zt);
        let p2 = sys.evolve(&p2_0, zt);
        for j in 0..n {
            let est = Complex::new(result.mean_re[c][j], result.mean_im[c][j]);
            let se = result.mean_re_se[c][j].f64().hypot(result.mean_im_se[c][j].f64());
            row_for(z, ze, Some(j + 1), None, "abs_mean", cabs(est).f64(), se, cabs(amp[j]).f64());
        }
        for j in 0..n {
            row_for(z, ze, Some(j + 1), None, "P1", result.power[c][j].f64(), result.power_se[c][j].f64(), p1[j].f64());
        }
        for j in 0..n {
            for l in j..n {
                let k = j * n + l;
                row_for(z, ze, Some(j + 1), Some(l + 1), "P2", result.fourth[c][k].f64(), result.fourth_se[c][k].f64(), p2[(j, l)].f64());
            }
        }
        row_for(z, ze, None, None, "energy", result.energy[c].f64(), result.energy_se[c].f64(), total);
    }
    let mut summary = Vec::new();
    for (moment, gated) in [("abs_mean", true), ("P1", true), ("P2", opts.gate_fourth), ("energy", false)] {
        let sel: Vec<&ComparisonRow> = rows.iter().filter(|r| r.moment == moment).collect();
        let passed = sel.iter().filter(|r| r.pass).count();
        let fraction = if sel.is_empty() { 1.0 } else { passed as f64 / sel.len() as f64 };
        summary.push(MomentSummary {
            moment,
            total: sel.len(),
            passed,
            fraction,
            gated,
            pass: fraction >= opts.required_fraction,
        });
    }
    let pass = summary.iter().all(|s| !s.gated || s.pass);
    Ok(ComparisonReport {
        rows,
        summary,
        pass,
        note: "mean amplitudes are compared by modulus only; phases are not gated",
    })
}

/// Diagnostic status as text.
pub fn status_text(s: CheckStatus) -> &'static str {
    match s {
        CheckStatus::Pass => "pass",
        CheckStatus::Warn => "warn",
    }
}
