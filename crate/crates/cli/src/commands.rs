//! One function per subcommand.

use crate::config::{Format, RunConfig};
use crate::output::Sink;
use crate::Failure;
use rwguide::boundary::validate_forward_scattering;
use rwguide::diffusion::{hf_estimates, interior_comparison, kappa, length_scales, KappaOptions, Regime};
use rwguide::ensemble::{compare_to_limit, realization, run_ensemble, status_text};
use rwguide::solver::initial_amplitudes;
use rwguide::*;
use std::result::Result;

pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub sink: Sink,
    pub workers: Option<usize>,
    pub override_forward: bool,
}

fn warn(msg: &str) {
    eprintln!("warning: {msg}");
}

/// Runs the forward-scattering diagnostic and reports a warning on stderr.
fn forward(model: &CovarianceModel64, basis: &ModeBasis64) -> ForwardReport {
    let r = validate_forward_scattering(model, basis);
    if r.status == CheckStatus::Warn {
        match (r.kl, r.kl_bound) {
            (Some(kl), Some(b)) if kl < b => warn(&format!("k*ell = {kl} is below the forward-scattering bound {b}")),
            _ => warn(&format!("sum-wavenumber spectral ratio {:e} is not negligible", r.max_ratio())),
        }
    }
    r
}

struct Theory {
    basis: ModeBasis64,
    model: CovarianceModel64,
    generator: GeneratorCoefficients64,
}

fn theory(cfg: &RunConfig, with_kappa: bool) -> Result<Theory, Failure> {
    let (spec, basis) = cfg.basis()?;
    let coupling = CouplingTables::build(&basis, &spec)?;
    let model = cfg.model()?;
    forward(&model, &basis);
    let tables = SpectralTables::build(&model, &basis)?;
    let mut generator = GeneratorCoefficients::build(&basis, Some(&coupling), &tables, cfg.theory.pairing)?;
    if with_kappa {
        if basis.bc == BoundaryKind::Dirichlet {
            let k = kappa(&basis, &coupling, &model, &KappaOptions { tail_tol: cfg.theory.kappa_tail_tol })?;
            generator = generator.with_kappa(k);
        } else {
            warn("kappa is only available for the Dirichlet guide; mean phases omit it");
        }
    }
    Ok(Theory { basis, model, generator })
}

pub fn modes(c: &Ctx) -> Result<(), Failure> {
    let (_, basis) = c.cfg.basis()?;
    c.sink.table("modes", &basis.table(0..basis.n_prop))
}

pub fn coupling(c: &Ctx) -> Result<(), Failure> {
    let (spec, basis) = c.cfg.basis()?;
    let t = CouplingTables::build(&basis, &spec)?;
    let report = t.verify_symmetries();
    c.sink.table("coupling", &t.table())?;
    c.sink.table("symmetries", &report.table())?;
    if let Some(m) = t.mixed_table() {
        c.sink.table("coupling_mixed", &m)?;
    }
    if !report.pass {
        return Err(Failure::Numerical(format!("symmetry identities violated by {:e}", report.max_violation())));
    }
    Ok(())
}

pub fn gamma(c: &Ctx) -> Result<(), Failure> {
    let th = theory(c.cfg, false)?;
    let g = &th.generator;
    let r = validate_forward_scattering(&th.model, &th.basis);
    let mut f = rwguide::table::Table::new(&["quantity", "value"]);
    f.push(rwguide::row!["ratio_nu", r.ratio_nu]);
    f.push(rwguide::row!["ratio_mu", r.ratio_mu]);
    f.push(rwguide::row!["kl", r.kl.unwrap_or(f64::NAN)]);
    f.push(rwguide::row!["kl_bound", r.kl_bound.unwrap_or(f64::NAN)]);
    f.push(rwguide::row!["status", status_text(r.status)]);
    c.sink.table("gamma_c", &g.gamma_c_table())?;
    c.sink.table("gamma_0", &g.gamma_0_table())?;
    c.sink.table("gamma_s", &g.gamma_s_table())?;
    c.sink.table("forward_check", &f)
}

pub fn kappa_cmd(c: &Ctx) -> Result<(), Failure> {
    let (spec, basis) = c.cfg.basis()?;
    let coupling = CouplingTables::build(&basis, &spec)?;
    let model = c.cfg.model()?;
    forward(&model, &basis);
    let k = kappa(&basis, &coupling, &model, &KappaOptions { tail_tol: c.cfg.theory.kappa_tail_tol })?;
    c.sink.table("kappa", &k.table())
}

fn trajectory(c: &Ctx, fourth: bool) -> Result<MomentTrajectory<f64>, Failure> {
    let th = theory(c.cfg, !fourth)?;
    let a0 = initial_amplitudes(&th.basis, &c.cfg.source()?)?;
    let z = c.cfg.theory_z()?;
    Ok(MomentTrajectory::compute(&th.generator, &a0, &z, fourth))
}

pub fn moments(c: &Ctx) -> Result<(), Failure> {
    let t = trajectory(c, false)?;
    c.sink.table("moments", &t.powers_table())?;
    c.sink.table("mean_amplitude", &t.mean_table())
}

pub fn fourth(c: &Ctx) -> Result<(), Failure> {
    let t = trajectory(c, true)?;
    match t.fourth_table() {
        Some(f) => c.sink.table("fourth", &f),
        None => Err(Failure::Numerical("fourth moments were not computed".into())),
    }
}

pub fn lengthscales(c: &Ctx) -> Result<(), Failure> {
    let th = theory(c.cfg, false)?;
    let ls = length_scales(&th.generator)?;
    c.sink.table("lengthscales", &ls.table())?;
    c.sink.table("equipartition", &ls.equipartition_table())
}

/// `(N, α, kℓ, X)` of a constant-speed Dirichlet guide.
fn reference_params(cfg: &RunConfig) -> Result<(usize, f64, f64, f64), Failure> {
    let (_, basis) = cfg.basis()?;
    let (Some(k), Some(alpha), BoundaryKind::Dirichlet) = (basis.k, basis.alpha, basis.bc) else {
        return Err(Failure::Validation("this command needs a constant-speed Dirichlet guide".into()));
    };
    let (ell, note) = cfg.gaussian_ell()?;
    if let Some(n) = note {
        warn(&n);
    }
    let n = basis.n_prop;
    let kl = k * ell;
    if let Some(w) = Regime::classify(n, kl).warning() {
        warn(w);
    }
    Ok((n, alpha, kl, basis.width))
}

pub fn estimates(c: &Ctx) -> Result<(), Failure> {
    let (n, alpha, kl, x) = reference_params(c.cfg)?;
    let r = hf_estimates(n, alpha, kl, x)?;
    c.sink.table("estimates", &r.table())
}

pub fn interior(c: &Ctx) -> Result<(), Failure> {
    let (n, alpha, kl, x) = reference_params(c.cfg)?;
    let r = interior_comparison(n, alpha, kl, x)?;
    c.sink.table("interior", &r.table())?;
    c.sink.table("interior_asymptotic", &r.asymptotic_table())
}

struct Setup {
    basis: ModeBasis64,
    coupling: CouplingTables64,
    model: CovarianceModel64,
    src: SourceExcitation<f64>,
    ens: EnsembleConfig<f64>,
}

fn setup(c: &Ctx) -> Result<Setup, Failure> {
    let (spec, basis) = c.cfg.basis()?;
    let coupling = CouplingTables::build(&basis, &spec)?;
    let model = c.cfg.model()?;
    forward(&model, &basis);
    let src = c.cfg.source()?;
    let ens = c.cfg.ensemble(c.workers, c.override_forward)?;
    Ok(Setup { basis, coupling, model, src, ens })
}

pub fn simulate(c: &Ctx) -> Result<(), Failure> {
    let s = setup(c)?;
    let res = run_ensemble(&s.basis, &s.coupling, &s.model, &s.src, &s.ens)?;
    let (path, traj) = realization(&s.basis, &s.coupling, &s.model, &s.src, &s.ens, 0)?;
    match c.sink.format {
        Format::Csv => c.sink.table("ensemble", &res.table())?,
        Format::Json => c.sink.document("ensemble", "result", &res)?,
    }
    c.sink.table("trajectory", &traj.table())?;
    c.sink.table("realization", &path.table())
}

pub fn compare(c: &Ctx) -> Result<bool, Failure> {
    let s = setup(c)?;
    let tables = SpectralTables::build(&s.model, &s.basis)?;
    let g = GeneratorCoefficients::build(&s.basis, Some(&s.coupling), &tables, c.cfg.theory.pairing)?;
    let res = run_ensemble(&s.basis, &s.coupling, &s.model, &s.src, &s.ens)?;
    let rep = compare_to_limit(&res, &g, &c.cfg.compare_options())?;
    match c.sink.format {
        Format::Csv => c.sink.table("comparison", &rep.table())?,
        Format::Json => c.sink.document("comparison", "report", &rep)?,
    }
    let lines = rep.summary_lines();
    c.sink.text("summary.txt", &lines)?;
    for l in &lines {
        println!("{l}");
    }
    Ok(rep.pass)
}
