//! Run configuration file.

use crate::Failure;
use num_complex::Complex64;
use rwguide::boundary::{Covariance, TabulatedSpectrum};
use rwguide::ensemble::CompareOptions;
use rwguide::*;
use std::result::Result;
use serde::Deserialize;
use std::path::PathBuf;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub waveguide: WaveguideBlock,
    pub frequency: FrequencyBlock,
    pub covariance: Option<CovarianceBlock>,
    pub source: Option<SourceBlock>,
    pub simulation: Option<SimulationBlock>,
    #[serde(default)]
    pub theory: TheoryBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveguideBlock {
    pub width: f64,
    pub speed: Speed,
    pub boundary: Boundary,
}

/// A constant speed or samples on a uniform grid spanning the section.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Speed {
    Constant(f64),
    Sampled(Vec<f64>),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Dirichlet,
    DirichletNeumann,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyBlock {
    pub omega: Option<f64>,
    /// `ω/c_o`; constant speed only.
    pub k: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CovarianceBlock {
    Gaussian {
        ell_nu: f64,
        ell_mu: Option<f64>,
        #[serde(default = "one")]
        r0_nu: f64,
        #[serde(default = "one")]
        r0_mu: f64,
    },
    Tabulated {
        nu: SpectrumBlock,
        mu: SpectrumBlock,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumBlock {
    pub dbeta: f64,
    pub psd: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceBlock {
    pub x0: f64,
    /// `[re, im]`.
    #[serde(default = "unit")]
    pub fhat: [f64; 2],
}

fn unit() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationBlock {
    pub epsilon: Option<f64>,
    /// Scaled range `L`.
    pub range: Option<f64>,
    pub step: Option<f64>,
    #[serde(default)]
    pub checkpoints: Vec<f64>,
    pub realizations: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    pub l_max: Option<usize>,
    pub clip: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryBlock {
    #[serde(default)]
    pub pairing: MixedPairing,
    pub kappa_tail_tol: Option<f64>,
    /// Scaled ranges for `moments` and `fourth`; defaults to the checkpoints.
    pub z: Option<Vec<f64>>,
    pub z_threshold: Option<f64>,
    pub bias_factor: Option<f64>,
    pub required_fraction: Option<f64>,
    #[serde(default)]
    pub gate_fourth: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: Option<PathBuf>,
    pub format: Option<Format>,
}

fn bad<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Validation(msg.into()))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        serde_json::from_str(text).map_err(|e| Failure::Validation(format!("config: {e}")))
    }

    pub fn seed(&self) -> u64 {
        self.simulation.as_ref().map_or(0, |s| s.seed)
    }

    pub fn spec(&self) -> Result<WaveguideSpec64, Failure> {
        let w = &self.waveguide;
        let speed = match &w.speed {
            Speed::Constant(c) => SpeedProfile::Constant(*c),
            Speed::Sampled(v) => SpeedProfile::Sampled(v.clone()),
        };
        let bc = match w.boundary {
            Boundary::Dirichlet => BoundaryKind::Dirichlet,
            Boundary::DirichletNeumann => BoundaryKind::Mixed,
        };
        Ok(WaveguideSpec::new(w.width, speed, bc)?)
    }

    pub fn omega(&self) -> Result<f64, Failure> {
        match (self.frequency.omega, self.frequency.k, &self.waveguide.speed) {
            (Some(w), None, _) => Ok(w),
            (None, Some(k), Speed::Constant(c)) => Ok(k * c),
            (None, Some(_), Speed::Sampled(_)) => bad("frequency.k needs a constant speed; give omega"),
            _ => bad("give exactly one of frequency.omega and frequency.k"),
        }
    }

    pub fn basis(&self) -> Result<(WaveguideSpec64, ModeBasis64), Failure> {
        let spec = self.spec()?;
        let opts = ModeOptions { l_max: self.simulation.as_ref().and_then(|s| s.l_max), ..Default::default() };
        let basis = ModeBasis::build(&spec, self.omega()?, &opts)?;
        Ok((spec, basis))
    }

    pub fn model(&self) -> Result<CovarianceModel64, Failure> {
        match &self.covariance {
            None => bad("this command needs a covariance block"),
            Some(CovarianceBlock::Gaussian { ell_nu, ell_mu, r0_nu, r0_mu }) => Ok(CovarianceModel {
                nu: Covariance::gaussian(*ell_nu, *r0_nu)?,
                mu: Covariance::gaussian(ell_mu.unwrap_or(*ell_nu), *r0_mu)?,
            }),
            Some(CovarianceBlock::Tabulated { nu, mu }) => Ok(CovarianceModel {
                nu: Covariance::Tabulated(TabulatedSpectrum::new(nu.dbeta, nu.psd.clone())?),
                mu: Covariance::Tabulated(TabulatedSpectrum::new(mu.dbeta, mu.psd.clone())?),
            }),
        }
    }

    /// Single correlation length of a Gaussian model, for the reference-guide reports.
    pub fn gaussian_ell(&self) -> Result<(f64, Option<String>), Failure> {
        match &self.covariance {
            Some(CovarianceBlock::Gaussian { ell_nu, ell_mu, .. }) => {
                let note = match ell_mu {
                    Some(m) if m != ell_nu => Some(format!("ell_mu = {m} differs from ell_nu; using ell_nu = {ell_nu}")),
                    _ => None,
                };
                Ok((*ell_nu, note))
            }
            _ => bad("this command needs a Gaussian covariance block"),
        }
    }

    pub fn source(&self) -> Result<SourceExcitation<f64>, Failure> {
        match &self.source {
            Some(s) => Ok(SourceExcitation { x0: s.x0, fhat: Complex64::new(s.fhat[0], s.fhat[1]) }),
            None => bad("this command needs a source block"),
        }
    }

    fn simulation(&self) -> Result<&SimulationBlock, Failure> {
        self.simulation.as_ref().map_or_else(|| bad("this command needs a simulation block"), Ok)
    }

    pub fn sim(&self) -> Result<SimulationConfig<f64>, Failure> {
        let s = self.simulation()?;
        let (Some(epsilon), Some(range)) = (s.epsilon, s.range) else {
            return bad("simulation needs epsilon and range");
        };
        let cfg = SimulationConfig { epsilon, range, step: s.step, checkpoints: s.checkpoints.clone() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn ensemble(&self, workers: Option<usize>, override_forward: bool) -> Result<EnsembleConfig<f64>, Failure> {
        let s = self.simulation()?;
        let Some(m) = s.realizations else {
            return bad("simulation needs realizations");
        };
        if s.checkpoints.is_empty() {
            return bad("simulation needs at least one checkpoint");
        }
        Ok(EnsembleConfig { m, seed: s.seed, sim: self.sim()?, workers, override_forward, clip: s.clip })
    }

    /// Scaled ranges for the theory commands.
    pub fn theory_z(&self) -> Result<Vec<f64>, Failure> {
        let z = match &self.theory.z {
            Some(z) => z.clone(),
            None => self.simulation.as_ref().map(|s| s.checkpoints.clone()).unwrap_or_default(),
        };
        if z.is_empty() {
            return bad("give theory.z or simulation.checkpoints");
        }
        if z.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("theory ranges must be finite and nonnegative");
        }
        Ok(z)
    }

    pub fn compare_options(&self) -> CompareOptions {
        let d = CompareOptions::default();
        let t = &self.theory;
        CompareOptions {
            z_threshold: t.z_threshold.unwrap_or(d.z_threshold),
            bias_factor: t.bias_factor.unwrap_or(d.bias_factor),
            required_fraction: t.required_fraction.unwrap_or(d.required_fraction),
            gate_fourth: t.gate_fourth,
        }
    }
}
