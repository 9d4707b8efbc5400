//! Mode coupling in a two-dimensional acoustic waveguide with randomly
//! perturbed walls.
//!
//! The library builds the ideal mode basis, the deterministic coupling
//! tables, random boundary paths, and integrates the forward-scattering
//! amplitude equations. The `diffusion` module evaluates the limiting
//! Markov description, and `ensemble` compares the two.

pub mod boundary;
pub mod coupling;
pub mod diffusion;
pub mod ensemble;
pub mod error;
pub mod num;
pub mod quad;
pub mod solver;
pub mod spline;
pub mod table;
pub mod waveguide;

mod eigen;

pub use boundary::{
    BoundaryRealization, CheckStatus, Covariance, CovarianceModel, ForwardReport, Process, SpectralTables, SynthGrid,
    Synthesizer, Taper,
};
pub use coupling::{CouplingTables, SymmetryReport};
pub use diffusion::{GeneratorCoefficients, KappaResult, LengthScales, MixedPairing, MomentTrajectory};
pub use ensemble::{ComparisonReport, CompareOptions, EnsembleConfig, EnsembleResult};
pub use error::{Error, Result};
pub use num::Real;
pub use solver::{AmplitudeTrajectory, SimulationConfig, SourceExcitation, StepPlan};
pub use table::{Cell, Table};
pub use waveguide::{BoundaryKind, ModeBasis, ModeOptions, SpeedProfile, WaveguideSpec};

pub type ModeBasis64 = ModeBasis<f64>;
pub type WaveguideSpec64 = WaveguideSpec<f64>;
pub type CouplingTables64 = CouplingTables<f64>;
pub type CovarianceModel64 = CovarianceModel<f64>;
pub type BoundaryRealization64 = BoundaryRealization<f64>;
pub type AmplitudeTrajectory64 = AmplitudeTrajectory<f64>;
pub type GeneratorCoefficients64 = GeneratorCoefficients<f64>;
pub type EnsembleResult64 = EnsembleResult<f64>;
