//! Detection-time statistics for a quantum particle meeting an ideal
//! detecting surface.
//!
//! The particle lives on `[x_min, 0]` and evolves under the Schrödinger
//! equation with the absorbing boundary condition `∂ψ/∂n = iκψ` at `x = 0`.
//! The outward current `(ħκ/m)|ψ(0, t)|²` is the probability density of the
//! detection time; `‖ψ_t‖²` is the probability that no detection has
//! happened yet. Soft detectors (an imaginary potential `−iv` on a shell
//! `[0, L]`), analytic reflection coefficients and Bohmian trajectories
//! serve as independent cross-checks.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

pub mod analytic;
pub mod bohmian;
pub mod convergence;
pub mod domain;
pub mod error;
pub mod export;
pub mod observables;
pub mod propagator;
pub mod reflection;
pub mod scalar;
pub mod soft;
pub mod tridiag;
pub mod wave;

pub use domain::Side;
pub use error::{Error, Result};
pub use scalar::{lit, Real, C};

pub type Complex64 = C<f64>;
pub type PhysicalConstants = domain::PhysicalConstants<f64>;
pub type SimulationDomain = domain::SimulationDomain<f64>;
pub type BoundaryKind = domain::BoundaryKind<f64>;
pub type BoundarySpec = domain::BoundarySpec<f64>;
pub type PotentialSpec = domain::PotentialSpec<f64>;
pub type Profile = domain::Profile<f64>;
pub type Segment = domain::Segment<f64>;
pub type SoftDetectorSpec = domain::SoftDetectorSpec<f64>;
pub type WaveFunction = wave::WaveFunction<f64>;
pub type PropagatorConfig = propagator::PropagatorConfig<f64>;
pub type Propagator = propagator::Propagator<f64>;
pub type EvolutionRecord = propagator::EvolutionRecord<f64>;
pub type DetectionDistribution = observables::DetectionDistribution<f64>;
pub type SummaryStatistics = observables::SummaryStatistics<f64>;
pub type SoftRunConfig = soft::SoftRunConfig<f64>;
pub type LimitSweepResult = soft::LimitSweepResult<f64>;
pub type TrajectoryResult = bohmian::TrajectoryResult<f64>;
pub type EnsembleStatistics = bohmian::EnsembleStatistics<f64>;
