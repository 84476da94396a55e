//! Numerical laboratory for resonant energy exchange in the quintic
//! nonlinear Schrödinger equation on the circle.
//!
//! - [`resonance`]: exact construction and certification of non-interacting
//!   four-mode clusters.
//! - [`model`]: the integrable phase-plane model of a single cluster and the
//!   unreduced action-angle flow it comes from.
//! - [`spectral`]: split-step Fourier solver for the full equation.
//! - [`experiments`]: scenario construction, comparison of simulation with
//!   the model, and report output.
//!
//! Numerical kernels are generic over [`scalar::Real`]; the aliases below fix
//! the scalar to `f64`, which is what the experiment layer uses.

pub mod experiments;
pub mod model;
pub mod ode;
pub mod resonance;
pub mod scalar;
pub mod spectral;

pub use resonance::{ClusterFamily, ClusterSpec, ResonantSextuple};

pub type Params = model::ModelParams<f64>;
pub type PhaseState = model::PhasePlaneState<f64>;
pub type ActionAngles = model::ActionAngleState<f64>;
pub type Trajectory = model::ModelTrajectory<f64>;
pub type Field = spectral::SpectralField<f64>;
pub type Sim = spectral::SimParams<f64>;
