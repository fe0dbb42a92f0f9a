//! Numerical audit of quantitative adiabatic conditions.
//!
//! The crate propagates time-dependent Hamiltonians with a midpoint
//! exponential integrator, tracks instantaneous eigenstates with a continuous
//! phase convention, evaluates the usual coupling-over-gap conditions against
//! the actual fidelity of the adiabatic approximation, and builds the dual
//! system `H^b = -U^dagger H U` whose conditions coincide with the original's
//! while its adiabatic approximation fails.
//!
//! The numerical core is generic over the real scalar ([`scalar::Real`], `f32`
//! or `f64`); the aliases below fix it to one precision.

// Checks are written `!(x <= tol)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod config;
pub mod dual;
pub mod error;
pub mod propagator;
pub mod quantum;
pub mod runner;
pub mod sampled;
pub mod scalar;
pub mod spectral;
pub mod spinhalf;

pub use error::{Error, Result};
pub use quantum::{HamiltonianModel, ModelKind};
pub use scalar::{Real, Tolerances};

pub type TimeGrid64 = quantum::TimeGrid<f64>;
pub type QuantumState64 = quantum::QuantumState<f64>;
pub type UnitaryMatrix64 = quantum::UnitaryMatrix<f64>;
pub type PropagatorPath64 = propagator::PropagatorPath<f64>;
pub type StateTrajectory64 = propagator::StateTrajectory<f64>;
pub type SpectralFrame64 = spectral::SpectralFrame<f64>;
pub type SpectralPath64 = spectral::SpectralPath<f64>;
pub type ConditionReport64 = audit::ConditionReport<f64>;
pub type SpinHalfParams64 = spinhalf::SpinHalfParams<f64>;
pub type SpinHalfModel64 = spinhalf::SpinHalfModel<f64>;
pub type SampledModel64 = sampled::SampledModel<f64>;

pub type TimeGrid32 = quantum::TimeGrid<f32>;
pub type QuantumState32 = quantum::QuantumState<f32>;
pub type UnitaryMatrix32 = quantum::UnitaryMatrix<f32>;
pub type PropagatorPath32 = propagator::PropagatorPath<f32>;
pub type StateTrajectory32 = propagator::StateTrajectory<f32>;
pub type SpectralFrame32 = spectral::SpectralFrame<f32>;
pub type SpectralPath32 = spectral::SpectralPath<f32>;
pub type ConditionReport32 = audit::ConditionReport<f32>;
pub type SpinHalfParams32 = spinhalf::SpinHalfParams<f32>;
pub type SpinHalfModel32 = spinhalf::SpinHalfModel<f32>;
pub type SampledModel32 = sampled::SampledModel<f32>;
