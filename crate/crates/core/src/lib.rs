//! Semiclassical simulation of laser-driven atoms coupled to a lossy cavity
//! mode.
//!
//! The atoms move along the cavity axis under the cavity-mediated potential
//! `Δc n̄ N Θ²`, where `Θ = (1/N) Σ cos x̃ⱼ` is the order parameter, and feel a
//! collective friction and a collective (rank-1) noise generated by photon
//! losses. The crate provides:
//!
//! * [`params`] and [`physics`]: units, derived rates, energy and forces;
//! * [`integrator`]: a split-step SDE integrator with an exact
//!   Ornstein-Uhlenbeck dissipator;
//! * [`observables`] and [`spectral`]: estimators for temperature, `P(Θ)`,
//!   susceptibility, diffusion exponents, `g1`, `g2` and `S(ω)`;
//! * [`oracle`]: an independent Metropolis sampler of the stationary state;
//! * [`ensemble`], [`config`], [`checkpoint`], [`csv`]: orchestration and
//!   persistence.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod config;
pub mod csv;
pub mod ensemble;
pub mod integrator;
pub mod observables;
pub mod oracle;
pub mod params;
pub mod physics;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use checkpoint::{Checkpoint, CheckpointError};
pub use config::{parse_config, render_config, ConfigError};
pub use ensemble::{run_ensemble, EnsembleOptions, EnsembleResult, SnapshotPolicy, TrajectoryResult};
pub use integrator::{Integrator, IntegratorConfig, IntegratorError, Observer, Sample, Schedule, Scheme};
pub use params::{derive_rates, DerivedRates, InitMode, ParamError, SampleMode, SimConfig};
pub use physics::{
    collective_sine_momentum, energy, forces, initial_ensemble, order_parameter, photon_proxy, SystemState,
};
pub use rng::NoiseStream;
