//! Order parameter, energy and conservative forces of the cavity Hamiltonian
//! `H̃ = ω_r Σ p̃ᵢ² + Δc n̄ N Θ²` at leading order in the Stark shift.

use rand_distr::{Distribution, Normal};

use crate::params::{DerivedRates, SimConfig};
use crate::rng::NoiseStream;
use crate::stats::pairwise_sum;

/// Phase-space point of the atomic ensemble plus its noise stream.
///
/// Positions are kept unwrapped so that displacements carry the winding.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub t: f64,
    pub rng: NoiseStream,
}

impl SystemState {
    pub fn new(x: Vec<f64>, p: Vec<f64>, rng: NoiseStream) -> Self {
        assert_eq!(x.len(), p.len(), "position and momentum arrays differ in length");
        SystemState { x, p, t: 0.0, rng }
    }

    pub fn n_atoms(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.iter().chain(&self.p).all(|v| v.is_finite())
    }
}

/// `Θ = (1/N) Σ cos x̃ⱼ`.
pub fn order_parameter(state: &SystemState) -> f64 {
    order_parameter_of(&state.x)
}

pub fn order_parameter_of(x: &[f64]) -> f64 {
    let c: Vec<f64> = x.iter().map(|v| v.cos()).collect();
    pairwise_sum(&c) / x.len() as f64
}

/// `P_s = (1/N) Σ sin x̃ⱼ p̃ⱼ`, the momentum of the collective mode that the
/// cavity friction and noise act on.
pub fn collective_sine_momentum(state: &SystemState) -> f64 {
    let v: Vec<f64> = state.x.iter().zip(&state.p).map(|(x, p)| x.sin() * p).collect();
    pairwise_sum(&v) / state.n_atoms() as f64
}

/// `Σ p̃ᵢ²`.
pub fn momentum_square_sum(p: &[f64]) -> f64 {
    let v: Vec<f64> = p.iter().map(|p| p * p).collect();
    pairwise_sum(&v)
}

pub fn kinetic_energy(state: &SystemState, cfg: &SimConfig) -> f64 {
    cfg.omega_r * momentum_square_sum(&state.p)
}

/// Total energy in units of `ħκ`.
pub fn energy(state: &SystemState, cfg: &SimConfig, _rates: &DerivedRates) -> f64 {
    let theta = order_parameter(state);
    kinetic_energy(state, cfg) + potential_energy(theta, state.n_atoms(), cfg)
}

pub fn potential_energy(theta: f64, n_atoms: usize, cfg: &SimConfig) -> f64 {
    cfg.delta_c * cfg.nbar * n_atoms as f64 * theta * theta
}

/// `F̃ᵢ = -∂H̃/∂x̃ᵢ = 2 Δc n̄ Θ sin x̃ᵢ`.
pub fn forces(state: &SystemState, cfg: &SimConfig) -> Vec<f64> {
    let coef = 2.0 * cfg.delta_c * cfg.nbar * order_parameter(state);
    state.x.iter().map(|x| coef * x.sin()).collect()
}

/// Intracavity photon number `N n̄ Θ²` with unit proportionality constant.
pub fn photon_proxy(theta: f64, cfg: &SimConfig) -> f64 {
    cfg.n_atoms as f64 * cfg.nbar * theta * theta
}

/// Spatially uniform positions on `[0, 2π)` and Gaussian momenta with
/// variance `temp_init/(2 ω_r)`.
pub fn initial_ensemble(cfg: &SimConfig, mut rng: NoiseStream) -> SystemState {
    let n = cfg.n_atoms;
    let x: Vec<f64> = (0..n).map(|_| std::f64::consts::TAU * rng.uniform()).collect();
    let p = thermal_momenta(n, cfg.temp_init, cfg.omega_r, &mut rng);
    SystemState::new(x, p, rng)
}

pub fn thermal_momenta(n: usize, temp: f64, omega_r: f64, rng: &mut NoiseStream) -> Vec<f64> {
    let sd = (temp / (2.0 * omega_r)).sqrt();
    if sd == 0.0 {
        return vec![0.0; n];
    }
    let dist = Normal::new(0.0, sd).expect("finite standard deviation");
    (0..n).map(|_| dist.sample(rng)).collect()
}
