//! Simulation parameters and the closed-form rates derived from them.
//!
//! Everything is dimensionless: positions `x̃ = k·x`, momenta in units of
//! `ħk`, time in units of `1/κ` and energies in units of `ħκ`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrator::Scheme;

/// Recoil rate `ω_r/κ` for the Rb-85 D2 line with `κ = 2π·1.5 MHz`.
pub const RB85_OMEGA_R: f64 = 2.57e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("n_atoms must be at least 1")]
    NoAtoms,
    #[error("delta_c must be negative (got {0}); only the Δc < 0 regime has a thermal stationary state")]
    DetuningNotNegative(f64),
    #[error("omega_r must lie in (0, 1) (got {0})")]
    RecoilOutOfRange(f64),
    #[error("nbar must be finite and non-negative (got {0})")]
    BadPump(f64),
    #[error("temp_init must be finite and non-negative (got {0})")]
    BadTemperature(f64),
    #[error("dt must be positive (got {0})")]
    BadTimeStep(f64),
    #[error("t_end ({t_end}) must be at least dt ({dt})")]
    RunTooShort { t_end: f64, dt: f64 },
    #[error("n_traj must be at least 1")]
    NoTrajectories,
    #[error("sample_points must be at least 1")]
    NoSamples,
    #[error("{name} must lie in (0, 1) (got {value})")]
    BadGuard { name: &'static str, value: f64 },
    #[error("t_burn ({t_burn}) must lie in [0, t_end)")]
    BadBurnIn { t_burn: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    Linear,
    Log,
}

impl SampleMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleMode::Linear => "linear",
            SampleMode::Log => "log",
        }
    }
}

/// How trajectories are initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// Uniform positions, Maxwell-Boltzmann momenta at `temp_init`.
    Quench,
    /// Positions drawn from the stationary distribution by Metropolis
    /// sampling, momenta at the stationary temperature.
    Thermal,
}

impl InitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InitMode::Quench => "quench",
            InitMode::Thermal => "thermal",
        }
    }
}

/// All physical and numerical control parameters of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_atoms: usize,
    /// Maximum intracavity photon number per atom.
    pub nbar: f64,
    /// Cavity detuning `Δc/κ`.
    pub delta_c: f64,
    /// Recoil rate `ω_r/κ`.
    pub omega_r: f64,
    /// Initial temperature in units of `ħκ/k_B`.
    pub temp_init: f64,
    pub dt: f64,
    pub t_end: f64,
    pub n_traj: usize,
    pub seed: u64,
    /// `None` lets the command pick its natural schedule.
    pub sample_mode: Option<SampleMode>,
    pub sample_points: usize,
    pub init: InitMode,
    pub scheme: Scheme,
    pub guard_friction: f64,
    pub guard_well: f64,
    /// Start of the stationary analysis window; `None` means `t_end / 2`.
    pub t_burn: Option<f64>,
    /// Number of log-spaced full phase-space snapshots per trajectory.
    pub snapshots: usize,
    /// Informational only.
    pub gamma_hz: Option<f64>,
    /// Informational only.
    pub delta_a_over_gamma: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_atoms: 100,
            nbar: 0.5,
            delta_c: -1.0,
            omega_r: RB85_OMEGA_R,
            temp_init: 0.5,
            dt: 0.1,
            t_end: 1.0e3,
            n_traj: 1,
            seed: 1,
            sample_mode: None,
            sample_points: 200,
            init: InitMode::Quench,
            scheme: Scheme::StrangOu,
            guard_friction: 0.1,
            guard_well: 0.1,
            t_burn: None,
            snapshots: 0,
            gamma_hz: None,
            delta_a_over_gamma: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ParamError> {
        if self.n_atoms == 0 {
            return Err(ParamError::NoAtoms);
        }
        if !(self.delta_c < 0.0) || !self.delta_c.is_finite() {
            return Err(ParamError::DetuningNotNegative(self.delta_c));
        }
        if !(self.omega_r > 0.0 && self.omega_r < 1.0) {
            return Err(ParamError::RecoilOutOfRange(self.omega_r));
        }
        if !(self.nbar >= 0.0) || !self.nbar.is_finite() {
            return Err(ParamError::BadPump(self.nbar));
        }
        if !(self.temp_init >= 0.0) || !self.temp_init.is_finite() {
            return Err(ParamError::BadTemperature(self.temp_init));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(ParamError::BadTimeStep(self.dt));
        }
        if !(self.t_end >= self.dt) || !self.t_end.is_finite() {
            return Err(ParamError::RunTooShort { t_end: self.t_end, dt: self.dt });
        }
        if self.n_traj == 0 {
            return Err(ParamError::NoTrajectories);
        }
        if self.sample_points == 0 {
            return Err(ParamError::NoSamples);
        }
        for (name, value) in [("guard_friction", self.guard_friction), ("guard_well", self.guard_well)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(ParamError::BadGuard { name, value });
            }
        }
        if let Some(t_burn) = self.t_burn {
            if !(t_burn >= 0.0 && t_burn < self.t_end) {
                return Err(ParamError::BadBurnIn { t_burn });
            }
        }
        Ok(())
    }

    /// Number of integration steps covering `[0, t_end]`.
    pub fn n_steps(&self) -> u64 {
        ((self.t_end / self.dt).round() as u64).max(1)
    }

    pub fn burn_in(&self) -> f64 {
        self.t_burn.unwrap_or(0.5 * self.t_end)
    }

    /// Sets `nbar` to a multiple of the threshold value for the current detuning.
    pub fn with_nbar_rel(mut self, rel: f64) -> Self {
        self.nbar = rel * threshold_nbar(self.delta_c);
        self
    }
}

/// Self-organization threshold `n̄_c = (1 + 1/Δc²)/4`.
pub fn threshold_nbar(delta_c: f64) -> f64 {
    0.25 * (1.0 + 1.0 / (delta_c * delta_c))
}

/// Stationary temperature `k_B T/(ħκ) = (Δc² + 1)/(4|Δc|)`.
pub fn stationary_temperature(delta_c: f64) -> f64 {
    (delta_c * delta_c + 1.0) / (4.0 * delta_c.abs())
}

/// Rates that follow in closed form from a [`SimConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedRates {
    /// `Γ/κ = 8 ω_r Δc/(Δc² + 1)`; negative for `Δc < 0`.
    pub gamma_over_kappa: f64,
    /// `β ħκ = -4 Δc/(Δc² + 1)`.
    pub beta_hbar_kappa: f64,
    /// `1/β` in units of `ħκ/k_B`.
    pub temp: f64,
    pub nbar_c: f64,
    /// Collective friction `n̄ Γ/κ` (non-positive).
    pub friction: f64,
    /// Momentum diffusion scale `n̄/N`; the noise on atom `i` is `√(2 n̄/N) sin x̃ᵢ dW`.
    pub diffusion: f64,
    /// Stationary single-atom momentum variance `T/(2 ω_r)`.
    pub momentum_var_eq: f64,
}

pub fn derive_rates(cfg: &SimConfig) -> Result<DerivedRates, ParamError> {
    if !(cfg.delta_c < 0.0) || !cfg.delta_c.is_finite() {
        return Err(ParamError::DetuningNotNegative(cfg.delta_c));
    }
    if !(cfg.omega_r > 0.0) {
        return Err(ParamError::RecoilOutOfRange(cfg.omega_r));
    }
    if cfg.n_atoms == 0 {
        return Err(ParamError::NoAtoms);
    }
    let d = cfg.delta_c;
    let lorentz = d * d + 1.0;
    let gamma_over_kappa = 8.0 * cfg.omega_r * d / lorentz;
    let beta_hbar_kappa = -4.0 * d / lorentz;
    let temp = 1.0 / beta_hbar_kappa;
    Ok(DerivedRates {
        gamma_over_kappa,
        beta_hbar_kappa,
        temp,
        nbar_c: threshold_nbar(d),
        friction: cfg.nbar * gamma_over_kappa,
        diffusion: cfg.nbar / cfg.n_atoms as f64,
        momentum_var_eq: temp / (2.0 * cfg.omega_r),
    })
}
