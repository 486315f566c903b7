//! Time stepping of the Itô SDE
//!
//! ```text
//! dx̃ᵢ = 2 ω_r p̃ᵢ dt̃
//! dp̃ᵢ = F̃ᵢ dt̃ + g sin x̃ᵢ P_s dt̃ + √(2 n̄/N) sin x̃ᵢ dW̃
//! ```
//!
//! with a single Wiener process shared by all atoms. The noise amplitude
//! depends on positions only and acts on momenta, so Itô and Stratonovich
//! readings coincide and no spurious drift appears.
//!
//! The default scheme is a Strang splitting: an exact Ornstein-Uhlenbeck
//! update of the collective mode `q ∝ Σ sin x̃ᵢ p̃ᵢ` for half a step, a
//! velocity-Verlet step of the Hamiltonian part, and another half OU step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{derive_rates, ParamError, SampleMode, SimConfig};
use crate::physics::SystemState;
use crate::stats::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    StrangOu,
    /// Plain Euler-Maruyama on `(x̃, p̃)`; kept as a reference.
    EulerMaruyama,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::StrangOu => "strang_ou",
            Scheme::EulerMaruyama => "euler_maruyama",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegratorError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("friction guard violated: |g|·dt = {value:.4} exceeds {limit}")]
    FrictionGuard { value: f64, limit: f64 },
    #[error("well-frequency guard violated: ω_well·dt = {value:.4} exceeds {limit}")]
    WellGuard { value: f64, limit: f64 },
    #[error("non-finite phase-space coordinate at t = {t}")]
    NonFinite { t: f64 },
    #[error("state has {got} atoms, integrator was built for {expected}")]
    AtomCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub guard_friction: f64,
    pub guard_well: f64,
    /// Diagnostic switch: apply the friction/noise substeps at all.
    pub dissipation: bool,
    /// Diagnostic switch: draw the collective noise.
    pub noise: bool,
}

impl IntegratorConfig {
    pub fn from_sim(cfg: &SimConfig) -> Self {
        IntegratorConfig {
            dt: cfg.dt,
            scheme: cfg.scheme,
            guard_friction: cfg.guard_friction,
            guard_well: cfg.guard_well,
            dissipation: true,
            noise: true,
        }
    }
}

/// Integrator for one model; owns scratch buffers with the trigonometric
/// values of the current positions.
#[derive(Debug, Clone)]
pub struct Integrator {
    cfg: IntegratorConfig,
    n_atoms: usize,
    omega_r: f64,
    /// `2 Δc n̄`, the force is this times `Θ sin x̃ᵢ`.
    force_coef: f64,
    friction: f64,
    nbar: f64,
    sin: Vec<f64>,
    cos: Vec<f64>,
    theta: f64,
    cached_x: Vec<f64>,
    trig_valid: bool,
}

/// Well frequency of an atom in a fully ordered grating, `√(4 ω_r n̄ |Δc|)`.
pub fn max_well_frequency(cfg: &SimConfig) -> f64 {
    (4.0 * cfg.omega_r * cfg.nbar * cfg.delta_c.abs()).sqrt()
}

impl Integrator {
    pub fn new(sim: &SimConfig) -> Result<Self, IntegratorError> {
        Self::with_config(sim, IntegratorConfig::from_sim(sim))
    }

    pub fn with_config(sim: &SimConfig, cfg: IntegratorConfig) -> Result<Self, IntegratorError> {
        let rates = derive_rates(sim)?;
        let friction_dt = rates.friction.abs() * cfg.dt;
        if friction_dt > cfg.guard_friction {
            return Err(IntegratorError::FrictionGuard { value: friction_dt, limit: cfg.guard_friction });
        }
        let well_dt = max_well_frequency(sim) * cfg.dt;
        if well_dt > cfg.guard_well {
            return Err(IntegratorError::WellGuard { value: well_dt, limit: cfg.guard_well });
        }
        let n = sim.n_atoms;
        Ok(Integrator {
            cfg,
            n_atoms: n,
            omega_r: sim.omega_r,
            force_coef: 2.0 * sim.delta_c * sim.nbar,
            friction: rates.friction,
            nbar: sim.nbar,
            sin: vec![0.0; n],
            cos: vec![0.0; n],
            theta: 0.0,
            cached_x: vec![0.0; n],
            trig_valid: false,
        })
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.cfg
    }

    pub fn dt(&self) -> f64 {
        self.cfg.dt
    }

    fn refresh_trig(&mut self, x: &[f64]) {
        for ((s, c), &xi) in self.sin.iter_mut().zip(self.cos.iter_mut()).zip(x) {
            let (sv, cv) = xi.sin_cos();
            *s = sv;
            *c = cv;
        }
        self.theta = pairwise_sum(&self.cos) / self.n_atoms as f64;
        self.cached_x.copy_from_slice(x);
        self.trig_valid = true;
    }

    fn ensure_trig(&mut self, x: &[f64]) {
        let fresh = self.trig_valid && self.cached_x.iter().zip(x).all(|(a, b)| a.to_bits() == b.to_bits());
        if !fresh {
            self.refresh_trig(x);
        }
    }

    fn check_atoms(&self, state: &SystemState) -> Result<(), IntegratorError> {
        if state.n_atoms() != self.n_atoms {
            return Err(IntegratorError::AtomCount { expected: self.n_atoms, got: state.n_atoms() });
        }
        Ok(())
    }

    /// Order parameter of the positions seen by the last substep.
    pub fn theta(&mut self, state: &SystemState) -> f64 {
        self.ensure_trig(&state.x);
        self.theta
    }

    /// One velocity-Verlet step of the conservative dynamics.
    pub fn hamiltonian_substep(&mut self, state: &mut SystemState, h: f64) -> Result<(), IntegratorError> {
        self.check_atoms(state)?;
        self.ensure_trig(&state.x);
        self.kick(&mut state.p, 0.5 * h);
        let v = 2.0 * self.omega_r * h;
        for (x, p) in state.x.iter_mut().zip(&state.p) {
            *x += v * p;
        }
        self.refresh_trig(&state.x);
        self.kick(&mut state.p, 0.5 * h);
        Ok(())
    }

    fn kick(&self, p: &mut [f64], h: f64) {
        let a = self.force_coef * self.theta * h;
        if a == 0.0 {
            return;
        }
        for (p, s) in p.iter_mut().zip(&self.sin) {
            *p += a * s;
        }
    }

    /// Exact Ornstein-Uhlenbeck update of the collective mode at frozen
    /// positions; momentum components orthogonal to `sin x̃` are untouched.
    pub fn dissipator_substep(&mut self, state: &mut SystemState, h: f64) -> Result<(), IntegratorError> {
        self.check_atoms(state)?;
        if !self.cfg.dissipation {
            return Ok(());
        }
        self.ensure_trig(&state.x);
        let mut s2 = 0.0;
        let mut sp = 0.0;
        for (s, p) in self.sin.iter().zip(&state.p) {
            s2 += s * s;
            sp += s * p;
        }
        if s2 == 0.0 {
            return Ok(());
        }
        let n = self.n_atoms as f64;
        let norm = s2.sqrt();
        let q = sp / norm;
        let s2_mean = s2 / n;
        let a = self.friction.abs() * s2_mean;
        let sigma2 = 2.0 * self.nbar * s2_mean;
        if a == 0.0 && sigma2 == 0.0 {
            return Ok(());
        }
        let mut q_new = q * (-a * h).exp();
        if self.cfg.noise {
            let var_factor = if a > 0.0 { -(-2.0 * a * h).exp_m1() / (2.0 * a) } else { h };
            q_new += (sigma2 * var_factor).sqrt() * state.rng.normal();
        }
        let shift = (q_new - q) / norm;
        for (p, s) in state.p.iter_mut().zip(&self.sin) {
            *p += shift * s;
        }
        Ok(())
    }

    fn euler_maruyama_step(&mut self, state: &mut SystemState, h: f64) {
        self.ensure_trig(&state.x);
        let n = self.n_atoms as f64;
        let mut sp = 0.0;
        for (s, p) in self.sin.iter().zip(&state.p) {
            sp += s * p;
        }
        let ps = sp / n;
        let (drag, noise) = if self.cfg.dissipation {
            let xi = if self.cfg.noise { state.rng.normal() } else { 0.0 };
            (self.friction * ps * h, (2.0 * self.nbar / n * h).sqrt() * xi)
        } else {
            (0.0, 0.0)
        };
        let force = self.force_coef * self.theta * h;
        let v = 2.0 * self.omega_r * h;
        for ((x, p), s) in state.x.iter_mut().zip(state.p.iter_mut()).zip(&self.sin) {
            *x += v * *p;
            *p += (force + drag + noise) * s;
        }
        self.refresh_trig(&state.x);
    }

    /// Advances the state by one step `dt`.
    pub fn step(&mut self, state: &mut SystemState) -> Result<(), IntegratorError> {
        self.check_atoms(state)?;
        let h = self.cfg.dt;
        match self.cfg.scheme {
            Scheme::StrangOu => {
                self.dissipator_substep(state, 0.5 * h)?;
                self.hamiltonian_substep(state, h)?;
                self.dissipator_substep(state, 0.5 * h)?;
            }
            Scheme::EulerMaruyama => self.euler_maruyama_step(state, h),
        }
        state.t += h;
        let mut acc = 0.0;
        for (x, p) in state.x.iter().zip(&state.p) {
            acc += x + p;
        }
        if !acc.is_finite() {
            return Err(IntegratorError::NonFinite { t: state.t });
        }
        Ok(())
    }

    /// Observables at the current state.
    pub fn sample(&mut self, state: &SystemState) -> Sample {
        self.ensure_trig(&state.x);
        let n = self.n_atoms as f64;
        let mut sp = 0.0;
        let mut pp = 0.0;
        for (s, p) in self.sin.iter().zip(&state.p) {
            sp += s * p;
            pp += p * p;
        }
        let theta = self.theta;
        Sample { t: state.t, theta, p_s: sp / n, kinetic: self.omega_r * pp, photon: n * self.nbar * theta * theta }
    }

    /// Integrates from the state's current time to step `end_step`, calling
    /// `observer` at every schedule step after the current one.
    pub fn integrate<O: Observer + ?Sized>(
        &mut self,
        state: &mut SystemState,
        schedule: &Schedule,
        end_step: u64,
        observer: &mut O,
    ) -> TrajectoryTrace {
        let dt = self.cfg.dt;
        let mut step = (state.t / dt).round() as u64;
        let mut samples = Vec::new();
        let mut failure = None;
        let pending: Vec<u64> = schedule.steps.iter().copied().filter(|&s| s > step && s <= end_step).collect();
        let mut next = pending.iter().peekable();
        while step < end_step {
            if let Err(e) = self.step(state) {
                failure = Some(e);
                break;
            }
            step += 1;
            if next.peek().is_some_and(|&&s| s == step) {
                next.next();
                let sample = self.sample(state);
                observer.observe(&sample, state);
                samples.push(sample);
            }
        }
        TrajectoryTrace { samples, failure }
    }
}

/// Scalar observables recorded at a sample time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub theta: f64,
    pub p_s: f64,
    pub kinetic: f64,
    pub photon: f64,
}

/// Callback at sample times; the full state is available for snapshots.
pub trait Observer {
    fn observe(&mut self, sample: &Sample, state: &SystemState);
}

impl<F: FnMut(&Sample, &SystemState)> Observer for F {
    fn observe(&mut self, sample: &Sample, state: &SystemState) {
        self(sample, state)
    }
}

/// Observer that ignores everything.
pub struct NoObserver;

impl Observer for NoObserver {
    fn observe(&mut self, _: &Sample, _: &SystemState) {}
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTrace {
    pub samples: Vec<Sample>,
    /// Set when integration stopped early; `samples` holds the partial trace.
    pub failure: Option<IntegratorError>,
}

/// Sample times expressed as step indices (step `k` ends at `t̃ = k·dt`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub steps: Vec<u64>,
}

impl Schedule {
    pub fn new(mode: SampleMode, points: usize, n_steps: u64) -> Self {
        let mut steps: Vec<u64> = match mode {
            SampleMode::Linear => (1..=points as u64)
                .map(|k| ((k as f64 * n_steps as f64 / points as f64).round() as u64).max(1))
                .collect(),
            SampleMode::Log if points == 1 => vec![n_steps],
            SampleMode::Log => {
                let top = (n_steps as f64).ln();
                (0..points)
                    .map(|k| ((k as f64 / (points - 1) as f64 * top).exp().round() as u64).clamp(1, n_steps))
                    .collect()
            }
        };
        steps.dedup();
        Schedule { steps }
    }

    pub fn times(&self, dt: f64) -> Vec<f64> {
        self.steps.iter().map(|&s| s as f64 * dt).collect()
    }
}
