//! Ensembles of independent trajectories with deterministic seeding.
//!
//! Trajectory `k` draws its initial state and its noise from
//! `NoiseStream::stream(seed, k)`, and results are collected in index order,
//! so outputs do not depend on the number of worker threads.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::checkpoint::Checkpoint;
use crate::integrator::{Integrator, IntegratorError, Sample, Schedule};
use crate::oracle::{thermal_positions, EquilibriumSamples};
use crate::params::{derive_rates, InitMode, SampleMode, SimConfig};
use crate::physics::{initial_ensemble, thermal_momenta, SystemState};
use crate::rng::NoiseStream;
use crate::spectral::UniformSeries;
use crate::stats::{mean, std_error};

/// Metropolis sweeps used to equilibrate positions for a thermal start.
pub const THERMAL_INIT_SWEEPS: usize = 2_000;

/// Full phase-space copy at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotPolicy {
    None,
    /// Copy the state at every sample time.
    EverySample,
    /// Copy the state at this many log-spaced times.
    LogSpaced(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleOptions {
    pub sample_mode: SampleMode,
    pub snapshots: SnapshotPolicy,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl EnsembleOptions {
    pub fn new(sample_mode: SampleMode) -> Self {
        EnsembleOptions { sample_mode, snapshots: SnapshotPolicy::None, threads: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult {
    pub index: u64,
    /// State at `t = 0` (or at the resume time).
    pub initial: Snapshot,
    pub samples: Vec<Sample>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: SystemState,
    pub failure: Option<IntegratorError>,
}

impl TrajectoryResult {
    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint { state: self.final_state.clone(), traj_index: self.index }
    }
}

/// Initial state of trajectory `index`.
pub fn initial_state(cfg: &SimConfig, index: u64) -> SystemState {
    let rng = NoiseStream::stream(cfg.seed, index);
    match cfg.init {
        InitMode::Quench => initial_ensemble(cfg, rng),
        InitMode::Thermal => {
            let mut rng = rng;
            let x = thermal_positions(cfg.n_atoms, cfg.nbar, cfg.delta_c, THERMAL_INIT_SWEEPS, &mut rng);
            let temp = derive_rates(cfg).map(|r| r.temp).unwrap_or(cfg.temp_init);
            let p = thermal_momenta(cfg.n_atoms, temp, cfg.omega_r, &mut rng);
            SystemState::new(x, p, rng)
        }
    }
}

fn snapshot_of(s: &SystemState) -> Snapshot {
    Snapshot { t: s.t, x: s.x.clone(), p: s.p.clone() }
}

/// Integrates `state` to `cfg.t_end`, sampling on the schedule implied by `opts`.
pub fn continue_trajectory(
    cfg: &SimConfig,
    index: u64,
    mut state: SystemState,
    opts: &EnsembleOptions,
) -> Result<TrajectoryResult, IntegratorError> {
    let mut integrator = Integrator::new(cfg)?;
    let n_steps = cfg.n_steps();
    let sample_steps = Schedule::new(opts.sample_mode, cfg.sample_points, n_steps);
    let sample_set: BTreeSet<u64> = sample_steps.steps.iter().copied().collect();
    let snap_set: BTreeSet<u64> = match opts.snapshots {
        SnapshotPolicy::None => BTreeSet::new(),
        SnapshotPolicy::EverySample => sample_set.clone(),
        SnapshotPolicy::LogSpaced(0) => BTreeSet::new(),
        SnapshotPolicy::LogSpaced(k) => Schedule::new(SampleMode::Log, k, n_steps).steps.into_iter().collect(),
    };
    let merged = Schedule { steps: sample_set.union(&snap_set).copied().collect() };
    let initial = snapshot_of(&state);
    let dt = cfg.dt;
    let mut snapshots = Vec::new();
    let mut observer = |smp: &Sample, st: &SystemState| {
        let step = (smp.t / dt).round() as u64;
        if snap_set.contains(&step) {
            snapshots.push(snapshot_of(st));
        }
    };
    let trace = integrator.integrate(&mut state, &merged, n_steps, &mut observer);
    let samples = trace.samples.into_iter().filter(|s| sample_set.contains(&((s.t / dt).round() as u64))).collect();
    Ok(TrajectoryResult { index, initial, samples, snapshots, final_state: state, failure: trace.failure })
}

pub fn run_trajectory(
    cfg: &SimConfig,
    index: u64,
    opts: &EnsembleOptions,
) -> Result<TrajectoryResult, IntegratorError> {
    continue_trajectory(cfg, index, initial_state(cfg, index), opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub cfg: SimConfig,
    pub trajectories: Vec<TrajectoryResult>,
}

/// Ensemble means at each sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeAggregate {
    pub t: Vec<f64>,
    pub abs_theta: Vec<f64>,
    pub abs_theta_err: Vec<f64>,
    pub theta2: Vec<f64>,
    pub photon: Vec<f64>,
    pub kinetic_temp: Vec<f64>,
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build().expect("thread pool").install(f),
        None => f(),
    }
}

/// Runs `cfg.n_traj` trajectories. A trajectory that fails numerically is
/// kept with its partial trace and `failure` set.
pub fn run_ensemble(cfg: &SimConfig, opts: &EnsembleOptions) -> Result<EnsembleResult, IntegratorError> {
    cfg.validate()?;
    Integrator::new(cfg)?;
    let trajectories = in_pool(opts.threads, || {
        (0..cfg.n_traj as u64).into_par_iter().map(|k| run_trajectory(cfg, k, opts)).collect::<Result<Vec<_>, _>>()
    })?;
    Ok(EnsembleResult { cfg: cfg.clone(), trajectories })
}

/// Continues every checkpoint to `cfg.t_end`.
pub fn resume_ensemble(
    cfg: &SimConfig,
    checkpoints: Vec<Checkpoint>,
    opts: &EnsembleOptions,
) -> Result<EnsembleResult, IntegratorError> {
    cfg.validate()?;
    let trajectories = in_pool(opts.threads, || {
        checkpoints
            .into_par_iter()
            .map(|cp| continue_trajectory(cfg, cp.traj_index, cp.state, opts))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(EnsembleResult { cfg: cfg.clone(), trajectories })
}

impl EnsembleResult {
    pub fn successful(&self) -> impl Iterator<Item = &TrajectoryResult> {
        self.trajectories.iter().filter(|t| t.failure.is_none())
    }

    pub fn failed(&self) -> Vec<u64> {
        self.trajectories.iter().filter(|t| t.failure.is_some()).map(|t| t.index).collect()
    }

    fn stationary<'a>(&'a self, t_burn: f64) -> impl Iterator<Item = Vec<&'a Sample>> + 'a {
        self.successful().map(move |tr| tr.samples.iter().filter(|s| s.t >= t_burn).collect())
    }

    /// Order-parameter samples at `t ≥ t_burn`, trajectories concatenated in index order.
    pub fn stationary_thetas(&self, t_burn: f64) -> Vec<f64> {
        self.stationary(t_burn).flat_map(|v| v.into_iter().map(|s| s.theta)).collect()
    }

    pub fn stationary_series(&self, t_burn: f64) -> Vec<UniformSeries> {
        let dt = self.sample_spacing();
        self.stationary(t_burn).map(|v| UniformSeries::new(dt, v.into_iter().map(|s| s.theta).collect())).collect()
    }

    fn sample_spacing(&self) -> f64 {
        self.cfg.t_end / self.cfg.sample_points as f64
    }

    /// Equipartition temperature `2 ω_r ⟨p̃²⟩` over samples at `t ≥ t_burn`.
    pub fn kinetic_temperature(&self, t_burn: f64) -> f64 {
        let n = self.cfg.n_atoms as f64;
        let v: Vec<f64> = self.stationary(t_burn).flat_map(|v| v.into_iter().map(|s| 2.0 * s.kinetic / n)).collect();
        mean(&v)
    }

    /// Per-trajectory kinetic temperatures, for error bars.
    pub fn kinetic_temperature_per_traj(&self, t_burn: f64) -> Vec<f64> {
        let n = self.cfg.n_atoms as f64;
        self.stationary(t_burn).map(|v| mean(&v.into_iter().map(|s| 2.0 * s.kinetic / n).collect::<Vec<_>>())).collect()
    }

    pub fn equilibrium_samples(&self, t_burn: f64) -> EquilibriumSamples {
        let n_blocks = self.successful().count().max(1);
        EquilibriumSamples {
            n_atoms: self.cfg.n_atoms,
            nbar: self.cfg.nbar,
            delta_c: self.cfg.delta_c,
            thetas: self.stationary_thetas(t_burn),
            n_blocks,
            positions: None,
            acceptance: f64::NAN,
        }
    }

    /// Ensemble averages at each sample time over successful trajectories.
    pub fn time_aggregate(&self) -> TimeAggregate {
        let trs: Vec<&TrajectoryResult> = self.successful().collect();
        let n_t = trs.iter().map(|t| t.samples.len()).min().unwrap_or(0);
        let n = self.cfg.n_atoms as f64;
        let mut agg = TimeAggregate {
            t: Vec::with_capacity(n_t),
            abs_theta: Vec::with_capacity(n_t),
            abs_theta_err: Vec::with_capacity(n_t),
            theta2: Vec::with_capacity(n_t),
            photon: Vec::with_capacity(n_t),
            kinetic_temp: Vec::with_capacity(n_t),
        };
        for j in 0..n_t {
            let col = |f: &dyn Fn(&Sample) -> f64| trs.iter().map(|t| f(&t.samples[j])).collect::<Vec<f64>>();
            let ab = col(&|s| s.theta.abs());
            agg.t.push(trs[0].samples[j].t);
            agg.abs_theta.push(mean(&ab));
            agg.abs_theta_err.push(std_error(&ab));
            agg.theta2.push(mean(&col(&|s| s.theta * s.theta)));
            agg.photon.push(mean(&col(&|s| s.photon)));
            agg.kinetic_temp.push(mean(&col(&|s| 2.0 * s.kinetic / n)));
        }
        agg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SimConfig {
        SimConfig { n_atoms: 16, nbar: 1.0, t_end: 20.0, n_traj: 4, sample_points: 20, ..SimConfig::default() }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let c = small();
        let mut o = EnsembleOptions::new(SampleMode::Linear);
        o.threads = Some(1);
        let a = run_ensemble(&c, &o).unwrap();
        o.threads = Some(3);
        let b = run_ensemble(&c, &o).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_step_run_has_one_sample() {
        let c = SimConfig { t_end: 0.1, n_traj: 1, sample_points: 1, ..small() };
        let r = run_ensemble(&c, &EnsembleOptions::new(SampleMode::Linear)).unwrap();
        assert_eq!(r.trajectories[0].samples.len(), 1);
        assert!((r.trajectories[0].samples[0].t - 0.1).abs() < 1e-15);
    }

    #[test]
    fn log_snapshots_include_end() {
        let c = small();
        let mut o = EnsembleOptions::new(SampleMode::Log);
        o.snapshots = SnapshotPolicy::LogSpaced(5);
        let r = run_trajectory(&c, 0, &o).unwrap();
        assert_eq!(r.snapshots.len(), 5);
        assert!((r.snapshots.last().unwrap().t - c.t_end).abs() < 1e-9);
        assert_eq!(r.samples.len(), Schedule::new(SampleMode::Log, c.sample_points, c.n_steps()).steps.len());
    }

    #[test]
    fn thermal_start_is_ordered_above_threshold() {
        let c = SimConfig { n_atoms: 100, init: InitMode::Thermal, ..small() }.with_nbar_rel(4.0);
        let s = initial_state(&c, 0);
        let theta = crate::physics::order_parameter(&s).abs();
        assert!(theta > 0.8, "theta = {theta}");
    }
}
