//! Metropolis sampler of the stationary distribution `exp(-β̃ H̃)`.
//!
//! The Hamiltonian separates, so momenta are Gaussian and drawn directly;
//! only positions are sampled, under the potential `Ṽ = Δc n̄ N Θ²`. Moves are
//! single-site uniform displacements plus an occasional global shift by `π`,
//! which maps `Θ → -Θ` at zero energy cost and connects the two ordered wells.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{derive_rates, ParamError, SimConfig};
use crate::rng::NoiseStream;
use crate::stats::{jackknife, ks_statistic, pairwise_sum};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("proposal width must lie in (0, π], got {0}")]
    BadWidth(f64),
    #[error("burn_in ({burn_in}) must be smaller than n_sweeps ({n_sweeps})")]
    BadBurnIn { burn_in: usize, n_sweeps: usize },
    #[error("thinning and chain count must be positive")]
    BadThinning,
    #[error("flip rate must lie in [0, 1], got {0}")]
    BadFlipRate(f64),
    #[error("no samples")]
    Empty,
    #[error("ensembles describe different models: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    pub n_atoms: usize,
    pub nbar: f64,
    pub delta_c: f64,
    /// Initial single-site proposal width in `x̃`; tuned during burn-in.
    pub width: f64,
    pub n_sweeps: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: u64,
    /// Probability per sweep of proposing the global `x̃ → x̃ + π` shift.
    pub flip_rate: f64,
    pub chains: usize,
    pub keep_positions: bool,
}

impl McmcConfig {
    pub fn new(n_atoms: usize, nbar: f64, delta_c: f64) -> Self {
        McmcConfig {
            n_atoms,
            nbar,
            delta_c,
            width: 1.0,
            n_sweeps: 20_000,
            burn_in: 2_000,
            thinning: 5,
            seed: 1,
            flip_rate: 0.05,
            chains: 4,
            keep_positions: false,
        }
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        let sim = SimConfig { n_atoms: self.n_atoms, nbar: self.nbar, delta_c: self.delta_c, ..SimConfig::default() };
        derive_rates(&sim)?;
        if !(self.nbar >= 0.0) {
            return Err(ParamError::BadPump(self.nbar).into());
        }
        if !(self.width > 0.0 && self.width <= PI) {
            return Err(OracleError::BadWidth(self.width));
        }
        if self.burn_in >= self.n_sweeps {
            return Err(OracleError::BadBurnIn { burn_in: self.burn_in, n_sweeps: self.n_sweeps });
        }
        if self.thinning == 0 || self.chains == 0 {
            return Err(OracleError::BadThinning);
        }
        if !(0.0..=1.0).contains(&self.flip_rate) {
            return Err(OracleError::BadFlipRate(self.flip_rate));
        }
        Ok(())
    }
}

/// Metropolis acceptance probability `min(1, exp(-β ΔV))`.
#[inline]
pub fn acceptance_probability(delta_v: f64, beta: f64) -> f64 {
    let e = -beta * delta_v;
    if e >= 0.0 {
        1.0
    } else {
        e.exp()
    }
}

/// Potential `Ṽ = Δc n̄ N Θ²` written through `C = Σ cos x̃ᵢ`.
#[inline]
pub fn potential_from_cos_sum(cos_sum: f64, n_atoms: usize, nbar: f64, delta_c: f64) -> f64 {
    delta_c * nbar * cos_sum * cos_sum / n_atoms as f64
}

/// One Markov chain over positions in `[0, 2π)`.
#[derive(Debug, Clone)]
pub struct Chain {
    pub x: Vec<f64>,
    cos_sum: f64,
    width: f64,
    beta: f64,
    coupling: f64,
    flip_rate: f64,
    rng: NoiseStream,
    proposed: u64,
    accepted: u64,
}

impl Chain {
    pub fn new(n_atoms: usize, nbar: f64, delta_c: f64, width: f64, flip_rate: f64, mut rng: NoiseStream) -> Self {
        let x: Vec<f64> = (0..n_atoms).map(|_| TAU * rng.uniform()).collect();
        let mut c = Chain {
            x,
            cos_sum: 0.0,
            width,
            beta: -4.0 * delta_c / (delta_c * delta_c + 1.0),
            coupling: delta_c * nbar / n_atoms as f64,
            flip_rate,
            rng,
            proposed: 0,
            accepted: 0,
        };
        c.resum();
        c
    }

    fn resum(&mut self) {
        let c: Vec<f64> = self.x.iter().map(|v| v.cos()).collect();
        self.cos_sum = pairwise_sum(&c);
    }

    pub fn theta(&self) -> f64 {
        self.cos_sum / self.x.len() as f64
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn acceptance(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    /// `N` single-site proposals, then the global shift with probability `flip_rate`.
    pub fn sweep(&mut self) {
        for i in 0..self.x.len() {
            let old = self.x[i];
            let new = (old + self.width * (2.0 * self.rng.uniform() - 1.0)).rem_euclid(TAU);
            let c_new = self.cos_sum + new.cos() - old.cos();
            let dv = self.coupling * (c_new * c_new - self.cos_sum * self.cos_sum);
            self.proposed += 1;
            if self.rng.uniform() < acceptance_probability(dv, self.beta) {
                self.x[i] = new;
                self.cos_sum = c_new;
                self.accepted += 1;
            }
        }
        if self.flip_rate > 0.0 && self.rng.uniform() < self.flip_rate {
            for v in self.x.iter_mut() {
                *v = (*v + PI).rem_euclid(TAU);
            }
        }
        self.resum();
    }

    /// Adjusts the proposal width toward 30-50% acceptance.
    fn tune(&mut self) {
        let acc = self.acceptance();
        if acc > 0.5 {
            self.width = (self.width * 1.1).min(PI);
        } else if acc < 0.3 {
            self.width *= 0.9;
        }
        self.proposed = 0;
        self.accepted = 0;
    }
}

/// Equilibrium positions for a thermal start: a burned-in chain drawn from `rng`.
pub fn thermal_positions(n_atoms: usize, nbar: f64, delta_c: f64, sweeps: usize, rng: &mut NoiseStream) -> Vec<f64> {
    let seed = rand::RngCore::next_u64(rng);
    let mut chain = Chain::new(n_atoms, nbar, delta_c, 1.0, 0.05, NoiseStream::stream(seed, 0));
    for k in 0..sweeps {
        chain.sweep();
        if k % 10 == 9 {
            chain.tune();
        }
    }
    chain.x
}

/// Pooled samples of the order parameter from a stationary ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSamples {
    pub n_atoms: usize,
    pub nbar: f64,
    pub delta_c: f64,
    pub thetas: Vec<f64>,
    /// Contiguous blocks used for jackknife errors (one per chain or trajectory
    /// keeps correlated data together).
    pub n_blocks: usize,
    pub positions: Option<Vec<Vec<f64>>>,
    pub acceptance: f64,
}

pub fn sample_equilibrium(cfg: &McmcConfig) -> Result<EquilibriumSamples, OracleError> {
    cfg.validate()?;
    let per_chain: Vec<(Vec<f64>, Vec<Vec<f64>>, f64)> = (0..cfg.chains as u64)
        .into_par_iter()
        .map(|c| {
            let rng = NoiseStream::stream(cfg.seed, c);
            let mut chain = Chain::new(cfg.n_atoms, cfg.nbar, cfg.delta_c, cfg.width, cfg.flip_rate, rng);
            for k in 0..cfg.burn_in {
                chain.sweep();
                if k % 10 == 9 {
                    chain.tune();
                }
            }
            chain.proposed = 0;
            chain.accepted = 0;
            let mut thetas = Vec::new();
            let mut pos = Vec::new();
            for k in cfg.burn_in..cfg.n_sweeps {
                chain.sweep();
                if (k - cfg.burn_in) % cfg.thinning == cfg.thinning - 1 {
                    thetas.push(chain.theta());
                    if cfg.keep_positions {
                        pos.push(chain.x.clone());
                    }
                }
            }
            (thetas, pos, chain.acceptance())
        })
        .collect();
    let mut thetas = Vec::new();
    let mut positions = cfg.keep_positions.then(Vec::new);
    let mut acc = Vec::new();
    for (t, p, a) in per_chain {
        thetas.extend(t);
        if let Some(ps) = positions.as_mut() {
            ps.extend(p);
        }
        acc.push(a);
    }
    if thetas.is_empty() {
        return Err(OracleError::Empty);
    }
    Ok(EquilibriumSamples {
        n_atoms: cfg.n_atoms,
        nbar: cfg.nbar,
        delta_c: cfg.delta_c,
        n_blocks: (cfg.chains * 8).min(thetas.len()),
        thetas,
        positions,
        acceptance: pairwise_sum(&acc) / acc.len() as f64,
    })
}

/// Momenta of the stationary state: Gaussian with variance `T̃/(2 ω_r)`.
pub fn sample_momenta(n: usize, delta_c: f64, omega_r: f64, rng: &mut NoiseStream) -> Vec<f64> {
    let sd = ((delta_c * delta_c + 1.0) / (4.0 * delta_c.abs()) / (2.0 * omega_r)).sqrt();
    (0..n).map(|_| sd * rng.normal()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub theta2: Estimate,
    pub abs_theta: Estimate,
    pub theta4: Estimate,
    pub g2_0: Estimate,
    pub chi: Estimate,
    pub samples: usize,
}

/// Order-parameter moments with block-jackknife errors.
pub fn oracle_moments(thetas: &[f64], n_blocks: usize) -> Result<Moments, OracleError> {
    if thetas.is_empty() {
        return Err(OracleError::Empty);
    }
    let t2: Vec<f64> = thetas.iter().map(|t| t * t).collect();
    let t4: Vec<f64> = t2.iter().map(|t| t * t).collect();
    let ab: Vec<f64> = thetas.iter().map(|t| t.abs()).collect();
    let cols: [&[f64]; 3] = [&t2, &ab, &t4];
    let est = |f: &dyn Fn(&[f64]) -> f64| {
        let (value, error) = jackknife(&cols, n_blocks, f);
        Estimate { value, error }
    };
    Ok(Moments {
        theta2: est(&|m| m[0]),
        abs_theta: est(&|m| m[1]),
        theta4: est(&|m| m[2]),
        g2_0: est(&|m| m[2] / (m[0] * m[0])),
        chi: est(&|m| m[0] - m[1] * m[1]),
        samples: thetas.len(),
    })
}

impl EquilibriumSamples {
    pub fn moments(&self) -> Result<Moments, OracleError> {
        oracle_moments(&self.thetas, self.n_blocks)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub z_theta2: f64,
    pub z_abs_theta: f64,
    pub z_g2_0: f64,
    /// Two-sample Kolmogorov-Smirnov distance between the `|Θ|` distributions.
    pub distance: f64,
    pub distance_bound: f64,
    pub pass: bool,
    pub left: Moments,
    pub right: Moments,
}

pub const DEFAULT_DISTANCE_BOUND: f64 = 0.1;

fn z(a: Estimate, b: Estimate) -> f64 {
    let e = (a.error * a.error + b.error * b.error).sqrt();
    if e == 0.0 {
        if a.value == b.value {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (a.value - b.value) / e
    }
}

/// Compares two stationary ensembles of the same model.
///
/// Passes iff every moment z-score is below 3 in magnitude and the KS distance
/// between the `|Θ|` samples is below `distance_bound`. The stationary state is
/// even in `Θ`, so signs are folded out.
pub fn compare(
    left: &EquilibriumSamples,
    right: &EquilibriumSamples,
    distance_bound: f64,
) -> Result<CompareReport, OracleError> {
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
    if left.n_atoms != right.n_atoms || !same(left.nbar, right.nbar) || !same(left.delta_c, right.delta_c) {
        return Err(OracleError::Mismatch(format!(
            "(N={}, nbar={}, delta_c={}) vs (N={}, nbar={}, delta_c={})",
            left.n_atoms, left.nbar, left.delta_c, right.n_atoms, right.nbar, right.delta_c
        )));
    }
    let lm = left.moments()?;
    let rm = right.moments()?;
    let fa: Vec<f64> = left.thetas.iter().map(|t| t.abs()).collect();
    let fb: Vec<f64> = right.thetas.iter().map(|t| t.abs()).collect();
    let distance = ks_statistic(&fa, &fb);
    let z_theta2 = z(lm.theta2, rm.theta2);
    let z_abs_theta = z(lm.abs_theta, rm.abs_theta);
    let z_g2_0 = z(lm.g2_0, rm.g2_0);
    let pass = [z_theta2, z_abs_theta, z_g2_0].iter().all(|v| v.abs() < 3.0) && distance < distance_bound;
    Ok(CompareReport { z_theta2, z_abs_theta, z_g2_0, distance, distance_bound, pass, left: lm, right: rm })
}
