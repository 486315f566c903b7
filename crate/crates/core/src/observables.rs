//! Estimators over traces and ensembles: kinetic temperature, kurtosis,
//! order-parameter histograms, susceptibility and mean squared displacement.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::{linear_fit, mean, pairwise_sum, std_error};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservableError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("samples have zero variance")]
    ZeroVariance,
    #[error("histogram needs at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("invalid histogram range [{0}, {1}]")]
    BadRange(f64, f64),
    #[error("MSD value {value} at t = {t} is not positive")]
    NonPositiveMsd { t: f64, value: f64 },
    #[error("fit window [{0}, {1}] contains fewer than 5 points")]
    SparseWindow(f64, f64),
    #[error("trajectory {traj} snapshot shapes do not match")]
    Shape { traj: usize },
}

fn require(n: usize, needed: usize) -> Result<(), ObservableError> {
    if n < needed {
        Err(ObservableError::TooFewSamples { needed, got: n })
    } else {
        Ok(())
    }
}

/// Equipartition estimate `T = 2 ω_r ⟨p̃²⟩`.
pub fn kinetic_temperature(momenta: &[f64], omega_r: f64) -> Result<f64, ObservableError> {
    require(momenta.len(), 2)?;
    let sq: Vec<f64> = momenta.iter().map(|p| p * p).collect();
    Ok(2.0 * omega_r * mean(&sq))
}

/// `⟨(p - ⟨p⟩)⁴⟩ / Var² - 3`.
pub fn excess_kurtosis(samples: &[f64]) -> Result<f64, ObservableError> {
    require(samples.len(), 4)?;
    let m = mean(samples);
    let d2: Vec<f64> = samples.iter().map(|x| (x - m) * (x - m)).collect();
    let var = mean(&d2);
    if var == 0.0 {
        return Err(ObservableError::ZeroVariance);
    }
    let d4: Vec<f64> = d2.iter().map(|v| v * v).collect();
    Ok(mean(&d4) / (var * var) - 3.0)
}

/// Large-sample standard error of the excess kurtosis of Gaussian data.
pub fn kurtosis_std_error(n: usize) -> f64 {
    (24.0 / n as f64).sqrt()
}

/// Probability density histogram on uniform bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn new(samples: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Self, ObservableError> {
        if bins < 2 {
            return Err(ObservableError::TooFewBins(bins));
        }
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(ObservableError::BadRange(lo, hi));
        }
        require(samples.len(), 1)?;
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|k| lo + k as f64 * width).collect();
        let mut counts = vec![0u64; bins];
        for &v in samples {
            let k = (((v - lo) / width).floor() as isize).clamp(0, bins as isize - 1) as usize;
            counts[k] += 1;
        }
        let total = samples.len() as f64;
        let density = counts.iter().map(|&c| c as f64 / (total * width)).collect();
        Ok(Histogram { edges, counts, density })
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `∫ f(x) P(x) dx` evaluated at bin centers.
    pub fn moment<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let w = self.bin_width();
        let v: Vec<f64> = self.centers().iter().zip(&self.density).map(|(&c, &d)| f(c) * d * w).collect();
        pairwise_sum(&v)
    }

    pub fn integral(&self) -> f64 {
        self.moment(|_| 1.0)
    }

    /// Density at the bin containing `x`.
    pub fn density_at(&self, x: f64) -> f64 {
        let lo = self.edges[0];
        let k = (((x - lo) / self.bin_width()).floor() as isize).clamp(0, self.density.len() as isize - 1);
        self.density[k as usize]
    }
}

pub const DEFAULT_THETA_BINS: usize = 101;

/// `P(Θ)` on `bins` uniform bins over `[-1, 1]`.
pub fn theta_histogram(thetas: &[f64], bins: usize) -> Result<Histogram, ObservableError> {
    Histogram::new(thetas, bins, -1.0, 1.0)
}

/// `χ = ⟨Θ²⟩ - ⟨|Θ|⟩²`.
pub fn susceptibility(thetas: &[f64]) -> Result<f64, ObservableError> {
    require(thetas.len(), 1)?;
    let sq: Vec<f64> = thetas.iter().map(|t| t * t).collect();
    let ab: Vec<f64> = thetas.iter().map(|t| t.abs()).collect();
    let m = mean(&ab);
    Ok(mean(&sq) - m * m)
}

/// Positions of every atom of one trajectory at its sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionTrace {
    pub x0: Vec<f64>,
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsdCurve {
    pub t: Vec<f64>,
    pub msd: Vec<f64>,
    /// Standard error across trajectories (zero with a single trajectory).
    pub stderr: Vec<f64>,
    /// Per-atom MSD averaged over trajectories, indexed `[time][atom]`.
    pub per_atom: Option<Vec<Vec<f64>>>,
    /// True when the inputs look like positions wrapped into `[0, 2π)`.
    pub wrapped_suspect: bool,
}

/// Mean squared displacement averaged over atoms and trajectories.
///
/// All traces must share the same sample times and atom count.
pub fn msd(traces: &[PositionTrace], keep_per_atom: bool) -> Result<MsdCurve, ObservableError> {
    require(traces.len(), 1)?;
    let first = &traces[0];
    let n_t = first.times.len();
    let n_atoms = first.x0.len();
    for (k, tr) in traces.iter().enumerate() {
        if tr.times.len() != n_t
            || tr.positions.len() != n_t
            || tr.x0.len() != n_atoms
            || tr.positions.iter().any(|p| p.len() != n_atoms)
        {
            return Err(ObservableError::Shape { traj: k });
        }
    }
    let wrapped_suspect = traces.iter().any(looks_wrapped);
    if wrapped_suspect {
        log::warn!("positions look wrapped into [0, 2π); MSD will saturate");
    }
    let mut msd = Vec::with_capacity(n_t);
    let mut stderr = Vec::with_capacity(n_t);
    let mut per_atom = keep_per_atom.then(Vec::new);
    for j in 0..n_t {
        let per_traj: Vec<f64> = traces
            .iter()
            .map(|tr| {
                let d: Vec<f64> = tr.positions[j].iter().zip(&tr.x0).map(|(x, x0)| (x - x0).powi(2)).collect();
                mean(&d)
            })
            .collect();
        msd.push(mean(&per_traj));
        stderr.push(std_error(&per_traj));
        if let Some(pa) = per_atom.as_mut() {
            let row: Vec<f64> = (0..n_atoms)
                .map(|i| {
                    let d: Vec<f64> = traces.iter().map(|tr| (tr.positions[j][i] - tr.x0[i]).powi(2)).collect();
                    mean(&d)
                })
                .collect();
            pa.push(row);
        }
    }
    Ok(MsdCurve { t: first.times.clone(), msd, stderr, per_atom, wrapped_suspect })
}

fn looks_wrapped(tr: &PositionTrace) -> bool {
    let inside = |v: &Vec<f64>| v.iter().all(|x| (0.0..TAU).contains(x));
    if !inside(&tr.x0) || !tr.positions.iter().all(inside) {
        return false;
    }
    let mut prev = &tr.x0;
    for p in &tr.positions {
        if p.iter().zip(prev).any(|(a, b)| (a - b).abs() > PI) {
            return true;
        }
        prev = p;
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaFit {
    pub alpha: f64,
    pub stderr: f64,
    pub points: usize,
}

/// Anomalous-diffusion exponent from `MSD ∝ t^{2α}`: half the least-squares
/// slope of `ln MSD` against `ln t` over points with `t` in `[t1, t2]`.
pub fn fit_alpha(curve: &MsdCurve, window: (f64, f64)) -> Result<AlphaFit, ObservableError> {
    let (t1, t2) = window;
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (&t, &m) in curve.t.iter().zip(&curve.msd) {
        if t < t1 || t > t2 {
            continue;
        }
        if !(m > 0.0) {
            return Err(ObservableError::NonPositiveMsd { t, value: m });
        }
        lx.push(t.ln());
        ly.push(m.ln());
    }
    if lx.len() < 5 {
        return Err(ObservableError::SparseWindow(t1, t2));
    }
    let (_, slope, se) = linear_fit(&lx, &ly);
    Ok(AlphaFit { alpha: 0.5 * slope, stderr: 0.5 * se, points: lx.len() })
}
