//! Coherence functions and intensity spectrum of the cavity output.
//!
//! The cavity field is proportional to `Θ`, so the first-order coherence is
//! built from `Θ(t)` and the intensity correlations from `Θ(t)²`:
//!
//! ```text
//! g1(τ) = ⟨Θ(t+τ) Θ(t)⟩ / ⟨|Θ|⟩²
//! g2(τ) = ⟨Θ(t+τ)² Θ(t)²⟩ / ⟨Θ²⟩²
//! ```
//!
//! All estimators assume stationary, uniformly sampled series.

use std::f64::consts::PI;
use std::str::FromStr;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::{mean, pairwise_sum, std_error};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("no input series")]
    Empty,
    #[error("samples are not uniformly spaced (gap {gap} vs {dt} at index {index})")]
    NonUniform { index: usize, gap: f64, dt: f64 },
    #[error("series have different sample spacings ({0} vs {1})")]
    MixedSpacing(f64, f64),
    #[error("max lag {max_lag} must be shorter than every series (shortest has {len} samples)")]
    LagTooLong { max_lag: usize, len: usize },
    #[error("segment length {0} is not a power of two")]
    SegmentNotPowerOfTwo(usize),
    #[error("segment length {segment} exceeds the shortest series ({len} samples)")]
    SegmentTooLong { segment: usize, len: usize },
    #[error("unknown window '{0}' (expected hann or rect)")]
    UnknownWindow(String),
    #[error("series has zero mean modulus; normalization undefined")]
    ZeroNormalization,
}

/// Uniformly sampled real series.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSeries {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl UniformSeries {
    pub fn new(dt: f64, values: Vec<f64>) -> Self {
        UniformSeries { dt, values }
    }

    /// Builds a series from time stamps, rejecting non-uniform spacing.
    pub fn from_samples(times: &[f64], values: Vec<f64>) -> Result<Self, SpectralError> {
        if times.len() < 2 || times.len() != values.len() {
            return Err(SpectralError::Empty);
        }
        let dt = times[1] - times[0];
        for (k, w) in times.windows(2).enumerate() {
            let gap = w[1] - w[0];
            if (gap - dt).abs() > 1e-9 * dt.abs().max(1.0) {
                return Err(SpectralError::NonUniform { index: k, gap, dt });
            }
        }
        Ok(UniformSeries { dt, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurve {
    pub lags: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Denominator used: `⟨|Θ|⟩²` for g1, `⟨Θ²⟩²` for g2.
    pub normalization: f64,
}

fn common_dt(series: &[UniformSeries]) -> Result<f64, SpectralError> {
    let first = series.first().ok_or(SpectralError::Empty)?;
    for s in series {
        if (s.dt - first.dt).abs() > 1e-9 * first.dt.abs() {
            return Err(SpectralError::MixedSpacing(first.dt, s.dt));
        }
    }
    Ok(first.dt)
}

fn lag_sums(v: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag)
        .map(|lag| {
            let prods: Vec<f64> = v[lag..].iter().zip(v).map(|(a, b)| a * b).collect();
            pairwise_sum(&prods)
        })
        .collect()
}

/// Autocorrelation of `signal` (already transformed, e.g. `Θ²`) divided by `norm`.
fn correlation(signals: &[Vec<f64>], dt: f64, max_lag: usize, norm: f64) -> CorrelationCurve {
    let sums: Vec<Vec<f64>> = signals.iter().map(|s| lag_sums(s, max_lag)).collect();
    let mut values = Vec::with_capacity(max_lag + 1);
    let mut stderr = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        let total: Vec<f64> = sums.iter().map(|s| s[lag]).collect();
        let count: usize = signals.iter().map(|s| s.len() - lag).sum();
        values.push(pairwise_sum(&total) / count as f64 / norm);
        let per: Vec<f64> = sums.iter().zip(signals).map(|(s, v)| s[lag] / (v.len() - lag) as f64 / norm).collect();
        stderr.push(std_error(&per));
    }
    CorrelationCurve { lags: (0..=max_lag).map(|k| k as f64 * dt).collect(), values, stderr, normalization: norm }
}

fn check_lag(series: &[UniformSeries], max_lag: usize) -> Result<f64, SpectralError> {
    let dt = common_dt(series)?;
    let len = series.iter().map(|s| s.len()).min().unwrap_or(0);
    if max_lag >= len {
        return Err(SpectralError::LagTooLong { max_lag, len });
    }
    Ok(dt)
}

fn all_values<F: Fn(f64) -> f64>(series: &[UniformSeries], f: F) -> Vec<f64> {
    series.iter().flat_map(|s| s.values.iter().map(|&v| f(v))).collect()
}

/// First-order coherence `⟨Θ(t+τ)Θ(t)⟩/⟨|Θ|⟩²` for lags `0..=max_lag`.
pub fn g1(series: &[UniformSeries], max_lag: usize) -> Result<CorrelationCurve, SpectralError> {
    let dt = check_lag(series, max_lag)?;
    let m = mean(&all_values(series, f64::abs));
    if m == 0.0 {
        return Err(SpectralError::ZeroNormalization);
    }
    let signals: Vec<Vec<f64>> = series.iter().map(|s| s.values.clone()).collect();
    Ok(correlation(&signals, dt, max_lag, m * m))
}

/// Intensity correlation `⟨Θ(t+τ)²Θ(t)²⟩/⟨Θ²⟩²` for lags `0..=max_lag`.
pub fn g2(series: &[UniformSeries], max_lag: usize) -> Result<CorrelationCurve, SpectralError> {
    let dt = check_lag(series, max_lag)?;
    let m = mean(&all_values(series, |v| v * v));
    if m == 0.0 {
        return Err(SpectralError::ZeroNormalization);
    }
    let signals: Vec<Vec<f64>> = series.iter().map(|s| s.values.iter().map(|v| v * v).collect()).collect();
    Ok(correlation(&signals, dt, max_lag, m * m))
}

/// Zero-delay intensity correlation `⟨Θ⁴⟩/⟨Θ²⟩²` of pooled samples.
pub fn g2_zero(thetas: &[f64]) -> Result<f64, SpectralError> {
    if thetas.is_empty() {
        return Err(SpectralError::Empty);
    }
    let sq: Vec<f64> = thetas.iter().map(|t| t * t).collect();
    let q: Vec<f64> = sq.iter().map(|t| t * t).collect();
    let m2 = mean(&sq);
    if m2 == 0.0 {
        return Err(SpectralError::ZeroNormalization);
    }
    Ok(mean(&q) / (m2 * m2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Hann,
    Rect,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rect => vec![1.0; len],
            // periodic Hann
            Window::Hann => (0..len).map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / len as f64).cos()).collect(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Window::Hann => "hann",
            Window::Rect => "rect",
        }
    }
}

impl FromStr for Window {
    type Err = SpectralError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hann" | "hanning" => Ok(Window::Hann),
            "rect" | "none" | "boxcar" => Ok(Window::Rect),
            _ => Err(SpectralError::UnknownWindow(s.to_string())),
        }
    }
}

/// Two-sided power spectral density of `Θ(t)` on a symmetric `ω` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Angular frequency in units of `κ`, from `-π/dt` to `π/dt` (`L + 1` points).
    pub omega: Vec<f64>,
    /// Density normalized so that `Σ S dω` equals the mean-removed variance.
    pub density: Vec<f64>,
    pub window: Window,
    pub segment_len: usize,
    pub segments: usize,
    /// Mean of the squared segment means, the weight of the `ω = 0` line
    /// removed before transforming.
    pub dc_weight: f64,
}

impl Spectrum {
    pub fn d_omega(&self) -> f64 {
        self.omega[1] - self.omega[0]
    }

    /// Index of `ω = 0`.
    pub fn center(&self) -> usize {
        self.segment_len / 2
    }

    /// Centered moving average over `2·half + 1` bins.
    pub fn smoothed(&self, half: usize) -> Vec<f64> {
        let n = self.density.len();
        (0..n)
            .map(|k| {
                let lo = k.saturating_sub(half);
                let hi = (k + half).min(n - 1);
                pairwise_sum(&self.density[lo..=hi]) / (hi - lo + 1) as f64
            })
            .collect()
    }

    /// Local maxima of the smoothed density at `ω > 0`, as `(ω, S)`.
    pub fn positive_peaks(&self, half: usize) -> Vec<(f64, f64)> {
        let s = self.smoothed(half);
        let c = self.center();
        (c + 1..s.len() - 1).filter(|&k| s[k] > s[k - 1] && s[k] >= s[k + 1]).map(|k| (self.omega[k], s[k])).collect()
    }
}

/// Welch estimate with 50% overlapping segments of length `segment_len`.
///
/// Each segment has its mean removed before windowing. The result is pooled
/// over every segment of every series in input order.
pub fn spectrum(series: &[UniformSeries], segment_len: usize, window: Window) -> Result<Spectrum, SpectralError> {
    let dt = common_dt(series)?;
    if !segment_len.is_power_of_two() || segment_len < 2 {
        return Err(SpectralError::SegmentNotPowerOfTwo(segment_len));
    }
    let len = series.iter().map(|s| s.len()).min().unwrap_or(0);
    if segment_len > len {
        return Err(SpectralError::SegmentTooLong { segment: segment_len, len });
    }
    let w = window.coefficients(segment_len);
    let w_energy = pairwise_sum(&w.iter().map(|v| v * v).collect::<Vec<_>>());
    let fft = FftPlanner::<f64>::new().plan_fft_forward(segment_len);
    let hop = segment_len / 2;
    let mut acc = vec![0.0; segment_len];
    let mut dc = Vec::new();
    let mut segments = 0usize;
    let mut buf = vec![Complex::new(0.0, 0.0); segment_len];
    for s in series {
        let mut start = 0;
        while start + segment_len <= s.len() {
            let seg = &s.values[start..start + segment_len];
            let m = mean(seg);
            dc.push(m * m);
            for ((b, &v), &wk) in buf.iter_mut().zip(seg).zip(&w) {
                *b = Complex::new((v - m) * wk, 0.0);
            }
            fft.process(&mut buf);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += b.norm_sqr();
            }
            segments += 1;
            start += hop;
        }
    }
    let scale = dt / (2.0 * PI * w_energy * segments as f64);
    let l = segment_len;
    let half = l / 2;
    let d_omega = 2.0 * PI / (l as f64 * dt);
    // Reorder to k = -L/2 ..= L/2, splitting the Nyquist bin between both ends.
    let mut omega = Vec::with_capacity(l + 1);
    let mut density = Vec::with_capacity(l + 1);
    for k in -(half as isize)..=(half as isize) {
        let idx = k.rem_euclid(l as isize) as usize;
        let mut v = acc[idx] * scale;
        if k.unsigned_abs() == half {
            v *= 0.5;
        }
        omega.push(k as f64 * d_omega);
        density.push(v);
    }
    Ok(Spectrum { omega, density, window, segment_len, segments, dc_weight: mean(&dc) })
}
