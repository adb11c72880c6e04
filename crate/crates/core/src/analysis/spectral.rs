//! Lag-window spectral density estimates and atom probes.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use super::decay::MIN_SERIES_LEN;
use super::AnalysisError;
use crate::bundle::frac;
use crate::dynamics::sum::pairwise_sum;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralEstimate {
    /// `k/M` for `k = 0..M`.
    pub frequencies: Vec<f64>,
    /// Raw density clipped at zero.
    pub density: Vec<f64>,
    pub raw: Vec<f64>,
    pub window: String,
    pub window_len: usize,
    /// Magnitude of the most negative raw value (taper bias diagnostic).
    pub negative_lobe: f64,
    /// `Σ raw / M`, which reproduces `Re C(0)`.
    pub total_mass: f64,
    /// Largest single-bin mass `density / M`.
    pub max_bin_mass: f64,
    pub source_hash: Option<String>,
}

impl SpectralEstimate {
    /// Clipped mass in bins within `half_width` (circularly) of `center`.
    pub fn band_mass(&self, center: f64, half_width: f64) -> f64 {
        let m = self.frequencies.len() as f64;
        self.frequencies
            .iter()
            .zip(&self.density)
            .filter(|(f, _)| {
                let d = frac(**f - center);
                d.min(1.0 - d) <= half_width
            })
            .map(|(_, s)| s / m)
            .sum()
    }
}

/// Blackman lag window on `|n| < L`.
pub fn blackman(n: usize, len: usize) -> f64 {
    let r = n as f64 / len as f64;
    0.42 + 0.5 * (PI * r).cos() + 0.08 * (TAU * r).cos()
}

/// `S(λ) = Σ_{|n|<L} w(n) C(n) e^{−2πiλn}` with `C(−n) = conj C(n)`.
pub fn spectral_density(values: &[Complex64], window_len: usize) -> Result<SpectralEstimate, AnalysisError> {
    if window_len == 0 || window_len > values.len() {
        return Err(AnalysisError::WindowTooLong { window: window_len, len: values.len() });
    }
    let size = (4 * window_len).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    for (n, c) in values.iter().enumerate().take(window_len) {
        let w = blackman(n, window_len);
        buf[n] += w * c;
        if n > 0 {
            buf[size - n] += w * c.conj();
        }
    }
    FftPlanner::new().plan_fft_forward(size).process(&mut buf);
    let raw: Vec<f64> = buf.iter().map(|z| z.re).collect();
    let density: Vec<f64> = raw.iter().map(|v| v.max(0.0)).collect();
    let negative_lobe = raw.iter().copied().fold(0.0, |m: f64, v| m.max(-v));
    let total_mass = raw.iter().sum::<f64>() / size as f64;
    let max_bin_mass = density.iter().copied().fold(0.0, f64::max) / size as f64;
    Ok(SpectralEstimate {
        frequencies: (0..size).map(|k| k as f64 / size as f64).collect(),
        density,
        raw,
        window: "blackman".into(),
        window_len,
        negative_lobe,
        total_mass,
        max_bin_mass,
        source_hash: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomProbe {
    /// `(N, max_λ |(1/N) Σ_{n<N} C(n) e^{−2πiλn}|, argmax λ)`.
    pub checkpoints: Vec<(usize, f64, f64)>,
}

/// Cesàro modulus at a single `N`, maximized over the grid.
pub fn atom_probe_at(values: &[Complex64], grid: &[f64], n: usize) -> Result<(f64, f64), AnalysisError> {
    if n < MIN_SERIES_LEN || n > values.len() {
        return Err(AnalysisError::SeriesTooShort { len: values.len(), required: n.max(MIN_SERIES_LEN) });
    }
    let scores: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&lam| {
            let terms: Vec<Complex64> = values[..n]
                .iter()
                .enumerate()
                .map(|(k, c)| c * Complex64::cis(-TAU * frac(lam * k as f64)))
                .collect();
            ((pairwise_sum(&terms) / n as f64).norm(), lam)
        })
        .collect();
    Ok(scores.into_iter().fold((0.0, 0.0), |best, s| if s.0 > best.0 { s } else { best }))
}

/// [`atom_probe_at`] at `N = 64, 128, …` and at the full length.
pub fn atom_probe(values: &[Complex64], grid: &[f64]) -> Result<AtomProbe, AnalysisError> {
    if values.len() < MIN_SERIES_LEN {
        return Err(AnalysisError::SeriesTooShort { len: values.len(), required: MIN_SERIES_LEN });
    }
    let mut checkpoints = Vec::new();
    let mut n = MIN_SERIES_LEN;
    while n < values.len() {
        let (m, lam) = atom_probe_at(values, grid, n)?;
        checkpoints.push((n, m, lam));
        n *= 2;
    }
    let (m, lam) = atom_probe_at(values, grid, values.len())?;
    checkpoints.push((values.len(), m, lam));
    Ok(AtomProbe { checkpoints })
}

/// `k/size` for `k = 0..size`.
pub fn uniform_grid(size: usize) -> Vec<f64> {
    (0..size).map(|k| k as f64 / size as f64).collect()
}
