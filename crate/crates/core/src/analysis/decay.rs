//! Decay exponents and square-summability of correlation moduli.

use serde::Serialize;

use super::AnalysisError;

pub const MIN_SERIES_LEN: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    /// Fitted exponent; `+∞` when the series vanishes past lag 0.
    pub alpha_hat: f64,
    pub k_hat: f64,
    pub r_squared: f64,
    /// `(2ʲ, max |C| over [2ʲ, 2ʲ⁺¹))` for each nonzero block.
    pub envelope: Vec<(usize, f64)>,
    pub all_zero: bool,
}

/// Least-squares fit of `log max_{[2ʲ,2ʲ⁺¹)} |C|` against `log(1 + 2ʲ)`.
pub fn fit_decay_exponent(moduli: &[f64]) -> Result<DecayFit, AnalysisError> {
    if moduli.len() < MIN_SERIES_LEN {
        return Err(AnalysisError::SeriesTooShort { len: moduli.len(), required: MIN_SERIES_LEN });
    }
    let mut envelope = Vec::new();
    let mut start = 1;
    while start < moduli.len() {
        let end = (2 * start).min(moduli.len());
        let m = moduli[start..end].iter().copied().fold(0.0, f64::max);
        if m > 0.0 {
            envelope.push((start, m));
        }
        start *= 2;
    }
    if envelope.len() < 2 {
        return Ok(DecayFit {
            alpha_hat: f64::INFINITY,
            k_hat: envelope.first().map_or(0.0, |e| e.1),
            r_squared: 0.0,
            all_zero: envelope.is_empty(),
            envelope,
        });
    }
    let xs: Vec<f64> = envelope.iter().map(|&(n, _)| (1.0 + n as f64).ln()).collect();
    let ys: Vec<f64> = envelope.iter().map(|&(_, m)| m.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(DecayFit { alpha_hat: -slope, k_hat: intercept.exp(), r_squared, envelope, all_zero: false })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummabilityReport {
    /// `(n, Σ_{k≤n} |C(k)|²)` at powers of two and at the last lag.
    pub checkpoints: Vec<(usize, f64)>,
    /// `S(n_max) − S(⌊n_max/10⌋)`.
    pub last_decade_increment: f64,
    /// `S(⌊n_max/10⌋) − S(⌊n_max/100⌋)`.
    pub previous_decade_increment: f64,
    /// Set when the increments do not shrink from one decade to the next.
    pub divergent: bool,
}

/// Ratio of consecutive decade increments at or above which the partial sums
/// are flagged as not converging.
pub const DIVERGENCE_RATIO: f64 = 0.9;

pub fn square_summability_report(moduli: &[f64]) -> SummabilityReport {
    let mut cumulative = Vec::with_capacity(moduli.len());
    let mut acc = 0.0;
    for m in moduli {
        acc += m * m;
        cumulative.push(acc);
    }
    let n_max = moduli.len().saturating_sub(1);
    let s = |n: usize| cumulative.get(n).copied().unwrap_or(0.0);
    let mut checkpoints = Vec::new();
    let mut n = 1;
    while n < n_max {
        checkpoints.push((n, s(n)));
        n *= 2;
    }
    if !moduli.is_empty() {
        checkpoints.push((n_max, s(n_max)));
    }
    let last = s(n_max) - s(n_max / 10);
    let previous = s(n_max / 10) - s(n_max / 100);
    let divergent = previous > 0.0 && last / previous >= DIVERGENCE_RATIO;
    SummabilityReport { checkpoints, last_decade_increment: last, previous_decade_increment: previous, divergent }
}
