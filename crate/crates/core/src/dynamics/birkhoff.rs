//! Orbits, Birkhoff averages, equidistribution and fiber-mode projection.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use super::observable::ModeObservable;
use super::sum::RunningSum;
use crate::bundle::{CircleExtension, SkewingSum};
use crate::iet::IetError;

/// `G_n(x)` mod 1; see [`CircleExtension::skewing_sum`].
pub fn birkhoff_skewing_sum<E: CircleExtension>(ext: &E, x: f64, n: usize) -> Result<SkewingSum, IetError> {
    ext.skewing_sum(x, n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkewOrbit {
    /// `(x_k, ρ_k)` for `k = 0..N`, starting with the initial point.
    pub points: Vec<(f64, f64)>,
    pub reliable: bool,
}

pub fn skew_orbit<E: CircleExtension>(ext: &E, start: (f64, f64), n: usize) -> Result<SkewOrbit, IetError> {
    let (mut x, mut rho) = start;
    let mut points = Vec::with_capacity(n);
    let mut reliable = true;
    for _ in 0..n {
        points.push((x, rho));
        let (step, r) = ext.apply_flagged(x, rho)?;
        reliable &= !step.near_breakpoint;
        x = step.x;
        rho = r;
    }
    Ok(SkewOrbit { points, reliable })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BirkhoffAverage {
    pub average: Complex64,
    /// `(N', average over the first N' points)` at powers of two, then `N`.
    pub trace: Vec<(usize, Complex64)>,
    pub reliable: bool,
}

/// `(1/N) Σ_{k<N} obs(T̂ᵏ start)`.
pub fn birkhoff_average<E: CircleExtension>(
    ext: &E,
    obs: &ModeObservable,
    start: (f64, f64),
    n: usize,
) -> Result<BirkhoffAverage, IetError> {
    let (mut x, mut rho) = start;
    ext.base().apply(x)?;
    let mut sum = RunningSum::default();
    let mut trace = Vec::new();
    let mut reliable = true;
    let mut next_check = 1;
    for k in 1..=n {
        sum.add(obs.eval(x, rho));
        if k == next_check || k == n {
            trace.push((k, sum.value() / k as f64));
            if k == next_check {
                next_check *= 2;
            }
        }
        if k < n {
            let (step, r) = ext.apply_flagged(x, rho)?;
            reliable &= !step.near_breakpoint;
            x = step.x;
            rho = r;
        }
    }
    let average = trace.last().map_or(Complex64::new(0.0, 0.0), |t| t.1);
    Ok(BirkhoffAverage { average, trace, reliable })
}

pub const DISCREPANCY_GRID: usize = 64;

/// Star discrepancy over anchored boxes `[0, a) × [0, c)` with corners on a
/// 64×64 grid of `[0, len) × [0, 1)`.
pub fn discrepancy_2d(points: &[(f64, f64)], len: f64) -> f64 {
    let m = DISCREPANCY_GRID;
    if points.is_empty() {
        return 0.0;
    }
    let mut counts = vec![vec![0u64; m]; m];
    let cell = |v: f64| ((v * m as f64).floor().max(0.0) as usize).min(m - 1);
    for &(x, r) in points {
        counts[cell(x / len)][cell(r)] += 1;
    }
    let n = points.len() as f64;
    let mut cum = vec![vec![0u64; m + 1]; m + 1];
    let mut worst: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            cum[i + 1][j + 1] = counts[i][j] + cum[i][j + 1] + cum[i + 1][j] - cum[i][j];
            let area = ((i + 1) * (j + 1)) as f64 / (m * m) as f64;
            worst = worst.max((cum[i + 1][j + 1] as f64 / n - area).abs());
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectionError {
    #[error("fiber grid of {size} points cannot resolve mode {mode}; need at least {required}")]
    GridTooCoarse { size: usize, mode: i64, required: usize },
}

/// `π_n f` at each base point, from samples `f(x, j/M)` for `j = 0..M`.
pub fn mode_project(samples: &[Vec<Complex64>], n: i64) -> Result<Vec<Complex64>, ProjectionError> {
    let required = 4 * n.unsigned_abs() as usize + 4;
    let mut out = Vec::with_capacity(samples.len());
    for row in samples {
        let size = row.len();
        if size < required {
            return Err(ProjectionError::GridTooCoarse { size, mode: n, required });
        }
        let mut acc = RunningSum::default();
        for (j, v) in row.iter().enumerate() {
            let k = (n.rem_euclid(size as i64) as usize * j) % size;
            acc.add(v * Complex64::cis(-TAU * k as f64 / size as f64));
        }
        out.push(acc.value() / size as f64);
    }
    Ok(out)
}
