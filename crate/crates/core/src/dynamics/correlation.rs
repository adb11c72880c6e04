//! Correlations `C(n) = ⟨f∘T̂ⁿ, g⟩` between single-mode observables.
//!
//! Because `T̂` preserves each fiber mode, the two-dimensional integral
//! collapses to `δ_{mm'}·∫_I F(Tⁿx)·e^{2πim G_n(x)}·conj(G(x)) dx / |I|`.
//! The map `x ↦ (Tⁿx, G_n(x))` is tracked exactly as a list of pieces on
//! which `Tⁿ` is a translation and `G_n` is affine.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::observable::{BaseFn, ModeObservable};
use super::sum::{deterministic_map_sum, pairwise_sum, pairwise_sum_f64};
use crate::bundle::{frac, CircleExtension, SkewProduct};
use crate::iet::IetError;

/// Images closer than this to a breakpoint are not split there.
const SPLIT_TOL: f64 = 1e-13;
/// Successive refinements of the general quadrature must agree this well.
const REFINE_TOL: f64 = 1e-8;
const MAX_REFINEMENTS: usize = 8;

pub const MC_BURN_IN: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorrelationError {
    #[error("mesh {mesh} is too coarse; lag {lag} needs at least {required}")]
    MeshTooCoarse { mesh: usize, lag: usize, required: usize },
    #[error("at least one Monte Carlo sample is needed")]
    NoSamples,
    #[error(transparent)]
    Iet(#[from] IetError),
}

/// On `[lo, hi)`: `Tⁿx = x + shift` and `G_n(x) ≡ phase + slope·(x − lo)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub shift: f64,
    pub phase: f64,
    pub slope: f64,
}

impl Piece {
    pub fn skewing_sum(&self, x: f64) -> f64 {
        frac(self.phase + self.slope * (x - self.lo))
    }
}

/// The piece decomposition of `x ↦ (Tⁿx, G_n(x))`, advanced one lag at a time.
#[derive(Debug, Clone)]
pub struct PieceStructure<'a> {
    skew: &'a SkewProduct,
    pieces: Vec<Piece>,
    lag: usize,
}

impl<'a> PieceStructure<'a> {
    pub fn new(skew: &'a SkewProduct) -> Self {
        let total = skew.base().total_length();
        PieceStructure {
            skew,
            pieces: vec![Piece { lo: 0.0, hi: total, shift: 0.0, phase: 0.0, slope: 0.0 }],
            lag: 0,
        }
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn advance(&mut self) {
        let t = self.skew.base();
        let bps = t.breakpoints();
        let h = self.skew.h();
        let b = self.skew.b();
        let w = t.w();
        let mut next = Vec::with_capacity(self.pieces.len() + bps.len());
        let mut cuts = Vec::with_capacity(bps.len() + 2);
        for p in &self.pieces {
            let ylo = p.lo + p.shift;
            let yhi = p.hi + p.shift;
            cuts.clear();
            cuts.push(p.lo);
            let first = bps.partition_point(|&c| c <= ylo + SPLIT_TOL);
            for &c in &bps[first..] {
                if c >= yhi - SPLIT_TOL {
                    break;
                }
                cuts.push(c - p.shift);
            }
            cuts.push(p.hi);
            for win in cuts.windows(2) {
                let (l, r) = (win[0], win[1]);
                let a = t.locate(0.5 * (l + r) + p.shift);
                let y = l + p.shift;
                let phase = frac(p.phase + p.slope * (l - p.lo) + h[a] * (y - bps[a]) + b[a]);
                next.push(Piece { lo: l, hi: r, shift: p.shift + w[a], phase, slope: p.slope + h[a] });
            }
        }
        self.pieces = next;
        self.lag += 1;
    }

    pub fn advance_to(&mut self, lag: usize) {
        while self.lag < lag {
            self.advance();
        }
    }

    /// `G_n(x)` read off the piece structure.
    pub fn skewing_sum(&self, x: f64) -> f64 {
        let i = self.pieces.partition_point(|p| p.lo <= x).saturating_sub(1);
        self.pieces[i].skewing_sum(x)
    }

    /// `∫_I F(x + shift)·e^{2πim G_n(x)}·conj(G(x)) dx / |I|`.
    pub fn correlate(&self, f: &BaseFn, g: &BaseFn, mode: i64, panels_per_unit: f64) -> Complex64 {
        let total = self.skew.base().total_length();
        let f_breaks = f.discontinuities();
        let g_breaks = g.discontinuities();
        let exact = f.is_piecewise_constant() && g.is_piecewise_constant();
        let sum = deterministic_map_sum(&self.pieces, |p| {
            let mut cuts = vec![p.lo, p.hi];
            cuts.extend(g_breaks.iter().copied().filter(|&c| c > p.lo && c < p.hi));
            cuts.extend(f_breaks.iter().map(|c| c - p.shift).filter(|&c| c > p.lo && c < p.hi));
            cuts.sort_by(f64::total_cmp);
            let terms: Vec<Complex64> = cuts
                .windows(2)
                .filter(|w| w[1] > w[0])
                .map(|w| {
                    if exact {
                        integrate_constant(p, f, g, mode, w[0], w[1])
                    } else {
                        integrate_gauss(p, f, g, mode, w[0], w[1], panels_per_unit)
                    }
                })
                .collect();
            pairwise_sum(&terms)
        });
        sum / total
    }
}

fn sinc(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        1.0 - z * z / 6.0
    } else {
        z.sin() / z
    }
}

/// Exact integral on `[u, v)` where both amplitudes are constant.
fn integrate_constant(p: &Piece, f: &BaseFn, g: &BaseFn, mode: i64, u: f64, v: f64) -> Complex64 {
    let mid = 0.5 * (u + v);
    let amp = f.eval(mid + p.shift) * g.eval(mid).conj();
    if amp == Complex64::new(0.0, 0.0) {
        return amp;
    }
    let len = v - u;
    let m = mode as f64;
    let kappa = TAU * m * p.slope;
    let start = Complex64::cis(TAU * m * frac(p.phase + p.slope * (u - p.lo)));
    amp * start * Complex64::cis(0.5 * kappa * len) * (len * sinc(0.5 * kappa * len))
}

const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Composite 8-point Gauss–Legendre on `[u, v)`.
fn integrate_gauss(
    p: &Piece,
    f: &BaseFn,
    g: &BaseFn,
    mode: i64,
    u: f64,
    v: f64,
    panels_per_unit: f64,
) -> Complex64 {
    let m = mode as f64;
    let panels = ((v - u) * panels_per_unit).ceil().max(1.0) as usize;
    let width = (v - u) / panels as f64;
    let mut terms = Vec::with_capacity(panels);
    for k in 0..panels {
        let a = u + k as f64 * width;
        let half = 0.5 * width;
        let c = a + half;
        let mut s = Complex64::new(0.0, 0.0);
        for (node, weight) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
            let x = c + half * node;
            let phase = TAU * m * frac(p.phase + p.slope * (x - p.lo));
            s += weight * f.eval(x + p.shift) * Complex64::cis(phase) * g.eval(x).conj();
        }
        terms.push(s * half);
    }
    pairwise_sum(&terms)
}

pub fn required_mesh(d: usize, lag: usize) -> usize {
    4 * (d * lag + 2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    /// Piecewise quadrature; `mesh` is the finest panel count over `I` used.
    Grid { mesh: usize, exact_pieces: bool },
    MonteCarlo { samples: usize, seed: u64, burn_in: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationSeries {
    /// `C(0), …, C(n_max)`.
    pub values: Vec<Complex64>,
    pub method: Method,
    /// Standard error per lag (Monte Carlo only).
    pub std_err: Option<Vec<f64>>,
    pub spec_hash: Option<String>,
}

impl CorrelationSeries {
    pub fn n_max(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }
}

fn check_mesh(d: usize, lag: usize, mesh: usize) -> Result<(), CorrelationError> {
    let required = required_mesh(d, lag);
    if mesh < required {
        Err(CorrelationError::MeshTooCoarse { mesh, lag, required })
    } else {
        Ok(())
    }
}

fn value_at(
    ps: &PieceStructure,
    f: &ModeObservable,
    g: &ModeObservable,
    mesh: usize,
) -> (Complex64, usize) {
    let total = ps.skew.base().total_length();
    let exact = f.base.is_piecewise_constant() && g.base.is_piecewise_constant();
    if exact {
        return (ps.correlate(&f.base, &g.base, f.mode, 0.0), mesh);
    }
    let mut mesh = mesh;
    let mut prev = ps.correlate(&f.base, &g.base, f.mode, mesh as f64 / total);
    for _ in 0..MAX_REFINEMENTS {
        let finer = ps.correlate(&f.base, &g.base, f.mode, 2.0 * mesh as f64 / total);
        mesh *= 2;
        let done = (finer - prev).norm() < REFINE_TOL;
        prev = finer;
        if done {
            break;
        }
    }
    (prev, mesh)
}

/// `⟨f∘T̂ⁿ, g⟩` by quadrature on the piece structure.
pub fn mode_correlation(
    skew: &SkewProduct,
    f: &ModeObservable,
    g: &ModeObservable,
    lag: usize,
    mesh: usize,
) -> Result<Complex64, CorrelationError> {
    check_mesh(skew.base().d(), lag, mesh)?;
    if f.mode != g.mode {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut ps = PieceStructure::new(skew);
    ps.advance_to(lag);
    Ok(value_at(&ps, f, g, mesh).0)
}

/// `C(0..=n_max)` by quadrature. The mesh is checked against `n_max`.
pub fn correlation_series_grid(
    skew: &SkewProduct,
    f: &ModeObservable,
    g: &ModeObservable,
    n_max: usize,
    mesh: usize,
) -> Result<CorrelationSeries, CorrelationError> {
    check_mesh(skew.base().d(), n_max, mesh)?;
    let exact_pieces = f.base.is_piecewise_constant() && g.base.is_piecewise_constant();
    if f.mode != g.mode {
        return Ok(CorrelationSeries {
            values: vec![Complex64::new(0.0, 0.0); n_max + 1],
            method: Method::Grid { mesh, exact_pieces },
            std_err: None,
            spec_hash: None,
        });
    }
    let mut ps = PieceStructure::new(skew);
    let mut values = Vec::with_capacity(n_max + 1);
    let mut finest = mesh;
    loop {
        let (v, used) = value_at(&ps, f, g, mesh);
        values.push(v);
        finest = finest.max(used);
        if ps.lag() == n_max {
            break;
        }
        ps.advance();
    }
    Ok(CorrelationSeries {
        values,
        method: Method::Grid { mesh: finest, exact_pieces },
        std_err: None,
        spec_hash: None,
    })
}

/// `C(n) ≈ (1/N) Σ_{k<N} f(z_{k+n})·conj(g(z_k))` along one seeded orbit.
pub fn correlation_series_monte_carlo<E: CircleExtension>(
    ext: &E,
    f: &ModeObservable,
    g: &ModeObservable,
    n_max: usize,
    samples: usize,
    seed: u64,
) -> Result<CorrelationSeries, CorrelationError> {
    if samples == 0 {
        return Err(CorrelationError::NoSamples);
    }
    let total = ext.base().total_length();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = rng.gen_range(0.0..total);
    let mut rho = rng.gen::<f64>();
    for _ in 0..MC_BURN_IN {
        (x, rho) = ext.apply(x, rho)?;
    }
    let len = samples + n_max;
    let mut fv = Vec::with_capacity(len);
    let mut gv = Vec::with_capacity(samples);
    for k in 0..len {
        fv.push(f.eval(x, rho));
        if k < samples {
            gv.push(g.eval(x, rho).conj());
        }
        (x, rho) = ext.apply(x, rho)?;
    }
    let n_inv = 1.0 / samples as f64;
    let (values, std_err): (Vec<Complex64>, Vec<f64>) = (0..=n_max)
        .into_par_iter()
        .map(|n| {
            let prods: Vec<Complex64> = (0..samples).map(|k| fv[k + n] * gv[k]).collect();
            let mean = pairwise_sum(&prods) * n_inv;
            let dev: Vec<f64> = prods.iter().map(|z| (z - mean).norm_sqr()).collect();
            let var = pairwise_sum_f64(&dev) / (samples.max(2) - 1) as f64;
            (mean, (var * n_inv).sqrt())
        })
        .unzip();
    Ok(CorrelationSeries {
        values,
        method: Method::MonteCarlo { samples, seed, burn_in: MC_BURN_IN },
        std_err: Some(std_err),
        spec_hash: None,
    })
}
