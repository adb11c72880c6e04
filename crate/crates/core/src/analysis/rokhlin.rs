//! Approximate eigenfunctions supported on Rokhlin towers.
//!
//! For a base interval `J` whose first `T_k` images are pairwise disjoint and
//! on which `T^{T_k}` is a translation, the function equal to
//! `e^{−2πiλj}·e^{2πim(ρ − G_j(y))}` on `T̂ʲ(J × S¹)` satisfies
//! `f∘T̂ = e^{−2πiλ} f` away from the top and bottom levels, so its relative
//! defect is of order `T_k^{−1/2}`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use super::AnalysisError;
use crate::bundle::CircleExtension;
use crate::dynamics::observable::ModeObservable;
use crate::dynamics::sum::pairwise_sum_f64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RokhlinReport {
    pub tower_height: usize,
    pub lambda: f64,
    pub mode: i64,
    pub base_lo: f64,
    pub base_len: f64,
    /// Measure of `T^{T_k} J ∩ J`.
    pub overlap: f64,
    /// `‖f∘T̂ − e^{−2πiλ} f‖ / ‖f‖`.
    pub defect: f64,
    /// `2·T_k^{−1/2}`.
    pub bound: f64,
}

const MAX_SHRINK: usize = 60;

/// Interior of the largest gap of the backward orbits of the breakpoints.
fn widest_gap<E: CircleExtension>(ext: &E, t_k: usize) -> Result<(f64, f64), AnalysisError> {
    let map = ext.base();
    let total = map.total_length();
    let mut marks = vec![0.0, total];
    for &c in &map.breakpoints()[1..] {
        let mut y = c;
        marks.push(y);
        for _ in 1..t_k {
            y = map.apply_inverse(y)?;
            marks.push(y);
        }
    }
    marks.sort_by(f64::total_cmp);
    let (lo, hi) = marks
        .windows(2)
        .map(|w| (w[0], w[1]))
        .max_by(|a, b| (a.1 - a.0).total_cmp(&(b.1 - b.0)))
        .expect("at least two marks");
    Ok((lo, hi))
}

/// Left ends of `T^j J` for `j = 0..=t_k`, or `None` if some level straddles
/// a breakpoint.
fn level_lefts<E: CircleExtension>(ext: &E, y0: f64, len: f64, t_k: usize) -> Option<Vec<f64>> {
    let map = ext.base();
    let lambda = map.spec().lambda();
    let mut lefts = Vec::with_capacity(t_k + 1);
    let mut y = y0;
    for _ in 0..=t_k {
        lefts.push(y);
        let a = map.locate(y);
        if y + len > map.breakpoints()[a] + lambda[a] {
            return None;
        }
        y = map.apply_in(a, y);
    }
    Some(lefts)
}

fn disjoint(lefts: &[f64], len: f64) -> bool {
    let mut v = lefts.to_vec();
    v.sort_by(f64::total_cmp);
    v.windows(2).all(|w| w[1] - w[0] >= len)
}

const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_3),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_3),
];

pub fn rokhlin_eigenfunction<E: CircleExtension>(
    ext: &E,
    lambda: f64,
    t_k: usize,
    mode: i64,
) -> Result<RokhlinReport, AnalysisError> {
    if t_k == 0 {
        return Err(AnalysisError::TowerConstructionFailed("tower height must be positive".into()));
    }
    let total = ext.base().total_length();
    let (gap_lo, gap_hi) = widest_gap(ext, t_k)?;
    let mut len = (total / (4.0 * t_k as f64)).min(0.5 * (gap_hi - gap_lo));
    let mid = 0.5 * (gap_lo + gap_hi);
    let mut found = None;
    for _ in 0..MAX_SHRINK {
        let y0 = mid - 0.5 * len;
        if let Some(lefts) = level_lefts(ext, y0, len, t_k) {
            if disjoint(&lefts[..t_k], len) {
                found = Some((y0, lefts));
                break;
            }
        }
        len *= 0.5;
    }
    let (y0, lefts) = found.ok_or_else(|| {
        AnalysisError::TowerConstructionFailed(format!("no disjoint tower of height {t_k}"))
    })?;
    let z0 = lefts[t_k];
    let overlap = ((z0 + len).min(y0 + len) - z0.max(y0)).max(0.0);
    let target = Complex64::cis(-TAU * lambda * t_k as f64);

    // Returning part of the top level: y ∈ J with T^{T_k} y ∈ J.
    let overlap_cost = if overlap == 0.0 {
        0.0
    } else if mode == 0 {
        overlap * (Complex64::new(1.0, 0.0) - target).norm_sqr()
    } else {
        let a = y0 + (y0 - z0).max(0.0);
        let panels = 16;
        let width = overlap / panels as f64;
        let mut terms = Vec::with_capacity(panels * GL8.len());
        for p in 0..panels {
            let c = a + (p as f64 + 0.5) * width;
            for (node, weight) in GL8 {
                let y = c + 0.5 * width * node;
                let g = ext.skewing_sum(y, t_k)?.value;
                let v = Complex64::cis(TAU * mode as f64 * g) - target;
                terms.push(0.5 * width * weight * v.norm_sqr());
            }
        }
        pairwise_sum_f64(&terms)
    };
    let defect_sq = 2.0 * (len - overlap) + overlap_cost;
    let defect = (defect_sq / (t_k as f64 * len)).sqrt();
    Ok(RokhlinReport {
        tower_height: t_k,
        lambda,
        mode,
        base_lo: y0,
        base_len: len,
        overlap,
        defect,
        bound: 2.0 / (t_k as f64).sqrt(),
    })
}

/// `‖f∘T̂ − e^{−2πiλ} f‖ / ‖f‖` on a midpoint grid of `grid` base points and
/// `4|m| + 8` fiber points.
pub fn eigenfunction_defect<E: CircleExtension>(
    ext: &E,
    obs: &ModeObservable,
    lambda: f64,
    grid: usize,
) -> Result<f64, AnalysisError> {
    let total = ext.base().total_length();
    let fibers = 4 * obs.mode.unsigned_abs() as usize + 8;
    let e = Complex64::cis(-TAU * lambda);
    let mut num = Vec::with_capacity(grid * fibers);
    let mut den = Vec::with_capacity(grid * fibers);
    for i in 0..grid {
        let x = (i as f64 + 0.5) * total / grid as f64;
        for j in 0..fibers {
            let rho = (j as f64 + 0.5) / fibers as f64;
            let (x1, r1) = ext.apply(x, rho)?;
            let f0 = obs.eval(x, rho);
            num.push((obs.eval(x1, r1) - e * f0).norm_sqr());
            den.push(f0.norm_sqr());
        }
    }
    let d = pairwise_sum_f64(&den);
    if d == 0.0 {
        return Ok(0.0);
    }
    Ok((pairwise_sum_f64(&num) / d).sqrt())
}
