//! Least-squares tests of the cohomological equation `u∘T − u = n·g mod 1`.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::AnalysisError;
use crate::bundle::{frac, CircleExtension};
use crate::dynamics::observable::ModeObservable;
use crate::dynamics::sum::pairwise_sum_f64;

/// Squared condition number above which the solve is regularized.
pub const COND_SQ_LIMIT: f64 = 1e12;
const MAX_RELIFTS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohomResidualReport {
    pub mode: i64,
    pub basis_size: usize,
    pub orbit_length: usize,
    pub start: f64,
    /// RMS over the orbit of `(u(Tx) − u(x) − n·g(x))` reduced to `(−½, ½]`.
    pub residual: f64,
    pub condition_number_sq: f64,
    pub ill_conditioned: bool,
    /// Coefficients of `cos(2πjx/|I|)` then `sin(2πjx/|I|)`, `j = 1..=B/2`.
    pub coefficients: Vec<f64>,
}

fn basis_row(x: f64, half: usize, total: f64, out: &mut [f64]) {
    for j in 1..=half {
        let a = TAU * j as f64 * x / total;
        out[j - 1] = a.cos();
        out[half + j - 1] = a.sin();
    }
}

fn circular_rms(r: &DVector<f64>) -> f64 {
    let sq: Vec<f64> = r.iter().map(|v| (v - v.round()).powi(2)).collect();
    (pairwise_sum_f64(&sq) / r.len() as f64).sqrt()
}

/// Best circular RMS residual of `u∘T − u ≈ n·g` over a `B`-term Fourier
/// basis, along the orbit of `start` of length `N`.
///
/// The additive problem needs a lift of `n·g` to `ℝ`. Two starting lifts are
/// tried, the raw values and their representatives in `(−½, ½]`; each is
/// then re-lifted by the integer parts of the residual until stable. The
/// smallest residual encountered is reported.
pub fn cohomological_residual<E: CircleExtension>(
    ext: &E,
    n: i64,
    basis: usize,
    orbit_len: usize,
    start: f64,
) -> Result<CohomResidualReport, AnalysisError> {
    if basis < 4 {
        return Err(AnalysisError::BasisTooSmall(basis));
    }
    if orbit_len < 10 * basis {
        return Err(AnalysisError::OrbitTooShort { len: orbit_len, basis });
    }
    let map = ext.base();
    let total = map.total_length();
    let mut xs = Vec::with_capacity(orbit_len + 1);
    xs.push(start);
    xs.extend(map.orbit(start, orbit_len)?.points);
    let half = basis / 2;
    let cols = 2 * half;
    let mut a = DMatrix::<f64>::zeros(orbit_len, cols);
    let mut cur = vec![0.0; cols];
    let mut next = vec![0.0; cols];
    basis_row(xs[0], half, total, &mut cur);
    for k in 0..orbit_len {
        basis_row(xs[k + 1], half, total, &mut next);
        for c in 0..cols {
            a[(k, c)] = next[c] - cur[c];
        }
        std::mem::swap(&mut cur, &mut next);
    }
    let target: Vec<f64> = xs[..orbit_len]
        .iter()
        .map(|&x| n as f64 * ext.skewing(map.locate(x), x))
        .collect();

    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition_number_sq = if smin > 0.0 { (smax / smin).powi(2) } else { f64::INFINITY };
    let ill_conditioned = condition_number_sq > COND_SQ_LIMIT;
    let eps = if ill_conditioned { smax * 1e-6 } else { smax * 1e-14 };

    let mut best: Option<(f64, DVector<f64>)> = None;
    for centered in [false, true] {
        let mut y = DVector::from_iterator(orbit_len, target.iter().map(|&v| if centered { v - v.round() } else { v }));
        for _ in 0..MAX_RELIFTS {
            let c = svd.solve(&y, eps).expect("singular vectors were computed");
            let r = &a * &c - &y;
            let rms = circular_rms(&r);
            if best.as_ref().is_none_or(|b| rms < b.0) {
                best = Some((rms, c));
            }
            let shift = r.map(f64::round);
            if shift.iter().all(|&k| k == 0.0) {
                break;
            }
            y += shift;
        }
    }
    let (residual, c) = best.expect("at least one solve");
    Ok(CohomResidualReport {
        mode: n,
        basis_size: basis,
        orbit_length: orbit_len,
        start,
        residual,
        condition_number_sq,
        ill_conditioned,
        coefficients: c.iter().copied().collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohomSweep {
    pub reports: Vec<CohomResidualReport>,
    /// Consecutive differences of the residuals as the basis grows.
    pub trend: Vec<f64>,
    pub floor: f64,
}

pub fn cohomological_sweep<E: CircleExtension>(
    ext: &E,
    n: i64,
    bases: &[usize],
    orbit_len: usize,
    start: f64,
) -> Result<CohomSweep, AnalysisError> {
    let reports = bases
        .iter()
        .map(|&b| cohomological_residual(ext, n, b, orbit_len, start))
        .collect::<Result<Vec<_>, _>>()?;
    let trend = reports.windows(2).map(|w| w[1].residual - w[0].residual).collect();
    let floor = reports.iter().map(|r| r.residual).fold(f64::INFINITY, f64::min);
    Ok(CohomSweep { reports, trend, floor })
}

/// `‖F∘T̂ − F‖` for `F = Σ` of the given components, on a midpoint grid.
///
/// Components of equal mode are added; distinct modes are orthogonal in the
/// fiber, so the norm splits mode by mode.
pub fn furstenberg_defect<E: CircleExtension>(
    ext: &E,
    components: &[ModeObservable],
    grid: usize,
) -> Result<f64, AnalysisError> {
    let map = ext.base();
    let total = map.total_length();
    let mut modes: Vec<i64> = components.iter().map(|c| c.mode).collect();
    modes.sort_unstable();
    modes.dedup();
    let mut terms = Vec::with_capacity(grid * modes.len());
    for i in 0..grid {
        let x = (i as f64 + 0.5) * total / grid as f64;
        let a = map.locate(x);
        let tx = map.apply_in(a, x);
        let g = ext.skewing(a, x);
        for &m in &modes {
            let (mut at_x, mut at_tx) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for c in components.iter().filter(|c| c.mode == m) {
                at_x += c.base.eval(x);
                at_tx += c.base.eval(tx);
            }
            let v = at_tx * Complex64::cis(TAU * m as f64 * frac(g)) - at_x;
            terms.push(v.norm_sqr());
        }
    }
    Ok((pairwise_sum_f64(&terms) / grid as f64).sqrt())
}

/// `min ‖F∘T̂ − F‖` over unit-norm `F = c(x)·e^{2πinρ}` with `c` spanned by
/// `e^{2πikx/|I|}`, `k = −B/2..B/2`, evaluated on a midpoint grid.
pub fn furstenberg_best_defect<E: CircleExtension>(
    ext: &E,
    n: i64,
    basis: usize,
    grid: usize,
) -> Result<f64, AnalysisError> {
    if basis < 4 {
        return Err(AnalysisError::BasisTooSmall(basis));
    }
    let map = ext.base();
    let total = map.total_length();
    let half = (basis / 2) as i64;
    let ks: Vec<i64> = (-half..half).collect();
    let norm = 1.0 / (grid as f64).sqrt();
    let mut m = DMatrix::<Complex64>::zeros(grid, ks.len());
    for i in 0..grid {
        let x = (i as f64 + 0.5) * total / grid as f64;
        let a = map.locate(x);
        let tx = map.apply_in(a, x);
        let twist = Complex64::cis(TAU * n as f64 * frac(ext.skewing(a, x)));
        for (j, &k) in ks.iter().enumerate() {
            let e_x = Complex64::cis(TAU * frac(k as f64 * x / total));
            let e_tx = Complex64::cis(TAU * frac(k as f64 * tx / total));
            m[(i, j)] = (e_tx * twist - e_x) * norm;
        }
    }
    Ok(m.singular_values().min())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{build_skew_product, GeneralSkew};
    use crate::iet::{IetMap, IetSpec, Permutation};

    fn golden_map() -> IetMap {
        let a = (5f64.sqrt() - 1.0) / 2.0;
        IetMap::new(IetSpec::new(Permutation::from_monodromy(&[2, 1]).unwrap(), vec![1.0 - a, a]).unwrap())
    }

    #[test]
    fn coboundary_is_solved() {
        let ext = GeneralSkew::coboundary(golden_map(), |x| 0.3 * (TAU * x).cos());
        let r = cohomological_residual(&ext, 1, 8, 1000, 0.1234).unwrap();
        assert!(r.residual < 1e-6, "{r:?}");
        assert!((r.coefficients[0] - 0.3).abs() < 1e-6);
    }

    #[test]
    fn zero_skewing_is_solved_by_zero() {
        let ext = GeneralSkew::new(golden_map(), |_| 0.0);
        let r = cohomological_residual(&ext, 1, 8, 1000, 0.1234).unwrap();
        assert_eq!(r.residual, 0.0);
        assert!(r.coefficients.iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn argument_checks() {
        let ext = GeneralSkew::new(golden_map(), |_| 0.0);
        assert_eq!(cohomological_residual(&ext, 1, 2, 1000, 0.1), Err(AnalysisError::BasisTooSmall(2)));
        assert!(matches!(cohomological_residual(&ext, 1, 8, 50, 0.1), Err(AnalysisError::OrbitTooShort { .. })));
    }

    #[test]
    fn furstenberg_controls() {
        let skew = build_skew_product(golden_map(), vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        let c = ModeObservable::one(0);
        assert_eq!(furstenberg_defect(&skew, &[c], 256).unwrap(), 0.0);

        let u0 = |x: f64| 0.3 * (TAU * x).cos();
        let ext = GeneralSkew::coboundary(golden_map(), u0);
        let f = ModeObservable::custom(1, move |x| Complex64::cis(-TAU * u0(x)), vec![], "e^{-2πi u0}");
        assert!(furstenberg_defect(&ext, &[f], 1024).unwrap() < 1e-8);
    }
}
