//! Heisenberg circle bundles: integrality, admissible offsets, holonomy and
//! the first-return affine skew product.
//!
//! Units are normalized so the fiber is `ℝ/ℤ` and parallel transport around
//! a disk-bounding loop rotates the fiber by the enclosed area mod 1.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::iet::{omega_matrix, sigma_permutation, IetError, IetMap, IetSpec, Permutation, Step};
use crate::suspension::{
    canonical_tau, cone_contains, heights_cone_contains, surface_area, Suspension, SuspensionError,
};

/// Tolerance on the integrality of the area.
pub const WEIL_TOL: f64 = 1e-9;
/// Tolerance on the orbit constraints, mod 1.
pub const CONSTRAINT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BundleError {
    #[error("{what} has {found} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("area {0} is not an integer")]
    NotWeilIntegral(f64),
    #[error("heights are not realized by any suspension of this exchange")]
    HeightsNotInCone,
    #[error(transparent)]
    Suspension(#[from] SuspensionError),
}

/// Representative of `x mod 1` in `[0, 1)`.
pub fn frac(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Representative of `x mod 1` in `(−½, ½]`.
pub fn signed_frac(x: f64) -> f64 {
    let r = frac(x);
    if r > 0.5 {
        r - 1.0
    } else {
        r
    }
}

/// `min(|x−y| mod 1, 1 − (|x−y| mod 1))`.
pub fn circular_distance(x: f64, y: f64) -> f64 {
    let r = frac((x - y).abs());
    r.min(1.0 - r)
}

pub fn weil_check(lambda: &[f64], h: &[f64]) -> bool {
    let area = surface_area(lambda, h);
    (area - area.round()).abs() <= WEIL_TOL
}

/// Fiber rotation around the boundary of a `width × height` rectangle.
pub fn rect_holonomy(width: f64, height: f64) -> f64 {
    frac(width * height)
}

/// `coeffs · b ≡ rhs (mod 1)`, one per singularity orbit avoiding 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitConstraint {
    pub orbit: Vec<usize>,
    pub coeffs: Vec<i64>,
    pub rhs: f64,
}

impl OrbitConstraint {
    pub fn lhs(&self, b: &[f64]) -> f64 {
        self.coeffs.iter().zip(b).map(|(&c, x)| c as f64 * x).sum()
    }

    pub fn residual(&self, b: &[f64]) -> f64 {
        circular_distance(self.lhs(b), self.rhs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibleSpace {
    pub constraints: Vec<OrbitConstraint>,
    pub codimension: usize,
}

/// Constraints of an orbit, without the integrality and cone checks.
pub fn orbit_constraints(perm: &Permutation, lambda: &[f64], h: &[f64]) -> Vec<OrbitConstraint> {
    let d = perm.d();
    let sing = sigma_permutation(perm);
    sing.nonzero_orbits()
        .map(|o| {
            let member = |k: usize| k >= 1 && o.contains(&k);
            let coeffs = (1..=d).map(|k| i64::from(member(k)) - i64::from(member(k - 1))).collect();
            let flux: f64 = o.iter().filter(|&&k| k >= 1).map(|&k| lambda[k - 1] * h[k - 1]).sum();
            let mut orbit = o.clone();
            orbit.sort_unstable();
            OrbitConstraint { orbit, coeffs, rhs: frac(-flux) }
        })
        .collect()
}

fn check_len(what: &'static str, v: usize, d: usize) -> Result<(), BundleError> {
    if v == d {
        Ok(())
    } else {
        Err(BundleError::LengthMismatch { what, expected: d, found: v })
    }
}

pub fn admissible_b_space(spec: &IetSpec, h: &[f64]) -> Result<AdmissibleSpace, BundleError> {
    check_len("h", h.len(), spec.d())?;
    match heights_cone_contains(spec.perm(), h) {
        Ok(Some(_)) => {}
        Ok(None) | Err(SuspensionError::InconsistentSystem) => return Err(BundleError::HeightsNotInCone),
        Err(e) => return Err(e.into()),
    }
    if !weil_check(spec.lambda(), h) {
        return Err(BundleError::NotWeilIntegral(surface_area(spec.lambda(), h)));
    }
    let constraints = orbit_constraints(spec.perm(), spec.lambda(), h);
    Ok(AdmissibleSpace { codimension: constraints.len(), constraints })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub heights_in_cone: bool,
    pub tau_witness: Option<Vec<f64>>,
    pub area: f64,
    pub weil_integral: bool,
    pub constraints: Vec<OrbitConstraint>,
    pub constraint_residuals: Vec<f64>,
    pub admissible: bool,
}

pub fn is_admissible(spec: &IetSpec, h: &[f64], b: &[f64]) -> Result<AdmissibilityReport, BundleError> {
    check_len("h", h.len(), spec.d())?;
    check_len("b", b.len(), spec.d())?;
    let tau_witness = heights_cone_contains(spec.perm(), h).ok().flatten();
    let area = surface_area(spec.lambda(), h);
    let weil_integral = weil_check(spec.lambda(), h);
    let constraints = orbit_constraints(spec.perm(), spec.lambda(), h);
    let constraint_residuals: Vec<f64> = constraints.iter().map(|c| c.residual(b)).collect();
    let admissible = tau_witness.is_some()
        && weil_integral
        && constraint_residuals.iter().all(|&r| r < CONSTRAINT_TOL);
    Ok(AdmissibilityReport {
        heights_in_cone: tau_witness.is_some(),
        tau_witness,
        area,
        weil_integral,
        constraints,
        constraint_residuals,
        admissible,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibleSample {
    pub tau: Vec<f64>,
    pub h: Vec<f64>,
    pub b: Vec<f64>,
}

/// Deterministic sample of `(h, b)` from the admissible set.
///
/// `τ` is drawn uniformly from a box and rejected outside the cone, falling
/// back to shrinking perturbations of a canonical cone point. Heights are
/// rescaled to the nearest positive integer area; `b` is drawn uniformly and
/// projected onto the constraint set by a least-norm correction.
pub fn sample_admissible(spec: &IetSpec, seed: u64) -> AdmissibleSample {
    let perm = spec.perm();
    let d = perm.d();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let box_half = d as f64;
    let mut tau = None;
    for _ in 0..2000 {
        let cand: Vec<f64> = (0..d).map(|_| rng.gen_range(-box_half..box_half)).collect();
        if cone_contains(perm, &cand) {
            tau = Some(cand);
            break;
        }
    }
    let mut tau = tau.unwrap_or_else(|| {
        let base = canonical_tau(perm);
        let mut scale = 0.5;
        loop {
            let cand: Vec<f64> = base.iter().map(|t| t + scale * rng.gen_range(-1.0..1.0)).collect();
            if cone_contains(perm, &cand) {
                break cand;
            }
            scale *= 0.5;
            if scale < 1e-6 {
                break base;
            }
        }
    });
    let omega = omega_matrix(perm);
    let heights = |tau: &[f64]| -> Vec<f64> {
        omega
            .iter()
            .map(|r| -r.iter().zip(tau).map(|(&o, t)| o as f64 * t).sum::<f64>())
            .collect()
    };
    let area = surface_area(spec.lambda(), &heights(&tau));
    let target = area.round().max(1.0);
    for t in tau.iter_mut() {
        *t *= target / area;
    }
    let h = heights(&tau);

    let b = offsets_with(spec, &h, &mut rng);
    AdmissibleSample { tau, h, b }
}

/// Uniform offsets projected onto the orbit constraints for heights `h`.
pub fn sample_offsets(spec: &IetSpec, h: &[f64], seed: u64) -> Vec<f64> {
    offsets_with(spec, h, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn offsets_with(spec: &IetSpec, h: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let d = spec.d();
    let mut b: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
    let constraints = orbit_constraints(spec.perm(), spec.lambda(), h);
    if !constraints.is_empty() {
        let k = constraints.len();
        let c = DMatrix::from_fn(k, d, |i, j| constraints[i].coeffs[j] as f64);
        let r = DVector::from_fn(k, |i, _| signed_frac(constraints[i].lhs(&b) - constraints[i].rhs));
        let gram = &c * c.transpose();
        let y = gram.lu().solve(&r).expect("orbit constraints are independent");
        let delta = c.transpose() * y;
        for (bj, dj) in b.iter_mut().zip(delta.iter()) {
            *bj = frac(*bj - dj);
        }
    }
    b
}

/// Residual of one orbit constraint recomputed from rectangle holonomies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolonomyResidual {
    /// `Σ λ(𝒪)_α · (fiber gain of T̂ at ∂I_α)`.
    pub lhs: f64,
    /// `−Σ_{k∈𝒪} hol(∂R⁰_k)`.
    pub rhs: f64,
    pub residual: f64,
    /// Residual under the opposite sign convention for `rhs`.
    pub flipped_residual: f64,
}

/// Recomputes an orbit constraint from the geometry: the left-hand side from
/// the skew product's fiber gain at the left endpoints of the intervals, the
/// right-hand side from the holonomy around each upper rectangle of the orbit.
pub fn orbit_constraint_holonomy_oracle(
    suspension: &Suspension,
    skew: &SkewProduct,
    orbit: &[usize],
) -> HolonomyResidual {
    let d = suspension.d();
    let member = |k: usize| k >= 1 && orbit.contains(&k);
    let lhs: f64 = (1..=d)
        .map(|k| {
            let c = i64::from(member(k)) - i64::from(member(k - 1));
            let a = k - 1;
            c as f64 * skew.skewing(a, skew.base().breakpoints()[a])
        })
        .sum();
    let rhs: f64 = -orbit
        .iter()
        .filter(|&&k| k >= 1)
        .map(|&k| {
            let r = suspension.rectangles[k - 1].upper;
            rect_holonomy(r.x1 - r.x0, r.y1 - r.y0)
        })
        .sum::<f64>();
    HolonomyResidual {
        lhs,
        rhs,
        residual: circular_distance(lhs, rhs),
        flipped_residual: circular_distance(lhs, -rhs),
    }
}

/// A circle extension `(x, ρ) ↦ (Tx, ρ + g(x))` of an interval exchange.
pub trait CircleExtension: Sync {
    fn base(&self) -> &IetMap;

    /// `g(x)` for `x` in interval `a`; not reduced mod 1.
    fn skewing(&self, a: usize, x: f64) -> f64;

    fn apply(&self, x: f64, rho: f64) -> Result<(f64, f64), IetError> {
        let t = self.base();
        t.apply(x)?;
        let a = t.locate(x);
        Ok((t.apply_in(a, x), frac(rho + self.skewing(a, x))))
    }

    fn apply_flagged(&self, x: f64, rho: f64) -> Result<(Step, f64), IetError> {
        let t = self.base();
        let step = t.apply_flagged(x)?;
        let a = t.locate(x);
        Ok((step, frac(rho + self.skewing(a, x))))
    }

    /// Birkhoff sum `G_n(x) = Σ_{k<n} g(Tᵏx)`, reduced mod 1, together
    /// with `Tⁿx` and the discontinuity flag.
    fn skewing_sum(&self, x: f64, n: usize) -> Result<SkewingSum, IetError> {
        let t = self.base();
        if n == 0 {
            t.apply(x)?;
        }
        let mut y = x;
        let mut g = 0.0;
        let mut reliable = true;
        for _ in 0..n {
            let (step, _) = self.apply_flagged(y, 0.0)?;
            g = frac(g + self.skewing(t.locate(y), y));
            reliable &= !step.near_breakpoint;
            y = step.x;
        }
        Ok(SkewingSum { value: g, endpoint: y, reliable })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewingSum {
    pub value: f64,
    pub endpoint: f64,
    pub reliable: bool,
}

/// The affine skew product `T̂(x, ρ) = (x + w_α, ρ + h_α(x − ∂I_α) + b_α)`.
#[derive(Debug, Clone)]
pub struct SkewProduct {
    base: IetMap,
    h: Vec<f64>,
    b: Vec<f64>,
}

pub fn build_skew_product(base: IetMap, h: Vec<f64>, b: Vec<f64>) -> Result<SkewProduct, BundleError> {
    let d = base.d();
    check_len("h", h.len(), d)?;
    check_len("b", b.len(), d)?;
    let b = b.into_iter().map(frac).collect();
    Ok(SkewProduct { base, h, b })
}

impl SkewProduct {
    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn with_b(&self, b: Vec<f64>) -> SkewProduct {
        SkewProduct { base: self.base.clone(), h: self.h.clone(), b: b.into_iter().map(frac).collect() }
    }
}

impl CircleExtension for SkewProduct {
    fn base(&self) -> &IetMap {
        &self.base
    }

    #[inline]
    fn skewing(&self, a: usize, x: f64) -> f64 {
        self.h[a] * (x - self.base.breakpoints()[a]) + self.b[a]
    }
}

/// A circle extension with an arbitrary skewing function.
#[derive(Clone)]
pub struct GeneralSkew {
    base: IetMap,
    g: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl GeneralSkew {
    pub fn new(base: IetMap, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        GeneralSkew { base, g: Arc::new(g) }
    }

    /// `g = u∘T − u`, a coboundary by construction.
    pub fn coboundary(base: IetMap, u: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let t = base.clone();
        GeneralSkew::new(base, move |x| u(t.apply(x).expect("x in domain")) - u(x))
    }
}

impl CircleExtension for GeneralSkew {
    fn base(&self) -> &IetMap {
        &self.base
    }

    fn skewing(&self, _a: usize, x: f64) -> f64 {
        (self.g)(x)
    }
}

/// Validated bundle data: a suspension together with offsets `b`.
#[derive(Debug, Clone)]
pub struct BundleSpec {
    pub suspension: Suspension,
    pub b: Vec<f64>,
    pub report: AdmissibilityReport,
}

impl BundleSpec {
    pub fn new(spec: &IetSpec, suspension: Suspension, b: Vec<f64>) -> Result<Self, BundleError> {
        let report = is_admissible(spec, &suspension.h, &b)?;
        if !report.weil_integral {
            return Err(BundleError::NotWeilIntegral(report.area));
        }
        Ok(BundleSpec { suspension, b, report })
    }

    pub fn skew_product(&self, spec: &IetSpec) -> SkewProduct {
        build_skew_product(IetMap::new(spec.clone()), self.suspension.h.clone(), self.b.clone())
            .expect("lengths checked on construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suspension::build_zippered_rectangles;

    fn rotation() -> IetSpec {
        IetSpec::new(Permutation::from_monodromy(&[2, 1]).unwrap(), vec![0.4, 0.6]).unwrap()
    }

    fn genus_example() -> IetSpec {
        IetSpec::new(Permutation::from_monodromy(&[3, 1, 2]).unwrap(), vec![0.4, 0.3, 0.3]).unwrap()
    }

    #[test]
    fn weil_examples() {
        assert!(weil_check(&[0.4, 0.6], &[1.0, 1.0]));
        assert!(!weil_check(&[0.4, 0.6], &[1.0, 2.0]));
        assert!(weil_check(&[0.4, 0.6], &[0.0, 0.0]));
    }

    #[test]
    fn admissible_space_examples() {
        assert_eq!(admissible_b_space(&rotation(), &[1.0, 1.0]).unwrap().codimension, 0);
        let s = admissible_b_space(&genus_example(), &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(s.codimension, 1);
        assert_eq!(s.constraints[0].coeffs, vec![0, 1, -1]);
        assert!((s.constraints[0].rhs - 0.4).abs() < 1e-12);
        let rev = IetSpec::new(Permutation::from_monodromy(&[4, 3, 2, 1]).unwrap(), vec![0.25; 4]).unwrap();
        let tau = canonical_tau(rev.perm());
        let h = crate::suspension::heights_from_tau(rev.perm(), &tau).unwrap();
        let scale = 1.0 / surface_area(rev.lambda(), &h);
        let h: Vec<f64> = h.iter().map(|x| x * scale).collect();
        assert_eq!(admissible_b_space(&rev, &h).unwrap().codimension, 0);
        assert_eq!(
            admissible_b_space(&rotation(), &[1.0, 2.0]),
            Err(BundleError::NotWeilIntegral(1.6))
        );
    }

    #[test]
    fn admissibility_examples() {
        let spec = genus_example();
        assert!(is_admissible(&spec, &[2.0, 2.0, 2.0], &[0.7, 0.4, 0.0]).unwrap().admissible);
        assert!(!is_admissible(&spec, &[2.0, 2.0, 2.0], &[0.0, 0.0, 0.0]).unwrap().admissible);
        assert!(is_admissible(&rotation(), &[1.0, 1.0], &[0.123, 0.9]).unwrap().admissible);
    }

    #[test]
    fn sampling_is_deterministic_and_admissible() {
        let spec = genus_example();
        let a = sample_admissible(&spec, 42);
        assert_eq!(a, sample_admissible(&spec, 42));
        let rep = is_admissible(&spec, &a.h, &a.b).unwrap();
        assert!(rep.admissible, "{rep:?}");
        let lhs = a.b[1] - a.b[2];
        assert!(circular_distance(lhs, -spec.lambda()[1] * a.h[1]) < 1e-12);
    }

    #[test]
    fn skew_product_examples() {
        let t = IetMap::new(rotation());
        let s = build_skew_product(t, vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        let (x, r) = s.apply(0.1, 0.0).unwrap();
        assert!((x - 0.7).abs() < 1e-15 && (r - 0.1).abs() < 1e-15);
        let (x, r) = s.apply(0.5, 0.25).unwrap();
        assert!((x - 0.1).abs() < 1e-15 && (r - 0.35).abs() < 1e-15);
        let s = s.with_b(vec![0.5, 0.5]);
        let (_, r) = s.apply(0.4, 0.0).unwrap();
        assert_eq!(r, 0.5);

        let t = IetMap::new(genus_example());
        let s = build_skew_product(t, vec![2.0; 3], vec![0.7, 0.4, 0.0]).unwrap();
        let (x, r) = s.apply(0.1, 0.0).unwrap();
        assert!((x - 0.7).abs() < 1e-15 && (r - 0.9).abs() < 1e-15);
    }

    #[test]
    fn rect_holonomy_examples() {
        assert_eq!(rect_holonomy(0.5, 0.5), 0.25);
        assert_eq!(rect_holonomy(1.0, 1.0), 0.0);
        assert_eq!(rect_holonomy(0.0, 3.0), 0.0);
    }

    #[test]
    fn holonomy_oracle_on_the_example() {
        let spec = genus_example();
        let susp = build_zippered_rectangles(&spec, &[2.0, -1.0, -1.0]).unwrap();
        let skew = build_skew_product(IetMap::new(spec), susp.h.clone(), vec![0.7, 0.4, 0.0]).unwrap();
        let r = orbit_constraint_holonomy_oracle(&susp, &skew, &[2]);
        assert!(r.residual < 1e-10, "{r:?}");
        let bumped = skew.with_b(vec![0.7, 0.5, 0.0]);
        let r = orbit_constraint_holonomy_oracle(&susp, &bumped, &[2]);
        assert!((r.residual - 0.1).abs() < 1e-9);
    }

    #[test]
    fn circular_distance_wraps() {
        assert!((circular_distance(0.95, 0.05) - 0.1).abs() < 1e-15);
        assert!((circular_distance(-0.6, 0.4)).abs() < 1e-15);
        assert_eq!(signed_frac(0.75), -0.25);
    }
}
