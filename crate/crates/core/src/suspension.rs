//! Veech's zippered-rectangle suspension of an interval exchange.

use num_rational::BigRational;
use serde::Serialize;
use thiserror::Error;

use crate::iet::{kernel_basis, omega_matrix, translation_vector, IetSpec, Permutation};
use crate::linalg::{dot, mat_vec, solve_particular, strict_feasible_point, Scalar, StrictIneq};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SuspensionError {
    #[error("{what} has {found} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("tau is not in the suspension cone")]
    TauNotInCone,
    #[error("heights are not in the image of the Omega matrix")]
    InconsistentSystem,
}

fn check_len(what: &'static str, v: usize, d: usize) -> Result<(), SuspensionError> {
    if v == d {
        Ok(())
    } else {
        Err(SuspensionError::LengthMismatch { what, expected: d, found: v })
    }
}

/// The `2(d−1)` rows `r` of the cone, each meaning `r · τ > 0`.
pub fn cone_rows(perm: &Permutation) -> Vec<Vec<i64>> {
    let d = perm.d();
    let bottom = perm.bottom_positions();
    let mut rows = Vec::with_capacity(2 * d.saturating_sub(1));
    for k in 1..d {
        rows.push((0..d).map(|a| i64::from(a < k)).collect());
        rows.push((0..d).map(|a| -i64::from(bottom[a] < k)).collect());
    }
    rows
}

fn rows_as<S: Scalar>(rows: &[Vec<i64>]) -> Vec<Vec<S>> {
    rows.iter().map(|r| r.iter().map(|&v| S::from_i64(v)).collect()).collect()
}

/// Membership of `τ` (top order) in the open cone `T_π⁺`.
pub fn cone_contains(perm: &Permutation, tau: &[f64]) -> bool {
    tau.len() == perm.d()
        && cone_rows(perm)
            .iter()
            .all(|r| r.iter().zip(tau).map(|(&c, t)| c as f64 * t).sum::<f64>() > 0.0)
}

pub fn cone_contains_exact(perm: &Permutation, tau: &[BigRational]) -> bool {
    tau.len() == perm.d()
        && rows_as::<BigRational>(&cone_rows(perm))
            .iter()
            .all(|r| Scalar::is_strictly_positive(&dot(r, tau)))
}

/// `τ_α = π₁(α) − π₀(α)`, which lies in the cone of every irreducible pair.
pub fn canonical_tau(perm: &Permutation) -> Vec<f64> {
    perm.bottom_positions()
        .iter()
        .enumerate()
        .map(|(a, &b)| b as f64 - a as f64)
        .collect()
}

fn neg_omega_times<S: Scalar>(perm: &Permutation, tau: &[S]) -> Vec<S> {
    let m: Vec<Vec<S>> = rows_as(&omega_matrix(perm));
    mat_vec(&m, tau).into_iter().map(|v| -v).collect()
}

/// `h = −Ω_π τ`.
pub fn heights_from_tau(perm: &Permutation, tau: &[f64]) -> Result<Vec<f64>, SuspensionError> {
    check_len("tau", tau.len(), perm.d())?;
    if !cone_contains(perm, tau) {
        return Err(SuspensionError::TauNotInCone);
    }
    Ok(neg_omega_times(perm, tau))
}

pub fn heights_from_tau_exact(
    perm: &Permutation,
    tau: &[BigRational],
) -> Result<Vec<BigRational>, SuspensionError> {
    check_len("tau", tau.len(), perm.d())?;
    if !cone_contains_exact(perm, tau) {
        return Err(SuspensionError::TauNotInCone);
    }
    Ok(neg_omega_times(perm, tau))
}

fn heights_cone_search<S: Scalar>(perm: &Permutation, h: &[S]) -> Result<Option<Vec<S>>, SuspensionError> {
    check_len("h", h.len(), perm.d())?;
    let neg_omega: Vec<Vec<S>> = omega_matrix(perm)
        .iter()
        .map(|r| r.iter().map(|&v| S::from_i64(-v)).collect())
        .collect();
    let tau0 = solve_particular(&neg_omega, h).ok_or(SuspensionError::InconsistentSystem)?;
    if h.iter().any(|v| !(v.clone() > S::zero())) {
        return Ok(None);
    }
    let kernel: Vec<Vec<S>> = rows_as(&kernel_basis(perm));
    let rows: Vec<Vec<S>> = rows_as(&cone_rows(perm));
    let ineqs: Vec<StrictIneq<S>> = rows
        .iter()
        .map(|r| StrictIneq {
            coeffs: kernel.iter().map(|v| dot(r, v)).collect(),
            constant: dot(r, &tau0),
        })
        .collect();
    let Some(c) = strict_feasible_point(&ineqs, kernel.len()) else {
        return Ok(None);
    };
    let mut tau = tau0;
    for (ci, v) in c.iter().zip(&kernel) {
        for (t, vj) in tau.iter_mut().zip(v) {
            *t = t.clone() + ci.clone() * vj.clone();
        }
    }
    Ok(Some(tau))
}

/// Membership of `h` in `H_π⁺ = −Ω_π(T_π⁺)`, with a witness `τ` on success.
///
/// Strict inequalities must clear a slack of `1e-9` on this floating path.
pub fn heights_cone_contains(perm: &Permutation, h: &[f64]) -> Result<Option<Vec<f64>>, SuspensionError> {
    heights_cone_search(perm, h)
}

/// Exact counterpart of [`heights_cone_contains`].
pub fn heights_cone_contains_exact(
    perm: &Permutation,
    h: &[BigRational],
) -> Result<Option<Vec<BigRational>>, SuspensionError> {
    heights_cone_search(perm, h)
}

pub fn surface_area(lambda: &[f64], h: &[f64]) -> f64 {
    lambda.iter().zip(h).map(|(l, h)| l * h).sum()
}

/// Open rectangle `(x0, x1) × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    /// Corners counter-clockwise from the lower left.
    pub fn corners(&self) -> [(f64, f64); 4] {
        [(self.x0, self.y0), (self.x1, self.y0), (self.x1, self.y1), (self.x0, self.y1)]
    }
}

/// Vertical segment `{x} × [y0, y1]`, possibly empty or reversed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VSegment {
    pub x: f64,
    pub y0: f64,
    pub y1: f64,
}

impl VSegment {
    pub fn length(&self) -> f64 {
        (self.y1 - self.y0).abs()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RectanglePair {
    pub symbol: String,
    /// `R_α⁰`, above the cross section.
    pub upper: Rect,
    /// `R_α¹`, below the cross section.
    pub lower: Rect,
}

/// The translation identifying `R_α⁰` with `R_α¹`.
#[derive(Debug, Clone, Serialize)]
pub struct Gluing {
    pub symbol: String,
    pub dx: f64,
    pub dy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtraSegment {
    pub segment: VSegment,
    /// `{|I|} × [0, Στ]`, the segment it is glued to by translation.
    pub glued_to: VSegment,
}

#[derive(Debug, Clone, Serialize)]
pub struct Suspension {
    pub alphabet: Vec<String>,
    pub lambda: Vec<f64>,
    pub tau: Vec<f64>,
    pub h: Vec<f64>,
    pub w: Vec<f64>,
    pub rectangles: Vec<RectanglePair>,
    /// `S_α⁰` per letter.
    pub upper_segments: Vec<VSegment>,
    /// `S_α¹` per letter.
    pub lower_segments: Vec<VSegment>,
    /// `S̃`; `None` when `Στ = 0`.
    pub extra: Option<ExtraSegment>,
    pub gluings: Vec<Gluing>,
    pub area: f64,
    #[serde(skip)]
    perm: Permutation,
}

/// How one vertical side of `R_α⁰` is covered: a stretch on an upper zipper
/// segment followed by a stretch whose translate lies on a lower one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideCover {
    pub upper: f64,
    pub lower: f64,
}

pub fn build_zippered_rectangles(spec: &IetSpec, tau: &[f64]) -> Result<Suspension, SuspensionError> {
    let perm = spec.perm();
    let h = heights_from_tau(perm, tau)?;
    let d = perm.d();
    let lambda = spec.lambda();
    let bottom = perm.bottom_positions();
    let by_bottom = perm.letters_by_bottom();
    let w = translation_vector(perm, lambda);

    let mut top_edge = vec![0.0; d + 1];
    let mut t = vec![0.0; d + 1];
    for a in 0..d {
        top_edge[a + 1] = top_edge[a] + lambda[a];
        t[a + 1] = t[a] + tau[a];
    }
    let mut bottom_edge = vec![0.0; d + 1];
    let mut s = vec![0.0; d + 1];
    for (k, &a) in by_bottom.iter().enumerate() {
        bottom_edge[k + 1] = bottom_edge[k] + lambda[a];
        s[k + 1] = s[k] + tau[a];
    }
    let total = top_edge[d];
    let sum_tau = t[d];

    let mut rectangles = Vec::with_capacity(d);
    let mut upper_segments = Vec::with_capacity(d);
    let mut lower_segments = Vec::with_capacity(d);
    let mut gluings = Vec::with_capacity(d);
    for a in 0..d {
        let j = bottom[a];
        let symbol = perm.alphabet()[a].clone();
        rectangles.push(RectanglePair {
            symbol: symbol.clone(),
            upper: Rect { x0: top_edge[a], x1: top_edge[a + 1], y0: 0.0, y1: h[a] },
            lower: Rect { x0: bottom_edge[j], x1: bottom_edge[j + 1], y0: -h[a], y1: 0.0 },
        });
        upper_segments.push(VSegment { x: top_edge[a + 1], y0: 0.0, y1: t[a + 1] });
        lower_segments.push(VSegment { x: bottom_edge[j + 1], y0: s[j + 1], y1: 0.0 });
        gluings.push(Gluing { symbol, dx: w[a], dy: -h[a] });
    }
    let shared = VSegment { x: total, y0: 0.0, y1: sum_tau };
    upper_segments[d - 1] = shared;
    lower_segments[by_bottom[d - 1]] = shared;

    let extra = if sum_tau > 0.0 {
        let a = by_bottom[d - 1];
        Some(ExtraSegment { segment: VSegment { x: top_edge[a + 1], y0: h[a], y1: t[a + 1] }, glued_to: shared })
    } else if sum_tau < 0.0 {
        let a = d - 1;
        let j = bottom[a];
        Some(ExtraSegment {
            segment: VSegment { x: bottom_edge[j + 1], y0: s[j + 1], y1: -h[a] },
            glued_to: shared,
        })
    } else {
        None
    };

    Ok(Suspension {
        alphabet: perm.alphabet().to_vec(),
        lambda: lambda.to_vec(),
        tau: tau.to_vec(),
        area: surface_area(lambda, &h),
        h,
        w,
        rectangles,
        upper_segments,
        lower_segments,
        extra,
        gluings,
        perm: perm.clone(),
    })
}

impl Suspension {
    pub fn perm(&self) -> &Permutation {
        &self.perm
    }

    pub fn d(&self) -> usize {
        self.h.len()
    }

    /// Partial sums `t_k = Σ_{π₀ ≤ k} τ` and `s_k = Σ_{π₁ ≤ k} τ`, `k = 0..=d`.
    pub fn zipper_heights(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.d();
        let mut t = vec![0.0; d + 1];
        let mut s = vec![0.0; d + 1];
        for a in 0..d {
            t[a + 1] = t[a] + self.tau[a];
        }
        for (k, &a) in self.perm.letters_by_bottom().iter().enumerate() {
            s[k + 1] = s[k] + self.tau[a];
        }
        (t, s)
    }

    /// Cover of the left and right sides of `R_α⁰`.
    pub fn side_cover(&self, a: usize) -> (SideCover, SideCover) {
        let (t, s) = self.zipper_heights();
        let j = self.perm.bottom_positions()[a];
        (
            SideCover { upper: t[a], lower: -s[j] },
            SideCover { upper: t[a + 1], lower: -s[j + 1] },
        )
    }

    /// Number of singularities, i.e. of cycles of `σ`.
    pub fn singularity_count(&self) -> usize {
        crate::iet::sigma_permutation(&self.perm).orbits.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iet::IetSpec;

    fn swap() -> Permutation {
        Permutation::from_monodromy(&[2, 1]).unwrap()
    }

    fn p312() -> Permutation {
        Permutation::from_monodromy(&[3, 1, 2]).unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn cone_examples() {
        assert!(cone_contains(&swap(), &[1.0, -0.5]));
        assert!(!cone_contains(&swap(), &[-1.0, 1.0]));
        assert!(cone_contains(&p312(), &[2.0, -1.0, -1.0]));
    }

    #[test]
    fn heights_examples() {
        assert_eq!(heights_from_tau(&swap(), &[1.0, -0.5]).unwrap(), vec![0.5, 1.0]);
        assert_eq!(heights_from_tau(&p312(), &[2.0, -1.0, -1.0]).unwrap(), vec![2.0, 2.0, 2.0]);
        assert_eq!(heights_from_tau(&swap(), &[3.0, -1.5]).unwrap(), vec![1.5, 3.0]);
        assert_eq!(heights_from_tau(&swap(), &[-1.0, 1.0]), Err(SuspensionError::TauNotInCone));
    }

    #[test]
    fn heights_cone_examples() {
        let tau = heights_cone_contains(&swap(), &[0.5, 1.0]).unwrap().unwrap();
        assert!((tau[0] - 1.0).abs() < 1e-12 && (tau[1] + 0.5).abs() < 1e-12);
        assert_eq!(heights_cone_contains(&swap(), &[-1.0, 1.0]).unwrap(), None);
        let h = [q(2, 1), q(2, 1), q(2, 1)];
        let tau = heights_cone_contains_exact(&p312(), &h).unwrap().unwrap();
        assert!(cone_contains_exact(&p312(), &tau));
        assert_eq!(heights_from_tau_exact(&p312(), &tau).unwrap(), h.to_vec());
        // h_B ≠ h_C is outside the image of Ω for this pair.
        assert_eq!(
            heights_cone_contains(&p312(), &[2.0, 1.0, 2.0]),
            Err(SuspensionError::InconsistentSystem)
        );
    }

    #[test]
    fn canonical_tau_is_in_cone() {
        for p in [vec![2, 1], vec![3, 1, 2], vec![4, 3, 2, 1], vec![2, 4, 1, 3]] {
            let perm = Permutation::from_monodromy(&p).unwrap();
            assert!(cone_contains(&perm, &canonical_tau(&perm)), "{p:?}");
        }
    }

    #[test]
    fn zippered_examples() {
        let spec = IetSpec::new(swap(), vec![0.4, 0.6]).unwrap();
        let s = build_zippered_rectangles(&spec, &[1.0, -1.0]).unwrap();
        assert_eq!(s.rectangles.len(), 2);
        assert_eq!(s.h, vec![1.0, 1.0]);
        assert!((s.area - 1.0).abs() < 1e-15);
        assert!(s.extra.is_none());

        let spec = IetSpec::new(p312(), vec![0.4, 0.3, 0.3]).unwrap();
        let s = build_zippered_rectangles(&spec, &[2.0, -1.0, -1.0]).unwrap();
        assert!((s.area - 2.0).abs() < 1e-15);
        assert_eq!(s.singularity_count(), 2);
        for (g, r) in s.gluings.iter().zip(&s.rectangles) {
            assert!((r.upper.x0 + g.dx - r.lower.x0).abs() < 1e-15);
            assert!((r.upper.y1 + g.dy - r.lower.y1).abs() < 1e-15);
        }
    }

    #[test]
    fn extra_segment_sign_cases() {
        let spec = IetSpec::new(swap(), vec![0.4, 0.6]).unwrap();
        let s = build_zippered_rectangles(&spec, &[1.5, -1.0]).unwrap();
        let e = s.extra.unwrap();
        assert!((e.segment.length() - 0.5).abs() < 1e-15);
        assert_eq!(e.glued_to.x, 1.0);
        let s = build_zippered_rectangles(&spec, &[1.0, -1.25]).unwrap();
        let e = s.extra.unwrap();
        assert!((e.segment.length() - 0.25).abs() < 1e-15);
        assert!(e.segment.y0 < 0.0);
    }

    #[test]
    fn area_scales_bilinearly() {
        assert!((surface_area(&[0.4, 0.6], &[1.0, 1.0]) - 1.0).abs() < 1e-15);
        assert!((surface_area(&[0.4, 0.3, 0.3], &[2.0, 2.0, 2.0]) - 2.0).abs() < 1e-15);
        assert!((surface_area(&[0.8, 1.2], &[3.0, 3.0]) - 6.0).abs() < 1e-14);
    }
}
