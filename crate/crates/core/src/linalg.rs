//! Small dense linear algebra over either binary64 or exact rationals.
//!
//! The matrices handled here are d×d with d rarely above ten, so the
//! routines favour clarity over asymptotics. Everything is generic over
//! [`Scalar`], which lets the same elimination and Fourier–Motzkin code run
//! on exact rationals (where it serves as an oracle) and on floats (where it
//! runs with an explicit slack policy).

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// Slack applied to strict inequalities on the floating path.
pub const FLOAT_STRICT_SLACK: f64 = 1e-9;
/// Magnitude below which a float pivot or residual is treated as zero.
pub const FLOAT_ZERO_TOL: f64 = 1e-12;

pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn from_i64(v: i64) -> Self;
    /// Zero test; tolerant on the float path.
    fn is_negligible(&self) -> bool;
    /// Strict positivity; on the float path this requires clearing the slack.
    fn is_strictly_positive(&self) -> bool;
    fn magnitude(&self) -> f64;
    fn as_f64(&self) -> f64;

    fn one() -> Self {
        Self::from_i64(1)
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn is_negligible(&self) -> bool {
        self.abs() <= FLOAT_ZERO_TOL
    }
    fn is_strictly_positive(&self) -> bool {
        *self > FLOAT_STRICT_SLACK
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn as_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(v.into())
    }
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }
    fn is_strictly_positive(&self) -> bool {
        self.is_positive()
    }
    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }
    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

pub fn mat_vec<S: Scalar>(a: &[Vec<S>], v: &[S]) -> Vec<S> {
    a.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
        })
        .collect()
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// Reduced row echelon form of `a` in place; returns the pivot columns.
///
/// Partial pivoting by magnitude keeps the float path stable; on the exact
/// path any non-zero pivot would do and the magnitude rule is harmless.
pub fn rref<S: Scalar>(a: &mut [Vec<S>]) -> Vec<usize> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let best = (r..rows)
            .filter(|&i| !a[i][c].is_negligible())
            .max_by(|&i, &j| a[i][c].magnitude().total_cmp(&a[j][c].magnitude()));
        let Some(p) = best else {
            continue;
        };
        a.swap(r, p);
        let pivot = a[r][c].clone();
        for entry in a[r].iter_mut() {
            *entry = entry.clone() / pivot.clone();
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_negligible() {
                let factor = a[i][c].clone();
                for j in 0..cols {
                    let delta = factor.clone() * a[r][j].clone();
                    a[i][j] = a[i][j].clone() - delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank<S: Scalar>(a: &[Vec<S>]) -> usize {
    let mut m = a.to_vec();
    rref(&mut m).len()
}

/// One solution of `a x = rhs` with free variables set to zero, or `None`
/// when the system is inconsistent.
pub fn solve_particular<S: Scalar>(a: &[Vec<S>], rhs: &[S]) -> Option<Vec<S>> {
    let n = a.first().map_or(0, Vec::len);
    let mut aug: Vec<Vec<S>> = a
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            let mut r = row.clone();
            r.push(b.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.last() == Some(&n) {
        return None;
    }
    // Rows without a pivot must have a vanishing right-hand side.
    for row in aug.iter().skip(pivots.len()) {
        if !row[n].is_negligible() {
            return None;
        }
    }
    let mut x = vec![S::zero(); n];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = aug[r][n].clone();
    }
    // Float path: confirm the residual, since negligible-pivot decisions can
    // hide an inconsistency.
    let back = mat_vec(a, &x);
    for (lhs, b) in back.iter().zip(rhs) {
        let diff = lhs.clone() - b.clone();
        if diff.magnitude() > 1e-9 * (1.0 + b.magnitude()) {
            return None;
        }
    }
    Some(x)
}

/// A strict linear inequality `coeffs · c + constant > 0`.
#[derive(Clone, Debug)]
pub struct StrictIneq<S> {
    pub coeffs: Vec<S>,
    pub constant: S,
}

/// Finds `c` satisfying every strict inequality, by Fourier–Motzkin
/// elimination followed by back substitution. Returns `None` when the open
/// polyhedron is empty.
pub fn strict_feasible_point<S: Scalar>(ineqs: &[StrictIneq<S>], vars: usize) -> Option<Vec<S>> {
    // levels[k] holds the system after eliminating variables 0..k.
    let mut levels: Vec<Vec<StrictIneq<S>>> = vec![ineqs.to_vec()];
    for k in 0..vars {
        let current = &levels[k];
        let mut next = Vec::new();
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for q in current {
            let a = &q.coeffs[k];
            if a.is_negligible() {
                next.push(q.clone());
            } else if *a > S::zero() {
                pos.push(q);
            } else {
                neg.push(q);
            }
        }
        for p in &pos {
            for n in &neg {
                let wp = -n.coeffs[k].clone();
                let wn = p.coeffs[k].clone();
                let coeffs = p
                    .coeffs
                    .iter()
                    .zip(&n.coeffs)
                    .enumerate()
                    .map(|(j, (x, y))| {
                        if j == k {
                            S::zero()
                        } else {
                            wp.clone() * x.clone() + wn.clone() * y.clone()
                        }
                    })
                    .collect();
                let constant = wp.clone() * p.constant.clone() + wn.clone() * n.constant.clone();
                next.push(StrictIneq { coeffs, constant });
            }
        }
        levels.push(next);
    }
    if levels[vars].iter().any(|q| !q.constant.is_strictly_positive()) {
        return None;
    }
    let mut x = vec![S::zero(); vars];
    for k in (0..vars).rev() {
        let mut lower: Option<S> = None;
        let mut upper: Option<S> = None;
        for q in &levels[k] {
            // Later variables are already fixed; earlier ones do not appear.
            let mut rest = q.constant.clone();
            for j in (k + 1)..vars {
                rest = rest + q.coeffs[j].clone() * x[j].clone();
            }
            let a = q.coeffs[k].clone();
            if a.is_negligible() {
                continue;
            }
            let bound = -rest / a.clone();
            if a > S::zero() {
                if lower.as_ref().is_none_or(|l| bound > *l) {
                    lower = Some(bound);
                }
            } else if upper.as_ref().is_none_or(|u| bound < *u) {
                upper = Some(bound);
            }
        }
        x[k] = match (lower, upper) {
            (Some(l), Some(u)) => (l + u) / S::from_i64(2),
            (Some(l), None) => l + S::one(),
            (None, Some(u)) => u - S::one(),
            (None, None) => S::zero(),
        };
    }
    Some(x)
}
