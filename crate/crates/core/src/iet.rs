//! Interval exchange transformations and their combinatorial invariants.
//!
//! Internally every alphabet is re-ordered so that letter `i` occupies top
//! position `i + 1`; all matrices and vectors in this crate use that layout.
//! The interval is `I = [0, |I|)` and each `I_α` is half-open on the right,
//! which makes `T` a total bijection.

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Distance to a discontinuity below which an iterate is flagged.
pub const GUARD_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IetError {
    #[error("alphabet is empty")]
    EmptyAlphabet,
    #[error("duplicate symbol {0:?} in alphabet")]
    DuplicateSymbol(String),
    #[error("{what} has {found} entries but the alphabet has {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{which} is not a bijection onto 1..={d}")]
    NotABijection { which: &'static str, d: usize },
    #[error("length of {symbol} is not positive ({value})")]
    NonPositiveLength { symbol: String, value: String },
    #[error("cannot parse {0:?} as a length")]
    BadLength(String),
    #[error("permutation is reducible: top positions 1..={0} are mapped onto themselves")]
    ReduciblePermutation(usize),
    #[error("point {x} lies outside [0, {len})")]
    OutOfDomain { x: f64, len: f64 },
}

/// A length as supplied by the user: exact rational or binary64.
#[derive(Debug, Clone, PartialEq)]
pub enum Length {
    Exact(BigRational),
    Float(f64),
}

impl Length {
    /// Parses `"p/q"` and plain integers as exact rationals; anything else
    /// that parses as a float goes down the floating path.
    pub fn parse(s: &str) -> Result<Length, IetError> {
        let t = s.trim();
        if let Some((n, d)) = t.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| IetError::BadLength(s.into()))?;
            let d: BigInt = d.trim().parse().map_err(|_| IetError::BadLength(s.into()))?;
            if d.is_zero() {
                return Err(IetError::BadLength(s.into()));
            }
            return Ok(Length::Exact(BigRational::new(n, d)));
        }
        if let Ok(n) = t.parse::<BigInt>() {
            return Ok(Length::Exact(BigRational::from_integer(n)));
        }
        t.parse::<f64>()
            .map(Length::Float)
            .map_err(|_| IetError::BadLength(s.into()))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Length::Exact(q) => q.to_f64().unwrap_or(f64::NAN),
            Length::Float(x) => *x,
        }
    }

    fn is_positive(&self) -> bool {
        match self {
            Length::Exact(q) => q.is_positive(),
            Length::Float(x) => *x > 0.0 && x.is_finite(),
        }
    }
}

impl fmt::Display for Length {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Length::Exact(q) => write!(f, "{q}"),
            Length::Float(x) => write!(f, "{x}"),
        }
    }
}

/// Unvalidated input, exactly as it appears in a configuration file.
#[derive(Debug, Clone)]
pub struct RawIet {
    pub alphabet: Vec<String>,
    /// 1-based top positions, aligned with `alphabet`.
    pub pi0: Vec<usize>,
    /// 1-based bottom positions, aligned with `alphabet`.
    pub pi1: Vec<usize>,
    pub lengths: Vec<Length>,
}

/// The combinatorial datum `π = (π₀, π₁)`, canonically ordered by `π₀`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    alphabet: Vec<String>,
    /// `bottom[i]`: 0-based bottom position of the letter at top position `i`.
    bottom: Vec<usize>,
    /// Inverse of `bottom`.
    by_bottom: Vec<usize>,
}

fn check_bijection(v: &[usize], d: usize, which: &'static str) -> Result<(), IetError> {
    let mut seen = vec![false; d];
    for &k in v {
        if k == 0 || k > d || seen[k - 1] {
            return Err(IetError::NotABijection { which, d });
        }
        seen[k - 1] = true;
    }
    Ok(())
}

impl Permutation {
    /// Builds the pair from 1-based positions aligned with `alphabet`.
    /// Reducible pairs are accepted here; see [`Permutation::check_irreducible`].
    pub fn new(alphabet: &[String], pi0: &[usize], pi1: &[usize]) -> Result<Self, IetError> {
        let d = alphabet.len();
        if d == 0 {
            return Err(IetError::EmptyAlphabet);
        }
        let mut names = HashSet::new();
        for s in alphabet {
            if !names.insert(s) {
                return Err(IetError::DuplicateSymbol(s.clone()));
            }
        }
        for (what, v) in [("pi0", pi0), ("pi1", pi1)] {
            if v.len() != d {
                return Err(IetError::LengthMismatch { what, expected: d, found: v.len() });
            }
        }
        check_bijection(pi0, d, "pi0")?;
        check_bijection(pi1, d, "pi1")?;
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by_key(|&a| pi0[a]);
        let alphabet = order.iter().map(|&a| alphabet[a].clone()).collect();
        let bottom: Vec<usize> = order.iter().map(|&a| pi1[a] - 1).collect();
        let mut by_bottom = vec![0; d];
        for (i, &b) in bottom.iter().enumerate() {
            by_bottom[b] = i;
        }
        Ok(Permutation { alphabet, bottom, by_bottom })
    }

    /// Pair with `π₀ = id` on letters `A, B, C, …` and the given 1-based
    /// monodromy `p` (so `π₁(letter k) = p(k)`).
    pub fn from_monodromy(p: &[usize]) -> Result<Self, IetError> {
        let alphabet = default_alphabet(p.len());
        let pi0: Vec<usize> = (1..=p.len()).collect();
        Permutation::new(&alphabet, &pi0, p)
    }

    pub fn d(&self) -> usize {
        self.alphabet.len()
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    /// 0-based bottom position of each letter (letters in top order).
    pub fn bottom_positions(&self) -> &[usize] {
        &self.bottom
    }

    /// Letter index occupying each bottom position.
    pub fn letters_by_bottom(&self) -> &[usize] {
        &self.by_bottom
    }

    pub fn symbol_index(&self, symbol: &str) -> Option<usize> {
        self.alphabet.iter().position(|s| s == symbol)
    }

    pub fn check_irreducible(&self) -> Result<(), IetError> {
        let mut max = 0;
        for k in 0..self.d().saturating_sub(1) {
            max = max.max(self.bottom[k]);
            if max == k {
                return Err(IetError::ReduciblePermutation(k + 1));
            }
        }
        Ok(())
    }

    pub fn is_irreducible(&self) -> bool {
        self.check_irreducible().is_ok()
    }
}

pub fn default_alphabet(d: usize) -> Vec<String> {
    (0..d)
        .map(|i| {
            if i < 26 {
                char::from(b'A' + i as u8).to_string()
            } else {
                format!("L{i}")
            }
        })
        .collect()
}

/// The monodromy `p = π₁ ∘ π₀⁻¹` as a 1-based table: entry `k-1` is `p(k)`.
pub fn monodromy(perm: &Permutation) -> Vec<usize> {
    perm.bottom.iter().map(|b| b + 1).collect()
}

/// The antisymmetric matrix `Ω_π`, rows and columns in top order.
pub fn omega_matrix(perm: &Permutation) -> Vec<Vec<i64>> {
    let d = perm.d();
    let b = &perm.bottom;
    let mut m = vec![vec![0i64; d]; d];
    for a in 0..d {
        for c in 0..d {
            if b[a] > b[c] && a < c {
                m[a][c] = 1;
            } else if b[a] < b[c] && a > c {
                m[a][c] = -1;
            }
        }
    }
    m
}

/// `w = Ω_π λ`.
pub fn translation_vector(perm: &Permutation, lambda: &[f64]) -> Vec<f64> {
    omega_matrix(perm)
        .iter()
        .map(|row| row.iter().zip(lambda).map(|(&o, l)| o as f64 * l).sum())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SingularityData {
    /// `sigma[j]` for `j ∈ {0..d}`.
    pub sigma: Vec<usize>,
    /// Cycles of `σ`, each listed from its smallest element, ordered by that
    /// element; the first cycle therefore contains 0.
    pub orbits: Vec<Vec<usize>>,
    pub zero_orbit: usize,
}

impl SingularityData {
    /// Cycles not containing 0.
    pub fn nonzero_orbits(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.orbits.iter().enumerate().filter(move |(i, _)| *i != self.zero_orbit).map(|(_, o)| o)
    }
}

pub fn sigma_permutation(perm: &Permutation) -> SingularityData {
    let d = perm.d();
    let p = monodromy(perm);
    let mut p_inv = vec![0; d + 2];
    for (k, &pk) in p.iter().enumerate() {
        p_inv[pk] = k + 1;
    }
    let mut sigma = vec![0; d + 1];
    for j in 0..=d {
        sigma[j] = if j == 0 {
            p_inv[1] - 1
        } else if j == p_inv[d] {
            d
        } else {
            p_inv[p[j - 1] + 1] - 1
        };
    }
    let mut seen = vec![false; d + 1];
    let mut orbits = Vec::new();
    for start in 0..=d {
        if seen[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            cycle.push(j);
            j = sigma[j];
        }
        orbits.push(cycle);
    }
    SingularityData { sigma, orbits, zero_orbit: 0 }
}

/// Indicator difference vector of a `σ`-orbit: entry at top position `i+1`
/// is `χ(i+1) − χ(i)`.
pub fn orbit_vector(d: usize, orbit: &[usize]) -> Vec<i64> {
    let member = |k: usize| i64::from(orbit.contains(&k));
    (0..d).map(|i| member(i + 1) - member(i)).collect()
}

/// Basis of `Ker Ω_π`, one integer vector per `σ`-orbit avoiding 0.
pub fn kernel_basis(perm: &Permutation) -> Vec<Vec<i64>> {
    let sing = sigma_permutation(perm);
    sing.nonzero_orbits().map(|o| orbit_vector(perm.d(), o)).collect()
}

/// Validated interval exchange data.
#[derive(Debug, Clone)]
pub struct IetSpec {
    perm: Permutation,
    lambda: Vec<f64>,
    exact: Option<Vec<BigRational>>,
}

pub fn validate_iet(raw: &RawIet) -> Result<IetSpec, IetError> {
    let perm = Permutation::new(&raw.alphabet, &raw.pi0, &raw.pi1)?;
    let d = perm.d();
    if raw.lengths.len() != d {
        return Err(IetError::LengthMismatch {
            what: "lambda",
            expected: d,
            found: raw.lengths.len(),
        });
    }
    for (sym, len) in raw.alphabet.iter().zip(&raw.lengths) {
        if !len.is_positive() {
            return Err(IetError::NonPositiveLength { symbol: sym.clone(), value: len.to_string() });
        }
    }
    perm.check_irreducible()?;
    // Re-order lengths to top order.
    let mut ordered = Vec::with_capacity(d);
    for sym in perm.alphabet() {
        let a = raw.alphabet.iter().position(|s| s == sym).expect("symbol present");
        ordered.push(raw.lengths[a].clone());
    }
    let exact = ordered
        .iter()
        .map(|l| match l {
            Length::Exact(q) => Some(q.clone()),
            Length::Float(_) => None,
        })
        .collect::<Option<Vec<_>>>();
    let lambda = ordered.iter().map(Length::to_f64).collect();
    Ok(IetSpec { perm, lambda, exact })
}

impl IetSpec {
    /// Float lengths given in top order.
    pub fn new(perm: Permutation, lambda: Vec<f64>) -> Result<Self, IetError> {
        if lambda.len() != perm.d() {
            return Err(IetError::LengthMismatch {
                what: "lambda",
                expected: perm.d(),
                found: lambda.len(),
            });
        }
        for (sym, &l) in perm.alphabet().iter().zip(&lambda) {
            if !(l > 0.0 && l.is_finite()) {
                return Err(IetError::NonPositiveLength { symbol: sym.clone(), value: l.to_string() });
            }
        }
        perm.check_irreducible()?;
        Ok(IetSpec { perm, lambda, exact: None })
    }

    /// Exact lengths given in top order; the float lengths are their nearest
    /// binary64 values.
    pub fn new_exact(perm: Permutation, lambda: Vec<BigRational>) -> Result<Self, IetError> {
        let floats = lambda.iter().map(|q| q.to_f64().unwrap_or(f64::NAN)).collect();
        for (sym, q) in perm.alphabet().iter().zip(&lambda) {
            if !q.is_positive() {
                return Err(IetError::NonPositiveLength { symbol: sym.clone(), value: q.to_string() });
            }
        }
        let mut spec = IetSpec::new(perm, floats)?;
        spec.exact = Some(lambda);
        Ok(spec)
    }

    pub fn perm(&self) -> &Permutation {
        &self.perm
    }

    pub fn d(&self) -> usize {
        self.perm.d()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn exact_lambda(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn total_length(&self) -> f64 {
        self.lambda.iter().sum()
    }
}

/// Serializable view of an [`IetSpec`] and its invariants, in top order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IetSummary {
    pub alphabet: Vec<String>,
    pub pi0: Vec<usize>,
    pub pi1: Vec<usize>,
    pub lambda: Vec<f64>,
    /// Exact lengths as `"p/q"` strings, when supplied.
    pub lambda_exact: Option<Vec<String>>,
    pub omega: Vec<Vec<i64>>,
    pub w: Vec<f64>,
    pub monodromy: Vec<usize>,
    pub sigma: Vec<usize>,
    pub sigma_orbits: Vec<Vec<usize>>,
    pub kernel_basis: Vec<Vec<i64>>,
}

impl IetSummary {
    pub fn of(spec: &IetSpec) -> Self {
        let perm = spec.perm();
        let sing = sigma_permutation(perm);
        IetSummary {
            alphabet: perm.alphabet().to_vec(),
            pi0: (1..=perm.d()).collect(),
            pi1: monodromy(perm),
            lambda: spec.lambda().to_vec(),
            lambda_exact: spec.exact_lambda().map(|v| v.iter().map(|q| q.to_string()).collect()),
            omega: omega_matrix(perm),
            w: translation_vector(perm, spec.lambda()),
            monodromy: monodromy(perm),
            sigma: sing.sigma,
            sigma_orbits: sing.orbits,
            kernel_basis: kernel_basis(perm),
        }
    }
}

/// One application of `T`, with the discontinuity flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub x: f64,
    pub near_breakpoint: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    /// `T¹x₀, …, Tᴺx₀`.
    pub points: Vec<f64>,
    /// False when some point that `T` was applied to lay within
    /// [`GUARD_EPS`] of a breakpoint.
    pub reliable: bool,
}

/// Floating-point evaluation of an interval exchange.
#[derive(Debug, Clone)]
pub struct IetMap {
    spec: IetSpec,
    w: Vec<f64>,
    top_left: Vec<f64>,
    bottom_left: Vec<f64>,
    /// Left ends of the bottom intervals, in bottom order.
    bottom_bounds: Vec<f64>,
    total: f64,
}

impl IetMap {
    pub fn new(spec: IetSpec) -> Self {
        let d = spec.d();
        let lambda = spec.lambda();
        let w = translation_vector(spec.perm(), lambda);
        let mut top_left = Vec::with_capacity(d);
        let mut acc = 0.0;
        for &l in lambda {
            top_left.push(acc);
            acc += l;
        }
        let total = acc;
        let mut bottom_bounds = Vec::with_capacity(d);
        let mut bottom_left = vec![0.0; d];
        let mut acc = 0.0;
        for &a in spec.perm().letters_by_bottom() {
            bottom_bounds.push(acc);
            bottom_left[a] = acc;
            acc += lambda[a];
        }
        IetMap { spec, w, top_left, bottom_left, bottom_bounds, total }
    }

    pub fn spec(&self) -> &IetSpec {
        &self.spec
    }

    pub fn d(&self) -> usize {
        self.spec.d()
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    /// Left endpoints `∂I_α`, in top order.
    pub fn breakpoints(&self) -> &[f64] {
        &self.top_left
    }

    /// Left endpoints of the image intervals `T(I_α)`, in top order.
    pub fn image_left(&self) -> &[f64] {
        &self.bottom_left
    }

    pub fn total_length(&self) -> f64 {
        self.total
    }

    fn check_domain(&self, x: f64) -> Result<(), IetError> {
        if x >= 0.0 && x < self.total {
            Ok(())
        } else {
            Err(IetError::OutOfDomain { x, len: self.total })
        }
    }

    /// Letter whose interval contains `x` (assumed in range).
    pub fn locate(&self, x: f64) -> usize {
        self.top_left.partition_point(|&l| l <= x).saturating_sub(1)
    }

    /// True when `x` is within the guard of an interior discontinuity.
    pub fn near_breakpoint(&self, x: f64) -> bool {
        let i = self.top_left.partition_point(|&l| l <= x);
        let near = |j: usize| j >= 1 && j < self.top_left.len() && (x - self.top_left[j]).abs() < GUARD_EPS;
        near(i) || (i >= 1 && near(i - 1))
    }

    fn clamp(&self, y: f64) -> f64 {
        if y >= self.total {
            self.total.next_down()
        } else if y < 0.0 {
            0.0
        } else {
            y
        }
    }

    /// `T(x)` for `x` in letter `a`; the caller guarantees membership.
    #[inline]
    pub fn apply_in(&self, a: usize, x: f64) -> f64 {
        self.clamp(self.bottom_left[a] + (x - self.top_left[a]))
    }

    pub fn apply(&self, x: f64) -> Result<f64, IetError> {
        self.check_domain(x)?;
        Ok(self.apply_in(self.locate(x), x))
    }

    pub fn apply_flagged(&self, x: f64) -> Result<Step, IetError> {
        self.check_domain(x)?;
        Ok(Step { x: self.apply_in(self.locate(x), x), near_breakpoint: self.near_breakpoint(x) })
    }

    /// Letter `β` with `y ∈ T(I_β)`.
    pub fn locate_image(&self, y: f64) -> usize {
        let k = self.bottom_bounds.partition_point(|&l| l <= y).saturating_sub(1);
        self.spec.perm().letters_by_bottom()[k]
    }

    pub fn apply_inverse(&self, y: f64) -> Result<f64, IetError> {
        self.check_domain(y)?;
        let b = self.locate_image(y);
        Ok(self.clamp(self.top_left[b] + (y - self.bottom_left[b])))
    }

    /// `N ≥ 1` iterates of `x0`. Two-interval exchanges are rotations and are
    /// evaluated in closed form to avoid accumulating rounding error.
    pub fn orbit(&self, x0: f64, n: usize) -> Result<Orbit, IetError> {
        self.check_domain(x0)?;
        let mut points = Vec::with_capacity(n);
        let mut reliable = true;
        if self.d() == 2 {
            let shift = self.w[0];
            let mut prev = x0;
            for k in 1..=n {
                reliable &= !self.near_breakpoint(prev);
                let next = self.rotate(x0, shift, k as f64);
                points.push(next);
                prev = next;
            }
        } else {
            let mut x = x0;
            for _ in 0..n {
                let s = self.apply_flagged(x)?;
                reliable &= !s.near_breakpoint;
                x = s.x;
                points.push(x);
            }
        }
        Ok(Orbit { points, reliable })
    }

    /// `(x0 + k·shift) mod |I|`, using an error-free product so that the
    /// result carries only a few ulps of error for any `k`.
    fn rotate(&self, x0: f64, shift: f64, k: f64) -> f64 {
        let p = k * shift;
        let e = k.mul_add(shift, -p);
        let y = (x0 + p.rem_euclid(self.total) + e).rem_euclid(self.total);
        self.clamp(y)
    }
}

/// Exact rational evaluation of an interval exchange; the oracle for the
/// floating path.
#[derive(Debug, Clone)]
pub struct ExactIet {
    top_left: Vec<BigRational>,
    bottom_left: Vec<BigRational>,
    total: BigRational,
}

impl ExactIet {
    pub fn new(spec: &IetSpec) -> Option<Self> {
        let lambda = spec.exact_lambda()?;
        let mut top_left = Vec::with_capacity(lambda.len());
        let mut acc = BigRational::zero();
        for l in lambda {
            top_left.push(acc.clone());
            acc += l;
        }
        let total = acc;
        let mut bottom_left = vec![BigRational::zero(); lambda.len()];
        let mut acc = BigRational::zero();
        for &a in spec.perm().letters_by_bottom() {
            bottom_left[a] = acc.clone();
            acc += &lambda[a];
        }
        Some(ExactIet { top_left, bottom_left, total })
    }

    pub fn total_length(&self) -> &BigRational {
        &self.total
    }

    pub fn w(&self) -> Vec<BigRational> {
        self.bottom_left.iter().zip(&self.top_left).map(|(b, t)| b - t).collect()
    }

    pub fn apply(&self, x: &BigRational) -> Result<BigRational, IetError> {
        if x.is_negative() || *x >= self.total {
            return Err(IetError::OutOfDomain {
                x: x.to_f64().unwrap_or(f64::NAN),
                len: self.total.to_f64().unwrap_or(f64::NAN),
            });
        }
        let a = self.top_left.partition_point(|l| l <= x) - 1;
        Ok(&self.bottom_left[a] + (x - &self.top_left[a]))
    }

    pub fn orbit(&self, x0: &BigRational, n: usize) -> Result<Vec<BigRational>, IetError> {
        let mut out = Vec::with_capacity(n);
        let mut x = x0.clone();
        for _ in 0..n {
            x = self.apply(&x)?;
            out.push(x.clone());
        }
        Ok(out)
    }
}
