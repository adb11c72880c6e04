//! Observables `f(x, ρ) = F(x)·e^{2πinρ}` in a single fiber mode.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::iet::IetMap;

#[derive(Clone)]
pub enum BaseFn {
    Const(Complex64),
    /// Indicator of `[lo, hi)`.
    Indicator { lo: f64, hi: f64 },
    /// `cos(2πk x / len)`.
    Cos { k: i64, len: f64 },
    /// Arbitrary function with a list of its discontinuities.
    Custom {
        f: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
        breaks: Vec<f64>,
    },
}

impl fmt::Debug for BaseFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseFn::Const(c) => write!(f, "Const({c})"),
            BaseFn::Indicator { lo, hi } => write!(f, "Indicator[{lo}, {hi})"),
            BaseFn::Cos { k, len } => write!(f, "Cos(k={k}, len={len})"),
            BaseFn::Custom { breaks, .. } => write!(f, "Custom(breaks={breaks:?})"),
        }
    }
}

impl BaseFn {
    #[inline]
    pub fn eval(&self, x: f64) -> Complex64 {
        match self {
            BaseFn::Const(c) => *c,
            BaseFn::Indicator { lo, hi } => {
                if x >= *lo && x < *hi {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            BaseFn::Cos { k, len } => Complex64::new((TAU * *k as f64 * x / len).cos(), 0.0),
            BaseFn::Custom { f, .. } => f(x),
        }
    }

    pub fn discontinuities(&self) -> Vec<f64> {
        match self {
            BaseFn::Const(_) | BaseFn::Cos { .. } => Vec::new(),
            BaseFn::Indicator { lo, hi } => vec![*lo, *hi],
            BaseFn::Custom { breaks, .. } => breaks.clone(),
        }
    }

    pub fn is_piecewise_constant(&self) -> bool {
        matches!(self, BaseFn::Const(_) | BaseFn::Indicator { .. })
    }
}

#[derive(Debug, Clone)]
pub struct ModeObservable {
    pub mode: i64,
    pub base: BaseFn,
    pub description: String,
}

impl ModeObservable {
    pub fn constant(mode: i64, c: Complex64) -> Self {
        ModeObservable { mode, base: BaseFn::Const(c), description: format!("const {c} mode {mode}") }
    }

    pub fn one(mode: i64) -> Self {
        ModeObservable::constant(mode, Complex64::new(1.0, 0.0))
    }

    pub fn indicator(mode: i64, lo: f64, hi: f64) -> Self {
        ModeObservable {
            mode,
            base: BaseFn::Indicator { lo, hi },
            description: format!("indicator [{lo}, {hi}) mode {mode}"),
        }
    }

    /// Indicator of the interval of letter `a`.
    pub fn letter_indicator(map: &IetMap, a: usize, mode: i64) -> Self {
        let lo = map.breakpoints()[a];
        let hi = lo + map.spec().lambda()[a];
        let mut o = ModeObservable::indicator(mode, lo, hi);
        o.description = format!("indicator {} mode {mode}", map.spec().perm().alphabet()[a]);
        o
    }

    pub fn cosine(mode: i64, k: i64, len: f64) -> Self {
        ModeObservable { mode, base: BaseFn::Cos { k, len }, description: format!("cos {k} mode {mode}") }
    }

    pub fn custom(
        mode: i64,
        f: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        breaks: Vec<f64>,
        description: &str,
    ) -> Self {
        ModeObservable {
            mode,
            base: BaseFn::Custom { f: Arc::new(f), breaks },
            description: description.to_string(),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64, rho: f64) -> Complex64 {
        self.base.eval(x) * Complex64::cis(TAU * self.mode as f64 * rho)
    }
}
