//! The Heisenberg translation flow as a special flow over the cross section.
//!
//! Inside the rectangle of letter `α` the connection form is `(x − ∂I_α) dy`:
//! moving up by `dt` rotates the fiber by `(x − ∂I_α) dt`, horizontal motion
//! leaves it alone, and the offset `b_α` is added when the roof is crossed.
//! With this gauge the first return to `I × {0}` is literally the affine
//! skew product.

use serde::Serialize;
use thiserror::Error;

use crate::bundle::{frac, CircleExtension, SkewProduct};
use crate::iet::{IetError, IetMap};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("motion by {t} leaves the rectangle of letter {letter}")]
    ChartExit { letter: usize, t: f64 },
    #[error("return map needs a point on the cross section (s = {0})")]
    NotOnSection(f64),
    #[error(transparent)]
    Iet(#[from] IetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowState {
    pub letter: usize,
    /// Absolute horizontal position, in `[∂I_α, ∂I_α + λ_α)`.
    pub x: f64,
    /// Height above the cross section, in `[0, h_α)`.
    pub s: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOutcome {
    pub state: FlowState,
    /// False when a roof crossing happened within the guard of a breakpoint.
    pub reliable: bool,
}

#[derive(Debug, Clone)]
pub struct HeisenbergFlow {
    skew: SkewProduct,
}

impl HeisenbergFlow {
    /// The roof is `h` of the skew product and the crossing offsets are `b`.
    pub fn new(skew: SkewProduct) -> Self {
        HeisenbergFlow { skew }
    }

    pub fn skew(&self) -> &SkewProduct {
        &self.skew
    }

    fn map(&self) -> &IetMap {
        self.skew.base()
    }

    pub fn on_section(&self, x: f64, rho: f64) -> Result<FlowState, FlowError> {
        self.map().apply(x)?;
        Ok(FlowState { letter: self.map().locate(x), x, s: 0.0, rho: frac(rho) })
    }

    fn offset(&self, st: &FlowState) -> f64 {
        st.x - self.map().breakpoints()[st.letter]
    }

    /// `Φ^X̂_t`; negative times run the flow backwards.
    pub fn flow_vertical(&self, state: FlowState, t: f64) -> Result<FlowOutcome, FlowError> {
        let map = self.map();
        let h = self.skew.h();
        let b = self.skew.b();
        let mut st = state;
        let mut reliable = true;
        let mut rho = st.rho;
        if t >= 0.0 {
            let mut left = t;
            loop {
                let to_roof = h[st.letter] - st.s;
                if left < to_roof {
                    rho += left * self.offset(&st);
                    st.s += left;
                    break;
                }
                rho += to_roof * self.offset(&st) + b[st.letter];
                reliable &= !map.near_breakpoint(st.x);
                st.x = map.apply_in(st.letter, st.x);
                st.letter = map.locate(st.x);
                st.s = 0.0;
                left -= to_roof;
            }
        } else {
            let mut left = -t;
            loop {
                if left <= st.s {
                    rho -= left * self.offset(&st);
                    st.s -= left;
                    break;
                }
                rho -= st.s * self.offset(&st);
                left -= st.s;
                let below = map.apply_inverse(st.x)?;
                reliable &= !map.near_breakpoint(below);
                st.letter = map.locate(below);
                st.x = below;
                st.s = h[st.letter];
                rho -= b[st.letter];
            }
        }
        st.rho = frac(rho);
        Ok(FlowOutcome { state: st, reliable })
    }

    /// `Φ^R̂_t`.
    pub fn flow_fiber(&self, state: FlowState, t: f64) -> FlowState {
        FlowState { rho: frac(state.rho + t), ..state }
    }

    /// `Φ^Ŷ_t` within the current rectangle.
    pub fn flow_horizontal(&self, state: FlowState, t: f64) -> Result<FlowState, FlowError> {
        let lo = self.map().breakpoints()[state.letter];
        let hi = lo + self.map().spec().lambda()[state.letter];
        let x = state.x + t;
        if x < lo || x >= hi {
            return Err(FlowError::ChartExit { letter: state.letter, t });
        }
        Ok(FlowState { x, ..state })
    }

    /// Straight-line motion along `aX̂ + bŶ + cR̂` for time `t`, inside the
    /// current rectangle.
    pub fn flow_linear(&self, state: FlowState, a: f64, b: f64, c: f64, t: f64) -> Result<FlowState, FlowError> {
        let lo = self.map().breakpoints()[state.letter];
        let hi = lo + self.map().spec().lambda()[state.letter];
        let x = state.x + b * t;
        let s = state.s + a * t;
        if x < lo || x >= hi || s < 0.0 || s >= self.skew.h()[state.letter] {
            return Err(FlowError::ChartExit { letter: state.letter, t });
        }
        let gain = a * t * self.offset(&state) + 0.5 * a * b * t * t + c * t;
        Ok(FlowState { x, s, rho: frac(state.rho + gain), ..state })
    }

    fn check_square(&self, state: &FlowState, t: f64) -> Result<(), FlowError> {
        let lo = self.map().breakpoints()[state.letter];
        let hi = lo + self.map().spec().lambda()[state.letter];
        if t < 0.0 || state.x + t >= hi || state.x < lo || state.s + t >= self.skew.h()[state.letter] {
            return Err(FlowError::ChartExit { letter: state.letter, t });
        }
        Ok(())
    }

    /// Fiber shift after going once around the positively oriented square of
    /// side `t`: right, up, left, down. Equals the enclosed area `t²` mod 1.
    pub fn commutator_shift(&self, state: FlowState, t: f64) -> Result<f64, FlowError> {
        self.check_square(&state, t)?;
        let p = self.flow_horizontal(state, t)?;
        let p = self.flow_vertical(p, t)?.state;
        let p = self.flow_horizontal(p, -t)?;
        let p = self.flow_vertical(p, -t)?.state;
        Ok(frac(p.rho - state.rho))
    }

    /// Fiber shift of `Φ^Ŷ_{−t} ∘ Φ^X̂_{−t} ∘ Φ^Ŷ_t ∘ Φ^X̂_t` taken in the order
    /// written, i.e. up, right, down, left. This runs the square clockwise and
    /// gives `−t²` mod 1.
    pub fn commutator_shift_composed(&self, state: FlowState, t: f64) -> Result<f64, FlowError> {
        self.check_square(&state, t)?;
        let p = self.flow_vertical(state, t)?.state;
        let p = self.flow_horizontal(p, t)?;
        let p = self.flow_vertical(p, -t)?.state;
        let p = self.flow_horizontal(p, -t)?;
        Ok(frac(p.rho - state.rho))
    }

    /// First return to the cross section and the return time `h_α`.
    pub fn first_return(&self, state: FlowState) -> Result<(FlowOutcome, f64), FlowError> {
        if state.s != 0.0 {
            return Err(FlowError::NotOnSection(state.s));
        }
        let time = self.skew.h()[state.letter];
        Ok((self.flow_vertical(state, time)?, time))
    }

    /// States at the requested (sorted, nonnegative) times.
    pub fn trajectory(&self, state: FlowState, times: &[f64]) -> Result<Vec<(f64, FlowState)>, FlowError> {
        let mut out = Vec::with_capacity(times.len());
        let mut cur = state;
        let mut now = 0.0;
        for &t in times {
            cur = self.flow_vertical(cur, t - now)?.state;
            now = t;
            out.push((t, cur));
        }
        Ok(out)
    }
}

/// Trajectory dump with columns `t, symbol, x, s, rho`.
pub fn trajectory_csv(alphabet: &[String], rows: &[(f64, FlowState)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "symbol", "x", "s", "rho"]).expect("in-memory write");
    for (t, st) in rows {
        w.write_record([
            format!("{t:?}"),
            alphabet[st.letter].clone(),
            format!("{:?}", st.x),
            format!("{:?}", st.s),
            format!("{:?}", st.rho),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}
