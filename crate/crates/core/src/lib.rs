//! Heisenberg circle bundles over translation surfaces built from
//! zippered rectangles, their flows, and the affine skew products arising as
//! first-return maps over interval exchanges.

pub mod iet;
pub mod linalg;
pub mod suspension;
pub mod bundle;
pub mod dynamics;
pub mod flow;
pub mod analysis;
pub mod cli;
