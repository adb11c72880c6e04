//! Iteration of skew products, Birkhoff averages and correlations.

pub mod birkhoff;
pub mod correlation;
pub mod observable;
pub mod sum;

pub use birkhoff::{birkhoff_average, birkhoff_skewing_sum, discrepancy_2d, mode_project, skew_orbit};
pub use correlation::{
    correlation_series_grid, correlation_series_monte_carlo, mode_correlation, CorrelationSeries,
    PieceStructure,
};
pub use observable::ModeObservable;
