//! Statistics of correlation series and the cohomological tests.

pub mod cohom;
pub mod decay;
pub mod rokhlin;
pub mod spectral;

use thiserror::Error;

use crate::iet::IetError;

pub use cohom::{cohomological_residual, furstenberg_defect, furstenberg_best_defect, CohomResidualReport};
pub use decay::{fit_decay_exponent, square_summability_report, DecayFit, SummabilityReport};
pub use rokhlin::{eigenfunction_defect, rokhlin_eigenfunction, RokhlinReport};
pub use spectral::{atom_probe, atom_probe_at, spectral_density, AtomProbe, SpectralEstimate};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("series has {len} entries; at least {required} are needed")]
    SeriesTooShort { len: usize, required: usize },
    #[error("window of length {window} exceeds the series length {len}")]
    WindowTooLong { window: usize, len: usize },
    #[error("tower construction failed: {0}")]
    TowerConstructionFailed(String),
    #[error("basis size {0} is below 4")]
    BasisTooSmall(usize),
    #[error("orbit of length {len} is shorter than 10 times the basis size {basis}")]
    OrbitTooShort { len: usize, basis: usize },
    #[error(transparent)]
    Iet(#[from] IetError),
}
