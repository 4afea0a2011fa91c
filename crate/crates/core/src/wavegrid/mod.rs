//! Discrete fields, the divergence-form propagator and the norms used to
//! measure them.

mod coefficient;
pub mod data;
pub mod estimate;
mod grid;
pub mod norms;
mod propagate;
pub mod snapshot;

pub use coefficient::CoefficientField;
pub use grid::{sphere_area, Boundary, Grid, GridSpec, Layout, CFL_SAFETY};
pub use norms::{norms, spacetime_norm, NormReport};
pub use propagate::{
    duhamel_history, duhamel_term, propagate, Forcing, History, HistoryForcing, Propagator, StatePair,
    DEFAULT_BLOWUP_THRESHOLD,
};
