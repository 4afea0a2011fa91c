//! The nonlinear layer: Picard iteration of the Duhamel map, the direct
//! nonlinear leapfrog used as its oracle, the contraction budget and lifespan
//! sweeps.

mod budget;
mod lifespan;
mod nonlinearity;
mod picard;

pub use budget::{theorem3_budget, Budget, Constants};
pub use lifespan::{fit_slope, lifespan_sweep, normalize_template, LifespanRecord, LifespanSweep};
pub use nonlinearity::{Form, Nonlinearity, NonlinearForcing, NonlinearityConstants, Sign};
pub use picard::{
    blowup_time, direct_solve, picard_map, picard_solve, PicardConfig, PicardDiagnostics, PicardOutcome,
};
