//! Empirical working constants `A_k`, `C3`, `C7` for the contraction budget.
//!
//! `A_k` is the larger of the homogeneous and inhomogeneous Strichartz
//! quotients, `C3 = C_f,growth · Y-quotient` and `C7 = C_f,lipschitz · Y-quotient`.
//! All three are lower bounds for the true constants, measured on seeded
//! random data.

use serde::{Deserialize, Serialize};

use crate::duhamel::{Constants, Nonlinearity, NonlinearityConstants};
use crate::error::{Error, Result};
use crate::exponents::{strichartz_pair_for_k, Regime};
use crate::metric::Metric;
use crate::wavegrid::estimate::{
    estimate_inhomogeneous_constant, estimate_strichartz_constant, EstimatorSetup, InhomogeneousEstimate,
    StrichartzEstimate,
};
use crate::wavegrid::Layout;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub trials: usize,
    pub horizon: f64,
    /// Mesh width of the radial estimation grid.
    pub h: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub n: usize,
    pub k: f64,
    pub p: f64,
    pub q: f64,
    pub constants: Constants,
    pub nonlinearity: NonlinearityConstants,
    pub strichartz: StrichartzEstimate,
    pub inhomogeneous: InhomogeneousEstimate,
    pub metric_family: String,
    pub seed: u64,
}

pub fn calibrate(metric: &Metric, n: usize, nl: &Nonlinearity, cfg: &CalibrationConfig) -> Result<Calibration> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("calibration needs at least one trial".into()));
    }
    if !(cfg.horizon > 0.0) || !(cfg.h > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "calibration horizon {} and mesh width {} must be > 0",
            cfg.horizon, cfg.h
        )));
    }
    let set = strichartz_pair_for_k(n, nl.k, Regime::Local)?;
    let setup = EstimatorSetup::new(Layout::Radial { n }, cfg.h, metric, cfg.seed);
    let strichartz = estimate_strichartz_constant(metric, &setup, set.p, set.q, cfg.trials, cfg.horizon)?;
    let inhomogeneous = estimate_inhomogeneous_constant(metric, &setup, set.p, set.q, cfg.trials, cfg.horizon)?;
    let nonlinearity = nl.constants();
    let constants = Constants {
        a_k: strichartz.constant.max(inhomogeneous.constant),
        c3: inhomogeneous.y_constant * nonlinearity.growth,
        c7: inhomogeneous.y_constant * nonlinearity.lipschitz,
    };
    Ok(Calibration {
        n,
        k: nl.k,
        p: set.p,
        q: set.q,
        constants,
        nonlinearity,
        strichartz,
        inhomogeneous,
        metric_family: metric.family_name().to_string(),
        seed: cfg.seed,
    })
}
