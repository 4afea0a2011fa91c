use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::lifespan_exponent;
use crate::metric::Metric;
use crate::wavegrid::norms::energy_space_norm;
use crate::wavegrid::{Grid, StatePair};

use super::{blowup_time, Nonlinearity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifespanRecord {
    pub epsilon: f64,
    /// Detected blow-up time, or the horizon when censored.
    pub t_star: f64,
    pub censored: bool,
    /// Anchored lower-bound curve `t*(ε_max) (ε/ε_max)^{−d}`.
    pub t1_theory: Option<f64>,
    /// Solver steps taken.
    pub iters_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifespanSweep {
    pub records: Vec<LifespanRecord>,
    /// Slope of `log t*` against `log ε` over uncensored records.
    pub slope_fit: Option<f64>,
    /// Lifespan exponent `d`, when defined for the grid dimension and `k`.
    pub d: Option<f64>,
    pub horizon: f64,
}

impl LifespanSweep {
    /// `t*` nondecreasing as `ε` decreases; censored records count as the horizon.
    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[1].t_star >= w[0].t_star)
    }

    /// `t*(ε) >= t1_theory(ε)` on every uncensored record below the anchor.
    pub fn satisfies_lower_bound(&self) -> bool {
        self.lower_bound_violations().is_empty()
    }

    pub fn lower_bound_violations(&self) -> Vec<&LifespanRecord> {
        self.records
            .iter()
            .skip(1)
            .filter(|r| !r.censored)
            .filter(|r| r.t1_theory.map(|t| r.t_star < t).unwrap_or(false))
            .collect()
    }
}

/// Scales `template` to unit energy-space norm; templates with zero energy norm
/// (constant data) are scaled to unit sup norm instead.
pub fn normalize_template(grid: &Grid, template: &StatePair) -> Result<StatePair> {
    let energy = energy_space_norm(grid, template);
    let scale = if energy > 0.0 {
        energy
    } else {
        template.u.iter().chain(&template.v).fold(0.0_f64, |m, x| m.max(x.abs()))
    };
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument("data template is identically zero".into()));
    }
    Ok(template.scaled(1.0 / scale))
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Runs the direct solver on `ε · template` for each `ε` until blow-up or
/// `horizon`.
pub fn lifespan_sweep(
    grid: &Grid,
    metric: &Metric,
    template: &StatePair,
    nl: &Nonlinearity,
    epsilons: &[f64],
    horizon: f64,
    blowup_threshold: f64,
) -> Result<LifespanSweep> {
    if epsilons.is_empty() || epsilons.windows(2).any(|w| !(w[1] < w[0])) || !(epsilons[epsilons.len() - 1] > 0.0) {
        return Err(Error::InvalidArgument("epsilons must be positive and strictly decreasing".into()));
    }
    let unit = normalize_template(grid, template)?;
    let runs = epsilons
        .par_iter()
        .map(|&eps| blowup_time(grid, metric, &unit.scaled(eps), nl, horizon, blowup_threshold))
        .collect::<Result<Vec<_>>>()?;
    let d = lifespan_exponent(grid.spatial_dim(), nl.k).ok();
    let anchor = match (runs[0].0, d) {
        (Some(t), Some(d)) => Some((epsilons[0], t, d)),
        _ => None,
    };
    let records: Vec<LifespanRecord> = epsilons
        .iter()
        .zip(&runs)
        .map(|(&epsilon, &(t, steps))| LifespanRecord {
            epsilon,
            t_star: t.unwrap_or(horizon),
            censored: t.is_none(),
            t1_theory: anchor.map(|(e0, t0, d)| t0 * (epsilon / e0).powf(-d)),
            iters_used: steps,
        })
        .collect();
    let uncensored: Vec<(f64, f64)> =
        records.iter().filter(|r| !r.censored).map(|r| (r.epsilon, r.t_star)).collect();
    Ok(LifespanSweep { slope_fit: fit_slope(&uncensored), records, d, horizon })
}
