use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{k_window, strichartz_pair_for_k, Regime};
use crate::metric::Metric;
use crate::wavegrid::norms::y_norm;
use crate::wavegrid::{Grid, History, Propagator, StatePair, DEFAULT_BLOWUP_THRESHOLD};

use super::{NonlinearForcing, Nonlinearity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    pub max_iters: usize,
    /// Stopping tolerance on `|u^{m+1} − u^m|_{Y}`.
    pub tol: f64,
    pub t1: f64,
    pub blowup_threshold: f64,
    /// `(p, q)` of the `Y` norm; `None` picks the admissible pair for `k`.
    pub exponents: Option<(f64, f64)>,
}

impl PicardConfig {
    pub fn new(t1: f64) -> Self {
        Self { max_iters: 50, tol: 1e-10, t1, blowup_threshold: DEFAULT_BLOWUP_THRESHOLD, exponents: None }
    }

    fn check(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.t1 > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidArgument(format!(
                "picard needs tol > 0, t1 > 0 and max_iters > 0 (tol = {}, t1 = {}, max_iters = {})",
                self.tol, self.t1, self.max_iters
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    /// `|u^{m+1} − u^m|_Y` for every iteration.
    pub differences: Vec<f64>,
    /// Ratios of successive differences.
    pub contraction_ratios: Vec<f64>,
    /// Largest ratio, or `None` with fewer than two nonzero differences.
    pub contraction_ratio: Option<f64>,
    pub p: f64,
    pub q: f64,
    /// True when `k` lies outside the local window and `(p, q)` was not derived from it.
    pub exploratory: bool,
    pub y_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardOutcome {
    pub history: History,
    pub diagnostics: PicardDiagnostics,
}

/// `(p, q, exploratory)` for the `Y` norm in dimension `n`.
fn y_exponents(n: usize, nl: &Nonlinearity, cfg: &PicardConfig) -> (f64, f64, bool) {
    let in_window = k_window(n, Regime::Local).map(|w| w.contains(nl.k)).unwrap_or(false);
    let derived = if in_window { strichartz_pair_for_k(n, nl.k, Regime::Local).ok() } else { None };
    match (cfg.exponents, derived) {
        (Some((p, q)), d) => (p, q, d.is_none()),
        (None, Some(set)) => (set.p, set.q, false),
        (None, None) => (2.0 * nl.k, 2.0 * nl.k, true),
    }
}

/// One application of `𝒢(u) = (𝒰(t,0)g)₁ + ∫₀ᵗ V(t,s) f(u(s)) ds` on the solver grid.
pub fn picard_map(prop: &Propagator<'_>, linear: &History, u: &History, nl: &Nonlinearity, t1: f64) -> Result<History> {
    let source = History { t0: u.t0, dt: u.dt, frames: u.frames.iter().map(|f| nl.apply(f)).collect() };
    let mut out = prop.duhamel(&source, t1)?;
    for (o, l) in out.frames.iter_mut().zip(&linear.frames) {
        for (x, y) in o.iter_mut().zip(l) {
            *x += y;
        }
    }
    Ok(out)
}

fn first_exceedance(history: &History, threshold: f64) -> Option<(f64, f64)> {
    history.frames.iter().enumerate().find_map(|(j, f)| {
        let bad = f.iter().any(|x| !(x.abs() <= threshold));
        (bad && j > 0).then(|| (0.5 * (history.time(j - 1) + history.time(j)), history.time(j - 1)))
    })
}

/// Picard iteration `u⁰ = (𝒰(t,0)g)₁`, `u^{m+1} = 𝒢(u^m)` on `[0, t1]`.
pub fn picard_solve(
    grid: &Grid,
    metric: &Metric,
    data: &StatePair,
    nl: &Nonlinearity,
    cfg: &PicardConfig,
) -> Result<PicardOutcome> {
    cfg.check()?;
    let (p, q, exploratory) = y_exponents(grid.spatial_dim(), nl, cfg);
    let prop = Propagator::new(grid, metric)?.with_blowup_threshold(cfg.blowup_threshold);
    let mut start = data.clone();
    start.time = 0.0;
    let (_, linear) = prop.run_recording(start, 0.0, cfg.t1, None)?;
    let mut current = linear.clone();
    let mut differences = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_iters {
        let next = picard_map(&prop, &linear, &current, nl, cfg.t1)?;
        if let Some((time, last_safe_time)) = first_exceedance(&next, cfg.blowup_threshold) {
            return Err(Error::Blowup { time, last_safe_time });
        }
        let diff = y_norm(grid, &next.difference(&current), p, q);
        differences.push(diff);
        current = next;
        if diff <= cfg.tol {
            converged = true;
            break;
        }
    }
    let contraction_ratios: Vec<f64> =
        differences.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect();
    if !converged {
        let stalled = differences.windows(2).last().map(|w| w[1] >= w[0]).unwrap_or(true);
        if stalled {
            return Err(Error::NoConvergence {
                iterations: differences.len(),
                last_difference: *differences.last().unwrap_or(&f64::NAN),
            });
        }
    }
    let contraction_ratio = contraction_ratios.iter().copied().reduce(f64::max);
    let diagnostics = PicardDiagnostics {
        iterations: differences.len(),
        converged,
        contraction_ratio,
        contraction_ratios,
        differences,
        p,
        q,
        exploratory,
        y_norm: y_norm(grid, &current, p, q),
    };
    Ok(PicardOutcome { history: current, diagnostics })
}

/// Leapfrog with the nonlinearity added as an explicit source at every level.
pub fn direct_solve(
    grid: &Grid,
    metric: &Metric,
    data: &StatePair,
    nl: &Nonlinearity,
    t1: f64,
    blowup_threshold: f64,
) -> Result<History> {
    let prop = Propagator::new(grid, metric)?.with_blowup_threshold(blowup_threshold);
    let mut start = data.clone();
    start.time = 0.0;
    let forcing = NonlinearForcing { nl: *nl };
    Ok(prop.run_recording(start, 0.0, t1, Some(&forcing))?.1)
}

/// Blow-up time of the direct solver, or `None` when the solution survives to
/// `horizon`. Returns the number of steps taken alongside.
pub fn blowup_time(
    grid: &Grid,
    metric: &Metric,
    data: &StatePair,
    nl: &Nonlinearity,
    horizon: f64,
    blowup_threshold: f64,
) -> Result<(Option<f64>, usize)> {
    let prop = Propagator::new(grid, metric)?.with_blowup_threshold(blowup_threshold);
    let mut start = data.clone();
    start.time = 0.0;
    let forcing = NonlinearForcing { nl: *nl };
    let mut steps = 0;
    match prop.run(start, 0.0, horizon, Some(&forcing), |j, _, _| steps = j) {
        Ok(_) => Ok((None, steps)),
        Err(Error::Blowup { time, .. }) => Ok((Some(time), steps + 1)),
        Err(e) => Err(e),
    }
}
