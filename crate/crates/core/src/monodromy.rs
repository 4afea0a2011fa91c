//! Period map `𝒰(T, 0)` and the decay of the cutoff propagator
//! `ψ₁ 𝒰(NT, 0) ψ₂` on the energy space.
//!
//! The operator norm is only available through the action of the solver, so
//! it is estimated from below by randomized probing. Decay series are fitted
//! against an exponential and a `1/((N+1) ln²(N+e))` model; the results are
//! evidence consistent with local energy decay, never a certificate.

use std::f64::consts::E;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{smooth_step, Metric};
use crate::wavegrid::data::{random_packets, PacketConfig};
use crate::wavegrid::norms::energy_space_norm_hilbert;
use crate::wavegrid::{Grid, GridSpec, Layout, Propagator, StatePair};

/// Radial cutoff equal to 1 on `|x| <= inner` and supported in `|x| <= outer`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub inner: f64,
    pub outer: f64,
}

impl Cutoff {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && outer > inner) {
            return Err(Error::InvalidArgument(format!("cutoff radii must satisfy 0 < {inner} < {outer}")));
        }
        Ok(Self { inner, outer })
    }

    pub fn eval(&self, r: f64) -> f64 {
        1.0 - smooth_step((r - self.inner) / (self.outer - self.inner))
    }

    /// Multiplies both components of `state` by the cutoff.
    pub fn apply(&self, grid: &Grid, state: &StatePair) -> StatePair {
        let psi = grid.sample(|x| self.eval(x.iter().map(|v| v * v).sum::<f64>().sqrt()));
        let mul = |f: &[f64]| f.iter().zip(&psi).map(|(a, b)| a * b).collect::<Vec<_>>();
        StatePair::new(mul(&state.u), mul(&state.v), state.time)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffPair {
    pub psi1: Cutoff,
    pub psi2: Cutoff,
    pub period: f64,
}

impl CutoffPair {
    /// Both cutoffs equal to 1 on `|x| <= ρ + 1 + 3T`, supported in `|x| <= ρ + 2 + 3T`.
    pub fn standard(metric: &Metric, period: f64) -> Result<Self> {
        check_period(period)?;
        let inner = metric.rho + 1.0 + 3.0 * period;
        let c = Cutoff::new(inner, inner + 1.0)?;
        Ok(Self { psi1: c, psi2: c, period })
    }

    /// Radius beyond which both cutoffs vanish.
    pub fn support_radius(&self) -> f64 {
        self.psi1.outer.max(self.psi2.outer)
    }

    /// Smallest `N` with `NT > 2 · support radius`: for `a ≡ 1` in odd
    /// dimension `n >= 3` the exact cutoff propagator vanishes from here on.
    pub fn huygens_n(&self) -> usize {
        (2.0 * self.support_radius() / self.period).floor() as usize + 1
    }
}

fn check_period(period: f64) -> Result<()> {
    if !(period > 0.0) || !period.is_finite() {
        return Err(Error::InvalidArgument(format!("period {period} must be > 0")));
    }
    Ok(())
}

/// Period of `metric`, or `fallback` for time-independent metrics (which are
/// periodic with every period).
pub fn resolve_period(metric: &Metric, fallback: Option<f64>) -> Result<f64> {
    let period = match (metric.period, fallback) {
        (Some(t), _) => t,
        (None, Some(t)) if !metric.is_time_dependent() => t,
        (None, Some(_)) => {
            return Err(Error::InvalidArgument("time-dependent metric without a period".into()));
        }
        (None, None) => {
            return Err(Error::InvalidArgument("static metric needs an explicit period".into()));
        }
    };
    check_period(period)?;
    Ok(period)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub layout: Layout,
    /// Mesh width of the domain-of-dependence grid.
    pub h: f64,
    pub probes: usize,
    /// Power-iteration refinements per probe.
    pub refinements: usize,
    pub seed: u64,
    /// Largest admissible grid, in nodes.
    pub max_nodes: usize,
    /// Passes of the low-pass filter applied before each refinement.
    pub filter_passes: usize,
    /// Probe packets are centered within this radius; defaults to the outer
    /// radius of `ψ₂`.
    pub probe_radius: Option<f64>,
}

impl ProbeConfig {
    pub fn new(layout: Layout, h: f64, probes: usize, seed: u64) -> Self {
        Self { layout, h, probes, refinements: 5, seed, max_nodes: 50_000_000, filter_passes: 256, probe_radius: None }
    }
}

/// Grid on which `ψ₁ 𝒰(NT, 0) ψ₂` is computed without boundary effects, with
/// `dt` dividing `T` so every period map uses identical steps.
pub fn probe_grid(metric: &Metric, cutoffs: &CutoffPair, n_periods: usize, cfg: &ProbeConfig) -> Result<Grid> {
    let horizon = n_periods as f64 * cutoffs.period;
    let spec = GridSpec::domain_of_dependence(cfg.layout, cfg.h, metric.c1, metric.rho, horizon, cutoffs.psi2.outer)
        .with_dt_dividing(cutoffs.period);
    spec.check()?;
    let nodes = match cfg.layout {
        Layout::Radial { .. } => spec.points,
        Layout::Cartesian { dim } => spec.points.saturating_pow(dim as u32),
    };
    if nodes > cfg.max_nodes {
        return Err(Error::Resource(format!(
            "N = {n_periods} needs {nodes} nodes, budget is {}",
            cfg.max_nodes
        )));
    }
    Grid::new(spec)
}

/// `(I + L/λ)^m` with `L` the discrete Laplacian and `λ` its Gershgorin bound:
/// a smooth spectral filter that keeps resolved waves and removes the
/// grid-scale modes, whose group velocity vanishes.
struct LowPass {
    scale: f64,
    passes: usize,
}

impl LowPass {
    fn new(grid: &Grid, passes: usize) -> Self {
        let mut diag = vec![0.0; grid.len()];
        grid.for_each_face(|i, j, w| {
            diag[i] += w;
            diag[j] += w;
        });
        let bound = diag.iter().zip(grid.volumes()).map(|(d, v)| 2.0 * d / v).fold(0.0, f64::max);
        Self { scale: 1.0 / bound, passes }
    }

    fn apply(&self, grid: &Grid, f: &mut [f64]) {
        let ones = vec![1.0; f.len()];
        let mut lap = vec![0.0; f.len()];
        for _ in 0..self.passes {
            grid.apply_operator(&ones, f, &mut lap);
            for (x, l) in f.iter_mut().zip(&lap) {
                *x += self.scale * l;
            }
        }
    }
}

fn probe_packets(cutoffs: &CutoffPair, cfg: &ProbeConfig) -> PacketConfig {
    let center_radius = cfg.probe_radius.unwrap_or(cutoffs.psi2.outer);
    PacketConfig { count: 8, center_radius, width: 0.75, band: (2.0, 6.0) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffNormEstimate {
    pub n_periods: usize,
    /// Largest quotient `|ψ₁ 𝒰(NT,0) ψ₂ g|_E / |g|_E` seen over all probes and refinements.
    pub estimate: f64,
    /// Best quotient per probe.
    pub per_probe: Vec<f64>,
    pub nodes: usize,
}

/// Randomized lower bound on `‖ψ₁ 𝒰(NT, 0) ψ₂‖` in the Hilbert energy norm.
///
/// Each probe starts from seeded packets filling the support of `ψ₂` and is
/// refined by repeated application of the operator. The adjoint is not
/// available, so refinement is a forward power iteration, low-pass filtered
/// between steps so it tracks resolved waves rather than grid-scale modes.
/// Every quotient it produces is still a lower bound.
pub fn cutoff_norm_estimate(
    metric: &Metric,
    cutoffs: &CutoffPair,
    n_periods: usize,
    cfg: &ProbeConfig,
) -> Result<CutoffNormEstimate> {
    if cfg.probes == 0 {
        return Err(Error::InvalidArgument("need at least one probe".into()));
    }
    if metric.is_time_dependent() {
        let t = metric.period.unwrap_or(f64::NAN);
        if (t - cutoffs.period).abs() > 1e-12 * t.abs() {
            return Err(Error::InvalidArgument(format!(
                "cutoff period {} differs from the metric period {t}",
                cutoffs.period
            )));
        }
    }
    let grid = probe_grid(metric, cutoffs, n_periods, cfg)?;
    let prop = Propagator::new(&grid, metric)?;
    let horizon = n_periods as f64 * cutoffs.period;
    let packets = probe_packets(cutoffs, cfg);
    let filter = LowPass::new(&grid, cfg.filter_passes);
    let apply = |g: &StatePair| -> Result<StatePair> {
        let start = cutoffs.psi2.apply(&grid, g);
        let end = prop.run(start, 0.0, horizon, None, |_, _, _| {})?;
        Ok(cutoffs.psi1.apply(&grid, &end))
    };
    let per_probe = (0..cfg.probes)
        .into_par_iter()
        .map(|i| {
            let mut g = random_packets(&grid, &packets, cfg.seed.wrapping_add(i as u64));
            let mut best = 0.0_f64;
            for step in 0..=cfg.refinements {
                if step > 0 {
                    filter.apply(&grid, &mut g.u);
                    filter.apply(&grid, &mut g.v);
                }
                let norm = energy_space_norm_hilbert(&grid, &g);
                if !(norm > 0.0) {
                    break;
                }
                g = g.scaled(1.0 / norm);
                let image = apply(&g)?;
                best = best.max(energy_space_norm_hilbert(&grid, &image));
                g = image;
            }
            Ok(best)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CutoffNormEstimate {
        n_periods,
        estimate: per_probe.iter().copied().fold(0.0, f64::max),
        per_probe,
        nodes: grid.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    /// `d(N) = c e^{−δ N T}`, parameters `(c, δ)`.
    Exponential,
    /// `d(N) = c / ((N+1) ln²(N+e))`, parameter `c`.
    LogSquared,
}

impl DecayModel {
    pub fn eval(self, params: &[f64], n: f64, period: f64) -> f64 {
        match self {
            Self::Exponential => params[0] * (-params[1] * n * period).exp(),
            Self::LogSquared => params[0] / log_squared_weight(n),
        }
    }
}

fn log_squared_weight(n: f64) -> f64 {
    (n + 1.0) * (n + E).ln().powi(2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySeries {
    pub n_values: Vec<usize>,
    pub norm_estimates: Vec<f64>,
    /// `N` values dropped by the resource budget.
    pub skipped: Vec<usize>,
    pub period: f64,
    pub fit_model: Option<DecayModel>,
    pub fit_params: Vec<f64>,
}

impl DecaySeries {
    pub fn new(n_values: Vec<usize>, norm_estimates: Vec<f64>, period: f64) -> Result<Self> {
        if n_values.len() != norm_estimates.len() {
            return Err(Error::InvalidArgument("N values and estimates differ in length".into()));
        }
        if norm_estimates.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::InvalidArgument("norm estimates must be >= 0".into()));
        }
        check_period(period)?;
        Ok(Self { n_values, norm_estimates, skipped: Vec::new(), period, fit_model: None, fit_params: Vec::new() })
    }

    /// Synthetic series sampled from a model.
    pub fn from_model(model: DecayModel, params: &[f64], n_values: Vec<usize>, period: f64) -> Result<Self> {
        let d = n_values.iter().map(|&n| model.eval(params, n as f64, period)).collect();
        Self::new(n_values, d, period)
    }

    pub fn apply_fit(&mut self, report: &DecayFitReport) {
        self.fit_model = report.best;
        self.fit_params = report.best_fit().map(|f| f.params.clone()).unwrap_or_default();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub model: DecayModel,
    pub params: Vec<f64>,
    /// RMS residual of the fit in `ln d`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFitReport {
    pub exponential: Option<ModelFit>,
    pub log_squared: Option<ModelFit>,
    pub best: Option<DecayModel>,
    /// Sum of the measured estimates plus the model value at skipped `N`.
    pub partial_sum: f64,
    /// Model extrapolation of `Σ_{N > N_max} d(N)`; infinite when the best fit
    /// does not decay summably.
    pub tail: f64,
    pub summability_proxy: f64,
    /// Points with a zero estimate, excluded from the log fits.
    pub zero_points: usize,
}

impl DecayFitReport {
    pub fn best_fit(&self) -> Option<&ModelFit> {
        match self.best? {
            DecayModel::Exponential => self.exponential.as_ref(),
            DecayModel::LogSquared => self.log_squared.as_ref(),
        }
    }
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v * v, c + 1));
    (sum / count as f64).sqrt()
}

fn fit_exponential(points: &[(f64, f64)], period: f64) -> Option<ModelFit> {
    if points.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0 * period).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx;
    let intercept = my - slope * mx;
    let residual = rms(xs.iter().zip(&ys).map(|(x, y)| y - (intercept + slope * x)));
    Some(ModelFit { model: DecayModel::Exponential, params: vec![intercept.exp(), -slope], residual })
}

fn fit_log_squared(points: &[(f64, f64)]) -> Option<ModelFit> {
    if points.is_empty() {
        return None;
    }
    let offsets: Vec<f64> = points.iter().map(|&(n, d)| d.ln() + log_squared_weight(n).ln()).collect();
    let log_c = offsets.iter().sum::<f64>() / offsets.len() as f64;
    let residual = rms(offsets.iter().map(|o| o - log_c));
    Some(ModelFit { model: DecayModel::LogSquared, params: vec![log_c.exp()], residual })
}

/// Least-squares fits of both decay models on `ln d(N)` with the
/// summability proxy `Σ_N d(N)`.
pub fn decay_fit(series: &DecaySeries) -> Result<DecayFitReport> {
    if series.n_values.len() < 5 {
        return Err(Error::InvalidArgument(format!(
            "decay fit needs at least 5 estimates, got {}",
            series.n_values.len()
        )));
    }
    let points: Vec<(f64, f64)> = series
        .n_values
        .iter()
        .zip(&series.norm_estimates)
        .filter(|(_, &d)| d > 0.0)
        .map(|(&n, &d)| (n as f64, d))
        .collect();
    let zero_points = series.n_values.len() - points.len();
    let exponential = fit_exponential(&points, series.period);
    let log_squared = fit_log_squared(&points);
    let best = match (&exponential, &log_squared) {
        (Some(e), Some(l)) => Some(if e.residual <= l.residual { e.model } else { l.model }),
        (Some(e), None) => Some(e.model),
        (None, Some(l)) => Some(l.model),
        (None, None) => None,
    };
    let mut report =
        DecayFitReport { exponential, log_squared, best, partial_sum: 0.0, tail: 0.0, summability_proxy: 0.0, zero_points };
    let n_max = series.n_values.iter().copied().max().unwrap_or(0);
    let model = report.best_fit().cloned();
    let mut partial: f64 = series.norm_estimates.iter().sum();
    if let Some(fit) = &model {
        partial += series.skipped.iter().filter(|&&n| n < n_max).map(|&n| fit.model.eval(&fit.params, n as f64, series.period)).sum::<f64>();
    }
    report.partial_sum = partial;
    report.tail = match &model {
        None => 0.0,
        Some(fit) => match fit.model {
            DecayModel::Exponential => {
                let (c, delta) = (fit.params[0], fit.params[1]);
                if delta > 0.0 {
                    let q = (-delta * series.period).exp();
                    c * q.powf(n_max as f64 + 1.0) / (1.0 - q)
                } else {
                    f64::INFINITY
                }
            }
            // ∫_{N_max}^∞ dx / ((x+e) ln²(x+e)) = 1 / ln(N_max + e), an upper
            // bound for the tail sum.
            DecayModel::LogSquared => fit.params[0] / (n_max as f64 + E).ln(),
        },
    };
    report.summability_proxy = report.partial_sum + report.tail;
    Ok(report)
}

/// Estimates at each `N`, skipping those that exceed the node budget.
pub fn decay_series(
    metric: &Metric,
    cutoffs: &CutoffPair,
    n_values: &[usize],
    cfg: &ProbeConfig,
) -> Result<(DecaySeries, Vec<CutoffNormEstimate>)> {
    let mut kept = Vec::new();
    let mut skipped = Vec::new();
    let mut estimates = Vec::new();
    for &n in n_values {
        match cutoff_norm_estimate(metric, cutoffs, n, cfg) {
            Ok(e) => {
                kept.push(n);
                estimates.push(e);
            }
            Err(Error::Resource(_)) => skipped.push(n),
            Err(e) => return Err(e),
        }
    }
    let mut series = DecaySeries::new(kept, estimates.iter().map(|e| e.estimate).collect(), cutoffs.period)?;
    series.skipped = skipped;
    Ok((series, estimates))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencySample {
    pub s: f64,
    pub t: f64,
    /// `|𝒰(t+T, s+T)g − 𝒰(t, s)g|_E / |𝒰(t, s)g|_E`.
    pub relative_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub samples: Vec<ConsistencySample>,
    pub max_relative_difference: f64,
}

fn relative_difference(grid: &Grid, a: &StatePair, b: &StatePair) -> f64 {
    let diff = a.combine(1.0, b, -1.0);
    energy_space_norm_hilbert(grid, &diff) / energy_space_norm_hilbert(grid, b)
}

/// Compares `𝒰(t+T, s+T)` with `𝒰(t, s)` on seeded random states, with
/// `0 <= s < T` and `s <= t <= s + 2T` drawn from the seed.
pub fn periodicity_check(metric: &Metric, period: f64, states: usize, cfg: &ProbeConfig) -> Result<ConsistencyReport> {
    let cutoffs = CutoffPair::standard(metric, period)?;
    let grid = probe_grid(metric, &cutoffs, 4, cfg)?;
    let prop = Propagator::new(&grid, metric)?;
    let packets = probe_packets(&cutoffs, cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let jobs: Vec<(u64, f64, f64)> = (0..states)
        .map(|i| {
            let s = rng.gen_range(0.0..period);
            let t = s + rng.gen_range(0.0..2.0 * period);
            (cfg.seed.wrapping_add(i as u64), s, t)
        })
        .collect();
    let samples = jobs
        .into_par_iter()
        .map(|(seed, s, t)| {
            let g = random_packets(&grid, &packets, seed);
            let base = prop.run(g.clone(), s, t, None, |_, _, _| {})?;
            let shifted = prop.run(g, s + period, t + period, None, |_, _, _| {})?;
            Ok(ConsistencySample { s, t, relative_difference: relative_difference(&grid, &shifted, &base) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConsistencyReport { max_relative_difference: samples.iter().map(|s| s.relative_difference).fold(0.0, f64::max), samples })
}

/// Applies the period map `N` times state by state and compares with one
/// propagation over `[0, NT]`.
pub fn group_check(metric: &Metric, period: f64, n_periods: usize, states: usize, cfg: &ProbeConfig) -> Result<ConsistencyReport> {
    let cutoffs = CutoffPair::standard(metric, period)?;
    let grid = probe_grid(metric, &cutoffs, n_periods, cfg)?;
    let prop = Propagator::new(&grid, metric)?;
    let packets = probe_packets(&cutoffs, cfg);
    let horizon = n_periods as f64 * period;
    let samples = (0..states)
        .into_par_iter()
        .map(|i| {
            let g = random_packets(&grid, &packets, cfg.seed.wrapping_add(i as u64));
            let direct = prop.run(g.clone(), 0.0, horizon, None, |_, _, _| {})?;
            let mut composed = g;
            for j in 0..n_periods {
                let s = j as f64 * period;
                composed = prop.run(composed, s, s + period, None, |_, _, _| {})?;
            }
            Ok(ConsistencySample { s: 0.0, t: horizon, relative_difference: relative_difference(&grid, &composed, &direct) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConsistencyReport { max_relative_difference: samples.iter().map(|s| s.relative_difference).fold(0.0, f64::max), samples })
}
