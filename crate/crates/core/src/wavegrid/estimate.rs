//! Empirical lower bounds for the Strichartz-type constants, measured as the
//! largest quotient over seeded random data.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{bump, Metric};

use super::data::{packet_field, random_packets, PacketConfig};
use super::norms::{energy_space_norm, energy_space_norm_hilbert, h1dot_norm, l2_norm, lq_norm, trapezoid_weight};
use super::{Forcing, Grid, GridSpec, Layout, Propagator, StatePair};

/// Grid and sampling choices shared by the estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSetup {
    pub layout: Layout,
    /// Mesh width of the domain-of-dependence grid.
    pub h: f64,
    pub packets: PacketConfig,
    /// Temporal width of the pulse sources of the inhomogeneous estimator.
    pub pulse_width: f64,
    pub seed: u64,
}

impl EstimatorSetup {
    pub fn new(layout: Layout, h: f64, metric: &Metric, seed: u64) -> Self {
        Self { layout, h, packets: PacketConfig::for_support(metric.rho), pulse_width: 0.1, seed }
    }

    pub fn grid(&self, metric: &Metric, horizon: f64) -> Result<Grid> {
        Grid::new(GridSpec::domain_of_dependence(
            self.layout,
            self.h,
            metric.c1,
            metric.rho,
            horizon,
            self.packets.support_radius(),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientSample {
    pub trial: usize,
    pub quotient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrichartzEstimate {
    pub p: f64,
    pub q: f64,
    pub horizon: f64,
    /// `max` of `(|u|_{L^p L^q} + sup_t |u(t)|_E) / |g|_E` over the trials.
    pub constant: f64,
    pub samples: Vec<QuotientSample>,
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    Ok(())
}

/// `sup_t |(u, u_t)(t)|_{Ḣ¹×L²}` and `|u|_{L^p L^q}` accumulated on the fly.
struct Accumulator {
    p: f64,
    q: f64,
    dt: f64,
    steps: usize,
    lpq: f64,
    sup_energy: f64,
    sup_h1: f64,
}

impl Accumulator {
    fn new(p: f64, q: f64, steps: usize, dt: f64) -> Self {
        Self { p, q, dt, steps, lpq: 0.0, sup_energy: 0.0, sup_h1: 0.0 }
    }

    fn observe(&mut self, grid: &Grid, j: usize, st: &StatePair) {
        self.lpq += trapezoid_weight(j, self.steps + 1, self.dt) * lq_norm(grid, &st.u, self.q).powf(self.p);
        self.sup_energy = self.sup_energy.max(energy_space_norm(grid, st));
        self.sup_h1 = self.sup_h1.max(h1dot_norm(grid, &st.u));
    }

    fn spacetime(&self) -> f64 {
        self.lpq.powf(1.0 / self.p)
    }
}

/// Largest quotient `(|u|_{L^p L^q} + sup_t |u(t)|_E) / |g|_E` over `trials`
/// random packet data propagated to `horizon`.
pub fn estimate_strichartz_constant(
    metric: &Metric,
    setup: &EstimatorSetup,
    p: f64,
    q: f64,
    trials: usize,
    horizon: f64,
) -> Result<StrichartzEstimate> {
    check_trials(trials)?;
    let grid = setup.grid(metric, horizon)?;
    let prop = Propagator::new(&grid, metric)?;
    let (steps, dt) = prop.steps(0.0, horizon);
    let samples = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let data = random_packets(&grid, &setup.packets, setup.seed.wrapping_add(trial as u64));
            let norm = energy_space_norm(&grid, &data);
            let mut acc = Accumulator::new(p, q, steps, dt);
            prop.run(data, 0.0, horizon, None, |j, _, st| acc.observe(&grid, j, st))?;
            Ok(QuotientSample { trial, quotient: (acc.spacetime() + acc.sup_energy) / norm })
        })
        .collect::<Result<Vec<_>>>()?;
    let constant = samples.iter().map(|s| s.quotient).fold(0.0, f64::max);
    Ok(StrichartzEstimate { p, q, horizon, constant, samples })
}

/// Source `h(t, x) = θ((t − s₀)/w) φ(x)` with a compact temporal bump `θ`.
pub struct PulseSource<'a> {
    pub profile: &'a [f64],
    pub center: f64,
    pub width: f64,
}

impl PulseSource<'_> {
    pub fn temporal(&self, t: f64) -> f64 {
        bump((t - self.center) / self.width)
    }
}

impl Forcing for PulseSource<'_> {
    fn add_source(&self, _step: usize, t: f64, _u: &[f64], out: &mut [f64]) {
        let c = self.temporal(t);
        if c != 0.0 {
            for (o, f) in out.iter_mut().zip(self.profile) {
                *o += c * f;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InhomogeneousEstimate {
    pub p: f64,
    pub q: f64,
    pub t1: f64,
    /// `max |∫ V h|_{L^p L^q} / |h|_{L¹ L²}`.
    pub constant: f64,
    /// `max |∫ V h|_{Y} / |h|_{L¹ L²}` with `Y = C(Ḣ¹) ∩ L^p L^q`.
    pub y_constant: f64,
    pub samples: Vec<QuotientSample>,
}

/// Largest Duhamel quotient over random pulse sources on `[0, t1]`.
pub fn estimate_inhomogeneous_constant(
    metric: &Metric,
    setup: &EstimatorSetup,
    p: f64,
    q: f64,
    trials: usize,
    t1: f64,
) -> Result<InhomogeneousEstimate> {
    check_trials(trials)?;
    let grid = setup.grid(metric, t1)?;
    let prop = Propagator::new(&grid, metric)?;
    let (steps, dt) = prop.steps(0.0, t1);
    let width = setup.pulse_width.max(2.0 * dt).min(0.5 * t1);
    let results = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let seed = setup.seed.wrapping_add(trial as u64);
            let profile = packet_field(&grid, &setup.packets, seed);
            // Stratified pulse centers cover [0, t1 − w] without clustering.
            let frac = (trial as f64 + 0.5) / trials as f64;
            let center = (frac * t1).min(t1 - width).max(0.0);
            let source = PulseSource { profile: &profile, center, width };
            let source_norm = l2_norm(&grid, &profile)
                * (0..=steps)
                    .map(|j| trapezoid_weight(j, steps + 1, dt) * source.temporal(j as f64 * dt))
                    .sum::<f64>();
            let mut acc = Accumulator::new(p, q, steps, dt);
            prop.run(StatePair::zeros(grid.len(), 0.0), 0.0, t1, Some(&source), |j, _, st| {
                acc.observe(&grid, j, st)
            })?;
            Ok((
                QuotientSample { trial, quotient: acc.spacetime() / source_norm },
                (acc.spacetime() + acc.sup_h1) / source_norm,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let constant = results.iter().map(|r| r.0.quotient).fold(0.0, f64::max);
    let y_constant = results.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(InhomogeneousEstimate { p, q, t1, constant, y_constant, samples: results.into_iter().map(|r| r.0).collect() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagatorBound {
    pub horizon: f64,
    /// `max_{s,t,g} |𝒰(t,s)g|_E / |g|_E` in the Hilbert energy norm.
    pub bound: f64,
    pub start_times: Vec<f64>,
}

/// Uniform bound on the energy-space norm of `𝒰(t, s)` for `0 <= s <= t <= horizon`.
pub fn propagator_bound(
    metric: &Metric,
    setup: &EstimatorSetup,
    trials: usize,
    start_times: &[f64],
    horizon: f64,
) -> Result<PropagatorBound> {
    check_trials(trials)?;
    let grid = setup.grid(metric, horizon)?;
    let prop = Propagator::new(&grid, metric)?;
    let jobs: Vec<(usize, f64)> = (0..trials)
        .flat_map(|trial| start_times.iter().filter(|&&s| s < horizon).map(move |&s| (trial, s)))
        .collect();
    let ratios = jobs
        .into_par_iter()
        .map(|(trial, s)| {
            let mut data = random_packets(&grid, &setup.packets, setup.seed.wrapping_add(trial as u64));
            data.time = s;
            let norm = energy_space_norm_hilbert(&grid, &data);
            let mut worst = 0.0_f64;
            prop.run(data, s, horizon, None, |_, _, st| {
                worst = worst.max(energy_space_norm_hilbert(&grid, st) / norm)
            })?;
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PropagatorBound {
        horizon,
        bound: ratios.into_iter().fold(0.0, f64::max),
        start_times: start_times.to_vec(),
    })
}
