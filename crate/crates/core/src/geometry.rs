//! Null bicharacteristics of `τ² − a(t,x)|ξ|²` and the non-trapping scan.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{norm, Metric};

/// Relative null-constraint tolerance for accepted trajectories.
pub const NULL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayState {
    pub t: f64,
    pub x: Vec<f64>,
    pub tau: f64,
    pub xi: Vec<f64>,
    pub sigma: f64,
}

impl RayState {
    /// Null ray at `(t, x)` moving along `direction` with `τ = 1`,
    /// so `ξ = −direction / sqrt(a)`.
    pub fn null(metric: &Metric, t: f64, x: Vec<f64>, direction: &[f64]) -> Self {
        let a = metric.value(t, &x);
        let len = norm(direction);
        let xi = direction.iter().map(|d| -d / (len * a.sqrt())).collect();
        Self { t, x, tau: 1.0, xi, sigma: 0.0 }
    }

    /// `|τ² − a|ξ|²| / (τ² + a|ξ|²)`.
    pub fn constraint_drift(&self, metric: &Metric) -> f64 {
        let a = metric.value(self.t, &self.x);
        let xi2: f64 = self.xi.iter().map(|v| v * v).sum();
        let tau2 = self.tau * self.tau;
        (tau2 - a * xi2).abs() / (tau2 + a * xi2)
    }

    /// `x · dx/dσ`, positive for outgoing rays.
    pub fn radial_velocity(&self, metric: &Metric) -> f64 {
        let a = metric.value(self.t, &self.x);
        -2.0 * a * self.x.iter().zip(&self.xi).map(|(x, k)| x * k).sum::<f64>()
    }

    pub fn radius(&self) -> f64 {
        norm(&self.x)
    }
}

/// Packed phase-space vector `(t, x, τ, ξ)`.
fn pack(s: &RayState) -> Vec<f64> {
    let mut y = Vec::with_capacity(2 + 2 * s.x.len());
    y.push(s.t);
    y.extend_from_slice(&s.x);
    y.push(s.tau);
    y.extend_from_slice(&s.xi);
    y
}

fn unpack(y: &[f64], sigma: f64) -> RayState {
    let n = (y.len() - 2) / 2;
    RayState { t: y[0], x: y[1..1 + n].to_vec(), tau: y[1 + n], xi: y[2 + n..].to_vec(), sigma }
}

/// Hamilton's equations for `H = τ² − a|ξ|²`.
fn rhs(metric: &Metric, y: &[f64], out: &mut [f64]) {
    let n = (y.len() - 2) / 2;
    let (t, x, tau, xi) = (y[0], &y[1..1 + n], y[1 + n], &y[2 + n..]);
    let m = metric.eval(t, x);
    let xi2: f64 = xi.iter().map(|v| v * v).sum();
    out[0] = 2.0 * tau;
    for i in 0..n {
        out[1 + i] = -2.0 * m.value * xi[i];
        out[2 + n + i] = xi2 * m.grad_value[i];
    }
    out[1 + n] = xi2 * m.dt_value;
}

fn rk4_step(metric: &Metric, y: &[f64], h: f64) -> Vec<f64> {
    let len = y.len();
    let mut k1 = vec![0.0; len];
    let mut k2 = vec![0.0; len];
    let mut k3 = vec![0.0; len];
    let mut k4 = vec![0.0; len];
    let mut tmp = vec![0.0; len];
    rhs(metric, y, &mut k1);
    for i in 0..len {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    rhs(metric, &tmp, &mut k2);
    for i in 0..len {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    rhs(metric, &tmp, &mut k3);
    for i in 0..len {
        tmp[i] = y[i] + h * k3[i];
    }
    rhs(metric, &tmp, &mut k4);
    (0..len).map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<RayState>,
    pub drift: Vec<f64>,
    pub max_drift: f64,
    pub r_values: Vec<f64>,
    /// First outgoing crossing `σ` of each radius, `None` if not reached.
    pub escapes: Vec<Option<f64>>,
}

impl Trajectory {
    pub fn escaped_all(&self) -> bool {
        self.escapes.iter().all(Option::is_some)
    }
}

/// Integrates a null bicharacteristic with classical RK4 until `sigma_max` or
/// until every radius in `r_values` has been crossed outward. Crossings are
/// located by bisection on the length of the crossing step.
pub fn trace_ray(
    metric: &Metric,
    initial: &RayState,
    sigma_max: f64,
    step: f64,
    r_values: &[f64],
) -> Result<Trajectory> {
    if !(step > 0.0) || !(sigma_max > 0.0) {
        return Err(Error::InvalidArgument(format!("step {step} and sigma_max {sigma_max} must be > 0")));
    }
    let d0 = initial.constraint_drift(metric);
    if d0 > NULL_TOL {
        return Err(Error::InvalidArgument(format!("initial state is not null (relative defect {d0:e})")));
    }
    if initial.radius() > metric.rho * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "rays start inside the perturbation: |x(0)| = {} > ρ = {}",
            initial.radius(),
            metric.rho
        )));
    }
    let mut escapes: Vec<Option<f64>> = vec![None; r_values.len()];
    let mut states = vec![initial.clone()];
    let mut drift = vec![d0];
    let mut y = pack(initial);
    let mut sigma = initial.sigma;
    let end = initial.sigma + sigma_max;
    while sigma < end - 1e-15 && escapes.iter().any(Option::is_none) {
        let h = step.min(end - sigma);
        let next = rk4_step(metric, &y, h);
        let state = unpack(&next, sigma + h);
        let dr = state.constraint_drift(metric);
        if dr > NULL_TOL {
            return Err(Error::ConstraintDrift { drift: dr, sigma: sigma + h });
        }
        let r_new = state.radius();
        if state.radial_velocity(metric) > 0.0 {
            for (slot, &r) in escapes.iter_mut().zip(r_values) {
                if slot.is_none() && r_new > r {
                    *slot = Some(sigma + locate_crossing(metric, &y, h, r));
                }
            }
        }
        y = next;
        sigma += h;
        states.push(state);
        drift.push(dr);
    }
    let max_drift = drift.iter().copied().fold(0.0, f64::max);
    Ok(Trajectory { states, drift, max_drift, r_values: r_values.to_vec(), escapes })
}

/// Smallest `s ∈ (0, h]` with `|x(σ + s)| >= r`, by bisection on partial RK4 steps.
fn locate_crossing(metric: &Metric, y: &[f64], h: f64, r: f64) -> f64 {
    let n = (y.len() - 2) / 2;
    let radius = |s: f64| {
        let z = if s == 0.0 { y.to_vec() } else { rk4_step(metric, y, s) };
        norm(&z[1..1 + n])
    };
    if radius(0.0) > r {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, h);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if radius(mid) > r {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NonTrapping,
    TrappingSuspected,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeTable {
    pub r_values: Vec<f64>,
    /// `S_R` as the max over rays of the first escape parameter; `None` when
    /// some ray did not escape.
    pub s_r: Vec<Option<f64>>,
    pub verdict: Verdict,
    pub n_rays: usize,
    pub not_escaped: usize,
    pub drift_failures: usize,
    pub max_drift: f64,
    pub sigma_max: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub n_rays: usize,
    /// Spatial dimension of the rays.
    pub dim: usize,
    pub sigma_max: f64,
    pub step: f64,
    pub seed: u64,
}

/// Radical inverse of `i` in base `b` (Halton sequence).
fn halton(mut i: usize, b: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

/// Unit vector from two uniform coordinates (1, 2 or 3 dimensions).
fn sphere_point(dim: usize, u: f64, v: f64) -> Vec<f64> {
    use std::f64::consts::PI;
    match dim {
        1 => vec![if u < 0.5 { 1.0 } else { -1.0 }],
        2 => vec![(2.0 * PI * u).cos(), (2.0 * PI * u).sin()],
        _ => {
            let z = 1.0 - 2.0 * v;
            let s = (1.0 - z * z).max(0.0).sqrt();
            let mut p = vec![s * (2.0 * PI * u).cos(), s * (2.0 * PI * u).sin(), z];
            p.resize(dim, 0.0);
            p
        }
    }
}

/// Rotates `e₁`-relative motion so that polar angle `θ` is measured from the
/// inward normal `−x̂`; the azimuth comes from `w`.
fn motion_direction(dim: usize, x: &[f64], theta: f64, w: f64) -> Vec<f64> {
    use std::f64::consts::PI;
    let r = norm(x);
    let inward: Vec<f64> = if r > 0.0 { x.iter().map(|v| -v / r).collect() } else {
        let mut e = vec![0.0; dim];
        e[0] = -1.0;
        e
    };
    if dim == 1 {
        return if theta < 0.5 * PI { inward } else { inward.iter().map(|v| -v).collect() };
    }
    // Orthonormal vector to `inward` via Gram-Schmidt against a rotating seed.
    let mut seed = sphere_point(dim, w, 0.5);
    if dim == 2 {
        seed = vec![-inward[1], inward[0]];
        if w >= 0.5 {
            seed = seed.iter().map(|v| -v).collect();
        }
    }
    let dot: f64 = seed.iter().zip(&inward).map(|(a, b)| a * b).sum();
    let mut perp: Vec<f64> = seed.iter().zip(&inward).map(|(s, i)| s - dot * i).collect();
    let len = norm(&perp);
    if len < 1e-9 {
        perp = vec![0.0; dim];
        perp[if inward[0].abs() < 0.9 { 0 } else { 1 }] = 1.0;
        let d: f64 = perp.iter().zip(&inward).map(|(a, b)| a * b).sum();
        perp = perp.iter().zip(&inward).map(|(p, i)| p - d * i).collect();
    }
    let len = norm(&perp);
    inward.iter().zip(&perp).map(|(i, p)| theta.cos() * i + theta.sin() * p / len).collect()
}

/// Stratified launch set: radial levels up to `ρ`, Halton-distributed position
/// and motion directions (polar angle from the inward normal), start times over
/// one period, with a seeded Cranley–Patterson shift. The first ray always
/// starts on `|x| = ρ` moving straight inward.
pub fn launch_set(metric: &Metric, cfg: &ScanConfig) -> Vec<RayState> {
    use std::f64::consts::PI;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let shift: [f64; 5] = std::array::from_fn(|_| rng.gen::<f64>());
    let period = metric.period.unwrap_or(0.0);
    let levels = 5;
    let mut rays = Vec::with_capacity(cfg.n_rays);
    for i in 0..cfg.n_rays {
        let coord = |d: usize, b: usize| (halton(i + 1, b) + shift[d]).fract();
        let (r, theta) = if i == 0 {
            (metric.rho, 0.0)
        } else {
            // Levels include ρ; polar angles hit the inward normal on every fifth ray.
            let r = metric.rho * ((i % levels) as f64 + 1.0) / levels as f64;
            let theta = if i % 5 == 1 { 0.0 } else { PI * coord(2, 5) };
            (r, theta)
        };
        let pos_dir = if i == 0 {
            let mut e = vec![0.0; cfg.dim];
            e[0] = 1.0;
            e
        } else {
            sphere_point(cfg.dim, coord(0, 2), coord(1, 3))
        };
        let x: Vec<f64> = pos_dir.iter().map(|v| v * r).collect();
        let dir = motion_direction(cfg.dim, &x, theta, coord(3, 7));
        let t0 = if i == 0 { 0.0 } else { period * coord(4, 11) };
        rays.push(RayState::null(metric, t0, x, &dir));
    }
    rays
}

enum RayOutcome {
    Escaped(Vec<f64>),
    NotEscaped,
    Drift,
}

pub fn nontrapping_scan(metric: &Metric, r_values: &[f64], cfg: &ScanConfig) -> Result<EscapeTable> {
    if cfg.n_rays == 0 || !(1..=3).contains(&cfg.dim) {
        return Err(Error::InvalidArgument(format!(
            "scan needs n_rays > 0 and dim in 1..=3 (n_rays = {}, dim = {})",
            cfg.n_rays, cfg.dim
        )));
    }
    if let Some(r) = r_values.iter().find(|&&r| !(r > metric.rho)) {
        return Err(Error::InvalidArgument(format!("radius {r} must exceed ρ = {}", metric.rho)));
    }
    let rays = launch_set(metric, cfg);
    let outcomes: Vec<(RayOutcome, f64)> = rays
        .par_iter()
        .map(|ray| {
            // Drift failures are retried with smaller steps before being counted.
            let mut step = cfg.step;
            for _ in 0..3 {
                match trace_ray(metric, ray, cfg.sigma_max, step, r_values) {
                    Ok(tr) if tr.escaped_all() => {
                        return (RayOutcome::Escaped(tr.escapes.iter().map(|e| e.unwrap()).collect()), tr.max_drift)
                    }
                    Ok(tr) => return (RayOutcome::NotEscaped, tr.max_drift),
                    Err(Error::ConstraintDrift { .. }) => step *= 0.5,
                    Err(_) => return (RayOutcome::Drift, f64::NAN),
                }
            }
            (RayOutcome::Drift, f64::NAN)
        })
        .collect();
    let drift_failures = outcomes.iter().filter(|o| matches!(o.0, RayOutcome::Drift)).count();
    let not_escaped = outcomes.iter().filter(|o| matches!(o.0, RayOutcome::NotEscaped)).count();
    let max_drift = outcomes.iter().map(|o| o.1).filter(|d| d.is_finite()).fold(0.0, f64::max);
    let s_r = (0..r_values.len())
        .map(|j| {
            if not_escaped + drift_failures > 0 {
                return None;
            }
            outcomes
                .iter()
                .map(|o| match &o.0 {
                    RayOutcome::Escaped(s) => s[j],
                    _ => unreachable!(),
                })
                .reduce(f64::max)
        })
        .collect();
    let r_max = r_values.iter().copied().fold(metric.rho, f64::max);
    let adequate_budget = cfg.sigma_max >= (metric.rho + r_max) / (2.0 * metric.c0.sqrt());
    let verdict = if drift_failures > 0 {
        Verdict::Inconclusive
    } else if not_escaped > 0 {
        if adequate_budget {
            Verdict::TrappingSuspected
        } else {
            Verdict::Inconclusive
        }
    } else {
        Verdict::NonTrapping
    };
    Ok(EscapeTable {
        r_values: r_values.to_vec(),
        s_r,
        verdict,
        n_rays: cfg.n_rays,
        not_escaped,
        drift_failures,
        max_drift,
        sigma_max: cfg.sigma_max,
        seed: cfg.seed,
    })
}
