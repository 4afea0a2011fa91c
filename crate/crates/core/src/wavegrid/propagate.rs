use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::Metric;

use super::{CoefficientField, Grid};

/// Default blow-up threshold on `max |u|`.
pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e6;

/// Cauchy pair `(u, u_t)` at time `time`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePair {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub time: f64,
}

impl StatePair {
    pub fn new(u: Vec<f64>, v: Vec<f64>, time: f64) -> Self {
        assert_eq!(u.len(), v.len(), "u and v must live on the same grid");
        Self { u, v, time }
    }

    pub fn zeros(len: usize, time: f64) -> Self {
        Self { u: vec![0.0; len], v: vec![0.0; len], time }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            u: self.u.iter().map(|x| c * x).collect(),
            v: self.v.iter().map(|x| c * x).collect(),
            time: self.time,
        }
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &StatePair, beta: f64) -> Self {
        Self {
            u: self.u.iter().zip(&other.u).map(|(a, b)| alpha * a + beta * b).collect(),
            v: self.v.iter().zip(&other.v).map(|(a, b)| alpha * a + beta * b).collect(),
            time: self.time,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }

    pub fn max_abs_u(&self) -> f64 {
        self.u.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Right-hand side `F` of `u_tt - div(a∇u) = F`, sampled on the solver's time grid.
pub trait Forcing: Sync {
    /// Adds `F` at time sample `step` (time `t`) into `out`. `u` is the current
    /// displacement, which lets nonlinear sources be expressed as forcings.
    fn add_source(&self, step: usize, t: f64, u: &[f64], out: &mut [f64]);
}

/// Time-indexed field on a uniform time grid `t0 + j dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub t0: f64,
    pub dt: f64,
    pub frames: Vec<Vec<f64>>,
}

impl History {
    pub fn new(t0: f64, dt: f64) -> Self {
        Self { t0, dt, frames: Vec::new() }
    }

    /// Uniform history of `steps + 1` frames produced by `f(j, t_j)`.
    pub fn from_fn(t0: f64, dt: f64, steps: usize, mut f: impl FnMut(usize, f64) -> Vec<f64>) -> Self {
        let frames = (0..=steps).map(|j| f(j, t0 + j as f64 * dt)).collect();
        Self { t0, dt, frames }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.dt
    }

    pub fn final_time(&self) -> f64 {
        self.time(self.frames.len().saturating_sub(1))
    }

    pub fn last(&self) -> Option<&Vec<f64>> {
        self.frames.last()
    }

    /// Frame-wise difference `self - other`.
    pub fn difference(&self, other: &History) -> History {
        History {
            t0: self.t0,
            dt: self.dt,
            frames: self
                .frames
                .iter()
                .zip(&other.frames)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.frames.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Forcing read from a stored history (the integrand of a Duhamel term).
pub struct HistoryForcing<'a> {
    pub source: &'a History,
}

impl Forcing for HistoryForcing<'_> {
    fn add_source(&self, step: usize, _t: f64, _u: &[f64], out: &mut [f64]) {
        if let Some(frame) = self.source.frames.get(step) {
            for (o, s) in out.iter_mut().zip(frame) {
                *o += s;
            }
        }
    }
}

/// Explicit leapfrog in kick-drift-kick form for `u_tt = div(a∇u) + F`:
///
/// ```text
/// v_{j+1/2} = v_j + dt/2 (A(t_j) u_j + F_j)
/// u_{j+1}   = u_j + dt v_{j+1/2}
/// v_{j+1}   = v_{j+1/2} + dt/2 (A(t_{j+1}) u_{j+1} + F_{j+1})
/// ```
///
/// Velocities live on the staggered half levels; the integer-level `v` is
/// reported for energy bookkeeping.
pub struct Propagator<'a> {
    grid: &'a Grid,
    coefficients: CoefficientField,
    blowup_threshold: f64,
}

impl<'a> Propagator<'a> {
    pub fn new(grid: &'a Grid, metric: &Metric) -> Result<Self> {
        let bound = grid.spec().cfl_bound(metric.c1);
        if grid.dt() > bound * (1.0 + 1e-12) {
            return Err(Error::Cfl { dt: grid.dt(), bound });
        }
        Ok(Self {
            grid,
            coefficients: CoefficientField::new(grid, metric)?,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
        })
    }

    pub fn with_blowup_threshold(mut self, threshold: f64) -> Self {
        self.blowup_threshold = threshold;
        self
    }

    pub fn grid(&self) -> &Grid {
        self.grid
    }

    pub fn coefficients(&self) -> &CoefficientField {
        &self.coefficients
    }

    /// Number of steps and the uniform step used between `s` and `t`.
    pub fn steps(&self, s: f64, t: f64) -> (usize, f64) {
        step_count(self.grid.dt(), s, t)
    }

    /// Advances `state` from `s` to `t`, calling `observer(j, t_j, state)` at
    /// the initial level and after every step.
    pub fn run<O>(
        &self,
        state: StatePair,
        s: f64,
        t: f64,
        forcing: Option<&dyn Forcing>,
        mut observer: O,
    ) -> Result<StatePair>
    where
        O: FnMut(usize, f64, &StatePair),
    {
        if !(t >= s) {
            return Err(Error::InvalidArgument(format!("propagation requires t >= s (s = {s}, t = {t})")));
        }
        let grid = self.grid;
        let len = grid.len();
        if state.len() != len {
            return Err(Error::InvalidArgument(format!(
                "state has {} nodes, grid has {len}",
                state.len()
            )));
        }
        let (steps, dt) = self.steps(s, t);
        let mut st = state;
        st.time = s;
        grid.clear_fixed(&mut st.u);
        grid.clear_fixed(&mut st.v);

        let time_dependent = !self.coefficients.is_static();
        let mut a = self.coefficients.values(s);
        let mut acc = vec![0.0; len];
        let mut src = vec![0.0; len];
        self.acceleration(&a, 0, s, &st.u, forcing, &mut acc, &mut src);
        observer(0, s, &st);

        let half = 0.5 * dt;
        for j in 0..steps {
            for (v, f) in st.v.iter_mut().zip(&acc) {
                *v += half * f;
            }
            let mut peak = 0.0_f64;
            for (u, v) in st.u.iter_mut().zip(&st.v) {
                *u += dt * v;
                peak = peak.max(u.abs());
            }
            let t_prev = st.time;
            let t_new = if j + 1 == steps { t } else { s + (j + 1) as f64 * dt };
            if !(peak <= self.blowup_threshold) {
                return Err(Error::Blowup {
                    time: 0.5 * (t_prev + t_new),
                    last_safe_time: t_prev,
                });
            }
            if time_dependent {
                self.coefficients.fill(t_new, &mut a);
            }
            self.acceleration(&a, j + 1, t_new, &st.u, forcing, &mut acc, &mut src);
            for (v, f) in st.v.iter_mut().zip(&acc) {
                *v += half * f;
            }
            st.time = t_new;
            observer(j + 1, t_new, &st);
        }
        Ok(st)
    }

    #[allow(clippy::too_many_arguments)]
    fn acceleration(
        &self,
        a: &[f64],
        step: usize,
        t: f64,
        u: &[f64],
        forcing: Option<&dyn Forcing>,
        acc: &mut [f64],
        src: &mut [f64],
    ) {
        self.grid.apply_operator(a, u, acc);
        if let Some(f) = forcing {
            src.fill(0.0);
            f.add_source(step, t, u, src);
            self.grid.clear_fixed(src);
            for (o, s) in acc.iter_mut().zip(src.iter()) {
                *o += s;
            }
        }
    }

    /// Runs and records `u` at every time level.
    pub fn run_recording(
        &self,
        state: StatePair,
        s: f64,
        t: f64,
        forcing: Option<&dyn Forcing>,
    ) -> Result<(StatePair, History)> {
        let (_, dt) = self.steps(s, t);
        let mut history = History::new(s, dt);
        let end = self.run(state, s, t, forcing, |_, _, st| history.frames.push(st.u.clone()))?;
        Ok((end, history))
    }

    /// Duhamel term `∫_{t0}^{t_j} V(t_j, τ) h(τ) dτ` at every time level, with
    /// `source` sampled on this propagator's time grid.
    pub fn duhamel(&self, source: &History, t: f64) -> Result<History> {
        check_history_grid(self, source, t)?;
        let forcing = HistoryForcing { source };
        let zero = StatePair::zeros(self.grid.len(), source.t0);
        Ok(self.run_recording(zero, source.t0, t, Some(&forcing))?.1)
    }
}

pub(crate) fn step_count(dt: f64, s: f64, t: f64) -> (usize, f64) {
    let span = t - s;
    if span <= 0.0 {
        return (0, dt);
    }
    let steps = (span / dt - 1e-9).ceil().max(1.0) as usize;
    (steps, span / steps as f64)
}

/// `𝒰(t, s)` applied to `state`, optionally with a source term.
pub fn propagate(
    grid: &Grid,
    metric: &Metric,
    state: StatePair,
    s: f64,
    t: f64,
    forcing: Option<&dyn Forcing>,
) -> Result<StatePair> {
    Propagator::new(grid, metric)?.run(state, s, t, forcing, |_, _, _| {})
}

/// `∫_s^t V(t, τ) h(τ) dτ`, computed as one forced propagation from zero data.
/// `source` must be sampled on the solver's time grid starting at `source.t0`.
pub fn duhamel_term(grid: &Grid, metric: &Metric, source: &History, t: f64) -> Result<Vec<f64>> {
    let prop = Propagator::new(grid, metric)?;
    check_history_grid(&prop, source, t)?;
    let forcing = HistoryForcing { source };
    let end = prop.run(StatePair::zeros(grid.len(), source.t0), source.t0, t, Some(&forcing), |_, _, _| {})?;
    Ok(end.u)
}

/// Duhamel term recorded at every time level.
pub fn duhamel_history(grid: &Grid, metric: &Metric, source: &History, t: f64) -> Result<History> {
    Propagator::new(grid, metric)?.duhamel(source, t)
}

fn check_history_grid(prop: &Propagator<'_>, source: &History, t: f64) -> Result<()> {
    let (steps, dt) = prop.steps(source.t0, t);
    if source.len() < steps + 1 || (dt - source.dt).abs() > 1e-12 * dt {
        return Err(Error::InvalidArgument(format!(
            "source history ({} frames, dt {}) does not cover the solver grid ({} steps, dt {dt})",
            source.len(),
            source.dt,
            steps
        )));
    }
    Ok(())
}
