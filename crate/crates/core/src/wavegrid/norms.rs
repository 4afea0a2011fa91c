use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::Metric;

use super::{CoefficientField, Grid, History, Layout, StatePair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LqNorm {
    pub q: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub time: f64,
    pub h1dot: f64,
    pub l2: f64,
    pub energy: f64,
    pub lq: Vec<LqNorm>,
    pub hgamma: Option<f64>,
}

pub fn l2_norm(grid: &Grid, f: &[f64]) -> f64 {
    grid.volumes().iter().zip(f).map(|(w, x)| w * x * x).sum::<f64>().sqrt()
}

pub fn lq_norm(grid: &Grid, f: &[f64], q: f64) -> f64 {
    if q == 2.0 {
        return l2_norm(grid, f);
    }
    grid.volumes()
        .iter()
        .zip(f)
        .map(|(w, x)| w * x.abs().powf(q))
        .sum::<f64>()
        .powf(1.0 / q)
}

/// Homogeneous `Ḣ¹` seminorm from face differences.
pub fn h1dot_norm(grid: &Grid, u: &[f64]) -> f64 {
    grid.gradient_form(None, u).sqrt()
}

/// `½ ∫ (v² + a |∇u|²)` with `a` given at the nodes.
pub fn energy_with(grid: &Grid, a: &[f64], state: &StatePair) -> f64 {
    let kinetic: f64 = grid.volumes().iter().zip(&state.v).map(|(w, v)| w * v * v).sum();
    0.5 * (kinetic + grid.gradient_form(Some(a), &state.u))
}

pub fn energy(grid: &Grid, metric: &Metric, state: &StatePair) -> Result<f64> {
    let a = CoefficientField::new(grid, metric)?.values(state.time);
    Ok(energy_with(grid, &a, state))
}

/// `½ ∫ ∂t a |∇u|²`, the rate of change of the energy.
pub fn energy_rate(grid: &Grid, metric: &Metric, state: &StatePair) -> Result<f64> {
    let at = CoefficientField::new(grid, metric)?.time_derivative(state.time);
    Ok(0.5 * grid.gradient_form(Some(&at), &state.u))
}

/// `|g₁|_{Ḣ¹} + |g₂|_{L²}`, the data norm on the right of the Strichartz estimates.
pub fn energy_space_norm(grid: &Grid, state: &StatePair) -> f64 {
    h1dot_norm(grid, &state.u) + l2_norm(grid, &state.v)
}

/// Hilbert norm `sqrt(|g₁|²_{Ḣ¹} + |g₂|²_{L²})` of the energy space.
pub fn energy_space_norm_hilbert(grid: &Grid, state: &StatePair) -> f64 {
    let a = h1dot_norm(grid, &state.u);
    let b = l2_norm(grid, &state.v);
    (a * a + b * b).sqrt()
}

/// `Ḣ^γ` seminorm through the Fourier multiplier `|ξ|^γ`, zero mode dropped.
/// Only defined on periodic cartesian grids.
pub fn hgamma_norm(grid: &Grid, u: &[f64], gamma: f64) -> Result<f64> {
    let dim = match grid.spec().layout {
        Layout::Cartesian { dim } if grid.is_periodic() => dim,
        _ => {
            return Err(Error::InvalidArgument(
                "Ḣ^γ norms need a periodic cartesian grid".into(),
            ))
        }
    };
    let shape = grid.shape();
    let np = shape[0];
    let mut buf: Vec<Complex<f64>> = u.iter().map(|&x| Complex::new(x, 0.0)).collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(np);
    let strides = [1, shape[0], shape[0] * shape[1]];
    let mut line = vec![Complex::new(0.0, 0.0); np];
    for &stride in &strides[..dim] {
        for start in 0..buf.len() {
            // Line starts are the nodes whose coordinate along `d` is zero.
            if !(start / stride).is_multiple_of(np) {
                continue;
            }
            for (i, c) in line.iter_mut().enumerate() {
                *c = buf[start + i * stride];
            }
            fft.process(&mut line);
            for (i, c) in line.iter().enumerate() {
                buf[start + i * stride] = *c;
            }
        }
    }
    let period = 2.0 * grid.spec().extent;
    let wavenumber = |i: usize| {
        let k = if i <= np / 2 { i as f64 } else { i as f64 - np as f64 };
        2.0 * std::f64::consts::PI * k / period
    };
    let total = buf.len() as f64;
    let mut acc = 0.0;
    for (idx, c) in buf.iter().enumerate() {
        let c3 = [idx % shape[0], (idx / shape[0]) % shape[1], idx / (shape[0] * shape[1])];
        let xi2: f64 = (0..dim).map(|d| wavenumber(c3[d]).powi(2)).sum();
        if xi2 == 0.0 {
            continue;
        }
        acc += xi2.powf(gamma) * c.norm_sqr();
    }
    let volume = period.powi(dim as i32);
    Ok((volume / (total * total) * acc).sqrt())
}

pub fn norms(
    grid: &Grid,
    metric: &Metric,
    state: &StatePair,
    q_list: &[f64],
    gamma: Option<f64>,
) -> Result<NormReport> {
    Ok(NormReport {
        time: state.time,
        h1dot: h1dot_norm(grid, &state.u),
        l2: l2_norm(grid, &state.v),
        energy: energy(grid, metric, state)?,
        lq: q_list
            .iter()
            .map(|&q| LqNorm { q, value: lq_norm(grid, &state.u, q) })
            .collect(),
        hgamma: gamma.map(|g| hgamma_norm(grid, &state.u, g)).transpose()?,
    })
}

/// Trapezoid weight of time sample `j` out of `len`.
pub(crate) fn trapezoid_weight(j: usize, len: usize, dt: f64) -> f64 {
    if len < 2 {
        0.0
    } else if j == 0 || j + 1 == len {
        0.5 * dt
    } else {
        dt
    }
}

/// Discrete `L^p_t L^q_x` norm `(Σ_j w_j |u(t_j)|_q^p)^{1/p}` with trapezoid weights.
pub fn spacetime_norm(grid: &Grid, history: &History, p: f64, q: f64) -> f64 {
    let len = history.len();
    history
        .frames
        .iter()
        .enumerate()
        .map(|(j, f)| trapezoid_weight(j, len, history.dt) * lq_norm(grid, f, q).powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// `L¹_t L²_x` norm of a source history.
pub fn l1l2_norm(grid: &Grid, history: &History) -> f64 {
    let len = history.len();
    history
        .frames
        .iter()
        .enumerate()
        .map(|(j, f)| trapezoid_weight(j, len, history.dt) * l2_norm(grid, f))
        .sum()
}

/// `sup_j |u(t_j)|_{Ḣ¹}`.
pub fn sup_h1dot(grid: &Grid, history: &History) -> f64 {
    history.frames.iter().map(|f| h1dot_norm(grid, f)).fold(0.0, f64::max)
}

/// Discrete `Y` norm `sup_t |u|_{Ḣ¹} + |u|_{L^p L^q}`.
pub fn y_norm(grid: &Grid, history: &History, p: f64, q: f64) -> f64 {
    sup_h1dot(grid, history) + spacetime_norm(grid, history, p, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavegrid::{Boundary, GridSpec};
    use std::f64::consts::PI;

    fn periodic_1d(points: usize) -> Grid {
        Grid::new(GridSpec::new(Layout::Cartesian { dim: 1 }, 1.0, points, 0.001, Boundary::Periodic)).unwrap()
    }

    #[test]
    fn zero_state_norms_vanish() {
        let g = periodic_1d(32);
        let r = norms(&g, &Metric::unit(), &StatePair::zeros(32, 0.0), &[4.0, 8.0], Some(0.7)).unwrap();
        assert_eq!((r.h1dot, r.l2, r.energy, r.hgamma), (0.0, 0.0, 0.0, Some(0.0)));
        assert!(r.lq.iter().all(|l| l.value == 0.0));
    }

    #[test]
    fn hgamma_one_matches_stencil() {
        // u = sin(2πx/L) on [-L, L]: both norms approach sqrt(L) 2π/L; the stencil
        // carries an O(h²) factor sin(ξh/2)/(ξh/2).
        let mut errs = Vec::new();
        for points in [32, 64, 128] {
            let g = periodic_1d(points);
            let u = g.sample(|x| (2.0 * PI * x[0]).sin());
            let spectral = hgamma_norm(&g, &u, 1.0).unwrap();
            let stencil = h1dot_norm(&g, &u);
            assert!((spectral - 2.0 * PI).abs() < 1e-10, "{spectral}");
            errs.push((spectral - stencil).abs());
        }
        assert!((errs[0] / errs[1] - 4.0).abs() < 0.1);
        assert!((errs[1] / errs[2] - 4.0).abs() < 0.1);
    }

    #[test]
    fn hgamma_rejects_dirichlet() {
        let g = Grid::new(GridSpec::new(Layout::Cartesian { dim: 1 }, 1.0, 16, 0.01, Boundary::DomainOfDependence))
            .unwrap();
        assert!(hgamma_norm(&g, &[0.0; 16], 1.0).is_err());
    }

    #[test]
    fn hgamma_2d_mode() {
        let g = Grid::new(GridSpec::new(Layout::Cartesian { dim: 2 }, 1.0, 16, 0.01, Boundary::Periodic)).unwrap();
        // sin(πx) cos(2πy): |ξ|² = π² + 4π², |u|²_{L²} = 1 on [-1,1]².
        let u = g.sample(|x| (PI * x[0]).sin() * (2.0 * PI * x[1]).cos());
        let v = hgamma_norm(&g, &u, 0.5).unwrap();
        assert!((v - (5.0 * PI * PI).powf(0.25)).abs() < 1e-10);
    }

    #[test]
    fn spacetime_norm_examples() {
        let g = periodic_1d(16);
        let f = g.sample(|x| 1.0 + x[0]);
        let q = 3.0;
        let fq = lq_norm(&g, &f, q);
        let p = 4.0;
        let steps = 50;
        let dt = 0.02;
        let constant = History::from_fn(0.0, dt, steps, |_, _| f.clone());
        let t1 = steps as f64 * dt;
        assert!((spacetime_norm(&g, &constant, p, q) - t1.powf(1.0 / p) * fq).abs() < 1e-12);
        let zero = History::from_fn(0.0, dt, steps, |_, _| vec![0.0; 16]);
        assert_eq!(spacetime_norm(&g, &zero, p, q), 0.0);
        let impulse = History::from_fn(0.0, dt, steps, |j, _| if j == 7 { f.clone() } else { vec![0.0; 16] });
        assert!((spacetime_norm(&g, &impulse, p, q) - dt.powf(1.0 / p) * fq).abs() < 1e-12);
    }

    #[test]
    fn homogeneity() {
        let g = periodic_1d(32);
        let st = StatePair::new(g.sample(|x| (PI * x[0]).sin()), g.sample(|x| (PI * x[0]).cos()), 0.0);
        let c = -2.5;
        let a = norms(&g, &Metric::unit(), &st, &[4.0], Some(1.0)).unwrap();
        let b = norms(&g, &Metric::unit(), &st.scaled(c), &[4.0], Some(1.0)).unwrap();
        assert!((b.h1dot - c.abs() * a.h1dot).abs() < 1e-12);
        assert!((b.l2 - c.abs() * a.l2).abs() < 1e-12);
        assert!((b.lq[0].value - c.abs() * a.lq[0].value).abs() < 1e-12);
        assert!((b.hgamma.unwrap() - c.abs() * a.hgamma.unwrap()).abs() < 1e-12);
        assert!((b.energy - c * c * a.energy).abs() < 1e-12);
    }
}
