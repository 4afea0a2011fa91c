use semiwave::duhamel::*;
use semiwave::metric::{bump, Metric};
use semiwave::wavegrid::data::{random_packets, PacketConfig};
use semiwave::wavegrid::norms::{energy_space_norm, y_norm};
use semiwave::wavegrid::{propagate, Boundary, Grid, GridSpec, Layout, Propagator, StatePair};
use semiwave::Error;

/// Classical RK4 for `ü = f(u)`; independent of the leapfrog solver.
fn ode_rk4(u0: f64, v0: f64, f: impl Fn(f64) -> f64, t: f64, steps: usize) -> Vec<f64> {
    let h = t / steps as f64;
    let (mut u, mut v) = (u0, v0);
    let mut out = vec![u];
    for _ in 0..steps {
        let (k1u, k1v) = (v, f(u));
        let (k2u, k2v) = (v + 0.5 * h * k1v, f(u + 0.5 * h * k1u));
        let (k3u, k3v) = (v + 0.5 * h * k2v, f(u + 0.5 * h * k2u));
        let (k4u, k4v) = (v + h * k3v, f(u + h * k3u));
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        out.push(u);
    }
    out
}

fn periodic_box(dt: f64) -> Grid {
    Grid::new(GridSpec::new(Layout::Cartesian { dim: 1 }, 1.0, 8, dt, Boundary::Periodic)).unwrap()
}

fn constant_state(grid: &Grid, u: f64, v: f64) -> StatePair {
    StatePair::new(vec![u; grid.len()], vec![v; grid.len()], 0.0)
}

fn small_radial_case() -> (Grid, StatePair) {
    let spec = GridSpec::domain_of_dependence(Layout::Radial { n: 3 }, 0.02, 1.0, 1.0, 1.0, 2.75);
    let grid = Grid::new(spec).unwrap();
    let data = random_packets(&grid, &PacketConfig::for_support(1.0), 4);
    let data = data.scaled(0.2 / energy_space_norm(&grid, &data));
    (grid, data)
}

#[test]
fn zero_nonlinearity_converges_in_one_iteration() {
    let (grid, data) = small_radial_case();
    let nl = Nonlinearity::zero(4.0).unwrap();
    let out = picard_solve(&grid, &Metric::unit(), &data, &nl, &PicardConfig::new(1.0)).unwrap();
    assert_eq!(out.diagnostics.iterations, 1);
    assert!(out.diagnostics.converged && !out.diagnostics.exploratory);
    let linear = propagate(&grid, &Metric::unit(), data, 0.0, 1.0, None).unwrap();
    assert_eq!(out.history.last().unwrap(), &linear.u);
}

#[test]
fn constant_data_matches_ode() {
    let eps = 0.1;
    let t1 = 1.0;
    let grid = periodic_box(1e-3);
    let nl = Nonlinearity::focusing(3.0).unwrap();
    let cfg = PicardConfig { tol: 1e-13, ..PicardConfig::new(t1) };
    let out = picard_solve(&grid, &Metric::unit(), &constant_state(&grid, eps, 0.0), &nl, &cfg).unwrap();
    assert!(out.diagnostics.converged && out.diagnostics.exploratory);
    let steps = out.history.len() - 1;
    let oracle = ode_rk4(eps, 0.0, |u| u * u * u, t1, steps * 10);
    let err = out
        .history
        .frames
        .iter()
        .enumerate()
        .map(|(j, f)| f.iter().map(|x| (x - oracle[10 * j]).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    assert!(err < 1e-6, "{err}");
}

#[test]
fn picard_agrees_with_direct_solver() {
    let (grid, data) = small_radial_case();
    let nl = Nonlinearity::focusing(4.0).unwrap();
    let cfg = PicardConfig { tol: 1e-12, ..PicardConfig::new(1.0) };
    let out = picard_solve(&grid, &Metric::unit(), &data, &nl, &cfg).unwrap();
    let d = &out.diagnostics;
    assert!(d.converged);
    assert_eq!((d.p, d.q), (8.0, 8.0));
    assert!(d.contraction_ratio.unwrap() < 1.0, "{:?}", d.contraction_ratios);
    let direct = direct_solve(&grid, &Metric::unit(), &data, &nl, 1.0, 1e6).unwrap();
    let diff = out.history.difference(&direct).max_abs();
    assert!(diff <= 1e-5, "{diff}");

    // One more application of the map moves the fixed point by at most 2 tol.
    let prop = Propagator::new(&grid, &Metric::unit()).unwrap();
    let (_, linear) = prop.run_recording(data.clone(), 0.0, 1.0, None).unwrap();
    let again = picard_map(&prop, &linear, &out.history, &nl, 1.0).unwrap();
    assert!(y_norm(&grid, &again.difference(&out.history), d.p, d.q) <= 2.0 * cfg.tol);
}

#[test]
fn exact_ode_blowup_is_detected() {
    let tb: f64 = 1.0;
    let grid = periodic_box(1e-3);
    let nl = Nonlinearity::focusing(3.0).unwrap();
    let s2 = 2f64.sqrt();
    let data = constant_state(&grid, s2 / tb, s2 / (tb * tb));
    match direct_solve(&grid, &Metric::unit(), &data, &nl, 2.0, 1e6) {
        Err(Error::Blowup { time, last_safe_time }) => {
            assert!((0.98..=1.02).contains(&time), "{time}");
            assert!(last_safe_time < time);
        }
        other => panic!("expected blow-up, got {other:?}"),
    }
    let (t, _) = blowup_time(&grid, &Metric::unit(), &data, &nl, 2.0, 1e6).unwrap();
    assert!((t.unwrap() - tb).abs() < 0.02);
}

#[test]
fn picard_reports_blowup_and_stalls() {
    let grid = periodic_box(1e-2);
    let nl = Nonlinearity::focusing(3.0).unwrap();
    let data = constant_state(&grid, 2f64.sqrt(), 2f64.sqrt());
    let cfg = PicardConfig { max_iters: 40, ..PicardConfig::new(2.0) };
    let r = picard_solve(&grid, &Metric::unit(), &data, &nl, &cfg);
    assert!(matches!(r, Err(Error::Blowup { .. }) | Err(Error::NoConvergence { .. })), "{r:?}");
    assert!(picard_solve(&grid, &Metric::unit(), &data, &nl, &PicardConfig { tol: 0.0, ..cfg }).is_err());
}

#[test]
fn linear_limit_of_direct_solver() {
    let (grid, data) = small_radial_case();
    let nl = Nonlinearity::zero(4.0).unwrap();
    let direct = direct_solve(&grid, &Metric::unit(), &data, &nl, 1.0, 1e6).unwrap();
    let linear = propagate(&grid, &Metric::unit(), data, 0.0, 1.0, None).unwrap();
    assert_eq!(direct.last().unwrap(), &linear.u);
    let zero = direct_solve(&grid, &Metric::unit(), &StatePair::zeros(grid.len(), 0.0), &Nonlinearity::focusing(4.0).unwrap(), 1.0, 1e6)
        .unwrap();
    assert_eq!(zero.max_abs(), 0.0);
}

#[test]
fn constant_data_sweep_recovers_ode_slope() {
    let grid = periodic_box(1e-3);
    let k = 3.0;
    let nl = Nonlinearity::focusing(k).unwrap();
    let eps: Vec<f64> = (0..6).map(|i| 4.0 * 0.75f64.powi(i)).collect();
    let sweep = lifespan_sweep(&grid, &Metric::unit(), &constant_state(&grid, 1.0, 0.0), &nl, &eps, 10.0, 1e6).unwrap();
    assert!(sweep.records.iter().all(|r| !r.censored));
    assert!(sweep.is_monotone());
    let slope = sweep.slope_fit.unwrap();
    assert!((slope + (k - 1.0) / 2.0).abs() <= 0.1 * (k - 1.0) / 2.0, "{slope}");
    // The ODE oracle: ü = u³ from (ε, 0) blows up at T(ε) = T(1)/ε.
    for r in &sweep.records {
        let scaled = r.t_star * r.epsilon;
        assert!((scaled - sweep.records[0].t_star * sweep.records[0].epsilon).abs() < 0.02 * scaled);
    }
}

#[test]
fn defocusing_sweep_is_censored() {
    let spec = GridSpec::domain_of_dependence(Layout::Radial { n: 3 }, 0.04, 1.0, 1.0, 4.0, 1.0);
    let grid = Grid::new(spec).unwrap();
    let tpl = StatePair::new(grid.sample(|x| bump(x[0])), vec![0.0; grid.len()], 0.0);
    let nl = Nonlinearity::defocusing(4.0).unwrap();
    let sweep = lifespan_sweep(&grid, &Metric::unit(), &tpl, &nl, &[20.0, 10.0, 5.0], 4.0, 1e6).unwrap();
    assert!(sweep.records.iter().all(|r| r.censored && r.t_star == 4.0));
    assert_eq!(sweep.slope_fit, None);
}

#[test]
fn focusing_packet_sweep_is_monotone() {
    let spec = GridSpec::domain_of_dependence(Layout::Radial { n: 3 }, 0.02, 1.0, 1.0, 4.0, 1.0);
    let grid = Grid::new(spec).unwrap();
    let tpl = StatePair::new(grid.sample(|x| bump(x[0])), vec![0.0; grid.len()], 0.0);
    let nl = Nonlinearity::focusing(4.0).unwrap();
    let eps: Vec<f64> = (0..12).map(|i| 40.0 * 0.8f64.powi(i)).collect();
    let sweep = lifespan_sweep(&grid, &Metric::unit(), &tpl, &nl, &eps, 4.0, 1e6).unwrap();
    assert!(!sweep.records[0].censored);
    assert!(sweep.is_monotone());
    assert_eq!(sweep.d, Some(6.0));
    assert!(lifespan_sweep(&grid, &Metric::unit(), &tpl, &nl, &[1.0, 2.0], 4.0, 1e6).is_err());
}

#[test]
fn budget_interval_is_sound_with_calibrated_constants() {
    use semiwave::calibration::{calibrate, CalibrationConfig};
    let metric = Metric::unit();
    let nl = Nonlinearity::focusing(4.0).unwrap();
    let cfg = CalibrationConfig { trials: 4, horizon: 2.0, h: 0.04, seed: 3 };
    let cal = calibrate(&metric, 3, &nl, &cfg).unwrap();
    let (grid, data) = small_radial_case();
    let g_norm = energy_space_norm(&grid, &data);
    let budget = theorem3_budget(3, 4.0, g_norm, cal.constants).unwrap();
    let t1 = budget.t1.min(1.0);
    let cfg = PicardConfig { tol: 1e-12, ..PicardConfig::new(t1) };
    let out = picard_solve(&grid, &metric, &data, &nl, &cfg).unwrap();
    assert!(out.diagnostics.contraction_ratio.map(|r| r < 1.0).unwrap_or(true));
    let direct = direct_solve(&grid, &metric, &data, &nl, t1, 1e6).unwrap();
    assert!(y_norm(&grid, &direct, 8.0, 8.0) <= 1.1 * budget.m0);
}
