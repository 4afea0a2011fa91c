//! Subcommand bodies. Each returns an [`Outcome`]; nothing here touches the
//! file system.

use serde_json::{json, Value};

use semiwave::calibration::{calibrate, Calibration, CalibrationConfig};
use semiwave::duhamel::{
    blowup_time, direct_solve, lifespan_sweep, normalize_template, picard_solve, theorem3_budget, Constants, Form,
    Nonlinearity, PicardConfig, Sign,
};
use semiwave::exponents::{check_admissible, k_window, lifespan_exponent, strichartz_pair_for_k, ExponentQuery, Regime};
use semiwave::geometry::{launch_set, nontrapping_scan, trace_ray, RayState, ScanConfig};
use semiwave::metric::{bump, Metric};
use semiwave::monodromy::{
    decay_fit, decay_series, group_check, periodicity_check, resolve_period, CutoffPair, DecayModel, DecaySeries,
    ProbeConfig,
};
use semiwave::wavegrid::data::{random_packets, PacketConfig, RadialPulse};
use semiwave::wavegrid::norms::{energy, energy_space_norm, l2_norm, norms};
use semiwave::wavegrid::snapshot::Snapshot;
use semiwave::wavegrid::{propagate, Boundary, Grid, GridSpec, Layout, Propagator, StatePair};

use crate::args::*;
use crate::output::{num, opt, Outcome, Table};
use crate::{missing, CliError};

type Res<T> = Result<T, CliError>;

pub(crate) fn dispatch(command: &Command, seed: u64) -> Res<Outcome> {
    match command {
        Command::Exponents(c) => exponents(c),
        Command::Simulate(c) => simulate(c, seed),
        Command::Picard(c) => picard(c, seed),
        Command::Lifespan(c) => lifespan(c, seed),
        Command::Rays(c) => rays(c, seed),
        Command::Monodromy(c) => monodromy(c, seed),
        Command::Calibrate(c) => calibrate_cmd(c, seed),
        Command::Selftest => selftest(),
    }
}

// Resolved blocks have every defaulted field set; `unwrap` below relies on it.

fn build_metric(m: &MetricArgs) -> Res<Metric> {
    let rho = m.rho.unwrap();
    let metric = match m.family.unwrap() {
        MetricKind::Unit => {
            if !(rho > 0.0) {
                return Err(CliError::Validation(format!("rho = {rho} must be > 0")));
            }
            Metric { rho, ..Metric::unit() }
        }
        MetricKind::StaticBump => Metric::static_bump(m.amplitude.unwrap(), rho)?,
        MetricKind::PeriodicBump => {
            Metric::periodic_bump(m.amplitude.unwrap(), rho, m.period.unwrap(), m.mod_depth.unwrap())?
        }
    };
    Ok(metric)
}

fn build_nonlinearity(n: &NonlinearityArgs) -> Res<Nonlinearity> {
    let sign = match n.sign.unwrap() {
        SignKind::Focusing => Sign::Focusing,
        SignKind::Defocusing => Sign::Defocusing,
    };
    let form = match n.form.unwrap() {
        FormKind::Pure => Form::PurePower,
        FormKind::Smoothed => Form::SmoothedPower { mu: n.mu.unwrap() },
    };
    Ok(Nonlinearity::new(n.k.unwrap(), sign, form)?)
}

fn layout(g: &GridArgs) -> Layout {
    match g.layout.unwrap() {
        LayoutKind::Radial => Layout::Radial { n: g.n.unwrap() },
        LayoutKind::Cartesian => Layout::Cartesian { dim: g.n.unwrap() },
    }
}

fn build_grid(g: &GridArgs, metric: &Metric, horizon: f64, data_radius: f64) -> Res<Grid> {
    let h = g.h.unwrap();
    if !(h > 0.0) {
        return Err(CliError::Validation(format!("h = {h} must be > 0")));
    }
    let spec = match g.boundary.unwrap() {
        BoundaryKind::Periodic => {
            let extent = g.extent.unwrap();
            let points = (2.0 * extent / h).round().max(3.0) as usize;
            GridSpec::with_cfl(layout(g), extent, points, Boundary::Periodic, metric.c1)
        }
        BoundaryKind::Dod => GridSpec::domain_of_dependence(layout(g), h, metric.c1, metric.rho, horizon, data_radius),
    };
    Ok(Grid::new(spec)?)
}

fn grid_summary(grid: &Grid) -> Value {
    json!({
        "layout": grid.spec().layout,
        "boundary": grid.spec().boundary,
        "extent": grid.spec().extent,
        "points": grid.spec().points,
        "nodes": grid.len(),
        "h": grid.h(),
        "dt": grid.dt(),
    })
}

const PULSE: RadialPulse = RadialPulse { center: 1.0, width: 0.5 };

fn data_radius(kind: DataKind, metric: &Metric) -> f64 {
    match kind {
        DataKind::Packets => PacketConfig::for_support(metric.rho).support_radius(),
        DataKind::Bump | DataKind::Constant => 1.0,
        DataKind::Pulse => PULSE.center + PULSE.width,
    }
}

fn data_template(kind: DataKind, grid: &Grid, metric: &Metric, seed: u64) -> Res<StatePair> {
    let zeros = vec![0.0; grid.len()];
    Ok(match kind {
        DataKind::Packets => random_packets(grid, &PacketConfig::for_support(metric.rho), seed),
        DataKind::Bump => {
            StatePair::new(grid.sample(|x| bump(x.iter().map(|v| v * v).sum::<f64>().sqrt())), zeros, 0.0)
        }
        DataKind::Pulse => {
            if grid.spec().layout != (Layout::Radial { n: 3 }) {
                return Err(CliError::Validation("pulse data needs a radial grid with n = 3".into()));
            }
            PULSE.state(grid, 0.0)
        }
        DataKind::Constant => {
            if !grid.is_periodic() {
                return Err(CliError::Validation("constant data needs --boundary periodic".into()));
            }
            StatePair::new(vec![1.0; grid.len()], zeros, 0.0)
        }
    })
}

fn scaled_data(d: &DataArgs, grid: &Grid, metric: &Metric, seed: u64) -> Res<StatePair> {
    let template = data_template(d.kind.unwrap(), grid, metric, seed)?;
    Ok(normalize_template(grid, &template)?.scaled(d.data_norm.unwrap()))
}

fn exponents(c: &ExponentsCmd) -> Res<Outcome> {
    let n = c.n.ok_or_else(|| missing("exponents", "n"))?;
    let k = c.k.ok_or_else(|| missing("exponents", "k"))?;
    let regime = match c.regime.unwrap() {
        RegimeKind::Local => Regime::Local,
        RegimeKind::Global => Regime::Global,
    };
    let query = ExponentQuery::new(n, k, c.gamma.unwrap(), regime)?;
    let window = k_window(n, regime)?;
    let set = strichartz_pair_for_k(n, k, regime)?;
    let at_gamma = check_admissible(n, set.p, set.q, query.gamma, regime)?;

    let mut table = Table::new("k_window", &["n", "regime", "lower", "upper", "upper_closed", "lower_exact", "upper_exact"]);
    for dim in 3..=c.table_max_n.unwrap().max(3) {
        for r in [Regime::Local, Regime::Global] {
            let w = k_window(dim, r)?;
            table.push(vec![
                dim.to_string(),
                r.to_string(),
                num(w.lower),
                num(w.upper),
                w.upper_closed.to_string(),
                w.lower_exact.to_string(),
                w.upper_exact.to_string(),
            ]);
        }
    }
    Ok(Outcome {
        results: json!({
            "n": n,
            "k": k,
            "gamma": query.gamma,
            "regime": regime,
            "k_window": window.to_string(),
            "p": set.p,
            "q": set.q,
            "d": set.d,
            "k_over_p": set.k_over_p(),
            "admissible_local": set.admissible_local,
            "admissible_global": set.admissible_global,
            "admissible_at_gamma": at_gamma,
        }),
        tables: vec![table],
        ..Outcome::default()
    })
}

fn simulate(c: &SimulateCmd, seed: u64) -> Res<Outcome> {
    let metric = build_metric(&c.metric)?;
    let s = &c.simulate;
    let horizon = s.horizon.unwrap();
    if !(horizon > 0.0) {
        return Err(CliError::Validation(format!("horizon = {horizon} must be > 0")));
    }
    let kind = c.data.kind.unwrap();
    let grid = build_grid(&c.grid, &metric, horizon, data_radius(kind, &metric))?;
    let data = scaled_data(&c.data, &grid, &metric, seed)?;
    let prop = Propagator::new(&grid, &metric)?;
    let (steps, _) = prop.steps(0.0, horizon);
    let every = (steps / s.rows.unwrap().max(1)).max(1);
    let q_list = s.q_list.clone().unwrap();
    let snaps = s.snapshots.unwrap();
    let snap_steps: Vec<usize> = if snaps == 0 { Vec::new() } else { (0..=snaps).map(|i| i * steps / snaps).collect() };

    let mut rows = Vec::new();
    let mut files = Vec::new();
    let mut error = None;
    let end = prop.run(data, 0.0, horizon, None, |j, _, st| {
        if j % every == 0 || j == steps {
            match norms(&grid, &metric, st, &q_list, s.gamma) {
                Ok(r) => rows.push((j, r)),
                Err(e) => error = error.take().or(Some(e)),
            }
        }
        if snap_steps.contains(&j) {
            let mut bytes = Vec::new();
            if Snapshot::from_grid(&grid, &st.u, st.time).write_to(&mut bytes).is_ok() {
                files.push((format!("simulate_snapshot_{:04}.swsnap", files.len()), bytes));
            }
        }
    })?;
    if let Some(e) = error {
        return Err(e.into());
    }

    let mut header = vec!["step".to_string(), "time".into(), "h1dot".into(), "l2".into(), "energy".into()];
    header.extend(q_list.iter().map(|q| format!("lq_{}", num(*q))));
    header.push("hgamma".into());
    let mut table = Table { name: "propagate_norms".into(), header, rows: Vec::new() };
    for (j, r) in &rows {
        let mut row = vec![j.to_string(), num(r.time), num(r.h1dot), num(r.l2), num(r.energy)];
        row.extend(r.lq.iter().map(|l| num(l.value)));
        row.push(opt(r.hgamma));
        table.push(row);
    }
    let mut tables = vec![table];
    if let Some(ladder) = &s.ladder {
        tables.push(resolution_ladder(c, &metric, ladder, horizon, seed)?);
    }
    let e0 = rows.first().map(|r| r.1.energy).unwrap_or(0.0);
    let drift = rows.iter().map(|r| (r.1.energy - e0).abs()).fold(0.0, f64::max) / e0;
    Ok(Outcome {
        results: json!({
            "grid": grid_summary(&grid),
            "steps": steps,
            "energy_initial": e0,
            "energy_final": rows.last().map(|r| r.1.energy),
            "relative_energy_drift": drift,
            "max_abs_u_final": end.max_abs_u(),
            "static_metric": !metric.is_time_dependent(),
        }),
        tables,
        plot: Some(
            "set datafile separator ','\nset key autotitle columnhead\nset xlabel 't'\nset ylabel 'energy'\n\
             plot 'propagate_norms.csv' using 2:5 with lines\n"
                .into(),
        ),
        files,
        failure: None,
    })
}

/// Reruns the simulation at each mesh width and records final-time norms.
/// Pulse data on the unit metric also gets its error against the exact
/// solution.
fn resolution_ladder(c: &SimulateCmd, metric: &Metric, ladder: &[f64], horizon: f64, seed: u64) -> Res<Table> {
    let kind = c.data.kind.unwrap();
    let exact = kind == DataKind::Pulse && c.metric.family == Some(MetricKind::Unit);
    let mut table = Table::new("resolution_ladder", &["h", "energy", "l2", "h1dot", "l2_error"]);
    for &h in ladder {
        let args = GridArgs { h: Some(h), ..c.grid.clone() };
        let grid = build_grid(&args, metric, horizon, data_radius(kind, metric))?;
        let data = scaled_data(&c.data, &grid, metric, seed)?;
        let end = propagate(&grid, metric, data, 0.0, horizon, None)?;
        let r = norms(&grid, metric, &end, &[], None)?;
        let error = exact.then(|| {
            let reference = PULSE.state(&grid, horizon);
            let scale = c.data.data_norm.unwrap() / energy_space_norm(&grid, &PULSE.state(&grid, 0.0));
            let diff: Vec<f64> = end.u.iter().zip(&reference.u).map(|(a, b)| a - scale * b).collect();
            l2_norm(&grid, &diff)
        });
        table.push(vec![num(h), num(r.energy), num(r.l2), num(r.h1dot), opt(error)]);
    }
    Ok(table)
}

fn read_constants(path: &std::path::Path) -> Res<Constants> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read constants {}: {e}", path.display())))?;
    if let Ok(cal) = serde_json::from_str::<Calibration>(&text) {
        return Ok(cal.constants);
    }
    serde_json::from_str::<Constants>(&text)
        .map_err(|e| CliError::Validation(format!("constants {}: {e}", path.display())))
}

fn picard(c: &PicardCmd, seed: u64) -> Res<Outcome> {
    let metric = build_metric(&c.metric)?;
    let nl = build_nonlinearity(&c.nonlinearity)?;
    let p = &c.picard;
    let kind = c.data.kind.unwrap();
    let g_norm = c.data.data_norm.unwrap();
    let mut t1 = p.t1.unwrap();
    let budget = match &p.constants {
        Some(path) => {
            if kind == DataKind::Constant {
                return Err(CliError::Validation("the budget needs data with a nonzero energy norm".into()));
            }
            let b = theorem3_budget(c.grid.n.unwrap(), nl.k, g_norm, read_constants(path)?)?;
            t1 = t1.min(b.t1);
            Some(b)
        }
        None => None,
    };
    let grid = build_grid(&c.grid, &metric, t1, data_radius(kind, &metric))?;
    let data = scaled_data(&c.data, &grid, &metric, seed)?;
    let cfg = PicardConfig { tol: p.tol.unwrap(), max_iters: p.max_iters.unwrap(), ..PicardConfig::new(t1) };
    let out = picard_solve(&grid, &metric, &data, &nl, &cfg)?;
    let d = &out.diagnostics;
    let direct = direct_solve(&grid, &metric, &data, &nl, t1, cfg.blowup_threshold)?;
    let direct_difference = out.history.difference(&direct).max_abs();

    let mut table = Table::new("picard_solve", &["iteration", "difference", "contraction_ratio"]);
    for (i, diff) in d.differences.iter().enumerate() {
        let ratio = if i == 0 { None } else { d.contraction_ratios.get(i - 1).copied() };
        table.push(vec![(i + 1).to_string(), num(*diff), opt(ratio)]);
    }
    let failure = (!d.converged).then(|| {
        CliError::Numerical(format!("Picard iteration did not reach tol {} in {} iterations", cfg.tol, d.iterations))
    });
    Ok(Outcome {
        results: json!({
            "grid": grid_summary(&grid),
            "t1": t1,
            "budget": budget,
            "diagnostics": d,
            "direct_solve_difference": direct_difference,
        }),
        tables: vec![table],
        plot: Some(
            "set datafile separator ','\nset key autotitle columnhead\nset logscale y\nset xlabel 'iteration'\n\
             plot 'picard_solve.csv' using 1:2 with linespoints\n"
                .into(),
        ),
        files: Vec::new(),
        failure,
    })
}

fn lifespan(c: &LifespanCmd, seed: u64) -> Res<Outcome> {
    let mut eps = c.lifespan.epsilons.clone().ok_or_else(|| missing("lifespan", "epsilons"))?;
    // The sweep wants strictly decreasing amplitudes; accept any order.
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.dedup();
    let metric = build_metric(&c.metric)?;
    let nl = build_nonlinearity(&c.nonlinearity)?;
    let horizon = c.lifespan.horizon.unwrap();
    if !(horizon > 0.0) {
        return Err(CliError::Validation(format!("horizon = {horizon} must be > 0")));
    }
    let kind = c.data.kind.unwrap();
    let grid = build_grid(&c.grid, &metric, horizon, data_radius(kind, &metric))?;
    let template = data_template(kind, &grid, &metric, seed)?;
    let sweep = lifespan_sweep(&grid, &metric, &template, &nl, &eps, horizon, c.lifespan.threshold.unwrap())?;

    let mut table = Table::new("lifespan_sweep", &["epsilon", "t_star", "censored", "t1_theory", "iters_used"]);
    for r in &sweep.records {
        table.push(vec![num(r.epsilon), num(r.t_star), r.censored.to_string(), opt(r.t1_theory), r.iters_used.to_string()]);
    }
    let violations: Vec<f64> = sweep.lower_bound_violations().iter().map(|r| r.epsilon).collect();
    Ok(Outcome {
        results: json!({
            "grid": grid_summary(&grid),
            "slope_fit": sweep.slope_fit,
            "d": sweep.d,
            "constant_data_slope": -(nl.k - 1.0) / 2.0,
            "monotone": sweep.is_monotone(),
            "satisfies_lower_bound": violations.is_empty(),
            "lower_bound_violations": violations,
            "records": sweep.records,
        }),
        tables: vec![table],
        plot: Some(
            "set datafile separator ','\nset key autotitle columnhead\nset logscale xy\nset xlabel 'epsilon'\n\
             set ylabel 't_star'\nplot 'lifespan_sweep.csv' using 1:2 with linespoints, \
             '' using 1:4 with lines title 'anchored bound'\n"
                .into(),
        ),
        ..Outcome::default()
    })
}

fn rays(c: &RaysCmd, seed: u64) -> Res<Outcome> {
    let metric = build_metric(&c.metric)?;
    let r = &c.rays;
    let rho = metric.rho;
    let r_values = r.r_values.clone().unwrap_or_else(|| vec![rho + 0.5, 2.0 * rho, 4.0 * rho]);
    let cfg = ScanConfig {
        n_rays: r.n_rays.unwrap(),
        dim: r.ray_dim.unwrap(),
        sigma_max: r.sigma_max.unwrap(),
        step: r.step.unwrap(),
        seed,
    };
    let escape = nontrapping_scan(&metric, &r_values, &cfg)?;
    let mut table = Table::new("nontrapping_scan", &["r", "s_r"]);
    for (rv, s) in escape.r_values.iter().zip(&escape.s_r) {
        table.push(vec![num(*rv), opt(*s)]);
    }
    let mut tables = vec![table];
    let traced = r.trace.unwrap();
    if traced > 0 {
        let dim = cfg.dim;
        let mut header = vec!["ray".to_string(), "sigma".into(), "t".into()];
        header.extend((0..dim).map(|i| format!("x{i}")));
        header.push("tau".into());
        header.extend((0..dim).map(|i| format!("xi{i}")));
        header.push("drift".into());
        let mut paths = Table { name: "trace_ray".into(), header, rows: Vec::new() };
        let rays: Vec<RayState> = launch_set(&metric, &cfg).into_iter().take(traced).collect();
        for (i, ray) in rays.iter().enumerate() {
            let tr = trace_ray(&metric, ray, cfg.sigma_max, cfg.step, &r_values)?;
            let stride = (tr.states.len() / 400).max(1);
            for (j, (st, dr)) in tr.states.iter().zip(&tr.drift).enumerate() {
                if j % stride == 0 || j + 1 == tr.states.len() {
                    let mut row = vec![i.to_string(), num(st.sigma), num(st.t)];
                    row.extend(st.x.iter().map(|v| num(*v)));
                    row.push(num(st.tau));
                    row.extend(st.xi.iter().map(|v| num(*v)));
                    row.push(num(*dr));
                    paths.push(row);
                }
            }
        }
        tables.push(paths);
    }
    Ok(Outcome {
        results: serde_json::to_value(&escape).unwrap_or(Value::Null),
        tables,
        plot: Some(
            "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'R'\nset ylabel 'S_R'\n\
             plot 'nontrapping_scan.csv' using 1:2 with linespoints\n"
                .into(),
        ),
        ..Outcome::default()
    })
}

fn monodromy(c: &MonodromyCmd, seed: u64) -> Res<Outcome> {
    let metric = build_metric(&c.metric)?;
    if c.grid.boundary == Some(BoundaryKind::Periodic) {
        return Err(CliError::Validation("monodromy runs on domain-of-dependence grids only".into()));
    }
    let m = &c.monodromy;
    let period = resolve_period(&metric, c.metric.period)?;
    let cutoffs = CutoffPair::standard(&metric, period)?;
    let cfg = ProbeConfig {
        refinements: m.refinements.unwrap(),
        max_nodes: m.max_nodes.unwrap(),
        ..ProbeConfig::new(layout(&c.grid), c.grid.h.unwrap(), m.probes.unwrap(), seed)
    };
    let n_values = m.n_values.clone().unwrap();
    let (mut series, estimates) = decay_series(&metric, &cutoffs, &n_values, &cfg)?;

    let mut table = Table::new("cutoff_norm_estimate", &["N", "estimate", "probes", "skipped"]);
    for &n in &n_values {
        match estimates.iter().find(|e| e.n_periods == n) {
            Some(e) => table.push(vec![n.to_string(), num(e.estimate), cfg.probes.to_string(), "false".into()]),
            None => table.push(vec![n.to_string(), String::new(), cfg.probes.to_string(), "true".into()]),
        }
    }
    let fit = if series.n_values.len() >= 5 {
        let report = decay_fit(&series)?;
        series.apply_fit(&report);
        Some(report)
    } else {
        None
    };
    let mut tables = vec![table];
    let states = m.periodicity_states.unwrap();
    let periodicity = if states > 0 {
        let report = periodicity_check(&metric, period, states, &cfg)?;
        let mut t = Table::new("periodicity_check", &["s", "t", "relative_difference"]);
        for s in &report.samples {
            t.push(vec![num(s.s), num(s.t), num(s.relative_difference)]);
        }
        tables.push(t);
        Some(report.max_relative_difference)
    } else {
        None
    };
    let group_n = m.group_n.unwrap();
    let group = if group_n > 0 {
        Some(group_check(&metric, period, group_n, 3, &cfg)?.max_relative_difference)
    } else {
        None
    };
    Ok(Outcome {
        results: json!({
            "period": period,
            "cutoffs": cutoffs,
            "huygens_n": cutoffs.huygens_n(),
            "series": series,
            "decay_fit": fit,
            "periodicity_max_relative_difference": periodicity,
            "group_check_n": group_n,
            "group_max_relative_difference": group,
            "note": "decay evidence is consistent with, not a proof of, local energy decay",
        }),
        tables,
        plot: Some(
            "set datafile separator ','\nset key autotitle columnhead\nset logscale y\nset xlabel 'N'\n\
             plot 'cutoff_norm_estimate.csv' using 1:2 with linespoints\n"
                .into(),
        ),
        ..Outcome::default()
    })
}

fn calibrate_cmd(c: &CalibrateCmd, seed: u64) -> Res<Outcome> {
    let metric = build_metric(&c.metric)?;
    let nl = build_nonlinearity(&c.nonlinearity)?;
    let a = &c.calibrate;
    let n = c.grid.n.unwrap();
    let cfg = CalibrationConfig { trials: a.trials.unwrap(), horizon: a.horizon.unwrap(), h: c.grid.h.unwrap(), seed };
    let cal = calibrate(&metric, n, &nl, &cfg)?;
    let bytes = serde_json::to_vec_pretty(&cal).map_err(|e| CliError::Validation(e.to_string()))?;

    // Round trip through the file format consumed by `picard --constants`.
    let back: Calibration = serde_json::from_slice(&bytes).map_err(|e| CliError::Validation(e.to_string()))?;
    let g_norm = a.g_norm.unwrap();
    let budget = match theorem3_budget(n, nl.k, g_norm, back.constants) {
        Ok(b) => json!({
            "feasible": true,
            "ball_ok": b.ball_lhs <= b.m0 * (1.0 + 1e-12),
            "contraction_ok": b.contraction_lhs < 1.0,
            "budget": b,
        }),
        Err(e) => json!({ "feasible": false, "reason": e.to_string() }),
    };

    let mut table = Table::new("calibrate_samples", &["estimator", "trial", "quotient"]);
    for s in &cal.strichartz.samples {
        table.push(vec!["strichartz".into(), s.trial.to_string(), num(s.quotient)]);
    }
    for s in &cal.inhomogeneous.samples {
        table.push(vec!["inhomogeneous".into(), s.trial.to_string(), num(s.quotient)]);
    }
    Ok(Outcome {
        results: json!({
            "constants": cal.constants,
            "p": cal.p,
            "q": cal.q,
            "nonlinearity": cal.nonlinearity,
            "g_norm": g_norm,
            "budget_check": budget,
            "constants_file": "calibrate_constants.json",
        }),
        tables: vec![table],
        files: vec![("calibrate_constants.json".into(), bytes)],
        ..Outcome::default()
    })
}

struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
}

fn check(name: &'static str, value: f64, tolerance: f64) -> Check {
    Check { name, value, tolerance }
}

fn selftest() -> Res<Outcome> {
    let mut checks = Vec::new();

    let set = strichartz_pair_for_k(3, 4.0, Regime::Global)?;
    let d = lifespan_exponent(3, 4.0)?;
    checks.push(check("exponents_n3_k4", (set.p - 8.0).abs() + (set.q - 8.0).abs() + (d - 6.0).abs(), 0.0));

    let mut worst: f64 = 0.0;
    for n in 3..=10 {
        let w = k_window(n, Regime::Local)?;
        let k = 0.5 * (w.lower + w.upper);
        let s = strichartz_pair_for_k(n, k, Regime::Local)?;
        let nf = n as f64;
        worst = worst.max((1.0 / s.p - (nf * (s.q - 2.0) / (2.0 * s.q) - 1.0)).abs());
    }
    checks.push(check("scaling_identity_n3_to_n10", worst, 1e-12));

    let metric = Metric::static_bump(-0.4, 1.0)?;
    let grid = Grid::new(GridSpec::domain_of_dependence(Layout::Radial { n: 3 }, 0.02, metric.c1, 1.0, 1.0, 1.5))?;
    let zero = propagate(&grid, &metric, StatePair::zeros(grid.len(), 0.0), 0.0, 1.0, None)?;
    checks.push(check("zero_data_stays_zero", zero.max_abs_u(), 0.0));

    let unit = Metric::unit();
    let free = propagate(&grid, &unit, PULSE.state(&grid, 0.0), 0.0, 0.5, None)?;
    let exact = PULSE.state(&grid, 0.5);
    let diff: Vec<f64> = free.u.iter().zip(&exact.u).map(|(a, b)| a - b).collect();
    checks.push(check("free_radial_wave_error", l2_norm(&grid, &diff) / l2_norm(&grid, &exact.u), 1e-2));

    let fine = Grid::new(GridSpec::domain_of_dependence(Layout::Radial { n: 3 }, 0.01, metric.c1, 1.0, 1.0, 1.5))?;
    let e0 = energy(&fine, &metric, &PULSE.state(&fine, 0.0))?;
    let moved = propagate(&fine, &metric, PULSE.state(&fine, 0.0), 0.0, 1.0, None)?;
    checks.push(check("static_energy_drift", (energy(&fine, &metric, &moved)? - e0).abs() / e0, 1e-3));

    let ray = RayState { t: 0.0, x: vec![0.0; 3], tau: 1.0, xi: vec![1.0, 0.0, 0.0], sigma: 0.0 };
    let tr = trace_ray(&unit, &ray, 5.0, 0.05, &[1.5, 3.0])?;
    let escape_err = tr.escapes.iter().zip([1.5, 3.0]).map(|(s, r)| s.map(|s| (s - r / 2.0).abs()).unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    checks.push(check("free_ray_escape", escape_err, 1e-10));

    let series = DecaySeries::from_model(DecayModel::Exponential, &[1.0, 0.5], (0..8).collect(), 1.0)?;
    let fit = decay_fit(&series)?;
    checks.push(check("decay_fit_recovers_exponential", fit.exponential.map(|f| f.residual).unwrap_or(f64::INFINITY), 1e-10));

    let nl = Nonlinearity::zero(4.0)?;
    let data = random_packets(&grid, &PacketConfig::for_support(1.0), 1).scaled(1e-2);
    let out = picard_solve(&grid, &unit, &data, &nl, &PicardConfig::new(0.5))?;
    checks.push(check("zero_nonlinearity_one_iteration", (out.diagnostics.iterations as f64 - 1.0).abs(), 0.0));

    let mut bytes = Vec::new();
    let snap = Snapshot::from_grid(&grid, &data.u, 0.0);
    snap.write_to(&mut bytes)?;
    let same = Snapshot::read_from(&bytes[..])? == snap;
    checks.push(check("snapshot_round_trip", if same { 0.0 } else { 1.0 }, 0.0));

    let box1 = Grid::new(GridSpec::new(Layout::Cartesian { dim: 1 }, 1.0, 8, 1e-3, Boundary::Periodic))?;
    let s2 = 2f64.sqrt();
    let ode = StatePair::new(vec![s2; 8], vec![s2; 8], 0.0);
    let (tb, _) = blowup_time(&box1, &unit, &ode, &Nonlinearity::focusing(3.0)?, 2.0, 1e6)?;
    checks.push(check("ode_blowup_time", tb.map(|t| (t - 1.0).abs()).unwrap_or(f64::INFINITY), 0.02));

    let mut table = Table::new("selftest", &["check", "passed", "value", "tolerance"]);
    let mut failed = Vec::new();
    for c in &checks {
        let passed = c.value <= c.tolerance;
        if !passed {
            failed.push(c.name);
        }
        table.push(vec![c.name.into(), passed.to_string(), num(c.value), num(c.tolerance)]);
    }
    let results = json!({
        "checks": checks.iter().map(|c| json!({"check": c.name, "value": c.value, "tolerance": c.tolerance, "passed": c.value <= c.tolerance})).collect::<Vec<_>>(),
        "failed": failed,
    });
    let failure = (!failed.is_empty()).then(|| CliError::Numerical(format!("self-test failures: {}", failed.join(", "))));
    Ok(Outcome { results, tables: vec![table], failure, ..Outcome::default() })
}
