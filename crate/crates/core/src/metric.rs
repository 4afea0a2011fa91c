//! Coefficient functions `a(t, x)` for the divergence-form operator.
//!
//! Every built-in family has the shape `1 + c(t) χ(|x|/ρ)` where `χ` is the
//! classical compactly supported bump. `χ` is exactly zero for `|x| >= ρ`, so
//! the metric is exactly one there. Custom metrics are closed-form expression
//! trees; their derivatives fall back to central differences.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavegrid::{Grid, GridSpec};

/// Step for finite-difference derivatives of custom metrics.
pub const FD_STEP: f64 = 1e-6;

/// `χ(s) = exp(1 - 1/(1 - s²))` for `|s| < 1`, zero otherwise. `χ(0) = 1`.
#[inline]
pub fn bump(s: f64) -> f64 {
    let s2 = s * s;
    if s2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s2)).exp()
    }
}

/// `χ'(s) = -2s/(1-s²)² χ(s)`.
#[inline]
pub fn bump_derivative(s: f64) -> f64 {
    let s2 = s * s;
    if s2 >= 1.0 {
        0.0
    } else {
        let w = 1.0 - s2;
        -2.0 * s / (w * w) * bump(s)
    }
}

/// Smooth monotone step: 0 for `s <= 0`, 1 for `s >= 1`, built from the same
/// `exp(-1/s)` germ as the bump.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / s).exp();
    let b = (-1.0 / (1.0 - s)).exp();
    a / (a + b)
}

/// Closed-form scalar expression in `t`, `r = |x|` and the coordinates `x_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Const(f64),
    T,
    R,
    X(usize),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Neg(Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Bump(Box<Expr>),
}

impl Expr {
    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::T => t,
            Expr::R => norm(x),
            Expr::X(i) => x.get(*i).copied().unwrap_or(0.0),
            Expr::Add(terms) => terms.iter().map(|e| e.eval(t, x)).sum(),
            Expr::Mul(terms) => terms.iter().map(|e| e.eval(t, x)).product(),
            Expr::Neg(e) => -e.eval(t, x),
            Expr::Div(a, b) => a.eval(t, x) / b.eval(t, x),
            Expr::Sin(e) => e.eval(t, x).sin(),
            Expr::Cos(e) => e.eval(t, x).cos(),
            Expr::Exp(e) => e.eval(t, x).exp(),
            Expr::Bump(e) => bump(e.eval(t, x)),
        }
    }

    /// True when the expression never reads an individual coordinate.
    pub fn is_radial(&self) -> bool {
        match self {
            Expr::X(_) => false,
            Expr::Const(_) | Expr::T | Expr::R => true,
            Expr::Add(v) | Expr::Mul(v) => v.iter().all(Expr::is_radial),
            Expr::Neg(e) | Expr::Sin(e) | Expr::Cos(e) | Expr::Exp(e) | Expr::Bump(e) => {
                e.is_radial()
            }
            Expr::Div(a, b) => a.is_radial() && b.is_radial(),
        }
    }

    pub fn depends_on_time(&self) -> bool {
        match self {
            Expr::T => true,
            Expr::Const(_) | Expr::R | Expr::X(_) => false,
            Expr::Add(v) | Expr::Mul(v) => v.iter().any(Expr::depends_on_time),
            Expr::Neg(e) | Expr::Sin(e) | Expr::Cos(e) | Expr::Exp(e) | Expr::Bump(e) => {
                e.depends_on_time()
            }
            Expr::Div(a, b) => a.depends_on_time() || b.depends_on_time(),
        }
    }
}

#[inline]
pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MetricFamily {
    Unit,
    StaticBump { amplitude: f64 },
    PeriodicBump { amplitude: f64, mod_depth: f64 },
    Custom { expr: Expr },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub family: MetricFamily,
    /// Lower bound `c0` of `a`.
    pub c0: f64,
    /// Upper bound `C0` of `a`.
    pub c1: f64,
    pub rho: f64,
    pub period: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSample {
    pub value: f64,
    pub dt_value: f64,
    pub grad_value: Vec<f64>,
}

impl Metric {
    pub fn unit() -> Self {
        Self {
            family: MetricFamily::Unit,
            c0: 1.0,
            c1: 1.0,
            rho: 1.0,
            period: None,
        }
    }

    pub fn static_bump(amplitude: f64, rho: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::InvalidMetric(format!("rho = {rho} must be > 0")));
        }
        let extreme = 1.0 + amplitude;
        if !(extreme > 0.0) || !amplitude.is_finite() {
            return Err(Error::InvalidMetric(format!(
                "amplitude {amplitude} makes inf a = {extreme} <= 0"
            )));
        }
        Ok(Self {
            family: MetricFamily::StaticBump { amplitude },
            c0: extreme.min(1.0),
            c1: extreme.max(1.0),
            rho,
            period: None,
        })
    }

    /// `a(t,x) = 1 + amplitude (1 + mod_depth sin(2πt/period)) χ(|x|/ρ)`.
    pub fn periodic_bump(amplitude: f64, rho: f64, period: f64, mod_depth: f64) -> Result<Self> {
        if !(amplitude > -1.0) || !amplitude.is_finite() {
            return Err(Error::InvalidMetric(format!("amplitude {amplitude} must be > -1")));
        }
        if !(0.0..1.0).contains(&mod_depth) {
            return Err(Error::InvalidMetric(format!("mod_depth {mod_depth} must lie in [0, 1)")));
        }
        if !(rho > 0.0) || !(period > 0.0) {
            return Err(Error::InvalidMetric("rho and period must be > 0".into()));
        }
        // Extremes sit at χ = 1 (the centre) and sin = ±1.
        let extreme = 1.0 + amplitude * (1.0 + mod_depth);
        if !(extreme > 0.0) {
            return Err(Error::InvalidMetric(format!(
                "amplitude {amplitude} with mod_depth {mod_depth} makes inf a = {extreme} <= 0"
            )));
        }
        Ok(Self {
            family: MetricFamily::PeriodicBump { amplitude, mod_depth },
            c0: extreme.min(1.0),
            c1: extreme.max(1.0),
            rho,
            period: Some(period),
        })
    }

    /// Custom closed-form metric with declared bounds. The declaration is not
    /// trusted: run [`validate`] to compare it with sampled values.
    pub fn custom(expr: Expr, c0: f64, c1: f64, rho: f64, period: Option<f64>) -> Result<Self> {
        if !(c0 > 0.0) || !(c1 >= c0) {
            return Err(Error::InvalidMetric(format!("declared bounds c0 = {c0}, C0 = {c1} invalid")));
        }
        if !(rho > 0.0) || period.is_some_and(|p| !(p > 0.0)) {
            return Err(Error::InvalidMetric("rho and period must be > 0".into()));
        }
        Ok(Self { family: MetricFamily::Custom { expr }, c0, c1, rho, period })
    }

    pub fn is_time_dependent(&self) -> bool {
        match &self.family {
            MetricFamily::Unit | MetricFamily::StaticBump { .. } => false,
            MetricFamily::PeriodicBump { mod_depth, amplitude } => *mod_depth != 0.0 && *amplitude != 0.0,
            MetricFamily::Custom { expr } => expr.depends_on_time(),
        }
    }

    pub fn is_radial(&self) -> bool {
        match &self.family {
            MetricFamily::Custom { expr } => expr.is_radial(),
            _ => true,
        }
    }

    /// Derivatives come from finite differences rather than closed forms.
    pub fn uses_finite_differences(&self) -> bool {
        matches!(self.family, MetricFamily::Custom { .. })
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            MetricFamily::Unit => "unit",
            MetricFamily::StaticBump { .. } => "static_bump",
            MetricFamily::PeriodicBump { .. } => "periodic_bump",
            MetricFamily::Custom { .. } => "custom",
        }
    }

    /// For the bump families, `a = 1 + c(t) χ(|x|/ρ)`; returns `(c(t), c'(t))`.
    pub fn bump_time_factor(&self, t: f64) -> Option<(f64, f64)> {
        match &self.family {
            MetricFamily::Unit => Some((0.0, 0.0)),
            MetricFamily::StaticBump { amplitude } => Some((*amplitude, 0.0)),
            MetricFamily::PeriodicBump { amplitude, mod_depth } => {
                let period = self.period.expect("periodic family carries a period");
                let w = 2.0 * PI / period;
                let phase = w * t;
                Some((
                    amplitude * (1.0 + mod_depth * phase.sin()),
                    amplitude * mod_depth * w * phase.cos(),
                ))
            }
            MetricFamily::Custom { .. } => None,
        }
    }

    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        match &self.family {
            MetricFamily::Custom { expr } => expr.eval(t, x),
            _ => {
                let (c, _) = self.bump_time_factor(t).unwrap();
                if c == 0.0 {
                    1.0
                } else {
                    1.0 + c * bump(norm(x) / self.rho)
                }
            }
        }
    }

    /// Value of `a` at radius `r` for radial metrics.
    pub fn radial_value(&self, t: f64, r: f64) -> f64 {
        match &self.family {
            MetricFamily::Custom { expr } => expr.eval(t, &[r]),
            _ => {
                let (c, _) = self.bump_time_factor(t).unwrap();
                1.0 + c * bump(r / self.rho)
            }
        }
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> MetricSample {
        match &self.family {
            MetricFamily::Custom { expr } => {
                let h = FD_STEP;
                let value = expr.eval(t, x);
                let dt_value = (expr.eval(t + h, x) - expr.eval(t - h, x)) / (2.0 * h);
                let mut xp = x.to_vec();
                let grad_value = (0..x.len())
                    .map(|i| {
                        xp[i] = x[i] + h;
                        let up = expr.eval(t, &xp);
                        xp[i] = x[i] - h;
                        let dn = expr.eval(t, &xp);
                        xp[i] = x[i];
                        (up - dn) / (2.0 * h)
                    })
                    .collect();
                MetricSample { value, dt_value, grad_value }
            }
            _ => {
                let (c, dc) = self.bump_time_factor(t).unwrap();
                let r = norm(x);
                let s = r / self.rho;
                let chi = bump(s);
                let mut grad_value = vec![0.0; x.len()];
                if c != 0.0 && r > 0.0 && s < 1.0 {
                    let radial = c * bump_derivative(s) / self.rho;
                    for (g, xi) in grad_value.iter_mut().zip(x) {
                        *g = radial * xi / r;
                    }
                }
                MetricSample {
                    value: 1.0 + c * chi,
                    dt_value: dc * chi,
                    grad_value,
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub min: f64,
    pub max: f64,
    /// `max |a - 1|` over sampled nodes with `|x| >= ρ`.
    pub max_support_violation: f64,
    /// `max |a(t+T,x) - a(t,x)|`; zero for non-periodic metrics.
    pub max_periodicity_defect: f64,
    pub c0_violation: bool,
    pub upper_violation: bool,
    pub covers_support: bool,
    pub finite_difference_derivatives: bool,
    pub samples: usize,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        !self.c0_violation
            && !self.upper_violation
            && self.max_support_violation == 0.0
            && self.max_periodicity_defect <= 1e-14
    }
}

/// Samples `a` on every node of `grid` at `n_time_samples` times spread over
/// one period (or over `[0, 1]` for static metrics).
pub fn validate(metric: &Metric, grid: &GridSpec, n_time_samples: usize) -> Result<ValidationReport> {
    let grid = Grid::new(grid.clone())?;
    let span = metric.period.unwrap_or(1.0);
    let n_time_samples = n_time_samples.max(1);
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut support = 0.0_f64;
    let mut periodic = 0.0_f64;
    let mut samples = 0usize;
    let mut x = vec![0.0; grid.spatial_dim()];
    for j in 0..n_time_samples {
        let t = span * j as f64 / n_time_samples as f64;
        for node in 0..grid.len() {
            grid.node_position(node, &mut x);
            let a = metric.value(t, &x);
            min = min.min(a);
            max = max.max(a);
            if norm(&x) >= metric.rho {
                support = support.max((a - 1.0).abs());
            }
            if let Some(period) = metric.period {
                periodic = periodic.max((metric.value(t + period, &x) - a).abs());
            }
            samples += 1;
        }
    }
    Ok(ValidationReport {
        min,
        max,
        max_support_violation: support,
        max_periodicity_defect: periodic,
        c0_violation: min <= 0.0 || min < metric.c0 - 1e-12,
        upper_violation: max > metric.c1 + 1e-12,
        covers_support: grid.max_radius() >= metric.rho,
        finite_difference_derivatives: metric.uses_finite_differences(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavegrid::{Boundary, Layout};

    fn box_grid(dim: usize, points: usize) -> GridSpec {
        GridSpec::new(Layout::Cartesian { dim }, 2.0, points, 0.01, Boundary::DomainOfDependence)
    }

    #[test]
    fn zero_amplitude_is_unit() {
        let m = Metric::periodic_bump(0.0, 1.0, 2.0, 0.5).unwrap();
        for &(t, r) in &[(0.0, 0.0), (0.3, 0.5), (1.7, 0.99)] {
            let s = m.eval(t, &[r, 0.0, 0.0]);
            assert_eq!(s.value, 1.0);
            assert_eq!(s.dt_value, 0.0);
            assert!(s.grad_value.iter().all(|g| *g == 0.0));
        }
        assert_eq!((m.c0, m.c1), (1.0, 1.0));
    }

    #[test]
    fn periodic_bump_bounds() {
        let m = Metric::periodic_bump(0.5, 1.3, 2.0, 0.5).unwrap();
        assert_eq!((m.c0, m.c1), (1.0, 1.75));
        let m = Metric::periodic_bump(-0.4, 1.0, 1.0, 0.5).unwrap();
        assert!((m.c0 - 0.4).abs() < 1e-15);
        assert_eq!(m.c1, 1.0);
        assert!(Metric::periodic_bump(-0.8, 1.0, 1.0, 0.5).is_err());
        assert!(Metric::periodic_bump(0.3, 1.0, 1.0, 1.0).is_err());
        assert!(Metric::periodic_bump(0.3, 0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn identity_outside_support() {
        let rho = 0.8;
        let m = Metric::periodic_bump(0.5, rho, 1.0, 0.5).unwrap();
        for t in [0.0, 0.25, 0.6] {
            let s = m.eval(t, &[1.5 * rho, 0.0]);
            assert_eq!(s.value, 1.0);
            assert_eq!(s.dt_value, 0.0);
        }
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let m = Metric::periodic_bump(0.4, 1.0, 1.5, 0.6).unwrap();
        let (t, x) = (0.37, [0.3, -0.2, 0.4]);
        let s = m.eval(t, &x);
        let h = 1e-6;
        let dt = (m.value(t + h, &x) - m.value(t - h, &x)) / (2.0 * h);
        assert!((dt - s.dt_value).abs() < 1e-7);
        for i in 0..3 {
            let mut xp = x;
            xp[i] += h;
            let mut xm = x;
            xm[i] -= h;
            let g = (m.value(t, &xp) - m.value(t, &xm)) / (2.0 * h);
            assert!((g - s.grad_value[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn gradient_difference_is_second_order() {
        // Centred differences of the analytic value converge to the analytic
        // gradient with ratio ~4 per halving.
        let m = Metric::static_bump(0.5, 1.0).unwrap();
        let x = [0.45, 0.1];
        let exact = m.eval(0.0, &x).grad_value[0];
        let err = |h: f64| {
            let g = (m.value(0.0, &[x[0] + h, x[1]]) - m.value(0.0, &[x[0] - h, x[1]])) / (2.0 * h);
            (g - exact).abs()
        };
        let r1 = err(0.02) / err(0.01);
        let r2 = err(0.01) / err(0.005);
        assert!((3.6..4.4).contains(&r1), "{r1}");
        assert!((3.6..4.4).contains(&r2), "{r2}");
    }

    #[test]
    fn validate_unit() {
        let rep = validate(&Metric::unit(), &box_grid(2, 21), 4).unwrap();
        assert_eq!((rep.min, rep.max), (1.0, 1.0));
        assert_eq!(rep.max_support_violation, 0.0);
        assert_eq!(rep.max_periodicity_defect, 0.0);
        assert!(rep.passed());
    }

    #[test]
    fn validate_periodic_bump_within_bounds() {
        let m = Metric::periodic_bump(0.5, 1.0, 1.0, 0.5).unwrap();
        let rep = validate(&m, &box_grid(2, 41), 16).unwrap();
        assert!(rep.min >= m.c0 && rep.max <= m.c1);
        // Node at the origin with sin = 1 at t = T/4 attains C0 exactly.
        assert!((rep.max - 1.75).abs() < 1e-12);
        assert_eq!(rep.max_support_violation, 0.0);
        assert!(rep.max_periodicity_defect <= 1e-14);
        assert!(rep.passed());
    }

    #[test]
    fn validate_flags_positivity_violation() {
        // a = 1 - 2χ(|x|) dips to -1 at the origin.
        let expr = Expr::Add(vec![
            Expr::Const(1.0),
            Expr::Mul(vec![Expr::Const(-2.0), Expr::Bump(Box::new(Expr::R))]),
        ]);
        let m = Metric::custom(expr, 0.5, 1.0, 1.0, None).unwrap();
        let rep = validate(&m, &box_grid(2, 21), 1).unwrap();
        assert!(rep.c0_violation);
        assert!(rep.finite_difference_derivatives);
        assert!(!rep.passed());
    }

    #[test]
    fn custom_radial_detection() {
        assert!(Expr::Bump(Box::new(Expr::R)).is_radial());
        assert!(!Expr::Sin(Box::new(Expr::X(1))).is_radial());
        assert!(Expr::Sin(Box::new(Expr::T)).depends_on_time());
    }

    #[test]
    fn custom_matches_builtin() {
        // 1 + 0.3 (1 + 0.5 sin(2π t)) χ(r)
        let expr = Expr::Add(vec![
            Expr::Const(1.0),
            Expr::Mul(vec![
                Expr::Const(0.3),
                Expr::Add(vec![
                    Expr::Const(1.0),
                    Expr::Mul(vec![
                        Expr::Const(0.5),
                        Expr::Sin(Box::new(Expr::Mul(vec![Expr::Const(2.0 * PI), Expr::T]))),
                    ]),
                ]),
                Expr::Bump(Box::new(Expr::R)),
            ]),
        ]);
        let custom = Metric::custom(expr, 1.0, 1.45, 1.0, Some(1.0)).unwrap();
        let builtin = Metric::periodic_bump(0.3, 1.0, 1.0, 0.5).unwrap();
        let x = [0.2, 0.3];
        let a = custom.eval(0.3, &x);
        let b = builtin.eval(0.3, &x);
        assert!((a.value - b.value).abs() < 1e-14);
        assert!((a.dt_value - b.dt_value).abs() < 1e-6);
        assert!((a.grad_value[0] - b.grad_value[0]).abs() < 1e-6);
    }
}
