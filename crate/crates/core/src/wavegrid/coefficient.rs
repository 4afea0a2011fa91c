use crate::error::{Error, Result};
use crate::metric::{bump, Metric, MetricFamily};

use super::Grid;

/// Nodal values of `a(t, ·)` and `∂t a(t, ·)` on a fixed grid.
///
/// Bump families cache `χ(|x|/ρ)` once; each evaluation is then one fused
/// multiply-add per node.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    metric: Metric,
    profile: Vec<f64>,
    positions: Vec<Vec<f64>>,
}

impl CoefficientField {
    pub fn new(grid: &Grid, metric: &Metric) -> Result<Self> {
        if grid.is_radial() && !metric.is_radial() {
            return Err(Error::InvalidArgument(
                "custom metric reads individual coordinates and cannot run on a radial grid".into(),
            ));
        }
        let mut profile = Vec::new();
        let mut positions = Vec::new();
        match metric.family {
            MetricFamily::Custom { .. } => {
                let mut x = vec![0.0; grid.spatial_dim()];
                for node in 0..grid.len() {
                    grid.node_position(node, &mut x);
                    positions.push(x.clone());
                }
            }
            _ => {
                profile = grid.radii().iter().map(|r| bump(r / metric.rho)).collect();
            }
        }
        Ok(Self { metric: metric.clone(), profile, positions })
    }

    pub fn is_static(&self) -> bool {
        !self.metric.is_time_dependent()
    }

    pub fn fill(&self, t: f64, out: &mut [f64]) {
        match &self.metric.family {
            MetricFamily::Custom { expr } => {
                for (o, x) in out.iter_mut().zip(&self.positions) {
                    *o = expr.eval(t, x);
                }
            }
            _ => {
                let (c, _) = self.metric.bump_time_factor(t).unwrap();
                for (o, chi) in out.iter_mut().zip(&self.profile) {
                    *o = 1.0 + c * chi;
                }
            }
        }
    }

    pub fn fill_dt(&self, t: f64, out: &mut [f64]) {
        match &self.metric.family {
            MetricFamily::Custom { .. } => {
                for (o, x) in out.iter_mut().zip(&self.positions) {
                    *o = self.metric.eval(t, x).dt_value;
                }
            }
            _ => {
                let (_, dc) = self.metric.bump_time_factor(t).unwrap();
                for (o, chi) in out.iter_mut().zip(&self.profile) {
                    *o = dc * chi;
                }
            }
        }
    }

    pub fn values(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.fill(t, &mut out);
        out
    }

    pub fn time_derivative(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.fill_dt(t, &mut out);
        out
    }

    fn len(&self) -> usize {
        self.profile.len().max(self.positions.len())
    }
}
