use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Safety factor applied to the stability bound `h / sqrt(n C0)`.
pub const CFL_SAFETY: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layout {
    /// Full tensor grid on `[-L, L]^dim`, `dim` in 1..=3.
    Cartesian { dim: usize },
    /// Radially symmetric fields on `[0, L]` in `n` space dimensions.
    Radial { n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    /// Homogeneous Dirichlet walls placed outside the causal reach of the data.
    DomainOfDependence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub layout: Layout,
    /// Half-width `L` of the box, or the outer radius for radial grids.
    pub extent: f64,
    pub points: usize,
    pub dt: f64,
    pub boundary: Boundary,
}

impl GridSpec {
    pub fn new(layout: Layout, extent: f64, points: usize, dt: f64, boundary: Boundary) -> Self {
        Self { layout, extent, points, dt, boundary }
    }

    /// Grid whose time step sits exactly at the CFL bound for coefficients `<= c1`.
    pub fn with_cfl(layout: Layout, extent: f64, points: usize, boundary: Boundary, c1: f64) -> Self {
        let mut spec = Self::new(layout, extent, points, 0.0, boundary);
        spec.dt = spec.cfl_bound(c1);
        spec
    }

    /// Dirichlet grid large enough that data supported in `|x| <= data_radius`
    /// never reaches the wall before `horizon`: `L >= ρ + sqrt(C0) horizon + data_radius`.
    pub fn domain_of_dependence(
        layout: Layout,
        h: f64,
        c1: f64,
        rho: f64,
        horizon: f64,
        data_radius: f64,
    ) -> Self {
        let reach = rho + c1.sqrt() * horizon + data_radius;
        let (points, extent) = match layout {
            Layout::Radial { .. } => {
                let cells = (reach / h).ceil() as usize + 2;
                (cells + 1, cells as f64 * h)
            }
            Layout::Cartesian { .. } => {
                let half = (reach / h).ceil() as usize + 2;
                (2 * half + 1, half as f64 * h)
            }
        };
        Self::with_cfl(layout, extent, points, Boundary::DomainOfDependence, c1)
    }

    pub fn physical_dim(&self) -> usize {
        match self.layout {
            Layout::Cartesian { dim } => dim,
            Layout::Radial { n } => n,
        }
    }

    pub fn mesh_width(&self) -> f64 {
        match (self.layout, self.boundary) {
            (Layout::Radial { .. }, _) => self.extent / (self.points as f64 - 1.0),
            (Layout::Cartesian { .. }, Boundary::Periodic) => 2.0 * self.extent / self.points as f64,
            (Layout::Cartesian { .. }, Boundary::DomainOfDependence) => {
                2.0 * self.extent / (self.points as f64 - 1.0)
            }
        }
    }

    pub fn cfl_bound(&self, c1: f64) -> f64 {
        CFL_SAFETY * self.mesh_width() / (self.physical_dim() as f64 * c1).sqrt()
    }

    /// Copy with the largest time step `<= self.dt` that divides `span` evenly.
    pub fn with_dt_dividing(&self, span: f64) -> Self {
        let steps = (span / self.dt - 1e-9).ceil().max(1.0);
        Self { dt: span / steps, ..self.clone() }
    }

    pub fn check(&self) -> Result<()> {
        match self.layout {
            Layout::Cartesian { dim } if !(1..=3).contains(&dim) => {
                return Err(Error::InvalidGrid(format!("cartesian dimension {dim} not in 1..=3")));
            }
            Layout::Radial { n } if n < 1 => {
                return Err(Error::InvalidGrid("radial dimension must be >= 1".into()));
            }
            Layout::Radial { .. } if self.boundary == Boundary::Periodic => {
                return Err(Error::InvalidGrid("radial grids cannot be periodic".into()));
            }
            _ => {}
        }
        if self.points < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 points per axis, got {}", self.points)));
        }
        if !(self.extent > 0.0) || !self.extent.is_finite() {
            return Err(Error::InvalidGrid(format!("extent {} must be > 0", self.extent)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidGrid(format!("dt {} must be > 0", self.dt)));
        }
        Ok(())
    }
}

/// `|S^{n-1}|`, the area of the unit sphere in `R^n`.
pub fn sphere_area(n: usize) -> f64 {
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI * sphere_area(n - 2) / (n as f64 - 2.0),
    }
}

/// Discretised domain.
///
/// Both layouts are finite-volume: node `i` owns a control volume `V_i`, and
/// each face `f = (i, j)` carries a weight `w_f` such that
///
/// ```text
/// (div a∇u)_i = (1/V_i) Σ_{f ∋ i} w_f a_f (u_j - u_i),   a_f = (a_i + a_j)/2
/// |u|²_{Ḣ¹}   = Σ_f w_f (u_j - u_i)²
/// ```
///
/// so the operator is symmetric in the `V`-weighted inner product and the
/// discrete energy `½ Σ V v² + ½ Σ w a_f (Δu)²` is the one leapfrog preserves.
/// On the radial grid this reproduces `n u_rr` at the origin.
#[derive(Debug, Clone)]
pub struct Grid {
    spec: GridSpec,
    h: f64,
    shape: [usize; 3],
    volume: Vec<f64>,
    inv_volume: Vec<f64>,
    radius: Vec<f64>,
    fixed: Vec<bool>,
    /// Radial face weights `ω r_{i+1/2}^{n-1} / h`; empty for cartesian grids.
    radial_face_weight: Vec<f64>,
    cart_face_weight: f64,
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.check()?;
        let h = spec.mesh_width();
        let np = spec.points;
        match spec.layout {
            Layout::Radial { n } => {
                let omega = sphere_area(n);
                let nf = n as f64;
                let mut volume = Vec::with_capacity(np);
                for i in 0..np {
                    let lo = if i == 0 { 0.0 } else { (i as f64 - 0.5) * h };
                    let hi = if i == np - 1 { spec.extent } else { (i as f64 + 0.5) * h };
                    volume.push(omega * (hi.powi(n as i32) - lo.powi(n as i32)) / nf);
                }
                let radial_face_weight = (0..np - 1)
                    .map(|i| omega * ((i as f64 + 0.5) * h).powi(n as i32 - 1) / h)
                    .collect();
                let mut fixed = vec![false; np];
                fixed[np - 1] = true;
                Ok(Self {
                    h,
                    shape: [np, 1, 1],
                    inv_volume: volume.iter().map(|v| 1.0 / v).collect(),
                    volume,
                    radius: (0..np).map(|i| i as f64 * h).collect(),
                    fixed,
                    radial_face_weight,
                    cart_face_weight: 0.0,
                    spec,
                })
            }
            Layout::Cartesian { dim } => {
                let mut shape = [1usize; 3];
                for s in shape.iter_mut().take(dim) {
                    *s = np;
                }
                let len = shape.iter().product::<usize>();
                let cell = h.powi(dim as i32);
                let dirichlet = spec.boundary == Boundary::DomainOfDependence;
                let mut radius = Vec::with_capacity(len);
                let mut fixed = Vec::with_capacity(len);
                let mut x = [0.0; 3];
                for idx in 0..len {
                    let c = unravel(idx, shape);
                    let mut on_wall = false;
                    for d in 0..dim {
                        x[d] = -spec.extent + c[d] as f64 * h;
                        on_wall |= c[d] == 0 || c[d] == np - 1;
                    }
                    radius.push(x[..dim].iter().map(|v| v * v).sum::<f64>().sqrt());
                    fixed.push(dirichlet && on_wall);
                }
                Ok(Self {
                    h,
                    shape,
                    volume: vec![cell; len],
                    inv_volume: vec![1.0 / cell; len],
                    radius,
                    fixed,
                    radial_face_weight: Vec::new(),
                    cart_face_weight: h.powi(dim as i32 - 2),
                    spec,
                })
            }
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dt(&self) -> f64 {
        self.spec.dt
    }

    pub fn len(&self) -> usize {
        self.volume.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volume.is_empty()
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.spec.layout, Layout::Radial { .. })
    }

    pub fn is_periodic(&self) -> bool {
        self.spec.boundary == Boundary::Periodic
    }

    /// Number of coordinates of a node position (`n` for radial grids).
    pub fn spatial_dim(&self) -> usize {
        self.spec.physical_dim()
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volume
    }

    pub fn radii(&self) -> &[f64] {
        &self.radius
    }

    pub fn fixed(&self) -> &[bool] {
        &self.fixed
    }

    pub fn max_radius(&self) -> f64 {
        match self.spec.layout {
            Layout::Radial { .. } => self.spec.extent,
            Layout::Cartesian { .. } => self.spec.extent,
        }
    }

    /// Writes the coordinates of `node` into `x` (length [`Self::spatial_dim`]).
    /// Radial nodes are placed on the first axis.
    pub fn node_position(&self, node: usize, x: &mut [f64]) {
        match self.spec.layout {
            Layout::Radial { .. } => {
                x.fill(0.0);
                x[0] = self.radius[node];
            }
            Layout::Cartesian { dim } => {
                let c = unravel(node, self.shape);
                for d in 0..dim {
                    x[d] = -self.spec.extent + c[d] as f64 * self.h;
                }
            }
        }
    }

    /// Visits every face `(i, j, w_f)` in a fixed order.
    #[inline]
    pub fn for_each_face(&self, mut f: impl FnMut(usize, usize, f64)) {
        match self.spec.layout {
            Layout::Radial { .. } => {
                for (i, &w) in self.radial_face_weight.iter().enumerate() {
                    f(i, i + 1, w);
                }
            }
            Layout::Cartesian { dim } => {
                let periodic = self.is_periodic();
                let w = self.cart_face_weight;
                let [nx, ny, nz] = self.shape;
                let strides = [1, nx, nx * ny];
                let sizes = [nx, ny, nz];
                let mut idx = 0;
                for iz in 0..nz {
                    for iy in 0..ny {
                        for ix in 0..nx {
                            let c = [ix, iy, iz];
                            for d in 0..dim {
                                if c[d] + 1 < sizes[d] {
                                    f(idx, idx + strides[d], w);
                                } else if periodic {
                                    f(idx, idx - (sizes[d] - 1) * strides[d], w);
                                }
                            }
                            idx += 1;
                        }
                    }
                }
            }
        }
    }

    /// `out = div(a ∇u)` at every node; zero on fixed (wall) nodes.
    pub fn apply_operator(&self, a: &[f64], u: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        self.for_each_face(|i, j, w| {
            let flux = w * 0.5 * (a[i] + a[j]) * (u[j] - u[i]);
            out[i] += flux;
            out[j] -= flux;
        });
        for ((o, inv), fixed) in out.iter_mut().zip(&self.inv_volume).zip(&self.fixed) {
            *o = if *fixed { 0.0 } else { *o * inv };
        }
    }

    /// `Σ_f w_f c_f (u_j - u_i)²` with `c_f` the face average of `coef`
    /// (or 1 when `coef` is `None`).
    pub fn gradient_form(&self, coef: Option<&[f64]>, u: &[f64]) -> f64 {
        let mut acc = 0.0;
        match coef {
            Some(c) => self.for_each_face(|i, j, w| {
                let d = u[j] - u[i];
                acc += w * 0.5 * (c[i] + c[j]) * d * d;
            }),
            None => self.for_each_face(|i, j, w| {
                let d = u[j] - u[i];
                acc += w * d * d;
            }),
        }
        acc
    }

    /// Zeroes the wall nodes of `field`.
    pub fn clear_fixed(&self, field: &mut [f64]) {
        for (v, fixed) in field.iter_mut().zip(&self.fixed) {
            if *fixed {
                *v = 0.0;
            }
        }
    }

    /// Samples `f(x)` at every node.
    pub fn sample(&self, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
        let mut x = vec![0.0; self.spatial_dim()];
        let mut out = Vec::with_capacity(self.len());
        for node in 0..self.len() {
            self.node_position(node, &mut x);
            out.push(f(&x));
        }
        self.clear_fixed(&mut out);
        out
    }
}

#[inline]
fn unravel(idx: usize, shape: [usize; 3]) -> [usize; 3] {
    let ix = idx % shape[0];
    let rest = idx / shape[0];
    [ix, rest % shape[1], rest / shape[1]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn radial_volumes_sum_to_ball() {
        let g = Grid::new(GridSpec::new(Layout::Radial { n: 3 }, 2.0, 201, 0.001, Boundary::DomainOfDependence))
            .unwrap();
        let total: f64 = g.volumes().iter().sum();
        assert!((total - 4.0 / 3.0 * PI * 8.0).abs() < 1e-10);
    }

    #[test]
    fn radial_operator_at_origin_matches_limit() {
        // u = r², div ∇u = 2n everywhere; the finite-volume stencil is exact for it.
        let n = 3;
        let g = Grid::new(GridSpec::new(Layout::Radial { n }, 1.0, 51, 0.001, Boundary::DomainOfDependence))
            .unwrap();
        let u: Vec<f64> = g.radii().iter().map(|r| r * r).collect();
        let a = vec![1.0; g.len()];
        let mut out = vec![0.0; g.len()];
        g.apply_operator(&a, &u, &mut out);
        assert!((out[0] - 6.0).abs() < 1e-9, "{}", out[0]);
        assert!((out[20] - 6.0).abs() < 1e-6, "{}", out[20]);
    }

    #[test]
    fn operator_is_symmetric() {
        // <Au, w>_V = <u, Aw>_V for a variable coefficient.
        for spec in [
            GridSpec::new(Layout::Radial { n: 3 }, 1.0, 31, 0.01, Boundary::DomainOfDependence),
            GridSpec::new(Layout::Cartesian { dim: 2 }, 1.0, 9, 0.01, Boundary::Periodic),
            GridSpec::new(Layout::Cartesian { dim: 3 }, 1.0, 7, 0.01, Boundary::DomainOfDependence),
        ] {
            let g = Grid::new(spec).unwrap();
            let a: Vec<f64> = (0..g.len()).map(|i| 1.0 + 0.3 * ((i * 7 % 11) as f64 / 11.0)).collect();
            let mut u: Vec<f64> = (0..g.len()).map(|i| ((i * 13 % 17) as f64).sin()).collect();
            let mut w: Vec<f64> = (0..g.len()).map(|i| ((i * 5 % 19) as f64).cos()).collect();
            g.clear_fixed(&mut u);
            g.clear_fixed(&mut w);
            let mut au = vec![0.0; g.len()];
            let mut aw = vec![0.0; g.len()];
            g.apply_operator(&a, &u, &mut au);
            g.apply_operator(&a, &w, &mut aw);
            let lhs: f64 = (0..g.len()).map(|i| g.volumes()[i] * au[i] * w[i]).sum();
            let rhs: f64 = (0..g.len()).map(|i| g.volumes()[i] * u[i] * aw[i]).sum();
            assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
            // Summation by parts: <Au, u>_V = -Σ w a_f (Δu)².
            let uau: f64 = (0..g.len()).map(|i| g.volumes()[i] * au[i] * u[i]).sum();
            assert!((uau + g.gradient_form(Some(&a), &u)).abs() < 1e-9 * uau.abs().max(1.0));
        }
    }

    #[test]
    fn dod_sizing_covers_reach() {
        let s = GridSpec::domain_of_dependence(Layout::Radial { n: 3 }, 0.01, 1.75, 1.0, 4.0, 2.0);
        assert!(s.extent >= 1.0 + 1.75f64.sqrt() * 4.0 + 2.0);
        assert!((s.mesh_width() - 0.01).abs() < 1e-12);
        assert!(s.dt <= s.cfl_bound(1.75) * (1.0 + 1e-12));
        let c = GridSpec::domain_of_dependence(Layout::Cartesian { dim: 2 }, 0.05, 1.0, 1.0, 1.0, 1.0);
        assert!((c.mesh_width() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(Grid::new(GridSpec::new(Layout::Radial { n: 3 }, 1.0, 10, 0.1, Boundary::Periodic)).is_err());
        assert!(Grid::new(GridSpec::new(Layout::Cartesian { dim: 4 }, 1.0, 10, 0.1, Boundary::Periodic)).is_err());
        assert!(Grid::new(GridSpec::new(Layout::Cartesian { dim: 1 }, 1.0, 2, 0.1, Boundary::Periodic)).is_err());
    }
}
