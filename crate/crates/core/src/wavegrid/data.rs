//! Initial data: seeded wave-packet superpositions and the radial d'Alembert
//! pulse used as an exact solution.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::metric::{bump, bump_derivative};

use super::{Grid, StatePair};

/// Parameters of the random packet superposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketConfig {
    pub count: usize,
    /// Packet centers are drawn from `|c| <= center_radius`.
    pub center_radius: f64,
    /// Envelope radius; each packet is supported in a ball of this radius.
    pub width: f64,
    /// Wavenumber band `[k_min, k_max]`.
    pub band: (f64, f64),
}

impl PacketConfig {
    /// Eight packets centered within `ρ + 1`.
    pub fn for_support(rho: f64) -> Self {
        Self { count: 8, center_radius: rho + 1.0, width: 0.75, band: (2.0, 6.0) }
    }

    /// Radius of a ball containing the support of every sample.
    pub fn support_radius(&self) -> f64 {
        self.center_radius + self.width
    }
}

struct Packet {
    center: Vec<f64>,
    direction: Vec<f64>,
    wavenumber: f64,
    phase: f64,
    amplitude: f64,
}

impl Packet {
    fn draw(rng: &mut ChaCha8Rng, dim: usize, cfg: &PacketConfig) -> Self {
        let center = loop {
            let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            if c.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
                break c.into_iter().map(|v| v * cfg.center_radius).collect::<Vec<_>>();
            }
        };
        let direction = loop {
            let d: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let len = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if len > 1e-3 && len <= 1.0 {
                break d.into_iter().map(|v| v / len).collect::<Vec<_>>();
            }
        };
        Self {
            center,
            direction,
            wavenumber: rng.gen_range(cfg.band.0..=cfg.band.1),
            phase: rng.gen_range(0.0..2.0 * PI),
            amplitude: rng.gen_range(-1.0..=1.0),
        }
    }

    fn eval(&self, x: &[f64], width: f64) -> f64 {
        let mut r2 = 0.0;
        let mut along = 0.0;
        for ((xi, ci), di) in x.iter().zip(&self.center).zip(&self.direction) {
            r2 += (xi - ci) * (xi - ci);
            along += (xi - ci) * di;
        }
        self.amplitude * bump(r2.sqrt() / width) * (self.wavenumber * along + self.phase).cos()
    }
}

/// Samples a single smooth packet field (used for sources and probes).
pub fn packet_field(grid: &Grid, cfg: &PacketConfig, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    packet_sum(grid, cfg, &mut rng)
}

/// Random data `(g₁, g₂)`, each component a sum of `cfg.count` packets.
pub fn random_packets(grid: &Grid, cfg: &PacketConfig, seed: u64) -> StatePair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = packet_sum(grid, cfg, &mut rng);
    let v = packet_sum(grid, cfg, &mut rng);
    StatePair::new(u, v, 0.0)
}

fn packet_sum(grid: &Grid, cfg: &PacketConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if grid.is_radial() {
        // A radial profile g(r) + g(-r) of 1-d packets stays smooth at the origin.
        let packets: Vec<Packet> = (0..cfg.count)
            .map(|_| {
                let mut p = Packet::draw(rng, 1, cfg);
                p.center[0] = p.center[0].abs();
                p.direction[0] = 1.0;
                p
            })
            .collect();
        grid.sample(|x| {
            let r = x[0];
            packets.iter().map(|p| p.eval(&[r], cfg.width) + p.eval(&[-r], cfg.width)).sum()
        })
    } else {
        let dim = grid.spatial_dim();
        let packets: Vec<Packet> = (0..cfg.count).map(|_| Packet::draw(rng, dim, cfg)).collect();
        grid.sample(|x| packets.iter().map(|p| p.eval(x, cfg.width)).sum())
    }
}

/// Even profile `F(s) = χ((s−c)/w) + χ((s+c)/w)` generating the exact free
/// radial wave `u(t,r) = (F(r−t) − F(r+t)) / r` in three dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialPulse {
    pub center: f64,
    pub width: f64,
}

impl RadialPulse {
    pub fn profile(&self, s: f64) -> f64 {
        bump((s - self.center) / self.width) + bump((s + self.center) / self.width)
    }

    pub fn profile_derivative(&self, s: f64) -> f64 {
        (bump_derivative((s - self.center) / self.width) + bump_derivative((s + self.center) / self.width))
            / self.width
    }

    fn profile_second(&self, s: f64) -> f64 {
        let e = 1e-5;
        (self.profile_derivative(s + e) - self.profile_derivative(s - e)) / (2.0 * e)
    }

    pub fn exact(&self, t: f64, r: f64) -> f64 {
        if r == 0.0 {
            -2.0 * self.profile_derivative(t)
        } else {
            (self.profile(r - t) - self.profile(r + t)) / r
        }
    }

    pub fn exact_dt(&self, t: f64, r: f64) -> f64 {
        if r == 0.0 {
            -2.0 * self.profile_second(t)
        } else {
            -(self.profile_derivative(r - t) + self.profile_derivative(r + t)) / r
        }
    }

    pub fn state(&self, grid: &Grid, t: f64) -> StatePair {
        let u = grid.sample(|x| self.exact(t, x[0]));
        let v = grid.sample(|x| self.exact_dt(t, x[0]));
        StatePair::new(u, v, t)
    }
}
