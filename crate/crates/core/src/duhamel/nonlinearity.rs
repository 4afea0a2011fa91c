use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavegrid::Forcing;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    /// `u_tt − div(a∇u) = +|u|^{k−1}u`.
    Focusing,
    Defocusing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Form {
    /// `|u|^{k−1} u`.
    PurePower,
    /// `u (u² + μ²)^{(k−1)/2}`.
    SmoothedPower { mu: f64 },
}

/// Right-hand side `f_k(u) = ± coefficient · form(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub k: f64,
    pub sign: Sign,
    pub form: Form,
    pub coefficient: f64,
}

/// Sampled constants `C_f` of `|f(u)| <= C_f |u|^k` and
/// `|f(u) − f(v)| <= C_f |u − v| (|u| + |v|)^{k−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityConstants {
    pub growth: f64,
    pub lipschitz: f64,
    /// Magnitude range `[lo, hi]` the samples were drawn from.
    pub range: (f64, f64),
}

impl Nonlinearity {
    pub fn new(k: f64, sign: Sign, form: Form) -> Result<Self> {
        if !(k >= 1.0) || !k.is_finite() {
            return Err(Error::InvalidArgument(format!("power k = {k} must be >= 1")));
        }
        if let Form::SmoothedPower { mu } = form {
            if !(mu >= 0.0) {
                return Err(Error::InvalidArgument(format!("smoothing μ = {mu} must be >= 0")));
            }
        }
        Ok(Self { k, sign, form, coefficient: 1.0 })
    }

    pub fn focusing(k: f64) -> Result<Self> {
        Self::new(k, Sign::Focusing, Form::PurePower)
    }

    pub fn defocusing(k: f64) -> Result<Self> {
        Self::new(k, Sign::Defocusing, Form::PurePower)
    }

    /// The zero nonlinearity with power `k` (`C_f = 0`).
    pub fn zero(k: f64) -> Result<Self> {
        Ok(Self { coefficient: 0.0, ..Self::focusing(k)? })
    }

    pub fn with_coefficient(self, coefficient: f64) -> Self {
        Self { coefficient, ..self }
    }

    fn signed(&self) -> f64 {
        match self.sign {
            Sign::Focusing => self.coefficient,
            Sign::Defocusing => -self.coefficient,
        }
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        let base = match self.form {
            Form::PurePower => u.abs().powf(self.k - 1.0) * u,
            Form::SmoothedPower { mu } => u * (u * u + mu * mu).powf(0.5 * (self.k - 1.0)),
        };
        self.signed() * base
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|&x| self.eval(x)).collect()
    }

    /// Measures both constants on a logarithmic grid of magnitudes in `[lo, hi]`
    /// and ratios `v/u` in `[−1, 1]`.
    pub fn measure_constants(&self, lo: f64, hi: f64) -> NonlinearityConstants {
        let k = self.k;
        let mags: Vec<f64> = (0..=60).map(|i| lo * (hi / lo).powf(i as f64 / 60.0)).collect();
        let ratios: Vec<f64> = (0..=80).map(|i| -1.0 + 2.0 * i as f64 / 80.0).collect();
        let mut growth = 0.0_f64;
        let mut lipschitz = 0.0_f64;
        for &m in &mags {
            for u in [m, -m] {
                growth = growth.max(self.eval(u).abs() / m.powf(k));
                for &r in &ratios {
                    let v = r * u;
                    let du = (u - v).abs();
                    if du == 0.0 {
                        continue;
                    }
                    let bound = du * (u.abs() + v.abs()).powf(k - 1.0);
                    lipschitz = lipschitz.max((self.eval(u) - self.eval(v)).abs() / bound);
                }
            }
        }
        NonlinearityConstants { growth, lipschitz, range: (lo, hi) }
    }

    /// Constants over the default magnitude range `[1e−3, 1e3]`.
    pub fn constants(&self) -> NonlinearityConstants {
        self.measure_constants(1e-3, 1e3)
    }
}

/// `f_k(u)` as a source term for the leapfrog solver.
pub struct NonlinearForcing {
    pub nl: Nonlinearity,
}

impl Forcing for NonlinearForcing {
    fn add_source(&self, _step: usize, _t: f64, u: &[f64], out: &mut [f64]) {
        for (o, &x) in out.iter_mut().zip(u) {
            *o += self.nl.eval(x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vanishes_at_zero_and_is_odd() {
        for nl in [
            Nonlinearity::focusing(3.0).unwrap(),
            Nonlinearity::defocusing(2.5).unwrap(),
            Nonlinearity::new(4.0, Sign::Focusing, Form::SmoothedPower { mu: 0.3 }).unwrap(),
        ] {
            assert_eq!(nl.eval(0.0), 0.0);
            for u in [0.1, 0.7, 2.3] {
                assert_eq!(nl.eval(-u), -nl.eval(u));
            }
        }
        assert_eq!(Nonlinearity::focusing(3.0).unwrap().eval(2.0), 8.0);
        assert_eq!(Nonlinearity::defocusing(3.0).unwrap().eval(2.0), -8.0);
    }

    #[test]
    fn pure_power_constants() {
        // v = 0 attains the ratio 1; the mean-value bound k/2^{k−1} is smaller.
        for k in [2.0, 3.0, 4.0] {
            let c = Nonlinearity::focusing(k).unwrap().constants();
            assert!((c.growth - 1.0).abs() < 1e-12);
            assert!((c.lipschitz - 1.0).abs() < 1e-12, "{k}: {}", c.lipschitz);
        }
        let zero = Nonlinearity::zero(3.0).unwrap().constants();
        assert_eq!((zero.growth, zero.lipschitz), (0.0, 0.0));
    }

    #[test]
    fn smoothing_inflates_growth_at_small_amplitude() {
        let nl = Nonlinearity::new(3.0, Sign::Focusing, Form::SmoothedPower { mu: 0.1 }).unwrap();
        let c = nl.measure_constants(1e-2, 1e2);
        // |f(u)|/|u|³ = (1 + μ²/u²) at u = 1e-2.
        assert!((c.growth - 101.0).abs() < 1e-9);
        assert!(c.lipschitz >= c.growth - 1e-9);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Nonlinearity::focusing(0.5).is_err());
        assert!(Nonlinearity::new(3.0, Sign::Focusing, Form::SmoothedPower { mu: -1.0 }).is_err());
    }
}
