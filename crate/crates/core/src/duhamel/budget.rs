use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{strichartz_pair_for_k, Regime};

/// Working constants of the contraction argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Strichartz constant of the linear flow and the Duhamel term.
    pub a_k: f64,
    /// Constant of `|∫V f(u)|_Y <= C3 ∫ |u|_q^k`.
    pub c3: f64,
    /// Constant of the difference estimate `|𝒢u − 𝒢v|_Y`.
    pub c7: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub n: usize,
    pub k: f64,
    pub p: f64,
    pub g_norm: f64,
    pub alpha: f64,
    pub m0: f64,
    /// `t₁ = T1^{1 − k/p}`.
    pub t1_reduced: f64,
    pub t1: f64,
    /// `A_k |g| + C3 M^k t₁`, to be `<= M`.
    pub ball_lhs: f64,
    /// `C7 (2M)^{k−1} t₁`, to be `< 1`.
    pub contraction_lhs: f64,
}

/// Closed-form `(M₀, T1)` with `α` at the midpoint of `(1 − 2^{1−k}, 1)`:
///
/// ```text
/// M₀ = α 2^{k−1} A_k |g| / (2^{k−1} − 1),   t₁ = (M₀ − A_k |g|) / (C3 M₀^k),   T1 = t₁^{1/(1−k/p)}
/// ```
///
/// Both conditions `A_k|g| + C3 M^k t₁ <= M` and `C7 (2M)^{k−1} t₁ < 1` are
/// re-checked on the result.
pub fn theorem3_budget(n: usize, k: f64, g_norm: f64, constants: Constants) -> Result<Budget> {
    let Constants { a_k, c3, c7 } = constants;
    if !(a_k > 0.0 && c3 > 0.0 && c7 > 0.0) {
        return Err(Error::InvalidArgument(format!("constants must be > 0, got {constants:?}")));
    }
    if !(g_norm > 0.0) || !g_norm.is_finite() {
        return Err(Error::InvalidArgument(format!("data norm {g_norm} must be finite and > 0")));
    }
    let set = strichartz_pair_for_k(n, k, Regime::Local)?;
    let two_k = 2f64.powf(k - 1.0);
    let alpha = 0.5 * ((1.0 - 1.0 / two_k) + 1.0);
    let m0 = alpha * two_k * a_k * g_norm / (two_k - 1.0);
    let t1_reduced = (m0 - a_k * g_norm) / (c3 * m0.powf(k));
    let t1 = t1_reduced.powf(1.0 / (1.0 - set.k_over_p()));
    let ball_lhs = a_k * g_norm + c3 * m0.powf(k) * t1_reduced;
    let contraction_lhs = c7 * (2.0 * m0).powf(k - 1.0) * t1_reduced;
    let budget = Budget { n, k, p: set.p, g_norm, alpha, m0, t1_reduced, t1, ball_lhs, contraction_lhs };
    if !(ball_lhs <= m0 * (1.0 + 1e-12)) || !(contraction_lhs < 1.0) || !(t1_reduced > 0.0) {
        return Err(Error::Infeasible(format!(
            "budget fails its own check: A|g| + C3 M^k t1 = {ball_lhs} vs M = {m0}, C7 (2M)^(k-1) t1 = {contraction_lhs}"
        )));
    }
    Ok(budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::lifespan_exponent;

    const UNIT: Constants = Constants { a_k: 1.0, c3: 1.0, c7: 1.0 };

    #[test]
    fn unit_constants_n3_k4() {
        let b = theorem3_budget(3, 4.0, 1.0, UNIT).unwrap();
        // K = 8, α = 15/16, M₀ = (15/16)·8/7 = 15/14, t₁ = (1/14)/(15/14)^4.
        assert!((b.alpha - 15.0 / 16.0).abs() < 1e-15);
        assert!((b.m0 - 15.0 / 14.0).abs() < 1e-14);
        let t1r = (1.0 / 14.0) / (15.0f64 / 14.0).powi(4);
        assert!((b.t1_reduced - t1r).abs() < 1e-14);
        // p = 8, 1 − k/p = 1/2.
        assert!((b.t1 - t1r * t1r).abs() < 1e-14);
        assert!((b.ball_lhs - b.m0).abs() < 1e-14);
        assert!(b.contraction_lhs < 1.0);
    }

    #[test]
    fn lifespan_scaling_in_data_norm() {
        let d = lifespan_exponent(3, 4.0).unwrap();
        let a = theorem3_budget(3, 4.0, 0.01, UNIT).unwrap();
        let b = theorem3_budget(3, 4.0, 0.02, UNIT).unwrap();
        assert!((b.t1 / a.t1 - 2f64.powf(-d)).abs() < 1e-12 * 2f64.powf(-d));
        // t₁ ∝ |g|^{−(k−1)}.
        assert!((b.t1_reduced / a.t1_reduced - 2f64.powf(-3.0)).abs() < 1e-14);
        let tiny = theorem3_budget(3, 4.0, 1e-6, UNIT).unwrap();
        assert!(tiny.t1 > 1e30);
    }

    #[test]
    fn infeasible_constants() {
        // The contraction check needs C7/C3 < 2 − 2^{1−k}.
        let bad = Constants { a_k: 1.0, c3: 1.0, c7: 2.0 };
        assert!(matches!(theorem3_budget(3, 4.0, 1.0, bad), Err(Error::Infeasible(_))));
        let ok = Constants { a_k: 1.0, c3: 1.0, c7: 1.8 };
        assert!(theorem3_budget(3, 4.0, 1.0, ok).is_ok());
        assert!(theorem3_budget(3, 5.0, 1.0, UNIT).is_err());
    }
}
