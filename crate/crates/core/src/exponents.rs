//! Strichartz admissibility algebra.
//!
//! Everything here is closed-form arithmetic on the exponents `(n, k, p, q, γ)`:
//! the scaling identity `1/p = n(q-2)/(2q) - γ`, the dispersion ("knapp line")
//! inequality `1/p <= (n-1)(q-2)/(4q)`, the tabulated windows of nonlinearity
//! powers `k` for which `q = 2k` and `k/p < 1` can be met, and the lifespan
//! exponent `d = 2(k-1)/((n+2)-(n-2)k)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for the equality tests of the scaling identity.
pub const IDENTITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Short-time estimates, any `γ > 0`, `p >= 2`.
    Local,
    /// Global-in-time estimates for periodic non-trapping metrics: `γ = 1`, `p > 2`.
    Global,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Local => f.write_str("local"),
            Regime::Global => f.write_str("global"),
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "local" => Ok(Regime::Local),
            "global" => Ok(Regime::Global),
            other => Err(Error::InvalidArgument(format!(
                "unknown regime `{other}` (expected `local` or `global`)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentQuery {
    pub n: usize,
    pub k: f64,
    pub gamma: f64,
    pub regime: Regime,
}

impl ExponentQuery {
    pub fn new(n: usize, k: f64, gamma: f64, regime: Regime) -> Result<Self> {
        if n < 1 {
            return Err(Error::Domain("dimension n must be >= 1".into()));
        }
        if !(k > 1.0) || !k.is_finite() {
            return Err(Error::Domain(format!("power k = {k} must be a finite number > 1")));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::Domain(format!("gamma = {gamma} must be > 0")));
        }
        Ok(Self { n, k, gamma, regime })
    }
}

/// Exact rational endpoint of a tabulated window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

impl Rational {
    pub const fn new(num: i64, den: i64) -> Self {
        Self { num, den }
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Interval of admissible nonlinearity powers. The lower end is always open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KWindow {
    pub lower: f64,
    pub upper: f64,
    pub upper_closed: bool,
    pub lower_exact: Rational,
    pub upper_exact: Rational,
}

impl KWindow {
    fn from_rationals(lower: Rational, upper: Rational, upper_closed: bool) -> Self {
        Self {
            lower: lower.value(),
            upper: upper.value(),
            upper_closed,
            lower_exact: lower,
            upper_exact: upper,
        }
    }

    /// Membership test. Comparisons go through the exact rationals: `k > a/b`
    /// is evaluated as `k*b > a`, which is exact for the small integers involved
    /// whenever `k` is itself a short binary fraction.
    pub fn contains(&self, k: f64) -> bool {
        let above = k * self.lower_exact.den as f64 > self.lower_exact.num as f64;
        let scaled = k * self.upper_exact.den as f64;
        let upper = self.upper_exact.num as f64;
        let below = if self.upper_closed { scaled <= upper } else { scaled < upper };
        above && below
    }
}

impl fmt::Display for KWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let close = if self.upper_closed { ']' } else { ')' };
        write!(f, "({}, {}{close}", self.lower_exact, self.upper_exact)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentSet {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub k: f64,
    pub gamma: f64,
    /// Lifespan exponent; `None` stands for the infinite/undefined case.
    pub d: Option<f64>,
    pub admissible_local: bool,
    pub admissible_global: bool,
}

impl ExponentSet {
    /// `k/p`, the Hölder exponent deficit of the nonlinear estimate.
    pub fn k_over_p(&self) -> f64 {
        self.k / self.p
    }
}

fn check_domain(n: usize, p: f64, q: f64) -> Result<()> {
    if n < 3 {
        return Err(Error::Domain(format!("dimension n = {n} must be >= 3")));
    }
    if !p.is_finite() || !q.is_finite() {
        return Err(Error::Domain("exponents must satisfy 2 <= p, q < infinity".into()));
    }
    if p < 2.0 - IDENTITY_TOL || q < 2.0 - IDENTITY_TOL {
        return Err(Error::Domain(format!("exponents p = {p}, q = {q} must be >= 2")));
    }
    Ok(())
}

/// Right-hand side of the scaling identity, i.e. the `1/p` forced by `(n, q, γ)`.
pub fn scaling_inverse_p(n: usize, q: f64, gamma: f64) -> f64 {
    n as f64 * (q - 2.0) / (2.0 * q) - gamma
}

/// Right-hand side of the dispersion inequality.
pub fn knapp_bound(n: usize, q: f64) -> f64 {
    (n as f64 - 1.0) * (q - 2.0) / (4.0 * q)
}

pub fn check_admissible(n: usize, p: f64, q: f64, gamma: f64, regime: Regime) -> Result<bool> {
    check_domain(n, p, q)?;
    let gamma = match regime {
        Regime::Local => {
            if !(gamma > 0.0) {
                return Err(Error::Domain(format!("gamma = {gamma} must be > 0")));
            }
            gamma
        }
        Regime::Global => 1.0,
    };
    let inv_p = 1.0 / p;
    let scaling = (inv_p - scaling_inverse_p(n, q, gamma)).abs() <= IDENTITY_TOL;
    let knapp = inv_p <= knapp_bound(n, q) + IDENTITY_TOL;
    let strict_p = match regime {
        Regime::Local => true,
        Regime::Global => p > 2.0,
    };
    Ok(scaling && knapp && strict_p)
}

pub fn k_window(n: usize, regime: Regime) -> Result<KWindow> {
    let r = Rational::new;
    let w = match n {
        0..=2 => return Err(Error::Domain(format!("dimension n = {n} must be >= 3"))),
        3 => KWindow::from_rationals(r(3, 1), r(5, 1), false),
        4 => KWindow::from_rationals(r(2, 1), r(3, 1), false),
        5 => KWindow::from_rationals(r(5, 3), r(7, 3), false),
        _ => {
            let n = n as i64;
            let lower = reduce(r(n, n - 2));
            let upper = reduce(r(n, n - 3));
            KWindow::from_rationals(lower, upper, regime == Regime::Local)
        }
    };
    Ok(w)
}

fn reduce(x: Rational) -> Rational {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 { a.abs() } else { gcd(b, a % b) }
    }
    let g = gcd(x.num, x.den);
    Rational::new(x.num / g, x.den / g)
}

/// `(n+2) - (n-2)k`, the denominator of the lifespan exponent.
fn lifespan_denominator(n: usize, k: f64) -> f64 {
    (n as f64 + 2.0) - (n as f64 - 2.0) * k
}

pub fn lifespan_exponent(n: usize, k: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain("dimension must be >= 1".into()));
    }
    if !(k > 1.0) {
        return Err(Error::Domain(format!("power k = {k} must be > 1")));
    }
    let den = lifespan_denominator(n, k);
    if !(den > 0.0) {
        return Err(Error::Degenerate(format!(
            "(n+2)-(n-2)k = {den} <= 0 for n = {n}, k = {k}; lifespan exponent is infinite"
        )));
    }
    Ok(2.0 * (k - 1.0) / den)
}

pub fn strichartz_pair_for_k(n: usize, k: f64, regime: Regime) -> Result<ExponentSet> {
    let window = k_window(n, regime)?;
    if !window.contains(k) {
        return Err(Error::Window { n, k, window: window.to_string() });
    }
    let q = 2.0 * k;
    let inv_p = scaling_inverse_p(n, q, 1.0);
    if !(inv_p > 0.0) {
        return Err(Error::Degenerate(format!("1/p = {inv_p} is not positive")));
    }
    let p = 1.0 / inv_p;
    let d = lifespan_exponent(n, k)?;
    if !(k / p < 1.0) {
        return Err(Error::Degenerate(format!("k/p = {} is not < 1", k / p)));
    }
    let admissible_local = check_admissible(n, p, q, 1.0, Regime::Local)?;
    let admissible_global = check_admissible(n, p, q, 1.0, Regime::Global)?;
    Ok(ExponentSet {
        n,
        p,
        q,
        k,
        gamma: 1.0,
        d: Some(d),
        admissible_local,
        admissible_global,
    })
}

/// One row per `(n, regime)` of the window table.
pub fn window_table(n_min: usize, n_max: usize) -> Result<Vec<(usize, Regime, KWindow)>> {
    let mut rows = Vec::new();
    for n in n_min..=n_max {
        for regime in [Regime::Local, Regime::Global] {
            rows.push((n, regime, k_window(n, regime)?));
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissible_examples() {
        assert!(check_admissible(3, 8.0, 8.0, 1.0, Regime::Global).unwrap());
        assert!(!check_admissible(3, 2.0, 8.0, 1.0, Regime::Global).unwrap());
        // 1/p = 4*3/10 - 1 = 1/5, so p = 10 breaks the scaling identity.
        assert!(!check_admissible(4, 10.0, 5.0, 1.0, Regime::Global).unwrap());
        assert!(check_admissible(4, 5.0, 5.0, 1.0, Regime::Global).unwrap());
    }

    #[test]
    fn brute_force_scan_confirms_n4_q5() {
        // Scan a (p, q) lattice with an independent rational test of the identity.
        let mut hits = Vec::new();
        for pi in 4..=80 {
            for qi in 4..=80 {
                let (p, q) = (pi as f64 / 2.0, qi as f64 / 2.0);
                // 1/p = n(q-2)/(2q) - 1  <=>  2q = p(n(q-2) - 2q)
                let lhs = 2.0 * q;
                let rhs = p * (4.0 * (q - 2.0) - 2.0 * q);
                let knapp = 4.0 * q <= p * 3.0 * (q - 2.0);
                if (lhs - rhs).abs() < 1e-9 && knapp && p > 2.0 {
                    hits.push((p, q));
                }
                assert_eq!(
                    check_admissible(4, p, q, 1.0, Regime::Global).unwrap(),
                    (lhs - rhs).abs() < 1e-9 && knapp && p > 2.0,
                    "p={p} q={q}"
                );
            }
        }
        assert!(hits.contains(&(5.0, 5.0)));
        assert!(!hits.contains(&(10.0, 5.0)));
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(check_admissible(2, 8.0, 8.0, 1.0, Regime::Local), Err(Error::Domain(_))));
        assert!(matches!(check_admissible(3, 1.5, 8.0, 1.0, Regime::Local), Err(Error::Domain(_))));
        assert!(matches!(check_admissible(3, 8.0, 1.0, 1.0, Regime::Local), Err(Error::Domain(_))));
        assert!(matches!(
            check_admissible(3, f64::INFINITY, 8.0, 1.0, Regime::Local),
            Err(Error::Domain(_))
        ));
        assert!(matches!(k_window(2, Regime::Local), Err(Error::Domain(_))));
    }

    #[test]
    fn local_regime_accepts_general_gamma() {
        // n = 3, q = 4: 1/p = 3*2/8 - γ; γ = 1/2 gives 1/p = 1/4.
        assert!(check_admissible(3, 4.0, 4.0, 0.5, Regime::Local).unwrap());
        // knapp: 1/4 <= 2*2/16 = 1/4 holds with equality.
        assert!(!check_admissible(3, 4.0, 4.0, 0.5, Regime::Global).unwrap());
    }

    #[test]
    fn pair_examples() {
        let e = strichartz_pair_for_k(3, 4.0, Regime::Global).unwrap();
        assert_eq!(e.p, 8.0);
        assert_eq!(e.q, 8.0);
        assert_eq!(e.d, Some(6.0));
        assert!(e.admissible_global && e.admissible_local);

        let e = strichartz_pair_for_k(4, 2.5, Regime::Global).unwrap();
        assert!((e.p - 5.0).abs() < 1e-12);
        assert_eq!(e.q, 5.0);
        assert!((e.d.unwrap() - 3.0).abs() < 1e-12);

        assert!(matches!(strichartz_pair_for_k(3, 5.0, Regime::Global), Err(Error::Window { .. })));
    }

    #[test]
    fn window_examples() {
        let w = k_window(3, Regime::Local).unwrap();
        assert_eq!((w.lower, w.upper, w.upper_closed), (3.0, 5.0, false));
        let w = k_window(6, Regime::Local).unwrap();
        assert_eq!((w.lower, w.upper, w.upper_closed), (1.5, 2.0, true));
        let w = k_window(6, Regime::Global).unwrap();
        assert_eq!((w.lower, w.upper, w.upper_closed), (1.5, 2.0, false));
        assert_eq!(k_window(5, Regime::Global).unwrap().to_string(), "(5/3, 7/3)");
        assert_eq!(k_window(9, Regime::Local).unwrap().to_string(), "(9/7, 3/2]");
    }

    #[test]
    fn lifespan_examples() {
        assert_eq!(lifespan_exponent(3, 4.0).unwrap(), 6.0);
        assert!((lifespan_exponent(3, 3.5).unwrap() - 10.0 / 3.0).abs() < 1e-12);
        assert!(matches!(lifespan_exponent(3, 5.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn closed_endpoint_at_n6_is_degenerate() {
        // k = 2 is inside the closed local window for n = 6, but there p = 2 and k/p = 1.
        assert!(k_window(6, Regime::Local).unwrap().contains(2.0));
        assert!(matches!(strichartz_pair_for_k(6, 2.0, Regime::Local), Err(Error::Degenerate(_))));
    }

    #[test]
    fn closed_endpoint_succeeds_for_n7_and_up() {
        for n in 7..=10usize {
            let upper = n as f64 / (n as f64 - 3.0);
            let local = strichartz_pair_for_k(n, upper, Regime::Local).unwrap();
            assert!((local.p - 2.0).abs() < 1e-9);
            assert!(local.k_over_p() < 1.0);
            assert!(matches!(
                strichartz_pair_for_k(n, upper, Regime::Global),
                Err(Error::Window { .. })
            ));
        }
    }
}
