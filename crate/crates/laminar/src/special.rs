//! Special functions needed by the radial Gaussian-to-ball map.
//!
//! Implements the regularized lower incomplete gamma function
//! `P(a, x) = γ(a, x) / Γ(a)` with a series expansion for `x < a + 1` and a
//! Lentz continued fraction for the complement otherwise, plus a Lanczos
//! `ln Γ`. Target relative accuracy is 1e-12: downstream Jacobians divide by
//! these values, so sloppy tails would surface as metric-tensor noise.

use crate::error::{Error, Result};

const MAX_ITER: usize = 500;
const EPS: f64 = f64::EPSILON;

/// Lanczos coefficients (g = 7, 9 terms).
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `z > 0`.
pub fn ln_gamma(z: f64) -> f64 {
    debug_assert!(z > 0.0, "ln_gamma requires z > 0, got {z}");
    if z < 0.5 {
        // Reflection: Γ(z) Γ(1-z) = π / sin(πz).
        let pi = std::f64::consts::PI;
        return (pi / (pi * z).sin()).ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut acc = LANCZOS[0];
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma function `P(a, x)` for `a > 0`, `x >= 0`.
pub fn gamma_p(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "gamma_p requires a > 0, finite x (a={a}, x={x})"
        )));
    }
    if x < 0.0 {
        return Err(Error::Domain(format!("gamma_p requires x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x < a + 1.0 {
        let (scaled, _) = gamma_p_scaled(a, x)?;
        // P = x^a * S, computed in log space to dodge over/underflow.
        Ok((a * x.ln() + scaled.ln()).exp())
    } else {
        Ok(1.0 - gamma_q_cf(a, x)?)
    }
}

/// `(S, S')` where `S(x) = P(a, x) / x^a`, via the entire-series representation
/// `S(x) = e^{-x} Σ_n x^n / Γ(a + 1 + n)`.
///
/// `S` stays finite and strictly positive down to `x = 0`, which makes it the
/// stable route for radial quantities like `F(r)/r` near the origin. Intended
/// for the series regime `x < a + 1`; converges (slowly) beyond it.
pub fn gamma_p_scaled(a: f64, x: f64) -> Result<(f64, f64)> {
    if !(a > 0.0) || x < 0.0 || !x.is_finite() {
        return Err(Error::Domain(format!(
            "gamma_p_scaled domain (a={a}, x={x})"
        )));
    }
    // T = Σ x^n / Γ(a+1+n), T' = Σ n x^{n-1} / Γ(a+1+n)
    let mut term = (-ln_gamma(a + 1.0)).exp();
    let mut t_sum = term;
    let mut dt_sum = 0.0;
    for n in 1..=MAX_ITER {
        let nf = n as f64;
        // term_n = x^n / Γ(a+1+n)
        let dterm = term / (a + nf); // x^{n-1} / Γ(a+1+n)
        term = dterm * x;
        t_sum += term;
        dt_sum += nf * dterm;
        if term < t_sum * EPS && nf * dterm < (dt_sum + EPS) * EPS {
            let e = (-x).exp();
            return Ok((e * t_sum, e * (dt_sum - t_sum)));
        }
    }
    Err(Error::NoConvergence(format!(
        "gamma_p_scaled series (a={a}, x={x})"
    )))
}

/// Regularized upper incomplete gamma `Q(a, x)` by modified Lentz continued
/// fraction; accurate for `x >= a + 1`.
fn gamma_q_cf(a: f64, x: f64) -> Result<f64> {
    let log_prefactor = a * x.ln() - x - ln_gamma(a);
    let prefactor = log_prefactor.exp();
    if prefactor == 0.0 {
        return Ok(0.0); // tail is below f64 range
    }
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut f = d;
    for n in 1..=MAX_ITER {
        let nf = n as f64;
        let an = -nf * (nf - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        f *= delta;
        if (delta - 1.0).abs() < EPS {
            return Ok(prefactor * f);
        }
    }
    Err(Error::NoConvergence(format!(
        "gamma_q continued fraction (a={a}, x={x})"
    )))
}

/// Error function via `erf(x) = sign(x) · P(1/2, x²)`.
pub fn erf(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let p = gamma_p(0.5, x * x).expect("erf argument is finite");
    if x > 0.0 {
        p
    } else {
        -p
    }
}

/// Standard normal CDF `Φ(x)`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}
