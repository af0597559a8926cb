//! Radial map from a standard normal to the uniform unit ball.
//!
//! For `z ~ N(0, I_d)` the radius `r = ‖z‖` follows a chi distribution with
//! CDF `P(d/2, r²/2)`. A uniform draw from the unit ball has radial CDF
//! `s^d`, so rescaling each point to norm `F(r) = P(d/2, r²/2)^{1/d}` is an
//! exact inverse-transform step: the image is uniform in the ball and the
//! map commutes with rotations.
//!
//! All radial quantities are evaluated through `G(x) = (P(a, x)/x^a)^{1/d}`
//! with `x = r²/2` and `a = d/2`, for which `a/d = 1/2` gives
//!
//! ```text
//! F(r) = (r/√2)·G(x),   F(r)/r = G(x)/√2,   d(F/r)/dr / r = G'(x)/√2.
//! ```
//!
//! `G` extends smoothly through `x = 0`, so the scale `F(r)/r` and the
//! Jacobian need no unstable division near the origin, and the radial
//! derivative involves no cancellation anywhere in the series regime.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::special::{gamma_p, gamma_p_scaled, ln_gamma};

/// Output norms are clamped strictly below 1 so the closed ball boundary is
/// never reached, with enough margin that rescaling a vector to this norm
/// cannot round back up to 1.
const ONE_BELOW: f64 = 1.0 - 1e-15;

/// Radial CDF `F(r) = P(d/2, r²/2)^{1/d}` of the Gaussian-to-ball map.
pub fn radial_cdf(r: f64, dim: usize) -> Result<f64> {
    if r < 0.0 || !r.is_finite() {
        return Err(Error::Domain(format!(
            "radial_cdf requires r >= 0, got {r}"
        )));
    }
    if dim == 0 {
        return Err(Error::InvalidInput("radial_cdf requires dim >= 1".into()));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let eval = radial_eval(r, dim)?;
    Ok(eval.f)
}

/// Map a Gaussian-space point onto the open unit ball; `to_ball(0) = 0`.
pub fn to_ball(z: &ArrayView1<f64>) -> Result<Array1<f64>> {
    let eval = radial_eval(norm(z), z.len())?;
    Ok(z.mapv(|v| v * eval.scale))
}

/// Analytic Jacobian of [`to_ball`]:
/// `J = (F/r)·I + (d(F/r)/dr / r)·z zᵀ`, finite and continuous at the origin.
pub fn to_ball_jacobian(z: &ArrayView1<f64>) -> Result<Array2<f64>> {
    let d = z.len();
    let eval = radial_eval(norm(z), d)?;
    let mut j = Array2::<f64>::eye(d) * eval.scale;
    for i in 0..d {
        for k in 0..d {
            j[(i, k)] += eval.scale_deriv_over_r * z[i] * z[k];
        }
    }
    Ok(j)
}

struct RadialEval {
    /// F(r), the output norm.
    f: f64,
    /// F(r)/r, the per-coordinate scale (its r → 0 limit at the origin).
    scale: f64,
    /// (d/dr)(F/r) / r, the rank-one Jacobian coefficient.
    scale_deriv_over_r: f64,
}

fn radial_eval(r: f64, dim: usize) -> Result<RadialEval> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::Domain(format!(
            "radius must be finite and nonnegative, got {r}"
        )));
    }
    let d = dim as f64;
    let a = 0.5 * d;
    let x = 0.5 * r * r;
    let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;

    if x < a + 1.0 {
        // Series regime, stable down to r = 0.
        let (s, ds) = gamma_p_scaled(a, x)?;
        let g = s.powf(1.0 / d); // G(x)
        let dg = g / (d * s) * ds; // G'(x)
        let f = (sqrt_half * r * g).min(ONE_BELOW);
        Ok(RadialEval {
            f,
            scale: sqrt_half * g,
            scale_deriv_over_r: sqrt_half * dg,
        })
    } else {
        // Continued-fraction regime; the direct difference F'r − F is benign
        // here (no leading-order cancellation for r² >= d + 2).
        let p = gamma_p(a, x)?;
        let f_raw = p.powf(1.0 / d);
        let f = f_raw.min(ONE_BELOW);
        // dP/dr = r^{d-1} e^{-r²/2} / (2^{d/2-1} Γ(d/2)), in log space
        let ln_dp = (d - 1.0) * r.ln() - x - (a - 1.0) * std::f64::consts::LN_2 - ln_gamma(a);
        let dp = ln_dp.exp();
        let f_prime = f_raw.powf(1.0 - d) * dp / d;
        let scale = f / r;
        Ok(RadialEval {
            f,
            scale,
            scale_deriv_over_r: (f_prime * r - f) / (r * r * r),
        })
    }
}

fn norm(z: &ArrayView1<f64>) -> f64 {
    z.iter().map(|v| v * v).sum::<f64>().sqrt()
}
