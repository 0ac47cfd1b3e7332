//! Standard-normal helpers and the scaled complementary error function.

use statrs::function::erf;

pub const SQRT_PI: f64 = 1.772_453_850_905_516;
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Above this argument `erfcx` switches from `exp(x^2) erfc(x)` to the continued fraction.
const ERFCX_CF_SWITCH: f64 = 5.0;
const ERFCX_CF_TERMS: usize = 60;

pub fn norm_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Upper tail `1 - Φ(z)` without cancellation.
pub fn norm_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// Standard-normal quantile. Accurate to a few ulps in the bulk; callers that
/// need 1e-12 polish it with a root finder.
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    -std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * p)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Scaled complementary error function `exp(x^2) erfc(x)`.
///
/// Finite and positive for every finite `x`; overflows to `+inf` only for
/// `x < -26.6`, where the reciprocal (what the hazard rates use) is zero anyway.
pub fn erfcx(x: f64) -> f64 {
    if x < ERFCX_CF_SWITCH {
        return (x * x).exp() * libm::erfc(x);
    }
    // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let mut t = x;
    for k in (1..=ERFCX_CF_TERMS).rev() {
        t = x + 0.5 * k as f64 / t;
    }
    1.0 / (SQRT_PI * t)
}

/// `φ(z) / Φ(z)`, the inverse Mills ratio of the lower tail, stable for all finite `z`.
pub fn pdf_over_cdf(z: f64) -> f64 {
    // Φ(z) = erfcx(-z/√2) exp(-z²/2) / 2, so φ/Φ = 2/(√(2π) erfcx(-z/√2)).
    2.0 * INV_SQRT_2PI / erfcx(-z / std::f64::consts::SQRT_2)
}

/// `φ(z) / (1 - Φ(z))`, stable for all finite `z`.
pub fn pdf_over_sf(z: f64) -> f64 {
    pdf_over_cdf(-z)
}
