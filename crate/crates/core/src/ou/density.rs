use crate::error::{Error, Result};

/// A transition-density query: elapsed time, start level, end level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityQuery {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

/// Centred Gaussian density with variance `t` evaluated at `x`.
pub fn gauss_kernel(t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain {
            what: "gauss_kernel variance (requires t > 0)",
            value: t,
        });
    }
    Ok((-x * x / (2.0 * t)).exp() / (2.0 * std::f64::consts::PI * t).sqrt())
}

/// Variance `(e^{2rt} - 1) / (2r)` of the `d = 0` OU process after time `t`
/// started from a point.
pub fn ou_variance(t: f64, r: f64) -> f64 {
    (2.0 * r * t).exp_m1() / (2.0 * r)
}

/// Transition density of the OU process `dR = dW + r R dt`.
pub fn ou_density(q: DensityQuery, r: f64) -> Result<f64> {
    if q.t == 0.0 {
        return Err(Error::DegenerateDensity);
    }
    if !(q.t > 0.0) {
        return Err(Error::Domain {
            what: "ou_density elapsed time (requires t > 0)",
            value: q.t,
        });
    }
    gauss_kernel(ou_variance(q.t, r), q.y - q.x * (r * q.t).exp())
}
