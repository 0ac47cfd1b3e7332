//! Ornstein–Uhlenbeck special functions: the scale function of the generator
//! `½ d²/dx² + (r x + d) d/dx`, its hazard ratios, the transition density, the
//! variance-rate profile `σ²(t)` and the deterministic clock `V(t)`.

mod density;
mod residual;
mod scale;
mod time_change;

pub use density::{gauss_kernel, ou_density, ou_variance, DensityQuery};
pub use residual::{drift_slope_of_reduction, ode_residual_phia, reduce_to_ou, OuReduction};
pub use scale::{hazard_pair, scale_s, scale_s_deriv, scale_s_deriv2, scale_s_inv};
pub use time_change::TimeChange;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Mean-reversion rate `r > 0` and drift offset `d` of the OU generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OUParams {
    r: f64,
    d: f64,
}

impl OUParams {
    pub fn new(r: f64, d: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(invalid(
                "r",
                format!("rate must be finite and positive, got {r}"),
            ));
        }
        if !d.is_finite() {
            return Err(invalid(
                "d",
                format!("drift offset must be finite, got {d}"),
            ));
        }
        Ok(Self { r, d })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// The centring shift `d / r`; `s(x) = s₀(x + d/r)`.
    pub fn shift(&self) -> f64 {
        self.d / self.r
    }

    /// The same rate with `d = 0`.
    pub fn canonical(&self) -> Self {
        Self { r: self.r, d: 0.0 }
    }
}
