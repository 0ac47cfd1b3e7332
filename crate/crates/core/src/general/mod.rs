//! General-payoff equilibrium: a time-changed OU signal, Gaussian-smoothed
//! pricing rule and the insider's bridge strategy.

mod bridge;
mod payoff;
mod pricing;
mod value;

pub use bridge::{
    bridge_drift, bridge_drift_pinned, exact_bridge_columns, insider_rate_general,
    insider_rate_pinned, reconstruct_signal, sample_exact_bridge, simulate_bridge,
    simulate_bridge_with_strategy, BridgeDraw, BridgePath, BridgeRun, BridgeState,
};
pub use payoff::{
    softplus, validate_payoff, PayoffDiagnostics, PayoffKind, PayoffSpec, PiecewiseLinear, ScalarFn,
};
pub use pricing::{
    ghrule_residual, gphia_residual, lambda_limit, pde_residual_h, pricing_h, pricing_h_deriv,
    pricing_h_deriv_fd, pricing_h_fixed, pricing_h_inv, SigmaProfile, UnitSigma,
};
pub use value::{value_j_general, value_j_tail};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::ou::TimeChange;

/// Gauss–Hermite settings for the pricing expectation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureCfg {
    /// Starting node count; doubled until successive values agree.
    pub n_nodes: usize,
    /// Below this Gaussian variance the expectation is `f(mean)`.
    pub variance_floor: f64,
    /// Relative agreement that stops node doubling.
    pub rel_tol: f64,
}

impl Default for QuadratureCfg {
    fn default() -> Self {
        Self {
            n_nodes: 64,
            variance_floor: 1e-12,
            rel_tol: 1e-10,
        }
    }
}

impl QuadratureCfg {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 16 {
            return Err(invalid(
                "n_nodes",
                format!("need at least 16, got {}", self.n_nodes),
            ));
        }
        if !(self.variance_floor > 0.0) {
            return Err(invalid("variance_floor", "must be positive"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(invalid("rel_tol", "must be positive"));
        }
        Ok(())
    }
}

/// Rate, clock with `C² = 2r`, and payoff.
#[derive(Debug, Clone)]
pub struct GeneralMarket {
    r: f64,
    tc: TimeChange,
    pub payoff: PayoffSpec,
}

impl GeneralMarket {
    /// Validates the payoff for rate `r` and fixes the clock constant to `2r`.
    pub fn new(r: f64, payoff: PayoffSpec) -> Result<Self> {
        let tc = TimeChange::equilibrium(r)?;
        validate_payoff(&payoff, r)?;
        Ok(Self { r, tc, payoff })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn time_change(&self) -> &TimeChange {
        &self.tc
    }

    /// `σ*(t)`.
    pub fn sigma(&self, t: f64) -> f64 {
        self.tc.sigma(t)
    }

    /// `g(t) = √(1 + 2r e^{-2rt})`, the signal-to-mean stretch of the pricing rule.
    pub fn stretch(&self, t: f64) -> f64 {
        stretch(self.r, t)
    }

    /// `(cosh a(t), sinh a(t))` with `a(t) = ½ log(1 + 2r e^{-2rt})`.
    pub fn hyperbolic(&self, t: f64) -> (f64, f64) {
        hyperbolic(self.r, t)
    }

    /// `a(t) = ½ log(1 + 2r e^{-2rt})`.
    pub fn clock_gap(&self, t: f64) -> f64 {
        0.5 * (2.0 * self.r * (-2.0 * self.r * t).exp()).ln_1p()
    }

    /// Variance of the unconditioned signal, `(e^{2rV(t)} - 1)/(2r)`.
    pub fn unconditioned_variance(&self, t: f64) -> f64 {
        crate::ou::ou_variance(self.tc.v(t), self.r)
    }
}

pub(crate) fn stretch(r: f64, t: f64) -> f64 {
    (1.0 + 2.0 * r * (-2.0 * r * t).exp()).sqrt()
}

pub(crate) fn sigma_of(r: f64, t: f64) -> f64 {
    let q = r * (-2.0 * r * t).exp();
    (2.0 * q / (1.0 + 2.0 * q)).sqrt()
}

pub(crate) fn hyperbolic(r: f64, t: f64) -> (f64, f64) {
    let q = r * (-2.0 * r * t).exp();
    let g = (1.0 + 2.0 * q).sqrt();
    ((1.0 + q) / g, q / g)
}
