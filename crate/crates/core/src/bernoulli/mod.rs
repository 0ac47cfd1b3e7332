//! Binary-payoff equilibrium: the price is the scale function of the market
//! makers' signal, and the insider pushes the signal towards `±∞`.

mod sim;
mod value;

pub use sim::{
    expected_profit_mc, simulate_equilibrium, simulate_with_strategy, CheckpointState,
    EquilibriumRun, PathRecord, PayoffDraw, ProfitEstimate,
};
pub use value::{excessivity_residual, lambda_mean_closed_form, ode_residual_j, value_j};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ou::{hazard_pair, scale_s_deriv, scale_s_inv, OUParams};
use crate::special::{erfc, erfcx, norm_quantile, SQRT_PI};

/// Liquidation value of the binary asset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Zero,
    One,
}

impl Outcome {
    pub fn value(self) -> f64 {
        match self {
            Outcome::Zero => 0.0,
            Outcome::One => 1.0,
        }
    }

    pub fn from_value(v: f64) -> Result<Self> {
        if v == 0.0 {
            Ok(Outcome::Zero)
        } else if v == 1.0 {
            Ok(Outcome::One)
        } else {
            Err(invalid(
                "v",
                format!("binary payoff must be 0 or 1, got {v}"),
            ))
        }
    }
}

/// Prior probability `p` of the high outcome and the signal's OU parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernoulliMarket {
    p: f64,
    params: OUParams,
}

impl BernoulliMarket {
    pub fn new(p: f64, params: OUParams) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(invalid(
                "p",
                format!("probability must lie in (0, 1), got {p}"),
            ));
        }
        Ok(Self { p, params })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn params(&self) -> &OUParams {
        &self.params
    }

    pub fn with_d(&self, d: f64) -> Result<Self> {
        Self::new(self.p, OUParams::new(self.params.r(), d)?)
    }
}

/// Starting signal `y₀` with `s(y₀) = p`.
pub fn initial_y(market: &BernoulliMarket) -> Result<f64> {
    scale_s_inv(market.p, &market.params)
}

/// Insider trading rate: `s'/s` when the payoff is high, `-s'/(1-s)` when low.
pub fn insider_rate(v: Outcome, y: f64, params: &OUParams) -> f64 {
    let (up, down) = hazard_pair(y, params);
    match v {
        Outcome::One => up,
        Outcome::Zero => -down,
    }
}

/// Total drift of the signal under the insider's strategy: `r y + d + α`.
pub fn equilibrium_drift(v: Outcome, y: f64, params: &OUParams) -> f64 {
    params.r() * y + params.d() + insider_rate(v, y, params)
}

/// Kyle's lambda as a function of the price, `s₀'(s₀⁻¹(P))`. Zero at the
/// endpoints by continuity and independent of `d`.
pub fn kyle_lambda(price: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(invalid("r", format!("rate must be positive, got {r}")));
    }
    if !(0.0..=1.0).contains(&price) {
        return Err(Error::Domain {
            what: "kyle_lambda price (requires 0 <= P <= 1)",
            value: price,
        });
    }
    if price == 0.0 || price == 1.0 {
        return Ok(0.0);
    }
    let z = norm_quantile(price);
    Ok((r / std::f64::consts::PI).sqrt() * (-0.5 * z * z).exp())
}

/// Price, impact and insider rate at signal level `y`, sharing one `erfc` and
/// one `exp` between them. Used on every simulation step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SignalState {
    pub price: f64,
    pub lambda: f64,
    pub rate: f64,
}

/// Switch to the continued-fraction hazard below this scaled level.
const FAST_HAZARD_EDGE: f64 = 5.0;

#[inline]
pub(crate) fn signal_state(v: Outcome, y: f64, params: &OUParams) -> SignalState {
    let sr = params.r().sqrt();
    let u = sr * (y + params.shift());
    let lambda = sr / SQRT_PI * (-u * u).exp();
    let lower = erfc(-u);
    let price = 0.5 * lower;
    let k = 2.0 * sr / SQRT_PI;
    let rate = match v {
        Outcome::One => {
            if u > -FAST_HAZARD_EDGE {
                lambda / price
            } else {
                k / erfcx(-u)
            }
        }
        Outcome::Zero => {
            if u < FAST_HAZARD_EDGE {
                -lambda / (0.5 * erfc(u))
            } else {
                -k / erfcx(u)
            }
        }
    };
    SignalState {
        price,
        lambda,
        rate,
    }
}

/// `s'` evaluated on a signal level; the impact seen along a path.
pub fn lambda_at_signal(y: f64, params: &OUParams) -> f64 {
    scale_s_deriv(y, params)
}
