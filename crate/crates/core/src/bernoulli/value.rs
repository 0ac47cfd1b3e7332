use super::{initial_y, insider_rate, BernoulliMarket, Outcome};
use crate::error::{invalid, Result};
use crate::ou::{scale_s, scale_s_deriv, OUParams};
use crate::quadrature::composite_legendre;
use crate::special::erfc;

/// Beyond this scaled distance the Gaussian tail `½ erfc(u)` is below 1e-36.
const TAIL_CUTOFF: f64 = 9.0;
const PANEL_NODES: usize = 16;

/// The insider's value at signal level `x`: `∫_x^∞ (1 - s)` for the high
/// outcome and `∫_{-∞}^x s` for the low one, by Gauss–Legendre quadrature in the
/// scaled variable `√r (y + d/r)` with the Gaussian tail cut off.
pub fn value_j(x: f64, v: Outcome, params: &OUParams) -> f64 {
    let sr = params.r().sqrt();
    let u = sr * (x + params.shift());
    // Both cases reduce to ∫_a^∞ ½ erfc(z) dz with a = ±u.
    let a = match v {
        Outcome::One => u,
        Outcome::Zero => -u,
    };
    if a >= TAIL_CUTOFF {
        return 0.0;
    }
    let panels = (TAIL_CUTOFF - a).ceil() as usize;
    composite_legendre(|z| 0.5 * erfc(z), a, TAIL_CUTOFF, panels, PANEL_NODES) / sr
}

/// `½ J'' + (r x + d) J' - r J` on `grid`, with `J' = s - v` and `J'' = s'`.
pub fn ode_residual_j(grid: &[f64], v: Outcome, params: &OUParams) -> Vec<f64> {
    grid.iter()
        .map(|&x| {
            let j = value_j(x, v, params);
            let dj = scale_s(x, params) - v.value();
            let d2j = scale_s_deriv(x, params);
            0.5 * d2j + (params.r() * x + params.d()) * dj - params.r() * j
        })
        .collect()
}

/// Generator of the signal conditioned on the outcome, applied to `J`, minus `r J`:
/// the plain residual plus `α(x) J'(x)`. Non-positive for an `r`-excessive `J`.
pub fn excessivity_residual(grid: &[f64], v: Outcome, params: &OUParams) -> Vec<f64> {
    ode_residual_j(grid, v, params)
        .into_iter()
        .zip(grid)
        .map(|(res, &x)| res + insider_rate(v, x, params) * (scale_s(x, params) - v.value()))
        .collect()
}

/// `E[s₀'(Y_t)]` for the unconditioned signal, Gaussian with mean `y₀ e^{rt}` and
/// variance `(e^{2rt} - 1)/(2r)`. The Gaussian-times-Gaussian integral collapses
/// to `s₀'(y₀) e^{-rt}`.
pub fn lambda_mean_closed_form(t: f64, market: &BernoulliMarket) -> Result<f64> {
    let params = market.params();
    if params.d() != 0.0 {
        return Err(invalid("d", "closed-form lambda mean is stated for d = 0"));
    }
    if !(t >= 0.0) {
        return Err(invalid("t", format!("time must be non-negative, got {t}")));
    }
    let y0 = initial_y(market)?;
    Ok(scale_s_deriv(y0, params) * (-params.r() * t).exp())
}
