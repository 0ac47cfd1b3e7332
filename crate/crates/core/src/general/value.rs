use super::pricing::{pricing_h_deriv, pricing_h_fixed, pricing_h_inv};
use super::{GeneralMarket, QuadratureCfg};
use crate::error::{invalid, Result};
use crate::quadrature::{composite_legendre, legendre};

/// Tail integrals are cut where the discount has fallen by this factor.
const TAIL_DECAY: f64 = 1e8;
const PANEL_NODES: usize = 16;
const LEVEL_PANEL: f64 = 0.25;
/// Tail panel width in units of `1/r`.
const TIME_PANEL: f64 = 0.5;
const FIXED_NODES: usize = 128;

/// `½ e^{rt} ∫_t^∞ e^{-rs} σ(s) h*_y(s, h*⁻¹(s, v)) ds`, truncated where
/// `e^{-r(s-t)}` reaches `1e-8`.
pub fn value_j_tail(t: f64, v: f64, market: &GeneralMarket, cfg: &QuadratureCfg) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid(
            "t",
            format!("time must be finite and non-negative, got {t}"),
        ));
    }
    let r = market.r();
    let span = TAIL_DECAY.ln() / r;
    let panels = (span * r / TIME_PANEL).ceil() as usize;
    let width = span / panels as f64;
    let mut failure = None;
    let mut total = 0.0;
    for k in 0..panels {
        let a = t + k as f64 * width;
        total += legendre(
            |s| {
                let level = match pricing_h_inv(s, v, market, cfg) {
                    Ok(l) => l,
                    Err(e) => {
                        failure.get_or_insert(e);
                        return 0.0;
                    }
                };
                (-r * (s - t)).exp() * market.sigma(s) * pricing_h_deriv(s, level, market, cfg)
            },
            a,
            a + width,
            PANEL_NODES,
        );
        if let Some(e) = failure {
            return Err(e);
        }
    }
    Ok(0.5 * total)
}

/// The insider's value `J(t, y)` given payoff value `v`: the signed area
/// `∫_{h⁻¹(t,v)}^y (h*(t, x) - v)/σ(t) dx` plus [`value_j_tail`].
pub fn value_j_general(
    t: f64,
    y: f64,
    v: f64,
    market: &GeneralMarket,
    cfg: &QuadratureCfg,
) -> Result<f64> {
    if !y.is_finite() {
        return Err(invalid("y", format!("level must be finite, got {y}")));
    }
    let tail = value_j_tail(t, v, market, cfg)?;
    let pivot = pricing_h_inv(t, v, market, cfg)?;
    if pivot == y {
        return Ok(tail);
    }
    let panels = ((y - pivot).abs() / LEVEL_PANEL).ceil().max(1.0) as usize;
    let area = composite_legendre(
        |x| pricing_h_fixed(t, x, market, FIXED_NODES, cfg.variance_floor) - v,
        pivot,
        y,
        panels,
        PANEL_NODES,
    );
    Ok(area / market.sigma(t) + tail)
}
