use super::OUParams;
use crate::error::{Error, Result};
use crate::roots::solve_increasing;
use crate::special::{erfc, erfcx, norm_quantile, SQRT_PI};

/// Bisection tolerance for [`scale_s_inv`], in level units.
const INV_X_TOL: f64 = 1e-12;
const INV_NEWTON_STEPS: usize = 3;

/// Scale function `s(x) = √(r/π) ∫_{-∞}^x exp(-r (y + d/r)²) dy`.
///
/// Evaluated as `½ erfc(-√r (x + d/r))`, i.e. the standard-normal CDF at
/// `√(2r)(x + d/r)`.
pub fn scale_s(x: f64, params: &OUParams) -> f64 {
    let w = x + params.shift();
    0.5 * erfc(-params.r().sqrt() * w)
}

/// `s'(x) = √(r/π) exp(-r (x + d/r)²)`.
pub fn scale_s_deriv(x: f64, params: &OUParams) -> f64 {
    let r = params.r();
    let w = x + params.shift();
    (r / std::f64::consts::PI).sqrt() * (-r * w * w).exp()
}

/// `s''(x) = -2 r (x + d/r) s'(x)`.
pub fn scale_s_deriv2(x: f64, params: &OUParams) -> f64 {
    -2.0 * params.r() * (x + params.shift()) * scale_s_deriv(x, params)
}

/// Inverse of [`scale_s`] on `(0, 1)`.
///
/// Seeded by the normal quantile, bracketed and bisected to `1e-12`, then
/// polished with three Newton steps.
pub fn scale_s_inv(p: f64, params: &OUParams) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain {
            what: "scale_s_inv (requires 0 < p < 1)",
            value: p,
        });
    }
    let r = params.r();
    let seed = norm_quantile(p) / (2.0 * r).sqrt() - params.shift();
    let half_width = 1e-8 * (1.0 + seed.abs());
    solve_increasing(
        |x| scale_s(x, params),
        Some(|x| scale_s_deriv(x, params)),
        p,
        seed,
        half_width,
        INV_X_TOL,
        INV_NEWTON_STEPS,
    )
}

/// The two hazard ratios `(s'/s, s'/(1-s))` at `x`.
///
/// Both are computed as `2√r / (√π erfcx(∓√r (x + d/r)))`, which stays finite
/// and accurate deep in either tail where the naive quotient is `0/0`.
pub fn hazard_pair(x: f64, params: &OUParams) -> (f64, f64) {
    let sr = params.r().sqrt();
    let u = sr * (x + params.shift());
    let k = 2.0 * sr / SQRT_PI;
    (k / erfcx(-u), k / erfcx(u))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(r: f64, d: f64) -> OUParams {
        OUParams::new(r, d).unwrap()
    }

    #[test]
    fn symmetric_point_is_one_half() {
        assert_eq!(scale_s(0.0, &p(1.0, 0.0)), 0.5);
        assert_eq!(scale_s_inv(0.5, &p(1.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn tails_reach_zero_and_one() {
        let q = p(1.0, 0.0);
        assert_eq!(scale_s(-40.0, &q), 0.0);
        assert_eq!(scale_s(40.0, &q), 1.0);
        assert!(scale_s(-5.0, &q) < 1e-11);
        assert!(1.0 - scale_s(5.0, &q) < 1e-11);
    }

    #[test]
    fn density_peak() {
        let q = p(1.0, 0.0);
        assert!((scale_s_deriv(0.0, &q) - 0.564_189_583_547_756_3).abs() < 1e-15);
        let q = p(2.5, -0.7);
        let mode = -q.d() / q.r();
        let peak = scale_s_deriv(mode, &q);
        assert!((peak - (2.5 / std::f64::consts::PI).sqrt()).abs() < 1e-15);
        assert!(scale_s_deriv(mode + 1e-3, &q) < peak);
        assert!(scale_s_deriv(mode - 1e-3, &q) < peak);
    }

    #[test]
    fn shifted_derivative_and_inverse() {
        let (r, d) = (1.3, 0.8);
        let q = p(r, d);
        let q0 = p(r, 0.0);
        for &x in &[-2.0, -0.3, 0.0, 1.1] {
            let lhs = scale_s_deriv(x, &q);
            let rhs = scale_s_deriv(x + d / r, &q0);
            assert!((lhs - rhs).abs() < 1e-15);
        }
        for &pr in &[0.05, 0.4, 0.93] {
            let lhs = scale_s_inv(pr, &q).unwrap();
            let rhs = scale_s_inv(pr, &q0).unwrap() - d / r;
            assert!((lhs - rhs).abs() < 1e-11);
        }
    }

    #[test]
    fn inverse_rejects_outside_unit_interval() {
        let q = p(1.0, 0.0);
        for &bad in &[0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(scale_s_inv(bad, &q), Err(Error::Domain { .. })));
        }
    }

    #[test]
    fn inverse_roundtrip_on_level_grid() {
        let q = p(1.0, 0.0);
        for i in 0..=100 {
            let x = -5.0 + 0.1 * i as f64;
            let p = scale_s(x, &q);
            let back = scale_s_inv(p, &q).unwrap();
            // Near p = 1 one ulp of p already moves x by eps / s'(x).
            let limit = 2.0 * f64::EPSILON * p / scale_s_deriv(x, &q);
            let tol = if x <= 3.5 { 1e-10 } else { 1e-10 + limit };
            assert!((back - x).abs() <= tol, "x={x} back={back}");
        }
    }

    #[test]
    fn hazards_at_centre() {
        let (a, b) = hazard_pair(0.0, &p(1.0, 0.0));
        assert!((a - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-14);
        assert!((b - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-14);
    }

    #[test]
    fn hazards_agree_with_naive_ratio_in_bulk() {
        let q = p(0.7, 0.4);
        for i in 0..=80 {
            let x = -4.0 + 0.1 * i as f64;
            let (a, b) = hazard_pair(x, &q);
            let w = q.r().sqrt() * (x + q.shift());
            let lower = 0.5 * erfc(-w);
            let upper = 0.5 * erfc(w);
            let ds = scale_s_deriv(x, &q);
            assert!((a - ds / lower).abs() <= 1e-10 * a.max(1.0), "x={x}");
            assert!((b - ds / upper).abs() <= 1e-10 * b.max(1.0), "x={x}");
        }
    }

    #[test]
    fn hazard_reflection() {
        let q = p(1.7, -0.9);
        let shift = 2.0 * q.d() / q.r();
        for &x in &[-30.0, -3.0, 0.2, 5.0, 60.0] {
            let (_, right) = hazard_pair(x, &q);
            let (left, _) = hazard_pair(-x - shift, &q);
            assert!((right - left).abs() <= 1e-13 * right.max(1.0));
        }
    }

    #[test]
    fn hazards_finite_far_out() {
        let q = p(1.0, 0.0);
        for &x in &[-1e6, -1e3, 1e3, 1e6] {
            let (a, b) = hazard_pair(x, &q);
            assert!(a.is_finite() && b.is_finite() && a >= 0.0 && b >= 0.0);
        }
    }
}
