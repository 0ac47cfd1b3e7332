use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// The deterministic clock `V(t) = ∫₀ᵗ σ²(s) ds` with
/// `σ²(t) = C² e^{-2rt} / (1 + C² e^{-2rt})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeChange {
    r: f64,
    c_sq: f64,
    v_inf: f64,
}

impl TimeChange {
    pub fn new(r: f64, c_sq: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(invalid(
                "r",
                format!("rate must be finite and positive, got {r}"),
            ));
        }
        if !(c_sq > 0.0) || !c_sq.is_finite() {
            return Err(invalid(
                "c_sq",
                format!("C² must be finite and positive, got {c_sq}"),
            ));
        }
        Ok(Self {
            r,
            c_sq,
            v_inf: c_sq.ln_1p() / (2.0 * r),
        })
    }

    /// The clock used by the general-payoff equilibrium, `C² = 2r`.
    pub fn equilibrium(r: f64) -> Result<Self> {
        Self::new(r, 2.0 * r)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn c_sq(&self) -> f64 {
        self.c_sq
    }

    /// `V(∞) = log(1 + C²) / (2r)`.
    pub fn v_inf(&self) -> f64 {
        self.v_inf
    }

    fn q(&self, t: f64) -> f64 {
        self.c_sq * (-2.0 * self.r * t).exp()
    }

    pub fn sigma_sq(&self, t: f64) -> f64 {
        let q = self.q(t);
        q / (1.0 + q)
    }

    pub fn sigma(&self, t: f64) -> f64 {
        self.sigma_sq(t).sqrt()
    }

    /// `d σ²/dt = -2r q / (1 + q)²` with `q = C² e^{-2rt}`.
    pub fn sigma_sq_deriv(&self, t: f64) -> f64 {
        let q = self.q(t);
        -2.0 * self.r * q / ((1.0 + q) * (1.0 + q))
    }

    pub fn v(&self, t: f64) -> f64 {
        self.v_inf - self.remaining(t)
    }

    /// `V(∞) - V(t) = log(1 + C² e^{-2rt}) / (2r)`, without cancellation.
    pub fn remaining(&self, t: f64) -> f64 {
        self.q(t).ln_1p() / (2.0 * self.r)
    }

    /// `V⁻¹(u)` for `0 ≤ u < V(∞)`.
    pub fn v_inv(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) || u >= self.v_inf {
            return Err(Error::Domain {
                what: "time_change inverse (requires 0 <= u < V(inf))",
                value: u,
            });
        }
        // e^{-2rt} = ((1 + C²) e^{-2ru} - 1) / C²
        let e = (-2.0 * self.r * u).exp();
        let num = self.c_sq * e + (-2.0 * self.r * u).exp_m1();
        if !(num > 0.0) {
            return Err(Error::Domain {
                what: "time_change inverse (u too close to V(inf))",
                value: u,
            });
        }
        Ok(-(num / self.c_sq).ln() / (2.0 * self.r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deriv::central_d1;

    #[test]
    fn sigma_at_origin_and_infinity() {
        let tc = TimeChange::equilibrium(1.0).unwrap();
        assert!((tc.sigma_sq(0.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!(tc.sigma_sq(200.0) < 1e-150);
        let mut prev = tc.sigma_sq(0.0);
        for i in 1..200 {
            let s = tc.sigma_sq(0.05 * i as f64);
            assert!(s < prev);
            prev = s;
        }
    }

    #[test]
    fn sigma_solves_its_ode() {
        // σ' / (σ (1 - σ)(1 + σ)) = -r
        let tc = TimeChange::equilibrium(1.0).unwrap();
        for i in 0..=60 {
            let t = 0.1 * i as f64;
            let s = tc.sigma(t);
            let ds = central_d1(|u| tc.sigma(u), t);
            let res = ds / (s * (1.0 - s) * (1.0 + s)) + tc.r();
            assert!(res.abs() <= 1e-8, "t={t} res={res}");
        }
    }

    #[test]
    fn clock_endpoints_and_derivative() {
        let tc = TimeChange::new(0.6, 1.7).unwrap();
        assert_eq!(tc.v(0.0), 0.0);
        assert!((tc.v_inf() - 2.7f64.ln() / 1.2).abs() < 1e-15);
        for i in 0..30 {
            let t = 0.2 * i as f64 + 0.1;
            let dv = central_d1(|u| tc.v(u), t);
            assert!((dv - tc.sigma_sq(t)).abs() < 1e-9);
        }
    }

    #[test]
    fn remaining_clock_identity() {
        // e^{2r(V(∞) - V(t))} = 1 + 2r e^{-2rt} when C² = 2r
        for &r in &[0.3, 1.0, 2.0] {
            let tc = TimeChange::equilibrium(r).unwrap();
            for i in 0..40 {
                let t = 0.25 * i as f64;
                let lhs = (2.0 * r * (tc.v_inf() - tc.v(t))).exp();
                let rhs = 1.0 + 2.0 * r * (-2.0 * r * t).exp();
                assert!((lhs - rhs).abs() <= 1e-12, "r={r} t={t}");
            }
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let tc = TimeChange::equilibrium(1.0).unwrap();
        for i in 0..=999 {
            let u = 0.999 * tc.v_inf() * i as f64 / 999.0;
            let back = tc.v(tc.v_inv(u).unwrap());
            assert!((back - u).abs() <= 1e-10, "u={u}");
        }
        assert!(tc.v_inv(tc.v_inf()).is_err());
        assert!(tc.v_inv(-1e-3).is_err());
    }

    #[test]
    fn rejects_bad_constants() {
        assert!(TimeChange::new(0.0, 1.0).is_err());
        assert!(TimeChange::new(1.0, 0.0).is_err());
        assert!(TimeChange::new(1.0, f64::INFINITY).is_err());
    }
}
