use crate::deriv::SmoothFn;
use crate::error::{invalid, Error, Result};
use crate::quadrature::legendre;

const STEP_NODES: usize = 16;
const PANEL_WIDTH: f64 = 0.25;

/// Residual `½ a² a'' + a' φ + (r - φ') a` of the coefficient ODE on `grid`.
///
/// A pair `(a, φ)` is admissible for a time-homogeneous signal exactly when
/// this vanishes identically.
pub fn ode_residual_phia<A: SmoothFn, P: SmoothFn>(
    a: &A,
    phi: &P,
    r: f64,
    grid: &[f64],
) -> Result<Vec<f64>> {
    if grid.len() < 3 {
        return Err(Error::GridTooShort {
            min: 3,
            got: grid.len(),
        });
    }
    grid.iter()
        .map(|&x| {
            let av = a.value(x);
            if !(av > 0.0) {
                return Err(invalid(
                    "a",
                    format!("must be positive, got {av} at x = {x}"),
                ));
            }
            let res = 0.5 * av * av * a.d2(x) + a.d1(x) * phi.value(x) + (r - phi.d1(x)) * av;
            Ok(res)
        })
        .collect()
}

/// `d/dR` of the drift of `R = F(Y)`, `F(x) = ∫_c^x 1/a`, evaluated at level `x`:
/// `(φ' a - φ a') / a - ½ a a''`. Equals `r` whenever the coefficient ODE holds.
pub fn drift_slope_of_reduction<A: SmoothFn, P: SmoothFn>(a: &A, phi: &P, x: f64) -> f64 {
    let av = a.value(x);
    (phi.d1(x) * av - phi.value(x) * a.d1(x)) / av - 0.5 * av * a.d2(x)
}

/// Output of [`reduce_to_ou`].
#[derive(Debug, Clone)]
pub struct OuReduction {
    /// `R_k = F(Y_k)`.
    pub values: Vec<f64>,
    /// Mean of the analytic drift slope over the visited levels.
    pub slope_analytic: f64,
    /// OLS slope of `ΔR/dt` on `R`.
    pub slope_regression: f64,
    pub slope_regression_se: f64,
}

fn integrate_reciprocal<A: SmoothFn>(a: &A, lo: f64, hi: f64) -> Result<f64> {
    if lo == hi {
        return Ok(0.0);
    }
    let panels = ((hi - lo).abs() / PANEL_WIDTH).ceil().max(1.0) as usize;
    let width = (hi - lo) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let a0 = lo + k as f64 * width;
        let mut bad = None;
        let part = legendre(
            |y| {
                let av = a.value(y);
                if !(av > 0.0) || !av.is_finite() {
                    bad = Some(y);
                }
                1.0 / av
            },
            a0,
            a0 + width,
            STEP_NODES,
        );
        if let Some(y) = bad {
            return Err(Error::NonIntegrable(format!(
                "1/a is not integrable on [{lo}, {hi}]: a(y) not positive at y = {y}"
            )));
        }
        total += part;
    }
    if !total.is_finite() {
        return Err(Error::NonIntegrable(format!(
            "1/a integral diverges on [{lo}, {hi}]"
        )));
    }
    Ok(total)
}

/// Map a sampled path of `dY = a(Y) dB + φ(Y) dt` (uniform step `dt`) to
/// `R = F(Y)` with `F(x) = ∫_c^x 1/a`, and estimate the slope of the drift of
/// `R` both analytically and by regression on the transformed path.
pub fn reduce_to_ou<A: SmoothFn, P: SmoothFn>(
    a: &A,
    phi: &P,
    c: f64,
    path: &[f64],
    dt: f64,
) -> Result<OuReduction> {
    if path.len() < 3 {
        return Err(Error::GridTooShort {
            min: 3,
            got: path.len(),
        });
    }
    if !(dt > 0.0) {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    let mut values = Vec::with_capacity(path.len());
    let mut acc = integrate_reciprocal(a, c, path[0])?;
    values.push(acc);
    for w in path.windows(2) {
        acc += integrate_reciprocal(a, w[0], w[1])?;
        values.push(acc);
    }

    let slope_analytic = path
        .iter()
        .map(|&x| drift_slope_of_reduction(a, phi, x))
        .sum::<f64>()
        / path.len() as f64;

    let n = (values.len() - 1) as f64;
    let xs = &values[..values.len() - 1];
    let ys: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]) / dt).collect();
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let se = (sse / (n - 2.0) / sxx).sqrt();

    Ok(OuReduction {
        values,
        slope_analytic,
        slope_regression: slope,
        slope_regression_se: se,
    })
}
