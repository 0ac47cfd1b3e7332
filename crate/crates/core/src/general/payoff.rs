use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::roots::solve_increasing_plain;

/// Points at which the growth envelope is required to be finite; the last three
/// must also be non-increasing.
const TAIL_POINTS: [f64; 5] = [10.0, 20.0, 40.0, 80.0, 160.0];
const MONOTONE_SPAN: f64 = 10.0;
const MONOTONE_POINTS: usize = 4001;
const INV_X_TOL: f64 = 1e-13;

/// A strictly increasing piecewise-linear function with linear extrapolation.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::LengthMismatch {
                expected: xs.len(),
                got: ys.len(),
            });
        }
        if xs.len() < 2 {
            return Err(Error::GridTooShort {
                min: 2,
                got: xs.len(),
            });
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::Parse(
                "payoff table contains a non-finite value".into(),
            ));
        }
        for w in xs.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Parse(format!(
                    "payoff table abscissae must be strictly increasing (at y = {})",
                    w[1]
                )));
            }
        }
        for (i, w) in ys.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::PayoffRejected {
                    at: xs[i + 1],
                    reason: "table values are not strictly increasing".into(),
                });
            }
        }
        Ok(Self { xs, ys })
    }

    /// Read a two-column CSV `y,f(y)` with a header row.
    pub fn from_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::Parse(format!(
                    "payoff table rows need 2 columns, found {}",
                    rec.len()
                )));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad number `{s}` in payoff table: {e}")))
            };
            xs.push(parse(&rec[0])?);
            ys.push(parse(&rec[1])?);
        }
        Self::new(xs, ys)
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.partition_point(|&v| v <= x) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let (x0, x1, y0, y1) = (self.xs[i], self.xs[i + 1], self.ys[i], self.ys[i + 1]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    pub fn inverse(&self, v: f64) -> f64 {
        let n = self.ys.len();
        let i = match self.ys.partition_point(|&w| w <= v) {
            0 => 0,
            j if j >= n => n - 2,
            j => j - 1,
        };
        let (x0, x1, y0, y1) = (self.xs[i], self.xs[i + 1], self.ys[i], self.ys[i + 1]);
        x0 + (x1 - x0) * (v - y0) / (y1 - y0)
    }
}

/// A user-supplied increasing function, optionally with its derivative.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The payoff map `Γ = f(η)`.
#[derive(Clone)]
pub enum PayoffKind {
    Identity,
    /// `intercept + slope * y` with `slope > 0`.
    Affine {
        intercept: f64,
        slope: f64,
    },
    /// `log(1 + e^y)`.
    Softplus,
    /// `y + c y³` with `c >= 0`.
    Cubic {
        c: f64,
    },
    Table(PiecewiseLinear),
    Custom {
        f: ScalarFn,
        f_prime: Option<ScalarFn>,
    },
}

impl fmt::Debug for PayoffKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PayoffKind::Identity => write!(f, "Identity"),
            PayoffKind::Affine { intercept, slope } => write!(f, "Affine({intercept}, {slope})"),
            PayoffKind::Softplus => write!(f, "Softplus"),
            PayoffKind::Cubic { c } => write!(f, "Cubic({c})"),
            PayoffKind::Table(t) => write!(f, "Table({} knots)", t.xs.len()),
            PayoffKind::Custom { f_prime, .. } => {
                write!(f, "Custom(derivative: {})", f_prime.is_some())
            }
        }
    }
}

/// A payoff function with its declared growth constants `|f(y)| ≤ K e^{k y²/4}`.
#[derive(Debug, Clone)]
pub struct PayoffSpec {
    pub kind: PayoffKind,
    pub growth_scale: f64,
    pub growth_exponent: f64,
}

impl PayoffSpec {
    pub fn new(kind: PayoffKind, growth_scale: f64, growth_exponent: f64) -> Self {
        Self {
            kind,
            growth_scale,
            growth_exponent,
        }
    }

    /// Built-in payoff with growth constants `K = 2`, `k = 0.1` (admissible for `r < 4.5`).
    pub fn builtin(kind: PayoffKind) -> Self {
        Self::new(kind, 2.0, 0.1)
    }

    pub fn with_growth(self, growth_scale: f64, growth_exponent: f64) -> Self {
        Self {
            growth_scale,
            growth_exponent,
            ..self
        }
    }

    pub fn identity() -> Self {
        Self::builtin(PayoffKind::Identity)
    }

    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::builtin(PayoffKind::Custom {
            f: Arc::new(f),
            f_prime: None,
        })
    }

    /// Parse `identity`, `affine:a,b`, `softplus`, `cubic:c` or `table:path`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (head, arg) = match spec.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (spec, None),
        };
        let nums = |a: Option<&str>, n: usize| -> Result<Vec<f64>> {
            let a =
                a.ok_or_else(|| Error::Parse(format!("payoff `{head}` needs {n} argument(s)")))?;
            let v = a
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("payoff `{spec}`: {e}")))?;
            if v.len() != n {
                return Err(Error::Parse(format!(
                    "payoff `{head}` needs {n} argument(s)"
                )));
            }
            Ok(v)
        };
        let kind = match head {
            "identity" if arg.is_none() => PayoffKind::Identity,
            "softplus" if arg.is_none() => PayoffKind::Softplus,
            "affine" => {
                let v = nums(arg, 2)?;
                if !(v[1] > 0.0) {
                    return Err(Error::Parse(format!(
                        "affine slope must be positive, got {}",
                        v[1]
                    )));
                }
                PayoffKind::Affine {
                    intercept: v[0],
                    slope: v[1],
                }
            }
            "cubic" => {
                let v = nums(arg, 1)?;
                if !(v[0] >= 0.0) {
                    return Err(Error::Parse(format!(
                        "cubic coefficient must be >= 0, got {}",
                        v[0]
                    )));
                }
                PayoffKind::Cubic { c: v[0] }
            }
            "table" => {
                let path = arg
                    .filter(|a| !a.is_empty())
                    .ok_or_else(|| Error::Parse("payoff `table` needs a CSV path".into()))?;
                PayoffKind::Table(PiecewiseLinear::from_csv(path)?)
            }
            _ => return Err(Error::Parse(format!("unknown payoff `{spec}`"))),
        };
        Ok(Self::builtin(kind))
    }

    #[inline]
    pub fn f(&self, y: f64) -> f64 {
        match &self.kind {
            PayoffKind::Identity => y,
            PayoffKind::Affine { intercept, slope } => intercept + slope * y,
            PayoffKind::Softplus => softplus(y),
            PayoffKind::Cubic { c } => y + c * y * y * y,
            PayoffKind::Table(t) => t.eval(y),
            PayoffKind::Custom { f, .. } => f(y),
        }
    }

    /// `f'(y)` where a closed form is known.
    pub fn f_prime(&self, y: f64) -> Option<f64> {
        match &self.kind {
            PayoffKind::Identity => Some(1.0),
            PayoffKind::Affine { slope, .. } => Some(*slope),
            PayoffKind::Softplus => Some(1.0 / (1.0 + (-y).exp())),
            PayoffKind::Cubic { c } => Some(1.0 + 3.0 * c * y * y),
            PayoffKind::Table(_) => None,
            PayoffKind::Custom { f_prime, .. } => f_prime.as_ref().map(|d| d(y)),
        }
    }

    pub fn has_derivative(&self) -> bool {
        self.f_prime(0.0).is_some()
    }

    /// `(slope, intercept)` when `f` is affine.
    pub fn affine_parts(&self) -> Option<(f64, f64)> {
        match &self.kind {
            PayoffKind::Identity => Some((1.0, 0.0)),
            PayoffKind::Affine { intercept, slope } => Some((*slope, *intercept)),
            PayoffKind::Cubic { c } if *c == 0.0 => Some((1.0, 0.0)),
            _ => None,
        }
    }

    /// Open range `(inf f, sup f)`.
    pub fn range(&self) -> (f64, f64) {
        match &self.kind {
            PayoffKind::Softplus => (0.0, f64::INFINITY),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// `f⁻¹(v)`; closed form where available, else bracketed root finding.
    pub fn f_inv(&self, v: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if !(v > lo && v < hi) {
            return Err(Error::Domain {
                what: "payoff inverse (value outside the range of f)",
                value: v,
            });
        }
        match &self.kind {
            PayoffKind::Identity => Ok(v),
            PayoffKind::Affine { intercept, slope } => Ok((v - intercept) / slope),
            PayoffKind::Softplus => Ok(v + (-(-v).exp_m1()).ln()),
            PayoffKind::Table(t) => Ok(t.inverse(v)),
            PayoffKind::Cubic { .. } | PayoffKind::Custom { .. } => {
                solve_increasing_plain(|y| self.f(y), v, 0.0, 1.0, INV_X_TOL)
            }
        }
    }
}

/// `log(1 + e^y)` without overflow.
pub fn softplus(y: f64) -> f64 {
    if y > 0.0 {
        y + (-y).exp().ln_1p()
    } else {
        y.exp().ln_1p()
    }
}

/// What [`validate_payoff`] found.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffDiagnostics {
    /// `sup |f(y)| e^{-k y²/4}` over the checked points.
    pub fitted_scale: f64,
    /// Whether the fitted constant exceeds the declared `K`.
    pub declared_scale_exceeded: bool,
    /// Smallest increment of `f` on the monotonicity grid.
    pub min_increment: f64,
}

/// Accept a payoff when its growth exponent is admissible for rate `r`, the
/// envelope `|f| e^{-k y²/4}` stays finite and eventually non-increasing, and
/// `f` is strictly increasing on a dense grid over `[-10, 10]`.
pub fn validate_payoff(spec: &PayoffSpec, r: f64) -> Result<PayoffDiagnostics> {
    if !(r > 0.0) {
        return Err(invalid("r", format!("rate must be positive, got {r}")));
    }
    let k = spec.growth_exponent;
    let bound = 1.0 / (1.0 + 2.0 * r);
    if !(k > 0.0 && k < bound) {
        return Err(Error::PayoffRejected {
            at: f64::NAN,
            reason: format!("growth exponent k = {k} must lie in (0, {bound})"),
        });
    }
    if !(spec.growth_scale > 0.0) {
        return Err(Error::PayoffRejected {
            at: f64::NAN,
            reason: format!("growth constant K = {} must be positive", spec.growth_scale),
        });
    }
    let envelope = |y: f64| spec.f(y).abs() * (-k * y * y / 4.0).exp();

    let mut fitted: f64 = 0.0;
    for side in [-1.0, 1.0] {
        let vals: Vec<(f64, f64)> = TAIL_POINTS
            .iter()
            .map(|&p| (side * p, envelope(side * p)))
            .collect();
        for &(y, e) in &vals {
            if !e.is_finite() {
                return Err(Error::PayoffRejected {
                    at: y,
                    reason: format!("growth envelope |f| e^(-k y^2/4) is not finite for k = {k}"),
                });
            }
            fitted = fitted.max(e);
        }
        for w in vals[2..].windows(2) {
            if w[1].1 > w[0].1 {
                return Err(Error::PayoffRejected {
                    at: w[1].0,
                    reason: format!("|f| grows faster than e^(k y^2/4) for k = {k}"),
                });
            }
        }
    }

    let step = 2.0 * MONOTONE_SPAN / (MONOTONE_POINTS - 1) as f64;
    let mut prev = spec.f(-MONOTONE_SPAN);
    let mut min_inc = f64::INFINITY;
    for i in 1..MONOTONE_POINTS {
        let y = -MONOTONE_SPAN + i as f64 * step;
        let val = spec.f(y);
        fitted = fitted.max(envelope(y));
        let inc = val - prev;
        if !(inc > 0.0) {
            return Err(Error::PayoffRejected {
                at: y,
                reason: "f is not strictly increasing".into(),
            });
        }
        min_inc = min_inc.min(inc);
        prev = val;
    }
    Ok(PayoffDiagnostics {
        fitted_scale: fitted,
        declared_scale_exceeded: fitted > spec.growth_scale,
        min_increment: min_inc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_accepted() {
        let d = validate_payoff(&PayoffSpec::new(PayoffKind::Identity, 2.0, 0.1), 1.0).unwrap();
        // sup |y| e^{-y²/40} = √20 e^{-1/2}
        assert!((d.fitted_scale - 20f64.sqrt() * (-0.5f64).exp()).abs() < 1e-3);
    }

    #[test]
    fn gaussian_growth_rejected() {
        for &k in &[0.05, 0.2, 0.3] {
            let spec = PayoffSpec::new(
                PayoffKind::Custom {
                    f: Arc::new(|y: f64| (y * y).exp()),
                    f_prime: None,
                },
                2.0,
                k,
            );
            let err = validate_payoff(&spec, 1.0).unwrap_err();
            assert!(matches!(err, Error::PayoffRejected { .. }), "{err}");
            assert!(err.to_string().contains("e^(k y^2/4)") || err.to_string().contains("finite"));
        }
    }

    #[test]
    fn decreasing_rejected() {
        let err = validate_payoff(&PayoffSpec::custom(|y| -y), 1.0).unwrap_err();
        assert!(err.to_string().contains("not strictly increasing"), "{err}");
    }

    #[test]
    fn inadmissible_exponent_rejected() {
        let spec = PayoffSpec::new(PayoffKind::Identity, 2.0, 0.4);
        assert!(validate_payoff(&spec, 1.0).is_err());
        assert!(validate_payoff(&spec, 0.75).is_err());
        assert!(validate_payoff(&PayoffSpec::new(PayoffKind::Identity, 2.0, 0.4), 0.2).is_ok());
    }

    #[test]
    fn builtins_accepted_and_invertible() {
        for spec in [
            PayoffSpec::identity(),
            PayoffSpec::parse("affine:1.5,0.5").unwrap(),
            PayoffSpec::parse("softplus").unwrap(),
            PayoffSpec::parse("cubic:0.2").unwrap(),
        ] {
            validate_payoff(&spec, 1.0).unwrap();
            for &y in &[-3.0, -0.2, 0.0, 1.4, 4.0] {
                let back = spec.f_inv(spec.f(y)).unwrap();
                assert!((back - y).abs() < 1e-9, "{:?} y={y}", spec.kind);
                if let Some(d) = spec.f_prime(y) {
                    let fd = crate::deriv::central_d1(|x| spec.f(x), y);
                    assert!((d - fd).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn softplus_range_enforced() {
        let s = PayoffSpec::parse("softplus").unwrap();
        assert!(s.f_inv(0.0).is_err());
        assert!(s.f_inv(-1.0).is_err());
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!(softplus(-800.0) >= 0.0);
    }

    #[test]
    fn parse_errors() {
        for bad in [
            "",
            "bogus",
            "affine:1",
            "affine:1,-2",
            "cubic:-1",
            "identity:3",
            "table:",
        ] {
            assert!(PayoffSpec::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn table_payoff() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        std::fs::write(&path, "y,f\n-1,-2\n0,0\n2,1\n").unwrap();
        let spec = PayoffSpec::parse(&format!("table:{}", path.display())).unwrap();
        assert_eq!(spec.f(0.5), 0.25);
        assert_eq!(spec.f(-2.0), -4.0);
        assert_eq!(spec.f(4.0), 2.0);
        assert_eq!(spec.f_inv(0.25).unwrap(), 0.5);
        assert_eq!(spec.f_inv(-4.0).unwrap(), -2.0);
        assert!(spec.f_prime(0.0).is_none());
        validate_payoff(&spec, 1.0).unwrap();

        std::fs::write(&path, "y,f\n0,0\n1,0\n").unwrap();
        assert!(PayoffSpec::parse(&format!("table:{}", path.display())).is_err());
        std::fs::write(&path, "y,f\n0,0\n0,1\n").unwrap();
        assert!(PayoffSpec::parse(&format!("table:{}", path.display())).is_err());
    }
}
