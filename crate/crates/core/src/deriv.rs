//! Fourth-order central differences and a small trait for functions that may
//! know their own derivatives.

/// Step for first derivatives.
pub fn step_d1(x: f64) -> f64 {
    (1e-7 * x.abs()).max(1e-5)
}

/// Step for second derivatives. Larger than [`step_d1`]: the second-difference
/// stencil divides rounding noise by `h^2`.
pub fn step_d2(x: f64) -> f64 {
    1e-3 * x.abs().max(1.0)
}

pub fn central_d1<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    central_d1_with(f, x, step_d1(x))
}

pub fn central_d1_with<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

pub fn central_d2<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    central_d2_with(f, x, step_d2(x))
}

pub fn central_d2_with<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h))
        / (12.0 * h * h)
}

/// A scalar function of one variable with first and second derivatives.
/// Defaults fall back to [`central_d1`] / [`central_d2`].
pub trait SmoothFn {
    fn value(&self, x: f64) -> f64;

    fn d1(&self, x: f64) -> f64 {
        central_d1(|y| self.value(y), x)
    }

    fn d2(&self, x: f64) -> f64 {
        central_d2(|y| self.value(y), x)
    }
}

/// `slope * x + intercept`, with exact derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub slope: f64,
    pub intercept: f64,
}

impl Affine {
    pub fn new(slope: f64, intercept: f64) -> Self {
        Self { slope, intercept }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(0.0, c)
    }
}

impl SmoothFn for Affine {
    fn value(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
    fn d1(&self, _x: f64) -> f64 {
        self.slope
    }
    fn d2(&self, _x: f64) -> f64 {
        0.0
    }
}

/// A closure whose derivatives are taken numerically.
pub struct Numeric<F>(pub F);

impl<F: Fn(f64) -> f64> SmoothFn for Numeric<F> {
    fn value(&self, x: f64) -> f64 {
        (self.0)(x)
    }
}

/// A closure bundled with closed-form first and second derivatives.
pub struct Analytic<F, D1, D2> {
    pub f: F,
    pub d1: D1,
    pub d2: D2,
}

impl<F, D1, D2> SmoothFn for Analytic<F, D1, D2>
where
    F: Fn(f64) -> f64,
    D1: Fn(f64) -> f64,
    D2: Fn(f64) -> f64,
{
    fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }
    fn d1(&self, x: f64) -> f64 {
        (self.d1)(x)
    }
    fn d2(&self, x: f64) -> f64 {
        (self.d2)(x)
    }
}
