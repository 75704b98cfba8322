//! Real functions handed to the quadrature-based representations.

/// A real function together with the points where it fails to be smooth.
///
/// Quadrature routines split their ranges at the breakpoints, so a step
/// function is integrated exactly up to rounding.
pub trait RealFunction: Sync {
    fn eval(&self, v: f64) -> f64;

    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// The functions used throughout the verification suites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    Identity,
    Square,
    Constant(f64),
    /// `1_{v > level}`.
    StepAbove(f64),
}

impl TestFunction {
    pub fn label(&self) -> String {
        match self {
            TestFunction::Identity => "id".to_string(),
            TestFunction::Square => "square".to_string(),
            TestFunction::Constant(c) => format!("const({c})"),
            TestFunction::StepAbove(u) => format!("step_above({u})"),
        }
    }

    /// `E f(Z)` for `Z ~ N(0, var)`, in closed form.
    pub fn gaussian_mean(&self, var: f64) -> f64 {
        match *self {
            TestFunction::Identity => 0.0,
            TestFunction::Square => var,
            TestFunction::Constant(c) => c,
            TestFunction::StepAbove(u) => crate::analytic::special::normal_sf(u / var.sqrt()),
        }
    }
}

impl RealFunction for TestFunction {
    fn eval(&self, v: f64) -> f64 {
        match *self {
            TestFunction::Identity => v,
            TestFunction::Square => v * v,
            TestFunction::Constant(c) => c,
            TestFunction::StepAbove(u) => {
                if v > u {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match *self {
            TestFunction::StepAbove(u) => vec![u],
            _ => Vec::new(),
        }
    }
}

/// Wraps a closure, optionally with its breakpoints.
pub struct FnFunction<F> {
    f: F,
    breaks: Vec<f64>,
}

impl<F: Fn(f64) -> f64 + Sync> FnFunction<F> {
    pub fn new(f: F) -> Self {
        Self { f, breaks: Vec::new() }
    }

    pub fn with_breakpoints(f: F, breaks: Vec<f64>) -> Self {
        Self { f, breaks }
    }
}

impl<F: Fn(f64) -> f64 + Sync> RealFunction for FnFunction<F> {
    fn eval(&self, v: f64) -> f64 {
        (self.f)(v)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breaks.clone()
    }
}
