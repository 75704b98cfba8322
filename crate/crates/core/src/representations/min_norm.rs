//! Minimal-norm representation of `α = f((g, ξ))`.
//!
//! The minimal-norm integrand is `c·g` with the scalar
//! `c = ∫ f(y) |g|^{-2} Δ_{y/|g|}((g,ξ)/|g|) dy`, where
//! `Δ_y(x) = e^{(x²-y²)/2}(Φ(x) - 1_{x>y})`. The same scalar comes out of the
//! Ornstein–Uhlenbeck route `∫_0^∞ D T_t α dt`; after `e^{-t} = sin θ` it reads
//! `c = ∫_0^{π/2} |g|^{-1} E[f((g,ξ) sin θ + |g| cos θ Z) Z] dθ`.

use std::cell::RefCell;
use std::f64::consts::FRAC_PI_2;

use crate::analytic::heat::gaussian_slope_moment;
use crate::analytic::quadrature::{integrate, QuadratureSpec};
use crate::analytic::special::delta_closed;
use crate::analytic::RealFunction;
use crate::error::{invalid, Result};
use crate::operator::StepFunction;
use crate::sim::{pairing, WhiteNoiseSample};

/// Half-width of the `y` range in units of `|g|`.
const Y_HALF_WIDTH: f64 = 12.0;

fn check_norm(g_norm: f64) -> Result<()> {
    if g_norm > 0.0 && g_norm.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("the direction must have positive norm, got {g_norm}")))
    }
}

/// The scalar `c` from the closed-form `Δ` kernel, given `(g, ξ)` and `|g|`.
pub fn min_norm_coefficient<F: RealFunction + ?Sized>(
    f: &F,
    pairing_value: f64,
    g_norm: f64,
    q: &QuadratureSpec,
) -> Result<f64> {
    check_norm(g_norm)?;
    let x = pairing_value / g_norm;
    let reach = Y_HALF_WIDTH * g_norm + pairing_value.abs();
    let mut breaks = f.breakpoints();
    breaks.push(pairing_value);
    let scale = 1.0 / (g_norm * g_norm);
    integrate(|y| f.eval(y) * scale * delta_closed(y / g_norm, x), -reach, reach, &breaks, q)
}

/// The scalar `c` by the Ornstein–Uhlenbeck time integral.
pub fn min_norm_coefficient_ou<F: RealFunction + ?Sized>(
    f: &F,
    pairing_value: f64,
    g_norm: f64,
    q: &QuadratureSpec,
) -> Result<f64> {
    check_norm(g_norm)?;
    let outer = q.with_tolerance(q.abs_tolerance().max(1e-10))?;
    let failure = RefCell::new(None);
    let value = integrate(
        |theta| {
            let (s, c) = theta.sin_cos();
            match gaussian_slope_moment(f, pairing_value * s, g_norm * c, q) {
                Ok(v) => v / g_norm,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        },
        0.0,
        FRAC_PI_2,
        &[],
        &outer,
    );
    match failure.into_inner() {
        Some(e) => Err(e),
        None => value,
    }
}

/// Coefficient of `g` in the minimal-norm integrand of `f((g, ξ))`.
pub fn min_norm_integrand_1d<F: RealFunction + ?Sized>(
    f: &F,
    g: &StepFunction,
    xi: &WhiteNoiseSample,
    q: &QuadratureSpec,
) -> Result<f64> {
    min_norm_coefficient(f, pairing(g, xi)?, g.norm(), q)
}

/// The same coefficient through the Ornstein–Uhlenbeck route.
pub fn min_norm_via_ou<F: RealFunction + ?Sized>(
    f: &F,
    g: &StepFunction,
    xi: &WhiteNoiseSample,
    q: &QuadratureSpec,
) -> Result<f64> {
    min_norm_coefficient_ou(f, pairing(g, xi)?, g.norm(), q)
}
