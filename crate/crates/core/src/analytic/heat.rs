//! Heat-semigroup derivatives and the quadrature form of the Δ function.

use std::f64::consts::PI;

use super::functions::RealFunction;
use super::quadrature::{integrate, LegendreRule, NormalExpectationRule, QuadratureScheme, QuadratureSpec};
use super::special::density;
use crate::error::{invalid, Result};

/// Half-width, in standard deviations, of every truncated Gaussian integral.
pub const GAUSSIAN_HALF_WIDTH: f64 = 10.0;

/// `∫ f(a + b z) z φ(z) dz` over `z ∈ [-10, 10]`, split where `a + b z` crosses a breakpoint of `f`.
pub(crate) fn gaussian_slope_moment<F: RealFunction + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
    q: &QuadratureSpec,
) -> Result<f64> {
    let breaks: Vec<f64> = if b != 0.0 {
        f.breakpoints().into_iter().map(|k| (k - a) / b).collect()
    } else {
        Vec::new()
    };
    integrate(
        |z| f.eval(a + b * z) * z * density(1.0, z),
        -GAUSSIAN_HALF_WIDTH,
        GAUSSIAN_HALF_WIDTH,
        &breaks,
        q,
    )
}

/// `∂_x P_s f(x) = ∫ f(y) ∂_x p_s(x - y) dy`, by quadrature over `y ∈ [x - 10√s, x + 10√s]`.
pub fn heat_semigroup_dx<F: RealFunction + ?Sized>(f: &F, s: f64, x: f64, q: &QuadratureSpec) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(invalid(format!("heat time must lie in (0, 1], got {s}")));
    }
    let root = s.sqrt();
    Ok(gaussian_slope_moment(f, x, root, q)? / root)
}

/// Quadrature evaluation of Δ_y(x) from its Ornstein-Uhlenbeck time integral,
/// after the substitution `u = e^{-t}`:
/// `(2π)^{-1/2} ∫_0^1 (y - u x)(1 - u²)^{-3/2} exp(-(y - u x)² / (2(1 - u²))) du`.
pub fn delta_numeric(y: f64, x: f64, q: &QuadratureSpec) -> Result<f64> {
    if (x - y).abs() <= 1e-4 || (x + y).abs() <= 1e-4 {
        return Err(invalid(format!("delta_numeric excludes y = ±x, got y = {y}, x = {x}")));
    }
    let scale = 1.0 / (2.0 * PI).sqrt();
    let integrand = |u: f64| {
        let one_minus = (1.0 - u) * (1.0 + u);
        if one_minus <= 0.0 {
            return 0.0;
        }
        let d = y - u * x;
        let expo = -d * d / (2.0 * one_minus);
        if expo < -745.0 {
            return 0.0;
        }
        scale * d * expo.exp() / (one_minus * one_minus.sqrt())
    };
    // The mass concentrates near u = 1 when |y - x| is small; tanh-sinh
    // clusters nodes there, the other schemes get a breakpoint instead.
    let knee = (1.0 - (y - x).powi(2)).clamp(0.5, 1.0 - 1e-12);
    let breaks = match q.scheme() {
        QuadratureScheme::Substitution => vec![],
        _ => vec![knee],
    };
    integrate(integrand, 0.0, 1.0, &breaks, q)
}

/// Fixed-cost evaluator of `∂_x P_s f(x)` for Monte Carlo inner loops.
///
/// Smooth functions use a Gauss-Hermite rule; functions with breakpoints use
/// composite Gauss-Legendre panels split at the breakpoints.
#[derive(Debug, Clone)]
pub struct HeatDerivativeRule {
    hermite: NormalExpectationRule,
    legendre: LegendreRule,
    panel_width: f64,
}

impl Default for HeatDerivativeRule {
    fn default() -> Self {
        Self { hermite: NormalExpectationRule::new(48), legendre: LegendreRule::new(12), panel_width: 2.5 }
    }
}

impl HeatDerivativeRule {
    pub fn eval<F: RealFunction + ?Sized>(&self, f: &F, s: f64, x: f64) -> f64 {
        let root = s.sqrt();
        let breaks = f.breakpoints();
        if breaks.is_empty() {
            return self.hermite.expect(|z| f.eval(x + root * z) * z) / root;
        }
        let mut edges = vec![-GAUSSIAN_HALF_WIDTH, GAUSSIAN_HALF_WIDTH];
        edges.extend(
            breaks
                .iter()
                .map(|k| (k - x) / root)
                .filter(|z| z.abs() < GAUSSIAN_HALF_WIDTH),
        );
        edges.sort_by(f64::total_cmp);
        let mut total = 0.0;
        for w in edges.windows(2) {
            let len = w[1] - w[0];
            if len <= 0.0 {
                continue;
            }
            let panels = (len / self.panel_width).ceil().max(1.0) as usize;
            total += self.legendre.composite(&|z: f64| f.eval(x + root * z) * z * density(1.0, z), w[0], w[1], panels);
        }
        total / root
    }
}
