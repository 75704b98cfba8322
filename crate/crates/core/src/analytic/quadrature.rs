//! One-dimensional quadrature used by every deterministic oracle.
//!
//! Three schemes are offered: a doubling midpoint rule, composite
//! Gauss-Legendre with panel doubling, and tanh-sinh for integrands with
//! endpoint singularities. All split the range at caller-supplied breakpoints.

use std::f64::consts::FRAC_PI_2;
use std::num::NonZeroUsize;

use gauss_quad::hermite::GaussHermite;
use gauss_quad::legendre::GaussLegendre;

use crate::error::{invalid, LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureScheme {
    Midpoint,
    GaussHermiteLike,
    Substitution,
}

/// Configuration for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    node_count: usize,
    scheme: QuadratureScheme,
    abs_tolerance: f64,
}

impl QuadratureSpec {
    pub fn new(node_count: usize, scheme: QuadratureScheme, abs_tolerance: f64) -> Result<Self> {
        if node_count < 2 {
            return Err(invalid(format!("node_count must be at least 2, got {node_count}")));
        }
        if !(abs_tolerance > 0.0) || !abs_tolerance.is_finite() {
            return Err(invalid(format!("abs_tolerance must be positive, got {abs_tolerance}")));
        }
        Ok(Self { node_count, scheme, abs_tolerance })
    }

    /// Tight Gauss-Legendre settings suitable for smooth pieces.
    pub fn precise() -> Self {
        Self { node_count: 16, scheme: QuadratureScheme::GaussHermiteLike, abs_tolerance: 1e-12 }
    }

    /// Tanh-sinh settings for integrands with endpoint singularities.
    pub fn endpoint_singular() -> Self {
        Self { node_count: 8, scheme: QuadratureScheme::Substitution, abs_tolerance: 1e-11 }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn scheme(&self) -> QuadratureScheme {
        self.scheme
    }

    pub fn abs_tolerance(&self) -> f64 {
        self.abs_tolerance
    }

    pub fn with_tolerance(self, abs_tolerance: f64) -> Result<Self> {
        Self::new(self.node_count, self.scheme, abs_tolerance)
    }
}

const MAX_MIDPOINT_CELLS: usize = 1 << 22;
const MAX_LEGENDRE_PANELS: usize = 1 << 14;
const MAX_TANH_SINH_LEVEL: usize = 12;

/// Integrates `f` over `[a, b]`, splitting at every breakpoint strictly inside.
///
/// The tolerance is shared evenly between the pieces.
pub fn integrate<F>(f: F, a: f64, b: f64, breakpoints: &[f64], spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !a.is_finite() || !b.is_finite() {
        return Err(invalid(format!("integration bounds must be finite, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return integrate(f, b, a, breakpoints, spec).map(|v| -v);
    }
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&c| c > a && c < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);
    let pieces = edges.len() - 1;
    let tol = spec.abs_tolerance / pieces as f64;
    let mut total = 0.0;
    for w in edges.windows(2) {
        total += match spec.scheme {
            QuadratureScheme::Midpoint => midpoint(&f, w[0], w[1], spec.node_count, tol)?,
            QuadratureScheme::GaussHermiteLike => legendre(&f, w[0], w[1], spec.node_count, tol)?,
            QuadratureScheme::Substitution => tanh_sinh(&f, w[0], w[1], tol)?,
        };
    }
    Ok(total)
}

fn failure(context: &str, achieved: f64, tolerance: f64) -> LabError {
    LabError::Quadrature { context: context.to_string(), achieved, tolerance }
}

fn midpoint<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, start: usize, tol: f64) -> Result<f64> {
    let sum = |cells: usize| {
        let h = (b - a) / cells as f64;
        (0..cells).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
    };
    let mut cells = start;
    let mut prev = sum(cells);
    loop {
        cells *= 2;
        let cur = sum(cells);
        // Richardson estimate of the error of the finer sum.
        let err = (cur - prev).abs() / 3.0;
        if err <= tol {
            return Ok(cur + (cur - prev) / 3.0);
        }
        if cells >= MAX_MIDPOINT_CELLS {
            return Err(failure("midpoint", err, tol));
        }
        prev = cur;
    }
}

fn legendre<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, nodes: usize, tol: f64) -> Result<f64> {
    let rule = LegendreRule::new(nodes);
    let mut panels = 1;
    let mut prev = rule.composite(f, a, b, panels);
    loop {
        panels *= 2;
        let cur = rule.composite(f, a, b, panels);
        let err = (cur - prev).abs();
        if err <= tol {
            return Ok(cur);
        }
        if panels >= MAX_LEGENDRE_PANELS {
            return Err(failure("composite Gauss-Legendre", err, tol));
        }
        prev = cur;
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct LegendreRule {
    pairs: Vec<(f64, f64)>,
}

impl LegendreRule {
    pub fn new(nodes: usize) -> Self {
        let n = NonZeroUsize::new(nodes.max(1)).expect("nonzero");
        let pairs = GaussLegendre::new(n).as_node_weight_pairs().to_vec();
        Self { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (half, mid) = (0.5 * (b - a), 0.5 * (a + b));
        self.pairs.iter().map(move |&(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    pub fn composite<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + p as f64 * h;
                self.integrate(f, lo, lo + h)
            })
            .sum()
    }
}

/// Probabilists' Gauss-Hermite rule: `Σ w_i g(x_i) ≈ E g(Z)` for standard normal `Z`.
#[derive(Debug, Clone)]
pub struct NormalExpectationRule {
    pairs: Vec<(f64, f64)>,
}

impl NormalExpectationRule {
    pub fn new(nodes: usize) -> Self {
        let n = NonZeroUsize::new(nodes.max(1)).expect("nonzero");
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let pairs = GaussHermite::new(n)
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (std::f64::consts::SQRT_2 * x, w / sqrt_pi))
            .collect();
        Self { pairs }
    }

    pub fn expect<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.pairs.iter().map(|&(x, w)| w * g(x)).sum()
    }
}

/// Tanh-sinh on `[a, b]`, evaluating abscissae by their distance to the nearer
/// endpoint so that singular endpoints are never hit.
fn tanh_sinh<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let half = 0.5 * (b - a);
    let centre = 0.5 * (a + b);
    // Contribution of abscissa t (and its mirror) to the sum, without the step.
    let pair = |t: f64| -> Option<f64> {
        let u = FRAC_PI_2 * t.sinh();
        let e2u = (2.0 * u).exp();
        if !e2u.is_finite() {
            return None;
        }
        // Distance of the abscissa from the endpoint, scaled to [-1, 1].
        let dist = 2.0 / (e2u + 1.0);
        let cosh_u = u.cosh();
        let weight = FRAC_PI_2 * t.cosh() / (cosh_u * cosh_u);
        let offset = half * dist;
        if offset <= 0.0 || weight == 0.0 {
            return None;
        }
        if t == 0.0 {
            return Some(weight * f(centre));
        }
        // Abscissae that round onto an endpoint carry negligible weight; drop them
        // one side at a time so a singular endpoint keeps its nodes.
        let left = a + offset;
        let right = b - offset;
        let mut v = 0.0;
        let mut any = false;
        if left > a {
            v += f(left);
            any = true;
        }
        if right < b {
            v += f(right);
            any = true;
        }
        any.then_some(weight * v)
    };
    let t_max = 6.5;
    let mut h = 0.5;
    let mut sum = 0.0;
    let mut k = 0usize;
    loop {
        let t = k as f64 * h;
        if t > t_max {
            break;
        }
        match pair(t) {
            Some(v) => sum += v,
            None => break,
        }
        k += 1;
    }
    let mut prev = half * h * sum;
    let mut last_err = f64::INFINITY;
    for _level in 1..=MAX_TANH_SINH_LEVEL {
        h *= 0.5;
        // Only the new (odd) abscissae are added at each refinement.
        let mut k = 1usize;
        loop {
            let t = k as f64 * h;
            if t > t_max {
                break;
            }
            match pair(t) {
                Some(v) => sum += v,
                None => break,
            }
            k += 2;
        }
        let cur = half * h * sum;
        let err = (cur - prev).abs();
        last_err = err;
        if !cur.is_finite() {
            return Err(failure("tanh-sinh produced a non-finite value", f64::INFINITY, tol));
        }
        if err <= tol {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(failure("tanh-sinh", last_err, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::special::density;

    fn spec(scheme: QuadratureScheme) -> QuadratureSpec {
        QuadratureSpec::new(8, scheme, 1e-10).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::new(1, QuadratureScheme::Midpoint, 1e-6).is_err());
        assert!(QuadratureSpec::new(4, QuadratureScheme::Midpoint, 0.0).is_err());
        assert!(QuadratureSpec::new(4, QuadratureScheme::Midpoint, f64::NAN).is_err());
        assert!(QuadratureSpec::new(2, QuadratureScheme::Substitution, 1e-3).is_ok());
    }

    #[test]
    fn all_schemes_integrate_polynomials_and_exponentials() {
        for scheme in [QuadratureScheme::Midpoint, QuadratureScheme::GaussHermiteLike, QuadratureScheme::Substitution] {
            let s = spec(scheme);
            let cubic = integrate(|x| x * x * x - x, -1.0, 2.0, &[], &s).unwrap();
            assert!((cubic - 2.25).abs() < 1e-8, "{scheme:?}: {cubic}");
            let e = integrate(f64::exp, 0.0, 1.0, &[0.3], &s).unwrap();
            assert!((e - (std::f64::consts::E - 1.0)).abs() < 1e-8, "{scheme:?}");
        }
    }

    #[test]
    fn breakpoints_handle_jumps() {
        let s = spec(QuadratureScheme::GaussHermiteLike);
        let step = |x: f64| if x > 0.37 { 1.0 } else { 0.0 };
        let v = integrate(step, 0.0, 1.0, &[0.37], &s).unwrap();
        assert!((v - 0.63).abs() < 1e-12);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let s = spec(QuadratureScheme::GaussHermiteLike);
        let a = integrate(|x| x, 0.0, 1.0, &[], &s).unwrap();
        let b = integrate(|x| x, 1.0, 0.0, &[], &s).unwrap();
        assert!((a + b).abs() < 1e-14);
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularities() {
        let s = QuadratureSpec::endpoint_singular();
        let v = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, &[], &s).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
        let w = integrate(|x| x.powf(-0.75), 0.0, 1.0, &[], &s).unwrap();
        assert!((w - 4.0).abs() < 1e-7, "{w}");
        // A singularity at a nonzero endpoint loses the mass closer than one ulp.
        let loose = s.with_tolerance(1e-6).unwrap();
        let r = integrate(|x| 1.0 / (1.0 - x).sqrt(), 0.0, 1.0, &[], &loose).unwrap();
        assert!((r - 2.0).abs() < 1e-6, "{r}");
    }

    #[test]
    fn density_normalizes() {
        let s = QuadratureSpec::precise();
        for &var in &[0.01, 0.25, 1.0, 3.0] {
            let r = 12.0 * f64::sqrt(var);
            let mass = integrate(|x| density(var, x), -r, r, &[0.0], &s).unwrap();
            assert!((mass - 1.0).abs() < 1e-10, "var={var}");
        }
    }

    #[test]
    fn normal_expectation_rule_moments() {
        let rule = NormalExpectationRule::new(40);
        assert!((rule.expect(|_| 1.0) - 1.0).abs() < 1e-13);
        assert!((rule.expect(|x| x * x) - 1.0).abs() < 1e-12);
        assert!((rule.expect(|x| x.powi(4)) - 3.0).abs() < 1e-11);
        assert!((rule.expect(|x| x.powi(6)) - 15.0).abs() < 1e-9);
    }

    #[test]
    fn non_convergence_is_reported() {
        let s = QuadratureSpec::new(2, QuadratureScheme::GaussHermiteLike, 1e-15).unwrap();
        let err = integrate(|x| (1.0 / x).sin(), 1e-9, 1.0, &[], &s).unwrap_err();
        assert!(matches!(err, LabError::Quadrature { .. }));
    }
}
