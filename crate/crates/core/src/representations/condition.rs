//! Integrability condition behind the integrator local-time representation:
//! `∫_0^t ∫_r^t ∫_r^t r³ / (σ²(u)σ²(v) - σ⁴(r))^{3/2} du dv dr < ∞`.

use crate::error::{invalid, LabError, Result};
use crate::operator::IntegratorOperator;

/// Points per axis of the direct triple sum used when the slope route fails.
const FALLBACK_POINTS: usize = 64;

/// How [`condition20_check`] established finiteness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConditionRoute {
    /// `σ²' ≥ f` with `f` nondecreasing, and `∫ (r/f(r))^{3/2} dr` finite.
    SlopeBound,
    /// Direct coarse triple sum away from the diagonal.
    DirectSum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    pub value: f64,
    pub route: ConditionRoute,
}

/// Checks the integrability condition on `[0, t]`.
///
/// The slope route takes `f_j = min_{m ≥ j} (σ²_{m+1} - σ²_m)/mesh`, the largest
/// nondecreasing minorant of the finite-difference slope, and sums
/// `mesh · (r/f)^{3/2}` at cell midpoints. A vanishing slope sends the check to
/// the direct sum; a vanishing denominator there is reported as
/// [`LabError::Hypothesis`].
pub fn condition20_check(op: &IntegratorOperator, t: f64) -> Result<ConditionReport> {
    let grid = op.grid();
    let j_end = grid.index_of(t)?;
    if j_end == 0 {
        return Ok(ConditionReport { value: 0.0, route: ConditionRoute::SlopeBound });
    }
    if !op.sigma_sq_nondecreasing_to(j_end) {
        return Err(LabError::Hypothesis(format!("σ² of '{}' decreases before t = {t}", op.name())));
    }
    let s = &op.sigma_sq()[..=j_end];
    let mesh = grid.mesh();
    let mut tail_min = vec![0.0; j_end];
    let mut running = f64::INFINITY;
    for j in (0..j_end).rev() {
        running = running.min((s[j + 1] - s[j]) / mesh);
        tail_min[j] = running;
    }
    if tail_min.iter().all(|&f| f > 0.0) {
        let value = tail_min
            .iter()
            .enumerate()
            .map(|(j, f)| mesh * ((j as f64 + 0.5) * mesh / f).powf(1.5))
            .sum();
        return Ok(ConditionReport { value, route: ConditionRoute::SlopeBound });
    }
    direct_sum(op, j_end).map(|value| ConditionReport { value, route: ConditionRoute::DirectSum })
}

fn direct_sum(op: &IntegratorOperator, j_end: usize) -> Result<f64> {
    let stride = (j_end / FALLBACK_POINTS).max(1);
    let idx: Vec<usize> = (1..=j_end).step_by(stride).collect();
    let s = op.sigma_sq();
    let h = stride as f64 * op.grid().mesh();
    let mut total = 0.0;
    for (a, &r) in idx.iter().enumerate() {
        let rt = op.grid().time(r);
        let s_r = s[r];
        for &u in &idx[a + 1..] {
            for &v in &idx[a + 1..] {
                let den = s[u] * s[v] - s_r * s_r;
                if !(den > 0.0) {
                    return Err(LabError::Hypothesis(format!(
                        "σ²(u)σ²(v) = σ⁴(r) at r = {rt}, u = {}, v = {}; the condition integral may diverge",
                        op.grid().time(u),
                        op.grid().time(v)
                    )));
                }
                total += h * h * h * rt.powi(3) / den.powf(1.5);
            }
        }
    }
    if !total.is_finite() {
        return Err(invalid("condition sum overflowed"));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{make_bridge_op, make_fbm_op, make_identity_op, Grid};
    use nalgebra::DMatrix;

    #[test]
    fn wiener_gives_two_fifths() {
        let op = make_identity_op(Grid::new(1024).unwrap());
        let r = condition20_check(&op, 1.0).unwrap();
        assert_eq!(r.route, ConditionRoute::SlopeBound);
        assert!((r.value - 0.4).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn fbm_passes_with_slope_bound() {
        let op = make_fbm_op(Grid::new(256).unwrap(), 0.75).unwrap();
        let r = condition20_check(&op, 1.0).unwrap();
        assert_eq!(r.route, ConditionRoute::SlopeBound);
        // ∫ (r / 1.5 r^{1/2})^{3/2} dr = 1.5^{-3/2} / 1.75, and the tail minimum
        // of the secant slopes can only be smaller than the derivative.
        let exact = 1.5f64.powf(-1.5) / 1.75;
        assert!(r.value >= exact * 0.99 && r.value < exact * 1.2, "{} vs {exact}", r.value);
    }

    #[test]
    fn bridge_only_on_the_rising_half() {
        let op = make_bridge_op(Grid::new(64).unwrap());
        assert!(condition20_check(&op, 0.5).is_ok());
        assert!(matches!(condition20_check(&op, 1.0), Err(LabError::Hypothesis(_))));
    }

    #[test]
    fn flat_variance_is_divergence_suspicion() {
        // Cells 8..16 carry no noise, so σ² is flat on [1/4, 1/2].
        let n = 32;
        let g = Grid::new(n).unwrap();
        let mut m = DMatrix::<f64>::identity(n, n);
        for k in 8..16 {
            m[(k, k)] = 0.0;
        }
        let op = IntegratorOperator::from_matrix("flat", g, None, m).unwrap();
        assert!(matches!(condition20_check(&op, 1.0), Err(LabError::Hypothesis(_))));
        // Before the flat stretch the slope route still applies.
        assert_eq!(condition20_check(&op, 0.25).unwrap().route, ConditionRoute::SlopeBound);
    }

    #[test]
    fn slow_start_uses_direct_sum() {
        // A zero slope in the first cell only: the minorant vanishes there, the
        // direct sum does not see a zero denominator.
        let n = 16;
        let g = Grid::new(n).unwrap();
        let mut m = DMatrix::<f64>::identity(n, n);
        m[(0, 0)] = 0.0;
        let op = IntegratorOperator::from_matrix("late", g, None, m).unwrap();
        let r = condition20_check(&op, 1.0).unwrap();
        assert_eq!(r.route, ConditionRoute::DirectSum);
        assert!(r.value.is_finite() && r.value > 0.0);
    }
}
