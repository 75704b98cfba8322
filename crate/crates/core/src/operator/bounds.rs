//! Empirical and analytic bounds on integrator constants.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::grid::Grid;
use super::integrator::{power_norm, IntegratorOperator};
use crate::analytic::quadrature::{integrate, QuadratureSpec};
use crate::error::{invalid, Result};

/// Largest observed `E(Σ a_k Δx_k)² / Σ a_k² Δt_k` over random partitions of the
/// grid and random coefficients. The numerator is computed exactly as
/// `‖A·Σ a_k 1_[t_k, t_{k+1})‖²`, so this is a lower bound on the best constant.
pub fn integrator_ratio(op: &IntegratorOperator, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(invalid("integrator_ratio needs at least one trial"));
    }
    let n = op.grid().n_steps();
    let h = op.grid().mesh();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    let mut cells = vec![0.0; n];
    for _ in 0..trials {
        let pieces = rng.random_range(1..=n.min(16));
        let mut cuts: Vec<usize> = Vec::with_capacity(pieces + 1);
        cuts.push(0);
        while cuts.len() < pieces {
            let c = rng.random_range(1..n);
            if !cuts.contains(&c) {
                cuts.push(c);
            }
        }
        cuts.push(n);
        cuts.sort_unstable();
        let mut denom = 0.0;
        for w in cuts.windows(2) {
            let a: f64 = rng.sample(StandardNormal);
            cells[w[0]..w[1]].iter_mut().for_each(|v| *v = a);
            denom += a * a * (w[1] - w[0]) as f64 * h;
        }
        if denom == 0.0 {
            continue;
        }
        let image = op.apply_values(&cells);
        let numer = h * image.iter().map(|v| v * v).sum::<f64>();
        best = best.max(numer / denom);
    }
    Ok(best)
}

/// Schur test bound `√(αβ)` on the norm of the integral operator with kernel `k`,
/// where `α = max_s ∫k(s,·)q / p(s)` and `β = max_s ∫k(·,s)p / q(s)` over cell midpoints.
///
/// The integrals are split at the grid points and at `s`, and use tanh-sinh so
/// that integrable singularities on the diagonal are handled.
pub fn schur_bound(
    kernel: impl Fn(f64, f64) -> f64,
    p: impl Fn(f64) -> f64,
    q: impl Fn(f64) -> f64,
    grid: Grid,
) -> Result<f64> {
    let n = grid.n_steps();
    let h = grid.mesh();
    let spec = QuadratureSpec::endpoint_singular().with_tolerance(1e-8)?;
    let mut alpha: f64 = 0.0;
    let mut beta: f64 = 0.0;
    for i in 0..n {
        let s = (i as f64 + 0.5) * h;
        let (ps, qs) = (p(s), q(s));
        if !(ps > 0.0) || !(qs > 0.0) {
            return Err(invalid(format!("Schur weights must be positive, got p = {ps}, q = {qs} at {s}")));
        }
        let mut breaks = grid.times();
        breaks.push(s);
        let row = integrate(|t| guard(kernel(s, t)) * q(t), 0.0, 1.0, &breaks, &spec)?;
        let col = integrate(|t| guard(kernel(t, s)) * p(t), 0.0, 1.0, &breaks, &spec)?;
        if row < 0.0 || col < 0.0 {
            return Err(invalid("Schur test needs a nonnegative kernel"));
        }
        alpha = alpha.max(row / ps);
        beta = beta.max(col / qs);
    }
    Ok((alpha * beta).sqrt())
}

/// A singular kernel evaluated exactly on its singularity contributes nothing
/// at a single node.
fn guard(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// Power-iteration estimate of the largest singular value; nondecreasing in `iterations`.
pub fn op_norm_estimate(op: &IntegratorOperator, iterations: usize) -> Result<f64> {
    if iterations < 10 {
        return Err(invalid(format!("op_norm_estimate needs at least 10 iterations, got {iterations}")));
    }
    let n = op.grid().n_steps();
    let apply = |v: &DVector<f64>| {
        let mv = op.apply_values(v.as_slice());
        DVector::from_vec(op.apply_transpose_values(&mv))
    };
    Ok(power_norm(apply, n, iterations).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::integrator::{make_bridge_op, make_fbm_op, make_identity_op, make_scaled_identity_op};

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    #[test]
    fn ratio_examples() {
        let g = grid(64);
        let r = integrator_ratio(&make_identity_op(g), 200, 3).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let b = integrator_ratio(&make_bridge_op(g), 200, 3).unwrap();
        assert!(b <= 1.0 + 1e-12, "{b}");
        let z = integrator_ratio(&make_scaled_identity_op(g, 0.0).unwrap(), 20, 3).unwrap();
        assert_eq!(z, 0.0);
        assert!(integrator_ratio(&make_identity_op(g), 0, 3).is_err());
    }

    #[test]
    fn ratio_is_below_squared_norm() {
        let g = grid(64);
        for op in [make_identity_op(g), make_bridge_op(g), make_fbm_op(g, 0.75).unwrap(), make_fbm_op(g, 0.6).unwrap()] {
            let r = integrator_ratio(&op, 500, 11).unwrap();
            let norm = op.operator_norm_est();
            assert!(r <= norm * norm + 1e-9, "{}: {r} > {}", op.name(), norm * norm);
        }
    }

    #[test]
    fn schur_fbm_kernel() {
        // Volterra kernel (t₂ - t₁)^{2α-2} 1_{t₂ > t₁}: both sides equal 1/(2α-1) at most.
        let a = 0.75;
        let k = |s: f64, t: f64| if t > s { (t - s).powf(2.0 * a - 2.0) } else { 0.0 };
        let v = schur_bound(k, |_| 1.0, |_| 1.0, grid(32)).unwrap();
        assert!(v <= 1.0 / (2.0 * a - 1.0) + 1e-6 && v > 1.5, "{v}");
        // Covariance density α(2α-1)|s-t|^{2α-2}: the bound is 2^{2-2α}α at the midpoint.
        let r = |s: f64, t: f64| a * (2.0 * a - 1.0) * (s - t).abs().powf(2.0 * a - 2.0);
        let v = schur_bound(r, |_| 1.0, |_| 1.0, grid(32)).unwrap();
        let peak = 2f64.powf(2.0 - 2.0 * a) * a;
        assert!((v - peak).abs() < 1e-3 * peak, "{v} vs {peak}");
    }

    #[test]
    fn schur_trivial_kernels() {
        assert_eq!(schur_bound(|_, _| 0.0, |_| 1.0, |_| 1.0, grid(8)).unwrap(), 0.0);
        let g = grid(8);
        let cell = |t: f64| ((t * 8.0).floor() as i64).min(7);
        let diag = |s: f64, t: f64| if cell(s) == cell(t) { 8.0 } else { 0.0 };
        let v = schur_bound(diag, |_| 1.0, |_| 1.0, g).unwrap();
        assert!((v - 1.0).abs() < 1e-6 && v.is_finite());
        assert!(schur_bound(|_, _| 1.0, |_| 0.0, |_| 1.0, g).is_err());
    }

    #[test]
    fn norm_estimates() {
        let g = grid(32);
        assert!((op_norm_estimate(&make_identity_op(g), 10).unwrap() - 1.0).abs() < 1e-12);
        assert!((op_norm_estimate(&make_bridge_op(g), 50).unwrap() - 1.0).abs() < 1e-9);
        let two = make_scaled_identity_op(g, 2.0).unwrap();
        assert!((op_norm_estimate(&two, 10).unwrap() - 2.0).abs() < 1e-12);
        assert!(op_norm_estimate(&two, 5).is_err());
        let fbm = make_fbm_op(g, 0.75).unwrap();
        let mut last = 0.0;
        for it in [10, 20, 40, 80] {
            let v = op_norm_estimate(&fbm, it).unwrap();
            assert!(v >= last);
            last = v;
        }
        assert!((last - fbm.operator_norm_est()).abs() < 1e-6);
    }
}
