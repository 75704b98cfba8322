//! Clark representation of Brownian local time:
//! `ℓ(u,t) = ∫_0^t p_r(u) dr + ∫_0^t K(w(r) - u, t - r) dw(r)` with
//! `K(z, δ) = ∫_0^δ ∂_z p_τ(z) dτ`.

use std::f64::consts::PI;

use super::clark::{brownian, coupled_grids, residual_report, ResidualReport};
use crate::analytic::quadrature::{integrate, QuadratureSpec};
use crate::analytic::special::{clark_kernel_span, density};
use crate::error::{invalid, Result};
use crate::operator::{make_identity_op, Grid};
use crate::sim::{mc_run, McEstimate};

/// `∫_0^t p_r(u) dr`: `√(2t/π)` at `u = 0`, quadrature otherwise.
pub fn wiener_lt_drift(u: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(invalid(format!("time must be nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    if u == 0.0 {
        return Ok((2.0 * t / PI).sqrt());
    }
    integrate(|r| if r > 0.0 { density(r, u) } else { 0.0 }, 0.0, t, &[], &QuadratureSpec::endpoint_singular())
}

/// Residual of the representation at level `u`, time `t` on one path, with
/// `ℓ` replaced by its `ε`-smoothed grid sum.
fn residual_on_path(w: &[f64], mesh: f64, j_end: usize, u: f64, eps: f64, drift: f64) -> f64 {
    let t = j_end as f64 * mesh;
    let mut smoothed = 0.0;
    let mut ito = 0.0;
    for j in 0..j_end {
        smoothed += density(eps, w[j] - u);
        ito += clark_kernel_span(w[j] - u, 0.0, t - j as f64 * mesh) * (w[j + 1] - w[j]);
    }
    mesh * smoothed - drift - ito
}

/// Mean-square residual of the local-time Clark representation on each grid,
/// with common random numbers across grids.
pub fn wiener_lt_clark_residual(
    u: f64,
    t: f64,
    n_paths: usize,
    grid_sizes: &[usize],
    eps: f64,
    seed: u64,
) -> Result<ResidualReport> {
    if !(eps > 0.0) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    for &n in grid_sizes {
        Grid::new(n)?.index_of(t)?;
    }
    let drift = wiener_lt_drift(u, t)?;
    let per_path = coupled_grids(grid_sizes, n_paths, seed, |xi| {
        let grid = xi.grid();
        let j_end = grid.index_of(t)?;
        Ok(residual_on_path(&brownian(xi), grid.mesh(), j_end, u, eps, drift).powi(2))
    })?;
    residual_report(grid_sizes, per_path)
}

/// Monte Carlo mean of `ℓ_ε(u, t)` against the exact drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftCheck {
    pub estimate: McEstimate,
    pub target: f64,
    /// `|E ℓ_ε - target|` for the grid sum, computed exactly.
    pub bias_bound: f64,
    pub pass: bool,
}

/// `E ℓ_ε(u,t)` by Monte Carlo, passing when it lies within
/// `3 SE + |mesh · Σ p_{t_j+ε}(u) - ∫_0^t p_r(u) dr|` of the drift.
pub fn wiener_lt_drift_check(u: f64, t: f64, n: usize, n_paths: usize, eps: f64, seed: u64) -> Result<DriftCheck> {
    let grid = Grid::new(n)?;
    let j_end = grid.index_of(t)?;
    let target = wiener_lt_drift(u, t)?;
    let mesh = grid.mesh();
    let discrete_mean: f64 = (0..j_end).map(|j| mesh * density(grid.time(j) + eps, u)).sum();
    let bias_bound = (discrete_mean - target).abs();
    let op = make_identity_op(grid);
    let estimate = mc_run(&op, n_paths, seed, |p| {
        Ok(mesh * p.x_values()[..j_end].iter().map(|x| density(eps, x - u)).sum::<f64>())
    })?;
    let pass = estimate.agrees_with(target, 3.0, bias_bound);
    Ok(DriftCheck { estimate, target, bias_bound, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drift_values() {
        assert!((wiener_lt_drift(0.0, 1.0).unwrap() - 0.797_884_560_8).abs() < 1e-9);
        // ∫_0^1 p_r(u) dr = 2 p_1(u) - 2|u| (1 - Φ(|u|)).
        let u: f64 = 0.5;
        let exact = 2.0 * density(1.0, u) - 2.0 * u * crate::analytic::normal_sf(u);
        assert!((wiener_lt_drift(u, 1.0).unwrap() - exact).abs() < 1e-9);
        assert_eq!(wiener_lt_drift(0.3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn far_level_vanishes() {
        let r = wiener_lt_clark_residual(100.0, 1.0, 20, &[256], 1e-3, 1).unwrap();
        assert!(r.finest().mean <= 1e-20);
        assert!(wiener_lt_drift(100.0, 1.0).unwrap() <= 1e-10);
    }

    #[test]
    fn residual_shrinks_with_grid() {
        let r = wiener_lt_clark_residual(0.0, 1.0, 300, &[64, 1024], 1e-2, 5).unwrap();
        assert!(r.monotone_pass, "{r:?}");
        assert!(wiener_lt_clark_residual(0.0, 0.3, 10, &[64], 1e-2, 5).is_err());
    }

    #[test]
    fn drift_check_passes() {
        let d = wiener_lt_drift_check(0.0, 1.0, 1024, 4000, 1e-2, 9).unwrap();
        assert!(d.pass, "{d:?}");
    }
}
