//! Clark representation of `f(w(1))`: `f(w(1)) = E f(w(1)) + ∫ ∂_x P_{1-t} f(w(t)) dw(t)`.

use crate::analytic::heat::{heat_semigroup_dx, GAUSSIAN_HALF_WIDTH};
use crate::analytic::quadrature::{integrate, QuadratureSpec};
use crate::analytic::special::density;
use crate::analytic::{HeatDerivativeRule, RealFunction};
use crate::error::{invalid, Result};
use crate::operator::Grid;
use crate::sim::{map_indexed, noise_stream, McEstimate, WhiteNoiseSample};

/// Mean-square residuals of a representation over a sequence of grids.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub grid_sizes: Vec<usize>,
    pub l2_residuals: Vec<McEstimate>,
    /// Every residual is strictly below the one on the previous grid.
    pub monotone_pass: bool,
}

impl ResidualReport {
    pub(crate) fn new(grid_sizes: Vec<usize>, l2_residuals: Vec<McEstimate>) -> Self {
        let monotone_pass = l2_residuals.windows(2).all(|w| w[1].mean < w[0].mean);
        Self { grid_sizes, l2_residuals, monotone_pass }
    }

    /// Residual on the finest grid.
    pub fn finest(&self) -> &McEstimate {
        self.l2_residuals.last().expect("at least one grid")
    }
}

/// `E f(√var · Z)` by quadrature against the Gaussian density.
pub fn gaussian_expectation<F: RealFunction + ?Sized>(f: &F, var: f64, q: &QuadratureSpec) -> Result<f64> {
    if !(var > 0.0) {
        return Err(invalid(format!("variance must be positive, got {var}")));
    }
    let s = var.sqrt();
    let breaks: Vec<f64> = f.breakpoints().into_iter().map(|b| b / s).collect();
    integrate(|z| f.eval(s * z) * density(1.0, z), -GAUSSIAN_HALF_WIDTH, GAUSSIAN_HALF_WIDTH, &breaks, q)
}

/// `∂_x P_{1-t} f(w_t)`, the Clark integrand at time `t < 1`.
pub fn clark_integrand_1d<F: RealFunction + ?Sized>(f: &F, t: f64, wt: f64, q: &QuadratureSpec) -> Result<f64> {
    if !(0.0..1.0).contains(&t) {
        return Err(invalid(format!("the Clark integrand needs 0 ≤ t < 1, got {t}")));
    }
    heat_semigroup_dx(f, 1.0 - t, wt, q)
}

fn check_nested(grid_sizes: &[usize]) -> Result<usize> {
    let finest = *grid_sizes.iter().max().ok_or_else(|| invalid("no grid sizes given"))?;
    if let Some(bad) = grid_sizes.iter().find(|&&n| n == 0 || finest % n != 0) {
        return Err(invalid(format!("grid size {bad} does not divide the finest grid {finest}")));
    }
    Ok(finest)
}

/// Brownian values `w(t_j)` from a noise sample.
pub(crate) fn brownian(xi: &WhiteNoiseSample) -> Vec<f64> {
    let root = xi.grid().mesh().sqrt();
    let mut w = Vec::with_capacity(xi.normals().len() + 1);
    let mut acc = 0.0;
    w.push(0.0);
    for g in xi.normals() {
        acc += g;
        w.push(root * acc);
    }
    w
}

/// Runs `per_grid` on the same Brownian path seen on every grid in `grid_sizes`
/// (coarser grids sum the finest noise), for `n_paths` paths.
pub(crate) fn coupled_grids<F>(grid_sizes: &[usize], n_paths: usize, seed: u64, per_grid: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&WhiteNoiseSample) -> Result<f64> + Sync + Send,
{
    let finest = check_nested(grid_sizes)?;
    let fine_grid = Grid::new(finest)?;
    map_indexed(n_paths, |i| {
        let fine = noise_stream(fine_grid, seed, i as u64);
        grid_sizes.iter().map(|&n| per_grid(&fine.coarsen(finest / n)?)).collect()
    })
}

pub(crate) fn residual_report(grid_sizes: &[usize], per_path: Vec<Vec<f64>>) -> Result<ResidualReport> {
    let estimates = (0..grid_sizes.len())
        .map(|k| McEstimate::from_samples(&per_path.iter().map(|r| r[k]).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualReport::new(grid_sizes.to_vec(), estimates))
}

/// Mean-square residual of the discretized Clark representation of `f(w(1))`
/// on each grid, with common random numbers across grids.
pub fn verify_clark_1d<F: RealFunction + ?Sized>(
    f: &F,
    grid_sizes: &[usize],
    n_paths: usize,
    seed: u64,
) -> Result<ResidualReport> {
    let mean = gaussian_expectation(f, 1.0, &QuadratureSpec::precise())?;
    let rule = HeatDerivativeRule::default();
    let per_path = coupled_grids(grid_sizes, n_paths, seed, |xi| {
        let w = brownian(xi);
        let n = xi.grid().n_steps();
        let mesh = xi.grid().mesh();
        let ito: f64 = (0..n).map(|j| rule.eval(f, 1.0 - j as f64 * mesh, w[j]) * (w[j + 1] - w[j])).sum();
        Ok((f.eval(w[n]) - mean - ito).powi(2))
    })?;
    residual_report(grid_sizes, per_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::special::normal_cdf;
    use crate::analytic::{FnFunction, TestFunction};

    fn q() -> QuadratureSpec {
        QuadratureSpec::precise()
    }

    #[test]
    fn integrand_examples() {
        for (t, w) in [(0.0, 0.3), (0.5, -1.2), (0.9, 2.0)] {
            let id = clark_integrand_1d(&TestFunction::Identity, t, w, &q()).unwrap();
            assert!((id - 1.0).abs() < 1e-10);
            let sq = clark_integrand_1d(&TestFunction::Square, t, w, &q()).unwrap();
            assert!((sq - 2.0 * w).abs() < 1e-10);
            let step = clark_integrand_1d(&TestFunction::StepAbove(0.4), t, w, &q()).unwrap();
            assert!((step - density(1.0 - t, w - 0.4)).abs() < 1e-10);
        }
        assert!(clark_integrand_1d(&TestFunction::Identity, 1.0, 0.0, &q()).is_err());
    }

    #[test]
    fn step_integrand_matches_finite_difference() {
        let f = TestFunction::StepAbove(0.0);
        let (t, w, h) = (0.3f64, 0.2, 1e-5);
        let s = (1.0 - t).sqrt();
        let fd = (normal_cdf((w + h) / s) - normal_cdf((w - h) / s)) / (2.0 * h);
        assert!((clark_integrand_1d(&f, t, w, &q()).unwrap() - fd).abs() < 1e-8);
    }

    #[test]
    fn gaussian_means() {
        assert!((gaussian_expectation(&TestFunction::Square, 0.7, &q()).unwrap() - 0.7).abs() < 1e-12);
        assert!((gaussian_expectation(&TestFunction::StepAbove(0.0), 1.0, &q()).unwrap() - 0.5).abs() < 1e-12);
        let cosine = FnFunction::new(|v: f64| v.cos());
        let exact = (-0.5f64).exp();
        assert!((gaussian_expectation(&cosine, 1.0, &q()).unwrap() - exact).abs() < 1e-12);
    }

    #[test]
    fn identity_telescopes() {
        let r = verify_clark_1d(&TestFunction::Identity, &[16, 64], 50, 1).unwrap();
        assert!(r.l2_residuals.iter().all(|e| e.mean < 1e-24));
    }

    #[test]
    fn square_residual_is_quadratic_variation_error() {
        // Residual = Σ(Δw)² - 1, whose second moment is 2/n.
        let r = verify_clark_1d(&TestFunction::Square, &[64, 256], 2000, 2).unwrap();
        for (n, e) in r.grid_sizes.iter().zip(&r.l2_residuals) {
            assert!(e.agrees_with(2.0 / *n as f64, 4.0, 0.0), "n = {n}: {e:?}");
        }
        assert!(r.monotone_pass);
    }

    #[test]
    fn rejects_nonnested_grids() {
        assert!(verify_clark_1d(&TestFunction::Identity, &[12, 64], 10, 1).is_err());
        assert!(verify_clark_1d(&TestFunction::Identity, &[], 10, 1).is_err());
    }
}
