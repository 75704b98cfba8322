//! Local time of a sampled path by ε-smoothing and by kernel occupation density.
//!
//! Both estimators use the left-endpoint time sum on the path grid, so the
//! occupation density at bandwidth `b` is the smoothed local time at `ε = b²`.

use crate::analytic::special::density;
use crate::error::{invalid, Result};
use crate::sim::PathSample;

/// Points in the default level grid.
pub const DEFAULT_U_POINTS: usize = 257;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalTimeMethod {
    EpsSmoothing,
    HistogramDensity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalTimeEstimate {
    pub u: f64,
    pub t: f64,
    pub method: LocalTimeMethod,
    /// `ε` for smoothing, the bandwidth for densities.
    pub smoothing: f64,
    pub value: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Grid index of `t` and the path values strictly before it.
fn prefix(path: &PathSample, t: f64) -> Result<&[f64]> {
    let j = path.grid().index_of(t)?;
    Ok(&path.x_values()[..j])
}

fn smoothed_sum(xs: &[f64], u: f64, var: f64, mesh: f64) -> f64 {
    mesh * xs.iter().map(|x| density(var, x - u)).sum::<f64>()
}

/// `mesh · Σ_{t_j < t} p_ε(x(t_j) - u)`.
pub fn local_time_eps(path: &PathSample, u: f64, t: f64, eps: f64) -> Result<LocalTimeEstimate> {
    positive("eps", eps)?;
    let xs = prefix(path, t)?;
    let value = smoothed_sum(xs, u, eps, path.grid().mesh());
    Ok(LocalTimeEstimate { u, t, method: LocalTimeMethod::EpsSmoothing, smoothing: eps, value })
}

/// Gaussian kernel estimate of the occupation density at each level of `u_grid`.
pub fn occupation_density(
    path: &PathSample,
    t: f64,
    bandwidth: f64,
    u_grid: &[f64],
) -> Result<Vec<LocalTimeEstimate>> {
    positive("bandwidth", bandwidth)?;
    if u_grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(invalid("u_grid must be sorted"));
    }
    let xs = prefix(path, t)?;
    let var = bandwidth * bandwidth;
    let mesh = path.grid().mesh();
    Ok(u_grid
        .iter()
        .map(|&u| LocalTimeEstimate {
            u,
            t,
            method: LocalTimeMethod::HistogramDensity,
            smoothing: bandwidth,
            value: smoothed_sum(xs, u, var, mesh),
        })
        .collect())
}

/// Levels covering the path up to `t` with `6·bandwidth` of margin, and at
/// least `±3` standard deviations of the widest marginal seen on the path.
pub fn default_u_grid(path: &PathSample, t: f64, bandwidth: f64) -> Result<Vec<f64>> {
    positive("bandwidth", bandwidth)?;
    let j = path.grid().index_of(t)?;
    let xs = &path.x_values()[..=j];
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = 3.0 * (xs.iter().map(|x| x * x).fold(0.0, f64::max).sqrt().max(t.sqrt()));
    let a = (lo - 6.0 * bandwidth).min(-spread);
    let b = (hi + 6.0 * bandwidth).max(spread);
    let step = (b - a) / (DEFAULT_U_POINTS - 1) as f64;
    Ok((0..DEFAULT_U_POINTS).map(|k| a + k as f64 * step).collect())
}

fn trapezoid(us: &[f64], ys: &[f64]) -> f64 {
    us.windows(2).zip(ys.windows(2)).map(|(u, y)| 0.5 * (u[1] - u[0]) * (y[0] + y[1])).sum()
}

/// Total occupation mass `∫ density du` over `u_grid` by the trapezoid rule.
pub fn occupation_mass(estimates: &[LocalTimeEstimate]) -> f64 {
    let us: Vec<f64> = estimates.iter().map(|e| e.u).collect();
    let ys: Vec<f64> = estimates.iter().map(|e| e.value).collect();
    trapezoid(&us, &ys)
}

/// Both sides of the occupation formula: `∫ φ(u) ℓ(u,t) du` from the density on
/// the default level grid, and `mesh · Σ_{t_j<t} φ(x(t_j))`.
pub fn occupation_check(
    path: &PathSample,
    t: f64,
    phi: &dyn Fn(f64) -> f64,
    bandwidth: f64,
) -> Result<(f64, f64)> {
    let us = default_u_grid(path, t, bandwidth)?;
    let dens = occupation_density(path, t, bandwidth, &us)?;
    let ys: Vec<f64> = dens.iter().map(|e| phi(e.u) * e.value).collect();
    let lhs = trapezoid(&us, &ys);
    let rhs = path.grid().mesh() * prefix(path, t)?.iter().map(|&x| phi(x)).sum::<f64>();
    Ok((lhs, rhs))
}

/// Acceptance band for `occupation_check`: 2% relative plus the `O(b²)`
/// smoothing bias of a test function with bounded second derivative.
pub fn occupation_tolerance(t: f64, rhs: f64, bandwidth: f64) -> f64 {
    0.02 * t.max(rhs.abs()) + bandwidth * bandwidth * t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{make_fbm_op, make_identity_op, Grid};
    use crate::sim::{build_path, mc_run, sample_white_noise};

    fn wiener_path(n: usize, seed: u64) -> PathSample {
        let g = Grid::new(n).unwrap();
        build_path(&make_identity_op(g), &sample_white_noise(g, seed)).unwrap()
    }

    #[test]
    fn far_level_is_negligible() {
        let p = wiener_path(1024, 1);
        let e = local_time_eps(&p, 100.0, 1.0, 1e-3).unwrap();
        assert!(e.value <= 1e-12 && e.value >= 0.0);
        assert!(local_time_eps(&p, 0.0, 1.0, 0.0).is_err());
        assert!(local_time_eps(&p, 0.0, 0.3, 1e-3).is_err());
        assert_eq!(local_time_eps(&p, 0.0, 0.0, 1e-3).unwrap().value, 0.0);
    }

    #[test]
    fn mean_at_zero_matches_heat_integral() {
        // E ℓ_ε(0,1) on the grid is mesh·Σ p_{t_j+ε}(0).
        let n = 512;
        let g = Grid::new(n).unwrap();
        let eps = 1e-2;
        let oracle: f64 = (0..n).map(|j| density(g.time(j) + eps, 0.0)).sum::<f64>() / n as f64;
        let e = mc_run(&make_identity_op(g), 10_000, 8, |p| Ok(local_time_eps(p, 0.0, 1.0, eps)?.value)).unwrap();
        assert!(e.agrees_with(oracle, 3.5, 0.0), "{e:?} vs {oracle}");
        // The continuum limit as ε → 0.
        assert!((oracle - (2.0 / std::f64::consts::PI).sqrt()).abs() < 0.08);
    }

    #[test]
    fn cauchy_in_l2() {
        let g = Grid::new(4096).unwrap();
        let diff = |e1: f64, e2: f64| {
            mc_run(&make_identity_op(g), 200, 4, move |p| {
                Ok((local_time_eps(p, 0.0, 1.0, e1)?.value - local_time_eps(p, 0.0, 1.0, e2)?.value).powi(2))
            })
            .unwrap()
            .mean
        };
        assert!(diff(1e-3, 1e-4) < diff(1e-2, 1e-3));
    }

    #[test]
    fn density_matches_smoothing_and_mass() {
        let p = wiener_path(4096, 6);
        let bw = 0.05;
        let us = default_u_grid(&p, 1.0, bw).unwrap();
        let dens = occupation_density(&p, 1.0, bw, &us).unwrap();
        for e in dens.iter().step_by(40) {
            let s = local_time_eps(&p, e.u, 1.0, bw * bw).unwrap();
            assert_eq!(s.value, e.value);
        }
        assert!((occupation_mass(&dens) - 1.0).abs() < 0.02);
        assert!(dens.iter().all(|e| e.value >= 0.0));
        assert!(occupation_density(&p, 1.0, bw, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn reflection_maps_level_to_minus_level() {
        let p = wiener_path(256, 2);
        let r = p.reflected();
        let us = [-0.7, -0.1, 0.0, 0.4];
        let neg: Vec<f64> = us.iter().rev().map(|u| -u).collect();
        let a = occupation_density(&p, 1.0, 0.1, &us).unwrap();
        let b = occupation_density(&r, 1.0, 0.1, &neg).unwrap();
        for (x, y) in a.iter().zip(b.iter().rev()) {
            assert_eq!(x.value, y.value);
        }
    }

    #[test]
    fn occupation_formula_examples() {
        let p = wiener_path(4096, 12);
        let bw = 0.02;
        let cases: [(&str, &dyn Fn(f64) -> f64); 3] =
            [("one", &|_| 1.0), ("square", &|v| v * v), ("positive", &|v| if v > 0.0 { 1.0 } else { 0.0 })];
        for (name, phi) in cases {
            let (lhs, rhs) = occupation_check(&p, 1.0, phi, bw).unwrap();
            assert!((lhs - rhs).abs() <= occupation_tolerance(1.0, rhs, bw), "{name}: {lhs} vs {rhs}");
        }
        // Square: the smoothing bias is exactly b²·t.
        let (lhs, rhs) = occupation_check(&p, 0.5, &|v| v * v, bw).unwrap();
        assert!((lhs - rhs - bw * bw * 0.5).abs() < 1e-6);
    }

    #[test]
    fn smooth_error_shrinks_with_bandwidth() {
        let p = wiener_path(4096, 13);
        let phi = |v: f64| (2.0 * v).cos();
        let err = |bw: f64| {
            let (l, r) = occupation_check(&p, 1.0, &phi, bw).unwrap();
            (l - r).abs()
        };
        let (e1, e2) = (err(0.08), err(0.04));
        assert!(e2 <= 0.5 * e1 * 1.05, "{e1} {e2}");
    }

    #[test]
    fn fbm_mass() {
        let g = Grid::new(256).unwrap();
        let op = make_fbm_op(g, 0.75).unwrap();
        let p = build_path(&op, &sample_white_noise(g, 1)).unwrap();
        let us = default_u_grid(&p, 0.5, 0.05).unwrap();
        let mass = occupation_mass(&occupation_density(&p, 0.5, 0.05, &us).unwrap());
        assert!((mass - 0.5).abs() < 0.01);
    }
}
