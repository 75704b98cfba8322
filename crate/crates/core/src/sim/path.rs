use std::io::Write;

use super::noise::WhiteNoiseSample;
use crate::error::{ensure_grid, invalid, Result};
use crate::operator::{Grid, IntegratorOperator};

/// Joint realization of `w(t_j)` and `x(t_j)` from one noise sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    grid: Grid,
    w_values: Vec<f64>,
    x_values: Vec<f64>,
    noise: WhiteNoiseSample,
    op_name: String,
}

/// Which process an Itô sum integrates against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    W,
    X,
}

/// Builds `w` and `x(t_j) = (A·1_[0,t_j], ξ) = √mesh · Σ_{k<j} (Mᵀg)_k` with one
/// adjoint application, `O(n²)` for dense operators and `O(n)` for structured ones.
pub fn build_path(op: &IntegratorOperator, xi: &WhiteNoiseSample) -> Result<PathSample> {
    op.grid().ensure_same(&xi.grid())?;
    let grid = op.grid();
    let root = grid.mesh().sqrt();
    let w_values = cumulative(xi.normals(), root);
    let x_values = cumulative(&op.apply_transpose_values(xi.normals()), root);
    Ok(PathSample { grid, w_values, x_values, noise: xi.clone(), op_name: op.name().to_string() })
}

fn cumulative(increments: &[f64], scale: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(increments.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for v in increments {
        acc += v;
        out.push(scale * acc);
    }
    out
}

impl PathSample {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn w_values(&self) -> &[f64] {
        &self.w_values
    }

    pub fn x_values(&self) -> &[f64] {
        &self.x_values
    }

    pub fn noise(&self) -> &WhiteNoiseSample {
        &self.noise
    }

    pub fn op_name(&self) -> &str {
        &self.op_name
    }

    pub fn values(&self, which: Integrator) -> &[f64] {
        match which {
            Integrator::W => &self.w_values,
            Integrator::X => &self.x_values,
        }
    }

    /// Reflected path `ξ → -ξ`.
    pub fn reflected(&self) -> PathSample {
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
        let noise = WhiteNoiseSample::from_normals(self.grid, neg(self.noise.normals()), self.noise.seed_tag())
            .expect("same grid");
        PathSample {
            grid: self.grid,
            w_values: neg(&self.w_values),
            x_values: neg(&self.x_values),
            noise,
            op_name: self.op_name.clone(),
        }
    }
}

/// Left-endpoint sum `Σ_j u(t_j)·(Z(t_{j+1}) - Z(t_j))`.
///
/// Adaptedness of `u` is the caller's contract.
pub fn ito_integral(integrand: &[f64], path: &PathSample, against: Integrator) -> Result<f64> {
    ensure_grid(path.grid.n_steps(), integrand.len())?;
    let z = path.values(against);
    Ok(integrand.iter().zip(z.windows(2)).map(|(u, w)| u * (w[1] - w[0])).sum())
}

/// Writes the `(t, w, x)` table of a path.
pub fn dump_path<W: Write>(path: &PathSample, mut out: W) -> Result<()> {
    let io = |e: std::io::Error| invalid(format!("writing path dump: {e}"));
    writeln!(out, "t,w,x").map_err(io)?;
    for j in 0..=path.grid.n_steps() {
        writeln!(out, "{:.12e},{:.12e},{:.12e}", path.grid.time(j), path.w_values[j], path.x_values[j]).map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{make_bridge_op, make_fbm_op, make_identity_op};
    use crate::sim::noise::sample_white_noise;

    #[test]
    fn identity_path_is_wiener() {
        let g = Grid::new(64).unwrap();
        let xi = sample_white_noise(g, 2);
        let p = build_path(&make_identity_op(g), &xi).unwrap();
        assert_eq!(p.w_values(), p.x_values());
        assert_eq!(p.w_values()[0], 0.0);
        assert_eq!(p.op_name(), "wiener");
    }

    #[test]
    fn bridge_returns_to_zero() {
        let g = Grid::new(256).unwrap();
        let xi = sample_white_noise(g, 3);
        let p = build_path(&make_bridge_op(g), &xi).unwrap();
        assert!(p.x_values()[256].abs() < 1e-12);
        // x(t) = w(t) - t·w(1) on grid points.
        for j in [10, 100, 200] {
            let t = g.time(j);
            assert!((p.x_values()[j] - (p.w_values()[j] - t * p.w_values()[256])).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_path_matches_explicit_pairings() {
        let g = Grid::new(16).unwrap();
        let op = make_fbm_op(g, 0.7).unwrap();
        let xi = sample_white_noise(g, 9);
        let p = build_path(&op, &xi).unwrap();
        for j in 0..=16 {
            let direct = xi.pair_values(&op.transformed_indicator(j));
            assert!((p.x_values()[j] - direct).abs() < 1e-12);
        }
        assert!(build_path(&make_identity_op(Grid::new(8).unwrap()), &xi).is_err());
    }

    #[test]
    fn ito_sum_examples() {
        let g = Grid::new(32).unwrap();
        let p = build_path(&make_identity_op(g), &sample_white_noise(g, 4)).unwrap();
        let w1 = p.w_values()[32];
        assert!((ito_integral(&vec![1.0; 32], &p, Integrator::W).unwrap() - w1).abs() < 1e-14);
        assert_eq!(ito_integral(&vec![0.0; 32], &p, Integrator::X).unwrap(), 0.0);
        assert!(ito_integral(&[1.0], &p, Integrator::W).is_err());
        // Discrete Itô formula: Σ 2w_j Δw_j = w(1)² - Σ (Δw_j)².
        let u: Vec<f64> = p.w_values()[..32].iter().map(|w| 2.0 * w).collect();
        let qv: f64 = p.w_values().windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
        assert!((ito_integral(&u, &p, Integrator::W).unwrap() - (w1 * w1 - qv)).abs() < 1e-12);
    }

    #[test]
    fn dump_has_one_row_per_point() {
        let g = Grid::new(4).unwrap();
        let p = build_path(&make_identity_op(g), &sample_white_noise(g, 4)).unwrap();
        let mut buf = Vec::new();
        dump_path(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.starts_with("t,w,x\n0.000000000000e0,"));
    }
}
