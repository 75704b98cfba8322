use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure_grid, invalid, Result};
use crate::operator::{Grid, StepFunction};

/// White noise on a grid: one standard normal per cell.
///
/// Paths are seeded by `(seed, stream)` on a ChaCha stream cipher, so any path
/// can be regenerated on its own regardless of how work is scheduled.
#[derive(Debug, Clone, PartialEq)]
pub struct WhiteNoiseSample {
    grid: Grid,
    normals: Vec<f64>,
    seed_tag: u64,
    stream: u64,
}

/// Stream 0 of `seed`.
pub fn sample_white_noise(grid: Grid, seed: u64) -> WhiteNoiseSample {
    noise_stream(grid, seed, 0)
}

/// The noise for path `stream` of the experiment seeded by `seed`.
pub fn noise_stream(grid: Grid, seed: u64, stream: u64) -> WhiteNoiseSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let normals = (0..grid.n_steps()).map(|_| rng.sample(StandardNormal)).collect();
    WhiteNoiseSample { grid, normals, seed_tag: seed, stream }
}

impl WhiteNoiseSample {
    pub fn from_normals(grid: Grid, normals: Vec<f64>, seed_tag: u64) -> Result<Self> {
        ensure_grid(grid.n_steps(), normals.len())?;
        Ok(Self { grid, normals, seed_tag, stream: 0 })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn normals(&self) -> &[f64] {
        &self.normals
    }

    pub fn seed_tag(&self) -> u64 {
        self.seed_tag
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// `(h, ξ)` on raw cell values.
    pub fn pair_values(&self, h: &[f64]) -> f64 {
        self.grid.mesh().sqrt() * h.iter().zip(&self.normals).map(|(a, g)| a * g).sum::<f64>()
    }

    /// The same Brownian path seen on a grid `factor` times coarser:
    /// block sums of the normals rescaled to unit variance.
    pub fn coarsen(&self, factor: usize) -> Result<WhiteNoiseSample> {
        let n = self.grid.n_steps();
        if factor == 0 || !n.is_multiple_of(factor) {
            return Err(invalid(format!("cannot coarsen {n} cells by {factor}")));
        }
        let scale = 1.0 / (factor as f64).sqrt();
        let normals = self.normals.chunks(factor).map(|c| scale * c.iter().sum::<f64>()).collect();
        Ok(Self { grid: Grid::new(n / factor)?, normals, seed_tag: self.seed_tag, stream: self.stream })
    }
}

/// `(h, ξ) = √mesh · Σ h_i g_i`.
pub fn pairing(h: &StepFunction, xi: &WhiteNoiseSample) -> Result<f64> {
    h.grid().ensure_same(&xi.grid)?;
    Ok(xi.pair_values(h.values()))
}

/// `ℰ(h) = exp((h, ξ) - ½‖h‖²)`.
pub fn stochastic_exponential(h: &StepFunction, xi: &WhiteNoiseSample) -> Result<f64> {
    Ok((pairing(h, xi)? - 0.5 * h.norm_sq()).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinism_and_independence() {
        let g = Grid::new(4096).unwrap();
        let a = sample_white_noise(g, 17);
        assert_eq!(a, sample_white_noise(g, 17));
        let b = sample_white_noise(g, 18);
        let n = g.n_steps() as f64;
        let corr = a.normals().iter().zip(b.normals()).map(|(x, y)| x * y).sum::<f64>() / n;
        assert!(corr.abs() < 3.0 / n.sqrt());
        let c = noise_stream(g, 17, 1);
        assert_ne!(a.normals(), c.normals());
    }

    #[test]
    fn pairing_examples() {
        let g = Grid::new(8).unwrap();
        let xi = sample_white_noise(g, 1);
        assert_eq!(pairing(&StepFunction::zero(g), &xi).unwrap(), 0.0);
        let f = StepFunction::indicator_to(g, 3).unwrap();
        let w3 = (1.0 / 8f64).sqrt() * xi.normals()[..3].iter().sum::<f64>();
        assert!((pairing(&f, &xi).unwrap() - w3).abs() < 1e-15);
        assert!(pairing(&StepFunction::zero(Grid::new(4).unwrap()), &xi).is_err());
        assert_eq!(stochastic_exponential(&StepFunction::zero(g), &xi).unwrap(), 1.0);
    }

    #[test]
    fn coarsening_preserves_the_path() {
        let g = Grid::new(16).unwrap();
        let xi = sample_white_noise(g, 5);
        let coarse = xi.coarsen(4).unwrap();
        assert_eq!(coarse.grid().n_steps(), 4);
        let fine = pairing(&StepFunction::indicator_to(g, 8).unwrap(), &xi).unwrap();
        let cg = coarse.grid();
        let crs = pairing(&StepFunction::indicator_to(cg, 2).unwrap(), &coarse).unwrap();
        assert!((fine - crs).abs() < 1e-14);
        assert!(xi.coarsen(3).is_err());
        assert!(xi.coarsen(0).is_err());
    }
}
