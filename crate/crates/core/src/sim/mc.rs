use super::noise::noise_stream;
use super::parallel::map_indexed;
use super::path::{build_path, PathSample};
use crate::error::{invalid, Result};
use crate::operator::IntegratorOperator;

/// Sample mean with its standard error (`n - 1` denominator).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(invalid(format!("an estimate needs at least 2 samples, got {n}")));
        }
        if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite sample {bad}")));
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Ok(Self { mean, std_error: (var / n as f64).sqrt(), n_samples: n })
    }

    /// Sample variance recovered from the standard error.
    pub fn variance(&self) -> f64 {
        self.std_error * self.std_error * self.n_samples as f64
    }

    /// `|mean - target| ≤ k·SE + slack`.
    pub fn agrees_with(&self, target: f64, k: f64, slack: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error + slack
    }

    /// Estimate of `Cov(a, b)` as the mean of centred products.
    pub fn covariance(a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(invalid(format!("covariance of samples of lengths {} and {}", a.len(), b.len())));
        }
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
        Self::from_samples(&prods)
    }
}

/// Builds path `i` of the experiment `(op, seed)` for each `i < n_paths` and maps
/// `f` over it. Results are in path order whatever the thread count.
pub fn map_paths<T, F>(op: &IntegratorOperator, n_paths: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&PathSample) -> Result<T> + Sync + Send,
{
    let grid = op.grid();
    map_indexed(n_paths, |i| {
        let xi = noise_stream(grid, seed, i as u64);
        f(&build_path(op, &xi)?)
    })
}

/// Monte Carlo mean of a scalar path functional.
pub fn mc_run<F>(op: &IntegratorOperator, n_paths: usize, seed: u64, estimator: F) -> Result<McEstimate>
where
    F: Fn(&PathSample) -> Result<f64> + Sync + Send,
{
    McEstimate::from_samples(&map_paths(op, n_paths, seed, estimator)?)
}
