use crate::error::{ensure_grid, invalid, Result};

/// Uniform partition `t_j = j / n` of `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    n_steps: usize,
}

impl Grid {
    pub fn new(n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(invalid("a grid needs at least one cell"));
        }
        Ok(Self { n_steps })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn mesh(&self) -> f64 {
        1.0 / self.n_steps as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 / self.n_steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|j| self.time(j)).collect()
    }

    /// Index `j` with `t_j = t`; off-grid times are rejected rather than rounded.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let scaled = t * self.n_steps as f64;
        let j = scaled.round();
        if !(0.0..=self.n_steps as f64).contains(&j) || (scaled - j).abs() > 1e-9 * self.n_steps.max(1) as f64 {
            return Err(invalid(format!("time {t} is not a point of the {}-cell grid", self.n_steps)));
        }
        Ok(j as usize)
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        ensure_grid(self.n_steps, other.n_steps)
    }
}

/// Function constant on each cell `[t_j, t_{j+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        ensure_grid(grid.n_steps(), values.len())?;
        Ok(Self { grid, values })
    }

    pub fn zero(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.n_steps()] }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.n_steps()] }
    }

    /// `1_[0, t_j)`.
    pub fn indicator_to(grid: Grid, j: usize) -> Result<Self> {
        Self::indicator_between(grid, 0, j)
    }

    /// `1_[t_i, t_j)`.
    pub fn indicator_between(grid: Grid, i: usize, j: usize) -> Result<Self> {
        if i > j || j > grid.n_steps() {
            return Err(invalid(format!("bad cell range [{i}, {j}) on {} cells", grid.n_steps())));
        }
        let mut values = vec![0.0; grid.n_steps()];
        values[i..j].iter_mut().for_each(|v| *v = 1.0);
        Ok(Self { grid, values })
    }

    /// Samples `f` at cell midpoints.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let h = grid.mesh();
        let values = (0..grid.n_steps()).map(|i| f((i as f64 + 0.5) * h)).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `(f, g) = mesh · Σ f_i g_i`.
    pub fn inner(&self, other: &StepFunction) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self.grid.mesh() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>())
    }

    pub fn norm_sq(&self) -> f64 {
        self.grid.mesh() * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, c: f64) -> StepFunction {
        Self { grid: self.grid, values: self.values.iter().map(|v| c * v).collect() }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &StepFunction, b: f64) -> Result<StepFunction> {
        self.grid.ensure_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(Self { grid: self.grid, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_basics() {
        let g = Grid::new(4).unwrap();
        assert_eq!(g.times(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.mesh(), 0.25);
        assert_eq!(g.index_of(0.75).unwrap(), 3);
        assert!(g.index_of(0.3).is_err());
        assert!(g.index_of(1.25).is_err());
        assert!(g.index_of(-0.25).is_err());
        assert!(Grid::new(0).is_err());
    }

    #[test]
    fn step_function_norms() {
        let g = Grid::new(4).unwrap();
        let f = StepFunction::indicator_to(g, 2).unwrap();
        assert_eq!(f.values(), &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(f.norm_sq(), 0.5);
        let h = StepFunction::indicator_between(g, 1, 4).unwrap();
        assert_eq!(f.inner(&h).unwrap(), 0.25);
        assert!(StepFunction::new(g, vec![1.0; 3]).is_err());
        assert!(StepFunction::indicator_between(g, 3, 2).is_err());
        let other = StepFunction::zero(Grid::new(8).unwrap());
        assert!(f.inner(&other).is_err());
    }

    #[test]
    fn from_fn_uses_midpoints() {
        let g = Grid::new(2).unwrap();
        let f = StepFunction::from_fn(g, |t| t);
        assert_eq!(f.values(), &[0.25, 0.75]);
    }
}
