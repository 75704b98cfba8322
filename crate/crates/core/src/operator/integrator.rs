use nalgebra::{DMatrix, DVector};

use super::grid::{Grid, StepFunction};
use crate::error::{invalid, Result};

/// Largest size for which norms come from an exact symmetric eigendecomposition.
const EXACT_SPECTRUM_LIMIT: usize = 512;
const POWER_ITERATIONS: usize = 300;
/// Inverse norms above this are reported as absent.
const INVERSE_NORM_CAP: f64 = 1e8;

/// How the matrix of an operator is stored.
///
/// The structured variants keep Monte Carlo paths at `O(n)` per sample.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorMatrix {
    ScaledIdentity(f64),
    /// `I - P` with `P` the projection onto constants.
    Bridge,
    Dense(DMatrix<f64>),
}

/// The operator `A` of an integrator `x(t) = (A·1_[0,t], ξ)` acting on step functions.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorOperator {
    name: String,
    grid: Grid,
    alpha: Option<f64>,
    matrix: OperatorMatrix,
    sigma_sq: Vec<f64>,
    operator_norm_est: f64,
    inverse_norm_est: Option<f64>,
}

pub fn make_identity_op(grid: Grid) -> IntegratorOperator {
    IntegratorOperator::build("wiener", grid, None, OperatorMatrix::ScaledIdentity(1.0))
}

/// `c·I`.
pub fn make_scaled_identity_op(grid: Grid, c: f64) -> Result<IntegratorOperator> {
    if !c.is_finite() {
        return Err(invalid(format!("scale must be finite, got {c}")));
    }
    Ok(IntegratorOperator::build("scaled_identity", grid, None, OperatorMatrix::ScaledIdentity(c)))
}

pub fn make_bridge_op(grid: Grid) -> IntegratorOperator {
    IntegratorOperator::build("bridge", grid, None, OperatorMatrix::Bridge)
}

/// Fractional Brownian motion with Hurst index `alpha ∈ (1/2, 1)`.
///
/// The matrix is the upper-triangular Cholesky factor of the exact covariance of
/// the cell increments, `Γ_kl = ½Δ^{2α}(|d+1|^{2α} + |d-1|^{2α} - 2|d|^{2α})` with
/// `d = k - l`, which is the cell-pair integral of `α(2α-1)|u - v|^{2α-2}`.
/// Being upper triangular it acts as a Volterra operator with kernel supported on
/// `t₂ > t₁`, so the process is adapted, and `σ²(t_j) = t_j^{2α}` holds on the grid.
/// The scale is then calibrated so that `σ²(1) = 1`.
pub fn make_fbm_op(grid: Grid, alpha: f64) -> Result<IntegratorOperator> {
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(invalid(format!("fBm needs alpha in (1/2, 1), got {alpha}")));
    }
    let n = grid.n_steps();
    let h = grid.mesh();
    let two_a = 2.0 * alpha;
    let lag = |d: usize| -> f64 {
        let d = d as f64;
        0.5 * ((d + 1.0).powf(two_a) + (d - 1.0).abs().powf(two_a) - 2.0 * d.powf(two_a))
    };
    // Γ/Δ = Δ^{2α-1}·ρ(|k-l|).
    let scale = h.powf(two_a - 1.0);
    let lags: Vec<f64> = (0..n).map(|d| scale * lag(d)).collect();
    let gram = DMatrix::from_fn(n, n, |k, l| lags[k.abs_diff(l)]);
    let chol = gram
        .cholesky()
        .ok_or_else(|| invalid("fBm increment covariance is not positive definite"))?;
    let mut m = chol.l().transpose();
    // Calibrate so that σ²(1) = Δ·‖M·1‖² equals 1 exactly.
    let ones = DVector::from_element(n, 1.0);
    let total = h * (&m * ones).norm_squared();
    m /= total.sqrt();
    Ok(IntegratorOperator::build("fbm", grid, Some(alpha), OperatorMatrix::Dense(m)))
}

/// Orthogonal projection onto the span of `basis` in the step-function inner product.
pub fn make_projection_op(grid: Grid, basis: &[StepFunction]) -> Result<IntegratorOperator> {
    let n = grid.n_steps();
    for b in basis {
        grid.ensure_same(&b.grid())?;
    }
    if basis.is_empty() {
        return Ok(IntegratorOperator::build("projection", grid, None, OperatorMatrix::ScaledIdentity(0.0)));
    }
    let k = basis.len();
    let b = DMatrix::from_fn(n, k, |i, c| basis[c].values()[i]);
    let gram = b.transpose() * &b * grid.mesh();
    let eig = gram.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || min / max < 1e-10 {
        return Err(invalid(format!(
            "projection basis is numerically dependent (Gram eigenvalue ratio {:.3e})",
            if max > 0.0 { min / max } else { 0.0 }
        )));
    }
    let gram_inv = gram.try_inverse().ok_or_else(|| invalid("singular Gram matrix"))?;
    let m = &b * gram_inv * b.transpose() * grid.mesh();
    Ok(IntegratorOperator::build("projection", grid, None, OperatorMatrix::Dense(m)))
}

impl IntegratorOperator {
    /// Wraps an arbitrary matrix (row `i` = output cell `i`).
    pub fn from_matrix(name: &str, grid: Grid, alpha: Option<f64>, matrix: DMatrix<f64>) -> Result<Self> {
        let n = grid.n_steps();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(invalid(format!(
                "matrix is {}x{}, grid has {n} cells",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(invalid("operator matrix has non-finite entries"));
        }
        Ok(Self::build(name, grid, alpha, OperatorMatrix::Dense(matrix)))
    }

    fn build(name: &str, grid: Grid, alpha: Option<f64>, matrix: OperatorMatrix) -> Self {
        let mut op = Self {
            name: name.to_string(),
            grid,
            alpha,
            matrix,
            sigma_sq: Vec::new(),
            operator_norm_est: 0.0,
            inverse_norm_est: None,
        };
        op.sigma_sq = op.compute_sigma_sq();
        let (norm, inverse) = op.compute_norms();
        op.operator_norm_est = norm;
        op.inverse_norm_est = inverse;
        op
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn matrix(&self) -> &OperatorMatrix {
        &self.matrix
    }

    /// `σ²(t_j) = ‖A·1_[0,t_j]‖²` for `j = 0..=n`.
    pub fn sigma_sq(&self) -> &[f64] {
        &self.sigma_sq
    }

    pub fn sigma_sq_at(&self, t: f64) -> Result<f64> {
        Ok(self.sigma_sq[self.grid.index_of(t)?])
    }

    pub fn operator_norm_est(&self) -> f64 {
        self.operator_norm_est
    }

    pub fn inverse_norm_est(&self) -> Option<f64> {
        self.inverse_norm_est
    }

    pub fn is_invertible(&self) -> bool {
        self.inverse_norm_est.is_some()
    }

    /// Whether `x(t)` depends only on the noise before `t` (upper-triangular matrix).
    pub fn is_adapted(&self) -> bool {
        match &self.matrix {
            OperatorMatrix::ScaledIdentity(_) => true,
            OperatorMatrix::Bridge => self.grid.n_steps() == 1,
            OperatorMatrix::Dense(m) => (0..m.nrows()).all(|i| (0..i).all(|j| m[(i, j)] == 0.0)),
        }
    }

    /// Whether `σ²` is nondecreasing over the grid points up to index `j_max`.
    pub fn sigma_sq_nondecreasing_to(&self, j_max: usize) -> bool {
        self.sigma_sq[..=j_max.min(self.grid.n_steps())].windows(2).all(|w| w[1] >= w[0] - 1e-14)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.grid.n_steps();
        match &self.matrix {
            OperatorMatrix::ScaledIdentity(c) => DMatrix::identity(n, n) * *c,
            OperatorMatrix::Bridge => {
                let h = self.grid.mesh();
                DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 - h } else { -h })
            }
            OperatorMatrix::Dense(m) => m.clone(),
        }
    }

    /// `M·v` on raw cell values.
    pub fn apply_values(&self, v: &[f64]) -> Vec<f64> {
        match &self.matrix {
            OperatorMatrix::ScaledIdentity(c) => v.iter().map(|x| c * x).collect(),
            OperatorMatrix::Bridge => bridge(v, self.grid.mesh()),
            OperatorMatrix::Dense(m) => (m * DVector::from_column_slice(v)).data.into(),
        }
    }

    /// `Mᵀ·v` on raw cell values; this is the adjoint in the step-function inner product.
    pub fn apply_transpose_values(&self, v: &[f64]) -> Vec<f64> {
        match &self.matrix {
            OperatorMatrix::ScaledIdentity(c) => v.iter().map(|x| c * x).collect(),
            OperatorMatrix::Bridge => bridge(v, self.grid.mesh()),
            OperatorMatrix::Dense(m) => (m.tr_mul(&DVector::from_column_slice(v))).data.into(),
        }
    }

    pub fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        self.grid.ensure_same(&f.grid())?;
        StepFunction::new(self.grid, self.apply_values(f.values()))
    }

    pub fn adjoint_apply(&self, f: &StepFunction) -> Result<StepFunction> {
        self.grid.ensure_same(&f.grid())?;
        StepFunction::new(self.grid, self.apply_transpose_values(f.values()))
    }

    /// `A·1_[0,t_j]` as raw cell values.
    pub fn transformed_indicator(&self, j: usize) -> Vec<f64> {
        let n = self.grid.n_steps();
        let mut e = vec![0.0; n];
        e[..j.min(n)].iter_mut().for_each(|v| *v = 1.0);
        self.apply_values(&e)
    }

    /// `(A·1_[0,s], A·1_[0,t])` for grid times `s`, `t`.
    pub fn covariance(&self, s: f64, t: f64) -> Result<f64> {
        let (i, j) = (self.grid.index_of(s)?, self.grid.index_of(t)?);
        Ok(self.covariance_index(i, j))
    }

    pub fn covariance_index(&self, i: usize, j: usize) -> f64 {
        let h = self.grid.mesh();
        match &self.matrix {
            OperatorMatrix::ScaledIdentity(c) => c * c * self.grid.time(i.min(j)),
            OperatorMatrix::Bridge => {
                let (s, t) = (self.grid.time(i), self.grid.time(j));
                s.min(t) - s * t
            }
            OperatorMatrix::Dense(_) => {
                let a = self.transformed_indicator(i);
                let b = self.transformed_indicator(j);
                h * a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>()
            }
        }
    }

    /// Covariance matrix of `(x(t_1), …, x(t_n))`.
    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        let n = self.grid.n_steps();
        let h = self.grid.mesh();
        let dense = self.to_dense();
        // Column j of the cumulative matrix is A·1_[0,t_{j+1}].
        let mut cumulative = DMatrix::zeros(n, n);
        let mut running = DVector::zeros(n);
        for j in 0..n {
            running += dense.column(j);
            cumulative.set_column(j, &running);
        }
        cumulative.tr_mul(&cumulative) * h
    }

    fn compute_sigma_sq(&self) -> Vec<f64> {
        let n = self.grid.n_steps();
        let h = self.grid.mesh();
        match &self.matrix {
            OperatorMatrix::ScaledIdentity(c) => (0..=n).map(|j| c * c * self.grid.time(j)).collect(),
            OperatorMatrix::Bridge => (0..=n)
                .map(|j| {
                    let t = self.grid.time(j);
                    t - t * t
                })
                .collect(),
            OperatorMatrix::Dense(m) => {
                let mut out = Vec::with_capacity(n + 1);
                out.push(0.0);
                let mut running = DVector::zeros(n);
                for j in 0..n {
                    running += m.column(j);
                    out.push(h * running.norm_squared());
                }
                out
            }
        }
    }

    fn compute_norms(&self) -> (f64, Option<f64>) {
        let n = self.grid.n_steps();
        match &self.matrix {
            OperatorMatrix::ScaledIdentity(c) => {
                let inv = if *c != 0.0 { Some(1.0 / c.abs()) } else { None };
                (c.abs(), inv)
            }
            OperatorMatrix::Bridge => (if n > 1 { 1.0 } else { 0.0 }, None),
            OperatorMatrix::Dense(m) if n <= EXACT_SPECTRUM_LIMIT => {
                let eig = m.tr_mul(m).symmetric_eigen();
                let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
                let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
                let norm = max.sqrt();
                let inverse = if max > 0.0 && min > max * 1e-12 {
                    Some(1.0 / min.sqrt()).filter(|v| *v <= INVERSE_NORM_CAP)
                } else {
                    None
                };
                (norm, inverse)
            }
            OperatorMatrix::Dense(m) => {
                let norm = power_norm(|v| m.tr_mul(&(m * v)), n, POWER_ITERATIONS).sqrt();
                (norm, inverse_norm_power(m))
            }
        }
    }
}

fn bridge(v: &[f64], h: f64) -> Vec<f64> {
    let mean = h * v.iter().sum::<f64>();
    v.iter().map(|x| x - mean).collect()
}

/// Deterministic, non-degenerate start vector for power iterations.
pub(crate) fn probe_start(n: usize) -> DVector<f64> {
    DVector::from_fn(n, |i, _| {
        let x = ((i as f64 + 1.0) * 0.618_033_988_749_894_8).fract();
        0.5 + x
    })
}

/// Largest eigenvalue of the positive semidefinite map `apply`, by power iteration.
/// Returns the running maximum of the Rayleigh quotients.
pub(crate) fn power_norm(apply: impl Fn(&DVector<f64>) -> DVector<f64>, n: usize, iterations: usize) -> f64 {
    let mut v = probe_start(n);
    v /= v.norm();
    let mut best: f64 = 0.0;
    for _ in 0..iterations {
        let w = apply(&v);
        let rayleigh = v.dot(&w);
        best = best.max(rayleigh);
        let norm = w.norm();
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        v = w / norm;
    }
    best
}

fn inverse_norm_power(m: &DMatrix<f64>) -> Option<f64> {
    let n = m.nrows();
    let upper = (0..n).all(|i| (0..i).all(|j| m[(i, j)] == 0.0));
    let (lu, lu_t) = if upper { (None, None) } else { (Some(m.clone().lu()), Some(m.transpose().lu())) };
    // (MᵀM)^{-1} v = M^{-1} M^{-T} v.
    let solve = |v: &DVector<f64>| -> Option<DVector<f64>> {
        if upper {
            let y = m.transpose().solve_lower_triangular(v)?;
            m.solve_upper_triangular(&y)
        } else {
            let y = lu_t.as_ref()?.solve(v)?;
            lu.as_ref()?.solve(&y)
        }
    };
    let mut v = probe_start(n);
    v /= v.norm();
    let mut best: f64 = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let w = solve(&v)?;
        if w.iter().any(|x| !x.is_finite()) {
            return None;
        }
        best = best.max(v.dot(&w));
        let norm = w.norm();
        if norm == 0.0 {
            break;
        }
        v = w / norm;
    }
    let est = best.sqrt();
    (est.is_finite() && est <= INVERSE_NORM_CAP).then_some(est)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    #[test]
    fn identity_examples() {
        let g = grid(4);
        let op = make_identity_op(g);
        let f = StepFunction::indicator_to(g, 2).unwrap();
        assert_eq!(op.apply(&f).unwrap(), f);
        assert_eq!(op.sigma_sq_at(0.25).unwrap(), 0.25);
        assert_eq!(op.covariance(0.25, 0.75).unwrap(), 0.25);
        assert_eq!(op.operator_norm_est(), 1.0);
        assert_eq!(op.inverse_norm_est(), Some(1.0));
        for (j, s) in op.sigma_sq().iter().enumerate() {
            assert_eq!(*s, g.time(j));
        }
    }

    #[test]
    fn bridge_examples() {
        let g = grid(2);
        let op = make_bridge_op(g);
        let f = StepFunction::indicator_to(g, 1).unwrap();
        assert_eq!(op.apply(&f).unwrap().values(), &[0.5, -0.5]);
        let one = StepFunction::constant(g, 1.0);
        assert!(op.apply(&one).unwrap().values().iter().all(|v| v.abs() < 1e-15));
        let g = grid(16);
        let op = make_bridge_op(g);
        assert!((op.sigma_sq_at(0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!((op.covariance(0.25, 0.75).unwrap() - (0.25 - 0.25 * 0.75)).abs() < 1e-15);
        // Dense evaluation of the same covariance agrees.
        let dense = IntegratorOperator::from_matrix("dense_bridge", g, None, op.to_dense()).unwrap();
        assert!((dense.covariance(0.25, 0.75).unwrap() - op.covariance(0.25, 0.75).unwrap()).abs() < 1e-14);
        assert!((dense.operator_norm_est() - 1.0).abs() < 1e-12);
        assert_eq!(op.operator_norm_est(), 1.0);
        assert!(op.inverse_norm_est().is_none());
        assert!(dense.inverse_norm_est().is_none());
    }

    #[test]
    fn fbm_examples() {
        let g = grid(1024);
        let op = make_fbm_op(g, 0.75).unwrap();
        assert!((op.sigma_sq_at(1.0).unwrap() - 1.0).abs() < 1e-6);
        for &t in &[0.125, 0.25, 0.5, 0.75] {
            let want = f64::powf(t, 1.5);
            assert!((op.sigma_sq_at(t).unwrap() - want).abs() <= 0.01 * want);
        }
        let expected = 0.5 * (0.25f64.powf(1.5) + 1.0 - 0.75f64.powf(1.5));
        assert!((op.covariance(0.25, 1.0).unwrap() - expected).abs() < 1e-4);
        assert!((expected - 0.23776).abs() < 5e-5);
        assert!(op.is_adapted());
        assert!(make_fbm_op(g, 0.5).is_err());
        assert!(make_fbm_op(g, 1.0).is_err());
        let g = grid(64);
        let op = make_fbm_op(g, 0.6).unwrap();
        assert!((op.covariance(0.5, 0.5).unwrap() - 0.5f64.powf(1.2)).abs() < 0.01 * 0.43528);
    }

    #[test]
    fn fbm_sigma_is_monotone_and_bounded_below() {
        let g = grid(128);
        for alpha in [0.6, 0.7, 0.75, 0.9] {
            let op = make_fbm_op(g, alpha).unwrap();
            assert!(op.sigma_sq_nondecreasing_to(g.n_steps()));
            let inv = op.inverse_norm_est().expect("fBm operator is invertible");
            for (j, s) in op.sigma_sq().iter().enumerate() {
                assert!(*s >= g.time(j) / (inv * inv) - 1e-12, "alpha={alpha} j={j}");
            }
        }
    }

    #[test]
    fn projection_examples() {
        let g = grid(8);
        let p = make_projection_op(g, &[StepFunction::constant(g, 1.0)]).unwrap();
        for i in 0..=8 {
            for j in 0..=8 {
                let (s, t) = (g.time(i), g.time(j));
                assert!((p.covariance(s, t).unwrap() - s * t).abs() < 1e-14);
            }
        }
        let cells: Vec<StepFunction> = (0..8).map(|i| StepFunction::indicator_between(g, i, i + 1).unwrap()).collect();
        let full = make_projection_op(g, &cells).unwrap();
        let diff = full.to_dense() - DMatrix::<f64>::identity(8, 8);
        assert!(diff.amax() < 1e-12);
        let empty = make_projection_op(g, &[]).unwrap();
        assert!(empty.sigma_sq().iter().all(|s| *s == 0.0));
        let dup = [StepFunction::constant(g, 1.0), StepFunction::constant(g, 2.0)];
        assert!(make_projection_op(g, &dup).is_err());
        assert!(p.inverse_norm_est().is_none());
    }

    #[test]
    fn covariance_matrix_is_psd_and_matches_pointwise() {
        let g = grid(32);
        for op in [make_identity_op(g), make_bridge_op(g), make_fbm_op(g, 0.7).unwrap()] {
            let c = op.covariance_matrix();
            for i in 1..=32 {
                for j in 1..=32 {
                    assert!((c[(i - 1, j - 1)] - op.covariance_index(i, j)).abs() < 1e-12);
                }
            }
            let min = c.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min >= -1e-10, "{}: {min}", op.name());
        }
    }

    #[test]
    fn large_dense_uses_power_iteration() {
        let g = grid(600);
        let op = make_fbm_op(g, 0.75).unwrap();
        let small = make_fbm_op(grid(512), 0.75).unwrap();
        assert!((op.operator_norm_est() - small.operator_norm_est()).abs() < 0.01);
        let inv = op.inverse_norm_est().unwrap();
        assert!(inv.is_finite() && inv > 1.0);
    }

    #[test]
    fn rejects_bad_matrices() {
        let g = grid(3);
        assert!(IntegratorOperator::from_matrix("x", g, None, DMatrix::zeros(2, 3)).is_err());
        let mut m = DMatrix::identity(3, 3);
        m[(0, 1)] = f64::NAN;
        assert!(IntegratorOperator::from_matrix("x", g, None, m).is_err());
        let f = StepFunction::zero(grid(4));
        assert!(make_identity_op(g).apply(&f).is_err());
    }
}
