//! Itô–Wiener expansion of the integrator local time.
//!
//! The `n`-th term at level `u` is
//! `(1/n!) ∫ H_n(u/σ(t)) p_{σ(t)²}(u) H_n(x(t)/σ(t)) dt`, an `n`-fold iterated
//! integral of the kernel `a_n(s) = ∫_{max s}^1 σ^{-n} H_n(u/σ) p_{σ²}(u) dt`.
//! With that normalization `E term_n² = ∫_{ordered simplex} a_n²`, which is what
//! [`kernel_norm_report`] compares against Monte Carlo.
//!
//! Every time integral starts at the first grid point: `σ` vanishes at 0 and the
//! integrand, although integrable, is unbounded there.

use crate::analytic::quadrature::LegendreRule;
use crate::analytic::special::{density, hermite_table, hermite_unchecked};
use crate::error::{invalid, LabError, Result};
use crate::operator::{IntegratorOperator, StepFunction};
use crate::sim::{map_paths, McEstimate, PathSample, WhiteNoiseSample};

/// `sup_x |H_n(x) e^{-x²/4}| / √n!` over `n ∈ 1..=50`, `x ∈ [-20, 20]`.
/// Attained at `n = 1`, `x = √2`.
pub const HERMITE_SUP_QUARTER: f64 = 0.857_763_884_9;

/// `sup_x |H_n(x) e^{-x²/2}| / (√n! · n^{-1/4})` over `n ∈ 1..=50`, `x ∈ [-20, 20]`.
pub const HERMITE_SUP_HALF: f64 = 0.891_013_669_7;

/// `4 c² / 2π` with `c = HERMITE_SUP_HALF`: the constant in the kernel-norm bound.
pub const KERNEL_BOUND_CONSTANT: f64 = 0.505_415_849_3;

/// Largest order [`kernel_norm_report`] accepts.
pub const MAX_REPORT_ORDER: usize = 6;

/// Largest truncation order for [`gamma_on_exponential`].
pub const MAX_GAMMA_ORDER: usize = 30;

const CELL_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChaosTermValue {
    pub order: usize,
    pub u: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelNormReport {
    pub order: usize,
    pub u: f64,
    /// `∫_{ordered simplex} a_n²`.
    pub quadrature_value: f64,
    /// Monte Carlo estimate of `E term_n²`.
    pub mc_variance: McEstimate,
    pub bound_value: f64,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn check_path(op: &IntegratorOperator, path: &PathSample) -> Result<()> {
    op.grid().ensure_same(&path.grid())?;
    if path.op_name() != op.name() {
        return Err(invalid(format!("path was built from '{}', not '{}'", path.op_name(), op.name())));
    }
    Ok(())
}

fn check_first_variance(op: &IntegratorOperator) -> Result<()> {
    let s1 = op.sigma_sq()[1];
    if !(s1 > 0.0) {
        return Err(invalid(format!("'{}' has σ²(t₁) = {s1}; the expansion needs σ > 0 off the origin", op.name())));
    }
    Ok(())
}

/// Per-cell weights `mesh · H_n(u/σ_j) p_{σ_j²}(u) / n!` for all orders up to
/// `max_order`, so that a path's terms are one weighted sum each.
#[derive(Debug, Clone)]
pub struct ChaosCoefficients {
    u: f64,
    max_order: usize,
    sigma: Vec<f64>,
    /// `weights[n][j]` for `j` in `1..n_steps`.
    weights: Vec<Vec<f64>>,
}

impl ChaosCoefficients {
    pub fn new(op: &IntegratorOperator, max_order: usize, u: f64) -> Result<Self> {
        check_first_variance(op)?;
        if max_order > crate::analytic::HERMITE_MAX_ORDER {
            return Err(invalid(format!("chaos order {max_order} is too large")));
        }
        let n_steps = op.grid().n_steps();
        let mesh = op.grid().mesh();
        let sigma: Vec<f64> = op.sigma_sq()[..n_steps].iter().map(|s| s.sqrt()).collect();
        let mut weights = vec![vec![0.0; n_steps]; max_order + 1];
        let mut h = vec![0.0; max_order + 1];
        for j in 1..n_steps {
            let s = sigma[j];
            hermite_table(u / s, &mut h);
            let p = density(s * s, u);
            for (n, w) in weights.iter_mut().enumerate() {
                w[j] = mesh * h[n] * p / factorial(n);
            }
        }
        Ok(Self { u, max_order, sigma, weights })
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// All terms of orders `0..=max_order` on one path.
    pub fn terms(&self, path: &PathSample) -> Vec<f64> {
        let xs = path.x_values();
        let mut out = vec![0.0; self.max_order + 1];
        let mut h = vec![0.0; self.max_order + 1];
        for j in 1..self.sigma.len() {
            hermite_table(xs[j] / self.sigma[j], &mut h);
            for (n, acc) in out.iter_mut().enumerate() {
                *acc += self.weights[n][j] * h[n];
            }
        }
        out
    }
}

/// The `n`-th summand of the expansion at level `u` on one path.
pub fn chaos_term(op: &IntegratorOperator, path: &PathSample, n: usize, u: f64) -> Result<ChaosTermValue> {
    check_path(op, path)?;
    let coeffs = ChaosCoefficients::new(op, n, u)?;
    Ok(ChaosTermValue { order: n, u, value: coeffs.terms(path)[n] })
}

/// `Σ_{n ≤ max_order}` of the terms.
pub fn chaos_partial_sum(op: &IntegratorOperator, path: &PathSample, max_order: usize, u: f64) -> Result<f64> {
    check_path(op, path)?;
    Ok(ChaosCoefficients::new(op, max_order, u)?.terms(path).iter().sum())
}

/// The kernel integrand `σ^{-n} H_n(u/σ) p_{σ²}(u)` with `σ²` linear on each cell.
struct KernelIntegrand<'a> {
    n: usize,
    u: f64,
    sigma_sq: &'a [f64],
    n_steps: usize,
}

impl KernelIntegrand<'_> {
    fn eval(&self, t: f64) -> f64 {
        let pos = t * self.n_steps as f64;
        let j = (pos.floor() as usize).min(self.n_steps - 1);
        let frac = pos - j as f64;
        let var = self.sigma_sq[j] + frac * (self.sigma_sq[j + 1] - self.sigma_sq[j]);
        let s = var.sqrt();
        s.powi(-(self.n as i32)) * hermite_unchecked(self.n, self.u / s) * density(var, self.u)
    }
}

/// Tail integrals `∫_{t_j}^1` of the kernel integrand for each grid point `j ≥ 1`.
fn kernel_tails(f: &KernelIntegrand, rule: &LegendreRule) -> Vec<f64> {
    let n = f.n_steps;
    let mesh = 1.0 / n as f64;
    let mut tails = vec![0.0; n + 1];
    for j in (1..n).rev() {
        let a = j as f64 * mesh;
        tails[j] = tails[j + 1] + rule.integrate(|t| f.eval(t), a, a + mesh);
    }
    tails
}

/// `a_n(t_vec)`: integral of the kernel integrand over `[max(t_vec), 1]`,
/// clipped below at the first grid point.
pub fn chaos_kernel(op: &IntegratorOperator, n: usize, u: f64, t_vec: &[f64]) -> Result<f64> {
    if n == 0 {
        return Err(invalid("chaos kernels start at order 1"));
    }
    if t_vec.len() != n {
        return Err(invalid(format!("order-{n} kernel needs {n} times, got {}", t_vec.len())));
    }
    check_first_variance(op)?;
    let grid = op.grid();
    let mut j_star = 0;
    for &t in t_vec {
        j_star = j_star.max(grid.index_of(t)?);
    }
    let f = KernelIntegrand { n, u, sigma_sq: op.sigma_sq(), n_steps: grid.n_steps() };
    let tails = kernel_tails(&f, &LegendreRule::new(CELL_NODES));
    Ok(tails[j_star.max(1)])
}

/// `∫_{ordered simplex} a_n² = ∫ s^{n-1}/(n-1)! · a_n(s,…,s)² ds` over `[t_1, 1]`.
pub fn kernel_simplex_norm(op: &IntegratorOperator, n: usize, u: f64) -> Result<f64> {
    if n == 0 {
        return Err(invalid("chaos kernels start at order 1"));
    }
    check_first_variance(op)?;
    let n_steps = op.grid().n_steps();
    let mesh = op.grid().mesh();
    let f = KernelIntegrand { n, u, sigma_sq: op.sigma_sq(), n_steps };
    let rule = LegendreRule::new(CELL_NODES);
    let tails = kernel_tails(&f, &rule);
    let norm = factorial(n - 1);
    let mut total = 0.0;
    for j in 1..n_steps {
        let (a, b) = (j as f64 * mesh, (j + 1) as f64 * mesh);
        total += rule.integrate(
            |s| {
                let kernel = tails[j + 1] + rule.integrate(|t| f.eval(t), s, b);
                s.powi(n as i32 - 1) / norm * kernel * kernel
            },
            a,
            b,
        );
    }
    Ok(total)
}

/// Upper bound on `∫_{ordered simplex} a_n²` for an invertible operator with
/// `‖A‖ ≤ 1`; infinite at `n = 1`.
pub fn kernel_norm_bound(n: usize, inverse_norm: f64) -> f64 {
    if n <= 1 {
        return f64::INFINITY;
    }
    let nf = n as f64;
    KERNEL_BOUND_CONSTANT * nf.sqrt() * inverse_norm.powi(2 * n as i32 + 2) / ((nf - 1.0) * (nf - 1.0))
        * (1.0 + 1.0 / nf - 4.0 / (nf + 1.0))
}

/// Simplex norm of `a_n`, the Monte Carlo second moment of the `n`-th term and
/// the analytic bound, side by side.
pub fn kernel_norm_report(
    op: &IntegratorOperator,
    n: usize,
    u: f64,
    mc_paths: usize,
    seed: u64,
) -> Result<KernelNormReport> {
    if n == 0 || n > MAX_REPORT_ORDER {
        return Err(invalid(format!("kernel reports cover orders 1..={MAX_REPORT_ORDER}, got {n}")));
    }
    let inverse_norm = op
        .inverse_norm_est()
        .ok_or_else(|| invalid(format!("'{}' is not invertible", op.name())))?;
    let quadrature_value = kernel_simplex_norm(op, n, u)?;
    let coeffs = ChaosCoefficients::new(op, n, u)?;
    let squares = map_paths(op, mc_paths, seed, |p| Ok(coeffs.terms(p)[n].powi(2)))?;
    Ok(KernelNormReport {
        order: n,
        u,
        quadrature_value,
        mc_variance: McEstimate::from_samples(&squares)?,
        bound_value: kernel_norm_bound(n, inverse_norm),
    })
}

/// Which image of `h` second quantization is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `Γ(B)ℰ(h) = ℰ(Bh)`.
    Forward,
    /// `Γ(B)ℰ(h) = ℰ(B*h)`.
    Adjoint,
}

/// `Σ_{n ≤ N} (1/n!) sⁿ H_n(y/s)` via the variance-scaled Hermite recurrence,
/// which stays finite as `s → 0`.
pub fn truncated_exponential_series(y: f64, s_sq: f64, max_order: usize) -> f64 {
    let (mut prev, mut cur) = (1.0, y);
    let mut total = 1.0;
    let mut fact = 1.0;
    for n in 1..=max_order {
        fact *= n as f64;
        total += cur / fact;
        let next = y * cur - n as f64 * s_sq * prev;
        prev = cur;
        cur = next;
    }
    total
}

fn check_contraction(op_b: &IntegratorOperator) -> Result<()> {
    let norm = op_b.operator_norm_est();
    if norm > 1.0 + 1e-9 {
        return Err(invalid(format!("second quantization needs ‖B‖ ≤ 1, '{}' has {norm}", op_b.name())));
    }
    Ok(())
}

fn transformed(op_b: &IntegratorOperator, h: &StepFunction, orientation: Orientation) -> Result<StepFunction> {
    match orientation {
        Orientation::Forward => op_b.apply(h),
        Orientation::Adjoint => op_b.adjoint_apply(h),
    }
}

/// `Γ(B)` applied to the truncated expansion of `ℰ(h)`, and the truncated
/// expansion of `ℰ` at the transformed direction chosen by `orientation`.
///
/// `Γ(B)` is evaluated by substituting the transformed noise `B*ξ` into the
/// Hermite forms of `ℰ(h)`; on the grid `B*ξ` has cell values `Mᵀg`.
pub fn gamma_on_exponential(
    op_b: &IntegratorOperator,
    h: &StepFunction,
    xi: &WhiteNoiseSample,
    max_order: usize,
    orientation: Orientation,
) -> Result<(f64, f64)> {
    if max_order > MAX_GAMMA_ORDER {
        return Err(invalid(format!("truncation order {max_order} exceeds {MAX_GAMMA_ORDER}")));
    }
    check_contraction(op_b)?;
    op_b.grid().ensure_same(&h.grid())?;
    op_b.grid().ensure_same(&xi.grid())?;
    let image_noise = op_b.apply_transpose_values(xi.normals());
    let y = xi.grid().mesh().sqrt() * h.values().iter().zip(&image_noise).map(|(a, g)| a * g).sum::<f64>();
    let image = op_b.apply(h)?;
    let gamma_value = truncated_exponential_series(y, image.norm_sq(), max_order);
    let g = transformed(op_b, h, orientation)?;
    let target = truncated_exponential_series(xi.pair_values(g.values()), g.norm_sq(), max_order);
    Ok((gamma_value, target))
}

/// Relative L² discrepancy between `Γ(B)ℰ(h)` truncated at `max_order` and the
/// full `ℰ` at the transformed direction, over `n_samples` noise draws.
pub fn gamma_discrepancy(
    op_b: &IntegratorOperator,
    h: &StepFunction,
    max_order: usize,
    orientation: Orientation,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    check_contraction(op_b)?;
    let g = transformed(op_b, h, orientation)?;
    let pairs = map_paths(op_b, n_samples, seed, |p| {
        let (gamma, _) = gamma_on_exponential(op_b, h, p.noise(), max_order, orientation)?;
        let full = (p.noise().pair_values(g.values()) - 0.5 * g.norm_sq()).exp();
        Ok((gamma - full, full))
    })?;
    let num: f64 = pairs.iter().map(|(d, _)| d * d).sum();
    let den: f64 = pairs.iter().map(|(_, f)| f * f).sum();
    if den == 0.0 {
        return Err(LabError::Hypothesis("stochastic exponential vanished on every sample".into()));
    }
    Ok((num / den).sqrt())
}

/// Discrepancies of both orientations and the one that fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationReport {
    pub forward: f64,
    pub adjoint: f64,
    pub matches: Orientation,
}

pub fn resolve_orientation(
    op_b: &IntegratorOperator,
    h: &StepFunction,
    max_order: usize,
    n_samples: usize,
    seed: u64,
) -> Result<OrientationReport> {
    let forward = gamma_discrepancy(op_b, h, max_order, Orientation::Forward, n_samples, seed)?;
    let adjoint = gamma_discrepancy(op_b, h, max_order, Orientation::Adjoint, n_samples, seed)?;
    let matches = if forward <= adjoint { Orientation::Forward } else { Orientation::Adjoint };
    Ok(OrientationReport { forward, adjoint, matches })
}
