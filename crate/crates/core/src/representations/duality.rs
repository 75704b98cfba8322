//! Local-time representations checked through the adjoint relation
//! `E[I(Ay)·ℰ(h)] = E[(Ay, h)·ℰ(h)]`, which avoids computing extended
//! integrals pathwise.
//!
//! Two integrands are tested. The integrator representation uses
//! `y(r) = 1_{r<t} ∫_r^t ∂_z p_{σ²(s)-σ²(r)}(x(r) - u) ds`. The minimal-norm one uses
//! `y(r) = 1_{r<t} ∫_r^t σ(v)^{-2} Δ_{u/σ(v)}(x(v)/σ(v)) dv`. Both multiply `A`.
//!
//! The left side is `E[(ℓ_ε - E ℓ_ε)ℰ(h)]` with the exact mean of the grid sum.
//! Its expectation is known in closed form, so the bias left by `ε > 0` is
//! computed exactly and added to the acceptance band.

use super::condition::condition20_check;
use crate::analytic::special::{clark_kernel_span, delta_closed, density, density_dx};
use crate::error::{invalid, LabError, Result};
use crate::operator::{IntegratorOperator, StepFunction};
use crate::sim::{map_paths, McEstimate, PathSample};

/// Relative spread of σ² increments below which σ² counts as linear.
const LINEAR_VARIANCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Integrator,
    MinimalNorm,
}

impl Representation {
    pub fn label(&self) -> &'static str {
        match self {
            Representation::Integrator => "integrator",
            Representation::MinimalNorm => "min_norm",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualityReport {
    pub representation: Representation,
    pub u: f64,
    pub t: f64,
    /// `E[(ℓ_ε - E ℓ_ε)·ℰ(h)]`.
    pub lhs: McEstimate,
    /// `E[(Ay, h)·ℰ(h)]`, on the same paths as `lhs`.
    pub rhs: McEstimate,
    pub discrepancy: f64,
    /// Exact `ε`-bias of the left side.
    pub eps_bias: f64,
    /// `3·√(SE_lhs² + SE_rhs²) + eps_bias`.
    pub tolerance: f64,
    pub pass: bool,
}

impl DualityReport {
    fn new(representation: Representation, u: f64, t: f64, lhs: McEstimate, rhs: McEstimate, eps_bias: f64) -> Self {
        let discrepancy = (lhs.mean - rhs.mean).abs();
        let tolerance = 3.0 * lhs.std_error.hypot(rhs.std_error) + eps_bias;
        Self { representation, u, t, lhs, rhs, discrepancy, eps_bias, tolerance, pass: discrepancy <= tolerance }
    }
}

/// `E‖A y_min‖²` against `E‖A y_int‖²`: the minimal-norm integrand must not be
/// larger on average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimalityComparison {
    pub min_norm: McEstimate,
    pub integrator: McEstimate,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualityBattery {
    pub integrator: Vec<DualityReport>,
    pub min_norm: Vec<DualityReport>,
    pub minimality: Option<MinimalityComparison>,
}

/// `1_[0,1]`, `1_[0,½) - 1_[½,1]` and `√3·t`, all of unit norm.
pub fn standard_test_directions(grid: crate::operator::Grid) -> Vec<(&'static str, StepFunction)> {
    vec![
        ("one", StepFunction::constant(grid, 1.0)),
        ("sign", StepFunction::from_fn(grid, |t| if t < 0.5 { 1.0 } else { -1.0 })),
        ("ramp", StepFunction::from_fn(grid, |t| 3f64.sqrt() * t)),
    ]
}

/// Direction-dependent constants.
struct Probe {
    values: Vec<f64>,
    half_norm_sq: f64,
    /// `A*h` on the cells before `t`.
    adjoint: Vec<f64>,
    eps_bias: f64,
}

struct Setup<'a> {
    op: &'a IntegratorOperator,
    u: f64,
    eps: f64,
    j_end: usize,
    mesh: f64,
    sigma_sq: Vec<f64>,
    sigma: Vec<f64>,
    smoothed_mean: f64,
    /// `Some(slope)` when σ² is linear on `[0, t]`.
    linear_slope: Option<f64>,
    probes: Vec<Probe>,
    integrator: bool,
    min_norm: bool,
}

impl<'a> Setup<'a> {
    fn new(
        op: &'a IntegratorOperator,
        u: f64,
        t: f64,
        hs: &[StepFunction],
        eps: f64,
        integrator: bool,
        min_norm: bool,
    ) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(invalid(format!("eps must be positive, got {eps}")));
        }
        let grid = op.grid();
        let j_end = grid.index_of(t)?;
        if j_end == 0 {
            return Err(invalid("the duality check needs t > 0"));
        }
        if integrator {
            if !op.sigma_sq_nondecreasing_to(j_end) {
                return Err(LabError::Hypothesis(format!("σ² of '{}' is not nondecreasing on [0, {t}]", op.name())));
            }
            condition20_check(op, t)?;
        }
        if min_norm && !op.is_invertible() {
            return Err(LabError::Hypothesis(format!("'{}' is not invertible", op.name())));
        }
        let sigma_sq = op.sigma_sq()[..=j_end].to_vec();
        if sigma_sq[1..].iter().any(|&s| !(s > 0.0)) {
            return Err(LabError::Hypothesis(format!("σ² of '{}' vanishes after the origin", op.name())));
        }
        let sigma = sigma_sq.iter().map(|s| s.sqrt()).collect();
        let mesh = grid.mesh();
        let smoothed_mean = mesh * sigma_sq[..j_end].iter().map(|s| density(s + eps, u)).sum::<f64>();
        let first = sigma_sq[1] - sigma_sq[0];
        let linear = sigma_sq.windows(2).all(|w| ((w[1] - w[0]) - first).abs() <= LINEAR_VARIANCE_TOL * first);
        let linear_slope = (linear && first > 0.0).then_some(first / mesh);
        let mut probes = Vec::with_capacity(hs.len());
        for h in hs {
            grid.ensure_same(&h.grid())?;
            let adjoint = op.apply_transpose_values(h.values())[..j_end].to_vec();
            // m_j = (A 1_[0,t_j], h) is the shift of x(t_j) under ℰ(h).
            let mut m = 0.0;
            let mut bias = 0.0;
            for j in 0..j_end {
                let s = sigma_sq[j];
                bias += density(s + eps, u - m) - density(s + eps, u);
                if j > 0 {
                    bias -= density(s, u - m) - density(s, u);
                }
                m += mesh * adjoint[j];
            }
            probes.push(Probe {
                values: h.values().to_vec(),
                half_norm_sq: 0.5 * h.norm_sq(),
                adjoint,
                eps_bias: (mesh * bias).abs(),
            });
        }
        Ok(Self {
            op,
            u,
            eps,
            j_end,
            mesh,
            sigma_sq,
            sigma,
            smoothed_mean,
            linear_slope,
            probes,
            integrator,
            min_norm,
        })
    }

    /// Integrator-representation integrand at the cells before `t`.
    fn integrator_integrand(&self, x: &[f64]) -> Vec<f64> {
        let s = &self.sigma_sq;
        let j_end = self.j_end;
        (0..j_end)
            .map(|k| {
                let z = x[k] - self.u;
                if let Some(slope) = self.linear_slope {
                    return clark_kernel_span(z, 0.0, s[j_end] - s[k]) / slope;
                }
                (k..j_end)
                    .map(|m| {
                        let (lo, hi) = (s[m] - s[k], s[m + 1] - s[k]);
                        let inc = s[m + 1] - s[m];
                        if inc > 0.0 {
                            self.mesh / inc * clark_kernel_span(z, lo, hi)
                        } else if lo > 0.0 {
                            self.mesh * density_dx(lo, z)
                        } else {
                            0.0
                        }
                    })
                    .sum()
            })
            .collect()
    }

    /// Minimal-norm integrand `mesh · Σ_{k<j<t} q_j + ½ mesh · q_k` at the cells
    /// before `t`, where `q_j = σ_j^{-2} Δ_{u/σ_j}(x_j/σ_j)` and `q_0 = 0`.
    fn min_norm_integrand(&self, x: &[f64]) -> Vec<f64> {
        let j_end = self.j_end;
        let q: Vec<f64> = (0..j_end)
            .map(|j| {
                if j == 0 {
                    return 0.0;
                }
                let s = self.sigma[j];
                delta_closed(self.u / s, x[j] / s) / self.sigma_sq[j]
            })
            .collect();
        let mut out = vec![0.0; j_end];
        let mut tail = 0.0;
        for k in (0..j_end).rev() {
            out[k] = self.mesh * (tail + 0.5 * q[k]);
            tail += q[k];
        }
        out
    }

    /// `‖A y‖²` with `y` zero from `t` on.
    fn image_norm_sq(&self, y: &[f64]) -> f64 {
        let mut full = y.to_vec();
        full.resize(self.op.grid().n_steps(), 0.0);
        self.mesh * self.op.apply_values(&full).iter().map(|v| v * v).sum::<f64>()
    }

    fn evaluate(&self, path: &PathSample) -> PathValues {
        let x = path.x_values();
        let centred = self.mesh * x[..self.j_end].iter().map(|v| density(self.eps, v - self.u)).sum::<f64>()
            - self.smoothed_mean;
        let y_int = self.integrator.then(|| self.integrator_integrand(x));
        let y_min = self.min_norm.then(|| self.min_norm_integrand(x));
        let mut out = PathValues::default();
        for probe in &self.probes {
            let weight = (path.noise().pair_values(&probe.values) - probe.half_norm_sq).exp();
            out.lhs.push(centred * weight);
            let pair = |y: &[f64]| self.mesh * y.iter().zip(&probe.adjoint).map(|(a, b)| a * b).sum::<f64>();
            if let Some(y) = &y_int {
                out.rhs_int.push(pair(y) * weight);
            }
            if let Some(y) = &y_min {
                out.rhs_min.push(pair(y) * weight);
            }
        }
        if let (Some(a), Some(b)) = (&y_int, &y_min) {
            out.norms = Some((self.image_norm_sq(b), self.image_norm_sq(a)));
        }
        out
    }
}

#[derive(Debug, Default)]
struct PathValues {
    lhs: Vec<f64>,
    rhs_int: Vec<f64>,
    rhs_min: Vec<f64>,
    /// `(‖A y_min‖², ‖A y_int‖²)`.
    norms: Option<(f64, f64)>,
}

fn column<F: Fn(&PathValues) -> f64>(values: &[PathValues], f: F) -> Result<McEstimate> {
    McEstimate::from_samples(&values.iter().map(f).collect::<Vec<_>>())
}

/// Both local-time representations against every direction in `hs`, from a
/// single pass over `n_paths` shared paths.
#[allow(clippy::too_many_arguments)]
pub fn duality_battery(
    op: &IntegratorOperator,
    u: f64,
    t: f64,
    hs: &[StepFunction],
    n_paths: usize,
    eps: f64,
    seed: u64,
    representations: &[Representation],
) -> Result<DualityBattery> {
    let integrator = representations.contains(&Representation::Integrator);
    let min_norm = representations.contains(&Representation::MinimalNorm);
    let setup = Setup::new(op, u, t, hs, eps, integrator, min_norm)?;
    let values = map_paths(op, n_paths, seed, |p| Ok(setup.evaluate(p)))?;
    let mut battery = DualityBattery { integrator: vec![], min_norm: vec![], minimality: None };
    for (i, probe) in setup.probes.iter().enumerate() {
        let lhs = column(&values, |v| v.lhs[i])?;
        if integrator {
            let rhs = column(&values, |v| v.rhs_int[i])?;
            battery.integrator.push(DualityReport::new(Representation::Integrator, u, t, lhs, rhs, probe.eps_bias));
        }
        if min_norm {
            let rhs = column(&values, |v| v.rhs_min[i])?;
            battery.min_norm.push(DualityReport::new(Representation::MinimalNorm, u, t, lhs, rhs, probe.eps_bias));
        }
    }
    if integrator && min_norm {
        let min_est = column(&values, |v| v.norms.map_or(0.0, |n| n.0))?;
        let int_est = column(&values, |v| v.norms.map_or(0.0, |n| n.1))?;
        let pass = min_est.mean <= int_est.mean + 3.0 * min_est.std_error.hypot(int_est.std_error);
        battery.minimality = Some(MinimalityComparison { min_norm: min_est, integrator: int_est, pass });
    }
    Ok(battery)
}

#[allow(clippy::too_many_arguments)]
fn single(
    op: &IntegratorOperator,
    u: f64,
    t: f64,
    h: &StepFunction,
    n_paths: usize,
    eps: f64,
    seed: u64,
    which: Representation,
) -> Result<DualityReport> {
    let b = duality_battery(op, u, t, std::slice::from_ref(h), n_paths, eps, seed, &[which])?;
    let reports = match which {
        Representation::Integrator => b.integrator,
        Representation::MinimalNorm => b.min_norm,
    };
    Ok(reports.into_iter().next().expect("one direction"))
}

/// Duality check of the integrator local-time representation for one direction.
pub fn integrator_lt_duality(
    op: &IntegratorOperator,
    u: f64,
    t: f64,
    h: &StepFunction,
    n_paths: usize,
    eps: f64,
    seed: u64,
) -> Result<DualityReport> {
    single(op, u, t, h, n_paths, eps, seed, Representation::Integrator)
}

/// Duality check of the minimal-norm local-time representation for one direction.
pub fn min_norm_lt_duality(
    op: &IntegratorOperator,
    u: f64,
    t: f64,
    h: &StepFunction,
    n_paths: usize,
    eps: f64,
    seed: u64,
) -> Result<DualityReport> {
    single(op, u, t, h, n_paths, eps, seed, Representation::MinimalNorm)
}
