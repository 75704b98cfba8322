//! The twelve acceptance checks, at desk scale ([`VerifyPlan::full`]) or scaled
//! down to a configuration ([`VerifyPlan::quick`]).

use std::f64::consts::SQRT_2;
use std::fmt::Write as _;
use std::sync::OnceLock;

use integratorlab_core::analytic::quadrature::{integrate, QuadratureSpec};
use integratorlab_core::analytic::{delta_closed, delta_numeric, hermite, TestFunction};
use integratorlab_core::chaos::{
    gamma_discrepancy, kernel_norm_report, kernel_simplex_norm, resolve_orientation, ChaosCoefficients, Orientation,
};
use integratorlab_core::local_time::local_time_eps;
use integratorlab_core::operator::{
    integrator_ratio, make_bridge_op, make_fbm_op, make_identity_op, make_projection_op, schur_bound, Grid,
    IntegratorOperator, StepFunction,
};
use integratorlab_core::representations::{
    duality_battery, min_norm_integrand_1d, min_norm_via_ou, standard_test_directions, verify_clark_1d,
    wiener_lt_clark_residual, wiener_lt_drift_check, DriftCheck, DualityBattery, Representation, ResidualReport,
};
use integratorlab_core::sim::{map_paths, McEstimate, WhiteNoiseSample};

use crate::config::{ExperimentConfig, OpKind, OpSpec};
use crate::error::{CliError, CliResult};
use crate::report::{fmt_sig, render_csv, CheckOutcome, DualityRow};

pub const CHECK_NAMES: [&str; 12] = [
    "delta closed form vs quadrature",
    "minimal-norm coefficient: closed form vs OU route",
    "Hermite orthogonality",
    "Clark representation of f(w(1))",
    "Clark representation of Wiener local time",
    "integrator representation duality",
    "minimal-norm representation duality and minimality",
    "chaos expansion of local time",
    "integrator constants",
    "fBm covariance",
    "second quantization on exponentials",
    "determinism",
];

/// One operator and grid of the duality matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityCase {
    pub op: OpSpec,
    pub n_steps: usize,
}

/// Sizes, seeds and thresholds for every check.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyPlan {
    pub delta_points: usize,
    pub clark_grids: Vec<usize>,
    pub clark_paths: usize,
    pub clark_seed: u64,
    pub lt_grids: Vec<usize>,
    pub lt_paths: usize,
    pub lt_eps: f64,
    /// Bound on the mean-square residual on the finest grid; `None` checks the
    /// decrease and the drift only.
    pub lt_bound: Option<f64>,
    pub lt_seed: u64,
    pub duality_cases: Vec<DualityCase>,
    pub duality_u: Vec<f64>,
    pub duality_t: f64,
    pub duality_h: Vec<String>,
    pub duality_paths: usize,
    pub duality_eps: f64,
    pub duality_seed: u64,
    pub chaos_steps: usize,
    pub chaos_paths: usize,
    pub chaos_eps: f64,
    pub chaos_seed: u64,
    pub ratio_steps: usize,
    pub ratio_trials: usize,
    pub ratio_seed: u64,
    pub covariance_steps: usize,
    pub gamma_steps: usize,
    pub gamma_samples: usize,
    pub gamma_seed: u64,
}

/// `n/16, n/4, n` when `n` is a multiple of 16, otherwise `n` alone.
pub(crate) fn nested_grids(finest: usize) -> Vec<usize> {
    if finest.is_multiple_of(16) {
        vec![finest / 16, finest / 4, finest]
    } else {
        vec![finest]
    }
}

impl VerifyPlan {
    /// Desk-scale plan with pinned seeds.
    pub fn full() -> Self {
        Self {
            delta_points: 61,
            clark_grids: vec![256, 1024, 4096],
            clark_paths: 10_000,
            clark_seed: 2,
            lt_grids: vec![256, 1024, 4096],
            lt_paths: 10_000,
            lt_eps: 1e-3,
            lt_bound: Some(0.02),
            lt_seed: 5,
            duality_cases: vec![
                DualityCase { op: OpSpec::wiener(), n_steps: 1024 },
                DualityCase { op: OpSpec::fbm(0.7), n_steps: 128 },
                DualityCase { op: OpSpec::fbm(0.75), n_steps: 128 },
            ],
            duality_u: vec![0.0, 0.5],
            duality_t: 1.0,
            duality_h: vec!["one".into(), "sign".into(), "ramp".into()],
            duality_paths: 100_000,
            duality_eps: 1e-3,
            duality_seed: 11,
            chaos_steps: 4096,
            chaos_paths: 10_000,
            chaos_eps: 1e-3,
            chaos_seed: 3,
            ratio_steps: 256,
            ratio_trials: 2000,
            ratio_seed: 1,
            covariance_steps: 1024,
            gamma_steps: 64,
            gamma_samples: 4000,
            gamma_seed: 4,
        }
    }

    /// Plan sized by `cfg`: its grid, path count, seed, levels and directions.
    /// Duality runs on the configured operator only.
    pub fn quick(cfg: &ExperimentConfig) -> Self {
        let grids = nested_grids(cfg.n_steps);
        Self {
            delta_points: 61,
            clark_grids: grids.clone(),
            clark_paths: cfg.n_paths,
            clark_seed: cfg.seed,
            lt_grids: grids,
            lt_paths: cfg.n_paths,
            lt_eps: cfg.eps,
            lt_bound: None,
            lt_seed: cfg.seed,
            duality_cases: vec![DualityCase { op: cfg.op, n_steps: cfg.n_steps }],
            duality_u: cfg.u_list.clone(),
            duality_t: cfg.t,
            duality_h: cfg.h_spec.clone(),
            duality_paths: cfg.n_paths,
            duality_eps: cfg.eps,
            duality_seed: cfg.seed,
            chaos_steps: cfg.n_steps,
            chaos_paths: cfg.n_paths,
            chaos_eps: cfg.eps,
            chaos_seed: cfg.seed,
            ratio_steps: cfg.n_steps.min(256),
            ratio_trials: 500,
            ratio_seed: cfg.seed,
            covariance_steps: 1024,
            gamma_steps: 64,
            gamma_samples: cfg.n_paths.min(2000),
            gamma_seed: cfg.seed,
        }
    }
}

/// Duality batteries of one case, one per level.
#[derive(Debug, Clone)]
pub struct CaseResult {
    pub case: DualityCase,
    /// The batteries, or the error message that stopped them.
    pub batteries: Result<Vec<(f64, DualityBattery)>, String>,
}

impl CaseResult {
    /// Rows of one representation, ready for CSV.
    pub fn rows(&self, which: Representation, h_names: &[String]) -> Vec<DualityRow> {
        let Ok(batteries) = &self.batteries else { return Vec::new() };
        let label = self.case.op.to_string();
        batteries
            .iter()
            .flat_map(|(_, b)| {
                let reports = match which {
                    Representation::Integrator => &b.integrator,
                    Representation::MinimalNorm => &b.min_norm,
                };
                reports
                    .iter()
                    .zip(h_names)
                    .map(|(r, h)| DualityRow { op: label.clone(), h: h.clone(), report: r.clone() })
                    .collect::<Vec<_>>()
            })
            .collect()
    }
}

/// Residuals and drift behind the local-time Clark check.
#[derive(Debug, Clone)]
pub struct LtClarkOutcome {
    pub report: ResidualReport,
    pub drift: DriftCheck,
    pub bound: Option<f64>,
}

impl LtClarkOutcome {
    /// The finest residual is within the bound, when one is set.
    pub fn bound_pass(&self) -> bool {
        self.bound.is_none_or(|b| self.report.finest().mean <= b)
    }

    /// Decrease across grids and the drift check.
    pub fn attainable_pass(&self) -> bool {
        self.report.monotone_pass && self.drift.pass
    }

    pub fn detail(&self) -> String {
        let res = self.report.finest();
        let residuals: Vec<String> = self.report.l2_residuals.iter().map(|e| fmt_sig(e.mean)).collect();
        let mut detail = format!("residuals [{}] decreasing={}", residuals.join(" "), self.report.monotone_pass);
        match self.bound {
            Some(b) => write!(detail, "; finest {} ± {} vs bound {b}", fmt_sig(res.mean), fmt_sig(res.std_error)),
            None => write!(detail, "; residual bound not applied at this scale"),
        }
        .expect("writing to a String");
        let d = &self.drift;
        write!(
            detail,
            "; drift mean {} se {} target {} bias bound {} pass={}",
            fmt_sig(d.estimate.mean),
            fmt_sig(d.estimate.std_error),
            fmt_sig(d.target),
            fmt_sig(d.bias_bound),
            d.pass
        )
        .expect("writing to a String");
        detail
    }
}

/// Runs checks against a plan, sharing the duality batteries between the two
/// duality checks.
pub struct Verifier {
    plan: VerifyPlan,
    duality: OnceLock<Vec<CaseResult>>,
    lt_clark: OnceLock<CliResult<LtClarkOutcome>>,
}

fn outcome(id: u8, result: CliResult<(bool, String)>) -> CheckOutcome {
    let (pass, detail) = match result {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    CheckOutcome { id, name: CHECK_NAMES[id as usize - 1], pass, detail }
}

impl Verifier {
    pub fn new(plan: VerifyPlan) -> Self {
        Self { plan, duality: OnceLock::new(), lt_clark: OnceLock::new() }
    }

    pub fn plan(&self) -> &VerifyPlan {
        &self.plan
    }

    /// Runs check `id` in `1..=12`.
    pub fn run(&self, id: u8) -> CheckOutcome {
        let result = match id {
            1 => self.delta_identity(),
            2 => self.min_norm_routes(),
            3 => hermite_orthogonality(),
            4 => self.clark_1d(),
            5 => self.lt_clark(),
            6 => self.integrator_duality(),
            7 => self.min_norm_duality(),
            8 => self.chaos(),
            9 => self.integrator_constants(),
            10 => self.fbm_covariance(),
            11 => self.second_quantization(),
            12 => determinism(),
            _ => panic!("no check with id {id}"),
        };
        outcome(id, result)
    }

    pub fn run_all(&self) -> Vec<CheckOutcome> {
        (1..=12).map(|id| self.run(id)).collect()
    }

    /// The duality batteries, computed on first use.
    pub fn duality_results(&self) -> &[CaseResult] {
        self.duality.get_or_init(|| {
            let p = &self.plan;
            p.duality_cases
                .iter()
                .map(|&case| {
                    let batteries = (|| {
                        let op = case.op.build(case.n_steps)?;
                        let hs = directions(op.grid(), &p.duality_h);
                        p.duality_u
                            .iter()
                            .map(|&u| {
                                let b = duality_battery(
                                    &op,
                                    u,
                                    p.duality_t,
                                    &hs,
                                    p.duality_paths,
                                    p.duality_eps,
                                    p.duality_seed,
                                    &[Representation::Integrator, Representation::MinimalNorm],
                                )?;
                                Ok((u, b))
                            })
                            .collect::<CliResult<Vec<_>>>()
                    })()
                    .map_err(|e| e.to_string());
                    CaseResult { case, batteries }
                })
                .collect()
        })
    }

    fn delta_identity(&self) -> CliResult<(bool, String)> {
        let m = self.plan.delta_points;
        let q = QuadratureSpec::endpoint_singular();
        let at = |k: usize| -3.0 + 6.0 * k as f64 / (m - 1) as f64;
        let mut worst: f64 = 0.0;
        let mut compared = 0;
        for i in 0..m {
            for j in 0..m {
                let (x, y) = (at(i), at(j));
                if (x - y).abs() < 0.05 || (x + y).abs() < 0.05 {
                    continue;
                }
                worst = worst.max((delta_closed(y, x) - delta_numeric(y, x, &q)?).abs());
                compared += 1;
            }
        }
        Ok((worst <= 1e-6, format!("max error {} over {compared} points", fmt_sig(worst))))
    }

    fn min_norm_routes(&self) -> CliResult<(bool, String)> {
        let grid = Grid::new(1)?;
        let g = StepFunction::constant(grid, 1.0);
        let q = QuadratureSpec::precise();
        let fs = [TestFunction::Identity, TestFunction::Square, TestFunction::StepAbove(0.0), TestFunction::StepAbove(1.0)];
        let mut worst: f64 = 0.0;
        for k in 0..10 {
            let xi = WhiteNoiseSample::from_normals(grid, vec![-2.25 + 0.5 * k as f64], 0)?;
            for f in &fs {
                let direct = min_norm_integrand_1d(f, &g, &xi, &q)?;
                let ou = min_norm_via_ou(f, &g, &xi, &q)?;
                worst = worst.max((direct - ou).abs());
            }
        }
        Ok((worst <= 1e-6, format!("max difference {} over 4 functions x 10 noise values", fmt_sig(worst))))
    }

    fn clark_1d(&self) -> CliResult<(bool, String)> {
        let p = &self.plan;
        let square = verify_clark_1d(&TestFunction::Square, &p.clark_grids, p.clark_paths, p.clark_seed)?;
        let step = verify_clark_1d(&TestFunction::StepAbove(0.0), &p.clark_grids, p.clark_paths, p.clark_seed)?;
        let sq = square.finest();
        let pass = sq.mean <= 0.01 && step.monotone_pass;
        let steps: Vec<String> = step.l2_residuals.iter().map(|e| fmt_sig(e.mean)).collect();
        Ok((
            pass,
            format!(
                "square residual {} at n={} (bound 0.01); step residuals [{}] decreasing={}",
                fmt_sig(sq.mean),
                square.grid_sizes.last().copied().unwrap_or(0),
                steps.join(" "),
                step.monotone_pass
            ),
        ))
    }

    /// Parts of the local-time Clark check, computed on first use.
    pub fn lt_clark_outcome(&self) -> Result<&LtClarkOutcome, String> {
        self.lt_clark
            .get_or_init(|| {
                let p = &self.plan;
                let report = wiener_lt_clark_residual(0.0, 1.0, p.lt_paths, &p.lt_grids, p.lt_eps, p.lt_seed)?;
                let finest = *p.lt_grids.iter().max().unwrap_or(&1);
                let drift = wiener_lt_drift_check(0.0, 1.0, finest, p.lt_paths, p.lt_eps, p.lt_seed)?;
                Ok(LtClarkOutcome { report, drift, bound: p.lt_bound })
            })
            .as_ref()
            .map_err(|e: &CliError| e.to_string())
    }

    fn lt_clark(&self) -> CliResult<(bool, String)> {
        let o = self.lt_clark_outcome().map_err(CliError::Suite)?;
        Ok((o.bound_pass() && o.attainable_pass(), o.detail()))
    }

    fn integrator_duality(&self) -> CliResult<(bool, String)> {
        let mut pass = true;
        let mut parts = Vec::new();
        for case in self.duality_results() {
            let batteries = match &case.batteries {
                Ok(b) => b,
                Err(e) => return Ok((false, format!("error: {} n={}: {e}", case.case.op, case.case.n_steps))),
            };
            let reports: Vec<_> = batteries.iter().flat_map(|(_, b)| &b.integrator).collect();
            let failed = reports.iter().filter(|r| !r.pass).count();
            pass &= failed == 0 && !reports.is_empty();
            parts.push(format!("{} n={}: {}/{} pass", case.case.op, case.case.n_steps, reports.len() - failed, reports.len()));
        }
        Ok((pass, parts.join("; ")))
    }

    fn min_norm_duality(&self) -> CliResult<(bool, String)> {
        let mut pass = true;
        let mut parts = Vec::new();
        let mut minimality = None;
        for case in self.duality_results() {
            let batteries = match &case.batteries {
                Ok(b) => b,
                Err(e) => return Ok((false, format!("error: {} n={}: {e}", case.case.op, case.case.n_steps))),
            };
            let reports: Vec<_> = batteries.iter().flat_map(|(_, b)| &b.min_norm).collect();
            let failed = reports.iter().filter(|r| !r.pass).count();
            pass &= failed == 0 && !reports.is_empty();
            parts.push(format!("{} n={}: {}/{} pass", case.case.op, case.case.n_steps, reports.len() - failed, reports.len()));
            if case.case.op.kind == OpKind::Wiener {
                if let Some((_, b)) = batteries.iter().find(|(u, _)| *u == 0.0) {
                    minimality = b.minimality;
                }
            }
        }
        match minimality {
            Some(m) => {
                pass &= m.pass;
                parts.push(format!(
                    "minimality E|Ay_min|^2 {} vs E|Ay_int|^2 {} pass={}",
                    fmt_sig(m.min_norm.mean),
                    fmt_sig(m.integrator.mean),
                    m.pass
                ));
            }
            None => parts.push("minimality not evaluated (needs wiener at u = 0)".into()),
        }
        Ok((pass, parts.join("; ")))
    }

    fn chaos(&self) -> CliResult<(bool, String)> {
        let p = &self.plan;
        let op = make_identity_op(Grid::new(p.chaos_steps)?);
        let coeffs = ChaosCoefficients::new(&op, 8, 0.0)?;
        let eps = p.chaos_eps;
        let rows = map_paths(&op, p.chaos_paths, p.chaos_seed, |path| {
            Ok((coeffs.terms(path), local_time_eps(path, 0.0, 1.0, eps)?.value))
        })?;
        let column = |n: usize| rows.iter().map(|r| r.0[n]).collect::<Vec<f64>>();
        let mut pass = true;
        let mut detail = String::new();
        for n in 1..=4 {
            let sq: Vec<f64> = column(n).iter().map(|v| v * v).collect();
            let mc = McEstimate::from_samples(&sq)?;
            let quad = kernel_simplex_norm(&op, n, 0.0)?;
            let ok = mc.agrees_with(quad, 3.0, 1e-12);
            pass &= ok;
            write!(detail, "E term{n}^2 {} ± {} vs {}; ", fmt_sig(mc.mean), fmt_sig(mc.std_error), fmt_sig(quad))
                .expect("writing to a String");
        }
        let mut tails = Vec::new();
        for big_n in [0usize, 2, 4, 8] {
            let sq: Vec<f64> = rows.iter().map(|r| (r.1 - r.0[..=big_n].iter().sum::<f64>()).powi(2)).collect();
            tails.push(McEstimate::from_samples(&sq)?.mean);
        }
        let tails_ok = tails.windows(2).all(|w| w[1] <= w[0]);
        pass &= tails_ok;
        let shown: Vec<String> = tails.iter().map(|v| fmt_sig(*v)).collect();
        write!(detail, "E(l-S_N)^2 over N=0,2,4,8 [{}] nonincreasing={tails_ok}; ", shown.join(" "))
            .expect("writing to a String");
        let mut cov_ok = true;
        for m in 1..=4 {
            for n in m + 1..=4 {
                let c = McEstimate::covariance(&column(m), &column(n))?;
                cov_ok &= c.agrees_with(0.0, 3.0, 1e-12);
            }
        }
        pass &= cov_ok;
        write!(detail, "cross-order covariances null={cov_ok}").expect("writing to a String");
        Ok((pass, detail))
    }

    fn integrator_constants(&self) -> CliResult<(bool, String)> {
        let p = &self.plan;
        let grid = Grid::new(p.ratio_steps)?;
        let wiener = integrator_ratio(&make_identity_op(grid), p.ratio_trials, p.ratio_seed)?;
        let bridge = integrator_ratio(&make_bridge_op(grid), p.ratio_trials, p.ratio_seed)?;
        let alpha = 0.75;
        let fbm = integrator_ratio(&make_fbm_op(grid, alpha)?, p.ratio_trials, p.ratio_seed)?;
        let density = |s: f64, t: f64| alpha * (2.0 * alpha - 1.0) * (s - t).abs().powf(2.0 * alpha - 2.0);
        let schur = schur_bound(density, |_| 1.0, |_| 1.0, Grid::new(64)?)?;
        let pass = (wiener - 1.0).abs() <= 1e-12 && bridge <= 4.0 && fbm <= schur;
        Ok((
            pass,
            format!(
                "wiener {} (want 1); bridge {} (bound 4); fbm(0.75) {} (Schur bound {})",
                fmt_sig(wiener),
                fmt_sig(bridge),
                fmt_sig(fbm),
                fmt_sig(schur)
            ),
        ))
    }

    fn fbm_covariance(&self) -> CliResult<(bool, String)> {
        let grid = Grid::new(self.plan.covariance_steps)?;
        // Grid points nearest to 0.2, 0.4, ..., 1.0; the exact covariance is
        // evaluated at the same points.
        let n = grid.n_steps();
        let times: Vec<f64> = (1..=5).map(|k| grid.time(((k * n) as f64 / 5.0).round() as usize)).collect();
        let mut worst: f64 = 0.0;
        for alpha in [0.6, 0.75] {
            let op = make_fbm_op(grid, alpha)?;
            let a2 = 2.0 * alpha;
            for &s in &times {
                for &t in &times {
                    let exact = 0.5 * (s.powf(a2) + t.powf(a2) - (t - s).abs().powf(a2));
                    let built = op.covariance(s, t)?;
                    worst = worst.max((built - exact).abs() / exact);
                }
            }
        }
        Ok((worst <= 0.01, format!("max relative error {} over 2 x 25 pairs", fmt_sig(worst))))
    }

    fn second_quantization(&self) -> CliResult<(bool, String)> {
        let p = &self.plan;
        let grid = Grid::new(p.gamma_steps)?;
        let identity = make_identity_op(grid);
        let complement = make_projection_op(grid, &[StepFunction::constant(grid, 1.0)])?;
        let mut worst: f64 = 0.0;
        for b in [&identity, &complement] {
            for (_, h) in standard_test_directions(grid) {
                let d = gamma_discrepancy(b, &h, 12, Orientation::Forward, p.gamma_samples, p.gamma_seed)?;
                worst = worst.max(d);
            }
        }
        let contraction = fbm_contraction(grid)?;
        let half = StepFunction::indicator_to(grid, p.gamma_steps / 2)?.scaled(SQRT_2);
        let o = resolve_orientation(&contraction, &half, 12, p.gamma_samples, p.gamma_seed)?;
        let pinned = o.matches == Orientation::Forward && o.forward < 1e-6 && o.adjoint > 0.1;
        Ok((
            worst <= 1e-3 && pinned,
            format!(
                "max relative L2 discrepancy {} at N=12; orientation forward {} adjoint {} -> {:?}",
                fmt_sig(worst),
                fmt_sig(o.forward),
                fmt_sig(o.adjoint),
                o.matches
            ),
        ))
    }
}

fn directions(grid: Grid, names: &[String]) -> Vec<StepFunction> {
    let all = standard_test_directions(grid);
    names.iter().filter_map(|n| all.iter().find(|(m, _)| m == n).map(|(_, h)| h.clone())).collect()
}

/// fBm(0.75) scaled to unit norm, a non-self-adjoint contraction.
fn fbm_contraction(grid: Grid) -> CliResult<IntegratorOperator> {
    let fbm = make_fbm_op(grid, 0.75)?;
    let scaled = fbm.to_dense() / fbm.operator_norm_est();
    Ok(IntegratorOperator::from_matrix("fbm-contraction", grid, None, scaled)?)
}

fn hermite_orthogonality() -> CliResult<(bool, String)> {
    let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
    let breaks: Vec<f64> = (-12..=12).map(f64::from).collect();
    let mut worst_ratio: f64 = 0.0;
    for n in 0..=12 {
        for m in 0..=n {
            let tol = 1e-8 * fact(m).max(1.0);
            // The quadrature gets 1% of the budget; roundoff grows with n!.
            let q = QuadratureSpec::precise().with_tolerance(0.01 * tol)?;
            let value = integrate(
                |x| {
                    let p = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
                    hermite(n, x).unwrap_or(f64::NAN) * hermite(m, x).unwrap_or(f64::NAN) * p
                },
                -13.0,
                13.0,
                &breaks,
                &q,
            )?;
            let exact = if n == m { fact(n) } else { 0.0 };
            worst_ratio = worst_ratio.max((value - exact).abs() / tol);
        }
    }
    Ok((worst_ratio <= 1.0, format!("worst error / tolerance {}", fmt_sig(worst_ratio))))
}

/// CSV bytes of a small duality battery and chaos report.
fn determinism_probe() -> CliResult<Vec<u8>> {
    let op = make_identity_op(Grid::new(64)?);
    let names: Vec<String> = ["one", "sign", "ramp"].iter().map(|s| s.to_string()).collect();
    let hs = directions(op.grid(), &names);
    let b = duality_battery(&op, 0.0, 1.0, &hs, 300, 1e-2, 17, &[Representation::Integrator, Representation::MinimalNorm])?;
    let case = CaseResult { case: DualityCase { op: OpSpec::wiener(), n_steps: 64 }, batteries: Ok(vec![(0.0, b)]) };
    let mut bytes = render_csv(&case.rows(Representation::Integrator, &names));
    bytes.extend(render_csv(&case.rows(Representation::MinimalNorm, &names)));
    bytes.extend(render_csv(&[kernel_norm_report(&op, 2, 0.0, 300, 17)?]));
    Ok(bytes)
}

/// Runs the probe twice, and under several worker counts when parallel.
fn determinism() -> CliResult<(bool, String)> {
    let first = determinism_probe()?;
    #[cfg_attr(not(feature = "parallel"), allow(unused_mut))]
    let mut runs = vec![("repeat".to_string(), determinism_probe()?)];
    #[cfg(feature = "parallel")]
    for workers in [1, 3] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::Suite(format!("thread pool: {e}")))?;
        runs.push((format!("{workers} workers"), pool.install(determinism_probe)?));
    }
    let differing: Vec<&str> = runs.iter().filter(|(_, b)| *b != first).map(|(n, _)| n.as_str()).collect();
    let labels: Vec<&str> = runs.iter().map(|(n, _)| n.as_str()).collect();
    Ok((
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} bytes identical across runs ({})", first.len(), labels.join(", "))
        } else {
            format!("output differs for: {}", differing.join(", "))
        },
    ))
}
