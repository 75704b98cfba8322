//! Experiment configuration: a plain `key = value` file with flag overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use integratorlab_core::operator::{
    make_bridge_op, make_fbm_op, make_identity_op, make_projection_op, Grid, IntegratorOperator, StepFunction,
};
use integratorlab_core::representations::standard_test_directions;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Wiener,
    Bridge,
    Fbm,
    /// Projection onto constants, the complement of the bridge.
    Projection,
}

impl OpKind {
    pub fn label(self) -> &'static str {
        match self {
            OpKind::Wiener => "wiener",
            OpKind::Bridge => "bridge",
            OpKind::Fbm => "fbm",
            OpKind::Projection => "projection",
        }
    }
}

impl FromStr for OpKind {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "wiener" | "identity" => Ok(OpKind::Wiener),
            "bridge" => Ok(OpKind::Bridge),
            "fbm" => Ok(OpKind::Fbm),
            "projection" => Ok(OpKind::Projection),
            other => Err(CliError::Config(format!(
                "unknown operator '{other}' (expected wiener, bridge, fbm or projection)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpSpec {
    pub kind: OpKind,
    pub alpha: Option<f64>,
}

impl OpSpec {
    pub fn wiener() -> Self {
        Self { kind: OpKind::Wiener, alpha: None }
    }

    pub fn fbm(alpha: f64) -> Self {
        Self { kind: OpKind::Fbm, alpha: Some(alpha) }
    }

    /// Builds the operator on `n_steps` cells.
    pub fn build(&self, n_steps: usize) -> CliResult<IntegratorOperator> {
        let grid = Grid::new(n_steps)?;
        let op = match self.kind {
            OpKind::Wiener => make_identity_op(grid),
            OpKind::Bridge => make_bridge_op(grid),
            OpKind::Fbm => make_fbm_op(grid, self.alpha.unwrap_or_default())?,
            OpKind::Projection => make_projection_op(grid, &[StepFunction::constant(grid, 1.0)])?,
        };
        Ok(op)
    }
}

impl fmt::Display for OpSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.alpha {
            Some(a) => write!(f, "{}(alpha={a})", self.kind.label()),
            None => f.write_str(self.kind.label()),
        }
    }
}

/// Names of the unit-norm test directions accepted in `h`.
pub const TEST_DIRECTIONS: [&str; 3] = ["one", "sign", "ramp"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub op: OpSpec,
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub u_list: Vec<f64>,
    pub t: f64,
    pub eps: f64,
    pub h_spec: Vec<String>,
    pub output_dir: PathBuf,
    /// Number of paths written out as `(t, w, x)` tables by `simulate`.
    pub dump_paths: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            op: OpSpec::wiener(),
            n_steps: 1024,
            n_paths: 1000,
            seed: 7,
            u_list: vec![0.0],
            t: 1.0,
            eps: 1e-3,
            h_spec: TEST_DIRECTIONS.iter().map(|s| s.to_string()).collect(),
            output_dir: PathBuf::from("out"),
            dump_paths: 0,
        }
    }
}

/// Raw settings before validation; every field is optional so that a file and
/// flags can be layered.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub op: Option<String>,
    pub alpha: Option<f64>,
    pub steps: Option<usize>,
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    pub u: Option<Vec<f64>>,
    pub t: Option<f64>,
    pub eps: Option<f64>,
    pub h: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub dump_paths: Option<usize>,
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> CliResult<T> {
    raw.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("cannot parse '{raw}' for key '{key}'")))
}

fn parse_list<T: FromStr>(key: &str, raw: &str) -> CliResult<Vec<T>> {
    raw.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_value(key, s)).collect()
}

impl Overrides {
    /// Parses `key = value` lines. `#` starts a comment; lists are comma separated.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut o = Overrides::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "op" => o.op = Some(value.to_string()),
                "alpha" => o.alpha = Some(parse_value(key, value)?),
                "steps" => o.steps = Some(parse_value(key, value)?),
                "paths" => o.paths = Some(parse_value(key, value)?),
                "seed" => o.seed = Some(parse_value(key, value)?),
                "u" => o.u = Some(parse_list(key, value)?),
                "t" => o.t = Some(parse_value(key, value)?),
                "eps" => o.eps = Some(parse_value(key, value)?),
                "h" => o.h = Some(value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()),
                "out" => o.out = Some(PathBuf::from(value)),
                "dump_paths" => o.dump_paths = Some(parse_value(key, value)?),
                other => return Err(CliError::Config(format!("line {}: unknown key '{other}'", lineno + 1))),
            }
        }
        Ok(o)
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Values set in `other` win.
    pub fn layered(mut self, other: Overrides) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(op, alpha, steps, paths, seed, u, t, eps, h, out, dump_paths);
        self
    }
}

impl ExperimentConfig {
    /// Applies `o` on top of the defaults and validates the result.
    pub fn from_overrides(o: Overrides) -> CliResult<Self> {
        let d = Self::default();
        let kind = match &o.op {
            Some(s) => s.parse()?,
            None => d.op.kind,
        };
        let op = match (kind, o.alpha) {
            (OpKind::Fbm, Some(a)) => OpSpec::fbm(a),
            (OpKind::Fbm, None) => return Err(CliError::Config("fbm needs --alpha".into())),
            (_, Some(_)) => {
                return Err(CliError::Config(format!("--alpha only applies to fbm, not {}", kind.label())))
            }
            (k, None) => OpSpec { kind: k, alpha: None },
        };
        let cfg = Self {
            op,
            n_steps: o.steps.unwrap_or(d.n_steps),
            n_paths: o.paths.unwrap_or(d.n_paths),
            seed: o.seed.unwrap_or(d.seed),
            u_list: o.u.unwrap_or(d.u_list),
            t: o.t.unwrap_or(d.t),
            eps: o.eps.unwrap_or(d.eps),
            h_spec: o.h.unwrap_or(d.h_spec),
            output_dir: o.out.unwrap_or(d.output_dir),
            dump_paths: o.dump_paths.unwrap_or(d.dump_paths),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if let Some(a) = self.op.alpha {
            if !(a > 0.5 && a < 1.0) {
                return bad(format!("alpha must lie in (0.5, 1), got {a}"));
            }
        }
        if self.n_steps == 0 {
            return bad("steps must be positive".into());
        }
        if self.n_paths < 2 {
            return bad(format!("paths must be at least 2, got {}", self.n_paths));
        }
        if !(self.t > 0.0 && self.t <= 1.0) {
            return bad(format!("t must lie in (0, 1], got {}", self.t));
        }
        Grid::new(self.n_steps)?.index_of(self.t)?;
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if self.u_list.is_empty() || self.u_list.iter().any(|u| !u.is_finite()) {
            return bad("u must be a nonempty list of finite levels".into());
        }
        if self.h_spec.is_empty() {
            return bad("h must name at least one test direction".into());
        }
        if let Some(h) = self.h_spec.iter().find(|h| !TEST_DIRECTIONS.contains(&h.as_str())) {
            return bad(format!("unknown test direction '{h}' (expected one of {})", TEST_DIRECTIONS.join(", ")));
        }
        Ok(())
    }

    pub fn build_op(&self) -> CliResult<IntegratorOperator> {
        self.op.build(self.n_steps)
    }

    /// The configured test directions on `grid`, in configuration order.
    pub fn directions(&self, grid: Grid) -> Vec<(String, StepFunction)> {
        let all = standard_test_directions(grid);
        self.h_spec
            .iter()
            .filter_map(|name| all.iter().find(|(n, _)| n == name).map(|(n, h)| (n.to_string(), h.clone())))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let file = Overrides::parse("# sweep\nop = fbm\nalpha = 0.7\nu = 0, 0.5\npaths = 500 # small\n").unwrap();
        let flags = Overrides { paths: Some(2000), ..Default::default() };
        let cfg = ExperimentConfig::from_overrides(file.layered(flags)).unwrap();
        assert_eq!(cfg.op, OpSpec::fbm(0.7));
        assert_eq!(cfg.u_list, vec![0.0, 0.5]);
        assert_eq!(cfg.n_paths, 2000);
        assert_eq!(cfg.n_steps, 1024);
    }

    #[test]
    fn rejects_bad_combinations() {
        let cases = [
            "op = fbm",
            "op = wiener\nalpha = 0.7",
            "op = fbm\nalpha = 0.4",
            "steps = 0",
            "paths = 1",
            "eps = -1",
            "t = 1.5",
            "h = one, wobble",
            "op = brownian",
        ];
        for text in cases {
            let o = Overrides::parse(text).unwrap();
            assert!(ExperimentConfig::from_overrides(o).is_err(), "{text}");
        }
        assert!(Overrides::parse("colour = red").is_err());
        assert!(Overrides::parse("steps").is_err());
        assert!(Overrides::parse("steps = many").is_err());
    }

    #[test]
    fn off_grid_time_is_rejected() {
        let o = Overrides { steps: Some(10), t: Some(0.25), ..Default::default() };
        assert!(ExperimentConfig::from_overrides(o).is_err());
    }

    #[test]
    fn builds_every_operator() {
        for (op, alpha) in [("wiener", None), ("bridge", None), ("fbm", Some(0.75)), ("projection", None)] {
            let o = Overrides { op: Some(op.into()), alpha, steps: Some(16), ..Default::default() };
            let cfg = ExperimentConfig::from_overrides(o).unwrap();
            assert_eq!(cfg.build_op().unwrap().grid().n_steps(), 16);
        }
    }

    #[test]
    fn directions_follow_configuration_order() {
        let mut cfg = ExperimentConfig::default();
        cfg.h_spec = vec!["ramp".into(), "one".into()];
        let names: Vec<_> = cfg.directions(Grid::new(8).unwrap()).into_iter().map(|(n, _)| n).collect();
        assert_eq!(names, ["ramp", "one"]);
    }
}
