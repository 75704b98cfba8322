//! CSV emission with a fixed column order and 12 significant digits.

use std::io::Write;
use std::path::Path;

use integratorlab_core::chaos::KernelNormReport;
use integratorlab_core::representations::DualityReport;

use crate::error::{CliError, CliResult};

/// `x` with 12 significant digits in scientific notation; the same value always
/// renders to the same bytes.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else if x == 0.0 {
        // Fold -0 into 0.
        format!("{:.11e}", 0.0)
    } else {
        format!("{x:.11e}")
    }
}

/// One row of a CSV table.
pub trait CsvRecord {
    fn header() -> &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

/// Writes `records` under a header row. An empty slice gives a header-only file.
pub fn write_csv<R: CsvRecord, W: Write>(records: &[R], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(R::header())?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

/// [`write_csv`] into a file, creating parent directories.
pub fn emit_csv<R: CsvRecord>(records: &[R], path: &Path) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_csv(records, std::io::BufWriter::new(file)).map_err(|source| CliError::Csv { path: path.to_path_buf(), source })
}

/// In-memory rendering, used for determinism checks.
pub fn render_csv<R: CsvRecord>(records: &[R]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf).expect("writing to memory cannot fail");
    buf
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualityRow {
    pub op: String,
    pub h: String,
    pub report: DualityReport,
}

impl CsvRecord for DualityRow {
    fn header() -> &'static [&'static str] {
        &["op", "u", "t", "h", "lhs", "lhs_se", "rhs", "rhs_se", "pass"]
    }

    fn fields(&self) -> Vec<String> {
        let r = &self.report;
        vec![
            self.op.clone(),
            fmt_sig(r.u),
            fmt_sig(r.t),
            self.h.clone(),
            fmt_sig(r.lhs.mean),
            fmt_sig(r.lhs.std_error),
            fmt_sig(r.rhs.mean),
            fmt_sig(r.rhs.std_error),
            r.pass.to_string(),
        ]
    }
}

impl CsvRecord for KernelNormReport {
    fn header() -> &'static [&'static str] {
        &["n", "quadrature_value", "mc_variance", "mc_stderr", "bound_value"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.order.to_string(),
            fmt_sig(self.quadrature_value),
            fmt_sig(self.mc_variance.mean),
            fmt_sig(self.mc_variance.std_error),
            fmt_sig(self.bound_value),
        ]
    }
}

/// A point of a local-time profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub u: f64,
    pub value: f64,
    pub std_error: f64,
}

impl CsvRecord for ProfileRow {
    fn header() -> &'static [&'static str] {
        &["u", "value", "stderr"]
    }

    fn fields(&self) -> Vec<String> {
        vec![fmt_sig(self.u), fmt_sig(self.value), fmt_sig(self.std_error)]
    }
}

/// Mean-square residual of a representation on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualRow {
    pub functional: String,
    pub n_steps: usize,
    pub residual: f64,
    pub stderr: f64,
}

impl CsvRecord for ResidualRow {
    fn header() -> &'static [&'static str] {
        &["functional", "n_steps", "residual", "stderr"]
    }

    fn fields(&self) -> Vec<String> {
        vec![self.functional.clone(), self.n_steps.to_string(), fmt_sig(self.residual), fmt_sig(self.stderr)]
    }
}

/// Simulated variance of `x(t)` against `σ²(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceRow {
    pub t: f64,
    pub sigma_sq: f64,
    pub mc_variance: f64,
    pub mc_stderr: f64,
    pub pass: bool,
}

impl CsvRecord for VarianceRow {
    fn header() -> &'static [&'static str] {
        &["t", "sigma_sq", "mc_variance", "mc_stderr", "pass"]
    }

    fn fields(&self) -> Vec<String> {
        vec![fmt_sig(self.t), fmt_sig(self.sigma_sq), fmt_sig(self.mc_variance), fmt_sig(self.mc_stderr), self.pass.to_string()]
    }
}

/// Outcome of one acceptance check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOutcome {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl CsvRecord for CheckOutcome {
    fn header() -> &'static [&'static str] {
        &["id", "name", "pass", "detail"]
    }

    fn fields(&self) -> Vec<String> {
        vec![self.id.to_string(), self.name.to_string(), self.pass.to_string(), self.detail.clone()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use integratorlab_core::representations::Representation;
    use integratorlab_core::sim::McEstimate;

    fn duality_row() -> DualityRow {
        let lhs = McEstimate::from_samples(&[0.1, 0.3, 0.2]).unwrap();
        let rhs = McEstimate::from_samples(&[0.2, 0.2, 0.25]).unwrap();
        let report = DualityReport {
            representation: Representation::Integrator,
            u: 0.0,
            t: 1.0,
            lhs,
            rhs,
            discrepancy: 0.01,
            eps_bias: 0.0,
            tolerance: 0.1,
            pass: true,
        };
        DualityRow { op: "wiener".into(), h: "one".into(), report }
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(fmt_sig(-0.0), fmt_sig(0.0));
        assert_eq!(fmt_sig(123456.0), "1.23456000000e5");
        assert_eq!(fmt_sig(f64::NAN), "nan");
    }

    #[test]
    fn empty_report_is_header_only() {
        let bytes = render_csv::<DualityRow>(&[]);
        assert_eq!(String::from_utf8(bytes).unwrap(), "op,u,t,h,lhs,lhs_se,rhs,rhs_se,pass\n");
    }

    #[test]
    fn duality_schema() {
        let text = String::from_utf8(render_csv(&[duality_row()])).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "op,u,t,h,lhs,lhs_se,rhs,rhs_se,pass");
        let row: Vec<_> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 9);
        assert_eq!(row[0], "wiener");
        assert_eq!(row[3], "one");
        assert_eq!(row[4], "2.00000000000e-1");
        assert_eq!(row[8], "true");
    }

    #[test]
    fn rendering_is_repeatable() {
        let rows = vec![duality_row(), duality_row()];
        assert_eq!(render_csv(&rows), render_csv(&rows));
    }

    #[test]
    fn file_errors_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let err = emit_csv::<DualityRow>(&[], &blocker.join("sub/out.csv")).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
        let ok = dir.path().join("nested/out.csv");
        emit_csv(&[duality_row()], &ok).unwrap();
        assert!(std::fs::read_to_string(ok).unwrap().starts_with("op,"));
    }
}
