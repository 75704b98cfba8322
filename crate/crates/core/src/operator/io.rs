//! Plain-text operator format: three header lines, then one matrix row per line.
//!
//! ```text
//! name fbm
//! n_steps 4
//! alpha 0.75
//! 1.0e0 2.5e-1 ...
//! ```
//!
//! Values use Rust's shortest round-trip formatting, so reading a written
//! operator reproduces its matrix bit for bit.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use super::grid::Grid;
use super::integrator::IntegratorOperator;
use crate::error::{invalid, Result};

pub fn write_operator<W: Write>(op: &IntegratorOperator, mut out: W) -> std::io::Result<()> {
    let n = op.grid().n_steps();
    writeln!(out, "name {}", op.name())?;
    writeln!(out, "n_steps {n}")?;
    match op.alpha() {
        Some(a) => writeln!(out, "alpha {a:e}")?,
        None => writeln!(out, "alpha none")?,
    }
    let m = op.to_dense();
    let mut line = String::new();
    for i in 0..n {
        line.clear();
        for j in 0..n {
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{:e}", m[(i, j)]));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_operator<R: BufRead>(input: R) -> Result<IntegratorOperator> {
    let mut lines = input.lines();
    let mut next = |what: &str| -> Result<String> {
        lines
            .next()
            .ok_or_else(|| invalid(format!("operator file ended before {what}")))?
            .map_err(|e| invalid(format!("reading operator: {e}")))
    };
    let header = |line: String, key: &str| -> Result<String> {
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .map(|v| v.trim().to_string())
            .ok_or_else(|| invalid(format!("expected '{key} …', got '{line}'")))
    };
    let name = header(next("name")?, "name")?;
    let n: usize = header(next("n_steps")?, "n_steps")?
        .parse()
        .map_err(|e| invalid(format!("bad n_steps: {e}")))?;
    let alpha_text = header(next("alpha")?, "alpha")?;
    let alpha = match alpha_text.as_str() {
        "none" => None,
        s => Some(s.parse::<f64>().map_err(|e| invalid(format!("bad alpha: {e}")))?),
    };
    let grid = Grid::new(n)?;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let row = next("all matrix rows")?;
        let values: Vec<f64> = row
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|e| invalid(format!("row {i}: {e}"))))
            .collect::<Result<_>>()?;
        if values.len() != n {
            return Err(invalid(format!("row {i} has {} values, expected {n}", values.len())));
        }
        for (j, v) in values.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    IntegratorOperator::from_matrix(&name, grid, alpha, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::integrator::{make_bridge_op, make_fbm_op};

    #[test]
    fn round_trip_is_exact() {
        let g = Grid::new(12).unwrap();
        for op in [make_fbm_op(g, 0.7).unwrap(), make_bridge_op(g)] {
            let mut buf = Vec::new();
            write_operator(&op, &mut buf).unwrap();
            let back = read_operator(buf.as_slice()).unwrap();
            assert_eq!(back.name(), op.name());
            assert_eq!(back.alpha(), op.alpha());
            assert_eq!(back.to_dense(), op.to_dense());
            for (a, b) in back.sigma_sq().iter().zip(op.sigma_sq()) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(read_operator("name x\nn_steps 2\nalpha none\n1 0\n".as_bytes()).is_err());
        assert!(read_operator("name x\nn_steps 2\nalpha none\n1 0\n0\n".as_bytes()).is_err());
        assert!(read_operator("nom x\n".as_bytes()).is_err());
        assert!(read_operator("name x\nn_steps two\n".as_bytes()).is_err());
        let ok = read_operator("name x\nn_steps 2\nalpha none\n1 0\n0 1\n".as_bytes()).unwrap();
        assert_eq!(ok.sigma_sq(), &[0.0, 0.5, 1.0]);
    }

}
