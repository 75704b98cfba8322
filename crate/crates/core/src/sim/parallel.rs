//! Index-ordered map over Monte Carlo paths.
//!
//! Results always come back in index order and every reduction downstream is
//! sequential, so the parallel and sequential paths give bit-identical output.

use crate::error::{LabError, Result};

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is on.
pub fn map_indexed<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_indexed_parallel(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_indexed_sequential(n, f)
    }
}

pub fn map_indexed_sequential<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(usize) -> Result<T>,
{
    (0..n).map(|i| f(i).map_err(|e| wrap(i, e))).collect()
}

#[cfg(feature = "parallel")]
pub fn map_indexed_parallel<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    let results: Vec<Result<T>> = (0..n).into_par_iter().map(&f).collect();
    results.into_iter().enumerate().map(|(i, r)| r.map_err(|e| wrap(i, e))).collect()
}

fn wrap(index: usize, source: LabError) -> LabError {
    match source {
        already @ LabError::Estimator { .. } => already,
        other => LabError::Estimator { index, source: Box::new(other) },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::invalid;

    #[test]
    fn keeps_order_and_reports_first_failure() {
        let v = map_indexed(100, |i| Ok(i * i)).unwrap();
        assert_eq!(v[7], 49);
        let err = map_indexed(50, |i| if i % 20 == 13 { Err(invalid("boom")) } else { Ok(i) }).unwrap_err();
        match err {
            LabError::Estimator { index, .. } => assert_eq!(index, 13),
            other => panic!("unexpected {other:?}"),
        }
        let seq = map_indexed_sequential(50, |i| Ok(i as f64 * 0.5)).unwrap();
        assert_eq!(seq, map_indexed(50, |i| Ok(i as f64 * 0.5)).unwrap());
    }
}
