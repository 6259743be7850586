//! Dense linear solves backing the Bellman, occupancy, and stationarity
//! systems. Tabular scale keeps everything comfortably within LU territory.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};

/// Solves `a x = b` by dense LU with partial pivoting. Returns `None` when
/// the matrix is singular to working precision.
pub fn solve(a: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    let n = a.nrows();
    let m = DMatrix::from_fn(n, n, |i, j| a[[i, j]]);
    let rhs = DVector::from_fn(n, |i, _| b[i]);
    let x = m.lu().solve(&rhs)?;
    Some(Array1::from_iter(x.iter().cloned()))
}
