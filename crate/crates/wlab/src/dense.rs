//! Dense oracle mode: materializes the divergence-form operator as an
//! explicit `N^d x N^d` matrix for brute-force verification (symmetry,
//! eigen-decompositions, direct solves). Capped at `N^d <= 4096`.

use crate::conductance::WSpec;
use crate::grid::{apply_ln, DiagonalField, GridFunction};
use nalgebra::{DMatrix, DVector};

pub const DENSE_CAP: usize = 4096;

/// Explicit matrix of `u -> lambda u - apply_ln(u, a, w)`, built column by
/// column from unit vectors so it exercises the matrix-free path.
pub fn operator_matrix(a: &DiagonalField, w: &WSpec, lambda: f64) -> DMatrix<f64> {
    let len = a.n().pow(a.dim() as u32);
    assert!(
        len <= DENSE_CAP,
        "dense oracle capped at N^d <= {DENSE_CAP}, got {len}"
    );
    let mut m = DMatrix::zeros(len, len);
    for col in 0..len {
        let mut e = GridFunction::zeros(a.n(), a.dim());
        e.values_mut()[col] = 1.0;
        let out = apply_ln(&e, a, w);
        for row in 0..len {
            m[(row, col)] = lambda * e.values()[row] - out.values()[row];
        }
    }
    m
}

/// Direct LU solve of `(lambda I - L) u = f`. Panics on a singular system,
/// which cannot happen for `lambda > 0` with valid inputs.
pub fn solve_direct(a: &DiagonalField, w: &WSpec, lambda: f64, f: &GridFunction) -> GridFunction {
    let m = operator_matrix(a, w, lambda);
    let rhs = DVector::from_column_slice(f.values());
    let sol = m
        .lu()
        .solve(&rhs)
        .expect("dense operator is invertible for lambda > 0");
    GridFunction::from_values(f.n(), f.dim(), sol.as_slice().to_vec()).unwrap()
}

/// Largest absolute asymmetry `|M - M^T|` of the dense operator.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}
