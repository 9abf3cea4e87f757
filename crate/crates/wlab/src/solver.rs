//! Matrix-free preconditioned conjugate gradients for the SPD systems that
//! arise here. Reductions use the grid inner product in flat index order,
//! so iterates are bit-reproducible.

use crate::grid::{inner_n, GridFunction};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("conjugate gradients did not converge: {iterations} iterations, relative residual {residual:.3e}")]
pub struct NonConvergence {
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    /// Relative residual target `||r|| <= tol * ||b||`.
    pub tol: f64,
    pub max_iter: usize,
    /// Keep iterates orthogonal to constants (the Neumann gauge).
    pub mean_zero: bool,
}

#[derive(Debug)]
pub struct CgSolution {
    pub x: GridFunction,
    pub iterations: usize,
    /// Final relative residual.
    pub residual: f64,
}

/// Solves `A x = b` for an SPD operator given as a closure, with an optional
/// positive Jacobi diagonal. With `mean_zero` set, the system is solved in
/// the subspace orthogonal to constants (both `b` and the preconditioned
/// residual are re-projected, since a non-constant diagonal leaves the
/// subspace).
pub fn cg_solve(
    apply: impl Fn(&GridFunction) -> GridFunction,
    jacobi_diag: Option<&[f64]>,
    b: &GridFunction,
    opts: CgOptions,
) -> Result<CgSolution, NonConvergence> {
    let mut b = b.clone();
    if opts.mean_zero {
        let m = b.mean();
        for v in b.values_mut() {
            *v -= m;
        }
    }
    let b_norm = inner_n(&b, &b).sqrt();
    if b_norm == 0.0 {
        return Ok(CgSolution {
            x: GridFunction::zeros(b.n(), b.dim()),
            iterations: 0,
            residual: 0.0,
        });
    }

    let precond = |r: &GridFunction| -> GridFunction {
        let mut z = r.clone();
        if let Some(diag) = jacobi_diag {
            for (v, &d) in z.values_mut().iter_mut().zip(diag.iter()) {
                *v /= d;
            }
        }
        if opts.mean_zero {
            let m = z.mean();
            for v in z.values_mut() {
                *v -= m;
            }
        }
        z
    };

    let mut x = GridFunction::zeros(b.n(), b.dim());
    let mut r = b.clone();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = inner_n(&r, &z);

    for iter in 1..=opts.max_iter {
        let ap = apply(&p);
        let pap = inner_n(&p, &ap);
        if pap <= 0.0 {
            // loss of positive definiteness to rounding; bail out honestly
            let res = inner_n(&r, &r).sqrt() / b_norm;
            return Err(NonConvergence {
                iterations: iter,
                residual: res,
            });
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        let res = inner_n(&r, &r).sqrt() / b_norm;
        if res <= opts.tol {
            if opts.mean_zero {
                let m = x.mean();
                for v in x.values_mut() {
                    *v -= m;
                }
            }
            return Ok(CgSolution {
                x,
                iterations: iter,
                residual: res,
            });
        }
        z = precond(&r);
        let rz_next = inner_n(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        let mut p_next = z.clone();
        p_next.axpy(beta, &p);
        p = p_next;
    }
    let res = inner_n(&r, &r).sqrt() / b_norm;
    Err(NonConvergence {
        iterations: opts.max_iter,
        residual: res,
    })
}
