//! The discrete generalized elliptic problem `lambda u - div(A grad_w u) = f`
//! on the torus: the resolvent solve for `lambda > 0`, the Neumann problem at
//! `lambda = 0` (solvable only for mean-zero data, gauge-fixed to mean-zero
//! solutions), and the dual norm realized through one Riesz solve.

use crate::conductance::WSpec;
use crate::grid::{apply_ln, norm_h1w, norm_l2, operator_diagonal, DiagonalField, GridFunction};
use crate::solver::{cg_solve, CgOptions};
use thiserror::Error;

pub const DEFAULT_TOL: f64 = 1e-10;

/// Relative compatibility tolerance for the Neumann solvability condition.
pub const COMPAT_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct EllipticProblem {
    pub w: WSpec,
    pub a: DiagonalField,
    pub lambda: f64,
    pub f: GridFunction,
    /// Relative residual target for the iterative solve.
    pub tol: f64,
    pub max_iter: usize,
}

impl EllipticProblem {
    pub fn new(w: WSpec, a: DiagonalField, lambda: f64, f: GridFunction) -> Self {
        assert!(lambda >= 0.0, "lambda must be nonnegative");
        assert!(
            w.dim() == f.dim() && a.dim() == f.dim() && a.n() == f.n(),
            "shape mismatch"
        );
        let max_iter = 50 * f.n();
        EllipticProblem {
            w,
            a,
            lambda,
            f,
            tol: DEFAULT_TOL,
            max_iter,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolutionNorms {
    pub l2: f64,
    pub h1w: f64,
}

#[derive(Debug)]
pub struct EllipticSolution {
    pub u: GridFunction,
    pub iterations: usize,
    pub final_residual: f64,
    pub norms: SolutionNorms,
}

#[derive(Debug, Error, PartialEq)]
pub enum EllipticError {
    #[error(
        "solver did not converge after {iterations} iterations (relative residual {residual:.3e})"
    )]
    NonConvergence { iterations: usize, residual: f64 },
    #[error(
        "incompatible right-hand side for the Neumann problem: mean {mean:.3e} exceeds tolerance"
    )]
    IncompatibleRhs { mean: f64 },
    #[error("{0}")]
    Invalid(String),
}

/// Resolvent solve for `lambda > 0`. On success the certified bound
/// `||u||_L2 <= lambda^{-1} ||f||_L2 (1 + 10 tol)` holds.
pub fn solve(problem: &EllipticProblem) -> Result<EllipticSolution, EllipticError> {
    if problem.lambda <= 0.0 {
        return Err(EllipticError::Invalid(
            "solve requires lambda > 0; use solve_neumann for lambda = 0".into(),
        ));
    }
    let diag = operator_diagonal(&problem.a, &problem.w, problem.lambda);
    let sol = cg_solve(
        |v| {
            let mut out = apply_ln(v, &problem.a, &problem.w);
            out.scale(-1.0);
            out.axpy(problem.lambda, v);
            out
        },
        Some(&diag),
        &problem.f,
        CgOptions {
            tol: problem.tol,
            max_iter: problem.max_iter,
            mean_zero: false,
        },
    )
    .map_err(|e| EllipticError::NonConvergence {
        iterations: e.iterations,
        residual: e.residual,
    })?;

    let norms = SolutionNorms {
        l2: norm_l2(&sol.x),
        h1w: norm_h1w(&sol.x, &problem.w),
    };
    let bound = norm_l2(&problem.f) / problem.lambda * (1.0 + 10.0 * problem.tol);
    assert!(
        norms.l2 <= bound + f64::MIN_POSITIVE,
        "resolvent bound violated: ||u|| = {} > {}",
        norms.l2,
        bound
    );
    Ok(EllipticSolution {
        u: sol.x,
        iterations: sol.iterations,
        final_residual: sol.residual,
        norms,
    })
}

/// Neumann problem `-div(A grad_w u) = f`, solvable only when the mean of
/// `f` vanishes (relative tolerance `COMPAT_TOL`); the solution is gauge
/// fixed to mean zero.
pub fn solve_neumann(problem: &EllipticProblem) -> Result<EllipticSolution, EllipticError> {
    if problem.lambda != 0.0 {
        return Err(EllipticError::Invalid(
            "solve_neumann requires lambda = 0".into(),
        ));
    }
    let f_norm = norm_l2(&problem.f);
    let mean = problem.f.mean();
    if mean.abs() > COMPAT_TOL * f_norm {
        return Err(EllipticError::IncompatibleRhs { mean });
    }
    let diag = operator_diagonal(&problem.a, &problem.w, 0.0);
    let sol = cg_solve(
        |v| {
            let mut out = apply_ln(v, &problem.a, &problem.w);
            out.scale(-1.0);
            out
        },
        Some(&diag),
        &problem.f,
        CgOptions {
            tol: problem.tol,
            max_iter: problem.max_iter,
            mean_zero: true,
        },
    )
    .map_err(|e| EllipticError::NonConvergence {
        iterations: e.iterations,
        residual: e.residual,
    })?;

    let norms = SolutionNorms {
        l2: norm_l2(&sol.x),
        h1w: norm_h1w(&sol.x, &problem.w),
    };
    debug_assert!(sol.x.mean().abs() <= 1e-12 * norms.l2.max(1e-300));
    Ok(EllipticSolution {
        u: sol.x,
        iterations: sol.iterations,
        final_residual: sol.residual,
        norms,
    })
}

/// Dual norm of `f` as a functional on the Sobolev space: solves the Riesz
/// problem `u - div(I grad_w u) = f` (unit coefficients, `lambda = 1`) and
/// returns the Sobolev norm of `u`.
pub fn dual_norm(f: &GridFunction, w: &WSpec) -> Result<f64, EllipticError> {
    let a = DiagonalField::constant(f.n(), f.dim(), 1.0);
    let problem = EllipticProblem::new(w.clone(), a, 1.0, f.clone());
    let sol = solve(&problem)?;
    Ok(sol.norms.h1w)
}

/// Convenience: the residual `||lambda u - L u - f|| / ||f||` of a candidate.
pub fn relative_residual(problem: &EllipticProblem, u: &GridFunction) -> f64 {
    let mut r = apply_ln(u, &problem.a, &problem.w);
    r.scale(-1.0);
    r.axpy(problem.lambda, u);
    r.axpy(-1.0, &problem.f);
    let f_norm = norm_l2(&problem.f);
    if f_norm == 0.0 {
        norm_l2(&r)
    } else {
        norm_l2(&r) / f_norm
    }
}

/// Spectral magnitude of the axis-`k` fundamental mode of the discrete
/// operator with unit coefficients and identity profile: `4 N^2 sin^2(pi/N)`.
pub fn fundamental_eigenvalue(n: usize) -> f64 {
    4.0 * (n as f64).powi(2) * (std::f64::consts::PI / n as f64).sin().powi(2)
}
