//! Convergence study of the resolvent solve against a closed-form reference
//! with one membrane, plus the dual norm computed through the Riesz solve.
//!
//! Run with: cargo run --release --example elliptic_convergence

use wlab::conductance::{AxisProfile, Jump, WSpec};
use wlab::elliptic::{dual_norm, solve, EllipticProblem};
use wlab::grid::{norm_l2, DiagonalField, GridFunction};
use wlab::manufactured::{Manufactured, PiecewiseSource};

fn main() {
    let w = WSpec::new(vec![AxisProfile {
        alpha: 1.0,
        jumps: vec![Jump {
            location: 0.41,
            size: 0.9,
        }],
    }])
    .unwrap();
    let source = PiecewiseSource::mean_zero(&[0.25, 0.5, 0.75], &[1.0, -0.5, 2.0, -1.0]);
    let exact = Manufactured::new(w.clone(), source, 0.2);
    let lambda = 1.0;

    println!("resolvent solve vs closed-form reference (one membrane, lambda = {lambda}):");
    println!(
        "{:>6} {:>14} {:>12} {:>6} {:>12} {:>8}",
        "N", "l2_error", "h1w_norm", "iters", "residual", "ratio"
    );
    let mut prev: Option<f64> = None;
    for n in [32usize, 64, 128, 256, 512] {
        let f = GridFunction::sample(n, 1, |p| exact.rhs(lambda, p[0]));
        let problem =
            EllipticProblem::new(w.clone(), DiagonalField::constant(n, 1, 1.0), lambda, f);
        let sol = solve(&problem).expect("resolvent solve");
        let mut diff = sol.u.clone();
        for (i, v) in diff.values_mut().iter_mut().enumerate() {
            *v -= exact.u(i as f64 / n as f64);
        }
        let err = norm_l2(&diff);
        let ratio = prev
            .map(|p| format!("{:.3}", err / p))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:>6} {:>14.6e} {:>12.6e} {:>6} {:>12.3e} {:>8}",
            n, err, sol.norms.h1w, sol.iterations, sol.final_residual, ratio
        );
        prev = Some(err);
    }

    println!("\ndual norms through the Riesz solve at N = 64:");
    for (label, f) in [
        ("constant 1", GridFunction::constant(64, 1, 1.0)),
        (
            "sin(2 pi x)",
            GridFunction::sample(64, 1, |p| (std::f64::consts::TAU * p[0]).sin()),
        ),
        (
            "sin(8 pi x)",
            GridFunction::sample(64, 1, |p| (4.0 * std::f64::consts::TAU * p[0]).sin()),
        ),
    ] {
        println!(
            "  ||{label}||_dual = {:.6}",
            dual_norm(&f, &w).expect("riesz solve")
        );
    }
    println!("higher frequencies have smaller dual norm; constants keep norm one");
}
