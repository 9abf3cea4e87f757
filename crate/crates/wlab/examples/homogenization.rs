//! Shrinking-gap experiment on random two-point coefficient fields: solves
//! the resolvent problem on a schedule of grids with the same sampled
//! environment and compares against two constant-coefficient references, the
//! expectation (arithmetic mean) of the law and its harmonic mean. Prints a
//! seed-averaged table of gaps.
//!
//! Run with: cargo run --release --example homogenization

use wlab::conductance::{AxisProfile, Jump, WSpec};
use wlab::env::{h_convergence_with_reference, homogenized_matrix, EnvironmentSpec, Law};

fn main() {
    let schedule = [16usize, 32, 64, 128, 256];
    let seeds: Vec<u64> = (1..=8).collect();
    let theta = 2.0;
    let lambda = 1.0;
    let rhs = |p: &[f64]| (std::f64::consts::TAU * p[0]).sin();

    for (label, w) in [
        ("identity profile", WSpec::identity(1)),
        (
            "one membrane (jump 0.5 at x = 0.45)",
            WSpec::new(vec![AxisProfile {
                alpha: 1.0,
                jumps: vec![Jump {
                    location: 0.45,
                    size: 0.5,
                }],
            }])
            .unwrap(),
        ),
    ] {
        println!("== {label} ==");
        let env0 = EnvironmentSpec {
            theta,
            law: Law::TwoPoint { p: 0.5 },
            seed: 0,
            d: 1,
        };
        let arith = homogenized_matrix(&env0);
        let harm = vec![1.0 / (0.5 * (1.0 / theta + theta))];
        println!(
            "   reference matrices: expectation = {:.4}, harmonic = {:.4}",
            arith[0], harm[0]
        );
        println!("   N      gap(expectation)   gap(harmonic)");
        let mut per_n_arith = vec![0.0; schedule.len()];
        let mut per_n_harm = vec![0.0; schedule.len()];
        for &seed in &seeds {
            let env = EnvironmentSpec { seed, ..env0 };
            let ra = h_convergence_with_reference(&env, &w, lambda, &rhs, &schedule, &arith)
                .expect("solve");
            let rh = h_convergence_with_reference(&env, &w, lambda, &rhs, &schedule, &harm)
                .expect("solve");
            for (i, (a, h)) in ra.records.iter().zip(rh.records.iter()).enumerate() {
                per_n_arith[i] += a.l2_gap / seeds.len() as f64;
                per_n_harm[i] += h.l2_gap / seeds.len() as f64;
            }
        }
        for (i, &n) in schedule.iter().enumerate() {
            println!(
                "   {:4}   {:.6e}       {:.6e}",
                n, per_n_arith[i], per_n_harm[i]
            );
        }
        println!(
            "   final/initial ratio: expectation {:.3}, harmonic {:.3}",
            per_n_arith[schedule.len() - 1] / per_n_arith[0],
            per_n_harm[schedule.len() - 1] / per_n_harm[0],
        );
    }
}
