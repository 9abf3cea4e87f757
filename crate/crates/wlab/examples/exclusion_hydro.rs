//! Closed loop between the particle system and the limiting equation:
//! replicas of the exclusion process with a membrane bond are averaged and
//! compared, observable by observable, against the nonlinear diffusion
//! integrator. Also dumps the mean density profile to show the membrane
//! discontinuity emerging from the microscopic dynamics.
//!
//! Run with: cargo run --release --example exclusion_hydro

use wlab::conductance::{AxisProfile, Jump, WSpec};
use wlab::exclusion::{hydro_compare, RateTable};
use wlab::grid::DiagonalField;
use wlab::parabolic::TimeControls;
use wlab::testfns::{labels, make_test_functions, Family, TestFunctionSpec};

fn main() {
    let n = 128;
    let replicas = 64;
    let b = 0.5;
    let w = WSpec::new(vec![AxisProfile {
        alpha: 1.0,
        jumps: vec![Jump {
            location: 0.45,
            size: 0.5,
        }],
    }])
    .unwrap();
    let field = DiagonalField::constant(n, 1, 1.0);
    let rates = RateTable::build(&w, &field, b).expect("valid rates");
    let spec = TestFunctionSpec {
        family: Family::AxisSinusoids,
        max_k: 2,
        include_constant: true,
    };
    let tests = make_test_functions(&spec, n, 1).unwrap();
    let names = labels(&spec, 1);
    let gamma = |p: &[f64]| 0.5 + 0.3 * (std::f64::consts::TAU * p[0]).sin();
    let sample_times = [0.01, 0.05];

    let mut ctl = TimeControls::with_dt(5e-5);
    ctl.newton_tol = 1e-11;
    let report = hydro_compare(
        &gamma,
        &rates,
        &[1.0],
        &w,
        &sample_times,
        replicas,
        1,
        &tests,
        &ctl,
    )
    .expect("hydro comparison");

    println!("particle system vs integrated equation (N = {n}, {replicas} replicas, b = {b}):");
    println!(
        "{:>6} {:>10} {:>12} {:>12} {:>12} {:>10}",
        "t", "test", "mc_mean", "pde_value", "gap", "3*stderr"
    );
    for row in &report.rows {
        println!(
            "{:>6} {:>10} {:>12.6} {:>12.6} {:>12.3e} {:>10.3e}",
            row.t,
            names[row.test_id],
            row.mc_mean,
            row.pde_value,
            row.gap,
            3.0 * row.mc_stderr
        );
    }

    println!("\nreplica-mean density around the membrane (bond 57, x = 0.45) at t = 0.05:");
    let density = &report.mean_density[1];
    for (site, value) in density.iter().enumerate().take(66).skip(50) {
        let marker = if site == 57 {
            "  <- left of membrane"
        } else {
            ""
        };
        println!("  site {site:>3}: {value:.4}{marker}");
    }
}
