//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! per check at its stated tolerance. Run with
//! `cargo test --test acceptance -- --nocapture` to see the lines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;
use wlab::conductance::{AxisProfile, Jump, WSpec};
use wlab::elliptic::{self, EllipticProblem};
use wlab::env::{self, EnvironmentSpec, Law};
use wlab::exclusion::{self, ParticleConfig, RateTable};
use wlab::grid::{
    apply_ln, diff_w, inner_n, inner_wj, norm_l2, project_mean_zero, DiagonalField, GridFunction,
};
use wlab::manufactured::{Manufactured, PiecewiseSource};
use wlab::parabolic::{self, PhiSpec, TimeControls};

struct Gate {
    criterion: &'static str,
    failures: Vec<String>,
}

impl Gate {
    fn new(criterion: &'static str) -> Self {
        Gate {
            criterion,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        println!(
            "[{}] {}: {} ({})",
            self.criterion,
            name,
            if passed { "PASS" } else { "FAIL" },
            detail
        );
        if !passed {
            self.failures.push(format!("{name}: {detail}"));
        }
    }

    fn finish(self) {
        println!(
            "[{}] criterion {}",
            self.criterion,
            if self.failures.is_empty() {
                "PASS"
            } else {
                "FAIL"
            }
        );
        assert!(
            self.failures.is_empty(),
            "criterion {} failed:\n{}",
            self.criterion,
            self.failures.join("\n")
        );
    }
}

fn random_w(rng: &mut ChaCha8Rng, d: usize) -> WSpec {
    WSpec::new(
        (0..d)
            .map(|_| AxisProfile {
                alpha: rng.gen_range(0.5..2.0),
                jumps: vec![Jump {
                    location: rng.gen_range(0.0..1.0),
                    size: rng.gen_range(0.1..1.2),
                }],
            })
            .collect(),
    )
    .unwrap()
}

fn random_field(n: usize, d: usize, theta: f64, rng: &mut ChaCha8Rng) -> DiagonalField {
    let len = n.pow(d as u32);
    DiagonalField::new(
        n,
        d,
        (0..d)
            .map(|_| {
                (0..len)
                    .map(|_| rng.gen_range(1.0 / theta..theta))
                    .collect()
            })
            .collect(),
        theta,
    )
    .unwrap()
}

fn random_grid(n: usize, d: usize, rng: &mut ChaCha8Rng) -> GridFunction {
    let len = n.pow(d as u32);
    GridFunction::from_values(n, d, (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Criterion 1: exact discrete algebra, 100 randomized instances per check.
#[test]
fn criterion_1_exact_algebra() {
    let mut gate = Gate::new("C1");
    let mut rng = ChaCha8Rng::seed_from_u64(101);

    // summation by parts to 1e-12 relative
    let mut worst = 0.0f64;
    for i in 0..100 {
        let (n, d) = if i % 2 == 0 { (16, 1) } else { (8, 2) };
        let w = random_w(&mut rng, d);
        let a = random_field(n, d, 4.0, &mut rng);
        let f = random_grid(n, d, &mut rng);
        let g = random_grid(n, d, &mut rng);
        let lhs = inner_n(&apply_ln(&f, &a, &w), &g);
        let mut rhs = 0.0;
        for j in 0..d {
            let df = diff_w(&f, j, &w);
            let dg = diff_w(&g, j, &w);
            let mut adf = df.clone();
            for (v, &c) in adf.values_mut().iter_mut().zip(a.axis(j).iter()) {
                *v *= c;
            }
            rhs -= inner_wj(&adf, &dg, j, &w);
        }
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0));
    }
    gate.check(
        "summation_by_parts",
        worst <= 1e-12,
        format!("max rel defect {worst:.3e}"),
    );

    // dense symmetry and non-positivity at N = 8, d <= 2
    let mut worst_asym = 0.0f64;
    let mut worst_pos = 0.0f64;
    for i in 0..100 {
        let d = if i % 2 == 0 { 1 } else { 2 };
        let n = 8;
        let w = random_w(&mut rng, d);
        let a = random_field(n, d, 4.0, &mut rng);
        let m = wlab::dense::operator_matrix(&a, &w, 0.0);
        worst_asym = worst_asym.max(wlab::dense::asymmetry(&m));
        let f = random_grid(n, d, &mut rng);
        worst_pos = worst_pos.max(inner_n(&apply_ln(&f, &a, &w), &f).max(0.0));
    }
    gate.check(
        "operator_symmetry_dense",
        worst_asym <= 1e-8,
        format!("max |M - M^T| entry {worst_asym:.3e}"),
    );
    gate.check(
        "operator_nonpositive",
        worst_pos <= 1e-12,
        format!("max positive <Lf,f> {worst_pos:.3e}"),
    );

    // increment telescoping
    let mut worst_tel = 0.0f64;
    for _ in 0..100 {
        let w = random_w(&mut rng, 1);
        let n = rng.gen_range(3..300);
        let total: f64 = w.increments(0, n).iter().sum();
        worst_tel = worst_tel.max((total - w.period(0)).abs() / w.period(0));
    }
    gate.check(
        "increment_telescoping",
        worst_tel <= 1e-12,
        format!("max rel {worst_tel:.3e}"),
    );

    // projector idempotence
    let mut worst_proj = 0.0f64;
    for _ in 0..100 {
        let f = random_grid(16, 1, &mut rng);
        let p = project_mean_zero(&f);
        let pp = project_mean_zero(&p);
        let mut diff = p.clone();
        diff.axpy(-1.0, &pp);
        worst_proj = worst_proj.max(norm_l2(&diff)).max(p.mean().abs());
    }
    gate.check(
        "projector_idempotent",
        worst_proj <= 1e-12,
        format!("max defect {worst_proj:.3e}"),
    );

    gate.finish();
}

/// Criterion 2: elliptic oracles — spectral identity, manufactured-solution
/// convergence, the resolvent bound on every solve, and the compatibility
/// rejection boundary.
#[test]
fn criterion_2_elliptic_oracles() {
    let mut gate = Gate::new("C2");

    // spectral oracle at W = id
    let n = 64;
    let f = GridFunction::sample(n, 1, |p| (TAU * p[0]).sin());
    let problem = EllipticProblem::new(
        WSpec::identity(1),
        DiagonalField::constant(n, 1, 1.0),
        1.0,
        f.clone(),
    );
    let sol = elliptic::solve(&problem).unwrap();
    let factor = 1.0 / (1.0 + elliptic::fundamental_eigenvalue(n));
    let spectral_err = sol
        .u
        .values()
        .iter()
        .zip(f.values())
        .map(|(u, fv)| (u - factor * fv).abs())
        .fold(0.0f64, f64::max);
    gate.check(
        "spectral_oracle",
        spectral_err <= 1e-8,
        format!("max err {spectral_err:.3e}"),
    );

    let mut bound_ok = sol.norms.l2 <= norm_l2(&f) / 1.0 * (1.0 + 1e-9);

    // manufactured profile with one membrane, piecewise-constant source
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
    let mut errors = Vec::new();
    for &n in &[32usize, 64, 128, 256] {
        let f = GridFunction::sample(n, 1, |p| exact.rhs(lambda, p[0]));
        let problem = EllipticProblem::new(
            w.clone(),
            DiagonalField::constant(n, 1, 1.0),
            lambda,
            f.clone(),
        );
        let s = elliptic::solve(&problem).unwrap();
        bound_ok &= s.norms.l2 <= norm_l2(&f) / lambda * (1.0 + 1e-9);
        let mut diff = s.u.clone();
        for (i, v) in diff.values_mut().iter_mut().enumerate() {
            *v -= exact.u(i as f64 / n as f64);
        }
        errors.push(norm_l2(&diff));
    }
    let ratios: Vec<f64> = errors.windows(2).map(|p| p[1] / p[0]).collect();
    gate.check(
        "manufactured_convergence",
        ratios.iter().all(|&r| r <= 0.7),
        format!("errors {errors:?}, ratios {ratios:?}"),
    );
    gate.check(
        "resolvent_bound",
        bound_ok,
        "||u|| <= ||f||/lambda (1 + 1e-9) on every solve".into(),
    );

    // compatibility rejection fires exactly above the threshold
    let n = 32;
    let base = GridFunction::sample(n, 1, |p| (TAU * p[0]).sin());
    let norm = norm_l2(&base);
    let make = |mean_frac: f64| {
        let mut f = base.clone();
        for v in f.values_mut() {
            *v += mean_frac * norm;
        }
        EllipticProblem::new(
            WSpec::identity(1),
            DiagonalField::constant(n, 1, 1.0),
            0.0,
            f,
        )
    };
    let below = elliptic::solve_neumann(&make(0.5e-10));
    let above = elliptic::solve_neumann(&make(2.0e-10));
    gate.check(
        "compatibility_boundary",
        below.is_ok() && matches!(above, Err(elliptic::EllipticError::IncompatibleRhs { .. })),
        format!("below: {:?}, above: {:?}", below.is_ok(), above.is_err()),
    );

    gate.finish();
}

/// Criterion 3: dual norm against the dense direct Riesz solve.
#[test]
fn criterion_3_dual_norm() {
    let mut gate = Gate::new("C3");
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = 0.0f64;
    for d in [1usize, 2] {
        let n = 16;
        let w = random_w(&mut rng, d);
        for _ in 0..10 {
            let f = random_grid(n, d, &mut rng);
            let a = DiagonalField::constant(n, d, 1.0);
            let direct = wlab::dense::solve_direct(&a, &w, 1.0, &f);
            let want = wlab::grid::norm_h1w(&direct, &w);
            let got = elliptic::dual_norm(&f, &w).unwrap();
            worst = worst.max((got - want).abs() / want.max(1e-300));
        }
    }
    gate.check(
        "dual_norm_vs_dense",
        worst <= 1e-8,
        format!("max rel err {worst:.3e} over 20 draws"),
    );
    gate.finish();
}

/// Criterion 4: parabolic integrator — mass, first-order accuracy against
/// the exact linear semigroup, range preservation, and the contraction
/// surrogate.
#[test]
fn criterion_4_parabolic() {
    let mut gate = Gate::new("C4");
    let w = WSpec::new(vec![AxisProfile {
        alpha: 1.0,
        jumps: vec![Jump {
            location: 0.47,
            size: 0.9,
        }],
    }])
    .unwrap();

    // mass drift over 1000 steps
    {
        let n = 32;
        let a = DiagonalField::constant(n, 1, 1.0);
        let phi = PhiSpec::quadratic(0.5).unwrap();
        let gamma = GridFunction::sample(n, 1, |p| 0.5 + 0.3 * (TAU * p[0]).sin());
        let dt = 1e-5;
        let ctl = TimeControls::with_dt(dt);
        let out = parabolic::integrate(&gamma, 1000.0 * dt, &ctl, &a, &w, &phi, &[], &[]).unwrap();
        gate.check(
            "mass_drift_1000_steps",
            out.mass_drift <= 1e-10,
            format!("drift {:.3e}", out.mass_drift),
        );
    }

    // linear case against the exact discrete semigroup; order from halving dt twice
    {
        let n = 32;
        let id = WSpec::identity(1);
        let a = DiagonalField::constant(n, 1, 1.0);
        let phi = PhiSpec::quadratic(0.0).unwrap();
        let gamma = GridFunction::sample(n, 1, |p| 0.5 + 0.3 * (TAU * p[0]).sin());
        let t_end = 0.1;
        let mu = elliptic::fundamental_eigenvalue(n);
        let exact = GridFunction::sample(n, 1, |p| {
            0.5 + 0.3 * (-mu * t_end).exp() * (TAU * p[0]).sin()
        });
        let mut errs = Vec::new();
        for halvings in 0..3 {
            let dt = t_end / (50.0 * 2f64.powi(halvings));
            let mut ctl = TimeControls::with_dt(dt);
            ctl.newton_tol = 1e-13;
            ctl.cg_tol = 1e-12;
            let out = parabolic::integrate(&gamma, t_end, &ctl, &a, &id, &phi, &[], &[]).unwrap();
            let sup = out
                .trajectory
                .last()
                .values()
                .iter()
                .zip(exact.values())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0f64, f64::max);
            errs.push(sup);
        }
        let orders: Vec<f64> = errs.windows(2).map(|p| (p[0] / p[1]).log2()).collect();
        gate.check(
            "linear_semigroup_order",
            orders.iter().all(|&o| o >= 0.9),
            format!("sup errors {errs:?}, observed orders {orders:?}"),
        );
    }

    // range preservation on 50 random initial profiles
    {
        let n = 16;
        let a = DiagonalField::constant(n, 1, 1.3);
        let phi = PhiSpec::quadratic(0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        let mut ok = true;
        for _ in 0..50 {
            let gamma =
                GridFunction::from_values(n, 1, (0..n).map(|_| rng.gen_range(0.0..1.0)).collect())
                    .unwrap();
            let ctl = TimeControls::with_dt(2e-4);
            let out = parabolic::integrate(&gamma, 2e-3, &ctl, &a, &w, &phi, &[], &[]).unwrap();
            for s in &out.trajectory.states {
                ok &= s
                    .values()
                    .iter()
                    .all(|&v| (-1e-9..=1.0 + 1e-9).contains(&v));
            }
        }
        gate.check(
            "range_preservation",
            ok,
            "50 random profiles stay in [0,1]".into(),
        );
    }

    // contraction surrogate: fit C once, reuse across perturbation sizes
    {
        let n = 32;
        let a = DiagonalField::constant(n, 1, 1.0);
        let phi = PhiSpec::quadratic(0.5).unwrap();
        let t_end = 0.05;
        let ctl = TimeControls::with_dt(5e-4);
        let base = GridFunction::sample(n, 1, |p| 0.5 + 0.25 * (TAU * p[0]).sin());
        let run = |gamma: &GridFunction| {
            parabolic::integrate(gamma, t_end, &ctl, &a, &w, &phi, &[], &[])
                .unwrap()
                .trajectory
                .last()
                .clone()
        };
        let rho_base = run(&base);
        let distance = |delta: f64| -> (f64, f64) {
            let pert = GridFunction::sample(n, 1, |p| {
                0.5 + 0.25 * (TAU * p[0]).sin() + delta * (TAU * p[0]).cos()
            });
            let d0 = {
                let mut diff = pert.clone();
                diff.axpy(-1.0, &base);
                norm_l2(&diff)
            };
            let mut diff = run(&pert);
            diff.axpy(-1.0, &rho_base);
            (d0, norm_l2(&diff))
        };
        let (d0, dt_) = distance(0.2);
        let c_fit = ((dt_ / d0).ln() / t_end).max(0.0);
        let mut ok = true;
        let mut details = vec![format!("C fitted {c_fit:.3}")];
        for &delta in &[0.1, 0.05, 0.025] {
            let (a0, at) = distance(delta);
            let bound = 2.0 * (c_fit * t_end).exp() * a0;
            details.push(format!("delta {delta}: d(T) {at:.3e} vs bound {bound:.3e}"));
            ok &= at <= bound;
        }
        gate.check("contraction_surrogate", ok, details.join("; "));
    }

    gate.finish();
}

/// Criterion 5: homogenization suite. The reference uses the expectation
/// matrix; the harmonic-mean diagnostic is printed alongside. For
/// independent per-site coefficients in one dimension the observed limit
/// follows the harmonic mean (see README), so the expectation-based gap
/// stalls and this criterion records that honestly instead of being
/// loosened to pass.
#[test]
fn criterion_5_homogenization() {
    let mut gate = Gate::new("C5");
    let w = WSpec::identity(1);
    let schedule = [16usize, 32, 64, 128];
    let seeds: Vec<u64> = (1..=8).collect();
    let lambda = 1.0;
    let rhs = |p: &[f64]| (TAU * p[0]).sin();
    let theta = 2.0;

    let mut initial_mean = 0.0;
    let mut final_mean = 0.0;
    let mut trend_failures = 0usize;
    let mut harmonic_rows = Vec::new();
    for &seed in &seeds {
        let e = EnvironmentSpec {
            theta,
            law: Law::TwoPoint { p: 0.5 },
            seed,
            d: 1,
        };
        let rep = env::h_convergence_experiment(&e, &w, lambda, &rhs, &schedule).unwrap();
        initial_mean += rep.records[0].l2_gap / seeds.len() as f64;
        final_mean += rep.records.last().unwrap().l2_gap / seeds.len() as f64;
        // Prop-6.1-style trends: allow at most one inversion per seed per quantity
        for series in [
            rep.records.iter().map(|r| r.norm_gap).collect::<Vec<_>>(),
            rep.records.iter().map(|r| r.energy_gap).collect::<Vec<_>>(),
        ] {
            let inversions = series.windows(2).filter(|p| p[1] > p[0]).count();
            if inversions > 1 {
                trend_failures += 1;
            }
        }
        let harm = vec![1.0 / (0.5 * (1.0 / theta + theta))];
        let hrep =
            env::h_convergence_with_reference(&e, &w, lambda, &rhs, &schedule, &harm).unwrap();
        harmonic_rows.push((hrep.records[0].l2_gap, hrep.records.last().unwrap().l2_gap));
    }
    let ratio = final_mean / initial_mean;
    let harm_ratio: f64 = harmonic_rows.iter().map(|r| r.1 / r.0).sum::<f64>() / seeds.len() as f64;
    println!(
        "[C5] diagnostic: expectation-reference mean gaps {initial_mean:.4e} -> {final_mean:.4e} \
         (ratio {ratio:.3}); harmonic-reference mean ratio {harm_ratio:.3}"
    );
    gate.check(
        "l2_gap_halves",
        ratio <= 0.5,
        format!("final/initial mean l2 gap ratio {ratio:.3} (threshold 0.5)"),
    );
    gate.check(
        "prop_6_1_trends",
        trend_failures == 0,
        format!(
            "{trend_failures} of {} seed/quantity series had >1 inversion",
            2 * seeds.len()
        ),
    );

    // constant-environment control: the gap is pure discretization error of
    // the reference pair
    {
        let e = EnvironmentSpec {
            theta,
            law: Law::TwoPoint { p: 1.0 },
            seed: 1,
            d: 1,
        };
        let rep = env::h_convergence_experiment(&e, &w, lambda, &rhs, &schedule).unwrap();
        let control_gap = rep.records.last().unwrap().l2_gap;
        // Richardson-style estimate of the reference solve's own error: the
        // distance between consecutive constant-coefficient refinements
        let est = {
            let fine = env::h_convergence_with_reference(
                &e,
                &w,
                lambda,
                &rhs,
                &[2 * schedule.last().unwrap()],
                &env::homogenized_matrix(&e),
            )
            .unwrap();
            fine.records[0].l2_gap
        };
        gate.check(
            "constant_env_control",
            control_gap <= 6.0 * est + 1e-14,
            format!("control gap {control_gap:.3e} vs reference-error estimate {est:.3e}"),
        );
    }

    gate.finish();
}

/// Criterion 6: exact reversibility, conservation, and the semigroup
/// goodness-of-fit on the enumerable chain.
#[test]
fn criterion_6_exclusion_exact() {
    let mut gate = Gate::new("C6");

    // detailed balance on full enumerations
    let mut worst = 0.0f64;
    for &n in &[4usize, 5] {
        for &b in &[-0.25, 0.0, 0.5] {
            for &alpha in &[0.2, 0.5, 0.8] {
                let rates =
                    RateTable::build(&WSpec::identity(1), &DiagonalField::constant(n, 1, 1.0), b)
                        .unwrap();
                let rep = exclusion::check_detailed_balance(&rates, alpha).unwrap();
                worst = worst.max(rep.max_violation);
            }
        }
    }
    gate.check(
        "detailed_balance",
        worst <= 1e-14,
        format!("max violation {worst:.3e}"),
    );

    // particle conservation on simulated trajectories
    {
        let mut ok = true;
        let mut rng = ChaCha8Rng::seed_from_u64(606);
        for trial in 0..20 {
            let n = 16;
            let w = if trial % 2 == 0 {
                WSpec::identity(1)
            } else {
                WSpec::new(vec![AxisProfile {
                    alpha: 1.0,
                    jumps: vec![Jump {
                        location: 0.45,
                        size: 0.5,
                    }],
                }])
                .unwrap()
            };
            let rates = RateTable::build(&w, &DiagonalField::constant(n, 1, 1.0), 0.5).unwrap();
            let eta0 = ParticleConfig::bernoulli(n, 1, &|_| 0.5, &mut rng);
            let out = exclusion::simulate(&eta0, &rates, 0.05, 7000 + trial, &[0.01, 0.05], &[]);
            ok &= out.initial_particles == out.final_particles;
            for site_row in &out.site_occupancy {
                let count: f64 = site_row.iter().sum();
                ok &= (count - out.initial_particles as f64).abs() < 1e-12;
            }
        }
        gate.check("particle_conservation", ok, "20 trajectories, exact".into());
    }

    // goodness of fit against exp(tQ) on the 16-state chain
    {
        let n = 4;
        let rates = RateTable::build(
            &WSpec::identity(1),
            &DiagonalField::constant(n, 1, 1.0),
            0.5,
        )
        .unwrap();
        let q = exclusion::dense_generator(&rates).unwrap();
        let t = 0.03;
        let eig = nalgebra::SymmetricEigen::new(q.clone());
        let exp_tq = &eig.eigenvectors
            * nalgebra::DMatrix::from_diagonal(&eig.eigenvalues.map(|l| (l * t).exp()))
            * eig.eigenvectors.transpose();
        let start: u64 = 0b0101;
        let probs: Vec<f64> = (0..16).map(|s| exp_tq[(start as usize, s)]).collect();

        let runs = 100_000usize;
        let mut counts = [0usize; 16];
        for r in 0..runs {
            let eta0 = ParticleConfig::from_bitmask(n, 1, start);
            let out = exclusion::simulate(&eta0, &rates, t, 42_000 + r as u64, &[], &[]);
            counts[out.final_config.as_bitmask() as usize] += 1;
        }
        let mut ok = true;
        let mut worst_z = 0.0f64;
        for s in 0..16 {
            let p = probs[s].clamp(0.0, 1.0);
            let sigma = (runs as f64 * p * (1.0 - p)).sqrt();
            if sigma < 1.0 {
                // states unreachable in the particle-number sector
                ok &= counts[s] as f64 <= runs as f64 * p + 3.0;
                continue;
            }
            let z = (counts[s] as f64 - runs as f64 * p).abs() / sigma;
            worst_z = worst_z.max(z);
            ok &= z <= 3.0;
        }
        gate.check(
            "generator_goodness_of_fit",
            ok,
            format!("worst |z| {worst_z:.2} over 16 states, {runs} runs"),
        );
    }

    gate.finish();
}

/// Criterion 7: hydrodynamic closure — linear case against the exact
/// semigroup-driven integrator, nonlinear membrane case against the
/// integrator with the effective matrix, and the grid-doubling trend.
#[test]
fn criterion_7_hydro_closure() {
    let mut gate = Gate::new("C7");
    let sample_times = [0.01, 0.05];
    let gamma = |p: &[f64]| 0.5 + 0.3 * (TAU * p[0]).sin();
    let tests_for = |n: usize| {
        let spec = wlab::testfns::TestFunctionSpec {
            family: wlab::testfns::Family::AxisSinusoids,
            max_k: 2,
            include_constant: true,
        };
        wlab::testfns::make_test_functions(&spec, n, 1).unwrap()
    };
    let ctl = |dt: f64| {
        let mut c = TimeControls::with_dt(dt);
        c.newton_tol = 1e-11;
        c
    };

    // linear case: b = 0, identity profile, unit coefficients
    {
        let n = 128;
        let w = WSpec::identity(1);
        let rates = RateTable::build(&w, &DiagonalField::constant(n, 1, 1.0), 0.0).unwrap();
        let report = exclusion::hydro_compare(
            &gamma,
            &rates,
            &[1.0],
            &w,
            &sample_times,
            64,
            1,
            &tests_for(n),
            &ctl(1e-4),
        )
        .unwrap();
        let mut ok = true;
        let mut worst = 0.0f64;
        for row in &report.rows {
            let tol = (3.0 * row.mc_stderr).max(0.02);
            worst = worst.max(row.gap / tol);
            ok &= row.gap <= tol;
        }
        gate.check(
            "linear_closure",
            ok,
            format!(
                "worst gap/tolerance {worst:.2} over {} rows",
                report.rows.len()
            ),
        );
    }

    // nonlinear membrane case at N = 128 and the doubling trend at N = 256
    {
        let w = WSpec::new(vec![AxisProfile {
            alpha: 1.0,
            jumps: vec![Jump {
                location: 0.45,
                size: 0.5,
            }],
        }])
        .unwrap();
        let run = |n: usize, replicas: usize| {
            let rates = RateTable::build(&w, &DiagonalField::constant(n, 1, 1.0), 0.5).unwrap();
            exclusion::hydro_compare(
                &gamma,
                &rates,
                &[1.0],
                &w,
                &sample_times,
                replicas,
                1,
                &tests_for(n),
                &ctl(5e-5),
            )
            .unwrap()
        };
        let at_128 = run(128, 64);
        let mut ok = true;
        let mut worst = 0.0f64;
        for row in &at_128.rows {
            let tol = (3.0 * row.mc_stderr).max(0.05);
            worst = worst.max(row.gap / tol);
            ok &= row.gap <= tol;
        }
        gate.check(
            "membrane_closure",
            ok,
            format!("worst gap/tolerance {worst:.2} at N=128, R=64"),
        );

        let at_256 = run(256, 128);
        let max_gap =
            |rep: &exclusion::HydroReport| rep.rows.iter().map(|r| r.gap).fold(0.0f64, f64::max);
        let (g128, g256) = (max_gap(&at_128), max_gap(&at_256));
        gate.check(
            "doubling_trend",
            g256 <= g128,
            format!("max gap N=256 {g256:.4e} vs N=128 {g128:.4e}"),
        );
    }

    gate.finish();
}

/// Criterion 8: byte-identical CSV bodies for identical config and seed,
/// independent of the worker-thread count.
#[test]
fn criterion_8_determinism() {
    use wlab::config::{
        CoefficientSpec, ExperimentConfig, ExperimentKind, ProfileSpec, Tolerances,
    };
    use wlab::runner::{run, RunOverrides};

    let mut gate = Gate::new("C8");
    let base = std::env::temp_dir().join(format!("wlab_det_{}", std::process::id()));
    let make_cfg = |dir: &std::path::Path| ExperimentConfig {
        experiment: ExperimentKind::Hydro,
        w: vec![AxisProfile {
            alpha: 1.0,
            jumps: vec![Jump {
                location: 0.45,
                size: 0.5,
            }],
        }],
        coefficients: CoefficientSpec::Random {
            theta: 2.0,
            law: Law::TwoPoint { p: 0.5 },
            seed: 11,
        },
        lambda: None,
        b: Some(0.5),
        n_schedule: vec![32],
        t_end: None,
        dt: Some(2e-4),
        sample_times: vec![0.01, 0.02],
        tolerances: Tolerances::default(),
        seeds: vec![5],
        replicas: Some(8),
        test_functions: wlab::testfns::TestFunctionSpec {
            family: wlab::testfns::Family::AxisSinusoids,
            max_k: 1,
            include_constant: true,
        },
        initial_profile: Some(ProfileSpec::Sine {
            mean: 0.5,
            amplitude: 0.3,
            k: 1,
        }),
        rhs: None,
        source: None,
        output_dir: dir.to_path_buf(),
    };

    let dirs: Vec<std::path::PathBuf> = (0..3).map(|i| base.join(format!("run{i}"))).collect();
    for (i, dir) in dirs.iter().enumerate() {
        let overrides = RunOverrides {
            output_dir: None,
            seed: None,
            // exercise different pool widths; the third run uses the default
            threads: match i {
                0 => Some(1),
                1 => Some(4),
                _ => None,
            },
        };
        run(&make_cfg(dir), &overrides).unwrap();
    }
    let mut ok = true;
    let mut detail = Vec::new();
    for name in ["hydro_raw.csv", "hydro_aggregated.csv", "hydro_density.csv"] {
        let first = std::fs::read(dirs[0].join(name)).unwrap();
        for dir in &dirs[1..] {
            let other = std::fs::read(dir.join(name)).unwrap();
            let same = first == other;
            ok &= same;
            if !same {
                detail.push(format!("{name} differs for {}", dir.display()));
            }
        }
    }
    gate.check(
        "csv_bodies_identical",
        ok,
        if detail.is_empty() {
            "3 runs x 3 files".into()
        } else {
            detail.join("; ")
        },
    );
    std::fs::remove_dir_all(&base).ok();
    gate.finish();
}
