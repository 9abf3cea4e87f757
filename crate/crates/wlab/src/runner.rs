//! Experiment dispatcher: validates a config, runs the named experiment,
//! and writes reproducible artifacts (CSV tables plus a JSON manifest
//! capturing the resolved configuration, seeds, and versions).

use crate::conductance::WSpec;
use crate::config::{CoefficientSpec, ExperimentConfig, ExperimentKind, ProfileSpec};
use crate::elliptic::{self, EllipticProblem};
use crate::env::{self, EnvironmentSpec};
use crate::exclusion::{self, RateTable};
use crate::grid::{norm_l2, DiagonalField, GridFunction};
use crate::io::fmt_f64;
use crate::manufactured::{Manufactured, PiecewiseSource};
use crate::parabolic::{self, PhiSpec, TimeControls};
use crate::testfns;
use rayon::prelude::*;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration invalid:\n{}", .0.join("\n"))]
    Validation(Vec<String>),
    #[error("{0}")]
    Experiment(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// Exit status contract: 2 for config problems, 1 for module failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Default, Clone)]
pub struct RunOverrides {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub artifacts: Vec<PathBuf>,
}

pub fn run(config: &ExperimentConfig, overrides: &RunOverrides) -> Result<RunOutcome, RunError> {
    let mut cfg = config.clone();
    if let Some(dir) = &overrides.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(seed) = overrides.seed {
        cfg.seeds = vec![seed];
    }
    cfg.validate().map_err(RunError::Validation)?;

    let work = || -> Result<RunOutcome, RunError> {
        let started = Instant::now();
        fs::create_dir_all(&cfg.output_dir)?;
        let artifacts = match cfg.experiment {
            ExperimentKind::Elliptic => run_elliptic(&cfg)?,
            ExperimentKind::Neumann => run_neumann(&cfg)?,
            ExperimentKind::Parabolic => run_parabolic(&cfg)?,
            ExperimentKind::Homogenize => run_homogenize(&cfg)?,
            ExperimentKind::Hydro => run_hydro(&cfg)?,
            ExperimentKind::Selftest => run_selftest(&cfg)?,
        };
        let manifest = write_manifest(&cfg, &artifacts, started.elapsed().as_secs_f64())?;
        let mut all = artifacts;
        all.push(manifest);
        Ok(RunOutcome {
            out_dir: cfg.output_dir.clone(),
            artifacts: all,
        })
    };

    match overrides.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| RunError::Experiment(format!("thread pool: {e}")))?;
            pool.install(work)
        }
        None => work(),
    }
}

fn w_spec(cfg: &ExperimentConfig) -> Result<WSpec, RunError> {
    WSpec::new(cfg.w.clone()).map_err(|e| RunError::Validation(vec![format!("w: {e}")]))
}

fn coefficient_field(cfg: &ExperimentConfig, n: usize) -> Result<DiagonalField, RunError> {
    match cfg.coefficients {
        CoefficientSpec::Constant { value } => Ok(DiagonalField::constant(n, cfg.dim(), value)),
        CoefficientSpec::Random { .. } => {
            let e = cfg
                .coefficients
                .environment(cfg.dim())
                .expect("random spec");
            e.validate().map_err(|m| RunError::Validation(vec![m]))?;
            Ok(env::sample_field(&e, n))
        }
    }
}

fn rhs_fn(spec: &ProfileSpec) -> impl Fn(&[f64]) -> f64 + Sync + '_ {
    move |p: &[f64]| spec.eval(p)
}

fn write_table<P: AsRef<Path>>(
    path: P,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<PathBuf, RunError> {
    let path = path.as_ref().to_path_buf();
    let mut out = std::io::BufWriter::new(fs::File::create(&path)?);
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(path)
}

fn write_manifest(
    cfg: &ExperimentConfig,
    artifacts: &[PathBuf],
    wall_clock: f64,
) -> Result<PathBuf, RunError> {
    let path = cfg.output_dir.join("manifest.json");
    let doc = serde_json::json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": cfg.experiment.name(),
        "config": cfg,
        "seeds": cfg.seeds,
        "wall_clock_seconds": wall_clock,
        "artifacts": artifacts.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect::<Vec<_>>(),
    });
    fs::write(
        &path,
        serde_json::to_string_pretty(&doc).expect("manifest serializes"),
    )?;
    Ok(path)
}

/// Manufactured-solution convergence study: one row per grid size.
fn run_elliptic(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, RunError> {
    let w = w_spec(cfg)?;
    let lambda = cfg.lambda.expect("validated");
    let src = cfg.source.clone().unwrap_or_default();
    let exact = Manufactured::new(
        w.clone(),
        PiecewiseSource::mean_zero(&src.interior_breaks, &src.values),
        0.2,
    );
    let mut rows = Vec::new();
    for &n in &cfg.n_schedule {
        let f = GridFunction::sample(n, 1, |p| exact.rhs(lambda, p[0]));
        let a = coefficient_field(cfg, n)?;
        if !matches!(cfg.coefficients, CoefficientSpec::Constant { value } if value == 1.0) {
            return Err(RunError::Validation(vec![
                "elliptic: the manufactured study needs unit coefficients".into(),
            ]));
        }
        let mut problem = EllipticProblem::new(w.clone(), a, lambda, f);
        problem.tol = cfg.tolerances.solver_tol;
        let sol = elliptic::solve(&problem)
            .map_err(|e| RunError::Experiment(format!("elliptic at N={n}: {e}")))?;
        let mut diff = sol.u.clone();
        for (i, v) in diff.values_mut().iter_mut().enumerate() {
            *v -= exact.u(i as f64 / n as f64);
        }
        rows.push(vec![
            n.to_string(),
            fmt_f64(norm_l2(&diff)),
            fmt_f64(sol.norms.h1w),
            sol.iterations.to_string(),
            fmt_f64(sol.final_residual),
        ]);
    }
    Ok(vec![write_table(
        cfg.output_dir.join("elliptic_convergence.csv"),
        &["N", "l2_error", "h1w_norm", "iterations", "residual"],
        rows,
    )?])
}

/// Zero-mass elliptic solve; errors out on an incompatible right-hand side.
fn run_neumann(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, RunError> {
    let w = w_spec(cfg)?;
    let n = cfg.n_schedule[0];
    let d = cfg.dim();
    let rhs = cfg.rhs.expect("validated");
    let f = GridFunction::sample(n, d, |p| rhs.eval(p));
    let a = coefficient_field(cfg, n)?;
    let mut problem = EllipticProblem::new(w.clone(), a, 0.0, f);
    problem.tol = cfg.tolerances.solver_tol;
    let sol = elliptic::solve_neumann(&problem)
        .map_err(|e| RunError::Experiment(format!("neumann: {e}")))?;
    let mut rows = Vec::with_capacity(sol.u.len());
    for flat in 0..sol.u.len() {
        let mut row: Vec<String> = (0..d).map(|j| sol.u.coord(flat, j).to_string()).collect();
        row.push(fmt_f64(sol.u.values()[flat]));
        rows.push(row);
    }
    let mut header: Vec<String> = (0..d).map(|j| format!("i{j}")).collect();
    header.push("value".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let table = write_table(
        cfg.output_dir.join("neumann_solution.csv"),
        &header_refs,
        rows,
    )?;
    let summary = cfg.output_dir.join("neumann_summary.json");
    fs::write(
        &summary,
        serde_json::to_string_pretty(&serde_json::json!({
            "iterations": sol.iterations,
            "residual": sol.final_residual,
            "l2_norm": sol.norms.l2,
            "h1w_norm": sol.norms.h1w,
            "mean": sol.u.mean(),
        }))
        .unwrap(),
    )?;
    Ok(vec![table, summary])
}

/// Nonlinear diffusion run: snapshot table plus an energy/mass summary.
fn run_parabolic(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, RunError> {
    let w = w_spec(cfg)?;
    let n = cfg.n_schedule[0];
    let d = cfg.dim();
    let t_end = cfg.t_end.expect("validated");
    let b = cfg.b.expect("validated");
    let phi = PhiSpec::quadratic(b).map_err(|e| RunError::Validation(vec![format!("b: {e}")]))?;
    let a = coefficient_field(cfg, n)?;
    let gamma_spec = cfg.initial_profile.expect("validated");
    let gamma = GridFunction::sample(n, d, |p| gamma_spec.eval(p));
    let dt = cfg
        .dt
        .unwrap_or_else(|| parabolic::default_dt(t_end, n, a.theta(), &w));
    let mut ctl = TimeControls::with_dt(dt);
    ctl.newton_tol = cfg.tolerances.newton_tol;
    ctl.cg_tol = cfg.tolerances.solver_tol;
    let snapshots: Vec<f64> = if cfg.sample_times.is_empty() {
        (1..=10).map(|i| t_end * i as f64 / 10.0).collect()
    } else {
        cfg.sample_times.clone()
    };
    let tests = testfns::make_test_functions(&cfg.test_functions, n, d)
        .map_err(|e| RunError::Validation(vec![format!("test_functions: {e}")]))?;
    let out = parabolic::integrate(&gamma, t_end, &ctl, &a, &w, &phi, &snapshots, &tests)
        .map_err(|e| RunError::Experiment(format!("parabolic: {e}")))?;

    let mut rows = Vec::new();
    for (m, state) in out.trajectory.states.iter().enumerate() {
        let t = out.trajectory.times[m];
        for flat in 0..state.len() {
            let mut row = vec![fmt_f64(t)];
            row.extend((0..d).map(|j| state.coord(flat, j).to_string()));
            row.push(fmt_f64(state.values()[flat]));
            rows.push(row);
        }
    }
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((0..d).map(|j| format!("i{j}")));
    header.push("value".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let table = write_table(
        cfg.output_dir.join("parabolic_snapshots.csv"),
        &header_refs,
        rows,
    )?;

    let e = parabolic::energy(&out.trajectory, &w);
    let summary = cfg.output_dir.join("parabolic_summary.json");
    fs::write(
        &summary,
        serde_json::to_string_pretty(&serde_json::json!({
            "mass_drift": out.mass_drift,
            "max_newton_iters": out.max_newton_iters,
            "weak_form_max_defect": out.weak_form.max_defect,
            "energy_per_axis": e.per_axis,
            "energy_total": e.total,
            "dt": dt,
        }))
        .unwrap(),
    )?;
    Ok(vec![table, summary])
}

/// Seed-averaged shrinking-gap experiment against the expectation matrix.
fn run_homogenize(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, RunError> {
    let w = w_spec(cfg)?;
    let lambda = cfg.lambda.expect("validated");
    let rhs = cfg.rhs.expect("validated");
    let base_env = cfg
        .coefficients
        .environment(cfg.dim())
        .expect("validated: random coefficients");
    let reports: Vec<(u64, env::HomogenizationReport)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let e = EnvironmentSpec { seed, ..base_env };
            let rhs_f = rhs_fn(&rhs);
            let rep = env::h_convergence_experiment(&e, &w, lambda, &rhs_f, &cfg.n_schedule)
                .map_err(|err| RunError::Experiment(format!("homogenize seed {seed}: {err}")))?;
            Ok((seed, rep))
        })
        .collect::<Result<_, RunError>>()?;

    let mut rows = Vec::new();
    for (seed, rep) in &reports {
        for r in &rep.records {
            rows.push(vec![
                seed.to_string(),
                r.n.to_string(),
                fmt_f64(r.l2_gap),
                fmt_f64(r.norm_gap),
                fmt_f64(r.energy_gap),
            ]);
        }
    }
    let table = write_table(
        cfg.output_dir.join("homogenize_gaps.csv"),
        &["seed", "N", "l2_gap", "norm_gap", "energy_gap"],
        rows,
    )?;

    let first = &reports[0].1;
    let mean_gap_at = |idx: usize| -> f64 {
        reports
            .iter()
            .map(|(_, r)| r.records[idx].l2_gap)
            .sum::<f64>()
            / reports.len() as f64
    };
    let summary = cfg.output_dir.join("homogenize_summary.json");
    fs::write(
        &summary,
        serde_json::to_string_pretty(&serde_json::json!({
            "homogenized_matrix": first.homogenized,
            "reference_n": first.reference_n,
            "mean_initial_l2_gap": mean_gap_at(0),
            "mean_final_l2_gap": mean_gap_at(cfg.n_schedule.len() - 1),
            "seeds": cfg.seeds,
        }))
        .unwrap(),
    )?;
    Ok(vec![table, summary])
}

/// Replica-averaged particle system against the integrated equation.
fn run_hydro(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, RunError> {
    let w = w_spec(cfg)?;
    let n = cfg.n_schedule[0];
    let d = cfg.dim();
    let b = cfg.b.expect("validated");
    let replicas = cfg.replicas.expect("validated");
    let master_seed = cfg.seeds[0];
    let gamma_spec = cfg.initial_profile.expect("validated");
    let a = coefficient_field(cfg, n)?;
    let hydro_matrix: Vec<f64> = match cfg.coefficients {
        CoefficientSpec::Constant { value } => vec![value; d],
        CoefficientSpec::Random { .. } => {
            env::homogenized_matrix(&cfg.coefficients.environment(d).unwrap())
        }
    };
    let rates = RateTable::build(&w, &a, b)
        .map_err(|e| RunError::Validation(vec![format!("hydro: {e}")]))?;
    let tests = testfns::make_test_functions(&cfg.test_functions, n, d)
        .map_err(|e| RunError::Validation(vec![format!("test_functions: {e}")]))?;
    let labels = testfns::labels(&cfg.test_functions, d);
    let t_end = *cfg.sample_times.last().unwrap();
    let dt = cfg
        .dt
        .unwrap_or_else(|| parabolic::default_dt(t_end, n, a.theta(), &w));
    let mut ctl = TimeControls::with_dt(dt);
    ctl.newton_tol = cfg.tolerances.newton_tol;
    ctl.cg_tol = cfg.tolerances.solver_tol;

    let gamma = move |p: &[f64]| gamma_spec.eval(p);
    let report = exclusion::hydro_compare(
        &gamma,
        &rates,
        &hydro_matrix,
        &w,
        &cfg.sample_times,
        replicas,
        master_seed,
        &tests,
        &ctl,
    )
    .map_err(|e| RunError::Experiment(format!("hydro: {e}")))?;

    let mut raw_rows = Vec::new();
    for (r, per_time) in report.raw.iter().enumerate() {
        for (ti, vals) in per_time.iter().enumerate() {
            for (h, v) in vals.iter().enumerate() {
                raw_rows.push(vec![
                    r.to_string(),
                    fmt_f64(cfg.sample_times[ti]),
                    labels[h].clone(),
                    fmt_f64(*v),
                ]);
            }
        }
    }
    let raw = write_table(
        cfg.output_dir.join("hydro_raw.csv"),
        &["replica", "t", "test_id", "value"],
        raw_rows,
    )?;

    let agg_rows = report
        .rows
        .iter()
        .map(|row| {
            vec![
                fmt_f64(row.t),
                labels[row.test_id].clone(),
                fmt_f64(row.mc_mean),
                fmt_f64(row.mc_stderr),
                fmt_f64(row.pde_value),
                fmt_f64(row.gap),
            ]
        })
        .collect::<Vec<_>>();
    let agg = write_table(
        cfg.output_dir.join("hydro_aggregated.csv"),
        &["t", "test_id", "mean", "stderr", "pde_value", "gap"],
        agg_rows,
    )?;

    let mut density_rows = Vec::new();
    for (ti, site_means) in report.mean_density.iter().enumerate() {
        for (site, m) in site_means.iter().enumerate() {
            density_rows.push(vec![
                fmt_f64(cfg.sample_times[ti]),
                site.to_string(),
                fmt_f64(*m),
            ]);
        }
    }
    let density = write_table(
        cfg.output_dir.join("hydro_density.csv"),
        &["t", "site", "mean_occupation"],
        density_rows,
    )?;
    Ok(vec![raw, agg, density])
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Fast exact-identity suite: discrete integration by parts, operator
/// symmetry and sign, increment telescoping, projector idempotence,
/// spectral and walk-generator cross-checks, and reversibility of the
/// particle rates.
pub fn selftest_checks() -> Vec<CheckOutcome> {
    use crate::grid::{
        apply_ln, apply_walk_generator, diff_w, inner_n, inner_wj, project_mean_zero,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let mut checks = Vec::new();
    let w1 = WSpec::new(vec![crate::conductance::AxisProfile {
        alpha: 1.0,
        jumps: vec![crate::conductance::Jump {
            location: 0.37,
            size: 0.8,
        }],
    }])
    .unwrap();

    // increment telescoping over random grid sizes
    {
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let n = rng.gen_range(3..200);
            let total: f64 = w1.increments(0, n).iter().sum();
            worst = worst.max((total - w1.period(0)).abs());
        }
        checks.push(CheckOutcome {
            name: "increment_telescoping",
            passed: worst <= 1e-12,
            detail: format!("max |sum - period| = {worst:.3e}"),
        });
    }

    // summation by parts, symmetry, non-positivity on random instances
    {
        let n = 8;
        let mut worst_sbp = 0.0f64;
        let mut worst_sym = 0.0f64;
        let mut worst_sign = 0.0f64;
        for _ in 0..100 {
            let len = n * n;
            let w2 = WSpec::new(vec![
                crate::conductance::AxisProfile {
                    alpha: rng.gen_range(0.5..2.0),
                    jumps: vec![crate::conductance::Jump {
                        location: rng.gen_range(0.0..1.0),
                        size: rng.gen_range(0.1..1.0),
                    }],
                },
                crate::conductance::AxisProfile {
                    alpha: rng.gen_range(0.5..2.0),
                    jumps: vec![],
                },
            ])
            .unwrap();
            let per_axis: Vec<Vec<f64>> = (0..2)
                .map(|_| (0..len).map(|_| rng.gen_range(0.5..2.0)).collect())
                .collect();
            let a = DiagonalField::new(n, 2, per_axis, 2.0).unwrap();
            let f = GridFunction::from_values(
                n,
                2,
                (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )
            .unwrap();
            let g = GridFunction::from_values(
                n,
                2,
                (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )
            .unwrap();
            let lf = apply_ln(&f, &a, &w2);
            let lg = apply_ln(&g, &a, &w2);
            let lhs = inner_n(&lf, &g);
            let mut rhs = 0.0;
            for j in 0..2 {
                let df = diff_w(&f, j, &w2);
                let dg = diff_w(&g, j, &w2);
                let mut adf = df.clone();
                for (v, &c) in adf.values_mut().iter_mut().zip(a.axis(j).iter()) {
                    *v *= c;
                }
                rhs -= inner_wj(&adf, &dg, j, &w2);
            }
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            worst_sbp = worst_sbp.max((lhs - rhs).abs() / scale);
            worst_sym = worst_sym.max((inner_n(&lf, &g) - inner_n(&f, &lg)).abs() / scale);
            worst_sign = worst_sign.max(inner_n(&lf, &f).max(0.0));
        }
        checks.push(CheckOutcome {
            name: "summation_by_parts",
            passed: worst_sbp <= 1e-12,
            detail: format!("max relative defect = {worst_sbp:.3e}"),
        });
        checks.push(CheckOutcome {
            name: "operator_symmetry",
            passed: worst_sym <= 1e-12,
            detail: format!("max relative asymmetry = {worst_sym:.3e}"),
        });
        checks.push(CheckOutcome {
            name: "dirichlet_nonnegativity",
            passed: worst_sign <= 1e-12,
            detail: format!("max positive part of <Lf,f> = {worst_sign:.3e}"),
        });
    }

    // projector idempotence
    {
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let f = GridFunction::from_values(
                16,
                1,
                (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )
            .unwrap();
            let p = project_mean_zero(&f);
            let pp = project_mean_zero(&p);
            let mut diff = p.clone();
            diff.axpy(-1.0, &pp);
            worst = worst.max(norm_l2(&diff)).max(p.mean().abs());
        }
        checks.push(CheckOutcome {
            name: "mean_zero_projector",
            passed: worst <= 1e-12,
            detail: format!("max idempotence/mean defect = {worst:.3e}"),
        });
    }

    // spectral oracle at N = 64
    {
        let n = 64;
        let f = GridFunction::sample(n, 1, |p| (std::f64::consts::TAU * p[0]).sin());
        let problem = EllipticProblem::new(
            WSpec::identity(1),
            DiagonalField::constant(n, 1, 1.0),
            1.0,
            f.clone(),
        );
        let sol = elliptic::solve(&problem);
        let passed = match &sol {
            Ok(s) => {
                let factor = 1.0 / (1.0 + elliptic::fundamental_eigenvalue(n));
                s.u.values()
                    .iter()
                    .zip(f.values())
                    .all(|(u, fv)| (u - factor * fv).abs() < 1e-8)
            }
            Err(_) => false,
        };
        checks.push(CheckOutcome {
            name: "spectral_oracle",
            passed,
            detail: "resolvent of the fundamental mode".into(),
        });
    }

    // walk-generator route equals the divergence-form route
    {
        let n = 8;
        let len = n;
        let per_axis = vec![(0..len).map(|_| rng.gen_range(0.5..2.0)).collect()];
        let a = DiagonalField::new(n, 1, per_axis, 2.0).unwrap();
        let f = GridFunction::from_values(n, 1, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .unwrap();
        let x = apply_ln(&f, &a, &w1);
        let y = apply_walk_generator(&f, &a, &w1);
        let mut diff = x.clone();
        diff.axpy(-1.0, &y);
        let defect = norm_l2(&diff) / norm_l2(&y).max(1.0);
        checks.push(CheckOutcome {
            name: "walk_generator_equality",
            passed: defect <= 1e-12,
            detail: format!("relative defect = {defect:.3e}"),
        });
    }

    // reversibility of the particle rates on the enumerable chain
    {
        let mut worst = 0.0f64;
        for &b in &[0.0, 0.5] {
            let a = DiagonalField::constant(4, 1, 1.0);
            let rates = RateTable::build(&WSpec::identity(1), &a, b).unwrap();
            let rep = exclusion::check_detailed_balance(&rates, 0.5).unwrap();
            worst = worst.max(rep.max_violation);
        }
        checks.push(CheckOutcome {
            name: "detailed_balance",
            passed: worst <= 1e-14,
            detail: format!("max violation = {worst:.3e}"),
        });
    }

    checks
}

fn run_selftest(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, RunError> {
    let checks = selftest_checks();
    let rows = checks
        .iter()
        .map(|c| {
            vec![
                c.name.to_string(),
                if c.passed { "pass" } else { "fail" }.to_string(),
                c.detail.clone(),
            ]
        })
        .collect::<Vec<_>>();
    let table = write_table(
        cfg.output_dir.join("selftest_report.csv"),
        &["check", "status", "detail"],
        rows,
    )?;
    for c in &checks {
        println!(
            "{} {} ({})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if checks.iter().any(|c| !c.passed) {
        return Err(RunError::Experiment("selftest failed".into()));
    }
    Ok(vec![table])
}
