//! Nonlinear diffusion `d_t rho = div(A grad_w Phi(rho))` on the discrete
//! torus, integrated by implicit Euler with a Newton iteration on the
//! monotone nonlinearity. Each Newton correction solves an SPD system: with
//! `D = diag(Phi'(v))`, the Jacobian system `(I - dt L D) delta = r` is
//! rewritten as `(D^{-1} - dt L) zeta = r`, `delta = D^{-1} zeta`, and handed
//! to conjugate gradients.
//!
//! The divergence form conserves mass exactly in exact arithmetic; after each
//! Newton solve the iterate is shifted by a constant (within the Newton
//! tolerance) so stored states carry no mass drift.

use crate::conductance::WSpec;
use crate::grid::{
    apply_ln, diff_w, inner_n, inner_wj, norm_l2, operator_diagonal, DiagonalField, GridFunction,
};
use crate::solver::{cg_solve, CgOptions};
use thiserror::Error;

/// Polynomial flux function `Phi` on `[l, r]` with a two-sided derivative
/// bound: `1/bound < Phi' < bound` on the whole interval.
#[derive(Debug, Clone)]
pub struct PhiSpec {
    /// Coefficients of `Phi`, lowest degree first.
    coeffs: Vec<f64>,
    l: f64,
    r: f64,
    bound: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum PhiError {
    #[error("empty coefficient list")]
    Empty,
    #[error("range [{l}, {r}] is empty")]
    EmptyRange { l: f64, r: f64 },
    #[error("derivative {value:.6} at x = {at:.6} violates the bound ({lo:.6}, {hi:.6})")]
    DerivativeOutOfBounds {
        at: f64,
        value: f64,
        lo: f64,
        hi: f64,
    },
}

impl PhiSpec {
    /// Validates the derivative bound on a fine sample of `[l, r]`.
    pub fn new(coeffs: Vec<f64>, l: f64, r: f64, bound: f64) -> Result<Self, PhiError> {
        if coeffs.is_empty() {
            return Err(PhiError::Empty);
        }
        if l >= r {
            return Err(PhiError::EmptyRange { l, r });
        }
        assert!(bound > 1.0, "derivative bound must exceed 1");
        let spec = PhiSpec {
            coeffs,
            l,
            r,
            bound,
        };
        let samples = 4096;
        for i in 0..=samples {
            let x = l + (r - l) * i as f64 / samples as f64;
            let dv = spec.deriv(x);
            if !(dv > 1.0 / bound && dv < bound) {
                return Err(PhiError::DerivativeOutOfBounds {
                    at: x,
                    value: dv,
                    lo: 1.0 / bound,
                    hi: bound,
                });
            }
        }
        Ok(spec)
    }

    /// The quadratic flux `Phi(x) = x + b x^2` on `[0, 1]`, `b > -1/2`,
    /// with the tight derivative bound.
    pub fn quadratic(b: f64) -> Result<Self, PhiError> {
        assert!(b > -0.5, "quadratic flux requires b > -1/2, got {b}");
        let lo = (1.0 + 2.0 * b).min(1.0);
        let hi = (1.0 + 2.0 * b).max(1.0);
        let bound = (hi.max(1.0 / lo)) * (1.0 + 1e-9) + 1e-12;
        PhiSpec::new(vec![0.0, 1.0, b], 0.0, 1.0, bound)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (k, &c) in self.coeffs.iter().enumerate().skip(1).rev() {
            acc = acc * x + k as f64 * c;
        }
        acc
    }

    pub fn range(&self) -> (f64, f64) {
        (self.l, self.r)
    }

    pub fn derivative_bound(&self) -> f64 {
        self.bound
    }

    pub fn apply(&self, f: &GridFunction) -> GridFunction {
        let mut out = f.clone();
        for v in out.values_mut() {
            *v = self.eval(*v);
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TimeControls {
    pub dt: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl TimeControls {
    pub fn with_dt(dt: f64) -> Self {
        assert!(dt > 0.0);
        TimeControls {
            dt,
            newton_tol: 1e-10,
            newton_max_iter: 12,
            cg_tol: 1e-9,
            cg_max_iter: 20_000,
        }
    }
}

/// Default step size: eight substeps of the fastest bond rate
/// `N^2 theta / (N dW)`, never coarser than a hundredth of the duration.
pub fn default_dt(t_end: f64, n: usize, theta: f64, w: &WSpec) -> f64 {
    let max_rate = n as f64 * theta / w.min_increment(n);
    (1.0 / (8.0 * max_rate)).min(t_end / 100.0)
}

#[derive(Debug, Error, PartialEq)]
pub enum ParabolicError {
    #[error(
        "Newton iteration diverged at t = {t:.6}: {iterations} iterations, residual {residual:.3e}"
    )]
    NewtonDivergence {
        t: f64,
        iterations: usize,
        residual: f64,
    },
    #[error("state left [{lo} - eps, {hi} + eps] at t = {t:.6} (value {value}); reduce dt")]
    RangeViolation {
        t: f64,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("initial state has value {value} outside [{lo}, {hi}]")]
    BadInitialState { value: f64, lo: f64, hi: f64 },
    #[error("inner solve failed at t = {t:.6}: {iterations} iterations, residual {residual:.3e}")]
    InnerSolve {
        t: f64,
        iterations: usize,
        residual: f64,
    },
}

/// One implicit Euler step: solves `v - dt L Phi(v) = rho` by Newton with
/// the previous state as the initial iterate. Returns the new state and the
/// number of Newton iterations.
pub fn step(
    rho: &GridFunction,
    dt: f64,
    a: &DiagonalField,
    w: &WSpec,
    phi: &PhiSpec,
    ctl: &TimeControls,
) -> Result<(GridFunction, usize), ParabolicError> {
    step_at(rho, dt, a, w, phi, ctl, 0.0)
}

fn step_at(
    rho: &GridFunction,
    dt: f64,
    a: &DiagonalField,
    w: &WSpec,
    phi: &PhiSpec,
    ctl: &TimeControls,
    t: f64,
) -> Result<(GridFunction, usize), ParabolicError> {
    let (l, r) = phi.range();
    let mut v = rho.clone();
    let minus_l_diag = operator_diagonal(a, w, 0.0);
    let target_mean = rho.mean();

    let residual = |v: &GridFunction| -> GridFunction {
        // G(v) = v - dt L Phi(v) - rho
        let mut g = apply_ln(&phi.apply(v), a, w);
        g.scale(-dt);
        g.axpy(1.0, v);
        g.axpy(-1.0, rho);
        g
    };

    let mut iters = 0;
    loop {
        let g = residual(&v);
        let g_norm = norm_l2(&g);
        if g_norm <= ctl.newton_tol {
            break;
        }
        if iters >= ctl.newton_max_iter {
            return Err(ParabolicError::NewtonDivergence {
                t,
                iterations: iters,
                residual: g_norm,
            });
        }
        iters += 1;

        let dphi: Vec<f64> = v.values().iter().map(|&x| phi.deriv(x)).collect();
        let mut jacobi: Vec<f64> = minus_l_diag.iter().map(|&d| dt * d).collect();
        for (jd, dp) in jacobi.iter_mut().zip(dphi.iter()) {
            *jd += 1.0 / dp;
        }
        let mut rhs = g;
        rhs.scale(-1.0);
        let sol = cg_solve(
            |z| {
                // (D^{-1} - dt L) z
                let mut out = apply_ln(z, a, w);
                out.scale(-dt);
                for (o, (zv, dp)) in out
                    .values_mut()
                    .iter_mut()
                    .zip(z.values().iter().zip(dphi.iter()))
                {
                    *o += zv / dp;
                }
                out
            },
            Some(&jacobi),
            &rhs,
            CgOptions {
                tol: ctl.cg_tol,
                max_iter: ctl.cg_max_iter,
                mean_zero: false,
            },
        )
        .map_err(|e| ParabolicError::InnerSolve {
            t,
            iterations: e.iterations,
            residual: e.residual,
        })?;
        for (vv, (z, dp)) in v
            .values_mut()
            .iter_mut()
            .zip(sol.x.values().iter().zip(dphi.iter()))
        {
            *vv += z / dp;
        }
    }

    // mass gauge: the exact step conserves the mean, so absorb the Newton
    // truncation into a constant shift (of residual size)
    let shift = target_mean - v.mean();
    for vv in v.values_mut() {
        *vv += shift;
    }

    let eps = 1e-9;
    for &vv in v.values() {
        if vv < l - eps || vv > r + eps {
            return Err(ParabolicError::RangeViolation {
                t,
                value: vv,
                lo: l,
                hi: r,
            });
        }
    }
    Ok((v, iters))
}

/// Time grid of stored states plus per-step Newton counts.
#[derive(Debug, Clone)]
pub struct ParabolicTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<GridFunction>,
    pub newton_iters: Vec<usize>,
    pub t_end: f64,
}

impl ParabolicTrajectory {
    pub fn last(&self) -> &GridFunction {
        self.states.last().expect("trajectory is nonempty")
    }

    pub fn state_at(&self, t: f64) -> Option<&GridFunction> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .map(|i| &self.states[i])
    }
}

/// Residuals of the summed weak form, one row per (test function, stored
/// time): `<rho_t, H> - <gamma, H> - sum_steps dt <Phi(rho), L H>`.
#[derive(Debug, Clone)]
pub struct WeakFormReport {
    /// `defects[h][m]` for test `h` and stored time index `m`.
    pub defects: Vec<Vec<f64>>,
    pub max_defect: f64,
}

#[derive(Debug)]
pub struct Integration {
    pub trajectory: ParabolicTrajectory,
    pub weak_form: WeakFormReport,
    pub max_newton_iters: usize,
    /// Largest deviation of a stored state's mean from the initial mean.
    pub mass_drift: f64,
}

/// Integrates from `gamma` to `t_end`, storing the initial state, every
/// requested snapshot time (hit exactly by locally shortening steps), and the
/// final state. The weak form is certified against each supplied test
/// function and reported, not hidden.
#[allow(clippy::too_many_arguments)]
pub fn integrate(
    gamma: &GridFunction,
    t_end: f64,
    ctl: &TimeControls,
    a: &DiagonalField,
    w: &WSpec,
    phi: &PhiSpec,
    snapshot_times: &[f64],
    test_fns: &[GridFunction],
) -> Result<Integration, ParabolicError> {
    let (l, r) = phi.range();
    for &v in gamma.values() {
        if v < l || v > r {
            return Err(ParabolicError::BadInitialState {
                value: v,
                lo: l,
                hi: r,
            });
        }
    }
    let mut marks: Vec<f64> = snapshot_times
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t <= t_end * (1.0 + 1e-12))
        .collect();
    marks.push(t_end);
    marks.sort_by(|x, y| x.partial_cmp(y).unwrap());
    marks.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * t_end);

    let lh: Vec<GridFunction> = test_fns.iter().map(|h| apply_ln(h, a, w)).collect();
    let mut weak_acc = vec![0.0; test_fns.len()];
    let h0: Vec<f64> = test_fns.iter().map(|h| inner_n(gamma, h)).collect();

    let mut times = vec![0.0];
    let mut states = vec![gamma.clone()];
    let mut newton_iters = vec![0usize];
    let mut defects: Vec<Vec<f64>> = vec![vec![0.0]; test_fns.len()];
    let mut max_newton = 0;
    let mut rho = gamma.clone();
    let mut t = 0.0;

    for &mark in &marks {
        let gap = mark - t;
        if gap <= 0.0 {
            continue;
        }
        let nsteps = (gap / ctl.dt).ceil().max(1.0) as usize;
        let dt = gap / nsteps as f64;
        let mut segment_newton = 0;
        for _ in 0..nsteps {
            let (next, iters) = step_at(&rho, dt, a, w, phi, ctl, t)?;
            segment_newton = segment_newton.max(iters);
            let phi_next = phi.apply(&next);
            for (accum, lh_fn) in weak_acc.iter_mut().zip(lh.iter()) {
                *accum += dt * inner_n(&phi_next, lh_fn);
            }
            rho = next;
            t += dt;
        }
        max_newton = max_newton.max(segment_newton);
        t = mark;
        times.push(t);
        states.push(rho.clone());
        newton_iters.push(segment_newton);
        for (i, h) in test_fns.iter().enumerate() {
            let defect = inner_n(&rho, h) - h0[i] - weak_acc[i];
            defects[i].push(defect);
        }
    }

    let max_defect = defects
        .iter()
        .flat_map(|row| row.iter().map(|d| d.abs()))
        .fold(0.0f64, f64::max);
    let gamma_mean = gamma.mean();
    let mass_drift = states
        .iter()
        .map(|s| (s.mean() - gamma_mean).abs())
        .fold(0.0f64, f64::max);

    Ok(Integration {
        trajectory: ParabolicTrajectory {
            times,
            states,
            newton_iters,
            t_end,
        },
        weak_form: WeakFormReport {
            defects,
            max_defect,
        },
        max_newton_iters: max_newton,
        mass_drift,
    })
}

/// Per-axis and total dissipation of a trajectory: left-endpoint quadrature
/// of the squared measure-weighted gradient over the stored time grid.
#[derive(Debug, Clone)]
pub struct EnergyReport {
    pub per_axis: Vec<f64>,
    pub total: f64,
}

pub fn energy(traj: &ParabolicTrajectory, w: &WSpec) -> EnergyReport {
    assert!(!traj.states.is_empty(), "trajectory is empty");
    let d = traj.states[0].dim();
    let mut per_axis = vec![0.0; d];
    for (m, state) in traj.states.iter().enumerate() {
        let t_next = if m + 1 < traj.times.len() {
            traj.times[m + 1]
        } else {
            traj.t_end
        };
        let dt = t_next - traj.times[m];
        if dt <= 0.0 {
            continue;
        }
        for (j, q) in per_axis.iter_mut().enumerate() {
            let g = diff_w(state, j, w);
            *q += dt * inner_wj(&g, &g, j, w);
        }
    }
    let total = per_axis.iter().sum();
    EnergyReport { per_axis, total }
}

/// Variational lower estimate of the energy: for each stored segment and
/// axis, maximizes `-2 <dH, du> - <dH, dH>` over the span of the supplied
/// test functions. Always below `energy` and approaches it as the span
/// grows.
pub fn energy_sup_form(traj: &ParabolicTrajectory, w: &WSpec, test_fns: &[GridFunction]) -> f64 {
    assert!(!traj.states.is_empty() && !test_fns.is_empty());
    let d = traj.states[0].dim();
    let mut total = 0.0;
    for (m, state) in traj.states.iter().enumerate() {
        let t_next = if m + 1 < traj.times.len() {
            traj.times[m + 1]
        } else {
            traj.t_end
        };
        let dt = t_next - traj.times[m];
        if dt <= 0.0 {
            continue;
        }
        for j in 0..d {
            let du = diff_w(state, j, w);
            let dh: Vec<GridFunction> = test_fns.iter().map(|h| diff_w(h, j, w)).collect();
            let k = dh.len();
            let mut gram = nalgebra::DMatrix::zeros(k, k);
            let mut lin = nalgebra::DVector::zeros(k);
            for p in 0..k {
                lin[p] = inner_wj(&dh[p], &du, j, w);
                for q in p..k {
                    let v = inner_wj(&dh[p], &dh[q], j, w);
                    gram[(p, q)] = v;
                    gram[(q, p)] = v;
                }
            }
            // max of -2 c.lin - c.G.c equals lin.G^+ lin at c = -G^+ lin
            let svd = nalgebra::SVD::new(gram, true, true);
            if let Ok(c) = svd.solve(&lin, 1e-12) {
                total += dt * lin.dot(&c);
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conductance::{AxisProfile, Jump};
    use crate::elliptic::fundamental_eigenvalue;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, TAU};

    fn jumpy() -> WSpec {
        WSpec::new(vec![AxisProfile {
            alpha: 1.0,
            jumps: vec![Jump {
                location: 0.47,
                size: 0.9,
            }],
        }])
        .unwrap()
    }

    #[test]
    fn quadratic_flux_bounds() {
        let phi = PhiSpec::quadratic(0.5).unwrap();
        assert!((phi.eval(0.5) - 0.625).abs() < 1e-15);
        assert!((phi.deriv(0.5) - 1.5).abs() < 1e-15);
        assert!(PhiSpec::new(vec![0.0, 1.0, 10.0], 0.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn constant_state_is_fixed_point() {
        let n = 16;
        let w = jumpy();
        let a = DiagonalField::constant(n, 1, 1.0);
        let phi = PhiSpec::quadratic(0.5).unwrap();
        let rho = GridFunction::constant(n, 1, 0.4);
        let ctl = TimeControls::with_dt(1e-3);
        let (next, iters) = step(&rho, 1e-3, &a, &w, &phi, &ctl).unwrap();
        assert_eq!(iters, 0);
        for &v in next.values() {
            assert!((v - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_step_matches_spectral_factor() {
        // identity flux, identity profile: one implicit Euler step divides the
        // sine mode by 1 + dt * 4 N^2 sin^2(pi/N)
        let n = 32;
        let w = WSpec::identity(1);
        let a = DiagonalField::constant(n, 1, 1.0);
        let phi = PhiSpec::new(vec![0.0, 1.0], -2.0, 2.0, 1.5).unwrap();
        let f = GridFunction::sample(n, 1, |p| 0.5 + 0.25 * (2.0 * PI * p[0]).sin());
        let dt = 1e-3;
        let mut ctl = TimeControls::with_dt(dt);
        ctl.newton_tol = 1e-13;
        ctl.cg_tol = 1e-12;
        let (next, _) = step(&f, dt, &a, &w, &phi, &ctl).unwrap();
        let factor = 1.0 / (1.0 + dt * fundamental_eigenvalue(n));
        for (i, (&nv, &fv)) in next.values().iter().zip(f.values().iter()).enumerate() {
            let want = 0.5 + (fv - 0.5) * factor;
            assert!((nv - want).abs() < 1e-10, "site {i}: {nv} vs {want}");
        }
    }

    #[test]
    fn mass_is_conserved_per_step() {
        let n = 24;
        let w = jumpy();
        let a = DiagonalField::constant(n, 1, 1.3);
        let phi = PhiSpec::quadratic(0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let rho =
            GridFunction::from_values(n, 1, (0..n).map(|_| rng.gen_range(0.1..0.9)).collect())
                .unwrap();
        let ctl = TimeControls::with_dt(5e-4);
        let (next, _) = step(&rho, 5e-4, &a, &w, &phi, &ctl).unwrap();
        assert!((next.mean() - rho.mean()).abs() < 1e-13);
    }

    #[test]
    fn integrate_certifies_weak_form_and_mass() {
        let n = 32;
        let w = jumpy();
        let a = DiagonalField::constant(n, 1, 1.0);
        let phi = PhiSpec::quadratic(0.5).unwrap();
        let gamma = GridFunction::sample(n, 1, |p| 0.5 + 0.3 * (2.0 * PI * p[0]).sin());
        let tests = vec![
            GridFunction::constant(n, 1, 1.0),
            GridFunction::sample(n, 1, |p| (2.0 * PI * p[0]).cos()),
        ];
        let ctl = TimeControls::with_dt(2e-4);
        let out = integrate(&gamma, 0.02, &ctl, &a, &w, &phi, &[0.01], &tests).unwrap();
        assert_eq!(out.trajectory.times.len(), 3); // 0, 0.01, 0.02
        assert!(out.mass_drift < 1e-12, "drift {}", out.mass_drift);
        assert!(
            out.weak_form.max_defect < 1e-8,
            "defect {}",
            out.weak_form.max_defect
        );
        assert!(out.max_newton_iters <= 5);
        // range preservation
        for s in &out.trajectory.states {
            for &v in s.values() {
                assert!((0.0 - 1e-9..=1.0 + 1e-9).contains(&v));
            }
        }
    }

    #[test]
    fn constant_trajectory_has_zero_energy() {
        let n = 16;
        let w = jumpy();
        let a = DiagonalField::constant(n, 1, 1.0);
        let phi = PhiSpec::quadratic(0.0).unwrap();
        let gamma = GridFunction::constant(n, 1, 0.7);
        let ctl = TimeControls::with_dt(1e-3);
        let out = integrate(&gamma, 0.01, &ctl, &a, &w, &phi, &[], &[]).unwrap();
        let e = energy(&out.trajectory, &w);
        assert!(e.total == 0.0);
    }

    #[test]
    fn single_state_energy_matches_hand_computation() {
        // indicator of one site: the squared gradient norm telescopes to
        // 1/dW(bond left of site) + 1/dW(bond at site)
        let n = 8;
        let w = jumpy();
        let mut vals = vec![0.0; n];
        vals[3] = 1.0;
        let state = GridFunction::from_values(n, 1, vals).unwrap();
        let t_end = 0.37;
        let traj = ParabolicTrajectory {
            times: vec![0.0],
            states: vec![state],
            newton_iters: vec![0],
            t_end,
        };
        let e = energy(&traj, &w);
        let want = t_end * (1.0 / w.increment(0, 2, n) + 1.0 / w.increment(0, 3, n));
        assert!((e.total - want).abs() < 1e-12 * want);
    }

    #[test]
    fn sup_form_energy_bounded_and_improving() {
        let n = 16;
        let w = jumpy();
        let a = DiagonalField::constant(n, 1, 1.0);
        let phi = PhiSpec::quadratic(0.3).unwrap();
        let gamma = GridFunction::sample(n, 1, |p| 0.5 + 0.3 * (2.0 * PI * p[0]).sin());
        let ctl = TimeControls::with_dt(1e-3);
        let snaps: Vec<f64> = (1..=10).map(|i| 0.001 * i as f64).collect();
        let out = integrate(&gamma, 0.01, &ctl, &a, &w, &phi, &snaps, &[]).unwrap();
        let full = energy(&out.trajectory, &w).total;
        let fam = |k_max: usize| -> Vec<GridFunction> {
            let mut v = Vec::new();
            for k in 1..=k_max {
                v.push(GridFunction::sample(n, 1, |p| {
                    (2.0 * PI * k as f64 * p[0]).sin()
                }));
                v.push(GridFunction::sample(n, 1, |p| {
                    (2.0 * PI * k as f64 * p[0]).cos()
                }));
            }
            v
        };
        let small = energy_sup_form(&out.trajectory, &w, &fam(1));
        let large = energy_sup_form(&out.trajectory, &w, &fam(5));
        assert!(small <= full * (1.0 + 1e-9));
        assert!(large <= full * (1.0 + 1e-9));
        assert!(large >= small - 1e-12);
        assert!(full - large < full - small + 1e-12);
    }

    #[test]
    fn energy_stays_bounded_as_dt_shrinks() {
        let n = 16;
        let w = jumpy();
        let a = DiagonalField::constant(n, 1, 1.0);
        let phi = PhiSpec::quadratic(0.3).unwrap();
        let gamma = GridFunction::sample(n, 1, |p| 0.5 + 0.3 * (TAU * p[0]).sin());
        let t_end = 0.02;
        let mut totals = Vec::new();
        for halvings in 0..3 {
            let dt = 1e-3 / 2f64.powi(halvings);
            let ctl = TimeControls::with_dt(dt);
            let snaps: Vec<f64> = (1..=(t_end / dt).round() as usize)
                .map(|i| dt * i as f64)
                .collect();
            let out = integrate(&gamma, t_end, &ctl, &a, &w, &phi, &snaps, &[]).unwrap();
            totals.push(energy(&out.trajectory, &w).total);
        }
        let (lo, hi) = totals.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &q| {
            (lo.min(q), hi.max(q))
        });
        assert!(hi <= 1.5 * lo, "energies not settling: {totals:?}");
    }

    #[test]
    fn range_violation_detected_for_bad_initial_state() {
        let n = 8;
        let w = WSpec::identity(1);
        let a = DiagonalField::constant(n, 1, 1.0);
        let phi = PhiSpec::quadratic(0.2).unwrap();
        let gamma = GridFunction::constant(n, 1, 1.5);
        let ctl = TimeControls::with_dt(1e-3);
        match integrate(&gamma, 0.01, &ctl, &a, &w, &phi, &[], &[]) {
            Err(ParabolicError::BadInitialState { .. }) => {}
            other => panic!("expected BadInitialState, got {other:?}"),
        }
    }

    #[test]
    fn newton_divergence_is_reported_not_swallowed() {
        let n = 16;
        let w = jumpy();
        let a = DiagonalField::constant(n, 1, 1.0);
        let phi = PhiSpec::quadratic(0.5).unwrap();
        let gamma = GridFunction::sample(n, 1, |p| 0.5 + 0.3 * (TAU * p[0]).sin());
        let mut ctl = TimeControls::with_dt(1e-3);
        ctl.newton_max_iter = 0; // force the cap
        match step(&gamma, 1e-3, &a, &w, &phi, &ctl) {
            Err(ParabolicError::NewtonDivergence {
                iterations,
                residual,
                ..
            }) => {
                assert_eq!(iterations, 0);
                assert!(residual > 0.0);
            }
            other => panic!("expected NewtonDivergence, got {other:?}"),
        }
    }
}
