//! Exclusion process with conductances in a (possibly random) environment:
//! hard-core particles on the discrete torus swapping along bonds at rate
//! `N^2 xi c`, where `xi = a_j(x) / (N dW_j(x))` is the bond conductance and
//! `c = 1 + b (eta(x - e_j) + eta(x + 2 e_j))` is the gradient-preserving
//! neighbor factor. Time runs in the diffusive scale (the `N^2` is inside
//! the rates), so sample times are macroscopic.
//!
//! The simulator is event-driven and exact in law: exponential holding
//! times from the total active rate kept in a Fenwick tree, events selected
//! proportionally, and only the locally affected bonds refreshed per swap.

use crate::conductance::WSpec;
use crate::fenwick::RateTree;
use crate::grid::{inner_n, DiagonalField, GridFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Occupancy of the discrete torus, one bit per site.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleConfig {
    n: usize,
    d: usize,
    bits: Vec<u64>,
    len: usize,
}

impl ParticleConfig {
    pub fn empty(n: usize, d: usize) -> Self {
        let len = n.pow(d as u32);
        ParticleConfig {
            n,
            d,
            bits: vec![0; len.div_ceil(64)],
            len,
        }
    }

    /// Independent occupation with probability `profile(x/N)` per site.
    pub fn bernoulli(
        n: usize,
        d: usize,
        profile: &dyn Fn(&[f64]) -> f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut cfg = Self::empty(n, d);
        let mut point = vec![0.0; d];
        for flat in 0..cfg.len {
            let mut rest = flat;
            for p in point.iter_mut().rev() {
                *p = (rest % n) as f64 / n as f64;
                rest /= n;
            }
            let prob = profile(&point);
            debug_assert!((0.0..=1.0).contains(&prob));
            if rng.gen::<f64>() < prob {
                cfg.set(flat, true);
            }
        }
        cfg
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, flat: usize) -> bool {
        (self.bits[flat / 64] >> (flat % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, flat: usize, occupied: bool) {
        let mask = 1u64 << (flat % 64);
        if occupied {
            self.bits[flat / 64] |= mask;
        } else {
            self.bits[flat / 64] &= !mask;
        }
    }

    pub fn particle_count(&self) -> usize {
        self.bits.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Swaps the occupancies of two sites.
    pub fn swap(&mut self, x: usize, y: usize) {
        let (vx, vy) = (self.get(x), self.get(y));
        self.set(x, vy);
        self.set(y, vx);
    }

    /// Packs the configuration of a small system into an integer label.
    pub fn as_bitmask(&self) -> u64 {
        assert!(self.len <= 64);
        self.bits[0]
            & if self.len == 64 {
                u64::MAX
            } else {
                (1u64 << self.len) - 1
            }
    }

    pub fn from_bitmask(n: usize, d: usize, mask: u64) -> Self {
        let mut cfg = Self::empty(n, d);
        assert!(cfg.len <= 64);
        cfg.bits[0] = mask;
        cfg
    }

    /// Occupancies as a grid function (0/1 values).
    pub fn to_grid(&self) -> GridFunction {
        GridFunction::from_values(
            self.n,
            self.d,
            (0..self.len)
                .map(|i| if self.get(i) { 1.0 } else { 0.0 })
                .collect(),
        )
        .unwrap()
    }
}

/// Symmetric base rates `xi` per bond, stored once at the bond's left site,
/// plus the neighbor-interaction strength `b`.
#[derive(Debug, Clone)]
pub struct RateTable {
    n: usize,
    d: usize,
    b: f64,
    /// `xi[j][flat]` for the bond from `flat` to its axis-`j` successor.
    xi: Vec<Vec<f64>>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ExclusionError {
    #[error("interaction parameter must satisfy b > -1/2, got {0}")]
    BadInteraction(f64),
    #[error("shape mismatch between field ({field_n}^{field_d}) and profile dimension {w_d}")]
    ShapeMismatch {
        field_n: usize,
        field_d: usize,
        w_d: usize,
    },
    #[error("enumeration of {0} sites exceeds the exact-check cap of 20")]
    TooLargeToEnumerate(usize),
}

impl RateTable {
    /// `xi(x, j) = a_j(x) / (N dW_j(x_j))`.
    pub fn build(w: &WSpec, a: &DiagonalField, b: f64) -> Result<Self, ExclusionError> {
        if b <= -0.5 {
            return Err(ExclusionError::BadInteraction(b));
        }
        if w.dim() != a.dim() {
            return Err(ExclusionError::ShapeMismatch {
                field_n: a.n(),
                field_d: a.dim(),
                w_d: w.dim(),
            });
        }
        let n = a.n();
        let d = a.dim();
        let len = n.pow(d as u32);
        let probe = GridFunction::zeros(n, d);
        let mut xi = Vec::with_capacity(d);
        for j in 0..d {
            let incs = w.increments(j, n);
            let mut col = Vec::with_capacity(len);
            for flat in 0..len {
                col.push(a.value(j, flat) / (n as f64 * incs[probe.coord(flat, j)]));
            }
            xi.push(col);
        }
        Ok(RateTable { n, d, b, xi })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn xi(&self, j: usize, flat: usize) -> f64 {
        self.xi[j][flat]
    }

    pub fn bond_count(&self) -> usize {
        self.d * self.n.pow(self.d as u32)
    }
}

/// Geometry helper shared by the simulator and the exact checks.
struct Lattice {
    grid: GridFunction,
}

impl Lattice {
    fn new(n: usize, d: usize) -> Self {
        Lattice {
            grid: GridFunction::zeros(n, d),
        }
    }

    #[inline]
    fn shift(&self, flat: usize, j: usize, step: isize) -> usize {
        self.grid.neighbor(flat, j, step)
    }
}

/// The neighbor factor `c = 1 + b (eta(x - e_j) + eta(x + 2 e_j))`.
#[inline]
fn neighbor_factor(eta: &ParticleConfig, lat: &Lattice, x: usize, j: usize, b: f64) -> f64 {
    let behind = lat.shift(x, j, -1);
    let ahead2 = lat.shift(x, j, 2);
    1.0 + b * ((eta.get(behind) as u64 + eta.get(ahead2) as u64) as f64)
}

/// Instantaneous rate of the swap across bond `(x, x + e_j)`: zero when the
/// endpoints agree (the swap would be a no-op), else `N^2 xi c`.
pub fn jump_rate(eta: &ParticleConfig, x: usize, j: usize, rates: &RateTable) -> f64 {
    let lat = Lattice::new(rates.n, rates.d);
    bond_rate(eta, &lat, rates, x, j)
}

#[inline]
fn bond_rate(eta: &ParticleConfig, lat: &Lattice, rates: &RateTable, x: usize, j: usize) -> f64 {
    let y = lat.shift(x, j, 1);
    if eta.get(x) == eta.get(y) {
        return 0.0;
    }
    let n2 = (rates.n * rates.n) as f64;
    n2 * rates.xi[j][x] * neighbor_factor(eta, lat, x, j, rates.b)
}

/// Observable values at the requested sample times.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub sample_times: Vec<f64>,
    /// `values[t][h]`: empirical pairing of test `h` with the configuration
    /// at sample time `t`, i.e. `N^{-d} sum H(x/N) eta(x)`.
    pub values: Vec<Vec<f64>>,
    /// Per-site occupancies at each sample time (0/1), for density dumps.
    pub site_occupancy: Vec<Vec<f64>>,
    pub initial_particles: usize,
    pub final_particles: usize,
    pub events: u64,
    pub final_config: ParticleConfig,
}

/// Event-driven simulation, exact in law. Sample times must be
/// nondecreasing and within `[0, t_end]`.
pub fn simulate(
    eta0: &ParticleConfig,
    rates: &RateTable,
    t_end: f64,
    seed: u64,
    sample_times: &[f64],
    tests: &[GridFunction],
) -> SimOutput {
    assert!(
        sample_times.windows(2).all(|p| p[0] <= p[1]),
        "sample times must be sorted"
    );
    assert!(sample_times
        .iter()
        .all(|&t| (0.0..=t_end * (1.0 + 1e-12)).contains(&t)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lat = Lattice::new(rates.n, rates.d);
    let mut eta = eta0.clone();
    let len = eta.len();
    let bonds = rates.bond_count();

    // bond index = j * len + flat
    let mut initial = vec![0.0; bonds];
    for j in 0..rates.d {
        for flat in 0..len {
            initial[j * len + flat] = bond_rate(&eta, &lat, rates, flat, j);
        }
    }
    let mut tree = RateTree::new(&initial);

    let record = |eta: &ParticleConfig| -> (Vec<f64>, Vec<f64>) {
        let g = eta.to_grid();
        let vals = tests.iter().map(|h| inner_n(&g, h)).collect();
        (vals, g.into_values())
    };

    let initial_particles = eta.particle_count();
    let mut out_values = Vec::with_capacity(sample_times.len());
    let mut out_sites = Vec::with_capacity(sample_times.len());
    let mut next_sample = 0usize;
    let mut t = 0.0;
    let mut events = 0u64;
    let mut touched: Vec<usize> = Vec::with_capacity(16 * rates.d);

    loop {
        let total = tree.total();
        let t_next = if total > 0.0 {
            let u: f64 = rng.gen();
            t - (1.0 - u).ln() / total
        } else {
            f64::INFINITY
        };

        // emit samples that fall before the next event fires
        while next_sample < sample_times.len() && sample_times[next_sample] <= t_next.min(t_end) {
            let (vals, sites) = record(&eta);
            out_values.push(vals);
            out_sites.push(sites);
            next_sample += 1;
        }
        if t_next > t_end {
            break;
        }

        // select and apply the swap
        let target = rng.gen::<f64>() * total;
        let bond = tree.select(target.min(total * (1.0 - 1e-16)));
        let j = bond / len;
        let x = bond % len;
        let y = lat.shift(x, j, 1);
        eta.swap(x, y);
        t = t_next;
        events += 1;

        // refresh every bond whose rate can have changed: bonds touching the
        // two flipped sites plus bonds reading them through the c-factor
        touched.clear();
        for &z in &[x, y] {
            for k in 0..rates.d {
                for step in [-2isize, -1, 0, 1] {
                    let left = lat.shift(z, k, step);
                    touched.push(k * len + left);
                }
            }
        }
        touched.sort_unstable();
        touched.dedup();
        for &bidx in &touched {
            let k = bidx / len;
            let left = bidx % len;
            tree.set(bidx, bond_rate(&eta, &lat, rates, left, k));
        }
    }

    let final_particles = eta.particle_count();
    debug_assert_eq!(initial_particles, final_particles);
    SimOutput {
        sample_times: sample_times.to_vec(),
        values: out_values,
        site_occupancy: out_sites,
        initial_particles,
        final_particles,
        events,
        final_config: eta,
    }
}

/// Exhaustive reversibility check: over every configuration of a small
/// system and every active bond, compares `nu(eta) rate(eta -> eta')`
/// against `nu(eta') rate(eta' -> eta)` under the product measure with
/// density `alpha`. Exact symmetry of the c-factor under the swap makes the
/// violation identically zero.
#[derive(Debug, Clone)]
pub struct DetailedBalanceReport {
    pub max_violation: f64,
    pub pairs_checked: usize,
}

pub fn check_detailed_balance(
    rates: &RateTable,
    alpha: f64,
) -> Result<DetailedBalanceReport, ExclusionError> {
    let len = rates.n.pow(rates.d as u32);
    if len > 20 {
        return Err(ExclusionError::TooLargeToEnumerate(len));
    }
    let lat = Lattice::new(rates.n, rates.d);
    let mut max_violation = 0.0f64;
    let mut pairs = 0usize;
    for mask in 0..(1u64 << len) {
        let eta = ParticleConfig::from_bitmask(rates.n, rates.d, mask);
        let weight = alpha.powi(eta.particle_count() as i32)
            * (1.0 - alpha).powi((len - eta.particle_count()) as i32);
        for j in 0..rates.d {
            for x in 0..len {
                let fwd = bond_rate(&eta, &lat, rates, x, j);
                if fwd == 0.0 {
                    continue;
                }
                let y = lat.shift(x, j, 1);
                let mut swapped = eta.clone();
                swapped.swap(x, y);
                let back = bond_rate(&swapped, &lat, rates, x, j);
                // equal particle count, so the product weights coincide
                max_violation = max_violation.max((weight * fwd - weight * back).abs());
                pairs += 1;
            }
        }
    }
    Ok(DetailedBalanceReport {
        max_violation,
        pairs_checked: pairs,
    })
}

/// Dense generator of the full configuration chain of a small system,
/// indexed by bitmask. Row sums vanish; reversibility under any product
/// measure makes the matrix symmetric.
pub fn dense_generator(rates: &RateTable) -> Result<nalgebra::DMatrix<f64>, ExclusionError> {
    let len = rates.n.pow(rates.d as u32);
    if len > 20 {
        return Err(ExclusionError::TooLargeToEnumerate(len));
    }
    let states = 1usize << len;
    let lat = Lattice::new(rates.n, rates.d);
    let mut q = nalgebra::DMatrix::zeros(states, states);
    for mask in 0..states as u64 {
        let eta = ParticleConfig::from_bitmask(rates.n, rates.d, mask);
        for j in 0..rates.d {
            for x in 0..len {
                let r = bond_rate(&eta, &lat, rates, x, j);
                if r == 0.0 {
                    continue;
                }
                let y = lat.shift(x, j, 1);
                let mut swapped = eta.clone();
                swapped.swap(x, y);
                let target = swapped.as_bitmask() as usize;
                q[(mask as usize, target)] += r;
                q[(mask as usize, mask as usize)] -= r;
            }
        }
    }
    Ok(q)
}

/// Mean stationary current across each bond under the product measure at
/// density `alpha`, by full enumeration. Vanishes for the gradient dynamics.
pub fn stationary_current(rates: &RateTable, alpha: f64) -> Result<f64, ExclusionError> {
    let len = rates.n.pow(rates.d as u32);
    if len > 20 {
        return Err(ExclusionError::TooLargeToEnumerate(len));
    }
    let lat = Lattice::new(rates.n, rates.d);
    let mut worst = 0.0f64;
    for j in 0..rates.d {
        for x in 0..len {
            let y = lat.shift(x, j, 1);
            let mut mean_current = 0.0;
            for mask in 0..(1u64 << len) {
                let eta = ParticleConfig::from_bitmask(rates.n, rates.d, mask);
                let weight = alpha.powi(eta.particle_count() as i32)
                    * (1.0 - alpha).powi((len - eta.particle_count()) as i32);
                let n2 = (rates.n * rates.n) as f64;
                let c = neighbor_factor(&eta, &lat, x, j, rates.b);
                let current =
                    n2 * rates.xi[j][x] * c * ((eta.get(x) as i64 - eta.get(y) as i64) as f64);
                mean_current += weight * current;
            }
            worst = worst.max(mean_current.abs());
        }
    }
    Ok(worst)
}

/// One row of the closed-loop comparison: Monte Carlo mean and spread of the
/// empirical pairing versus the integrated equation, per sample time and
/// test function.
#[derive(Debug, Clone)]
pub struct HydroRow {
    pub t: f64,
    pub test_id: usize,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub pde_value: f64,
    pub gap: f64,
}

#[derive(Debug)]
pub struct HydroReport {
    pub rows: Vec<HydroRow>,
    /// `raw[r][t][h]`: per-replica values.
    pub raw: Vec<Vec<Vec<f64>>>,
    /// Replica-mean site occupancy per sample time.
    pub mean_density: Vec<Vec<f64>>,
    pub replicas: usize,
}

/// Runs `replicas` independent particle systems started from independent
/// site occupations `P(eta(x) = 1) = gamma(x/N)`, integrates the limiting
/// equation with the flux `Phi(a) = a + b a^2` and the supplied constant
/// diagonal matrix, and tabulates the gaps. Replica `r` uses the stream
/// derived from `(seed, r)`; aggregation runs in replica order regardless of
/// the thread count.
#[allow(clippy::too_many_arguments)]
pub fn hydro_compare(
    gamma: &(dyn Fn(&[f64]) -> f64 + Sync),
    rates: &RateTable,
    hydro_matrix: &[f64],
    w: &WSpec,
    t_samples: &[f64],
    replicas: usize,
    seed: u64,
    tests: &[GridFunction],
    pde_ctl: &crate::parabolic::TimeControls,
) -> Result<HydroReport, crate::parabolic::ParabolicError> {
    let n = rates.n();
    let d = rates.dim();
    let t_end = t_samples.last().copied().unwrap_or(0.0);

    // particle side; per replica: observable values and site occupancies
    type ReplicaRecord = (Vec<Vec<f64>>, Vec<Vec<f64>>);
    let sim: Vec<ReplicaRecord> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(replica_seed(seed, r as u64));
            let eta0 = ParticleConfig::bernoulli(n, d, gamma, &mut rng);
            let out = simulate(
                &eta0,
                rates,
                t_end,
                replica_seed(seed, r as u64) ^ 0x5157,
                t_samples,
                tests,
            );
            assert_eq!(
                out.initial_particles, out.final_particles,
                "particle count drifted"
            );
            (out.values, out.site_occupancy)
        })
        .collect();

    // equation side: same grid, flux from the interaction parameter, the
    // supplied constant matrix as coefficients
    let phi = crate::parabolic::PhiSpec::quadratic(rates.b()).expect("b > -1/2 checked at build");
    let gamma_grid = GridFunction::sample(n, d, gamma);
    let len = n.pow(d as u32);
    let per_axis: Vec<Vec<f64>> = hydro_matrix.iter().map(|&v| vec![v; len]).collect();
    let theta = hydro_matrix
        .iter()
        .fold(1.0f64, |m, &v| m.max(v).max(1.0 / v));
    let a_const = DiagonalField::new(n, d, per_axis, theta).unwrap();
    let pde = crate::parabolic::integrate(
        &gamma_grid,
        t_end,
        pde_ctl,
        &a_const,
        w,
        &phi,
        t_samples,
        &[],
    )?;

    let mut rows = Vec::new();
    let mut mean_density = vec![vec![0.0; len]; t_samples.len()];
    for (ti, &t) in t_samples.iter().enumerate() {
        for occ in sim.iter().map(|(_, site)| &site[ti]) {
            for (m, o) in mean_density[ti].iter_mut().zip(occ.iter()) {
                *m += o / replicas as f64;
            }
        }
        let rho_t = pde
            .trajectory
            .state_at(t)
            .expect("integrator stores every sample time");
        for (h, test) in tests.iter().enumerate() {
            let mut mean = 0.0;
            for (vals, _) in &sim {
                mean += vals[ti][h];
            }
            mean /= replicas as f64;
            let mut var = 0.0;
            for (vals, _) in &sim {
                var += (vals[ti][h] - mean).powi(2);
            }
            let stderr = if replicas > 1 {
                (var / (replicas as f64 - 1.0)).sqrt() / (replicas as f64).sqrt()
            } else {
                0.0
            };
            let pde_value = inner_n(rho_t, test);
            rows.push(HydroRow {
                t,
                test_id: h,
                mc_mean: mean,
                mc_stderr: stderr,
                pde_value,
                gap: (mean - pde_value).abs(),
            });
        }
    }
    Ok(HydroReport {
        rows,
        raw: sim.iter().map(|(v, _)| v.clone()).collect(),
        mean_density,
        replicas,
    })
}

/// Stream key for replica `r`: two rounds of the same avalanche used by the
/// environment sampler, so replica streams never collide with site streams.
pub fn replica_seed(master: u64, replica: u64) -> u64 {
    let mut z = master ^ replica.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
