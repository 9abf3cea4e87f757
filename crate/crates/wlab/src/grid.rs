//! Discrete calculus on the torus `{0,...,N-1}^d`: grid functions, diagonal
//! coefficient fields, forward and measure-weighted difference operators, the
//! three inner products, the divergence-form operator, measure-weighted
//! interpolation, and the mean-zero projector.
//!
//! Conventions that everything downstream relies on:
//! - forward differences live on bonds, stored at the bond's left site;
//! - the divergence is the backward difference of a bond field, so the
//!   operator `u -> div(a * grad_w u)` is symmetric for the plain inner
//!   product and summation by parts is exact up to rounding;
//! - reductions always run in flat index order, so results are independent
//!   of thread count.

use crate::conductance::WSpec;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("value count {got} does not match N^d = {want}")]
    BadLength { got: usize, want: usize },
    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),
    #[error("coefficient {value} at axis {axis}, flat index {index} outside [{lo}, {hi}]")]
    EllipticityViolation {
        axis: usize,
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
}

/// Real values on the discrete torus, row-major with axis 0 slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn from_values(n: usize, d: usize, values: Vec<f64>) -> Result<Self, GridError> {
        let want = n.pow(d as u32);
        if values.len() != want {
            return Err(GridError::BadLength {
                got: values.len(),
                want,
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        Ok(GridFunction { n, d, values })
    }

    pub fn constant(n: usize, d: usize, c: f64) -> Self {
        GridFunction {
            n,
            d,
            values: vec![c; n.pow(d as u32)],
        }
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        Self::constant(n, d, 0.0)
    }

    /// Samples `f(x/N)` over the grid; `point` has length `d` in `[0,1)^d`.
    pub fn sample(n: usize, d: usize, f: impl Fn(&[f64]) -> f64) -> Self {
        let len = n.pow(d as u32);
        let mut values = Vec::with_capacity(len);
        let mut coords = vec![0usize; d];
        let mut point = vec![0f64; d];
        for flat in 0..len {
            decode(flat, n, &mut coords);
            for (p, &c) in point.iter_mut().zip(coords.iter()) {
                *p = c as f64 / n as f64;
            }
            values.push(f(&point));
        }
        GridFunction { n, d, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_shape(&self, other: &GridFunction) -> bool {
        self.n == other.n && self.d == other.d
    }

    /// Stride of axis `j` in the flat layout.
    fn stride(&self, j: usize) -> usize {
        self.n.pow((self.d - 1 - j) as u32)
    }

    /// Flat index of the site shifted by `step` (±1) along axis `j`, torus wrap.
    pub fn neighbor(&self, flat: usize, j: usize, step: isize) -> usize {
        let stride = self.stride(j);
        let coord = (flat / stride) % self.n;
        let wrapped = (coord as isize + step).rem_euclid(self.n as isize) as usize;
        flat - coord * stride + wrapped * stride
    }

    /// Coordinate of `flat` along axis `j`.
    pub fn coord(&self, flat: usize, j: usize) -> usize {
        (flat / self.stride(j)) % self.n
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &GridFunction) {
        assert!(self.same_shape(other));
        for (v, o) in self.values.iter_mut().zip(other.values.iter()) {
            *v += s * o;
        }
    }
}

fn decode(mut flat: usize, n: usize, coords: &mut [usize]) {
    for c in coords.iter_mut().rev() {
        *c = flat % n;
        flat /= n;
    }
}

/// Per-axis, per-site coefficients `a_j(x)` within ellipticity bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalField {
    n: usize,
    d: usize,
    theta: f64,
    per_axis: Vec<Vec<f64>>,
}

impl DiagonalField {
    pub fn new(n: usize, d: usize, per_axis: Vec<Vec<f64>>, theta: f64) -> Result<Self, GridError> {
        assert!(theta >= 1.0, "ellipticity bound must satisfy theta >= 1");
        if per_axis.len() != d {
            return Err(GridError::ShapeMismatch(format!(
                "expected {d} axes, got {}",
                per_axis.len()
            )));
        }
        let want = n.pow(d as u32);
        let (lo, hi) = (1.0 / theta, theta);
        // a hair of slack so boundary values survive serialization round-trips
        let eps = 1e-12 * theta;
        for (j, axis) in per_axis.iter().enumerate() {
            if axis.len() != want {
                return Err(GridError::BadLength {
                    got: axis.len(),
                    want,
                });
            }
            for (i, &v) in axis.iter().enumerate() {
                if !(v >= lo - eps && v <= hi + eps) {
                    return Err(GridError::EllipticityViolation {
                        axis: j,
                        index: i,
                        value: v,
                        lo,
                        hi,
                    });
                }
            }
        }
        Ok(DiagonalField {
            n,
            d,
            theta,
            per_axis,
        })
    }

    pub fn constant(n: usize, d: usize, value: f64) -> Self {
        let theta = value.max(1.0 / value).max(1.0);
        DiagonalField::new(n, d, vec![vec![value; n.pow(d as u32)]; d], theta).unwrap()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn axis(&self, j: usize) -> &[f64] {
        &self.per_axis[j]
    }

    pub fn value(&self, j: usize, flat: usize) -> f64 {
        self.per_axis[j][flat]
    }
}

/// Forward difference `N * (f(x + e_j) - f(x))`, periodic.
pub fn diff_x(f: &GridFunction, j: usize) -> GridFunction {
    let n = f.n as f64;
    let mut out = f.clone();
    for flat in 0..f.len() {
        let fwd = f.neighbor(flat, j, 1);
        out.values[flat] = n * (f.values[fwd] - f.values[flat]);
    }
    out
}

/// Measure-weighted difference `(f(x + e_j) - f(x)) / (W_j((x_j+1)/N) - W_j(x_j/N))`.
pub fn diff_w(f: &GridFunction, j: usize, w: &WSpec) -> GridFunction {
    let incs = w.increments(j, f.n);
    diff_w_with_increments(f, j, &incs)
}

fn diff_w_with_increments(f: &GridFunction, j: usize, incs: &[f64]) -> GridFunction {
    let mut out = f.clone();
    for flat in 0..f.len() {
        let fwd = f.neighbor(flat, j, 1);
        out.values[flat] = (f.values[fwd] - f.values[flat]) / incs[f.coord(flat, j)];
    }
    out
}

/// Plain inner product `N^{-d} sum f g`, reduced in flat index order.
pub fn inner_n(f: &GridFunction, g: &GridFunction) -> f64 {
    assert!(f.same_shape(g), "inner_n shape mismatch");
    let mut acc = 0.0;
    for (a, b) in f.values.iter().zip(g.values.iter()) {
        acc += a * b;
    }
    acc / f.len() as f64
}

/// Measure-weighted inner product
/// `N^{1-d} sum f(x) g(x) (W_j((x_j+1)/N) - W_j(x_j/N))`.
pub fn inner_wj(f: &GridFunction, g: &GridFunction, j: usize, w: &WSpec) -> f64 {
    assert!(f.same_shape(g), "inner_wj shape mismatch");
    let incs = w.increments(j, f.n);
    let mut acc = 0.0;
    for flat in 0..f.len() {
        acc += f.values[flat] * g.values[flat] * incs[f.coord(flat, j)];
    }
    acc / (f.n as f64).powi(f.d as i32 - 1)
}

pub fn norm_l2(f: &GridFunction) -> f64 {
    inner_n(f, f).sqrt()
}

/// Sobolev norm: `sqrt(<f,f>_N + sum_j <d_w f, d_w f>_{W_j,N})`.
pub fn norm_h1w(f: &GridFunction, w: &WSpec) -> f64 {
    let mut sq = inner_n(f, f);
    for j in 0..f.d {
        let g = diff_w(f, j, w);
        sq += inner_wj(&g, &g, j, w);
    }
    sq.sqrt()
}

/// Divergence-form operator `sum_j div_j(a_j grad_{w,j} f)`: the bond flux
/// `a_j(x) (f(x+e_j) - f(x)) / dW_j(x)` is differenced backwards, times `N`.
///
/// Equals the nearest-neighbor walk generator with bond conductances
/// `N^2 a_j(x) / (N dW_j(x))`; see `apply_walk_generator`.
pub fn apply_ln(f: &GridFunction, a: &DiagonalField, w: &WSpec) -> GridFunction {
    assert!(
        f.n == a.n() && f.d == a.dim(),
        "apply_ln shape mismatch: grid {}^{} vs field {}^{}",
        f.n,
        f.d,
        a.n(),
        a.dim()
    );
    let n = f.n as f64;
    let mut out = GridFunction::zeros(f.n, f.d);
    let mut flux = vec![0.0; f.len()];
    for j in 0..f.d {
        let incs = w.increments(j, f.n);
        let aj = a.axis(j);
        for flat in 0..f.len() {
            let fwd = f.neighbor(flat, j, 1);
            flux[flat] = aj[flat] * (f.values[fwd] - f.values[flat]) / incs[f.coord(flat, j)];
        }
        for flat in 0..f.len() {
            let bwd = f.neighbor(flat, j, -1);
            out.values[flat] += n * (flux[flat] - flux[bwd]);
        }
    }
    out
}

/// The same operator written as the random-walk generator: jumps from `x` to
/// `x ± e_j` at rate `N^2 xi` with `xi = a_j / (N dW_j)` read off the bond.
/// Used as an independent route to cross-check `apply_ln`.
pub fn apply_walk_generator(f: &GridFunction, a: &DiagonalField, w: &WSpec) -> GridFunction {
    assert!(f.n == a.n() && f.d == a.dim());
    let n = f.n as f64;
    let mut out = GridFunction::zeros(f.n, f.d);
    for j in 0..f.d {
        let incs = w.increments(j, f.n);
        let aj = a.axis(j);
        for flat in 0..f.len() {
            let fwd = f.neighbor(flat, j, 1);
            let bwd = f.neighbor(flat, j, -1);
            let xi_fwd = aj[flat] / (n * incs[f.coord(flat, j)]);
            let xi_bwd = aj[bwd] / (n * incs[f.coord(bwd, j)]);
            out.values[flat] += n
                * n
                * (xi_fwd * (f.values[fwd] - f.values[flat])
                    + xi_bwd * (f.values[bwd] - f.values[flat]));
        }
    }
    out
}

/// Diagonal of `lambda I - apply_ln(., a, w)`, used for Jacobi preconditioning.
pub fn operator_diagonal(a: &DiagonalField, w: &WSpec, lambda: f64) -> Vec<f64> {
    let n = a.n();
    let d = a.dim();
    let probe = GridFunction::zeros(n, d);
    let nf = n as f64;
    let mut diag = vec![lambda; probe.len()];
    for j in 0..d {
        let incs = w.increments(j, n);
        let aj = a.axis(j);
        for flat in 0..probe.len() {
            let bwd = probe.neighbor(flat, j, -1);
            diag[flat] +=
                nf * (aj[flat] / incs[probe.coord(flat, j)] + aj[bwd] / incs[probe.coord(bwd, j)]);
        }
    }
    diag
}

/// Removes the mean: `f - N^{-d} sum f`.
pub fn project_mean_zero(f: &GridFunction) -> GridFunction {
    let m = f.mean();
    let mut out = f.clone();
    for v in &mut out.values {
        *v -= m;
    }
    out
}

/// Measure-weighted interpolation of `f` at `point` in `[0,1)^d`: the
/// tensor-product rule whose per-axis weights are conductance increments, so
/// that within a cell the axis-`j` measure derivative of the interpolant is
/// the discrete one at the cell's left node. At grid points it reproduces
/// `f` exactly.
pub fn w_interpolate(f: &GridFunction, w: &WSpec, point: &[f64]) -> f64 {
    assert_eq!(point.len(), f.d, "point dimension mismatch");
    let n = f.n;
    // per-axis cell index and right-node weight
    let mut cell = vec![0usize; f.d];
    let mut t_right = vec![0f64; f.d];
    for j in 0..f.d {
        let x = point[j].rem_euclid(1.0);
        let mut i = (x * n as f64).floor() as usize;
        if i >= n {
            i = n - 1;
        }
        let w_left = w.eval(j, i as f64 / n as f64);
        let w_right = w.eval(j, (i + 1) as f64 / n as f64);
        let w_x = w.eval(j, x);
        cell[j] = i;
        t_right[j] = ((w_x - w_left) / (w_right - w_left)).clamp(0.0, 1.0);
    }
    // accumulate over the 2^d cell corners
    let mut acc = 0.0;
    for corner in 0..(1usize << f.d) {
        let mut weight = 1.0;
        let mut idx = 0usize;
        for j in 0..f.d {
            let up = (corner >> j) & 1 == 1;
            weight *= if up { t_right[j] } else { 1.0 - t_right[j] };
            let c = if up { (cell[j] + 1) % n } else { cell[j] };
            idx = idx * n + c;
        }
        acc += weight * f.values[idx];
    }
    acc
}
