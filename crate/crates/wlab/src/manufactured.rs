//! Closed-form reference solutions for the one-dimensional elliptic problem
//! with unit coefficients. A mean-zero piecewise-constant source `s` is
//! integrated twice, once in Lebesgue measure and once against the
//! conductance measure, giving a periodic profile
//!
//!   u(x) = u0 + b W(x) + int_{(0,x]} W(dy) S(y),   S(y) = int_0^y s(z) dz,
//!
//! whose mixed derivative is exactly `s`. Both integrals are evaluated in
//! closed form (the measure is an affine ramp plus atoms), so the reference
//! is independent of any grid or solver. The right-hand side that makes `u`
//! solve `lambda u - d_x d_w u = f` is `f = lambda u - s`.

use crate::conductance::WSpec;

/// Mean-zero piecewise-constant source on `[0,1)`, right continuous.
#[derive(Debug, Clone)]
pub struct PiecewiseSource {
    /// Breakpoints `0 = c_0 < c_1 < ... < c_K = 1`.
    breaks: Vec<f64>,
    /// Value on `[c_k, c_{k+1})`.
    values: Vec<f64>,
}

impl PiecewiseSource {
    /// Builds the source from interior breakpoints and per-piece values,
    /// shifting by a constant so the mean over `[0,1)` is exactly zero.
    pub fn mean_zero(interior_breaks: &[f64], values: &[f64]) -> Self {
        assert_eq!(interior_breaks.len() + 1, values.len());
        let mut breaks = Vec::with_capacity(values.len() + 1);
        breaks.push(0.0);
        breaks.extend_from_slice(interior_breaks);
        breaks.push(1.0);
        for pair in breaks.windows(2) {
            assert!(
                pair[0] < pair[1],
                "breakpoints must be strictly increasing in (0,1)"
            );
        }
        let mean: f64 = values
            .iter()
            .zip(breaks.windows(2))
            .map(|(v, seg)| v * (seg[1] - seg[0]))
            .sum();
        let values = values.iter().map(|v| v - mean).collect();
        PiecewiseSource { breaks, values }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = x.rem_euclid(1.0);
        let k = match self.breaks.binary_search_by(|b| b.partial_cmp(&x).unwrap()) {
            Ok(k) => k.min(self.values.len() - 1),
            Err(k) => k - 1,
        };
        self.values[k]
    }

    /// `S(x) = int_0^x s` for `x` in `[0,1]`, piecewise linear, `S(0) = S(1) = 0`.
    pub fn antiderivative(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let mut acc = 0.0;
        for (v, seg) in self.values.iter().zip(self.breaks.windows(2)) {
            if x <= seg[0] {
                break;
            }
            acc += v * (x.min(seg[1]) - seg[0]);
        }
        acc
    }

    /// `int_0^x S(y) dy` for `x` in `[0,1]`, piecewise quadratic.
    fn double_integral(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let mut acc = 0.0;
        let mut s_left = 0.0; // S at the left end of the current piece
        for (v, seg) in self.values.iter().zip(self.breaks.windows(2)) {
            if x <= seg[0] {
                break;
            }
            let hi = x.min(seg[1]);
            let len = hi - seg[0];
            // S(y) = s_left + v (y - seg[0]) on the piece
            acc += s_left * len + 0.5 * v * len * len;
            s_left += v * (seg[1] - seg[0]);
        }
        acc
    }
}

/// The reference profile and its exact right-hand side.
#[derive(Debug, Clone)]
pub struct Manufactured {
    w: WSpec,
    source: PiecewiseSource,
    u0: f64,
    slope_coeff: f64,
}

impl Manufactured {
    /// `w` must be one-dimensional. `u0` is the free additive constant.
    pub fn new(w: WSpec, source: PiecewiseSource, u0: f64) -> Self {
        assert_eq!(w.dim(), 1, "manufactured solutions are one-dimensional");
        // choose b so that int_{(0,1]} W(dy) { b + S(y) } = 0, which makes u periodic
        let period = w.period(0);
        let m = Manufactured {
            w,
            source,
            u0,
            slope_coeff: 0.0,
        };
        let stieltjes_of_s = m.stieltjes_integral(1.0);
        Manufactured {
            slope_coeff: -stieltjes_of_s / period,
            ..m
        }
    }

    /// `int_{(0,x]} W(dy) S(y)` for `x` in `[0,1]`: the ramp part plus atoms.
    fn stieltjes_integral(&self, x: f64) -> f64 {
        let axis = self.w.axis(0);
        let mut acc = axis.alpha * self.source.double_integral(x);
        for j in &axis.jumps {
            if j.location > 0.0 && j.location <= x {
                acc += j.size * self.source.antiderivative(j.location);
            }
            // an atom at 0 reappears at y = 1, where S vanishes
        }
        acc
    }

    /// The exact profile value.
    pub fn u(&self, x: f64) -> f64 {
        let x = x.rem_euclid(1.0);
        self.u0 + self.slope_coeff * self.w.eval(0, x) + self.stieltjes_integral(x)
    }

    /// The exact mixed derivative `d_x d_w u`.
    pub fn mixed_derivative(&self, x: f64) -> f64 {
        self.source.eval(x)
    }

    /// Right-hand side making `u` solve `lambda u - d_x d_w u = f`.
    pub fn rhs(&self, lambda: f64, x: f64) -> f64 {
        lambda * self.u(x) - self.source.eval(x)
    }

    pub fn w_spec(&self) -> &WSpec {
        &self.w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conductance::{AxisProfile, Jump};

    fn sample_setup() -> Manufactured {
        let w = WSpec::new(vec![AxisProfile {
            alpha: 1.0,
            jumps: vec![Jump {
                location: 0.41,
                size: 0.9,
            }],
        }])
        .unwrap();
        let source = PiecewiseSource::mean_zero(&[0.25, 0.5, 0.75], &[1.0, -0.5, 2.0, -1.0]);
        Manufactured::new(w, source, 0.3)
    }

    #[test]
    fn source_is_mean_zero_and_antiderivative_closes() {
        let m = sample_setup();
        assert!(m.source.antiderivative(1.0 - 1e-12).abs() < 1e-9);
        // quadrature check of the antiderivative
        let quad: f64 = (0..20000)
            .map(|i| m.source.eval(i as f64 / 20000.0) / 20000.0)
            .sum();
        assert!(quad.abs() < 1e-6);
    }

    #[test]
    fn double_integral_matches_quadrature() {
        let m = sample_setup();
        for &x in &[0.1, 0.3, 0.55, 0.99] {
            let steps = 200000;
            let quad: f64 = (0..steps)
                .map(|i| {
                    let y = x * i as f64 / steps as f64;
                    m.source.antiderivative(y) * x / steps as f64
                })
                .sum();
            assert!((m.source.double_integral(x) - quad).abs() < 1e-5, "x={x}");
        }
    }

    #[test]
    fn profile_is_periodic() {
        let m = sample_setup();
        assert!((m.u(0.0) - m.u(1.0 - 1e-13)).abs() < 1e-9);
    }

    #[test]
    fn measure_derivative_recovers_source() {
        // finite difference of u in W-measure over small intervals away from
        // the atom approximates b + S; its Lebesgue difference recovers s
        let m = sample_setup();
        let h = 1e-6;
        for &x in &[0.1, 0.3, 0.6, 0.9] {
            let dw = m.w.eval(0, x + h) - m.w.eval(0, x);
            let grad = (m.u(x + h) - m.u(x)) / dw;
            let expect = m.slope_coeff + m.source.antiderivative(x);
            assert!((grad - expect).abs() < 1e-4, "x={x}: {grad} vs {expect}");
        }
    }
}
