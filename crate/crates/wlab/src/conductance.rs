//! Conductance functions: strictly increasing càdlàg profiles, one per axis,
//! each an affine ramp plus finitely many upward jumps, extended periodically
//! so that `W(u + 1) - W(u)` is constant in `u`.
//!
//! Jumps act as membranes: a grid bond whose interval contains a jump gets a
//! large measure increment and hence a small conductance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A single jump of the profile: at `location` in `[0, 1)`, of height `size > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub location: f64,
    pub size: f64,
}

/// One axis of the conductance profile: slope `alpha > 0` plus jumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisProfile {
    pub alpha: f64,
    #[serde(default)]
    pub jumps: Vec<Jump>,
}

/// Per-axis conductance profiles for the `d`-dimensional torus.
///
/// The full profile is the sum of the per-axis ones; all operators in this
/// crate only ever consume single-axis values and increments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WSpec {
    axes: Vec<AxisProfile>,
}

#[derive(Debug, Error, PartialEq)]
pub enum WSpecError {
    #[error("axis {axis}: slope must be positive and finite, got {alpha}")]
    BadSlope { axis: usize, alpha: f64 },
    #[error("axis {axis}: jump size must be positive and finite, got {size}")]
    BadJumpSize { axis: usize, size: f64 },
    #[error("axis {axis}: jump location {location} outside [0, 1)")]
    BadJumpLocation { axis: usize, location: f64 },
    #[error("axis {axis}: duplicate jump location {location}")]
    DuplicateJump { axis: usize, location: f64 },
    #[error("dimension must be at least 1")]
    Empty,
}

impl WSpec {
    /// Validates and builds a profile. Jumps are sorted by location per axis.
    pub fn new(mut axes: Vec<AxisProfile>) -> Result<Self, WSpecError> {
        if axes.is_empty() {
            return Err(WSpecError::Empty);
        }
        for (k, axis) in axes.iter_mut().enumerate() {
            if !(axis.alpha > 0.0 && axis.alpha.is_finite()) {
                return Err(WSpecError::BadSlope {
                    axis: k,
                    alpha: axis.alpha,
                });
            }
            for j in &axis.jumps {
                if !(j.size > 0.0 && j.size.is_finite()) {
                    return Err(WSpecError::BadJumpSize {
                        axis: k,
                        size: j.size,
                    });
                }
                if !(0.0..1.0).contains(&j.location) {
                    return Err(WSpecError::BadJumpLocation {
                        axis: k,
                        location: j.location,
                    });
                }
            }
            axis.jumps
                .sort_by(|a, b| a.location.partial_cmp(&b.location).unwrap());
            for pair in axis.jumps.windows(2) {
                if pair[0].location == pair[1].location {
                    return Err(WSpecError::DuplicateJump {
                        axis: k,
                        location: pair[0].location,
                    });
                }
            }
        }
        Ok(WSpec { axes })
    }

    /// The identity profile `W_k(x) = x` in `d` dimensions.
    pub fn identity(d: usize) -> Self {
        WSpec::new(vec![
            AxisProfile {
                alpha: 1.0,
                jumps: Vec::new()
            };
            d
        ])
        .unwrap()
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, k: usize) -> &AxisProfile {
        &self.axes[k]
    }

    /// Evaluates `W_k(x)` for any real `x`, under the càdlàg convention
    /// (a jump at `location` is included as soon as `x >= location`) and the
    /// periodic increment rule.
    pub fn eval(&self, k: usize, x: f64) -> f64 {
        let axis = &self.axes[k];
        let n = x.floor();
        let frac = x - n;
        let mut v = axis.alpha * x;
        for j in &axis.jumps {
            v += j.size * (n + if frac >= j.location { 1.0 } else { 0.0 });
        }
        v
    }

    /// The period `W_k(1) - W_k(0)`, i.e. the total mass of one cell.
    pub fn period(&self, k: usize) -> f64 {
        let axis = &self.axes[k];
        axis.alpha + axis.jumps.iter().map(|j| j.size).sum::<f64>()
    }

    /// The measure of the grid bond `(i/N, (i+1)/N]` along axis `k`.
    ///
    /// Defined as the evaluation difference so that increment consistency
    /// with `eval` holds exactly; a jump at `loc` belongs to the unique bond
    /// with `i/N < loc <= (i+1)/N`.
    pub fn increment(&self, k: usize, i: usize, n: usize) -> f64 {
        assert!(i < n, "bond index {i} out of range for N={n}");
        let w = self.eval(k, (i + 1) as f64 / n as f64) - self.eval(k, i as f64 / n as f64);
        debug_assert!(w > 0.0);
        w
    }

    /// All `N` bond measures along axis `k`.
    pub fn increments(&self, k: usize, n: usize) -> Vec<f64> {
        let evals: Vec<f64> = (0..=n).map(|i| self.eval(k, i as f64 / n as f64)).collect();
        let out: Vec<f64> = (0..n).map(|i| evals[i + 1] - evals[i]).collect();
        // strict increase of each axis profile guarantees positivity
        debug_assert!(out.iter().all(|&w| w > 0.0));
        out
    }

    /// Smallest bond measure over all axes at grid size `n`.
    pub fn min_increment(&self, n: usize) -> f64 {
        (0..self.dim())
            .flat_map(|k| self.increments(k, n))
            .fold(f64::INFINITY, f64::min)
    }
}
