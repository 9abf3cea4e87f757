//! Named families of smooth test functions sampled on the grid: constants,
//! per-axis sinusoids, and tensor products thereof. The weak-form pairings
//! only ever need the divergence-form operator applied to these, so any grid
//! function qualifies; smooth classical choices keep the pairings stable.

use crate::grid::GridFunction;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Constants,
    AxisSinusoids,
    Products,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionSpec {
    pub family: Family,
    /// Highest frequency for sinusoid-based families.
    #[serde(default = "default_max_k")]
    pub max_k: usize,
    /// Prepend the constant function (mass pairing) to sinusoid families.
    #[serde(default = "default_include_constant")]
    pub include_constant: bool,
}

fn default_max_k() -> usize {
    1
}

fn default_include_constant() -> bool {
    true
}

impl Default for TestFunctionSpec {
    fn default() -> Self {
        TestFunctionSpec {
            family: Family::AxisSinusoids,
            max_k: 1,
            include_constant: true,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TestFnError {
    #[error("max_k must be at least 1 for family {0:?}")]
    BadFrequency(Family),
    #[error("frequency {k} is not resolved on a grid of size {n}")]
    Unresolved { k: usize, n: usize },
}

/// Human-readable labels matching the order of `make_test_functions`.
pub fn labels(spec: &TestFunctionSpec, d: usize) -> Vec<String> {
    let mut out = Vec::new();
    match spec.family {
        Family::Constants => out.push("const".into()),
        Family::AxisSinusoids => {
            if spec.include_constant {
                out.push("const".into());
            }
            for j in 0..d {
                for k in 1..=spec.max_k {
                    out.push(format!("sin{k}_x{j}"));
                    out.push(format!("cos{k}_x{j}"));
                }
            }
        }
        Family::Products => {
            if spec.include_constant {
                out.push("const".into());
            }
            let per_axis: usize = 2 * spec.max_k;
            for combo in 0..per_axis.pow(d as u32) {
                let mut name = String::new();
                let mut rest = combo;
                for j in 0..d {
                    let pick = rest % per_axis;
                    rest /= per_axis;
                    let k = pick / 2 + 1;
                    let trig = if pick & 1 == 0 { "sin" } else { "cos" };
                    if j > 0 {
                        name.push('*');
                    }
                    name.push_str(&format!("{trig}{k}_x{j}"));
                }
                out.push(name);
            }
        }
    }
    out
}

/// Samples the family on the grid of size `n` in dimension `d`.
pub fn make_test_functions(
    spec: &TestFunctionSpec,
    n: usize,
    d: usize,
) -> Result<Vec<GridFunction>, TestFnError> {
    if spec.family != Family::Constants {
        if spec.max_k == 0 {
            return Err(TestFnError::BadFrequency(spec.family));
        }
        // a frequency-k sinusoid needs more than 2k points per axis
        if 2 * spec.max_k >= n {
            return Err(TestFnError::Unresolved { k: spec.max_k, n });
        }
    }
    let mut out = Vec::new();
    match spec.family {
        Family::Constants => out.push(GridFunction::constant(n, d, 1.0)),
        Family::AxisSinusoids => {
            if spec.include_constant {
                out.push(GridFunction::constant(n, d, 1.0));
            }
            for j in 0..d {
                for k in 1..=spec.max_k {
                    let freq = k as f64;
                    out.push(GridFunction::sample(n, d, |p| (TAU * freq * p[j]).sin()));
                    out.push(GridFunction::sample(n, d, |p| (TAU * freq * p[j]).cos()));
                }
            }
        }
        Family::Products => {
            if spec.include_constant {
                out.push(GridFunction::constant(n, d, 1.0));
            }
            let per_axis: usize = 2 * spec.max_k;
            for combo in 0..per_axis.pow(d as u32) {
                let mut picks = Vec::with_capacity(d);
                let mut rest = combo;
                for _ in 0..d {
                    picks.push(rest % per_axis);
                    rest /= per_axis;
                }
                out.push(GridFunction::sample(n, d, |p| {
                    let mut acc = 1.0;
                    for (j, &pick) in picks.iter().enumerate() {
                        let k = (pick / 2 + 1) as f64;
                        let phase = TAU * k * p[j];
                        acc *= if pick % 2 == 0 {
                            phase.sin()
                        } else {
                            phase.cos()
                        };
                    }
                    acc
                }));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_family() {
        let spec = TestFunctionSpec {
            family: Family::Constants,
            max_k: 1,
            include_constant: true,
        };
        let fns = make_test_functions(&spec, 8, 1).unwrap();
        assert_eq!(fns.len(), 1);
        assert!(fns[0].values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn axis_sinusoid_counts_and_exact_samples() {
        let spec = TestFunctionSpec {
            family: Family::AxisSinusoids,
            max_k: 2,
            include_constant: false,
        };
        let fns = make_test_functions(&spec, 8, 1).unwrap();
        assert_eq!(fns.len(), 4);
        assert_eq!(
            labels(&spec, 1),
            vec!["sin1_x0", "cos1_x0", "sin2_x0", "cos2_x0"]
        );
        for (i, f) in fns.iter().enumerate() {
            let k = (i / 2 + 1) as f64;
            for site in 0..8 {
                let x = site as f64 / 8.0;
                let want = if i % 2 == 0 {
                    (TAU * k * x).sin()
                } else {
                    (TAU * k * x).cos()
                };
                assert_eq!(f.values()[site], want);
            }
        }
    }

    #[test]
    fn product_family_count() {
        let spec = TestFunctionSpec {
            family: Family::Products,
            max_k: 1,
            include_constant: false,
        };
        let fns = make_test_functions(&spec, 8, 2).unwrap();
        assert_eq!(fns.len(), 4);
        assert_eq!(labels(&spec, 2).len(), 4);
    }

    #[test]
    fn unresolved_frequencies_are_rejected() {
        let spec = TestFunctionSpec {
            family: Family::AxisSinusoids,
            max_k: 4,
            include_constant: false,
        };
        assert_eq!(
            make_test_functions(&spec, 8, 1),
            Err(TestFnError::Unresolved { k: 4, n: 8 })
        );
    }
}
