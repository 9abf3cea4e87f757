//! Declarative experiment description: a single JSON tree that resolves to
//! one run of any experiment kind. Numerics are unit-free; identical config
//! plus seeds must reproduce identical data files.

use crate::conductance::AxisProfile;
use crate::env::{EnvironmentSpec, Law};
use crate::testfns::TestFunctionSpec;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Elliptic,
    Neumann,
    Parabolic,
    Homogenize,
    Hydro,
    Selftest,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Elliptic => "elliptic",
            ExperimentKind::Neumann => "neumann",
            ExperimentKind::Parabolic => "parabolic",
            ExperimentKind::Homogenize => "homogenize",
            ExperimentKind::Hydro => "hydro",
            ExperimentKind::Selftest => "selftest",
        }
    }
}

/// Coefficient field: a constant diagonal or a seeded random environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientSpec {
    Constant { value: f64 },
    Random { theta: f64, law: Law, seed: u64 },
}

impl Default for CoefficientSpec {
    fn default() -> Self {
        CoefficientSpec::Constant { value: 1.0 }
    }
}

impl CoefficientSpec {
    pub fn environment(&self, d: usize) -> Option<EnvironmentSpec> {
        match *self {
            CoefficientSpec::Random { theta, law, seed } => Some(EnvironmentSpec {
                theta,
                law,
                seed,
                d,
            }),
            CoefficientSpec::Constant { .. } => None,
        }
    }
}

/// Named right-hand sides and initial profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileSpec {
    Constant {
        value: f64,
    },
    /// `mean + amplitude * sin(2 pi k x_0)`.
    Sine {
        mean: f64,
        amplitude: f64,
        k: usize,
    },
}

impl ProfileSpec {
    pub fn eval(&self, p: &[f64]) -> f64 {
        match *self {
            ProfileSpec::Constant { value } => value,
            ProfileSpec::Sine { mean, amplitude, k } => {
                mean + amplitude * (std::f64::consts::TAU * k as f64 * p[0]).sin()
            }
        }
    }
}

/// Piecewise-constant source description for the manufactured study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub interior_breaks: Vec<f64>,
    pub values: Vec<f64>,
}

impl Default for SourceSpec {
    fn default() -> Self {
        SourceSpec {
            interior_breaks: vec![0.25, 0.5, 0.75],
            values: vec![1.0, -0.5, 2.0, -1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    #[serde(default = "default_solver_tol")]
    pub solver_tol: f64,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
}

fn default_solver_tol() -> f64 {
    1e-10
}

fn default_newton_tol() -> f64 {
    1e-10
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            solver_tol: default_solver_tol(),
            newton_tol: default_newton_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Conductance profile, one entry per axis; the length fixes `d`.
    pub w: Vec<AxisProfile>,
    #[serde(default)]
    pub coefficients: CoefficientSpec,
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Interaction strength of the particle system / quadratic flux, `> -1/2`.
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub n_schedule: Vec<usize>,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    /// Macroscopic times at which states/observables are recorded.
    #[serde(default)]
    pub sample_times: Vec<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Seeds for seed-averaged experiments; the first doubles as the master
    /// seed for replica derivation.
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub replicas: Option<usize>,
    #[serde(default)]
    pub test_functions: TestFunctionSpec,
    #[serde(default)]
    pub initial_profile: Option<ProfileSpec>,
    #[serde(default)]
    pub rhs: Option<ProfileSpec>,
    #[serde(default)]
    pub source: Option<SourceSpec>,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// Field-level validation; returns every problem found, not just the first.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if self.w.is_empty() {
            errs.push("w: at least one axis profile is required".into());
        }
        for (k, axis) in self.w.iter().enumerate() {
            if !(axis.alpha > 0.0 && axis.alpha.is_finite()) {
                errs.push(format!("w[{k}].alpha: must be positive and finite"));
            }
            for (i, j) in axis.jumps.iter().enumerate() {
                if !(0.0..1.0).contains(&j.location) {
                    errs.push(format!("w[{k}].jumps[{i}].location: must lie in [0,1)"));
                }
                if !(j.size > 0.0 && j.size.is_finite()) {
                    errs.push(format!(
                        "w[{k}].jumps[{i}].size: must be positive and finite"
                    ));
                }
            }
        }
        if let CoefficientSpec::Constant { value } = self.coefficients {
            if !(value > 0.0 && value.is_finite()) {
                errs.push("coefficients.value: must be positive and finite".into());
            }
        }
        if let CoefficientSpec::Random { theta, law, .. } = self.coefficients {
            if !(theta >= 1.0 && theta.is_finite()) {
                errs.push("coefficients.theta: must be >= 1 and finite".into());
            }
            if let Law::TwoPoint { p } = law {
                if !(0.0..=1.0).contains(&p) {
                    errs.push("coefficients.law.p: must lie in [0,1]".into());
                }
            }
        }
        if let Some(b) = self.b {
            if !(b > -0.5 && b.is_finite()) {
                errs.push("b: must satisfy b > -1/2".into());
            }
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                errs.push("lambda: must be nonnegative and finite".into());
            }
        }
        if self.n_schedule.iter().any(|&n| n < 4) {
            errs.push("n_schedule: grid sizes below 4 are not supported".into());
        }
        if !self.n_schedule.windows(2).all(|p| p[0] < p[1]) {
            errs.push("n_schedule: must be strictly increasing".into());
        }
        if let Some(t) = self.t_end {
            if !(t > 0.0 && t.is_finite()) {
                errs.push("t_end: must be positive and finite".into());
            }
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                errs.push("dt: must be positive and finite".into());
            }
        }
        if !self.sample_times.windows(2).all(|p| p[0] <= p[1]) {
            errs.push("sample_times: must be nondecreasing".into());
        }
        if let (Some(t_end), false) = (self.t_end, self.sample_times.is_empty()) {
            if self
                .sample_times
                .iter()
                .any(|&s| s < 0.0 || s > t_end * (1.0 + 1e-12))
            {
                errs.push("sample_times: must lie within [0, t_end]".into());
            }
        }
        if let Some(r) = self.replicas {
            if r == 0 {
                errs.push("replicas: must be at least 1".into());
            }
        }
        if let Some(ProfileSpec::Sine {
            mean, amplitude, ..
        }) = self.initial_profile
        {
            if mean - amplitude.abs() < 0.0 || mean + amplitude.abs() > 1.0 {
                errs.push("initial_profile: sine profile must map into [0,1]".into());
            }
        }
        if let Some(src) = &self.source {
            if src.interior_breaks.len() + 1 != src.values.len() {
                errs.push("source: need exactly one more value than interior breakpoints".into());
            }
            let mut prev = 0.0;
            for &c in &src.interior_breaks {
                if !(c > prev && c < 1.0) {
                    errs.push("source.interior_breaks: must increase strictly within (0,1)".into());
                    break;
                }
                prev = c;
            }
        }

        // per-experiment requirements
        let need = |cond: bool, msg: &str, errs: &mut Vec<String>| {
            if !cond {
                errs.push(msg.into());
            }
        };
        match self.experiment {
            ExperimentKind::Elliptic => {
                need(
                    self.dim() == 1,
                    "elliptic: the manufactured study is one-dimensional",
                    &mut errs,
                );
                need(
                    !self.n_schedule.is_empty(),
                    "elliptic: n_schedule is required",
                    &mut errs,
                );
                need(
                    self.lambda.map(|l| l > 0.0).unwrap_or(false),
                    "elliptic: lambda > 0 is required",
                    &mut errs,
                );
            }
            ExperimentKind::Neumann => {
                need(
                    !self.n_schedule.is_empty(),
                    "neumann: n_schedule is required",
                    &mut errs,
                );
                need(self.rhs.is_some(), "neumann: rhs is required", &mut errs);
                need(
                    self.lambda.unwrap_or(0.0) == 0.0,
                    "neumann: lambda must be 0 (omit it or set 0)",
                    &mut errs,
                );
            }
            ExperimentKind::Parabolic => {
                need(
                    !self.n_schedule.is_empty(),
                    "parabolic: n_schedule is required",
                    &mut errs,
                );
                need(
                    self.t_end.is_some(),
                    "parabolic: t_end is required",
                    &mut errs,
                );
                need(self.b.is_some(), "parabolic: b is required", &mut errs);
                need(
                    self.initial_profile.is_some(),
                    "parabolic: initial_profile is required",
                    &mut errs,
                );
            }
            ExperimentKind::Homogenize => {
                need(
                    matches!(self.coefficients, CoefficientSpec::Random { .. }),
                    "homogenize: coefficients must be random",
                    &mut errs,
                );
                need(
                    self.n_schedule.len() >= 2,
                    "homogenize: need a schedule of at least 2 sizes",
                    &mut errs,
                );
                need(
                    self.lambda.map(|l| l > 0.0).unwrap_or(false),
                    "homogenize: lambda > 0 is required",
                    &mut errs,
                );
                need(
                    !self.seeds.is_empty(),
                    "homogenize: at least one seed is required",
                    &mut errs,
                );
                need(self.rhs.is_some(), "homogenize: rhs is required", &mut errs);
            }
            ExperimentKind::Hydro => {
                need(
                    !self.n_schedule.is_empty(),
                    "hydro: n_schedule is required",
                    &mut errs,
                );
                need(self.b.is_some(), "hydro: b is required", &mut errs);
                need(
                    self.replicas.is_some(),
                    "hydro: replicas is required",
                    &mut errs,
                );
                need(
                    !self.sample_times.is_empty(),
                    "hydro: sample_times is required",
                    &mut errs,
                );
                need(
                    !self.seeds.is_empty(),
                    "hydro: a master seed is required",
                    &mut errs,
                );
                need(
                    self.initial_profile.is_some(),
                    "hydro: initial_profile is required",
                    &mut errs,
                );
                if self.sample_times.iter().any(|&s| s <= 0.0) {
                    errs.push("hydro: sample_times must be strictly positive".into());
                }
            }
            ExperimentKind::Selftest => {}
        }

        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conductance::Jump;

    fn hydro_config() -> ExperimentConfig {
        ExperimentConfig {
            experiment: ExperimentKind::Hydro,
            w: vec![AxisProfile {
                alpha: 1.0,
                jumps: vec![Jump {
                    location: 0.45,
                    size: 0.5,
                }],
            }],
            coefficients: CoefficientSpec::Constant { value: 1.0 },
            lambda: None,
            b: Some(0.5),
            n_schedule: vec![64],
            t_end: Some(0.05),
            dt: Some(1e-4),
            sample_times: vec![0.01, 0.05],
            tolerances: Tolerances::default(),
            seeds: vec![1],
            replicas: Some(8),
            test_functions: TestFunctionSpec::default(),
            initial_profile: Some(ProfileSpec::Sine {
                mean: 0.5,
                amplitude: 0.3,
                k: 1,
            }),
            rhs: None,
            source: None,
            output_dir: PathBuf::from("out"),
        }
    }

    #[test]
    fn valid_config_passes_and_round_trips() {
        let cfg = hydro_config();
        cfg.validate().unwrap();
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
        // a second trip is byte-identical
        assert_eq!(json, serde_json::to_string_pretty(&back).unwrap());
    }

    #[test]
    fn validation_reports_field_level_errors() {
        let mut cfg = hydro_config();
        cfg.b = Some(-0.75);
        cfg.replicas = Some(0);
        cfg.w[0].jumps[0].location = 1.5;
        let errs = cfg.validate().unwrap_err();
        assert!(errs.iter().any(|e| e.contains("b:")));
        assert!(errs.iter().any(|e| e.contains("replicas")));
        assert!(errs.iter().any(|e| e.contains("jumps[0].location")));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let json = r#"{"experiment":"selftest","w":[{"alpha":1.0}],"output_dir":"o","bogus":1}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(json).is_err());
    }
}
