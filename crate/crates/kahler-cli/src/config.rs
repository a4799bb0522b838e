//! Experiment configuration and its validation.

use std::path::PathBuf;

use kahler::balanced::Acceleration;
use kahler::potential::DEFAULT_MAX_DEGREE;
use kahler::quadrature::{DEFAULT_RADIAL_ORDER, RESOLUTION_MARGIN};
use kahler::RadialPotential;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Bergman,
    Partition,
    Functionals,
    Futaki,
    Balanced,
    Fit,
    Verify,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Bergman => "bergman",
            ExperimentKind::Partition => "partition",
            ExperimentKind::Functionals => "functionals",
            ExperimentKind::Futaki => "futaki",
            ExperimentKind::Balanced => "balanced",
            ExperimentKind::Fit => "fit",
            ExperimentKind::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ToleranceProfile {
    Strict,
    #[default]
    Default,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalancedSettings {
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_acceleration")]
    pub acceleration: Acceleration,
}

fn default_max_iter() -> usize {
    kahler::balanced::DEFAULT_MAX_ITER
}

fn default_tol() -> f64 {
    kahler::balanced::DEFAULT_TOL
}

fn default_acceleration() -> Acceleration {
    Acceleration::None
}

impl Default for BalancedSettings {
    fn default() -> Self {
        Self {
            max_iter: default_max_iter(),
            tol: default_tol(),
            acceleration: default_acceleration(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_n")]
    pub n: usize,
    /// Potentials in the documented JSON form. Empty means one perturbed
    /// default potential (or FS for `bergman`).
    #[serde(default)]
    pub potentials: Vec<RadialPotential>,
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
    pub k_stride: Option<usize>,
    /// Radial Gauss-Legendre order; chosen from k_max when absent.
    pub radial_order: Option<usize>,
    #[serde(default = "default_path_order")]
    pub path_order: usize,
    #[serde(default)]
    pub tolerance_profile: ToleranceProfile,
    pub out: Option<PathBuf>,
    /// Number of subleading terms J in the expansion fit.
    #[serde(default = "default_fit_terms")]
    pub fit_terms: usize,
    /// CSV of (k, value) rows for `fit`.
    pub samples: Option<PathBuf>,
    #[serde(default)]
    pub balanced: BalancedSettings,
}

fn default_n() -> usize {
    1
}

fn default_path_order() -> usize {
    kahler::functionals::PATH_ORDER
}

fn default_fit_terms() -> usize {
    3
}

/// Resolved k window and rule order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub k_min: usize,
    pub k_max: usize,
    pub k_stride: usize,
    pub radial_order: usize,
}

impl Window {
    pub fn ks(&self) -> Vec<usize> {
        (self.k_min..=self.k_max).step_by(self.k_stride).collect()
    }
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            n: default_n(),
            potentials: vec![],
            k_min: None,
            k_max: None,
            k_stride: None,
            radial_order: None,
            path_order: default_path_order(),
            tolerance_profile: ToleranceProfile::Default,
            out: None,
            fit_terms: default_fit_terms(),
            samples: None,
            balanced: BalancedSettings::default(),
        }
    }

    /// Default window per experiment kind and dimension.
    fn default_window(&self) -> (usize, usize, usize) {
        match (self.kind, self.n) {
            (ExperimentKind::Partition, 1) => (40, 240, 8),
            (ExperimentKind::Partition, _) => (20, 120, 4),
            (ExperimentKind::Balanced, _) => (10, 30, 10),
            (ExperimentKind::Functionals, _) | (ExperimentKind::Futaki, _) => (0, 2, 1),
            _ => (1, 50, 1),
        }
    }

    pub fn window(&self) -> Window {
        let (a, b, c) = self.default_window();
        let k_max = self.k_max.unwrap_or(b);
        let needed = 2 * k_max + RESOLUTION_MARGIN;
        Window {
            k_min: self.k_min.unwrap_or(a),
            k_max,
            k_stride: self.k_stride.unwrap_or(c),
            radial_order: self.radial_order.unwrap_or(needed.max(DEFAULT_RADIAL_ORDER)),
        }
    }

    /// Potentials used by the experiment, with defaults filled in.
    pub fn potentials_or_default(&self) -> Vec<RadialPotential> {
        if !self.potentials.is_empty() {
            return self.potentials.clone();
        }
        match self.kind {
            ExperimentKind::Bergman => vec![RadialPotential::zero(self.n)],
            _ => vec![default_potential(self.n)],
        }
    }

    /// Every violated constraint, each prefixed with its field path.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(1..=3).contains(&self.n) {
            errs.push(format!("n: {} is outside 1..=3", self.n));
        }
        for (i, p) in self.potentials.iter().enumerate() {
            if p.n != self.n {
                errs.push(format!("potentials[{i}].n: {} differs from n = {}", p.n, self.n));
            }
            if let Some(d) = p.profile.degree() {
                if d > DEFAULT_MAX_DEGREE {
                    errs.push(format!("potentials[{i}].coeffs: degree {d} exceeds {DEFAULT_MAX_DEGREE}"));
                }
            }
        }
        let w = self.window();
        if w.k_stride == 0 {
            errs.push("k_stride: must be positive".into());
        }
        if w.k_min > w.k_max {
            errs.push(format!("k_min: {} exceeds k_max = {}", w.k_min, w.k_max));
        }
        let needs_k = !matches!(
            self.kind,
            ExperimentKind::Functionals | ExperimentKind::Futaki | ExperimentKind::Fit | ExperimentKind::Verify
        );
        if needs_k && w.radial_order < 2 * w.k_max + RESOLUTION_MARGIN {
            errs.push(format!(
                "radial_order: {} is below {} required for k_max = {}",
                w.radial_order,
                2 * w.k_max + RESOLUTION_MARGIN,
                w.k_max
            ));
        }
        if w.radial_order < 16 {
            errs.push("radial_order: must be at least 16".into());
        }
        if self.path_order < 2 {
            errs.push("path_order: must be at least 2".into());
        }
        if matches!(self.kind, ExperimentKind::Functionals | ExperimentKind::Futaki) && w.k_max > 2 {
            errs.push(format!("k_max: index j = {} is above 2", w.k_max));
        }
        if matches!(self.kind, ExperimentKind::Balanced) && w.k_min == 0 {
            errs.push("k_min: balanced metrics need k >= 1".into());
        }
        if !(self.balanced.tol > 0.0) {
            errs.push("balanced.tol: must be positive".into());
        }
        if self.kind == ExperimentKind::Fit && self.samples.is_none() {
            errs.push("samples: required for fit".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(errs))
        }
    }
}

/// A fixed perturbation of FS used when no potential is given.
pub fn default_potential(n: usize) -> RadialPotential {
    RadialPotential::poly(n, &[0.0, 0.1, -0.08, 0.05]).expect("valid default potential")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_config() {
        let c: ExperimentConfig = serde_json::from_str(
            r#"{"kind": "partition", "n": 1,
                "potentials": [{"n": 1, "basis": "s-poly", "coeffs": [0.0, 0.1]}],
                "k_min": 40, "k_max": 120, "k_stride": 8}"#,
        )
        .unwrap();
        c.validate().unwrap();
        assert_eq!(c.window().radial_order, 272);
        assert_eq!(c.window().ks().len(), 11);
    }

    #[test]
    fn errors_carry_field_paths() {
        let c: ExperimentConfig = serde_json::from_str(
            r#"{"kind": "bergman", "n": 2, "k_max": 300, "radial_order": 200,
                "potentials": [{"n": 1, "basis": "s-poly", "coeffs": [0.0]}],
                "balanced": {"tol": -1.0}}"#,
        )
        .unwrap();
        let Err(CliError::Config(errs)) = c.validate() else { panic!() };
        let joined = errs.join("\n");
        for path in ["potentials[0].n", "radial_order", "balanced.tol"] {
            assert!(joined.contains(path), "{joined}");
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"kind": "bergman", "kmax": 3}"#).is_err());
    }
}
