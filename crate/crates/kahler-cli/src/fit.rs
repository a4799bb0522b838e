//! Least-squares fit of sweep values to sum_j c_j k^(n-j).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Largest accepted condition number of the column-scaled design matrix.
pub const CONDITION_LIMIT: f64 = 1e10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub n: usize,
    /// exponents n, n-1, ..., n-J
    pub powers: Vec<i32>,
    pub coefficients: Vec<f64>,
    pub ks: Vec<f64>,
    /// value - known - model at each k
    pub residuals: Vec<f64>,
    pub condition: f64,
}

impl FitResult {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |a, r| a.max(r.abs()))
    }
}

/// Fits `value - known` at each k to c_0 k^n + ... + c_J k^(n-J).
pub fn fit_expansion(samples: &[(f64, f64)], n: usize, terms: usize, known: &[f64]) -> Result<FitResult> {
    let m = samples.len();
    if m < terms + 3 {
        return Err(CliError::Format(format!(
            "fit of {} terms needs at least {} samples, got {m}",
            terms + 1,
            terms + 3
        )));
    }
    if known.len() != m {
        return Err(CliError::Format("known terms do not match the samples".into()));
    }
    let mut ks: Vec<f64> = samples.iter().map(|s| s.0).collect();
    ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if ks.windows(2).any(|w| w[0] == w[1]) || ks.iter().any(|k| !(*k > 0.0)) {
        return Err(CliError::Format("k values must be positive and distinct".into()));
    }
    let powers: Vec<i32> = (0..=terms).map(|j| n as i32 - j as i32).collect();
    let raw = DMatrix::from_fn(m, terms + 1, |i, j| samples[i].0.powi(powers[j]));
    let scale: Vec<f64> = (0..=terms)
        .map(|j| raw.column(j).iter().fold(0.0f64, |a, v| a.max(v.abs())))
        .collect();
    let design = DMatrix::from_fn(m, terms + 1, |i, j| raw[(i, j)] / scale[j]);
    let y = DVector::from_fn(m, |i, _| samples[i].1 - known[i]);
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = smax / smin;
    if !(condition <= CONDITION_LIMIT) {
        return Err(CliError::IllConditioned {
            condition,
            limit: CONDITION_LIMIT,
        });
    }
    let z = svd.solve(&y, 0.0).map_err(|e| CliError::Format(e.to_string()))?;
    let coefficients: Vec<f64> = z.iter().zip(&scale).map(|(c, s)| c / s).collect();
    let model = &design * &z;
    Ok(FitResult {
        n,
        powers,
        coefficients,
        ks: samples.iter().map(|s| s.0).collect(),
        residuals: (0..m).map(|i| y[i] - model[i]).collect(),
        condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_series_is_recovered() {
        let samples: Vec<(f64, f64)> = (10..30).map(|k| k as f64).map(|k| (k, 3.0 * k + 5.0 + 7.0 / k)).collect();
        let f = fit_expansion(&samples, 1, 2, &vec![0.0; samples.len()]).unwrap();
        for (c, want) in f.coefficients.iter().zip([3.0, 5.0, 7.0]) {
            assert!((c - want).abs() < 1e-10, "{c}");
        }
        assert!(f.max_residual() < 1e-10);
    }

    #[test]
    fn known_terms_are_subtracted() {
        let samples: Vec<(f64, f64)> = (5..15).map(|k| k as f64).map(|k| (k, k * k * k + 2.0 * k)).collect();
        let known: Vec<f64> = samples.iter().map(|s| s.0.powi(3)).collect();
        let f = fit_expansion(&samples, 1, 2, &known).unwrap();
        assert!((f.coefficients[0] - 2.0).abs() < 1e-10);
        assert!(f.coefficients[1].abs() < 1e-9 && f.coefficients[2].abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_windows() {
        let s: Vec<(f64, f64)> = (1..4).map(|k| (k as f64, 1.0)).collect();
        assert!(fit_expansion(&s, 1, 2, &[0.0; 3]).is_err());
        let s = vec![(2.0, 1.0), (2.0, 1.0), (3.0, 1.0), (4.0, 1.0), (5.0, 1.0)];
        assert!(fit_expansion(&s, 1, 2, &[0.0; 5]).is_err());
        // a narrow window far from the origin cannot separate many powers
        let s: Vec<(f64, f64)> = (0..12).map(|i| (1000.0 + 0.01 * i as f64, 1.0)).collect();
        assert!(matches!(fit_expansion(&s, 2, 6, &[0.0; 12]), Err(CliError::IllConditioned { .. })));
    }
}
