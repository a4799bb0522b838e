//! General (not necessarily radial) metrics on CP^1 and their full Hermitian
//! Gram matrices.
//!
//! A potential is a radial profile plus a finite sum of spherical harmonics
//! P_l^m(1 - 2s) (a cos(m theta) + b sin(m theta)). On CP^1 the metric is
//! omega_phi = (1 + Delta phi) omega and Delta acts on degree-l harmonics by
//! -l(l+1).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::potential::Profile;
use crate::quadrature::{assoc_legendre, sphere_grid_sized, SphereGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub l: usize,
    pub m: usize,
    pub cos: f64,
    pub sin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpherePotential {
    pub radial: Profile,
    pub harmonics: Vec<Harmonic>,
}

impl SpherePotential {
    pub fn radial(p: Profile) -> Self {
        Self {
            radial: p,
            harmonics: vec![],
        }
    }

    /// (phi, Delta phi) at (s, theta).
    pub fn eval(&self, s0: f64, theta: f64) -> (f64, f64) {
        let s = Jet::<3>::var(s0);
        let r = self.radial.eval(&s);
        let lap_r = (1.0 - 2.0 * s0) * r.deriv(1) + s0 * (1.0 - s0) * r.deriv(2);
        let mut phi = r.value();
        let mut lap = lap_r;
        for h in &self.harmonics {
            let y = assoc_legendre(h.l, h.m, 1.0 - 2.0 * s0)
                * (h.cos * (h.m as f64 * theta).cos() + h.sin * (h.m as f64 * theta).sin());
            phi += y;
            lap -= (h.l * (h.l + 1)) as f64 * y;
        }
        (phi, lap)
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self {
            radial: self.radial.shifted(c),
            harmonics: self.harmonics.clone(),
        }
    }
}

/// Grid adequate for degree-k Gram entries.
pub fn gram_grid(k: usize) -> SphereGrid {
    sphere_grid_sized(2 * k + 32, 2 * k + 64)
}

#[derive(Clone, Debug)]
pub struct FullGram {
    pub k: usize,
    pub matrix: DMatrix<Complex64>,
    pub log_det: f64,
    /// e^(-k phi) (1 + Delta phi) on the grid
    weight: Vec<f64>,
}

fn weights(pot: &SpherePotential, grid: &SphereGrid, k: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(grid.len());
    for (i, &s) in grid.s.iter().enumerate() {
        for j in 0..grid.n_phi {
            let (phi, lap) = pot.eval(s, grid.phi(j));
            let density = 1.0 + lap;
            if !(density > 0.0) {
                return Err(Error::NonPositiveMetric {
                    node: i,
                    s,
                    value: density,
                });
            }
            out.push((-(k as f64) * phi).exp() * density);
        }
    }
    Ok(out)
}

/// <z^a, z^b> = int z^a conj(z^b) (1+|z|^2)^(-k) e^(-k phi) omega_phi.
pub fn gram_full(pot: &SpherePotential, k: usize, grid: &SphereGrid) -> Result<FullGram> {
    let w = weights(pot, grid, k)?;
    let d = k + 1;
    let mut g = DMatrix::<Complex64>::zeros(d, d);
    let np = grid.n_phi;
    // azimuthal sums per radial node: sum_j w e^{i q theta_j} for q = a - b
    for (i, &s) in grid.s.iter().enumerate() {
        let wi = grid.weight(i);
        let row = &w[i * np..(i + 1) * np];
        let mut fourier = vec![Complex64::new(0.0, 0.0); 2 * k + 1];
        for (qi, f) in fourier.iter_mut().enumerate() {
            let q = qi as f64 - k as f64;
            *f = row
                .iter()
                .enumerate()
                .map(|(j, &v)| Complex64::from_polar(v, q * grid.phi(j)))
                .sum();
        }
        let ls = s.ln();
        let l1 = (1.0 - s).ln();
        for a in 0..d {
            for b in 0..d {
                let h = 0.5 * (a + b) as f64;
                let radial = (h * ls + (k as f64 - h) * l1).exp();
                g[(a, b)] += fourier[a + k - b] * (wi * radial);
            }
        }
    }
    // Hermitian by construction up to rounding
    let g = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
    let log_det = log_det_hermitian(&g)?;
    Ok(FullGram {
        k,
        matrix: g,
        log_det,
        weight: w,
    })
}

/// ln det of a Hermitian positive definite matrix via diagonal scaling and
/// Cholesky.
pub fn log_det_hermitian(g: &DMatrix<Complex64>) -> Result<f64> {
    let d = g.nrows();
    let diag: Vec<f64> = (0..d).map(|i| g[(i, i)].re).collect();
    if diag.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::SingularGram);
    }
    let scale: Vec<f64> = diag.iter().map(|x| 1.0 / x.sqrt()).collect();
    let c = DMatrix::<Complex64>::from_fn(d, d, |i, j| g[(i, j)] * (scale[i] * scale[j]));
    let chol = c.cholesky().ok_or(Error::SingularGram)?;
    let l = chol.l();
    let ld: f64 = (0..d).map(|i| 2.0 * l[(i, i)].re.ln()).sum();
    Ok(ld + diag.iter().map(|x| x.ln()).sum::<f64>())
}

pub fn log_partition_ratio_full(
    pot: &SpherePotential,
    reference: &SpherePotential,
    k: usize,
    grid: &SphereGrid,
) -> Result<f64> {
    Ok(gram_full(pot, k, grid)?.log_det - gram_full(reference, k, grid)?.log_det)
}

/// Bergman density rho_k on the grid.
pub fn density_full(pot: &SpherePotential, g: &FullGram, grid: &SphereGrid) -> Result<Vec<f64>> {
    let k = g.k;
    let d = k + 1;
    // norm matrix H = G^T is Hermitian positive definite
    let h = g.matrix.transpose();
    let chol = h.cholesky().ok_or(Error::SingularGram)?;
    let mut out = Vec::with_capacity(grid.len());
    for &s in &grid.s {
        for j in 0..grid.n_phi {
            let theta = grid.phi(j);
            let (phi, _) = pot.eval(s, theta);
            // z^a (1+|z|^2)^(-k/2) = s^(a/2) (1-s)^((k-a)/2) e^{i a theta}
            let v = nalgebra::DVector::<Complex64>::from_fn(d, |a, _| {
                let r = (0.5 * a as f64 * s.ln() + 0.5 * (k - a) as f64 * (1.0 - s).ln()).exp();
                Complex64::from_polar(r, a as f64 * theta)
            });
            let y = chol.solve(&v.conjugate());
            let rho: Complex64 = v.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
            out.push(rho.re * (-(k as f64) * phi).exp());
        }
    }
    Ok(out)
}

/// Integral of a grid field against omega_phi.
pub fn integrate_metric(pot: &SpherePotential, grid: &SphereGrid, field: &[f64]) -> Result<f64> {
    let vol: Vec<f64> = (0..grid.len())
        .map(|idx| {
            let (i, j) = (idx / grid.n_phi, idx % grid.n_phi);
            1.0 + pot.eval(grid.s[i], grid.phi(j)).1
        })
        .collect();
    let prod: Vec<f64> = field.iter().zip(&vol).map(|(a, b)| a * b).collect();
    crate::quadrature::integrate_sphere(grid, &prod)
}

impl FullGram {
    /// Total weighted mass int e^(-k phi) omega_phi, a cheap sanity value.
    pub fn weight_mass(&self, grid: &SphereGrid) -> f64 {
        crate::quadrature::integrate_sphere(grid, &self.weight).unwrap_or(f64::NAN)
    }
}

/// 2 pi: volume of CP^1.
pub const CP1_VOLUME: f64 = 2.0 * PI;
