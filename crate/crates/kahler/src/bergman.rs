//! Holomorphic sections of O(k), their Gram matrices, Bergman densities and
//! partition-function ratios for radial metrics.
//!
//! For a radial weight the monomials z^alpha are orthogonal and
//! <z^alpha, z^alpha> = (2 pi)^n alpha! / (n-1+p)! * I_p with p = |alpha| and
//! I_p = int_0^1 s^p (1-s)^(k-p) e^(-k phi) x^(n-1) m' ds.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::metric::{fs_volume, RadialKahlerMetric, ScalarField};
use crate::potential::{Profile, RadialPotential};
use crate::quadrature::{binomial, ln_factorials, RadialQuadrature};

/// dim H^0(CP^n, O(k)) = C(n+k, n).
pub fn dim_h0(n: usize, k: usize) -> Result<u64> {
    let mut c: u64 = 1;
    for j in 1..=n as u64 {
        c = c
            .checked_mul(k as u64 + j)
            .ok_or(Error::Overflow { n, k })?
            / j;
    }
    Ok(c)
}

/// Number of monomials of degree p in n variables.
pub fn degree_multiplicity(n: usize, p: usize) -> f64 {
    binomial(p + n - 1, n - 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GramMode {
    RadialDiagonal,
    FullHermitian,
}

#[derive(Clone, Debug)]
pub struct GramData {
    pub n: usize,
    pub k: usize,
    pub mode: GramMode,
    /// ln I_p, p = 0..=k
    pub log_radial: Vec<f64>,
    /// ln <z_1^p, z_1^p>, p = 0..=k
    pub log_norms: Vec<f64>,
    pub log_det: f64,
}

impl GramData {
    /// ln of the norm of a monomial with exponent `alpha`.
    pub fn log_norm(&self, alpha: &[usize]) -> f64 {
        let p: usize = alpha.iter().sum();
        let lf = ln_factorials(self.n + self.k);
        self.log_norms[p] + alpha.iter().map(|&a| lf[a]).sum::<f64>() - lf[p]
    }
}

/// Sum of ln(alpha!) over all alpha in N^n with |alpha| = p, for p = 0..=k.
fn sum_log_alpha_factorials(n: usize, k: usize) -> Vec<f64> {
    let lf = ln_factorials(k);
    let mut cur: Vec<f64> = lf.clone();
    for m in 2..=n {
        let mut next = vec![0.0; k + 1];
        for (p, nx) in next.iter_mut().enumerate() {
            for a in 0..=p {
                // alpha_m = a, remaining m-1 indices sum to p - a
                *nx += lf[a] * degree_multiplicity(m - 1, p - a) + cur[p - a];
            }
        }
        cur = next;
    }
    cur
}

/// Potential value and ln(x^(n-1) m') at s, checking positivity.
fn weight_terms(n: usize, prof: &Profile, node: usize, s0: f64) -> Result<(f64, f64)> {
    let s = Jet::<3>::var(s0);
    let phi = prof.eval(&s);
    let mu = 1.0 + (1.0 - s) * phi.d();
    let x = s * mu;
    let mp = x.d().value();
    let xv = x.value();
    for v in [mp, mu.value()] {
        if !(v > 0.0) {
            return Err(Error::NonPositiveMetric { node, s: s0, value: v });
        }
    }
    Ok((phi.value(), (n - 1) as f64 * xv.ln() + mp.ln()))
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// ln I_p for p = 0..=k.
pub fn log_radial_integrals(potential: &RadialPotential, k: usize, rule: &RadialQuadrature) -> Result<Vec<f64>> {
    rule.check_resolution(k)?;
    let n = potential.n;
    let mut base = Vec::with_capacity(rule.order());
    let mut ls = Vec::with_capacity(rule.order());
    let mut l1 = Vec::with_capacity(rule.order());
    for (i, (&s, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        let (phi, lvol) = weight_terms(n, &potential.profile, i, s)?;
        base.push(w.ln() - k as f64 * phi + lvol);
        ls.push(s.ln());
        l1.push((1.0 - s).ln());
    }
    let mut out = Vec::with_capacity(k + 1);
    let mut terms = vec![0.0; rule.order()];
    for p in 0..=k {
        for i in 0..rule.order() {
            terms[i] = base[i] + p as f64 * ls[i] + (k - p) as f64 * l1[i];
        }
        out.push(log_sum_exp(&terms));
    }
    Ok(out)
}

pub fn gram(metric: &RadialKahlerMetric, k: usize, rule: &RadialQuadrature) -> Result<GramData> {
    gram_for(&metric.potential, k, rule)
}

pub fn gram_for(potential: &RadialPotential, k: usize, rule: &RadialQuadrature) -> Result<GramData> {
    let n = potential.n;
    let log_radial = log_radial_integrals(potential, k, rule)?;
    let lf = ln_factorials(n + k);
    let ln2pi = (2.0 * PI).ln();
    let mut log_norms = Vec::with_capacity(k + 1);
    for (p, &li) in log_radial.iter().enumerate() {
        if !li.is_finite() {
            return Err(Error::NonPositiveNorm { degree: p });
        }
        log_norms.push(n as f64 * ln2pi + lf[p] - lf[n - 1 + p] + li);
    }
    let alpha_sums = sum_log_alpha_factorials(n, k);
    let mut log_det = 0.0;
    for p in 0..=k {
        let mult = degree_multiplicity(n, p);
        log_det += mult * (n as f64 * ln2pi - lf[n - 1 + p] + log_radial[p]) + alpha_sums[p];
    }
    Ok(GramData {
        n,
        k,
        mode: GramMode::RadialDiagonal,
        log_radial,
        log_norms,
        log_det,
    })
}

/// ln of the per-degree density coefficients (n-1+p)!/(p! I_p).
fn log_density_coeffs(g: &GramData) -> Vec<f64> {
    let lf = ln_factorials(g.n + g.k);
    (0..=g.k)
        .map(|p| lf[g.n - 1 + p] - lf[p] - g.log_radial[p])
        .collect()
}

/// Bergman density rho_k as a jet at s (scaled by (2 pi)^n).
pub fn density_jet<const N: usize>(prof: &Profile, g: &GramData, s0: f64) -> Jet<N> {
    let lc = log_density_coeffs(g);
    let k = g.k;
    let s = Jet::<N>::var(s0);
    let phi = prof.eval(&s);
    let ls = s.ln();
    let l1 = (1.0 - s).ln();
    let lead: Vec<f64> = (0..=k)
        .map(|p| lc[p] + p as f64 * ls.c[0] + (k - p) as f64 * l1.c[0])
        .collect();
    let m = lead.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (mut dls, mut dl1) = (ls, l1);
    dls.c[0] = 0.0;
    dl1.c[0] = 0.0;
    let mut sum = Jet::constant(0.0);
    for p in 0..=k {
        let w = (lead[p] - m).exp();
        if w < 1e-300 {
            continue;
        }
        sum = sum + (dls * p as f64 + dl1 * (k - p) as f64).exp() * w;
    }
    (sum.ln() + m - phi * k as f64).exp()
}

#[derive(Clone, Debug)]
pub struct BergmanDensity {
    pub k: usize,
    /// rho_k at the metric nodes (not scaled by (2 pi)^n)
    pub field: ScalarField,
}

pub fn bergman_density(metric: &RadialKahlerMetric, k: usize, g: &GramData) -> Result<BergmanDensity> {
    if g.k != k || g.n != metric.n() {
        return Err(Error::Invalid("Gram data does not match (n, k)".into()));
    }
    if g.mode != GramMode::RadialDiagonal {
        return Err(Error::Invalid("radial density needs radial Gram data".into()));
    }
    let scale = (2.0 * PI).powi(metric.n() as i32);
    let prof = &metric.potential.profile;
    let values = metric
        .nodes()
        .iter()
        .map(|&s| density_jet::<1>(prof, g, s).value() / scale)
        .collect();
    Ok(BergmanDensity {
        k,
        field: metric.field(values),
    })
}

/// log Z_k[phi] - log Z_k[ref].
pub fn log_partition_ratio(
    metric: &RadialKahlerMetric,
    reference: &RadialKahlerMetric,
    k: usize,
    rule: &RadialQuadrature,
) -> Result<f64> {
    if metric.n() != reference.n() {
        return Err(Error::DimensionMismatch(metric.n(), reference.n()));
    }
    log_partition_ratio_for(&metric.potential, &reference.potential, k, rule)
}

pub fn log_partition_ratio_for(
    phi: &RadialPotential,
    reference: &RadialPotential,
    k: usize,
    rule: &RadialQuadrature,
) -> Result<f64> {
    let a = log_radial_integrals(phi, k, rule)?;
    let b = log_radial_integrals(reference, k, rule)?;
    Ok((0..=k)
        .map(|p| degree_multiplicity(phi.n, p) * (a[p] - b[p]))
        .sum())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VariationCheck {
    pub fd: f64,
    pub formula: f64,
    pub defect: f64,
}

impl VariationCheck {
    pub fn new(fd: f64, formula: f64) -> Self {
        Self {
            fd,
            formula,
            defect: (fd - formula).abs(),
        }
    }

    pub fn relative_defect(&self) -> f64 {
        self.defect / (1.0 + self.formula.abs())
    }
}

pub const FD_STEP: f64 = 1e-4;

/// Directional derivative of log Z_k at phi along psi, by central
/// differences and by int psi (Delta rho_k - k rho_k) omega_phi^n / n!.
pub fn donaldson_variation_check(
    metric: &RadialKahlerMetric,
    k: usize,
    direction: &Profile,
    rule: &Arc<RadialQuadrature>,
) -> Result<VariationCheck> {
    let phi = &metric.potential;
    let plus = phi.along(direction, FD_STEP);
    let minus = phi.along(direction, -FD_STEP);
    let fd = (log_partition_ratio_for(&plus, phi, k, rule)? - log_partition_ratio_for(&minus, phi, k, rule)?)
        / (2.0 * FD_STEP);
    let g = gram_for(phi, k, rule)?;
    let scale = (2.0 * PI).powi(metric.n() as i32);
    let prof = &phi.profile;
    let formula = metric.integrate_with(|l| {
        let rho: Jet<3> = density_jet(prof, &g, l.s0());
        let psi = direction.value(l.s0());
        let lap = lap_low(l, &rho);
        psi * (lap - k as f64 * rho.value()) / scale
    });
    Ok(VariationCheck::new(fd, formula))
}

/// Half Laplacian of a short jet using the node data of `l`.
fn lap_low(l: &crate::metric::Local, f: &Jet<3>) -> f64 {
    let s = l.s0();
    let f1 = f.deriv(1);
    let f2 = f.deriv(2);
    let rad = ((1.0 - 2.0 * s) * f1 + s * (1.0 - s) * f2) / l.mp.value();
    let sph = if l.n > 1 {
        (l.n - 1) as f64 * (1.0 - s) * f1 / l.mu.value()
    } else {
        0.0
    };
    rad + sph
}

/// Integral of rho_k over the metric, which must equal d_k.
pub fn density_integral(metric: &RadialKahlerMetric, rho: &BergmanDensity) -> Result<f64> {
    metric.integrate(&rho.field)
}

/// (2 pi)^n rho_k on FS: (k+1)...(k+n).
pub fn fs_density_scaled(n: usize, k: usize) -> f64 {
    (1..=n).map(|j| (k + j) as f64).product()
}

/// Volume of CP^n, used for the Hilbert-map normalization.
pub fn volume(n: usize) -> f64 {
    fs_volume(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::build_metric;
    use crate::quadrature::radial_rule;

    fn rule(order: usize) -> Arc<RadialQuadrature> {
        Arc::new(radial_rule(order).unwrap())
    }

    #[test]
    fn dimensions() {
        assert_eq!(dim_h0(1, 5).unwrap(), 6);
        assert_eq!(dim_h0(2, 3).unwrap(), 10);
        assert_eq!(dim_h0(3, 2).unwrap(), 10);
        assert!(matches!(dim_h0(3, usize::MAX / 2), Err(Error::Overflow { .. })));
    }

    #[test]
    fn fs_cp1_norms_k2() {
        let g = gram_for(&RadialPotential::zero(1), 2, &rule(64)).unwrap();
        let want = [2.0 * PI / 3.0, PI / 3.0, 2.0 * PI / 3.0];
        for p in 0..3 {
            assert!((g.log_norms[p].exp() / want[p] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn fs_cp2_degree_one_norms_equal() {
        let g = gram_for(&RadialPotential::zero(2), 1, &rule(64)).unwrap();
        let a = g.log_norm(&[0, 0]);
        let b = g.log_norm(&[1, 0]);
        let c = g.log_norm(&[0, 1]);
        assert!((a - b).abs() < 1e-14 && (b - c).abs() < 1e-14);
    }

    #[test]
    fn log_det_is_sum_over_monomials() {
        // brute-force sum of ln norms over all alpha for n = 2
        let p = RadialPotential::poly(2, &[0.0, 0.1, -0.05]).unwrap();
        let k = 6;
        let g = gram_for(&p, k, &rule(64)).unwrap();
        let mut total = 0.0;
        for a in 0..=k {
            for b in 0..=k - a {
                total += g.log_norm(&[a, b]);
            }
        }
        assert!((total - g.log_det).abs() < 1e-11 * total.abs());
    }

    #[test]
    fn fs_density_is_exact() {
        for n in 1..=2 {
            let r = rule(96);
            let m = build_metric(&RadialPotential::zero(n), &r).unwrap();
            for k in [1, 5, 20] {
                let g = gram(&m, k, &r).unwrap();
                let rho = bergman_density(&m, k, &g).unwrap();
                let scale = (2.0 * PI).powi(n as i32);
                for v in &rho.field.values {
                    assert!((v * scale - fs_density_scaled(n, k)).abs() < 1e-10 * fs_density_scaled(n, k));
                }
                let total = density_integral(&m, &rho).unwrap();
                assert!((total - dim_h0(n, k).unwrap() as f64).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn constant_shift_scales_norms() {
        let r = rule(64);
        let p = RadialPotential::poly(1, &[0.0, 0.2]).unwrap();
        let a = gram_for(&p, 8, &r).unwrap();
        let b = gram_for(&p.shifted(0.3), 8, &r).unwrap();
        for q in 0..=8 {
            assert!((b.log_norms[q] - a.log_norms[q] + 8.0 * 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn resolution_policy_enforced() {
        let r = rule(40);
        assert!(matches!(
            gram_for(&RadialPotential::zero(1), 10, &r),
            Err(Error::ResolutionTooLow(_))
        ));
    }
}
