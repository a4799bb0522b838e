//! Hilbert and Fubini-Study maps between radial potentials and diagonal
//! Hermitian forms on H^0(CP^n, O(k)), the T-iteration toward balanced
//! metrics, and the finite-dimensional approximation S_{L,k} of S_2.
//!
//! A diagonal form is stored per degree: the monomial z^alpha with
//! |alpha| = p has squared norm H_p alpha!/p!, so that
//! FS_k(H) = (1/k) ln sum_p s^p (1-s)^(k-p) / H_p.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bergman::{degree_multiplicity, dim_h0, gram_for, log_partition_ratio_for};
use crate::error::{Error, Result};
use crate::functionals::s_j;
use crate::metric::{build_metric, fs_volume};
use crate::potential::{Profile, RadialPotential};
use crate::quadrature::{ChebProfile, RadialQuadrature};

pub const DEFAULT_MAX_ITER: usize = 500;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const PROJECTION_TAIL: f64 = 1e-9;
const PROJECTION_NODES: usize = 96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisMetric {
    pub n: usize,
    pub k: usize,
    /// ln H_p, p = 0..=k
    pub log_entries: Vec<f64>,
}

impl BasisMetric {
    pub fn new(n: usize, k: usize, log_entries: Vec<f64>) -> Result<Self> {
        if log_entries.len() != k + 1 || log_entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid(format!("basis metric needs {} finite log entries", k + 1)));
        }
        Ok(Self { n, k, log_entries })
    }

    pub fn entries(&self) -> Vec<f64> {
        self.log_entries.iter().map(|x| x.exp()).collect()
    }

    /// lambda * H
    pub fn scaled(&self, lambda: f64) -> Self {
        let l = lambda.ln();
        Self {
            n: self.n,
            k: self.k,
            log_entries: self.log_entries.iter().map(|x| x + l).collect(),
        }
    }
}

fn ln_dk_over_v(n: usize, k: usize) -> Result<f64> {
    Ok((dim_h0(n, k)? as f64).ln() - fs_volume(n).ln())
}

/// Hilb_k: squared norms (d_k/V) int |S|^2 e^(-k phi) omega_phi^n/n!.
pub fn hilb_map(potential: &RadialPotential, k: usize, rule: &RadialQuadrature) -> Result<BasisMetric> {
    if k == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    let g = gram_for(potential, k, rule)?;
    let c = ln_dk_over_v(potential.n, k)?;
    BasisMetric::new(potential.n, k, g.log_norms.iter().map(|x| x + c).collect())
}

/// FS_k: the potential (1/k) ln sum |S_i|^2 over an H-orthonormal basis.
pub fn fs_map(h: &BasisMetric) -> RadialPotential {
    RadialPotential {
        n: h.n,
        profile: Profile::Bergman {
            k: h.k,
            log_weights: h.log_entries.iter().map(|x| -x).collect(),
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub potential: RadialPotential,
    /// largest discarded Chebyshev coefficient relative to the profile scale
    pub tail: f64,
}

/// Projects a profile to a polynomial in s of the given degree.
pub fn project(potential: &RadialPotential, degree: usize, threshold: f64) -> Result<Projection> {
    let cheb = ChebProfile::from_fn(PROJECTION_NODES.max(degree + 16), |s| potential.profile.value(s));
    let scale = cheb.coeffs.iter().fold(1.0f64, |a, c| a.max(c.abs()));
    let tail = cheb.coeffs[degree + 1..].iter().fold(0.0f64, |a, c| a.max(c.abs())) / scale;
    if tail > threshold {
        return Err(Error::ProjectionTail { degree, tail });
    }
    // T_j(2s - 1) in the monomial basis
    let mut out = vec![0.0; degree + 1];
    let mut prev = vec![1.0];
    let mut cur = vec![-1.0, 2.0];
    for (j, &c) in cheb.coeffs[..=degree].iter().enumerate() {
        let t = match j {
            0 => &prev,
            1 => &cur,
            _ => {
                let mut next = vec![0.0; j + 1];
                for (i, &a) in cur.iter().enumerate() {
                    next[i] -= 2.0 * a;
                    next[i + 1] += 4.0 * a;
                }
                for (i, &a) in prev.iter().enumerate() {
                    next[i] -= a;
                }
                prev = std::mem::replace(&mut cur, next);
                &cur
            }
        };
        for (o, a) in out.iter_mut().zip(t) {
            *o += c * a;
        }
    }
    Ok(Projection {
        potential: RadialPotential::with_max_degree(potential.n, Profile::poly(&out), degree)?,
        tail,
    })
}

/// sup |(V/d_k) rho_k - 1| over the rule nodes and both poles, using
/// (V/d_k) rho_k = exp(k (FS_k(Hilb_k phi) - phi)).
pub fn balance_defect(potential: &RadialPotential, k: usize, rule: &RadialQuadrature) -> Result<f64> {
    let back = fs_map(&hilb_map(potential, k, rule)?);
    Ok(sample_points(rule)
        .iter()
        .map(|&s| (k as f64 * (back.profile.value(s) - potential.profile.value(s))).exp_m1().abs())
        .fold(0.0, f64::max))
}

fn sample_points(rule: &RadialQuadrature) -> Vec<f64> {
    let mut pts = Vec::with_capacity(rule.order() + 2);
    pts.push(0.0);
    pts.extend_from_slice(&rule.nodes);
    pts.push(1.0);
    pts
}

/// ln sum_p s^p (1-s)^(k-p) e^(w_p), with the pole limits.
fn log_section_sum(k: usize, w: &[f64], s: f64) -> f64 {
    if s == 0.0 {
        return w[0];
    }
    if s == 1.0 {
        return w[k];
    }
    let (ls, l1) = (s.ln(), (1.0 - s).ln());
    let terms: Vec<f64> = (0..=k).map(|p| w[p] + p as f64 * ls + (k - p) as f64 * l1).collect();
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Balance defect of FS_k(h) from h and next = Hilb_k(FS_k(h)):
/// (V/d_k) rho_k = exp(k (FS_k(next) - FS_k(h))).
fn defect_from_step(h: &BasisMetric, next: &BasisMetric, rule: &RadialQuadrature) -> f64 {
    let a: Vec<f64> = h.log_entries.iter().map(|x| -x).collect();
    let b: Vec<f64> = next.log_entries.iter().map(|x| -x).collect();
    sample_points(rule)
        .iter()
        .map(|&s| (log_section_sum(h.k, &b, s) - log_section_sum(h.k, &a, s)).exp_m1().abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Acceleration {
    /// H_(i+1) = Hilb_k(FS_k(H_i))
    None,
    /// Anderson mixing of the last `depth` steps on ln H; still one
    /// evaluation of Hilb_k o FS_k per iteration
    Anderson { depth: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub acceleration: Acceleration,
}

impl Default for IterationOptions {
    fn default() -> Self {
        Self {
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            acceleration: Acceleration::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    /// balance defect of FS_k(H_i), i = 0, 1, ...
    pub defects: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalancedResult {
    pub potential: RadialPotential,
    pub basis: BasisMetric,
    pub trace: IterationTrace,
}

/// T-iteration H -> Hilb_k(FS_k(H)) started from Hilb_k(initial).
pub fn t_iteration(
    initial: &RadialPotential,
    k: usize,
    rule: &RadialQuadrature,
    opts: IterationOptions,
) -> Result<BalancedResult> {
    t_iteration_from(hilb_map(initial, k, rule)?, rule, opts)
}

pub fn t_iteration_from(start: BasisMetric, rule: &RadialQuadrature, opts: IterationOptions) -> Result<BalancedResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::Invalid("tolerance must be positive".into()));
    }
    let depth = match opts.acceleration {
        Acceleration::None => 0,
        Acceleration::Anderson { depth } => depth,
    };
    let (n, k) = (start.n, start.k);
    let mut h = start;
    let mut defects = Vec::new();
    // (x_i, g(x_i) - x_i) history on ln H
    let mut hist: Vec<(DVector<f64>, DVector<f64>)> = Vec::new();
    for i in 0..=opts.max_iter {
        let next = hilb_map(&fs_map(&h), k, rule)?;
        let d = defect_from_step(&h, &next, rule);
        defects.push(d);
        if d <= opts.tol {
            return Ok(BalancedResult {
                potential: fs_map(&h),
                basis: h,
                trace: IterationTrace {
                    defects,
                    iterations: i,
                    converged: true,
                },
            });
        }
        if depth == 0 {
            h = next;
            continue;
        }
        let x = DVector::from_vec(h.log_entries.clone());
        let g = DVector::from_vec(next.log_entries);
        let f = &g - &x;
        hist.push((x, f.clone()));
        if hist.len() > depth + 1 {
            hist.remove(0);
        }
        h = BasisMetric::new(n, k, anderson_step(&hist, &g).as_slice().to_vec())?;
    }
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        last_defect: *defects.last().unwrap_or(&f64::NAN),
        defects,
    })
}

/// x + f - (dX + dF) gamma with gamma minimizing |f - dF gamma|.
fn anderson_step(hist: &[(DVector<f64>, DVector<f64>)], g: &DVector<f64>) -> DVector<f64> {
    let m = hist.len() - 1;
    if m == 0 {
        return g.clone();
    }
    let (_, f) = &hist[m];
    let dim = f.len();
    let df = DMatrix::from_fn(dim, m, |r, c| hist[c + 1].1[r] - hist[c].1[r]);
    let dg = DMatrix::from_fn(dim, m, |r, c| {
        (hist[c + 1].0[r] + hist[c + 1].1[r]) - (hist[c].0[r] + hist[c].1[r])
    });
    match df.svd(true, true).solve(f, 1e-12) {
        Ok(gamma) if gamma.iter().all(|v| v.is_finite()) => g - dg * gamma,
        _ => g.clone(),
    }
}

/// sup |FS_k(Hilb_k(phi)) - phi| over the rule nodes and both poles.
pub fn round_trip_distance(potential: &RadialPotential, k: usize, rule: &RadialQuadrature) -> Result<f64> {
    let back = fs_map(&hilb_map(potential, k, rule)?);
    Ok(sample_points(rule)
        .iter()
        .map(|&s| (back.profile.value(s) - potential.profile.value(s)).abs())
        .fold(0.0, f64::max))
}

/// sup |phi| after shifting phi so that S_0[phi, 0] = 0.
pub fn distance_to_reference(potential: &RadialPotential, rule: &Arc<RadialQuadrature>) -> Result<f64> {
    let p = normalize_potential(potential, rule)?;
    Ok(sample_points(rule)
        .iter()
        .map(|&s| p.profile.value(s).abs())
        .fold(0.0, f64::max))
}

/// Shift by the unique constant that makes S_0[phi, 0] vanish.
pub fn normalize_potential(potential: &RadialPotential, rule: &Arc<RadialQuadrature>) -> Result<RadialPotential> {
    let m = build_metric(potential, rule)?;
    let r = build_metric(&RadialPotential::zero(potential.n), rule)?;
    // S_0[phi + c, 0] = S_0[phi, 0] - c
    let c = s_j(&m, &r, 0)?.value;
    Ok(potential.shifted(c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeterminantRoute {
    /// ln det_omega(Hilb_k phi) - d_k ln(d_k/V) from the basis entries
    BasisEntries,
    /// ln Z_k[phi] - ln Z_k[0] from the full Gram determinants
    GramDeterminant,
}

/// ln det_omega(H) - d_k ln(d_k/V) for H = Hilb_k(phi).
pub fn log_det_term(potential: &RadialPotential, k: usize, rule: &RadialQuadrature, route: DeterminantRoute) -> Result<f64> {
    let n = potential.n;
    match route {
        DeterminantRoute::BasisEntries => {
            let h = hilb_map(potential, k, rule)?;
            let fs = gram_for(&RadialPotential::zero(n), k, rule)?;
            let ld: f64 = (0..=k)
                .map(|p| degree_multiplicity(n, p) * (h.log_entries[p] - fs.log_norms[p]))
                .sum();
            Ok(ld - dim_h0(n, k)? as f64 * ln_dk_over_v(n, k)?)
        }
        DeterminantRoute::GramDeterminant => {
            let a = gram_for(potential, k, rule)?;
            let b = gram_for(&RadialPotential::zero(n), k, rule)?;
            Ok(a.log_det - b.log_det)
        }
    }
}

/// S_{L,k} at H = Hilb_k(phi), with phi first normalized so that
/// S_0[phi, 0] = 0:
/// k^(1-n) ((2 pi)^n (ln det_omega H - d_k ln(d_k/V)) - k^n S_1[FS_k(H), 0]).
pub fn liouville_approx(potential: &RadialPotential, k: usize, rule: &Arc<RadialQuadrature>) -> Result<f64> {
    liouville_approx_route(potential, k, rule, DeterminantRoute::BasisEntries)
}

pub fn liouville_approx_route(
    potential: &RadialPotential,
    k: usize,
    rule: &Arc<RadialQuadrature>,
    route: DeterminantRoute,
) -> Result<f64> {
    let n = potential.n;
    let phi = normalize_potential(potential, rule)?;
    let det = log_det_term(&phi, k, rule, route)?;
    let fs = fs_map(&hilb_map(&phi, k, rule)?);
    let s1 = s_j(&build_metric(&fs, rule)?, &build_metric(&RadialPotential::zero(n), rule)?, 1)?.value;
    let kf = k as f64;
    let two_pi_n = (2.0 * std::f64::consts::PI).powi(n as i32);
    Ok(kf.powi(1 - n as i32) * (two_pi_n * det - kf.powi(n as i32) * s1))
}

/// The same quantity with the determinant replaced by ln Z_k[phi]/Z_k[0]
/// from the per-degree radial integrals.
pub fn liouville_from_partition(potential: &RadialPotential, k: usize, rule: &Arc<RadialQuadrature>) -> Result<f64> {
    let n = potential.n;
    let phi = normalize_potential(potential, rule)?;
    let lz = log_partition_ratio_for(&phi, &RadialPotential::zero(n), k, rule)?;
    let fs = fs_map(&hilb_map(&phi, k, rule)?);
    let s1 = s_j(&build_metric(&fs, rule)?, &build_metric(&RadialPotential::zero(n), rule)?, 1)?.value;
    let kf = k as f64;
    let two_pi_n = (2.0 * std::f64::consts::PI).powi(n as i32);
    Ok(kf.powi(1 - n as i32) * (two_pi_n * lz - kf.powi(n as i32) * s1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bergman::bergman_density;
    use crate::quadrature::{binomial, radial_rule};

    fn rule(order: usize) -> Arc<RadialQuadrature> {
        Arc::new(radial_rule(order).unwrap())
    }

    #[test]
    fn hilb_of_fs_on_cp1_k1() {
        let h = hilb_map(&RadialPotential::zero(1), 1, &rule(64)).unwrap();
        for e in h.entries() {
            assert!((e - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn hilb_of_fs_is_inverse_binomial() {
        for n in 1..=3 {
            let k = 9;
            let h = hilb_map(&RadialPotential::zero(n), k, &rule(64)).unwrap();
            for (p, e) in h.entries().iter().enumerate() {
                assert!((e * binomial(k, p) - 1.0).abs() < 1e-12, "n={n} p={p}");
            }
            let fs = fs_map(&h);
            for s in [0.0, 0.2, 0.7, 1.0] {
                assert!(fs.profile.value(s).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn shift_and_scaling_gauges() {
        let r = rule(64);
        let p = RadialPotential::poly(2, &[0.0, 0.1, -0.05]).unwrap();
        let k = 7;
        let c = 0.3;
        let a = hilb_map(&p, k, &r).unwrap();
        let b = hilb_map(&p.shifted(c), k, &r).unwrap();
        for (x, y) in a.log_entries.iter().zip(&b.log_entries) {
            assert!((y - x + k as f64 * c).abs() < 1e-12);
        }
        let l = 2.5f64;
        let f1 = fs_map(&a);
        let f2 = fs_map(&a.scaled(l));
        for s in [0.0, 0.4, 1.0] {
            assert!((f1.profile.value(s) - f2.profile.value(s) - l.ln() / k as f64).abs() < 1e-13);
        }
    }

    #[test]
    fn round_trip_matches_log_density() {
        // FS_k(Hilb_k phi) - phi = (1/k) ln((V/d_k) rho_k)
        let r = rule(64);
        let p = RadialPotential::poly(2, &[0.0, 0.1, -0.05, 0.02]).unwrap();
        let k = 8;
        let m = build_metric(&p, &r).unwrap();
        let rho = bergman_density(&m, k, &gram_for(&p, k, &r).unwrap()).unwrap();
        let back = fs_map(&hilb_map(&p, k, &r).unwrap());
        let dv = dim_h0(2, k).unwrap() as f64 / fs_volume(2);
        for (i, &s) in r.nodes.iter().enumerate() {
            let want = (rho.field.values[i] / dv).ln() / k as f64;
            let got = back.profile.value(s) - p.profile.value(s);
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn fs_start_is_balanced_immediately() {
        let r = rule(96);
        for n in 1..=2 {
            let res = t_iteration(&RadialPotential::zero(n), 12, &r, IterationOptions::default()).unwrap();
            assert_eq!(res.trace.iterations, 0);
            assert!(res.trace.defects[0] <= 1e-12);
        }
    }

    #[test]
    fn step_defect_agrees_with_density_defect() {
        let r = rule(64);
        let p = RadialPotential::poly(1, &[0.0, 0.2, -0.1]).unwrap();
        let k = 6;
        let h = hilb_map(&p, k, &r).unwrap();
        let next = hilb_map(&fs_map(&h), k, &r).unwrap();
        let a = defect_from_step(&h, &next, &r);
        let b = balance_defect(&fs_map(&h), k, &r).unwrap();
        assert!(a > 1e-4);
        assert!((a - b).abs() < 1e-12 * (1.0 + a), "{a} {b}");
    }

    #[test]
    fn not_converged_carries_the_trace() {
        let r = rule(64);
        let p = RadialPotential::poly(1, &[0.0, 0.2, -0.1]).unwrap();
        let e = t_iteration(&p, 10, &r, IterationOptions { max_iter: 3, tol: 1e-14, ..Default::default() }).unwrap_err();
        match e {
            Error::NotConverged { iterations, defects, .. } => {
                assert_eq!(iterations, 3);
                assert_eq!(defects.len(), 4);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn projection_recovers_polynomials() {
        let c = [0.1, -0.3, 0.25, 0.05, -0.02];
        let p = RadialPotential::poly(1, &c).unwrap();
        let q = project(&p, 8, PROJECTION_TAIL).unwrap();
        assert!(q.tail < 1e-14);
        let Profile::Poly { coeffs } = &q.potential.profile else { panic!() };
        for (i, a) in coeffs.iter().enumerate() {
            assert!((a - c.get(i).copied().unwrap_or(0.0)).abs() < 1e-12, "{i}");
        }
        let h = hilb_map(&RadialPotential::poly(1, &[0.0, 1.5, -1.0]).unwrap(), 10, &rule(64)).unwrap();
        assert!(matches!(project(&fs_map(&h), 2, PROJECTION_TAIL), Err(Error::ProjectionTail { .. })));
    }

    #[test]
    fn normalization_of_constants_and_idempotence() {
        let r = rule(64);
        let c = RadialPotential::poly(2, &[0.7]).unwrap();
        let z = normalize_potential(&c, &r).unwrap();
        assert!(z.profile.value(0.3).abs() < 1e-12);
        let p = RadialPotential::poly(2, &[0.2, 0.1, -0.3]).unwrap();
        let once = normalize_potential(&p, &r).unwrap();
        let twice = normalize_potential(&once, &r).unwrap();
        assert!((once.profile.value(0.5) - twice.profile.value(0.5)).abs() < 1e-13);
        let m = build_metric(&once, &r).unwrap();
        let s0 = s_j(&m, &build_metric(&RadialPotential::zero(2), &r).unwrap(), 0).unwrap().value;
        assert!(s0.abs() <= 1e-12);
    }

    #[test]
    fn liouville_vanishes_at_fs() {
        let r = rule(64);
        for n in 1..=2 {
            let v = liouville_approx(&RadialPotential::zero(n), 10, &r).unwrap();
            assert!(v.abs() < 1e-10, "{v}");
        }
    }
}
