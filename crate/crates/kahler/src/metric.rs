//! Radial Kahler metrics on CP^n in the class of O(1) and their curvature.
//!
//! With s = |z|^2/(1+|z|^2) and potential phi(s), write mu = 1 + (1-s) phi'
//! and x = s mu (the moment coordinate). Relative to the Fubini-Study frame
//! the metric has eigenvalue m' = dx/ds in the radial direction and mu on
//! the n-1 spherical directions. All curvature scalars are rational in the
//! s-derivatives of phi, with the apparent singularities at s = 0, 1 removed
//! by hand, so they are evaluated on Taylor jets at each node.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::forms::{CurvatureTensor, DForm};
use crate::jet::Jet;
use crate::potential::{Profile, RadialPotential};
use crate::quadrature::{ChebProfile, RadialQuadrature};

pub const JET_ORDER: usize = 12;
pub type J = Jet<JET_ORDER>;

/// Knobs that fix numerical conventions. `a2_laplacian` is the weight of
/// Delta S in a_2; it is exposed so that tests can perturb it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conventions {
    pub a2_laplacian: f64,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            a2_laplacian: 1.0 / 3.0,
        }
    }
}

/// Pointwise radial data at one value of s, as jets in s.
#[derive(Clone, Debug)]
pub struct Local {
    pub n: usize,
    pub s: J,
    pub phi: J,
    pub mu: J,
    /// dx/ds, the radial eigenvalue
    pub mp: J,
    pub x: J,
    /// d/ds log m'
    pub lsd: J,
    pub a: J,
    pub b: J,
    pub d: J,
    pub ric_rad: J,
    pub ric_sph: J,
    pub scal: J,
}

impl Local {
    pub fn new(n: usize, profile: &Profile, s0: f64) -> Self {
        let s = J::var(s0);
        let phi = profile.eval(&s);
        let dphi = phi.d();
        let one_minus = 1.0 - s;
        let mu = 1.0 + one_minus * dphi;
        let x = s * mu;
        let mp = x.d();
        let lsd = mp.d() / mp;
        let dmu = mu.d();
        // d/dx of u'' = s(1-s) m'
        let phix = (1.0 - s * 2.0) + s * one_minus * lsd;
        let a = -(phix.d() / mp);
        let mu2 = mu * mu;
        let b = (mu + one_minus * dmu - mu * one_minus * lsd) / mu2;
        let d = (mu - one_minus * dmu) / mu2;
        let nm1 = (n - 1) as f64;
        let ric_rad = a + b * nm1;
        let ric_sph = b + d * n as f64;
        let scal = a + b * (2.0 * nm1) + d * (n as f64 * nm1);
        Self {
            n,
            s,
            phi,
            mu,
            mp,
            x,
            lsd,
            a,
            b,
            d,
            ric_rad,
            ric_sph,
            scal,
        }
    }

    pub fn s0(&self) -> f64 {
        self.s.value()
    }

    /// Half Laplacian g^{j kbar} d_j d_kbar f of a radial function.
    pub fn lap(&self, f: &J) -> J {
        let s = self.s;
        let df = f.d();
        let rad = (s * (1.0 - s) * df).d() / self.mp;
        if self.n == 1 {
            return rad;
        }
        rad + (1.0 - s) * df / self.mu * (self.n - 1) as f64
    }

    /// Eigenvalues of i ddbar f relative to the metric (radial, spherical).
    pub fn ddbar(&self, f: &J) -> (J, J) {
        let s = self.s;
        let df = f.d();
        ((s * (1.0 - s) * df).d() / self.mp, (1.0 - s) * df / self.mu)
    }

    /// |d f|^2 in the metric (the (1,0) part).
    pub fn grad_sq(&self, f: &J) -> J {
        let df = f.d();
        self.s * (1.0 - self.s) * df * df / self.mp
    }

    /// g-inner product of two diagonal (1,1) forms given by eigenvalues.
    pub fn inner(&self, p: (J, J), q: (J, J)) -> J {
        p.0 * q.0 + p.1 * q.1 * (self.n - 1) as f64
    }

    pub fn riem_sq(&self) -> J {
        let n = self.n as f64;
        self.a * self.a + self.b * self.b * (4.0 * (n - 1.0)) + self.d * self.d * (2.0 * n * (n - 1.0))
    }

    pub fn ric_sq(&self) -> J {
        self.ric_rad * self.ric_rad + self.ric_sph * self.ric_sph * (self.n - 1) as f64
    }

    /// |R|^2 - 4|Ric|^2 + 3S^2
    pub fn quad(&self) -> J {
        self.riem_sq() - self.ric_sq() * 4.0 + self.scal * self.scal * 3.0
    }

    pub fn tensor(&self) -> CurvatureTensor {
        CurvatureTensor::radial(self.n, self.a.value(), self.b.value(), self.d.value())
    }

    /// The metric form in the Fubini-Study frame.
    pub fn omega(&self) -> DForm {
        DForm::one_one(self.mp.value(), self.mu.value())
    }

    /// Convert metric-frame eigenvalues of a (1,1) form to the FS frame.
    pub fn to_fs(&self, rad: f64, sph: f64) -> DForm {
        DForm::one_one(rad * self.mp.value(), sph * self.mu.value())
    }

    /// Ricci form in the Fubini-Study frame.
    pub fn ric_form(&self) -> DForm {
        self.to_fs(self.ric_rad.value(), self.ric_sph.value())
    }

    /// Volume density: omega_phi^n/n! = c_n x^(n-1) m' ds dtheta.
    pub fn vol(&self) -> f64 {
        self.x.value().powi(self.n as i32 - 1) * self.mp.value()
    }
}

/// (2 pi)^n / (n-1)!: the fibre factor turning s-integrals into integrals
/// over CP^n.
pub fn fibre_factor(n: usize) -> f64 {
    let f: f64 = (1..n).map(|x| x as f64).product();
    (2.0 * PI).powi(n as i32) / f
}

/// Exact volume (2 pi)^n / n!.
pub fn fs_volume(n: usize) -> f64 {
    fibre_factor(n) / n as f64
}

/// Elementary symmetric polynomial e_j(1, ..., n).
pub fn elementary_symmetric(n: usize, j: usize) -> f64 {
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for x in 1..=n {
        for k in (1..=x).rev() {
            e[k] += e[k - 1] * x as f64;
        }
    }
    e.get(j).copied().unwrap_or(0.0)
}

/// Exact value of the integral of a_j over CP^n: the coefficient of k^(n-j)
/// in (2 pi)^n dim H^0(O(k)).
pub fn exact_coefficient_integral(n: usize, j: usize) -> f64 {
    fs_volume(n) * elementary_symmetric(n, j)
}

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Clone, Debug)]
pub struct RadialKahlerMetric {
    pub potential: RadialPotential,
    pub rule: Arc<RadialQuadrature>,
    pub conv: Conventions,
    pub reference: bool,
    pub locals: Vec<Local>,
    id: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
    pub metric_id: u64,
}

impl ScalarField {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

#[derive(Clone, Debug)]
pub struct CurvatureData {
    pub scalar: ScalarField,
    pub ric_rad: ScalarField,
    pub ric_sph: ScalarField,
    pub riem_norm_sq: ScalarField,
    pub ric_norm_sq: ScalarField,
    pub lap_scalar: ScalarField,
}

#[derive(Clone, Debug)]
pub struct CurvatureVariation {
    /// metric-frame eigenvalues of the variation of the Ricci form
    pub ric_rad: ScalarField,
    pub ric_sph: ScalarField,
    pub scalar: ScalarField,
    pub lap_scalar: ScalarField,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientAverage {
    pub volume_average: f64,
    pub exact: f64,
    pub discrepancy: f64,
}

/// Sample count for the Chebyshev tail diagnostic.
const TAIL_SAMPLES: usize = 96;
/// Offsets from the endpoints where positivity is also checked.
const EDGE: f64 = 1e-9;

pub fn build_metric(potential: &RadialPotential, rule: &Arc<RadialQuadrature>) -> Result<RadialKahlerMetric> {
    build_metric_with(potential, rule, Conventions::default())
}

pub fn build_metric_with(
    potential: &RadialPotential,
    rule: &Arc<RadialQuadrature>,
    conv: Conventions,
) -> Result<RadialKahlerMetric> {
    let n = potential.n;
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidDimension(n));
    }
    if let Some(deg) = potential.profile.degree() {
        if 2 * deg + 8 > rule.order() {
            return Err(Error::ResolutionTooLow(format!(
                "degree {deg} potential on a rule of order {}",
                rule.order()
            )));
        }
    }
    let prof = &potential.profile;
    let locals: Vec<Local> = rule.nodes.iter().map(|&s| Local::new(n, prof, s)).collect();
    for (i, l) in locals.iter().enumerate() {
        check_positive(i, l.s0(), l.mp.value(), l.mu.value())?;
    }
    for (node, s) in [(0, EDGE), (rule.order().saturating_sub(1), 1.0 - EDGE)] {
        let l = eigen_low(prof, s);
        check_positive(node, s, l.0, l.1)?;
    }
    if prof.degree().is_none() {
        for which in 0..2 {
            let c = ChebProfile::from_fn(TAIL_SAMPLES, |s| {
                let e = eigen_low(prof, s);
                if which == 0 {
                    e.0
                } else {
                    e.1
                }
            });
            let tail = c.tail();
            if tail > crate::quadrature::TAIL_THRESHOLD {
                return Err(Error::ResolutionTooLow(format!(
                    "eigenvalue profile spectral tail {tail:e}"
                )));
            }
        }
    }
    Ok(RadialKahlerMetric {
        potential: potential.clone(),
        rule: rule.clone(),
        conv,
        reference: prof.is_zero(),
        locals,
        id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
    })
}

fn check_positive(node: usize, s: f64, rad: f64, sph: f64) -> Result<()> {
    for v in [rad, sph] {
        if !(v > 0.0) {
            return Err(Error::NonPositiveMetric { node, s, value: v });
        }
    }
    Ok(())
}

/// (m', mu) at s from a short jet.
fn eigen_low(prof: &Profile, s0: f64) -> (f64, f64) {
    let s = Jet::<3>::var(s0);
    let phi = prof.eval(&s);
    let mu = 1.0 + (1.0 - s) * phi.d();
    let mp = (s * mu).d();
    (mp.value(), mu.value())
}

impl RadialKahlerMetric {
    pub fn n(&self) -> usize {
        self.potential.n
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn nodes(&self) -> &[f64] {
        &self.rule.nodes
    }

    pub fn lambda_rad(&self) -> Vec<f64> {
        self.locals.iter().map(|l| l.mp.value()).collect()
    }

    pub fn lambda_sph(&self) -> Vec<f64> {
        self.locals.iter().map(|l| l.mu.value()).collect()
    }

    pub fn field(&self, values: Vec<f64>) -> ScalarField {
        ScalarField {
            values,
            metric_id: self.id,
        }
    }

    pub fn field_from(&self, f: impl Fn(&Local) -> f64) -> ScalarField {
        self.field(self.locals.iter().map(f).collect())
    }

    /// Sample a radial function given as a profile.
    pub fn sample(&self, p: &Profile) -> ScalarField {
        self.field(self.rule.nodes.iter().map(|&s| p.value(s)).collect())
    }

    fn check(&self, f: &ScalarField) -> Result<()> {
        if f.metric_id != self.id || f.values.len() != self.locals.len() {
            return Err(Error::MismatchedMetric);
        }
        Ok(())
    }

    /// Integral of sum_i f(node_i) against omega_phi^n / n!.
    pub fn integrate_with(&self, f: impl Fn(&Local) -> f64) -> f64 {
        let c = fibre_factor(self.n());
        c * self
            .locals
            .iter()
            .zip(&self.rule.weights)
            .map(|(l, w)| w * l.vol() * f(l))
            .sum::<f64>()
    }

    pub fn integrate(&self, f: &ScalarField) -> Result<f64> {
        self.check(f)?;
        let c = fibre_factor(self.n());
        Ok(c * self
            .locals
            .iter()
            .zip(&self.rule.weights)
            .zip(&f.values)
            .map(|((l, w), v)| w * l.vol() * v)
            .sum::<f64>())
    }

    /// Integral of an invariant top-degree form given by its FS-frame
    /// coefficient at each node.
    pub fn integrate_top(&self, top: impl Fn(usize, &Local) -> f64) -> f64 {
        let n = self.n();
        fibre_factor(n)
            * self
                .locals
                .iter()
                .enumerate()
                .zip(&self.rule.weights)
                .map(|((i, l), w)| w * l.s0().powi(n as i32 - 1) * top(i, l))
                .sum::<f64>()
    }

    /// Integral of f omega_self^p ^ omega_other^(n-p) / n!.
    pub fn integrate_mixed(&self, other: &RadialKahlerMetric, p: usize, f: &ScalarField) -> Result<f64> {
        self.check(f)?;
        if other.rule.nodes != self.rule.nodes || other.n() != self.n() {
            return Err(Error::MismatchedMetric);
        }
        let n = self.n();
        if p > n {
            return Err(Error::DegreeOutOfRange(p));
        }
        let nf: f64 = (1..=n).map(|x| x as f64).product();
        Ok(self.integrate_top(|i, l| {
            let a = l.omega().pow(p, n);
            let b = other.locals[i].omega().pow(n - p, n);
            a.wedge(&b, n).top() * f.values[i] / nf
        }))
    }

    pub fn volume(&self) -> f64 {
        self.integrate_with(|_| 1.0)
    }

    pub fn scalar_curvature(&self) -> ScalarField {
        self.field_from(|l| l.scal.value())
    }

    pub fn curvature_invariants(&self) -> CurvatureData {
        CurvatureData {
            scalar: self.scalar_curvature(),
            ric_rad: self.field_from(|l| l.ric_rad.value()),
            ric_sph: self.field_from(|l| l.ric_sph.value()),
            riem_norm_sq: self.field_from(|l| l.riem_sq().value()),
            ric_norm_sq: self.field_from(|l| l.ric_sq().value()),
            lap_scalar: self.field_from(|l| l.lap(&l.scal).value()),
        }
    }

    /// Half Laplacian of a sampled field by collocation on the rule nodes.
    pub fn half_laplacian(&self, f: &ScalarField) -> Result<ScalarField> {
        self.check(f)?;
        let rule = &self.rule;
        let df = rule.differentiate_values(&f.values);
        let flux: Vec<f64> = self
            .locals
            .iter()
            .zip(&df)
            .map(|(l, d)| {
                let s = l.s0();
                s * (1.0 - s) * d
            })
            .collect();
        let dflux = rule.differentiate_values(&flux);
        let n = self.n();
        Ok(self.field(
            self.locals
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    let s = l.s0();
                    let mut v = dflux[i] / l.mp.value();
                    if n > 1 {
                        v += (n - 1) as f64 * (1.0 - s) * df[i] / l.mu.value();
                    }
                    v
                })
                .collect(),
        ))
    }

    /// Half Laplacian of a radial function given as a profile (exact jets).
    pub fn half_laplacian_profile(&self, f: &Profile) -> ScalarField {
        self.field_from(|l| l.lap(&f.eval(&l.s)).value())
    }

    pub fn bergman_coefficient(&self, j: usize) -> Result<ScalarField> {
        let c = self.conv.a2_laplacian;
        match j {
            0 => Ok(self.field_from(|_| 1.0)),
            1 => Ok(self.field_from(|l| 0.5 * l.scal.value())),
            2 => Ok(self.field_from(|l| a2(l, c).value())),
            _ => Err(Error::UnsupportedCoefficient(j)),
        }
    }

    pub fn coefficient_average(&self, j: usize) -> Result<CoefficientAverage> {
        let a = self.bergman_coefficient(j)?;
        let vol = self.volume();
        let volume_average = self.integrate(&a)? / vol;
        let exact = elementary_symmetric(self.n(), j);
        Ok(CoefficientAverage {
            volume_average,
            exact,
            discrepancy: (volume_average - exact).abs(),
        })
    }

    pub fn curvature_variation(&self, direction: &Profile) -> CurvatureVariation {
        let mut out = (vec![], vec![], vec![], vec![]);
        for l in &self.locals {
            let v = variation_at(l, &direction.eval(&l.s));
            out.0.push(v.0.value());
            out.1.push(v.1.value());
            out.2.push(v.2.value());
            out.3.push(v.3.value());
        }
        CurvatureVariation {
            ric_rad: self.field(out.0),
            ric_sph: self.field(out.1),
            scalar: self.field(out.2),
            lap_scalar: self.field(out.3),
        }
    }
}

/// a_2 with a configurable weight on Delta S.
pub fn a2(l: &Local, lap_weight: f64) -> J {
    l.lap(&l.scal) * lap_weight + l.quad() / 24.0
}

/// First-order variations at one node along psi: eigenvalues of
/// delta ric = -i ddbar Delta psi, delta S = -Delta^2 psi - <i ddbar psi, ric>,
/// and delta (Delta S) = Delta(delta S) - <i ddbar psi, i ddbar S>.
pub fn variation_at(l: &Local, psi: &J) -> (J, J, J, J) {
    let lpsi = l.lap(psi);
    let (r, s) = l.ddbar(&lpsi);
    let hpsi = l.ddbar(psi);
    let ds = -l.lap(&lpsi) - l.inner(hpsi, (l.ric_rad, l.ric_sph));
    let dls = l.lap(&ds) - l.inner(hpsi, l.ddbar(&l.scal));
    (-r, -s, ds, dls)
}
