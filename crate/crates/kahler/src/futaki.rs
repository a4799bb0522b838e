//! Hamiltonian potential and covariant derivative of the rotation field
//! X = sum z^i d/dz^i, and the holomorphic invariants it pairs with.
//!
//! For a radial metric iota_X omega = i dbar x, so theta_X = -i (x - c) with
//! x the moment coordinate. theta_X is purely imaginary and only its
//! imaginary part is stored. Every integral below is reported as the real
//! number multiplying i.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{DForm, InvariantPolys};
use crate::functionals::{gamma_density, todd_form};
use crate::jet::Jet;
use crate::metric::{build_metric_with, Local, RadialKahlerMetric, ScalarField};
use crate::potential::{Profile, RadialPotential};
use crate::quadrature::gauss_legendre;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldSpec {
    /// X = sum_i z^i d/dz^i (z d/dz on CP^1)
    Rotation,
    Zero,
}

impl FromStr for FieldSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rotation" | "z-dz" => Ok(FieldSpec::Rotation),
            "zero" => Ok(FieldSpec::Zero),
            other => Err(Error::UnsupportedField(other.to_string())),
        }
    }
}

impl FieldSpec {
    fn weight(self) -> f64 {
        match self {
            FieldSpec::Rotation => 1.0,
            FieldSpec::Zero => 0.0,
        }
    }
}

/// Metric-frame eigenvalues of grad X on the radial and spherical sectors.
#[derive(Clone, Debug, PartialEq)]
pub struct EndomorphismProfile {
    pub rad: ScalarField,
    pub sph: ScalarField,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorFieldData {
    pub spec: FieldSpec,
    /// Im theta_X at the nodes
    pub theta_im: ScalarField,
    pub nabla: EndomorphismProfile,
    /// constant c in theta_X = -i (x - c)
    pub normalization: f64,
    /// max over nodes of |d/ds Im theta + m'|, the residual of
    /// iota_X omega + dbar theta_X = 0
    pub residual: f64,
}

const ODE_ORDER: usize = 32;

/// (m', mu) at an arbitrary s.
fn eigen_at(prof: &Profile, s0: f64) -> (f64, f64) {
    let s = Jet::<3>::var(s0);
    let mu = 1.0 + (1.0 - s) * prof.eval(&s).d();
    ((s * mu).d().value(), mu.value())
}

/// Solve d/ds Im theta = -m' from s = 0, then fix the constant so that
/// int theta_X omega^n = 0.
pub fn hamiltonian_potential(metric: &RadialKahlerMetric, spec: FieldSpec) -> Result<VectorFieldData> {
    let w = spec.weight();
    let prof = &metric.potential.profile;
    let (gx, gw) = gauss_legendre(ODE_ORDER);
    let raw: Vec<f64> = metric
        .nodes()
        .iter()
        .map(|&s| {
            let half = 0.5 * s;
            -w * gx
                .iter()
                .zip(&gw)
                .map(|(x, wt)| wt * half * eigen_at(prof, half * (x + 1.0)).0)
                .sum::<f64>()
        })
        .collect();
    let vol = metric.volume();
    let mean = metric.integrate(&metric.field(raw.clone()))? / vol;
    let values: Vec<f64> = raw.iter().map(|v| v - mean).collect();
    let d = metric.rule.differentiate_values(&values);
    let residual = d
        .iter()
        .zip(&metric.locals)
        .map(|(dv, l)| (dv + w * l.mp.value()).abs())
        .fold(0.0, f64::max);
    Ok(VectorFieldData {
        spec,
        theta_im: metric.field(values),
        nabla: covariant_endomorphism(metric, spec),
        normalization: if w == 0.0 { 0.0 } else { -mean },
        residual,
    })
}

/// grad X = omegadot omega^-1 for omegadot = i ddbar x.
pub fn covariant_endomorphism(metric: &RadialKahlerMetric, spec: FieldSpec) -> EndomorphismProfile {
    let w = spec.weight();
    let (rad, sph): (Vec<f64>, Vec<f64>) = metric
        .locals
        .iter()
        .map(|l| {
            let (r, s) = sector_values(l);
            (w * r, w * s)
        })
        .unzip();
    EndomorphismProfile {
        rad: metric.field(rad),
        sph: metric.field(sph),
    }
}

/// Sector eigenvalues of grad X for the rotation field at one node.
pub fn sector_values(l: &Local) -> (f64, f64) {
    let (r, s) = l.ddbar(&l.x);
    (r.value(), s.value())
}

/// Sector eigenvalues at an arbitrary s, for endpoint diagnostics.
pub fn sector_values_at(potential: &RadialPotential, s: f64) -> (f64, f64) {
    sector_values(&Local::new(potential.n, &potential.profile, s))
}

/// max over nodes of |d/ds (X . P + Delta x)| where P = -log det g is the
/// Ricci potential: the trace of iota_X R = -dbar grad X reads
/// iota_X ric = dbar Delta theta_X.
pub fn lu_lemma_defect(metric: &RadialKahlerMetric, spec: FieldSpec) -> f64 {
    let w = spec.weight();
    let n = metric.n();
    metric
        .locals
        .iter()
        .map(|l| {
            let s = l.s;
            let p = -(l.mp.ln() + l.mu.ln() * (n - 1) as f64 + (1.0 - s).ln() * (n + 1) as f64);
            let xp = s * (1.0 - s) * p.d();
            ((xp + l.lap(&l.x)).d().value() * w).abs()
        })
        .fold(0.0, f64::max)
}

/// int Im theta (a_j - Delta a_{j-1}) omega^n / n!
pub fn invariant_lhs(metric: &RadialKahlerMetric, data: &VectorFieldData, j: usize) -> Result<f64> {
    let c = metric.conv.a2_laplacian;
    let g = metric.field(
        metric
            .locals
            .iter()
            .zip(&data.theta_im.values)
            .map(|(l, t)| gamma_density(l, j, c).map(|v| -t * v))
            .collect::<Result<Vec<_>>>()?,
    );
    metric.integrate(&g)
}

/// The two pieces of (1/m!) int Td_j(R + grad X)(omega + theta_X)^m,
/// m = n + 1 - j: (endomorphism part, potential part).
pub fn invariant_rhs_parts(metric: &RadialKahlerMetric, data: &VectorFieldData, j: usize) -> Result<(f64, f64)> {
    let n = metric.n();
    if j > 2 {
        return Err(Error::UnsupportedCoefficient(j));
    }
    let m = n + 1 - j;
    let fact = |k: usize| (1..=k).map(|x| x as f64).product::<f64>();
    // j Td_j(E, R, ..., R) in the FS frame
    let polarized = |i: usize, l: &Local| -> DForm {
        let e = [data.nabla.rad.values[i], data.nabla.sph.values[i], data.nabla.sph.values[i]];
        match j {
            0 => DForm::scalar(0.0),
            1 => DForm::scalar(0.5 * (e[0] + (n - 1) as f64 * e[1])),
            _ => {
                let p = InvariantPolys::new(l.tensor());
                let sph = if n > 1 { p.td2_polarized(&e, 1) } else { 0.0 };
                l.to_fs(p.td2_polarized(&e, 0), sph)
            }
        }
    };
    let endo = metric.integrate_top(|i, l| polarized(i, l).wedge(&l.omega().pow(m, n), n).top()) / fact(m);
    let pot = if j <= n {
        let td = metric.locals.iter().map(|l| todd_form(j, l)).collect::<Result<Vec<_>>>()?;
        metric.integrate_top(|i, l| data.theta_im.values[i] * td[i].wedge(&l.omega().pow(n - j, n), n).top())
            / fact(n - j)
    } else {
        0.0
    };
    Ok((endo, pot))
}

pub fn invariant_rhs(metric: &RadialKahlerMetric, data: &VectorFieldData, j: usize) -> Result<f64> {
    let (a, b) = invariant_rhs_parts(metric, data, j)?;
    Ok(a + b)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvariantRow {
    pub j: usize,
    pub metric_id: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub defect: f64,
}

pub fn invariant_row(metric: &RadialKahlerMetric, spec: FieldSpec, j: usize) -> Result<InvariantRow> {
    let data = hamiltonian_potential(metric, spec)?;
    let lhs = invariant_lhs(metric, &data, j)?;
    let rhs = invariant_rhs(metric, &data, j)?;
    Ok(InvariantRow {
        j,
        metric_id: metric.id(),
        lhs,
        rhs,
        defect: (lhs - rhs).abs(),
    })
}

/// max - min of the invariant over the metrics.
pub fn metric_independence(spec: FieldSpec, j: usize, metrics: &[RadialKahlerMetric]) -> Result<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for m in metrics {
        let v = invariant_lhs(m, &hamiltonian_potential(m, spec)?, j)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(if metrics.is_empty() { 0.0 } else { hi - lo })
}

/// Potential of the pullback of `base` by the flow of Re X at time t.
pub fn flow_potential(base: &RadialPotential, t: f64) -> RadialPotential {
    RadialPotential {
        n: base.n,
        profile: Profile::Pullback {
            t,
            base: Box::new(base.profile.clone()),
        },
    }
}

/// The derivative of S~_j along the flow at each time, from the first
/// variation formula with velocity x_t - c.
pub fn flow_derivatives(metric: &RadialKahlerMetric, j: usize, times: &[f64]) -> Result<Vec<f64>> {
    let c = metric.conv.a2_laplacian;
    let norm = hamiltonian_potential(metric, FieldSpec::Rotation)?;
    // theta_X = -i (x - c0); recover c0 from any node
    let c0 = metric.locals[0].x.value() + norm.theta_im.values[0];
    times
        .iter()
        .map(|&t| {
            let mt = build_metric_with(&flow_potential(&metric.potential, t), &metric.rule, metric.conv)?;
            let g = mt.field(
                mt.locals
                    .iter()
                    .map(|l| gamma_density(l, j, c).map(|v| (l.x.value() - c0) * v))
                    .collect::<Result<Vec<_>>>()?,
            );
            mt.integrate(&g)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::build_metric;
    use crate::quadrature::{radial_rule, RadialQuadrature};
    use std::sync::Arc;

    fn rule() -> Arc<RadialQuadrature> {
        Arc::new(radial_rule(64).unwrap())
    }

    #[test]
    fn fs_cp1_potential_is_one_half_minus_s() {
        let m = build_metric(&RadialPotential::zero(1), &rule()).unwrap();
        let d = hamiltonian_potential(&m, FieldSpec::Rotation).unwrap();
        for (v, s) in d.theta_im.values.iter().zip(m.nodes()) {
            assert!((v - (0.5 - s)).abs() < 1e-13);
        }
        assert!(m.integrate(&d.theta_im).unwrap().abs() < 1e-13);
        assert!(d.residual < 1e-10);
    }

    #[test]
    fn normalization_constant_is_cohomological() {
        let p = RadialPotential::poly(2, &[0.0, 0.1, -0.08, 0.03]).unwrap();
        let m = build_metric(&p, &rule()).unwrap();
        let d = hamiltonian_potential(&m, FieldSpec::Rotation).unwrap();
        let c = m.locals[0].x.value() + d.theta_im.values[0];
        assert!((c - 2.0 / 3.0).abs() < 1e-12, "{c}");
        assert!(d.residual < 1e-10);
    }

    #[test]
    fn zero_field_gives_zero_data() {
        let m = build_metric(&RadialPotential::poly(2, &[0.0, 0.1]).unwrap(), &rule()).unwrap();
        let d = hamiltonian_potential(&m, FieldSpec::Zero).unwrap();
        assert!(d.theta_im.values.iter().all(|&v| v == 0.0));
        assert!(d.nabla.rad.values.iter().chain(&d.nabla.sph.values).all(|&v| v == 0.0));
        assert_eq!("fancy".parse::<FieldSpec>(), Err(Error::UnsupportedField("fancy".into())));
    }

    #[test]
    fn trace_of_grad_x_is_minus_the_laplacian_of_im_theta() {
        let p = RadialPotential::poly(1, &[0.0, 0.2, -0.1]).unwrap();
        let m = build_metric(&p, &rule()).unwrap();
        let d = hamiltonian_potential(&m, FieldSpec::Rotation).unwrap();
        let lap = m.half_laplacian(&d.theta_im).unwrap();
        for (i, v) in lap.values.iter().enumerate() {
            assert!((v + d.nabla.rad.values[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn lu_lemma_on_fs() {
        for n in 1..=3 {
            let m = build_metric(&RadialPotential::zero(n), &rule()).unwrap();
            assert!(lu_lemma_defect(&m, FieldSpec::Rotation) < 1e-10);
        }
    }

    #[test]
    fn invariants_at_fs() {
        for n in 1..=2 {
            let m = build_metric(&RadialPotential::zero(n), &rule()).unwrap();
            for j in 0..=2 {
                let r = invariant_row(&m, FieldSpec::Rotation, j).unwrap();
                assert!(r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-12, "{r:?}");
            }
        }
    }
}
