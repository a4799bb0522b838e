//! The functionals S~_j and S_j for j <= 2, evaluated along linear potential
//! paths and through Bott-Chern forms, plus variation and cocycle checks.
//!
//! Bott-Chern forms are stored as the real form -i BC. All forms are
//! invariant and represented in the Fubini-Study frame by [`DForm`].

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bergman::{VariationCheck, FD_STEP};
use crate::error::{Error, Result};
use crate::forms::{mixed_powers_sum, DForm, InvariantPolys};
use crate::metric::{a2, build_metric_with, elementary_symmetric, Local, RadialKahlerMetric, J};
use crate::potential::{Profile, RadialPotential};
use crate::quadrature::gauss_legendre;

pub const PATH_ORDER: usize = 32;
/// Step for second derivatives; one Richardson level is applied on top.
pub const SECOND_FD_STEP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    Path,
    BottChern,
    ExplicitS2,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// change of the value when the path quadrature order is doubled
    pub path_refinement: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalLedger {
    pub j: usize,
    pub route: Route,
    pub value: f64,
    pub endpoints_checksum: String,
    pub residuals: Residuals,
}

impl FunctionalLedger {
    fn new(j: usize, route: Route, value: f64, m1: &RadialKahlerMetric, m0: &RadialKahlerMetric) -> Self {
        Self {
            j,
            route,
            value,
            endpoints_checksum: endpoints_checksum(&m1.potential, &m0.potential),
            residuals: Residuals::default(),
        }
    }
}

/// SHA-256 of the JSON serialization of both endpoint potentials.
pub fn endpoints_checksum(p1: &RadialPotential, p0: &RadialPotential) -> String {
    let mut h = Sha256::new();
    for p in [p1, p0] {
        h.update(serde_json::to_vec(p).unwrap_or_default());
        h.update([0u8]);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathOptions {
    pub order: usize,
    pub refine: bool,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self {
            order: PATH_ORDER,
            refine: false,
        }
    }
}

/// Gauss-Legendre nodes and weights on (0, 1).
pub fn t_rule(order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    x.iter().zip(&w).map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect()
}

fn compatible(a: &RadialKahlerMetric, b: &RadialKahlerMetric) -> Result<()> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch(a.n(), b.n()));
    }
    if a.rule.nodes != b.rule.nodes {
        return Err(Error::MismatchedMetric);
    }
    Ok(())
}

fn difference(m1: &RadialKahlerMetric, m0: &RadialKahlerMetric) -> Profile {
    m1.potential.profile.combine(1.0, &m0.potential.profile, -1.0)
}

/// Metric of (1 - t) phi_0 + t phi_1 on the rule of `m0`.
fn path_metric(m1: &RadialKahlerMetric, m0: &RadialKahlerMetric, t: f64) -> Result<RadialKahlerMetric> {
    let p = m0.potential.lerp(&m1.potential, t);
    build_metric_with(&p, &m0.rule, m0.conv).map_err(|e| match e {
        Error::NonPositiveMetric { .. } => Error::PathLeavesCone { t },
        other => other,
    })
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|x| x as f64).product()
}

/// Delta a_{j-1} - a_j at one node.
pub fn gamma_density(l: &Local, j: usize, lap_weight: f64) -> Result<f64> {
    match j {
        0 => Ok(-1.0),
        1 => Ok(-0.5 * l.scal.value()),
        2 => Ok((l.lap(&l.scal) * 0.5 - a2(l, lap_weight)).value()),
        _ => Err(Error::UnsupportedCoefficient(j)),
    }
}

/// The 1-form gamma^(j) at the metric, applied to `direction`.
pub fn gamma(j: usize, metric: &RadialKahlerMetric, direction: &Profile) -> Result<f64> {
    let c = metric.conv.a2_laplacian;
    gamma_density(&metric.locals[0], j, c)?;
    Ok(metric.integrate_with(|l| direction.value(l.s0()) * gamma_density(l, j, c).unwrap_or(f64::NAN)))
}

fn path_value(m1: &RadialKahlerMetric, m0: &RadialKahlerMetric, j: usize, order: usize) -> Result<f64> {
    let psi = difference(m1, m0);
    let mut total = 0.0;
    for (t, w) in t_rule(order) {
        let mt = path_metric(m1, m0, t)?;
        total += w * gamma(j, &mt, &psi)?;
    }
    Ok(total)
}

/// S~_j[phi_1, phi_0] = int_0^1 dt int psi (Delta_t a_{j-1} - a_j) omega_t^n / n!
/// along the linear path, psi = phi_1 - phi_0.
pub fn tilde_s_path(m1: &RadialKahlerMetric, m0: &RadialKahlerMetric, j: usize) -> Result<FunctionalLedger> {
    tilde_s_path_with(m1, m0, j, PathOptions::default())
}

pub fn tilde_s_path_with(
    m1: &RadialKahlerMetric,
    m0: &RadialKahlerMetric,
    j: usize,
    opts: PathOptions,
) -> Result<FunctionalLedger> {
    compatible(m1, m0)?;
    if j > 2 {
        return Err(Error::UnsupportedCoefficient(j));
    }
    let value = path_value(m1, m0, j, opts.order)?;
    let mut out = FunctionalLedger::new(j, Route::Path, value, m1, m0);
    if opts.refine {
        let fine = path_value(m1, m0, j, 2 * opts.order)?;
        out.residuals.path_refinement = Some((fine - value).abs());
    }
    Ok(out)
}

/// A Bott-Chern form -i BC, an invariant (deg, deg)-form per radial node.
#[derive(Clone, Debug, PartialEq)]
pub struct BottChernProfile {
    pub n: usize,
    pub deg: usize,
    pub forms: Vec<DForm>,
    /// change of the pairing against the background powers when the path
    /// quadrature is doubled (path-integrated forms only)
    pub refinement: Option<f64>,
}

impl BottChernProfile {
    /// Integral of self ^ other(node).
    pub fn pair_with(&self, metric: &RadialKahlerMetric, other: impl Fn(usize, &Local) -> DForm) -> f64 {
        let n = self.n;
        metric.integrate_top(|i, l| self.forms[i].wedge(&other(i, l), n).top())
    }

    /// Integral of self ^ omega_base^(n-deg) / (n-deg)!.
    pub fn pair_powers(&self, base: &RadialKahlerMetric) -> f64 {
        let n = self.n;
        let p = n.saturating_sub(self.deg);
        if self.deg > n {
            return 0.0;
        }
        let f = factorial(p);
        self.pair_with(base, |_, l| l.omega().pow(p, n).scale(1.0 / f))
    }
}

/// -i BC(ch_j; phi_1, phi_0) = -(1/j!) sum_s psi omega_1^s omega_0^(j-1-s).
pub fn bc_chern_character(m1: &RadialKahlerMetric, m0: &RadialKahlerMetric, j: usize) -> Result<BottChernProfile> {
    compatible(m1, m0)?;
    let n = m1.n();
    if j == 0 || j > n + 1 {
        return Err(Error::DegreeOutOfRange(j));
    }
    let psi = difference(m1, m0);
    let f = factorial(j);
    let forms = m1
        .locals
        .iter()
        .zip(&m0.locals)
        .map(|(a, b)| mixed_powers_sum(&a.omega(), &b.omega(), j - 1, n).scale(-psi.value(a.s0()) / f))
        .collect();
    Ok(BottChernProfile {
        n,
        deg: j - 1,
        forms,
        refinement: None,
    })
}

/// -i BC(Td_1; omega_1, omega_0) = (1/2) log(omega_1^n / omega_0^n).
pub fn bc_todd1(m1: &RadialKahlerMetric, m0: &RadialKahlerMetric) -> Result<BottChernProfile> {
    compatible(m1, m0)?;
    let n = m1.n();
    let ldet = |l: &Local| l.mp.value().ln() + (n - 1) as f64 * l.mu.value().ln();
    Ok(BottChernProfile {
        n,
        deg: 0,
        forms: m1
            .locals
            .iter()
            .zip(&m0.locals)
            .map(|(a, b)| DForm::scalar(0.5 * (ldet(a) - ldet(b))))
            .collect(),
        refinement: None,
    })
}

fn todd2_path(m1: &RadialKahlerMetric, m0: &RadialKahlerMetric, steps: usize) -> Result<Vec<DForm>> {
    let n = m1.n();
    let psi = difference(m1, m0);
    let mut acc = vec![DForm::zero(1); m0.locals.len()];
    for (t, w) in t_rule(steps) {
        let mt = path_metric(m1, m0, t)?;
        for (slot, l) in acc.iter_mut().zip(&mt.locals) {
            let (br, bs) = l.ddbar(&psi.eval(&l.s));
            let e = [br.value(), bs.value(), bs.value()];
            let polys = InvariantPolys::new(l.tensor());
            let rad = polys.td2_polarized(&e, 0);
            let sph = if n > 1 { polys.td2_polarized(&e, 1) } else { 0.0 };
            *slot = slot.add(&l.to_fs(rad, sph).scale(w));
        }
    }
    Ok(acc)
}

/// -i BC(Td_2; omega_1, omega_0) by integrating the polarized Todd form
/// 2 Td_2(R_t; i ddbar psi) along the linear path. The returned profile
/// uses 2 * `path_steps` nodes; `refinement` records the change from the
/// `path_steps` result.
pub fn bc_todd2(m1: &RadialKahlerMetric, m0: &RadialKahlerMetric, path_steps: usize) -> Result<BottChernProfile> {
    compatible(m1, m0)?;
    let n = m1.n();
    let coarse = BottChernProfile {
        n,
        deg: 1,
        forms: todd2_path(m1, m0, path_steps)?,
        refinement: None,
    };
    let mut fine = BottChernProfile {
        n,
        deg: 1,
        forms: todd2_path(m1, m0, 2 * path_steps)?,
        refinement: None,
    };
    fine.refinement = Some((fine.pair_powers(m0) - coarse.pair_powers(m0)).abs());
    Ok(fine)
}

/// Td_j of the metric's own curvature in the Fubini-Study frame.
pub fn todd_form(j: usize, l: &Local) -> Result<DForm> {
    let n = l.n;
    match j {
        0 => Ok(DForm::scalar(1.0)),
        1 => Ok(l.to_fs(0.5 * l.ric_rad.value(), 0.5 * l.ric_sph.value())),
        2 => {
            let p = InvariantPolys::new(l.tensor());
            let (mp, mu) = (l.mp.value(), l.mu.value());
            Ok(DForm {
                deg: 2,
                w: if n >= 2 { p.td2_pair(0, 1) * mp * mu } else { 0.0 },
                o: if n >= 3 { p.td2_pair(1, 2) * mu * mu } else { 0.0 },
            })
        }
        _ => Err(Error::UnsupportedCoefficient(j)),
    }
}

/// The Bott-Chern term of S~_j: int -i BC(Td_j) ^ omega_0^(n+1-j)/(n+1-j)!.
fn bc_todd_term(m1: &RadialKahlerMetric, m0: &RadialKahlerMetric, j: usize) -> Result<(f64, Option<f64>)> {
    match j {
        0 => Ok((0.0, None)),
        1 => Ok((bc_todd1(m1, m0)?.pair_powers(m0), None)),
        2 => {
            let b = bc_todd2(m1, m0, PATH_ORDER)?;
            Ok((b.pair_powers(m0), b.refinement))
        }
        _ => Err(Error::UnsupportedCoefficient(j)),
    }
}

/// S~_j through Bott-Chern forms:
/// int -i BC(Td_j; omega_1, omega_0) ^ ch_{n+1-j}(omega_0)
/// + int Td_j(R_1) ^ (-i) BC(ch_{n+1-j}; phi_1, phi_0).
pub fn tilde_s_bc(m1: &RadialKahlerMetric, m0: &RadialKahlerMetric, j: usize) -> Result<FunctionalLedger> {
    compatible(m1, m0)?;
    let n = m1.n();
    let (bc, refinement) = bc_todd_term(m1, m0, j)?;
    let m = n + 1 - j;
    let ch = if m >= 1 {
        let c = bc_chern_character(m1, m0, m)?;
        let td = m1.locals.iter().map(|l| todd_form(j, l)).collect::<Result<Vec<_>>>()?;
        c.pair_with(m1, |i, _| td[i])
    } else {
        0.0
    };
    let mut out = FunctionalLedger::new(j, Route::BottChern, bc + ch, m1, m0);
    out.residuals.path_refinement = refinement;
    Ok(out)
}

/// Average of a_j, equal to (1/V) int Td_j ch_{n-j}.
pub fn coefficient_mean(n: usize, j: usize) -> f64 {
    elementary_symmetric(n, j)
}

/// S_j: S_0 = S~_0 / V and S_j = S~_j - mean(a_j) S~_0 for j > 0.
pub fn s_j(m1: &RadialKahlerMetric, m0: &RadialKahlerMetric, j: usize) -> Result<FunctionalLedger> {
    s_j_route(m1, m0, j, Route::Path)
}

pub fn s_j_route(m1: &RadialKahlerMetric, m0: &RadialKahlerMetric, j: usize, route: Route) -> Result<FunctionalLedger> {
    let tilde = |j| match route {
        Route::BottChern => tilde_s_bc(m1, m0, j),
        Route::Path => tilde_s_path(m1, m0, j),
        Route::ExplicitS2 => Err(Error::Invalid("explicit route exists only for j = 2".into())),
    };
    if route == Route::ExplicitS2 {
        if j != 2 {
            return tilde(j);
        }
        return s2_explicit(m1, m0);
    }
    let s0 = tilde(0)?;
    let mut out = if j == 0 {
        let mut l = s0.clone();
        l.value /= m0.volume();
        l
    } else {
        let mut l = tilde(j)?;
        l.value -= coefficient_mean(m1.n(), j) * s0.value;
        l
    };
    out.j = j;
    Ok(out)
}

/// The three-term closed expression of S_2, built from the Todd Bott-Chern
/// form, the Todd form of the endpoint and the characteristic number
/// int Td_2 ^ omega^(n-2)/(n-2)! of the reference metric.
pub fn s2_explicit(m1: &RadialKahlerMetric, m0: &RadialKahlerMetric) -> Result<FunctionalLedger> {
    compatible(m1, m0)?;
    let n = m1.n();
    let psi = difference(m1, m0);
    let b = bc_todd2(m1, m0, PATH_ORDER)?;
    let first = b.pair_powers(m0);
    let second = if n >= 2 {
        let f = factorial(n - 1);
        m1.integrate_top(|i, l| {
            let w = mixed_powers_sum(&l.omega(), &m0.locals[i].omega(), n - 2, n);
            let td = todd_form(2, l).unwrap_or(DForm::zero(2));
            -psi.value(l.s0()) * td.wedge(&w, n).top() / f
        })
    } else {
        0.0
    };
    let third = if n >= 2 {
        let f = factorial(n - 2);
        let number = m0.integrate_top(|_, l| {
            todd_form(2, l)
                .unwrap_or(DForm::zero(2))
                .wedge(&l.omega().pow(n - 2, n), n)
                .top()
                / f
        });
        let g = factorial(n + 1);
        let aubin = m1.integrate_top(|i, l| {
            psi.value(l.s0()) * mixed_powers_sum(&l.omega(), &m0.locals[i].omega(), n, n).top() / g
        });
        number / m0.volume() * aubin
    } else {
        0.0
    };
    let mut out = FunctionalLedger::new(2, Route::ExplicitS2, first + second + third, m1, m0);
    out.residuals.path_refinement = b.refinement;
    Ok(out)
}

/// |S_j[2,0] - S_j[2,1] - S_j[1,0]|
pub fn cocycle_defect(
    j: usize,
    m2: &RadialKahlerMetric,
    m1: &RadialKahlerMetric,
    m0: &RadialKahlerMetric,
) -> Result<f64> {
    let a = s_j(m2, m0, j)?.value;
    let b = s_j(m2, m1, j)?.value;
    let c = s_j(m1, m0, j)?.value;
    Ok((a - b - c).abs())
}

fn moved(metric: &RadialKahlerMetric, p: RadialPotential) -> Result<RadialKahlerMetric> {
    build_metric_with(&p, &metric.rule, metric.conv)
}

/// Derivative of S_j at the metric along `direction`: central differences
/// of S_j[phi + h psi, phi] against
/// int psi (mean(a_j) + Delta a_{j-1} - a_j) omega_phi^n / n! (j > 0) or
/// -(1/V) int psi omega_phi^n / n! (j = 0).
pub fn first_variation(j: usize, metric: &RadialKahlerMetric, direction: &Profile) -> Result<VariationCheck> {
    first_variation_route(j, metric, direction, Route::Path)
}

/// As `first_variation`, with the differences taken of S_j by `route`.
pub fn first_variation_route(
    j: usize,
    metric: &RadialKahlerMetric,
    direction: &Profile,
    route: Route,
) -> Result<VariationCheck> {
    let plus = moved(metric, metric.potential.along(direction, FD_STEP))?;
    let minus = moved(metric, metric.potential.along(direction, -FD_STEP))?;
    let fd = (s_j_route(&plus, metric, j, route)?.value - s_j_route(&minus, metric, j, route)?.value) / (2.0 * FD_STEP);
    let formula = if j == 0 {
        -metric.integrate_with(|l| direction.value(l.s0())) / metric.volume()
    } else {
        let mean = coefficient_mean(metric.n(), j);
        mean * metric.integrate_with(|l| direction.value(l.s0())) + gamma(j, metric, direction)?
    };
    Ok(VariationCheck::new(fd, formula))
}

/// Defects of the two trace identities for invariant (1,1) forms alpha,
/// beta whose metric-frame eigenvalues are given as (radial, spherical)
/// profiles:
/// n alpha ^ omega^(n-1) = (tr alpha) omega^n and
/// n(n-1) alpha ^ beta ^ omega^(n-2) = (tr alpha tr beta - <alpha, beta>) omega^n,
/// both integrated. The second is `None` on CP^1.
pub fn trace_identity_defects(
    metric: &RadialKahlerMetric,
    alpha: (&Profile, &Profile),
    beta: (&Profile, &Profile),
) -> (f64, Option<f64>) {
    let n = metric.n();
    let nf = n as f64;
    let eig = |p: (&Profile, &Profile), l: &Local| (p.0.value(l.s0()), p.1.value(l.s0()));
    let tr = |e: (f64, f64)| e.0 + (nf - 1.0) * e.1;
    let lhs1 = metric.integrate_top(|_, l| {
        let (x, y) = eig(alpha, l);
        nf * l.to_fs(x, y).wedge(&l.omega().pow(n - 1, n), n).top()
    });
    let rhs1 = metric.integrate_top(|_, l| tr(eig(alpha, l)) * l.omega().pow(n, n).top());
    let first = (lhs1 - rhs1).abs() / (1.0 + rhs1.abs());
    if n < 2 {
        return (first, None);
    }
    let lhs2 = metric.integrate_top(|_, l| {
        let (p, q) = (eig(alpha, l), eig(beta, l));
        nf * (nf - 1.0)
            * l.to_fs(p.0, p.1)
                .wedge(&l.to_fs(q.0, q.1), n)
                .wedge(&l.omega().pow(n - 2, n), n)
                .top()
    });
    let rhs2 = metric.integrate_top(|_, l| {
        let (p, q) = (eig(alpha, l), eig(beta, l));
        let inner = p.0 * q.0 + (nf - 1.0) * p.1 * q.1;
        (tr(p) * tr(q) - inner) * l.omega().pow(n, n).top()
    });
    (first, Some((lhs2 - rhs2).abs() / (1.0 + rhs2.abs())))
}

/// Central difference at steps h and h/2 combined by one Richardson level.
pub fn richardson_first(f: impl Fn(f64) -> Result<f64>, h: f64) -> Result<f64> {
    let d = |h: f64| -> Result<f64> { Ok((f(h)? - f(-h)?) / (2.0 * h)) };
    Ok((4.0 * d(0.5 * h)? - d(h)?) / 3.0)
}

/// Second central difference at steps h and h/2 with one Richardson level.
pub fn richardson_second(f: impl Fn(f64) -> Result<f64>, h: f64) -> Result<f64> {
    let f0 = f(0.0)?;
    let d = |h: f64| -> Result<f64> { Ok((f(h)? - 2.0 * f0 + f(-h)?) / (h * h)) };
    Ok((4.0 * d(0.5 * h)? - d(h)?) / 3.0)
}

/// Individual terms of the second variation of S_2, in display order.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondVariationTerms {
    pub terms: [f64; 9],
}

impl SecondVariationTerms {
    pub fn total(&self) -> f64 {
        self.terms.iter().sum()
    }
}

/// i d f ^ dbar f in the Fubini-Study frame.
fn grad_form(l: &Local, f: &J) -> DForm {
    let s = l.s0();
    let d = f.deriv(1);
    DForm::one_one(s * (1.0 - s) * d * d, 0.0)
}

fn ddbar_fs(l: &Local, f: &J) -> DForm {
    let (r, s) = l.ddbar(f);
    l.to_fs(r.value(), s.value())
}

/// Second derivative at t = 0 of S_2[omega_{phi_t}, omega] for
/// phi_t = t psi_1 + (t^2/2) psi_2 relative to the metric `m`.
pub fn second_variation_terms(m: &RadialKahlerMetric, dot: &Profile, ddot: &Profile) -> SecondVariationTerms {
    let n = m.n();
    let mean = coefficient_mean(n, 2);
    let mut t = [0.0; 9];
    let vol_term = |f: &dyn Fn(&Local) -> f64| m.integrate_with(|l| f(l));
    t[0] = vol_term(&|l| {
        let q = ddot.value(l.s0());
        q * (mean + l.lap(&l.scal).value() / 6.0 - l.quad().value() / 24.0)
    });
    t[1] = vol_term(&|l| {
        let p = dot.eval(&l.s);
        mean * p.value() * l.lap(&p).value()
    });
    t[2] = m.integrate_top(|_, l| {
        let lp = l.lap(&dot.eval(&l.s));
        let w = l.omega().pow(n - 1, n).scale(1.0 / factorial(n - 1));
        grad_form(l, &lp).wedge(&w, n).top() / 6.0
    });
    if n >= 2 {
        t[3] = m.integrate_top(|_, l| {
            let p = dot.eval(&l.s);
            let w = l.omega().pow(n - 2, n).scale(1.0 / factorial(n - 2));
            -grad_form(l, &p).wedge(&ddbar_fs(l, &l.scal), n).wedge(&w, n).top() / 6.0
        });
    }
    t[4] = vol_term(&|l| {
        let lp = l.lap(&dot.eval(&l.s)).value();
        0.25 * lp * lp * l.scal.value()
    });
    if n >= 3 {
        t[5] = m.integrate_top(|_, l| {
            let g = grad_form(l, &dot.eval(&l.s));
            let r = l.ric_form();
            let w = l.omega().pow(n - 3, n).scale(1.0 / factorial(n - 3));
            g.wedge(&r.wedge(&r, n), n).wedge(&w, n).top() / 8.0
        });
        t[6] = m.integrate_top(|_, l| {
            let g = grad_form(l, &dot.eval(&l.s));
            let tensor = l.tensor();
            let (mp, mu) = (l.mp.value(), l.mu.value());
            // Tr(R^2) with R the curvature endomorphism: minus tr(Theta ^ Theta)
            let tr = DForm {
                deg: 2,
                w: -tensor.trace_square_pair(0, 1) * mp * mu,
                o: -tensor.trace_square_pair(1, 2) * mu * mu,
            };
            let w = l.omega().pow(n - 3, n).scale(1.0 / factorial(n - 3));
            g.wedge(&tr, n).wedge(&w, n).top() / 24.0
        });
    }
    t[7] = vol_term(&|l| {
        let p = dot.eval(&l.s);
        -0.5 * l.lap(&p).value() * l.inner(l.ddbar(&p), (l.ric_rad, l.ric_sph)).value()
    });
    t[8] = vol_term(&|l| {
        let (br, bs) = l.ddbar(&dot.eval(&l.s));
        let beta = [br.value(), bs.value(), bs.value()];
        let tensor = l.tensor();
        let mut v = 0.0;
        for p in 0..n {
            for r in 0..n {
                v += tensor.pair(p, r) * beta[p] * beta[r];
            }
        }
        v / 12.0
    });
    SecondVariationTerms { terms: t }
}

/// Second variation of S_2 by the closed formula and by finite differences
/// of the path-route S_2 (step [`SECOND_FD_STEP`], one Richardson level).
pub fn second_variation_s2(m: &RadialKahlerMetric, dot: &Profile, ddot: &Profile) -> Result<VariationCheck> {
    let formula = second_variation_terms(m, dot, ddot).total();
    let s = |t: f64| -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        let step = dot.combine(t, ddot, 0.5 * t * t);
        let p = m.potential.along(&step, 1.0);
        let mt = build_metric_with(&p, &m.rule, m.conv).map_err(|e| match e {
            Error::NonPositiveMetric { .. } => Error::PathLeavesCone { t },
            other => other,
        })?;
        Ok(s_j(&mt, m, 2)?.value)
    };
    let fd = richardson_second(s, SECOND_FD_STEP)?;
    Ok(VariationCheck::new(fd, formula))
}

/// |psi_1 . gamma(psi_2) - psi_2 . gamma(psi_1)| for gamma = gamma^(2), each
/// directional derivative by Richardson-extrapolated central differences.
pub fn gamma2_defect(m: &RadialKahlerMetric, d1: &Profile, d2: &Profile) -> Result<f64> {
    let deriv = |a: &Profile, b: &Profile| {
        richardson_first(
            |t| {
                let mt = moved(m, m.potential.along(a, t))?;
                gamma(2, &mt, b)
            },
            SECOND_FD_STEP,
        )
    };
    Ok((deriv(d1, d2)? - deriv(d2, d1)?).abs())
}
