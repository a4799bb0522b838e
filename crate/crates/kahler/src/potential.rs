//! Radial Kahler potentials as functions of s = |z|^2 / (1 + |z|^2).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;

pub const DEFAULT_MAX_DEGREE: usize = 12;

/// A smooth function of s on [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "basis")]
pub enum Profile {
    /// sum coeffs[i] s^i
    #[serde(rename = "s-poly")]
    Poly { coeffs: Vec<f64> },
    /// (1/k) ln sum_p exp(log_weights[p]) s^p (1-s)^(k-p), the potential of
    /// a diagonal Hermitian form on degree-k sections.
    #[serde(rename = "fs-bergman")]
    Bergman { k: usize, log_weights: Vec<f64> },
    /// Potential of the pullback of `base` by the dilation z -> e^(t/2) z.
    #[serde(rename = "pullback")]
    Pullback { t: f64, base: Box<Profile> },
    #[serde(rename = "sum")]
    Sum { terms: Vec<(f64, Profile)> },
}

impl Profile {
    pub fn zero() -> Self {
        Profile::Poly { coeffs: vec![] }
    }

    pub fn constant(c: f64) -> Self {
        Profile::Poly { coeffs: vec![c] }
    }

    pub fn poly(coeffs: &[f64]) -> Self {
        Profile::Poly {
            coeffs: coeffs.to_vec(),
        }
    }

    /// Dilation pullback of the Fubini-Study reference.
    pub fn dilation(t: f64) -> Self {
        Profile::Pullback {
            t,
            base: Box::new(Profile::zero()),
        }
    }

    pub fn eval<const N: usize>(&self, s: &Jet<N>) -> Jet<N> {
        match self {
            Profile::Poly { coeffs } => Jet::poly(coeffs, s),
            Profile::Bergman { k, log_weights } => bergman_eval(*k, log_weights, s),
            Profile::Pullback { t, base } => {
                let q = (1.0 - *s) + *s * t.exp();
                let st = *s * t.exp() / q;
                q.ln() + base.eval(&st)
            }
            Profile::Sum { terms } => terms
                .iter()
                .fold(Jet::constant(0.0), |acc, (a, p)| acc + p.eval(s) * *a),
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        if let Profile::Bergman { k, log_weights } = self {
            // the jet evaluation takes ln s and ln(1-s)
            if s == 0.0 {
                return log_weights[0] / *k as f64;
            }
            if s == 1.0 {
                return log_weights[*k] / *k as f64;
            }
        }
        self.eval::<1>(&Jet::var(s)).value()
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Profile::Poly { coeffs } => coeffs.iter().all(|&c| c == 0.0),
            _ => false,
        }
    }

    pub fn degree(&self) -> Option<usize> {
        match self {
            Profile::Poly { coeffs } => Some(coeffs.len().saturating_sub(1)),
            _ => None,
        }
    }

    /// a * self + b * other, kept polynomial when both are.
    pub fn combine(&self, a: f64, other: &Profile, b: f64) -> Profile {
        if let (Profile::Poly { coeffs: p }, Profile::Poly { coeffs: q }) = (self, other) {
            let n = p.len().max(q.len());
            let coeffs = (0..n)
                .map(|i| a * p.get(i).copied().unwrap_or(0.0) + b * q.get(i).copied().unwrap_or(0.0))
                .collect();
            return Profile::Poly { coeffs };
        }
        Profile::Sum {
            terms: vec![(a, self.clone()), (b, other.clone())],
        }
    }

    pub fn shifted(&self, c: f64) -> Profile {
        self.combine(1.0, &Profile::constant(c), 1.0)
    }

    pub fn scaled(&self, a: f64) -> Profile {
        self.combine(a, &Profile::zero(), 0.0)
    }
}

fn bergman_eval<const N: usize>(k: usize, lw: &[f64], s: &Jet<N>) -> Jet<N> {
    let ls = s.ln();
    let l1 = (1.0 - *s).ln();
    let lead = |p: usize| lw[p] + p as f64 * ls.c[0] + (k - p) as f64 * l1.c[0];
    let m = (0..=k).map(lead).fold(f64::NEG_INFINITY, f64::max);
    // exp(L_p - m) = w_p s^p (1-s)^(k-p) e^{-m}; the non-constant part of
    // L_p is p*(ls - ls0) + (k-p)*(l1 - l10), so expand those once.
    let mut dls = ls;
    dls.c[0] = 0.0;
    let mut dl1 = l1;
    dl1.c[0] = 0.0;
    let mut sum = Jet::constant(0.0);
    for p in 0..=k {
        let w = (lead(p) - m).exp();
        if w < 1e-300 {
            continue;
        }
        let e = (dls * p as f64 + dl1 * (k - p) as f64).exp();
        sum = sum + e * w;
    }
    (sum.ln() + m) / k as f64
}

/// A potential on CP^n together with its dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialPotential {
    pub n: usize,
    #[serde(flatten)]
    pub profile: Profile,
}

impl RadialPotential {
    pub fn new(n: usize, profile: Profile) -> Result<Self> {
        Self::with_max_degree(n, profile, DEFAULT_MAX_DEGREE)
    }

    pub fn with_max_degree(n: usize, profile: Profile, max: usize) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::InvalidDimension(n));
        }
        if let Some(degree) = profile.degree() {
            if degree > max {
                return Err(Error::DegreeTooHigh { degree, max });
            }
        }
        Ok(Self { n, profile })
    }

    pub fn poly(n: usize, coeffs: &[f64]) -> Result<Self> {
        Self::new(n, Profile::poly(coeffs))
    }

    pub fn zero(n: usize) -> Self {
        Self {
            n,
            profile: Profile::zero(),
        }
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self {
            n: self.n,
            profile: self.profile.shifted(c),
        }
    }

    /// self + t * direction
    pub fn along(&self, direction: &Profile, t: f64) -> Self {
        Self {
            n: self.n,
            profile: self.profile.combine(1.0, direction, t),
        }
    }

    /// (1 - t) * self + t * other
    pub fn lerp(&self, other: &RadialPotential, t: f64) -> Self {
        Self {
            n: self.n,
            profile: self.profile.combine(1.0 - t, &other.profile, t),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip_is_exact() {
        let p = RadialPotential::poly(2, &[0.1, -0.30000000000000004, 1.0 / 3.0]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"basis\":\"s-poly\""));
        let back: RadialPotential = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn parse_documented_form() {
        let p: RadialPotential =
            serde_json::from_str(r#"{"n": 1, "basis": "s-poly", "coeffs": [0.0, 0.2]}"#).unwrap();
        assert_eq!(p.n, 1);
        assert_eq!(p.profile, Profile::poly(&[0.0, 0.2]));
    }

    #[test]
    fn degree_and_dimension_bounds() {
        assert!(matches!(
            RadialPotential::poly(1, &[0.0; 14]),
            Err(Error::DegreeTooHigh { degree: 13, max: 12 })
        ));
        assert!(matches!(
            RadialPotential::poly(4, &[0.0]),
            Err(Error::InvalidDimension(4))
        ));
    }

    #[test]
    fn bergman_profile_of_binomial_weights_vanishes() {
        // sum C(k,p) s^p (1-s)^(k-p) = 1
        let k = 7;
        let lw: Vec<f64> = (0..=k).map(|p| crate::quadrature::binomial(k, p).ln()).collect();
        let prof = Profile::Bergman { k, log_weights: lw };
        let v = prof.eval::<6>(&Jet::var(0.37));
        for c in v.c {
            assert!(c.abs() < 1e-14);
        }
    }

    #[test]
    fn dilation_profile_closed_form() {
        let t = 0.4f64;
        let p = Profile::dilation(t);
        let s = 0.3;
        let want = (1.0 - s + t.exp() * s).ln();
        assert!((p.value(s) - want).abs() < 1e-15);
    }

    #[test]
    fn combine_stays_polynomial() {
        let a = Profile::poly(&[1.0, 2.0]);
        let b = Profile::poly(&[0.0, 0.0, 3.0]);
        assert_eq!(a.combine(2.0, &b, -1.0), Profile::poly(&[2.0, 4.0, -3.0]));
    }
}
