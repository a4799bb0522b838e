//! Quadrature rules on the radial interval and on CP^1, plus spectral
//! differentiation (Chebyshev series and Gauss-Legendre collocation).

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Extra nodes beyond `2k` demanded for degree-k Gram integrals.
pub const RESOLUTION_MARGIN: usize = 32;
pub const DEFAULT_RADIAL_ORDER: usize = 200;

/// Gauss-Legendre nodes and weights on (-1, 1), nodes ascending.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, p_prev) = legendre_pair(n, z);
            dp = n as f64 * (z * p - p_prev) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (p, p_prev) = legendre_pair(n, z);
                dp = n as f64 * (z * p - p_prev) / (z * z - 1.0);
                break;
            }
        }
        let wt = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wt;
        w[n - 1 - i] = wt;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_pair(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// Gauss-Legendre rule mapped to s in (0, 1).
#[derive(Debug)]
pub struct RadialQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    diff: OnceLock<Vec<f64>>,
}

impl Clone for RadialQuadrature {
    fn clone(&self) -> Self {
        Self {
            nodes: self.nodes.clone(),
            weights: self.weights.clone(),
            diff: OnceLock::new(),
        }
    }
}

impl PartialEq for RadialQuadrature {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.weights == other.weights
    }
}

pub fn radial_rule(order: usize) -> Result<RadialQuadrature> {
    if order < 16 {
        return Err(Error::Invalid(format!("radial rule order {order} < 16")));
    }
    let (x, w) = gauss_legendre(order);
    Ok(RadialQuadrature {
        nodes: x.iter().map(|&x| 0.5 * (1.0 + x)).collect(),
        weights: w.iter().map(|&w| 0.5 * w).collect(),
        diff: OnceLock::new(),
    })
}

impl RadialQuadrature {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&s, &w)| w * f(s)).sum()
    }

    pub fn integrate_values(&self, v: &[f64]) -> f64 {
        v.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    /// Resolution policy for degree-k Gram integrals.
    pub fn check_resolution(&self, k: usize) -> Result<()> {
        let required = 2 * k + RESOLUTION_MARGIN;
        if self.order() < required {
            return Err(Error::ResolutionTooLow(format!(
                "degree {k} needs {required} radial nodes, rule has {}",
                self.order()
            )));
        }
        Ok(())
    }

    /// Largest relative error of the rule on the beta integrals
    /// `int s^i (1-s)^(k-i) ds`, i = 0..=k.
    pub fn beta_defect(&self, k: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..=k {
            let exact = 1.0 / ((k + 1) as f64 * binomial(k, i));
            let got = self.integrate(|s| s.powi(i as i32) * (1.0 - s).powi((k - i) as i32));
            worst = worst.max((got / exact - 1.0).abs());
        }
        worst
    }

    /// Collocation derivative of values sampled on the nodes (exact for
    /// polynomials of degree below the order).
    pub fn differentiate_values(&self, v: &[f64]) -> Vec<f64> {
        let n = self.order();
        let d = self.diff.get_or_init(|| self.collocation_matrix());
        (0..n)
            .map(|i| (0..n).map(|j| d[i * n + j] * v[j]).sum())
            .collect()
    }

    fn collocation_matrix(&self) -> Vec<f64> {
        let n = self.order();
        let s = &self.nodes;
        // barycentric weights of Gauss-Legendre nodes
        let lam: Vec<f64> = (0..n)
            .map(|j| {
                let x = 2.0 * s[j] - 1.0;
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * ((1.0 - x * x) * 2.0 * self.weights[j]).sqrt()
            })
            .collect();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    let v = lam[j] / lam[i] / (s[i] - s[j]);
                    d[i * n + j] = v;
                    diag -= v;
                }
            }
            d[i * n + i] = diag;
        }
        d
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for j in 1..=k {
        c = c * (n - k + j) as f64 / j as f64;
    }
    c
}

/// ln(m!) for m = 0..=max.
pub fn ln_factorials(max: usize) -> Vec<f64> {
    let mut t = vec![0.0; max + 1];
    for m in 2..=max {
        t[m] = t[m - 1] + (m as f64).ln();
    }
    t
}

/// Exact angular factor of the monomial `z^alpha` on CP^n:
/// alpha! (n-1)! / (n-1+|alpha|)!.
pub fn angular_multiplicity(alpha: &[usize]) -> f64 {
    let n = alpha.len();
    let p: usize = alpha.iter().sum();
    let lf = ln_factorials(n + p);
    let num: f64 = alpha.iter().map(|&a| lf[a]).sum::<f64>() + lf[n - 1];
    (num - lf[n - 1 + p]).exp()
}

/// Product grid on CP^1: Gauss-Legendre in s times a uniform azimuth.
/// With these coordinates the Fubini-Study area form is `ds dphi`.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    pub s: Vec<f64>,
    pub s_weights: Vec<f64>,
    pub n_phi: usize,
}

pub fn sphere_grid(band_limit: usize) -> SphereGrid {
    sphere_grid_sized(band_limit + 1, 2 * band_limit + 2)
}

pub fn sphere_grid_sized(n_s: usize, n_phi: usize) -> SphereGrid {
    let (x, w) = gauss_legendre(n_s.max(2));
    SphereGrid {
        s: x.iter().map(|&x| 0.5 * (1.0 + x)).collect(),
        s_weights: w.iter().map(|&w| 0.5 * w).collect(),
        n_phi,
    }
}

impl SphereGrid {
    pub fn phi(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_phi as f64
    }

    pub fn len(&self) -> usize {
        self.s.len() * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values laid out row-major, index `i * n_phi + j` for node (s_i, phi_j).
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        for &s in &self.s {
            for j in 0..self.n_phi {
                v.push(f(s, self.phi(j)));
            }
        }
        v
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.s_weights[i] * 2.0 * PI / self.n_phi as f64
    }
}

/// Integral against the Fubini-Study area form of CP^1.
pub fn integrate_sphere(grid: &SphereGrid, field: &[f64]) -> Result<f64> {
    if field.len() != grid.len() {
        return Err(Error::Invalid(format!(
            "field has {} values, grid has {}",
            field.len(),
            grid.len()
        )));
    }
    let mut total = 0.0;
    for i in 0..grid.s.len() {
        let row: f64 = field[i * grid.n_phi..(i + 1) * grid.n_phi].iter().sum();
        total += grid.weight(i) * row;
    }
    Ok(total)
}

/// Associated Legendre function P_l^m(x) without the Condon-Shortley phase.
pub fn assoc_legendre(l: usize, m: usize, x: f64) -> f64 {
    if m > l {
        return 0.0;
    }
    let mut pmm = 1.0;
    let sx = ((1.0 - x) * (1.0 + x)).max(0.0).sqrt();
    let mut fact = 1.0;
    for _ in 0..m {
        pmm *= fact * sx;
        fact += 2.0;
    }
    if l == m {
        return pmm;
    }
    let mut pmmp1 = x * (2 * m + 1) as f64 * pmm;
    if l == m + 1 {
        return pmmp1;
    }
    let mut pll = 0.0;
    for ll in m + 2..=l {
        pll = (x * (2 * ll - 1) as f64 * pmmp1 - (ll + m - 1) as f64 * pmm) / (ll - m) as f64;
        pmm = pmmp1;
        pmmp1 = pll;
    }
    pll
}

/// Chebyshev series on s in [0, 1] (argument x = 2s - 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ChebProfile {
    pub coeffs: Vec<f64>,
}

pub const TAIL_THRESHOLD: f64 = 1e-10;

impl ChebProfile {
    /// Interpolate at `m` Chebyshev-Gauss points (all interior).
    pub fn from_fn(m: usize, f: impl Fn(f64) -> f64) -> Self {
        let vals: Vec<f64> = (0..m)
            .map(|j| {
                let x = (PI * (j as f64 + 0.5) / m as f64).cos();
                f(0.5 * (1.0 + x))
            })
            .collect();
        let coeffs = (0..m)
            .map(|i| {
                // reduce the angle exactly: cos(pi i (2j+1) / 2m)
                let sum: f64 = (0..m)
                    .map(|j| {
                        let r = (i * (2 * j + 1)) % (4 * m);
                        vals[j] * (PI * r as f64 / (2 * m) as f64).cos()
                    })
                    .sum();
                let c = 2.0 * sum / m as f64;
                if i == 0 {
                    0.5 * c
                } else {
                    c
                }
            })
            .collect();
        Self { coeffs }
    }

    pub fn eval(&self, s: f64) -> f64 {
        let x = 2.0 * s - 1.0;
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * x * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2 + self.coeffs.first().copied().unwrap_or(0.0)
    }

    /// Magnitude of the trailing eighth of the coefficients relative to the
    /// largest coefficient (or to 1 for small profiles).
    pub fn tail(&self) -> f64 {
        let m = self.coeffs.len();
        let scale = self.coeffs.iter().fold(1.0f64, |a, c| a.max(c.abs()));
        let start = m - (m / 8).max(2);
        self.coeffs[start..].iter().fold(0.0f64, |a, c| a.max(c.abs())) / scale
    }

    pub fn check_tail(&self, threshold: f64) -> Result<()> {
        let tail = self.tail();
        if tail > threshold {
            return Err(Error::TailTooLarge { tail, threshold });
        }
        Ok(())
    }
}

/// Spectral derivative d/ds. Fails if the input is not resolved.
pub fn differentiate(p: &ChebProfile) -> Result<ChebProfile> {
    p.check_tail(TAIL_THRESHOLD)?;
    // trailing coefficients at rounding level only amplify noise
    let scale = p.coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let m_full = p.coeffs.len();
    let m = p
        .coeffs
        .iter()
        .rposition(|c| c.abs() > 1e-14 * scale)
        .map_or(1, |i| i + 1);
    let mut d = vec![0.0; m_full];
    if m >= 2 {
        for j in (1..m).rev() {
            let next = if j + 1 < m { d[j + 1] } else { 0.0 };
            d[j - 1] = next + 2.0 * j as f64 * p.coeffs[j];
        }
        d[0] *= 0.5;
    }
    // chain rule dx/ds = 2
    d.iter_mut().for_each(|c| *c *= 2.0);
    Ok(ChebProfile { coeffs: d })
}
