//! Truncated Taylor series in one variable.
//!
//! A `Jet<N>` holds the coefficients `c[i]` of `f(s0 + e) = sum c[i] e^i`
//! for `i < N`. Arithmetic propagates the truncation exactly, so a profile
//! evaluated on `Jet::var(s0)` yields all derivatives at `s0` up to order `N - 1`
//! without any differencing.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<const N: usize> {
    pub c: [f64; N],
}

impl<const N: usize> Jet<N> {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = v;
        Self { c }
    }

    /// The identity function expanded at `s0`.
    pub fn var(s0: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = s0;
        if N > 1 {
            c[1] = 1.0;
        }
        Self { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// k-th derivative at the expansion point.
    pub fn deriv(&self, k: usize) -> f64 {
        let mut f = 1.0;
        for i in 2..=k {
            f *= i as f64;
        }
        self.c[k] * f
    }

    /// Derivative as a jet (the top coefficient is lost).
    pub fn d(&self) -> Self {
        let mut c = [0.0; N];
        for i in 0..N - 1 {
            c[i] = (i + 1) as f64 * self.c[i + 1];
        }
        Self { c }
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut c = self.c;
        c.iter_mut().for_each(|x| *x *= a);
        Self { c }
    }

    pub fn recip(&self) -> Self {
        Self::constant(1.0) / *self
    }

    pub fn ln(&self) -> Self {
        let b = &self.c;
        let mut l = [0.0; N];
        l[0] = b[0].ln();
        for i in 1..N {
            let mut acc = b[i];
            for j in 1..i {
                acc -= (j as f64 / i as f64) * l[j] * b[i - j];
            }
            l[i] = acc / b[0];
        }
        Self { c: l }
    }

    pub fn exp(&self) -> Self {
        let a = &self.c;
        let mut e = [0.0; N];
        e[0] = a[0].exp();
        for i in 1..N {
            let mut acc = 0.0;
            for j in 1..=i {
                acc += j as f64 * a[j] * e[i - j];
            }
            e[i] = acc / i as f64;
        }
        Self { c: e }
    }

    pub fn powi(&self, p: u32) -> Self {
        let mut out = Self::constant(1.0);
        for _ in 0..p {
            out = out * *self;
        }
        out
    }

    /// Polynomial `sum coeffs[i] x^i` evaluated by Horner's rule.
    pub fn poly(coeffs: &[f64], x: &Self) -> Self {
        let mut acc = Self::constant(0.0);
        for &a in coeffs.iter().rev() {
            acc = acc * *x + a;
        }
        acc
    }

    /// Lower-order truncation.
    pub fn truncate<const M: usize>(&self) -> Jet<M> {
        let mut c = [0.0; M];
        for i in 0..M.min(N) {
            c[i] = self.c[i];
        }
        Jet { c }
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut c = self.c;
        for i in 0..N {
            c[i] += o.c[i];
        }
        Self { c }
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut c = self.c;
        for i in 0..N {
            c[i] -= o.c[i];
        }
        Self { c }
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut c = [0.0; N];
        for i in 0..N {
            if self.c[i] == 0.0 {
                continue;
            }
            for j in 0..N - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Self { c }
    }
}

impl<const N: usize> Div for Jet<N> {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let mut q = [0.0; N];
        for i in 0..N {
            let mut acc = self.c[i];
            for j in 1..=i {
                acc -= b.c[j] * q[i - j];
            }
            q[i] = acc / b.c[0];
        }
        Self { c: q }
    }
}

impl<const N: usize> Add<f64> for Jet<N> {
    type Output = Self;
    fn add(mut self, a: f64) -> Self {
        self.c[0] += a;
        self
    }
}

impl<const N: usize> Sub<f64> for Jet<N> {
    type Output = Self;
    fn sub(mut self, a: f64) -> Self {
        self.c[0] -= a;
        self
    }
}

impl<const N: usize> Mul<f64> for Jet<N> {
    type Output = Self;
    fn mul(self, a: f64) -> Self {
        self.scale(a)
    }
}

impl<const N: usize> Div<f64> for Jet<N> {
    type Output = Self;
    fn div(self, a: f64) -> Self {
        self.scale(1.0 / a)
    }
}

impl<const N: usize> Add<Jet<N>> for f64 {
    type Output = Jet<N>;
    fn add(self, j: Jet<N>) -> Jet<N> {
        j + self
    }
}

impl<const N: usize> Sub<Jet<N>> for f64 {
    type Output = Jet<N>;
    fn sub(self, j: Jet<N>) -> Jet<N> {
        -j + self
    }
}

impl<const N: usize> Mul<Jet<N>> for f64 {
    type Output = Jet<N>;
    fn mul(self, j: Jet<N>) -> Jet<N> {
        j.scale(self)
    }
}

impl<const N: usize> Div<Jet<N>> for f64 {
    type Output = Jet<N>;
    fn div(self, j: Jet<N>) -> Jet<N> {
        Jet::constant(self) / j
    }
}
