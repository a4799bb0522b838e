//! Invariant differential forms on radial metrics and invariant polynomials
//! of the curvature.
//!
//! Every U(n)-invariant (p,p)-form is diagonal in the frame adapted to the
//! radial direction (index 0) and the n-1 spherical directions. Such a form
//! is fixed by two numbers: the coefficient of basis products that contain
//! the radial direction, and the coefficient of those that do not.

/// An invariant (deg, deg)-form: `w` multiplies products containing the
/// radial direction, `o` those without it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DForm {
    pub deg: usize,
    pub w: f64,
    pub o: f64,
}

fn choose(n: isize, k: isize) -> f64 {
    if k < 0 || n < 0 || k > n {
        return 0.0;
    }
    crate::quadrature::binomial(n as usize, k as usize)
}

impl DForm {
    pub fn scalar(c: f64) -> Self {
        Self { deg: 0, w: 0.0, o: c }
    }

    pub fn one_one(rad: f64, sph: f64) -> Self {
        Self {
            deg: 1,
            w: rad,
            o: sph,
        }
    }

    pub fn zero(deg: usize) -> Self {
        Self { deg, w: 0.0, o: 0.0 }
    }

    pub fn wedge(&self, b: &DForm, n: usize) -> DForm {
        let d = self.deg + b.deg;
        if d > n {
            return DForm::zero(d);
        }
        let (d, d1) = (d as isize, self.deg as isize);
        let w = choose(d - 1, d1 - 1) * self.w * b.o + choose(d - 1, d1) * self.o * b.w;
        // no product of d spherical directions exists when d > n - 1
        let o = if (d as usize) < n {
            choose(d, d1) * self.o * b.o
        } else {
            0.0
        };
        DForm { deg: d as usize, w, o }
    }

    pub fn pow(&self, p: usize, n: usize) -> DForm {
        let mut out = DForm::scalar(1.0);
        for _ in 0..p {
            out = out.wedge(self, n);
        }
        out
    }

    pub fn add(&self, b: &DForm) -> DForm {
        debug_assert_eq!(self.deg, b.deg);
        DForm {
            deg: self.deg,
            w: self.w + b.w,
            o: self.o + b.o,
        }
    }

    pub fn scale(&self, a: f64) -> DForm {
        DForm {
            deg: self.deg,
            w: a * self.w,
            o: a * self.o,
        }
    }

    /// Coefficient of the volume product (meaningful for deg = n).
    pub fn top(&self) -> f64 {
        self.w
    }
}

/// Sum over s = 0..=p of a^s b^(p-s).
pub fn mixed_powers_sum(a: &DForm, b: &DForm, p: usize, n: usize) -> DForm {
    (0..=p).fold(DForm::zero(p), |acc, s| {
        acc.add(&a.pow(s, n).wedge(&b.pow(p - s, n), n))
    })
}

/// Chern curvature tensor R_{i jbar k lbar} of a radial metric in a unitary
/// frame, index 0 radial. Built from the three sectional-type scalars
/// `a = R_{00 00}`, `b = R_{00 aa}` and `d`, with R on spherical indices equal
/// to d (delta_ij delta_kl + delta_il delta_kj).
#[derive(Clone, Debug)]
pub struct CurvatureTensor {
    pub n: usize,
    pub r: [[[[f64; 3]; 3]; 3]; 3],
}

impl CurvatureTensor {
    pub fn radial(n: usize, a: f64, b: f64, d: f64) -> Self {
        let mut r = [[[[0.0; 3]; 3]; 3]; 3];
        let dl = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let zeros = [i, j, k, l].iter().filter(|&&x| x == 0).count();
                        r[i][j][k][l] = match zeros {
                            4 => a,
                            2 => {
                                let hit = (i == 0 && j == 0 && k == l)
                                    || (k == 0 && l == 0 && i == j)
                                    || (i == 0 && l == 0 && k == j)
                                    || (k == 0 && j == 0 && i == l);
                                if hit {
                                    b
                                } else {
                                    0.0
                                }
                            }
                            0 => d * (dl(i, j) * dl(k, l) + dl(i, l) * dl(k, j)),
                            _ => 0.0,
                        };
                    }
                }
            }
        }
        Self { n, r }
    }

    pub fn ricci(&self, i: usize) -> f64 {
        (0..self.n).map(|k| self.r[i][i][k][k]).sum()
    }

    pub fn scalar(&self) -> f64 {
        (0..self.n).map(|i| self.ricci(i)).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        let n = self.n;
        let mut t = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        t += self.r[i][j][k][l].powi(2);
                    }
                }
            }
        }
        t
    }

    pub fn ricci_norm_sq(&self) -> f64 {
        let n = self.n;
        let mut t = 0.0;
        for i in 0..n {
            for j in 0..n {
                let rij: f64 = (0..n).map(|k| self.r[i][j][k][k]).sum();
                t += rij * rij;
            }
        }
        t
    }

    /// R_{p pbar r rbar}
    pub fn pair(&self, p: usize, r: usize) -> f64 {
        self.r[p][p][r][r]
    }

    /// Coefficient of the (2,2)-form tr(Theta ^ Theta) on the pair {a, b}.
    pub fn trace_square_pair(&self, a: usize, b: usize) -> f64 {
        let n = self.n;
        let mut t = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = &self.r[i][j];
                let y = &self.r[j][i];
                t += x[a][a] * y[b][b] + x[b][b] * y[a][a] - x[a][b] * y[b][a] - x[b][a] * y[a][b];
            }
        }
        t
    }

    /// Coefficient of c_2 = sum_{i<j} (Theta_ii ^ Theta_jj - Theta_ij ^ Theta_ji)
    /// on the pair {a, b}.
    pub fn c2_pair(&self, a: usize, b: usize) -> f64 {
        let n = self.n;
        let prod = |x: &[[f64; 3]; 3], y: &[[f64; 3]; 3]| {
            x[a][a] * y[b][b] + x[b][b] * y[a][a] - x[a][b] * y[b][a] - x[b][a] * y[a][b]
        };
        let mut t = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                t += prod(&self.r[i][i], &self.r[j][j]) - prod(&self.r[i][j], &self.r[j][i]);
            }
        }
        t
    }
}

/// Invariant polynomials of the curvature, as (1,1) and (2,2) coefficients
/// in the unitary frame of the metric itself.
#[derive(Clone, Debug)]
pub struct InvariantPolys {
    pub tensor: CurvatureTensor,
}

impl InvariantPolys {
    pub fn new(tensor: CurvatureTensor) -> Self {
        Self { tensor }
    }

    /// c_1 = ch_1 = tr Theta, diagonal entry i.
    pub fn c1(&self, i: usize) -> f64 {
        self.tensor.ricci(i)
    }

    pub fn td1(&self, i: usize) -> f64 {
        0.5 * self.c1(i)
    }

    pub fn c1_sq_pair(&self, a: usize, b: usize) -> f64 {
        2.0 * self.c1(a) * self.c1(b)
    }

    pub fn c2_pair(&self, a: usize, b: usize) -> f64 {
        self.tensor.c2_pair(a, b)
    }

    /// ch_2 = tr(Theta^2) / 2
    pub fn ch2_pair(&self, a: usize, b: usize) -> f64 {
        0.5 * self.tensor.trace_square_pair(a, b)
    }

    /// Td_2 through traces: (3 (tr Theta)^2 - tr Theta^2) / 24.
    pub fn td2_pair(&self, a: usize, b: usize) -> f64 {
        (3.0 * self.c1_sq_pair(a, b) - self.tensor.trace_square_pair(a, b)) / 24.0
    }

    /// Td_2 through Chern classes: (c_1^2 + c_2) / 12.
    pub fn td2_pair_chern(&self, a: usize, b: usize) -> f64 {
        (self.c1_sq_pair(a, b) + self.c2_pair(a, b)) / 12.0
    }

    /// Diagonal (1,1) coefficients of 2 Td_2(E, Theta) for a diagonal
    /// endomorphism E with entries `e`.
    pub fn td2_polarized(&self, e: &[f64], j: usize) -> f64 {
        let n = self.tensor.n;
        let tr_e: f64 = e[..n].iter().sum();
        let mixed: f64 = (0..n).map(|q| e[q] * self.tensor.pair(q, j)).sum();
        (6.0 * tr_e * self.c1(j) - 2.0 * mixed) / 24.0
    }
}
