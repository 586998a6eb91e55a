//! Exact algebra on real 2x2 matrices.
//!
//! Everything the continuum model needs reduces to symmetric 2x2 matrices: the
//! generator `A0`, its exponential, the loss matrix `T`, the vacuum sum `X` and
//! the detection matrix `P`. A symmetric 2x2 matrix splits as `m·I + D` with
//! `D` traceless and `D² = ξ²·I`, which gives the exponential in closed form.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];

/// Real symmetric 2x2 matrix `[[a11, a12], [a12, a22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymMat2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl SymMat2 {
    pub const ZERO: SymMat2 = SymMat2 { a11: 0.0, a12: 0.0, a22: 0.0 };
    pub const IDENTITY: SymMat2 = SymMat2 { a11: 1.0, a12: 0.0, a22: 1.0 };

    pub const fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Self { a11, a12, a22 }
    }

    pub const fn diag(d1: f64, d2: f64) -> Self {
        Self { a11: d1, a12: 0.0, a22: d2 }
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(k * self.a11, k * self.a12, k * self.a22)
    }

    pub fn max_abs(&self) -> f64 {
        self.a11.abs().max(self.a12.abs()).max(self.a22.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a22.is_finite()
    }

    pub fn to_mat2(self) -> Mat2 {
        Mat2::new(self.a11, self.a12, self.a12, self.a22)
    }

    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        [self.a11 * v[0] + self.a12 * v[1], self.a12 * v[0] + self.a22 * v[1]]
    }

    /// `vᵀ·self·v`
    pub fn quad_form(&self, v: Vec2) -> f64 {
        self.a11 * v[0] * v[0] + 2.0 * self.a12 * v[0] * v[1] + self.a22 * v[1] * v[1]
    }

    /// `self·m·self`, symmetric whenever `m` is.
    pub fn congruence(&self, m: &SymMat2) -> SymMat2 {
        let p = self.to_mat2() * m.to_mat2() * self.to_mat2();
        // average the off-diagonal pair so the result is symmetric to the last bit
        SymMat2::new(p.a11, 0.5 * (p.a12 + p.a21), p.a22)
    }

    /// Mean-and-deviator split `m·I + D` with `D` traceless.
    ///
    /// Returns `(m, D, ξ)` where `ξ = √(a12² + ((a11 − a22)/2)²)` so that `D² = ξ²·I`.
    pub fn split(&self) -> (f64, SymMat2, f64) {
        let m = 0.5 * (self.a11 + self.a22);
        let h = 0.5 * (self.a11 - self.a22);
        let xi = self.a12.hypot(h);
        (m, SymMat2::new(h, self.a12, -h), xi)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let (m, _, xi) = self.split();
        (m - xi, m + xi)
    }
}

impl Add for SymMat2 {
    type Output = SymMat2;
    fn add(self, o: SymMat2) -> SymMat2 {
        SymMat2::new(self.a11 + o.a11, self.a12 + o.a12, self.a22 + o.a22)
    }
}

impl Sub for SymMat2 {
    type Output = SymMat2;
    fn sub(self, o: SymMat2) -> SymMat2 {
        SymMat2::new(self.a11 - o.a11, self.a12 - o.a12, self.a22 - o.a22)
    }
}

impl Neg for SymMat2 {
    type Output = SymMat2;
    fn neg(self) -> SymMat2 {
        self.scale(-1.0)
    }
}

/// General real 2x2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a11: 1.0, a12: 0.0, a21: 0.0, a22: 1.0 };

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self { a11, a12, a21, a22 }
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.a11, self.a21, self.a12, self.a22)
    }

    pub fn col(&self, j: usize) -> Vec2 {
        match j {
            0 => [self.a11, self.a21],
            _ => [self.a12, self.a22],
        }
    }

    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        [self.a11 * v[0] + self.a12 * v[1], self.a21 * v[0] + self.a22 * v[1]]
    }

    /// Row vector times matrix, `uᵀ·self`.
    pub fn vec_mul(&self, u: Vec2) -> Vec2 {
        [u[0] * self.a11 + u[1] * self.a21, u[0] * self.a12 + u[1] * self.a22]
    }

    /// `self^n` by binary powering.
    pub fn pow(&self, mut n: u64) -> Mat2 {
        let mut base = *self;
        let mut acc = Mat2::IDENTITY;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            n >>= 1;
        }
        acc
    }

    pub fn max_abs_diff(&self, o: &Mat2) -> f64 {
        [self.a11 - o.a11, self.a12 - o.a12, self.a21 - o.a21, self.a22 - o.a22]
            .iter()
            .fold(0.0f64, |acc, d| acc.max(d.abs()))
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 * o.a11 + self.a12 * o.a21,
            self.a11 * o.a12 + self.a12 * o.a22,
            self.a21 * o.a11 + self.a22 * o.a21,
            self.a21 * o.a12 + self.a22 * o.a22,
        )
    }
}

/// `sinh(x)/x`, equal to 1 at the origin.
pub fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 + x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sinh() / x
    }
}

/// `(eˣ − 1)/x`, equal to 1 at the origin.
fn expm1_ratio(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.exp_m1() / x
    }
}

/// Exact exponential of a symmetric 2x2 matrix.
pub fn sym_exp(a: &SymMat2) -> SymMat2 {
    let (m, d, xi) = a.split();
    let em = m.exp();
    let c = xi.cosh();
    let k = sinhc(xi);
    SymMat2::new(em * (c + k * d.a11), em * k * d.a12, em * (c + k * d.a22))
}

/// Solves `A·X + X·A = R` for symmetric `X`.
///
/// The symmetric unknown has three free entries, so the matrix equation
/// reduces to a 3x3 linear system whose determinant is `4·tr(A)·det(A)`.
/// It is singular exactly when two eigenvalues of `A` (possibly the same one
/// twice) sum to zero. A singular system with `R = 0` returns `X = 0`.
pub fn sylvester_solve(a: &SymMat2, r: &SymMat2) -> Result<SymMat2> {
    let (p, q, d) = (a.a11, a.a12, a.a22);
    let mut m = [
        [2.0 * p, 2.0 * q, 0.0],
        [q, p + d, q],
        [0.0, 2.0 * q, 2.0 * d],
    ];
    let mut rhs = [r.a11, r.a12, r.a22];

    let scale = a.max_abs();
    let mut det = 1.0;
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap_or(col);
        if pivot != col {
            m.swap(pivot, col);
            rhs.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        if m[col][col] == 0.0 {
            break;
        }
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }

    if !(det.abs() >= 1e-14 * scale.powi(3)) || det == 0.0 {
        if r.max_abs() == 0.0 {
            return Ok(SymMat2::ZERO);
        }
        return Err(Error::SingularSystem { det });
    }

    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (rhs[row] - tail) / m[row][row];
    }
    Ok(SymMat2::new(x[0], x[1], x[2]))
}

/// Residual `A·X + X·A − R`, computed entrywise.
pub fn sylvester_residual(a: &SymMat2, x: &SymMat2, r: &SymMat2) -> SymMat2 {
    let ax = a.to_mat2() * x.to_mat2();
    let s = ax + ax.transpose();
    SymMat2::new(s.a11 - r.a11, s.a12 - r.a12, s.a22 - r.a22)
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a11 + o.a11, self.a12 + o.a12, self.a21 + o.a21, self.a22 + o.a22)
    }
}

/// `∫₀¹ e^{uA}·T·e^{uA} du` for symmetric `A` and `T`, in closed form.
///
/// When the Sylvester system for `A` is nonsingular this equals the solution
/// of `A·X + X·A = e^{A}·T·e^{A} − T`; unlike the linear solve it stays well
/// defined when an eigenvalue of `A` vanishes.
pub fn exp_congruence_integral(a: &SymMat2, t: &SymMat2) -> SymMat2 {
    let (m, d, xi) = a.split();
    let base = expm1_ratio(2.0 * m);
    if xi == 0.0 {
        return t.scale(base);
    }
    let plus = expm1_ratio(2.0 * (m + xi));
    let minus = expm1_ratio(2.0 * (m - xi));
    let mean = 0.5 * (plus + minus);
    let i_cc = 0.5 * (base + mean);
    let i_cs = 0.25 * (plus - minus);
    let i_ss = 0.5 * (mean - base);

    let u = d.scale(1.0 / xi);
    let ut = u.to_mat2() * t.to_mat2();
    let cross = ut + ut.transpose();
    let sandwich = u.congruence(t);
    SymMat2::new(
        i_cc * t.a11 + i_cs * cross.a11 + i_ss * sandwich.a11,
        i_cc * t.a12 + i_cs * 0.5 * (cross.a12 + cross.a21) + i_ss * sandwich.a12,
        i_cc * t.a22 + i_cs * cross.a22 + i_ss * sandwich.a22,
    )
}
