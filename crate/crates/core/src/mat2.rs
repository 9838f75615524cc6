//! Complex 2×2 linear algebra.
//!
//! Everything the Floquet machinery needs from a 2×2 matrix lives here:
//! determinant and trace, eigenpairs from a cancellation-free quadratic
//! solve, operator and Frobenius norms, and the eigenvector-angle
//! functional [`gamma_of_matrix`].

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Column vector in ℂ².
pub type C2Vector = [Complex64; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative gap below which two eigenvalues are treated as coincident.
pub const DISTINCT_REL_TOL: f64 = 1e-10;

/// A complex 2×2 matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C2Matrix {
    pub a11: Complex64,
    pub a12: Complex64,
    pub a21: Complex64,
    pub a22: Complex64,
}

impl C2Matrix {
    pub const fn new(a11: Complex64, a12: Complex64, a21: Complex64, a22: Complex64) -> Self {
        Self { a11, a12, a21, a22 }
    }

    pub fn from_real(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self::new(a11.into(), a12.into(), a21.into(), a22.into())
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub fn diag(d1: Complex64, d2: Complex64) -> Self {
        Self::new(d1, ZERO, ZERO, d2)
    }

    /// Matrix with the given columns.
    pub fn from_columns(c1: C2Vector, c2: C2Vector) -> Self {
        Self::new(c1[0], c2[0], c1[1], c2[1])
    }

    pub fn column(&self, j: usize) -> C2Vector {
        match j {
            0 => [self.a11, self.a21],
            1 => [self.a12, self.a22],
            _ => panic!("column index {j} out of range for a 2x2 matrix"),
        }
    }

    pub fn det(&self) -> Complex64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> Complex64 {
        self.a11 + self.a22
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.a11, self.a21, self.a12, self.a22)
    }

    pub fn conj(&self) -> Self {
        Self::new(self.a11.conj(), self.a12.conj(), self.a21.conj(), self.a22.conj())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        self.conj().transpose()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }

    pub fn apply(&self, v: &C2Vector) -> C2Vector {
        [self.a11 * v[0] + self.a12 * v[1], self.a21 * v[0] + self.a22 * v[1]]
    }

    pub fn entries(&self) -> [Complex64; 4] {
        [self.a11, self.a12, self.a21, self.a22]
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `u vᵀ` (no conjugation).
    pub fn outer(u: &C2Vector, v: &C2Vector) -> Self {
        Self::new(u[0] * v[0], u[0] * v[1], u[1] * v[0], u[1] * v[1])
    }
}

impl Default for C2Matrix {
    fn default() -> Self {
        Self::identity()
    }
}

impl Mul for C2Matrix {
    type Output = C2Matrix;

    fn mul(self, b: C2Matrix) -> C2Matrix {
        C2Matrix::new(
            self.a11 * b.a11 + self.a12 * b.a21,
            self.a11 * b.a12 + self.a12 * b.a22,
            self.a21 * b.a11 + self.a22 * b.a21,
            self.a21 * b.a12 + self.a22 * b.a22,
        )
    }
}

impl Add for C2Matrix {
    type Output = C2Matrix;

    fn add(self, b: C2Matrix) -> C2Matrix {
        C2Matrix::new(self.a11 + b.a11, self.a12 + b.a12, self.a21 + b.a21, self.a22 + b.a22)
    }
}

impl Sub for C2Matrix {
    type Output = C2Matrix;

    fn sub(self, b: C2Matrix) -> C2Matrix {
        C2Matrix::new(self.a11 - b.a11, self.a12 - b.a12, self.a21 - b.a21, self.a22 - b.a22)
    }
}

impl Neg for C2Matrix {
    type Output = C2Matrix;

    fn neg(self) -> C2Matrix {
        self.scale_real(-1.0)
    }
}

/// The Pauli matrices σ₀ = 𝕀, σ₁, σ₂, σ₃.
pub mod pauli {
    use super::*;

    pub const SIGMA0: C2Matrix = C2Matrix::identity();
    pub const SIGMA1: C2Matrix = C2Matrix::new(ZERO, ONE, ONE, ZERO);
    pub const SIGMA2: C2Matrix = C2Matrix::new(ZERO, Complex64::new(0.0, -1.0), I, ZERO);
    pub const SIGMA3: C2Matrix = C2Matrix::new(ONE, ZERO, ZERO, Complex64::new(-1.0, 0.0));
}

/// Euclidean norm of a vector in ℂ².
pub fn vnorm(v: &C2Vector) -> f64 {
    v[0].norm().hypot(v[1].norm())
}

/// `det(u, v)` of the matrix with columns `u`, `v`.
pub fn det_cols(u: &C2Vector, v: &C2Vector) -> Complex64 {
    u[0] * v[1] - u[1] * v[0]
}

pub fn normalize(v: &C2Vector) -> C2Vector {
    let n = vnorm(v);
    [v[0] / n, v[1] / n]
}

/// Sine of the angle between the complex lines spanned by `u` and `v`.
///
/// Zero iff the vectors are parallel; insensitive to rescaling either one
/// by a nonzero complex factor.
pub fn projective_distance(u: &C2Vector, v: &C2Vector) -> f64 {
    let d = det_cols(u, v).norm();
    (d / (vnorm(u) * vnorm(v))).min(1.0)
}

/// Eigenvalues and eigenvectors of a 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair2 {
    /// Eigenvalue of larger modulus.
    pub mu1: Complex64,
    pub mu2: Complex64,
    pub w1: C2Vector,
    pub w2: C2Vector,
    pub distinct: bool,
}

/// Null vector of the rank-≤1 matrix `[[d11, a12], [a21, d22]]`, where the
/// diagonal entries have already had the eigenvalue subtracted.
///
/// Of the two row-elimination candidates the larger one is returned; if the
/// matrix vanishes entirely, `fallback` is returned.
fn null_vector(d11: Complex64, a12: Complex64, a21: Complex64, d22: Complex64, fallback: C2Vector) -> C2Vector {
    let r1 = [a12, -d11];
    let r2 = [-d22, a21];
    let (n1, n2) = (vnorm(&r1), vnorm(&r2));
    if n1 == 0.0 && n2 == 0.0 {
        fallback
    } else if n1 >= n2 {
        r1
    } else {
        r2
    }
}

/// Eigenvector of `a` for the eigenvalue `mu`, built from the larger row
/// candidate of `a − μ𝕀`.
pub fn eigvec_for(a: &C2Matrix, mu: Complex64) -> C2Vector {
    null_vector(a.a11 - mu, a.a12, a.a21, a.a22 - mu, [ONE, ZERO])
}

/// Eigen-decomposition of a general complex 2×2 matrix.
///
/// The discriminant is formed as `(a₁₁ − a₂₂)² + 4a₁₂a₂₁`, the larger root
/// is taken first and the smaller one recovered as `det / μ₁`. Defective
/// matrices come back with `distinct == false` and both vectors set to the
/// single eigendirection.
pub fn eig2(a: &C2Matrix) -> EigenPair2 {
    let tr = a.trace();
    let diff = a.a11 - a.a22;
    let mut s = (diff * diff + 4.0 * a.a12 * a.a21).sqrt();
    // pick the sign of the root that avoids cancellation against the trace
    if (tr.conj() * s).re < 0.0 {
        s = -s;
    }
    let mu1 = 0.5 * (tr + s);
    let det = a.det();
    let mu2 = if mu1.norm() > 0.0 { det / mu1 } else { 0.5 * (tr - s) };

    let distinct = (mu1 - mu2).norm() > DISTINCT_REL_TOL * (mu1.norm() + mu2.norm() + 1e-300);

    // μ₁ − a₁₁ = (−diff + s)/2, μ₁ − a₂₂ = (diff + s)/2, likewise with −s.
    let w1 = null_vector(0.5 * (diff - s), a.a12, a.a21, 0.5 * (-diff - s), [ONE, ZERO]);
    let w2 = if distinct { null_vector(0.5 * (diff + s), a.a12, a.a21, 0.5 * (-diff + s), [ZERO, ONE]) } else { w1 };
    EigenPair2 { mu1, mu2, w1, w2, distinct }
}

/// Γ(A) = |det(w₁, w₂)| / (|w₁| |w₂|) for matrices with two distinct
/// eigenvalues, `None` otherwise.
pub fn gamma_of_matrix(a: &C2Matrix) -> Option<f64> {
    let ep = eig2(a);
    if !ep.distinct {
        return None;
    }
    Some(gamma_of_vectors(&ep.w1, &ep.w2))
}

/// The same functional evaluated on a given pair of eigenvectors.
/// Clamped to 1, which bounds it mathematically.
pub fn gamma_of_vectors(w1: &C2Vector, w2: &C2Vector) -> f64 {
    (det_cols(w1, w2).norm() / (vnorm(w1) * vnorm(w2))).min(1.0)
}

pub fn frobenius_norm(a: &C2Matrix) -> f64 {
    a.entries().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value, from `σ² = (‖A‖_F² ± √(‖A‖_F⁴ − 4|det A|²)) / 2`.
pub fn operator_norm(a: &C2Matrix) -> f64 {
    // rescale so that squaring cannot overflow or underflow
    let scale = a.max_abs();
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let b = a.scale_real(1.0 / scale);
    let f2 = b.entries().iter().map(|z| z.norm_sqr()).sum::<f64>();
    let d = b.det().norm();
    let disc = ((f2 - 2.0 * d) * (f2 + 2.0 * d)).max(0.0);
    let smax2 = 0.5 * (f2 + disc.sqrt());
    (smax2.sqrt() * scale).min(frobenius_norm(a))
}
