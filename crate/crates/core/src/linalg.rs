//! Small helpers for complex 2×2 matrices.

use crate::{Complex64, Mat2};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity() -> Mat2 {
    Mat2::identity()
}

/// The jump matrix `[[0, 1], [−1, 0]]`.
pub fn jump() -> Mat2 {
    Mat2::new(c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0))
}

pub fn diag(a: Complex64, b: Complex64) -> Mat2 {
    Mat2::new(a, c(0.0, 0.0), c(0.0, 0.0), b)
}

pub fn det(m: &Mat2) -> Complex64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

pub fn trace(m: &Mat2) -> Complex64 {
    m[(0, 0)] + m[(1, 1)]
}

/// Inverse by the adjugate; `None` when `|det| < floor`.
pub fn inverse(m: &Mat2, floor: f64) -> Option<Mat2> {
    let d = det(m);
    if d.norm() < floor {
        return None;
    }
    Some(Mat2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / d)
}

/// Frobenius norm.
pub fn norm(m: &Mat2) -> f64 {
    m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues `(λ₁, λ₂)` from the characteristic polynomial.
pub fn eigenvalues(m: &Mat2) -> (Complex64, Complex64) {
    let t = trace(m);
    let d = det(m);
    let s = (t * t - 4.0 * d).sqrt();
    ((t + s) / 2.0, (t - s) / 2.0)
}

/// Eigenvector matrix `P` (columns) with `P⁻¹ M P` diagonal, or `None` for a
/// repeated eigenvalue.
pub fn eigenvectors(m: &Mat2, sep: f64) -> Option<(Mat2, Complex64, Complex64)> {
    let (l1, l2) = eigenvalues(m);
    if (l1 - l2).norm() < sep {
        return None;
    }
    let col = |l: Complex64| {
        // rows of (M − λ) annihilate the eigenvector; pick the better conditioned one
        let (a, b) = (m[(0, 0)] - l, m[(0, 1)]);
        let (cc, d) = (m[(1, 0)], m[(1, 1)] - l);
        let v = if a.norm() + b.norm() >= cc.norm() + d.norm() { (-b, a) } else { (-d, cc) };
        let n = (v.0.norm_sqr() + v.1.norm_sqr()).sqrt();
        (v.0 / n, v.1 / n)
    };
    let (v1, v2) = (col(l1), col(l2));
    Some((Mat2::new(v1.0, v2.0, v1.1, v2.1), l1, l2))
}

/// `(z − z0)^{diag(a, b)}` with principal powers.
pub fn diag_power(z: Complex64, z0: Complex64, a: f64, b: f64) -> Mat2 {
    let w = z - z0;
    diag(w.powf(a), w.powf(b))
}
