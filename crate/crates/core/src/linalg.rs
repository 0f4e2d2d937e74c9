//! Fixed-size 2x2 matrix helpers for the reduced receptor dynamics.

use num_complex::Complex64;
use std::ops::{Index, Mul};

/// Real 2x2 matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[0.0; 2]; 2]);
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn diag(a: f64, d: f64) -> Self {
        Mat2([[a, 0.0], [0.0, d]])
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Mat2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    /// `uᵀ M v`.
    pub fn bilinear(&self, u: [f64; 2], v: [f64; 2]) -> f64 {
        let mv = self.mul_vec(v);
        u[0] * mv[0] + u[1] * mv[1]
    }

    /// Inverse, or `None` when the determinant vanishes relative to the
    /// entry scale.
    pub fn inverse(&self) -> Option<Mat2> {
        let m = &self.0;
        let det = self.det();
        let scale = (m[0][0] * m[1][1]).abs().max((m[0][1] * m[1][0]).abs());
        if !det.is_finite() || det == 0.0 || det.abs() <= 1e-14 * scale {
            return None;
        }
        Some(Mat2([
            [m[1][1] / det, -m[0][1] / det],
            [-m[1][0] / det, m[0][0] / det],
        ]))
    }

    /// Eigenvalues `(larger, smaller)` when both are real.
    pub fn real_eigenvalues(&self) -> Option<(f64, f64)> {
        let half_tr = 0.5 * self.trace();
        let disc = half_tr * half_tr - self.det();
        if disc < 0.0 {
            return None;
        }
        let r = disc.sqrt();
        Some((half_tr + r, half_tr - r))
    }
}

impl Index<(usize, usize)> for Mat2 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }
}

/// Real part of `(j·omega·I − A)⁻¹` by an explicit complex 2x2 solve.
pub fn resolvent_real(omega: f64, a: &Mat2) -> Mat2 {
    let jw = Complex64::new(0.0, omega);
    let m00 = jw - a.0[0][0];
    let m01 = Complex64::new(-a.0[0][1], 0.0);
    let m10 = Complex64::new(-a.0[1][0], 0.0);
    let m11 = jw - a.0[1][1];
    let det = m00 * m11 - m01 * m10;
    debug_assert!(det.norm() > 0.0, "resolvent is singular");
    let inv = [[m11 / det, -m01 / det], [-m10 / det, m00 / det]];
    Mat2([
        [inv[0][0].re, inv[0][1].re],
        [inv[1][0].re, inv[1][1].re],
    ])
}
