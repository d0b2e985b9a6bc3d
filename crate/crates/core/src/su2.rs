// Copyright 2026 The magnus-core Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense 2×2 complex matrices for the single-S-spin blocks.
//!
//! Every block Hamiltonian in this crate is a traceless Hermitian 2×2 matrix
//! `H = v·S` with `S = σ/2`, and every block propagator is an element of
//! SU(2). Exponentials are evaluated in closed form:
//!
//!   exp(−i v·S) = cos(|v|/2)·E − i·sin(|v|/2)·(v̂·σ)
//!
//! so no series truncation enters the propagators.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Row-major 2×2 complex matrix `[[m00, m01], [m10, m11]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [Complex64; 4]);

/// A 2×2 block of the interaction-frame propagator.
pub type BlockUnitary = Mat2;

impl Mat2 {
    pub const fn new(m00: Complex64, m01: Complex64, m10: Complex64, m11: Complex64) -> Self {
        Mat2([m00, m01, m10, m11])
    }

    pub const fn zero() -> Self {
        Mat2([ZERO; 4])
    }

    pub const fn identity() -> Self {
        Mat2([ONE, ZERO, ZERO, ONE])
    }

    pub fn diag(a: Complex64, b: Complex64) -> Self {
        Mat2([a, ZERO, ZERO, b])
    }

    /// `S_x = σ_x / 2`.
    pub fn sx() -> Self {
        Mat2([ZERO, ONE * 0.5, ONE * 0.5, ZERO])
    }

    /// `S_y = σ_y / 2`.
    pub fn sy() -> Self {
        Mat2([ZERO, -I * 0.5, I * 0.5, ZERO])
    }

    /// `S_z = σ_z / 2`.
    pub fn sz() -> Self {
        Mat2([ONE * 0.5, ZERO, ZERO, -ONE * 0.5])
    }

    /// `v_x S_x + v_y S_y + v_z S_z`.
    pub fn from_spin_vector(v: [f64; 3]) -> Self {
        let [x, y, z] = v;
        Mat2([
            Complex64::new(0.5 * z, 0.0),
            Complex64::new(0.5 * x, -0.5 * y),
            Complex64::new(0.5 * x, 0.5 * y),
            Complex64::new(-0.5 * z, 0.0),
        ])
    }

    /// Components `v` of a traceless Hermitian matrix written as `v·S`.
    ///
    /// The anti-Hermitian and trace parts are discarded.
    pub fn spin_vector(&self) -> [f64; 3] {
        let [a, b, c, d] = self.0;
        [
            (b.re + c.re),
            (c.im - b.im),
            (a.re - d.re),
        ]
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[2 * row + col]
    }

    pub fn dagger(&self) -> Self {
        let [a, b, c, d] = self.0;
        Mat2([a.conj(), c.conj(), b.conj(), d.conj()])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0] + self.0[3]
    }

    pub fn det(&self) -> Complex64 {
        let [a, b, c, d] = self.0;
        a * d - b * c
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Mat2(self.0.map(|x| x * s))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius distance `‖self − other‖_F`.
    pub fn distance(&self, other: &Mat2) -> f64 {
        (*self - *other).frobenius_norm()
    }

    /// `‖U U† − E‖_F`.
    pub fn unitarity_defect(&self) -> f64 {
        (*self * self.dagger()).distance(&Mat2::identity())
    }

    pub fn commutator(&self, other: &Mat2) -> Mat2 {
        *self * *other - *other * *self
    }

    /// Quaternion components `(q0, q)` of an SU(2) element written as
    /// `q0·E − i(q·σ)`.
    ///
    /// For inputs with determinant one this is exact; otherwise it returns
    /// the projection onto that form.
    pub fn su2_quaternion(&self) -> (f64, [f64; 3]) {
        let [u00, u01, u10, u11] = self.0;
        let q0 = 0.5 * (u00 + u11).re;
        let qx = -0.5 * (u01 + u10).im;
        let qy = 0.5 * (u10 - u01).re;
        let qz = -0.5 * (u00 - u11).im;
        (q0, [qx, qy, qz])
    }

    /// Inverse of [`Mat2::su2_quaternion`].
    pub fn from_su2_quaternion(q0: f64, q: [f64; 3]) -> Self {
        let [x, y, z] = q;
        Mat2([
            Complex64::new(q0, -z),
            Complex64::new(-y, -x),
            Complex64::new(y, -x),
            Complex64::new(q0, z),
        ])
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        let mut out = self.0;
        for (o, r) in out.iter_mut().zip(rhs.0) {
            *o += r;
        }
        Mat2(out)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        let mut out = self.0;
        for (o, r) in out.iter_mut().zip(rhs.0) {
            *o -= r;
        }
        Mat2(out)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        Mat2(self.0.map(|x| -x))
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = rhs.0;
        Mat2([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h])
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: f64) -> Mat2 {
        Mat2(self.0.map(|x| x * rhs))
    }
}

/// `exp(−i v·S)` in closed form.
pub fn exp_spin_vector(v: [f64; 3]) -> Mat2 {
    let angle = norm3(v);
    if angle == 0.0 {
        return Mat2::identity();
    }
    let half = 0.5 * angle;
    let s = half.sin() / angle;
    Mat2::from_su2_quaternion(half.cos(), [v[0] * s, v[1] * s, v[2] * s])
}

/// `exp(−i H t)` for a traceless Hermitian `H`.
pub fn exp_hermitian(h: &Mat2, t: f64) -> Mat2 {
    let v = h.spin_vector();
    exp_spin_vector([v[0] * t, v[1] * t, v[2] * t])
}

pub(crate) fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn spin_operators_satisfy_commutation() {
        let lhs = Mat2::sx().commutator(&Mat2::sy());
        let rhs = Mat2::sz().scale(I);
        assert!(lhs.distance(&rhs) < 1e-15);
    }

    #[test]
    fn spin_vector_round_trip() {
        let v = [0.3, -1.2, 2.5];
        let back = Mat2::from_spin_vector(v).spin_vector();
        for k in 0..3 {
            assert!((back[k] - v[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn exp_about_x_matches_rodrigues() {
        let theta = 0.7;
        let u = exp_spin_vector([theta, 0.0, 0.0]);
        let expected = Mat2::identity().scale(ONE * (theta / 2.0).cos())
            - Mat2::sx().scale(I * 2.0 * (theta / 2.0).sin());
        assert!(u.distance(&expected) < 1e-15);
    }

    #[test]
    fn full_turn_is_minus_identity() {
        for axis in [[1.0, 0.0, 0.0], [0.0, 0.6, 0.8], [0.5, 0.5, 0.5f64.sqrt()]] {
            let n = norm3(axis);
            let v = axis.map(|a| 2.0 * PI * a / n);
            let u = exp_spin_vector(v);
            assert!(u.distance(&(-Mat2::identity())) < 1e-14);
        }
    }

    #[test]
    fn quaternion_round_trip() {
        let u = exp_spin_vector([0.4, -2.0, 1.1]);
        let (q0, q) = u.su2_quaternion();
        assert!(Mat2::from_su2_quaternion(q0, q).distance(&u) < 1e-15);
        assert!((q0 * q0 + dot3(q, q) - 1.0).abs() < 1e-14);
        assert!((u.det() - ONE).norm() < 1e-14);
    }
}
