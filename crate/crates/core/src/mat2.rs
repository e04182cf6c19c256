//! 2x2 complex matrices.

use std::ops::{Mul, MulAssign};

use num_complex::Complex64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2C {
    pub a11: Complex64,
    pub a12: Complex64,
    pub a21: Complex64,
    pub a22: Complex64,
}

pub type Vec2C = [Complex64; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

impl Mat2C {
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

    pub fn diag(a: impl Into<Complex64>, b: impl Into<Complex64>) -> Self {
        Self::new(a.into(), ZERO, ZERO, b.into())
    }

    pub fn det(&self) -> Complex64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> Complex64 {
        self.a11 + self.a22
    }

    /// Squared Hilbert-Schmidt norm.
    pub fn norm_sqr(&self) -> f64 {
        self.a11.norm_sqr() + self.a12.norm_sqr() + self.a21.norm_sqr() + self.a22.norm_sqr()
    }

    /// Hilbert-Schmidt norm.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Operator norm (largest singular value), from the top eigenvalue of `A^H A`.
    pub fn op_norm(&self) -> f64 {
        let p = self.a11.norm_sqr() + self.a21.norm_sqr();
        let q = self.a12.norm_sqr() + self.a22.norm_sqr();
        let r = self.a11.conj() * self.a12 + self.a21.conj() * self.a22;
        (0.5 * (p + q) + (0.25 * (p - q) * (p - q) + r.norm_sqr()).sqrt()).sqrt()
    }

    pub fn scale(&self, s: impl Into<Complex64>) -> Self {
        let s = s.into();
        Self::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }

    pub fn is_finite(&self) -> bool {
        [self.a11, self.a12, self.a21, self.a22].iter().all(|c| c.is_finite())
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.norm_sqr() == 0.0 {
            return None;
        }
        let inv = d.inv();
        Some(Self::new(self.a22 * inv, -self.a12 * inv, -self.a21 * inv, self.a11 * inv))
    }

    pub fn apply(&self, v: &Vec2C) -> Vec2C {
        [self.a11 * v[0] + self.a12 * v[1], self.a21 * v[0] + self.a22 * v[1]]
    }

    /// Both eigenvalues, the one of larger modulus first.
    ///
    /// Uses `h +- sqrt(h^2 - det)` with `h = tr/2`, picking the sign that avoids
    /// cancellation and recovering the other root from the determinant.
    pub fn eigenvalues(&self) -> (Complex64, Complex64) {
        let h = self.trace() * 0.5;
        let d = self.det();
        let s = (h * h - d).sqrt();
        let big = if (h.conj() * s).re >= 0.0 { h + s } else { h - s };
        if big.norm_sqr() == 0.0 {
            return (ZERO, ZERO);
        }
        let small = if d.norm_sqr() == 0.0 { ZERO } else { d / big };
        (big, small)
    }

    pub fn spectral_radius(&self) -> f64 {
        // exact on triangular input: the eigenvalues are the diagonal entries
        if self.a21 == ZERO || self.a12 == ZERO {
            return self.a11.norm().max(self.a22.norm());
        }
        self.eigenvalues().0.norm()
    }
}

impl Mul for Mat2C {
    type Output = Mat2C;
    #[inline]
    fn mul(self, r: Mat2C) -> Mat2C {
        Mat2C::new(
            self.a11 * r.a11 + self.a12 * r.a21,
            self.a11 * r.a12 + self.a12 * r.a22,
            self.a21 * r.a11 + self.a22 * r.a21,
            self.a21 * r.a12 + self.a22 * r.a22,
        )
    }
}

impl MulAssign<f64> for Mat2C {
    fn mul_assign(&mut self, s: f64) {
        self.a11 *= s;
        self.a12 *= s;
        self.a21 *= s;
        self.a22 *= s;
    }
}

pub fn vec_norm(v: &Vec2C) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn spectral_radius_examples() {
        assert_eq!(Mat2C::identity().spectral_radius(), 1.0);
        assert_eq!(Mat2C::diag(3.0, 0.5).spectral_radius(), 3.0);
        assert_eq!(Mat2C::identity().op_norm(), 1.0);
        assert_eq!(Mat2C::diag(3.0, 0.5).op_norm(), 3.0);
        // M0 with lambda1 = lambda3 = 1/2: t^2 + t + 1/4
        let beta: f64 = 0.3819;
        let ph = c(0.0, std::f64::consts::PI * beta).exp();
        let m0 = Mat2C::new(c(-1.0, 0.0), ph * -0.5, ph.conj() * 0.5, ZERO);
        assert_abs_diff_eq!(m0.spectral_radius(), 0.5, epsilon = 1e-7);
    }

    #[test]
    fn eigenvalues_of_rotation() {
        let r = Mat2C::from_real(0.0, -1.0, 1.0, 0.0);
        let (a, b) = r.eigenvalues();
        assert_abs_diff_eq!(a.norm(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!((a * b - r.det()).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((a + b - r.trace()).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn inverse_of_singular_is_none() {
        assert!(Mat2C::from_real(1.0, 2.0, 2.0, 4.0).inverse().is_none());
        let m = Mat2C::from_real(2.0, 1.0, 0.5, 3.0);
        let p = m * m.inverse().unwrap();
        assert_abs_diff_eq!((p.a11 - 1.0).norm() + p.a12.norm() + p.a21.norm(), 0.0, epsilon = 1e-15);
    }

    fn arb_mat() -> impl Strategy<Value = Mat2C> {
        proptest::collection::vec(-3.0f64..3.0, 8).prop_map(|v| {
            Mat2C::new(c(v[0], v[1]), c(v[2], v[3]), c(v[4], v[5]), c(v[6], v[7]))
        })
    }

    proptest! {
        #[test]
        fn norm_is_submultiplicative(a in arb_mat(), b in arb_mat()) {
            prop_assert!((a * b).norm() <= a.norm() * b.norm() * (1.0 + 1e-12) + 1e-14);
        }

        #[test]
        fn det_is_multiplicative(a in arb_mat(), b in arb_mat()) {
            let lhs = (a * b).det();
            let rhs = a.det() * b.det();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        }

        #[test]
        fn spectral_radius_below_norm(a in arb_mat()) {
            prop_assert!(a.spectral_radius() <= a.norm() * (1.0 + 1e-12));
        }

        #[test]
        fn op_norm_matches_svd(a in arb_mat()) {
            let m = nalgebra::Matrix2::new(a.a11, a.a12, a.a21, a.a22);
            let s = m.singular_values();
            prop_assert!((a.op_norm() - s[0]).abs() <= 1e-12 * (1.0 + s[0]));
            prop_assert!(a.op_norm() <= a.norm() * (1.0 + 1e-15));
        }

        #[test]
        fn abs_det_is_product_of_singular_values(a in arb_mat()) {
            // singular values of a 2x2 from ||A||_HS^2 and |det A|
            let f = a.norm_sqr();
            let d = a.det().norm();
            let disc = (f * f - 4.0 * d * d).max(0.0).sqrt();
            let s1 = ((f + disc) / 2.0).sqrt();
            let s2 = ((f - disc) / 2.0).max(0.0).sqrt();
            // cross-check s1 against the operator norm from A^H A
            let ah_a_11 = a.a11.norm_sqr() + a.a21.norm_sqr();
            let ah_a_22 = a.a12.norm_sqr() + a.a22.norm_sqr();
            let ah_a_12 = a.a11.conj() * a.a12 + a.a21.conj() * a.a22;
            let h = 0.5 * (ah_a_11 + ah_a_22);
            let top = h + (0.25 * (ah_a_11 - ah_a_22).powi(2) + ah_a_12.norm_sqr()).sqrt();
            prop_assert!((s1 * s1 - top).abs() <= 1e-9 * (1.0 + top));
            prop_assert!((s1 * s2 - d).abs() <= 1e-9 * (1.0 + d));
        }
    }
}
