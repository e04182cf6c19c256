//! Finite Fourier series on the torus and their evaluation on the complex strip.
//!
//! A [`TrigPoly`] stores `p(z) = sum_{k=-N}^{N} c_k exp(2 pi i k z)` densely.
//! Writing `z = x + i eps`, the harmonic `exp(2 pi i k z)` has modulus
//! `exp(-2 pi k eps)`, so positive harmonics decay as `eps` grows.

use std::f64::consts::TAU;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// `exp(2 pi i x)` for real `x`, reduced mod 1 first.
#[inline]
pub fn cis_turns(x: f64) -> Complex64 {
    let (s, c) = (TAU * x.rem_euclid(1.0)).sin_cos();
    Complex64::new(c, s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrigPoly {
    degree: usize,
    // coeffs[k + degree] holds c_k
    coeffs: Vec<Complex64>,
}

impl TrigPoly {
    pub fn zero() -> Self {
        Self { degree: 0, coeffs: vec![Complex64::new(0.0, 0.0)] }
    }

    pub fn constant(c: impl Into<Complex64>) -> Self {
        Self { degree: 0, coeffs: vec![c.into()] }
    }

    /// Builds a polynomial from `(k, c_k)` pairs. Repeated harmonics are summed.
    pub fn from_harmonics<I, C>(terms: I) -> Self
    where
        I: IntoIterator<Item = (i64, C)>,
        C: Into<Complex64>,
    {
        let terms: Vec<(i64, Complex64)> = terms.into_iter().map(|(k, c)| (k, c.into())).collect();
        let degree = terms.iter().map(|(k, _)| k.unsigned_abs() as usize).max().unwrap_or(0);
        let mut p = Self { degree, coeffs: vec![Complex64::new(0.0, 0.0); 2 * degree + 1] };
        for (k, c) in terms {
            p.coeffs[(k + degree as i64) as usize] += c;
        }
        p
    }

    /// `a * cos(2 pi k x)`.
    pub fn cosine(k: i64, a: f64) -> Self {
        Self::from_harmonics([(k, 0.5 * a), (-k, 0.5 * a)])
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.degree {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[(k + self.degree as i64) as usize]
    }

    /// Coefficients `(k, c_k)` for `k = -N..=N`.
    pub fn harmonics(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let n = self.degree as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - n, c))
    }

    /// Dense coefficients of the algebraic polynomial `q(w) = sum_k c_{k-N} w^k`.
    pub fn algebraic_coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm_sqr() == 0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Evaluates at a complex point `z = x + i eps`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.eval_strip(z.re, z.im)
    }

    pub fn eval_strip(&self, x: f64, eps: f64) -> Complex64 {
        let s = (-TAU * eps).exp();
        self.eval_parts(cis_turns(x), s, 1.0 / s)
    }

    /// Evaluates given the unit phase `u = exp(2 pi i x)` and the strip scale
    /// `s = exp(-2 pi eps)`, so that `w = s u` and `1/w = s_inv conj(u)`.
    ///
    /// Positive and negative harmonics are summed separately by Horner's rule,
    /// which keeps large `|eps|` from overflowing the decaying side.
    #[inline]
    pub fn eval_parts(&self, u: Complex64, s: f64, s_inv: f64) -> Complex64 {
        let n = self.degree;
        if n == 0 {
            return self.coeffs[0];
        }
        let w = u * s;
        let w_inv = u.conj() * s_inv;
        let mut pos = Complex64::new(0.0, 0.0);
        for c in self.coeffs[n + 1..].iter().rev() {
            pos = (pos + c) * w;
        }
        let mut neg = Complex64::new(0.0, 0.0);
        for c in self.coeffs[..n].iter() {
            neg = (neg + c) * w_inv;
        }
        self.coeffs[n] + pos + neg
    }

    /// The analytic continuation of `conj(p(x))` off the real line:
    /// coefficients `d_k = conj(c_{-k})`.
    pub fn conj_reflect(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.reverse();
        for c in coeffs.iter_mut() {
            *c = c.conj();
        }
        Self { degree: self.degree, coeffs }
    }

    /// `z -> p(z + t)` for real `t`.
    pub fn shift(&self, t: f64) -> Self {
        Self::from_harmonics(self.harmonics().map(|(k, c)| (k, c * cis_turns(k as f64 * t))))
    }

    pub fn scale(&self, a: impl Into<Complex64>) -> Self {
        let a = a.into();
        Self { degree: self.degree, coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    /// Drops vanishing outer harmonics so that `degree` is the true degree.
    pub fn trimmed(&self) -> Self {
        let n = self.degree as i64;
        let mut top = 0;
        for k in 0..=n {
            if self.coeff(k).norm_sqr() != 0.0 || self.coeff(-k).norm_sqr() != 0.0 {
                top = k;
            }
        }
        Self::from_harmonics((-top..=top).map(|k| (k, self.coeff(k))))
    }

    fn widen(&self, degree: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); 2 * degree + 1];
        let off = degree - self.degree;
        out[off..off + self.coeffs.len()].copy_from_slice(&self.coeffs);
        out
    }
}

impl Add for &TrigPoly {
    type Output = TrigPoly;
    fn add(self, rhs: &TrigPoly) -> TrigPoly {
        let degree = self.degree.max(rhs.degree);
        let a = self.widen(degree);
        let b = rhs.widen(degree);
        TrigPoly { degree, coeffs: a.iter().zip(&b).map(|(x, y)| x + y).collect() }
    }
}

impl Sub for &TrigPoly {
    type Output = TrigPoly;
    fn sub(self, rhs: &TrigPoly) -> TrigPoly {
        self + &(-rhs)
    }
}

impl Neg for &TrigPoly {
    type Output = TrigPoly;
    fn neg(self) -> TrigPoly {
        self.scale(-1.0)
    }
}

impl Mul for &TrigPoly {
    type Output = TrigPoly;
    fn mul(self, rhs: &TrigPoly) -> TrigPoly {
        let degree = self.degree + rhs.degree;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * degree + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        TrigPoly { degree, coeffs }
    }
}

#[derive(Serialize, Deserialize)]
struct TrigPolyJson {
    coeffs: Vec<(i64, f64, f64)>,
}

impl Serialize for TrigPoly {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        TrigPolyJson {
            coeffs: self
                .harmonics()
                .filter(|(_, c)| c.norm_sqr() != 0.0)
                .map(|(k, c)| (k, c.re, c.im))
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TrigPoly {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = TrigPolyJson::deserialize(deserializer)?;
        if raw.coeffs.iter().any(|(_, re, im)| !re.is_finite() || !im.is_finite()) {
            return Err(serde::de::Error::custom("non-finite coefficient"));
        }
        Ok(TrigPoly::from_harmonics(
            raw.coeffs.into_iter().map(|(k, re, im)| (k, Complex64::new(re, im))),
        ))
    }
}

impl TrigPoly {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("TrigPoly JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("TrigPoly serializes")
    }
}
