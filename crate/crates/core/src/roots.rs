//! Zeros of a trigonometric polynomial on the cylinder `R/Z x R`.
//!
//! With `w = exp(2 pi i z)` a trigonometric polynomial of degree `N` is
//! `w^{-N} q(w)` for an algebraic `q` of degree at most `2N`. Roots of `q` are
//! found as companion-matrix eigenvalues, polished by Newton steps and
//! clustered to resolve multiplicities.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::trig::TrigPoly;

/// Coefficients below this fraction of the largest one are treated as zero.
const COEFF_ZERO_REL: f64 = 1e-14;
/// Roots closer than this (relative, in w-space) are merged into one multiple root.
pub const CLUSTER_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CylinderRoot {
    /// Real part mod 1.
    pub x: f64,
    /// Imaginary part: `|w| = exp(-2 pi eps)`.
    pub eps: f64,
    pub multiplicity: usize,
}

impl CylinderRoot {
    pub fn w(&self) -> Complex64 {
        Complex64::from_polar((-TAU * self.eps).exp(), TAU * self.x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootList {
    pub roots: Vec<CylinderRoot>,
    /// Order of vanishing of `q` at `w = 0`.
    pub zeros_at_origin: usize,
    /// Leading (highest-power) nonzero coefficient of `q`.
    pub leading: Complex64,
    /// Degree of `q` after dropping vanishing top coefficients.
    pub algebraic_degree: usize,
    /// Degree bound `N` of the source polynomial (the `w^{-N}` prefactor).
    pub harmonic_offset: usize,
}

impl RootList {
    /// Roots counted with multiplicity, including those at the origin.
    pub fn count(&self) -> usize {
        self.zeros_at_origin + self.roots.iter().map(|r| r.multiplicity).sum::<usize>()
    }

    /// Coefficients of `leading * w^{m0} * prod (w - w_j)^{n_j}`, lowest power first.
    pub fn reconstruct(&self) -> Vec<Complex64> {
        let mut poly = vec![Complex64::new(0.0, 0.0); self.zeros_at_origin];
        poly.push(self.leading);
        for r in &self.roots {
            let w = r.w();
            for _ in 0..r.multiplicity {
                let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
                for (i, &c) in poly.iter().enumerate() {
                    next[i] -= c * w;
                    next[i + 1] += c;
                }
                poly = next;
            }
        }
        poly
    }

    /// Roots whose height is within `tol` of `eps`.
    pub fn near_height(&self, eps: f64, tol: f64) -> impl Iterator<Item = &CylinderRoot> {
        self.roots.iter().filter(move |r| (r.eps - eps).abs() < tol)
    }
}

fn horner(p: &[Complex64], w: Complex64) -> (Complex64, Complex64) {
    // value and derivative
    let mut v = Complex64::new(0.0, 0.0);
    let mut d = Complex64::new(0.0, 0.0);
    for &c in p.iter().rev() {
        d = d * w + v;
        v = v * w + c;
    }
    (v, d)
}

fn polish(p: &[Complex64], mut w: Complex64) -> Complex64 {
    let (mut val, _) = horner(p, w);
    for _ in 0..8 {
        let (v, d) = horner(p, w);
        if d.norm_sqr() == 0.0 || v.norm_sqr() == 0.0 {
            break;
        }
        let next = w - v / d;
        let (nv, _) = horner(p, next);
        if !(nv.norm() < val.norm()) {
            break;
        }
        w = next;
        val = nv;
    }
    w
}

/// Zeros of `q(w) = sum_k c_{k-N} w^k` in cylinder coordinates.
pub fn roots_on_cylinder(p: &TrigPoly) -> Result<RootList> {
    let b = p.algebraic_coeffs();
    let scale = p.max_abs_coeff();
    if scale == 0.0 {
        return Err(Error::IdenticallyZero);
    }
    let nonzero = |c: &Complex64| c.norm() > COEFF_ZERO_REL * scale;
    let m0 = b.iter().position(nonzero).expect("scale > 0");
    let top = b.iter().rposition(nonzero).expect("scale > 0");
    let reduced: Vec<Complex64> = b[m0..=top].to_vec();
    let degree = top - m0;
    let leading = reduced[degree];

    let raw: Vec<Complex64> = match degree {
        0 => Vec::new(),
        1 => vec![-reduced[0] / reduced[1]],
        _ => {
            let mut comp = DMatrix::<Complex64>::zeros(degree, degree);
            for i in 1..degree {
                comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
            }
            for i in 0..degree {
                comp[(i, degree - 1)] = -reduced[i] / leading;
            }
            let eig = nalgebra::linalg::Schur::new(comp)
                .eigenvalues()
                .ok_or_else(|| Error::InvalidInput("companion eigenvalues failed".into()))?;
            eig.iter().map(|&w| polish(&reduced, w)).collect()
        }
    };

    // cluster nearby roots; the cluster mean is accurate for perturbed multiple roots
    let mut used = vec![false; raw.len()];
    let mut roots = Vec::new();
    for i in 0..raw.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut members = vec![raw[i]];
        for j in i + 1..raw.len() {
            if !used[j] && (raw[j] - raw[i]).norm() < CLUSTER_TOL * raw[i].norm().max(1.0) {
                used[j] = true;
                members.push(raw[j]);
            }
        }
        let w = members.iter().sum::<Complex64>() / members.len() as f64;
        roots.push(CylinderRoot {
            x: (w.arg() / TAU).rem_euclid(1.0),
            eps: -w.norm().ln() / TAU,
            multiplicity: members.len(),
        });
    }
    roots.sort_by(|a, b| a.eps.total_cmp(&b.eps).then(a.x.total_cmp(&b.x)));

    Ok(RootList {
        roots,
        zeros_at_origin: m0,
        leading,
        algebraic_degree: top,
        harmonic_offset: p.degree(),
    })
}
