//! Extended Harper model: cocycles, coupling regions, closed-form exponents
//! and the duality map.
//!
//! The hopping symbol is
//! `c(x) = l3 exp(-2 pi i (x + beta/2)) + l2 + l1 exp(2 pi i (x + beta/2))`
//! and the potential is `v(x) = 2 cos(2 pi x)`.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cocycle::{le_iterative, Cocycle};
use crate::error::{Error, Result};
use crate::frequency::Frequency;
use crate::jensen::i_eps_quadrature;
use crate::trig::TrigPoly;

/// Tolerance for region membership and boundary flags.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Which {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Region {
    I,
    II,
    III,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::I => "I",
            Region::II => "II",
            Region::III => "III",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Boundary {
    /// `l1 + l3 = 1`
    SumOne,
    /// `l2 = 1`
    Lambda2One,
    /// `l1 + l3 = l2`
    SumEqualsLambda2,
    /// `l1 = l3`
    Isotropic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionTag {
    pub tag: Region,
    /// All regions whose closed inequalities hold.
    pub member_of: Vec<Region>,
    pub on_boundary: Vec<Boundary>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HarperVerdict {
    pub le_on_spectrum: f64,
    pub delta: f64,
    pub criticality: Criticality,
    pub l_m: f64,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= BOUNDARY_TOL
}

fn le(a: f64, b: f64) -> bool {
    a <= b + BOUNDARY_TOL
}

impl Coupling {
    pub fn new(l1: f64, l2: f64, l3: f64) -> Result<Self> {
        let c = Self { l1, l2, l3 };
        c.check()?;
        Ok(c)
    }

    pub fn check(&self) -> Result<()> {
        let v = [self.l1, self.l2, self.l3];
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InadmissibleCoupling("couplings must be finite".into()));
        }
        if v.iter().any(|&x| x < 0.0) {
            return Err(Error::InadmissibleCoupling(format!("negative coupling in {self}")));
        }
        if v.iter().all(|&x| x == 0.0) {
            return Err(Error::InadmissibleCoupling("all couplings vanish".into()));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.l1, self.l2, self.l3]
    }

    /// `c_lambda` as a trigonometric polynomial for frequency value `beta`.
    pub fn c_poly(&self, beta: f64) -> TrigPoly {
        let ph = Complex64::from_polar(1.0, PI * beta);
        TrigPoly::from_harmonics([(-1, ph.conj() * self.l3), (0, Complex64::new(self.l2, 0.0)), (1, ph * self.l1)])
    }

    /// True when `lambda` lies in the set where `l1 != l3` and `l2 != l1 + l3`.
    pub fn in_r(&self) -> bool {
        !close(self.l1, self.l3) && !close(self.l2, self.l1 + self.l3)
    }

    /// Whether `c_lambda` vanishes somewhere on the real line.
    pub fn c_has_real_zeros(&self) -> bool {
        if close(self.l1, self.l3) {
            le(self.l2, 2.0 * self.l3)
        } else {
            close(self.l1 + self.l3, self.l2)
        }
    }
}

impl fmt::Display for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.l1, self.l2, self.l3)
    }
}

impl std::str::FromStr for Coupling {
    type Err = Error;

    /// Parses `l1,l2,l3`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::InvalidInput(format!("expected l1,l2,l3 but got '{s}'")));
        }
        let mut v = [0.0; 3];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p.parse().map_err(|_| Error::InvalidInput(format!("bad coupling component '{p}'")))?;
        }
        Coupling::new(v[0], v[1], v[2])
    }
}

/// `v(x) = 2 cos(2 pi x)`.
pub fn potential() -> TrigPoly {
    TrigPoly::cosine(1, 2.0)
}

/// `A^E(x) = ((E - v(x), -cbar(x - beta)), (c(x), 0))`; `B^E = A^E / c`.
pub fn build_cocycle(lambda: &Coupling, beta: &Frequency, energy: f64, which: Which) -> Result<Cocycle> {
    lambda.check()?;
    if !energy.is_finite() {
        return Err(Error::InvalidInput("energy must be finite".into()));
    }
    let c = lambda.c_poly(beta.value());
    let a11 = &TrigPoly::constant(energy) - &potential();
    let a12 = -&c.conj_reflect().shift(-beta.value());
    let cyc = Cocycle::new(beta.clone(), [a11, a12, c.clone(), TrigPoly::zero()]);
    Ok(match which {
        Which::A => cyc,
        Which::B => cyc.with_divisor(c),
    })
}

pub fn region(lambda: &Coupling) -> Result<RegionTag> {
    lambda.check()?;
    let Coupling { l1, l2, l3 } = *lambda;
    let s = l1 + l3;
    let mut member_of = Vec::new();
    if le(s, 1.0) && le(l2, 1.0) {
        member_of.push(Region::I);
    }
    if le(s, l2) && le(1.0, l2) {
        member_of.push(Region::II);
    }
    if le(1.0f64.max(l2), s) {
        member_of.push(Region::III);
    }
    let mut on_boundary = Vec::new();
    if close(s, 1.0) {
        on_boundary.push(Boundary::SumOne);
    }
    if close(l2, 1.0) {
        on_boundary.push(Boundary::Lambda2One);
    }
    if close(s, l2) {
        on_boundary.push(Boundary::SumEqualsLambda2);
    }
    if close(l1, l3) {
        on_boundary.push(Boundary::Isotropic);
    }
    let tag = *member_of.first().expect("the three regions cover the admissible set");
    Ok(RegionTag { tag, member_of, on_boundary })
}

/// Closed-form `I_eps(lambda)`, cases taken in order.
pub fn harper_i_eps_closed(lambda: &Coupling, eps: f64) -> Result<f64> {
    lambda.check()?;
    let Coupling { l1, l2, l3 } = *lambda;
    let a = l1 * (-TAU * eps).exp();
    let b = l3 * (TAU * eps).exp();
    Ok(if b >= a && a + b >= l2 {
        l3.ln() + TAU * eps
    } else if a >= b && a + b >= l2 {
        l1.ln() - TAU * eps
    } else if l1 != 0.0 && l3 != 0.0 {
        // |2 l1 l3 / (-l2 + r)| with r = sqrt(l2^2 - 4 l1 l3), written without cancellation
        let r = (l2 * l2 - 4.0 * l1 * l3).max(0.0).sqrt();
        ((l2 + r) / 2.0).ln()
    } else {
        l2.ln()
    })
}

/// `I(lambda) = I_0(lambda)`.
pub fn i_lambda(lambda: &Coupling) -> Result<f64> {
    harper_i_eps_closed(lambda, 0.0)
}

/// `log |1 + sqrt(1 - 4 l1 l3)|` with the principal complex root.
fn log_m_numerator(lambda: &Coupling) -> f64 {
    let root = Complex64::new(1.0 - 4.0 * lambda.l1 * lambda.l3, 0.0).sqrt();
    (Complex64::new(1.0, 0.0) + root).norm().ln()
}

/// Lyapunov exponent of the constant limit matrix `M^(0)`.
pub fn l_m(lambda: &Coupling) -> f64 {
    log_m_numerator(lambda) - 2f64.ln()
}

/// `Delta = L(M) - I(lambda)` by its own three-case formula.
pub fn delta(lambda: &Coupling) -> Result<f64> {
    lambda.check()?;
    let Coupling { l1, l2, l3 } = *lambda;
    let num = log_m_numerator(lambda);
    Ok(if l1 >= l3 && l2 <= l1 + l3 {
        num - (2.0 * l1).ln()
    } else if l3 >= l1 && l2 <= l1 + l3 {
        num - (2.0 * l3).ln()
    } else {
        num - (l2 + (l2 * l2 - 4.0 * l1 * l3).max(0.0).sqrt()).ln()
    })
}

/// Lyapunov exponent on the spectrum: zero in regions II and III, the
/// three-case formula in region I.
pub fn thouless_le(lambda: &Coupling) -> Result<f64> {
    let tag = region(lambda)?;
    if tag.tag != Region::I {
        return Ok(0.0);
    }
    let Coupling { l1, l2, l3 } = *lambda;
    let num = 1.0 + (1.0 - 4.0 * l1 * l3).max(0.0).sqrt();
    Ok(if l1 >= l3 && l2 <= l1 + l3 {
        (num / (2.0 * l1)).ln()
    } else if l3 >= l1 && l2 <= l1 + l3 {
        (num / (2.0 * l3)).ln()
    } else {
        (num / (l2 + (l2 * l2 - 4.0 * l1 * l3).max(0.0).sqrt())).ln()
    }
    .max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComplexLe {
    /// `max{I(lambda), L(M) + 2 pi |eps|}`; equality on the spectrum.
    pub le_a_lower: f64,
    /// `le_a_lower - I_eps(lambda)`.
    pub le_b_on_spectrum: f64,
}

pub fn complex_le(lambda: &Coupling, eps: f64) -> Result<ComplexLe> {
    let i0 = i_lambda(lambda)?;
    let a = i0.max(l_m(lambda) + TAU * eps.abs());
    Ok(ComplexLe { le_a_lower: a, le_b_on_spectrum: a - harper_i_eps_closed(lambda, eps)? })
}

/// `sigma(lambda) = (l3/l2, 1/l2, l1/l2)`.
pub fn duality(lambda: &Coupling) -> Result<Coupling> {
    lambda.check()?;
    if lambda.l2 == 0.0 {
        return Err(Error::ZeroLambda2);
    }
    let Coupling { l1, l2, l3 } = *lambda;
    Ok(Coupling { l1: l3 / l2, l2: 1.0 / l2, l3: l1 / l2 })
}

pub fn criticality(lambda: &Coupling) -> Result<HarperVerdict> {
    let d = delta(lambda)?;
    let tag = region(lambda)?;
    let Coupling { l1, l2, l3 } = *lambda;
    let critical = if !close(l1, l3) {
        (close(l1 + l3, 1.0) && le(l2, 1.0)) || (le(l1 + l3, 1.0) && close(l2, 1.0))
    } else {
        tag.member_of.contains(&Region::III) || (le(2.0 * l1, 1.0) && close(l2, 1.0))
    };
    let criticality = if d > BOUNDARY_TOL && !critical {
        Criticality::Supercritical
    } else if critical {
        Criticality::Critical
    } else {
        Criticality::Subcritical
    };
    Ok(HarperVerdict { le_on_spectrum: thouless_le(lambda)?, delta: d, criticality, l_m: l_m(lambda) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DualityCheck {
    pub le_b: f64,
    pub jensen_term: f64,
    pub le_b_dual: f64,
    pub residual: f64,
}

/// `| L(B_lambda^E) - int log|l2 c_sigma / c_lambda| - L(B_sigma^{E/l2}) |`
/// with both exponents from the iterative estimator.
pub fn duality_le_identity_check(
    lambda: &Coupling,
    beta: &Frequency,
    energy: f64,
    n: u64,
    phase_samples: usize,
) -> Result<DualityCheck> {
    let tag = region(lambda)?;
    if !tag.member_of.contains(&Region::I) {
        return Err(Error::InadmissibleCoupling(format!("{lambda} is not in region I")));
    }
    let sigma = duality(lambda)?;
    let b = beta.value();
    let jensen_term = lambda.l2.ln() + i_eps_quadrature(&sigma.c_poly(b), 0.0, 1e-10)?
        - i_eps_quadrature(&lambda.c_poly(b), 0.0, 1e-10)?;
    let le_b = le_iterative(&build_cocycle(lambda, beta, energy, Which::B)?, 0.0, n, phase_samples)?.estimate;
    let le_b_dual =
        le_iterative(&build_cocycle(&sigma, beta, energy / lambda.l2, Which::B)?, 0.0, n, phase_samples)?.estimate;
    Ok(DualityCheck { le_b, jensen_term, le_b_dual, residual: (le_b - jensen_term - le_b_dual).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jensen::i_eps_exact;
    use crate::mat2::Mat2C;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cp(l1: f64, l2: f64, l3: f64) -> Coupling {
        Coupling::new(l1, l2, l3).unwrap()
    }

    #[test]
    fn c_lambda_evaluation() {
        let c = cp(1.0, 0.0, 0.0).c_poly(0.0);
        let v = c.eval(Complex64::new(0.25, 0.0));
        assert_abs_diff_eq!((v - Complex64::new(0.0, 1.0)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn almost_mathieu_cocycle() {
        let a = build_cocycle(&cp(0.0, 1.0, 0.0), &Frequency::golden(), 0.0, Which::A).unwrap();
        for x in [0.0, 0.13, 0.5] {
            let m = a.eval(x, 0.0);
            let expect = Mat2C::from_real(-2.0 * (TAU * x).cos(), -1.0, 1.0, 0.0);
            assert_abs_diff_eq!(
                (m.a11 - expect.a11).norm() + (m.a12 - expect.a12).norm() + (m.a21 - expect.a21).norm() + m.a22.norm(),
                0.0,
                epsilon = 1e-14
            );
            assert_abs_diff_eq!((m.det() - 1.0).norm(), 0.0, epsilon = 1e-14);
        }
        assert!(!a.is_singular());
    }

    #[test]
    fn det_is_cbar_times_c() {
        let lam = cp(0.3, 0.8, 0.1);
        let beta = Frequency::golden();
        let a = build_cocycle(&lam, &beta, 0.4, Which::A).unwrap();
        let c = lam.c_poly(beta.value());
        for x in [0.05, 0.4, 0.77] {
            let expect = c.eval_strip(x - beta.value(), 0.0).conj() * c.eval_strip(x, 0.0);
            assert_abs_diff_eq!((a.eval(x, 0.0).det() - expect).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn singular_flag_from_real_zeros() {
        let a = build_cocycle(&cp(0.5, 0.4, 0.5), &Frequency::golden(), 0.0, Which::A).unwrap();
        assert!(a.is_singular());
        let roots = crate::roots::roots_on_cylinder(&cp(0.5, 0.4, 0.5).c_poly(0.0)).unwrap();
        assert_eq!(roots.roots.len(), 2);
        assert!(roots.roots.iter().all(|r| r.eps.abs() < 1e-9));
        assert!(cp(0.5, 0.4, 0.5).c_has_real_zeros());
        assert!(!cp(0.5, 1.2, 0.5).c_has_real_zeros());
    }

    #[test]
    fn region_examples() {
        assert_eq!(region(&cp(0.5, 0.5, 0.3)).unwrap().tag, Region::I);
        assert_eq!(region(&cp(0.2, 2.0, 0.3)).unwrap().tag, Region::II);
        assert_eq!(region(&cp(1.0, 0.5, 0.5)).unwrap().tag, Region::III);
        let t = region(&cp(0.5, 0.4, 0.5)).unwrap();
        assert!(t.on_boundary.contains(&Boundary::SumOne));
        assert!(t.on_boundary.contains(&Boundary::Isotropic));
        assert!(t.member_of.contains(&Region::III));
        assert!(Coupling::new(-0.1, 1.0, 0.0).is_err());
        assert!(Coupling::new(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn i_eps_closed_examples() {
        assert_abs_diff_eq!(harper_i_eps_closed(&cp(0.0, 1.0, 2.0), 0.0).unwrap(), 2f64.ln(), epsilon = 1e-15);
        for eps in [-0.3, 0.0, 0.8] {
            assert_abs_diff_eq!(harper_i_eps_closed(&cp(0.0, 0.5, 0.0), eps).unwrap(), 0.5f64.ln(), epsilon = 1e-15);
        }
        // third case against the unsimplified expression
        let v = harper_i_eps_closed(&cp(0.1, 1.0, 0.1), 0.0).unwrap();
        let raw_form = (2.0 * 0.01 / (-1.0 + 0.96f64.sqrt())).abs().ln();
        assert_abs_diff_eq!(v, raw_form, epsilon = 1e-12);
        assert_abs_diff_eq!(v, -0.010_152_9, epsilon = 1e-6);
    }

    #[test]
    fn l_m_examples() {
        assert_eq!(l_m(&cp(0.0, 0.3, 0.7)), 0.0);
        assert_abs_diff_eq!(l_m(&cp(0.5, 0.1, 0.5)), 0.5f64.ln(), epsilon = 1e-15);
        let v = l_m(&cp(1.0, 0.1, 0.1));
        assert_abs_diff_eq!(v, ((1.0 + 0.6f64.sqrt()) / 2.0).ln(), epsilon = 1e-15);
        // oracle: spectral radius of the constant limit matrix M^(0)
        let beta = 0.3819f64;
        for &(l1, l3) in &[(0.5, 0.5), (1.0, 0.1), (0.9, 0.8), (0.2, 0.0)] {
            let ph = Complex64::from_polar(1.0, PI * beta);
            let m0 = Mat2C::new(Complex64::new(-1.0, 0.0), -ph * l1, ph.conj() * l3, Complex64::new(0.0, 0.0));
            assert_abs_diff_eq!(l_m(&cp(l1, 0.3, l3)), m0.spectral_radius().ln(), epsilon = 1e-7);
        }
    }

    #[test]
    fn thouless_examples() {
        assert_abs_diff_eq!(thouless_le(&cp(0.0, 0.5, 0.0)).unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(thouless_le(&cp(0.5, 0.2, 0.2)).unwrap(), (1.0 + 0.6f64.sqrt()).ln(), epsilon = 1e-15);
        assert_eq!(thouless_le(&cp(1.0, 0.5, 0.5)).unwrap(), 0.0);
        assert_abs_diff_eq!(delta(&cp(0.25, 0.25, 0.25)).unwrap(), ((1.0 + 0.75f64.sqrt()) / 0.5).ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(delta(&cp(0.7, 0.5, 0.3)).unwrap(), 0.0, epsilon = 1e-12);
        assert!(delta(&cp(0.2, 2.0, 0.3)).unwrap() <= 0.0);
    }

    #[test]
    fn complex_le_examples() {
        let r = complex_le(&cp(0.0, 0.5, 0.0), 0.0).unwrap();
        assert_abs_diff_eq!(r.le_b_on_spectrum, 2f64.ln(), epsilon = 1e-15);
        let r = complex_le(&cp(1.0, 0.5, 0.5), 0.0).unwrap();
        assert_abs_diff_eq!(r.le_b_on_spectrum, 0.0, epsilon = 1e-15);
        let lam = cp(0.25, 0.25, 0.25);
        let r = complex_le(&lam, 0.5).unwrap();
        assert_abs_diff_eq!(r.le_a_lower, l_m(&lam) + PI, epsilon = 1e-15);
        assert_abs_diff_eq!(r.le_b_on_spectrum, r.le_a_lower - harper_i_eps_closed(&lam, 0.5).unwrap(), epsilon = 1e-15);
    }

    #[test]
    fn duality_examples() {
        assert_eq!(duality(&cp(0.0, 0.5, 0.0)).unwrap(), cp(0.0, 2.0, 0.0));
        assert_eq!(duality(&cp(1.0, 0.5, 0.5)).unwrap(), cp(1.0, 2.0, 2.0));
        assert_eq!(region(&cp(1.0, 2.0, 2.0)).unwrap().tag, Region::III);
        assert_eq!(duality(&cp(0.3, 0.0, 0.1)), Err(Error::ZeroLambda2));
        let back = duality(&duality(&cp(0.3, 0.8, 0.1)).unwrap()).unwrap();
        for (a, b) in back.as_array().iter().zip(cp(0.3, 0.8, 0.1).as_array()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn criticality_examples() {
        assert_eq!(criticality(&cp(0.7, 0.5, 0.3)).unwrap().criticality, Criticality::Critical);
        assert_eq!(criticality(&cp(0.5, 0.4, 0.5)).unwrap().criticality, Criticality::Critical);
        assert_eq!(criticality(&cp(0.1, 2.0, 0.1)).unwrap().criticality, Criticality::Subcritical);
        assert_eq!(criticality(&cp(0.25, 0.25, 0.25)).unwrap().criticality, Criticality::Supercritical);
    }

    #[test]
    fn closed_form_i_matches_jensen_exact() {
        let lam = cp(0.5, 0.4, 0.5);
        let p = i_eps_exact(&lam.c_poly(0.2)).unwrap();
        for eps in [-0.5, -0.1, 0.0, 0.05, 0.3] {
            assert_abs_diff_eq!(p.eval(eps), harper_i_eps_closed(&lam, eps).unwrap(), epsilon = 1e-9);
        }
    }

    fn arb_coupling() -> impl Strategy<Value = Coupling> {
        (0.0f64..2.0, 0.0f64..2.5, 0.0f64..2.0)
            .prop_filter("admissible", |(a, b, c)| a + b + c > 1e-3)
            .prop_map(|(l1, l2, l3)| Coupling { l1, l2, l3 })
    }

    proptest! {
        #[test]
        fn thouless_is_positive_part_of_delta(lam in arb_coupling()) {
            let d = delta(&lam).unwrap();
            let t = thouless_le(&lam).unwrap();
            prop_assert!((t - d.max(0.0)).abs() <= 1e-12, "{t} vs {d}");
        }

        #[test]
        fn delta_is_l_m_minus_i(lam in arb_coupling()) {
            prop_assume!(lam.l1 > 0.0 || lam.l3 > 0.0 || lam.l2 > 0.0);
            let d = delta(&lam).unwrap();
            let rhs = l_m(&lam) - i_lambda(&lam).unwrap();
            prop_assert!((d - rhs).abs() <= 1e-12, "{d} vs {rhs}");
        }

        #[test]
        fn duality_is_an_involution_with_region_action(lam in arb_coupling()) {
            prop_assume!(lam.l2 > 1e-2);
            let s = duality(&lam).unwrap();
            let back = duality(&s).unwrap();
            for (a, b) in back.as_array().iter().zip(lam.as_array()) {
                prop_assert!((a - b).abs() <= 1e-14 * b.max(1.0));
            }
            let r = region(&lam).unwrap();
            let rs = region(&s).unwrap();
            if r.member_of.contains(&Region::I) { prop_assert!(rs.member_of.contains(&Region::II)); }
            if r.member_of.contains(&Region::II) { prop_assert!(rs.member_of.contains(&Region::I)); }
            if r.member_of.contains(&Region::III) { prop_assert!(rs.member_of.contains(&Region::III)); }
        }

        #[test]
        fn region_three_is_lambda2_independent(l1 in 0.0f64..2.0, l3 in 0.0f64..2.0, a in 0.0f64..3.0, b in 0.0f64..3.0) {
            prop_assume!(l1 + l3 >= 1.0);
            let t1 = thouless_le(&Coupling { l1, l2: a.min(l1 + l3), l3 }).unwrap();
            let t2 = thouless_le(&Coupling { l1, l2: b.min(l1 + l3), l3 }).unwrap();
            prop_assert_eq!(t1, t2);
        }

        #[test]
        fn i_eps_closed_is_continuous(lam in arb_coupling(), eps in -1.0f64..1.0) {
            prop_assume!(lam.l1 > 1e-2 && lam.l2 > 1e-2 && lam.l3 > 1e-2);
            let h = 1e-7;
            let base = harper_i_eps_closed(&lam, eps).unwrap();
            let de = harper_i_eps_closed(&lam, eps + h).unwrap();
            let dl = harper_i_eps_closed(&Coupling { l2: lam.l2 + h, ..lam }, eps).unwrap();
            // Lipschitz with constant bounded by 2 pi and 1 / min(l)
            prop_assert!((de - base).abs() <= 7.0 * h);
            prop_assert!((dl - base).abs() <= h / lam.l2.min(lam.l1).min(lam.l3) + 1e-12);
        }
    }
}
