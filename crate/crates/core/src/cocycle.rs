//! Cocycles over a circle rotation and their Lyapunov exponents.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frequency::Frequency;
use crate::mat2::{vec_norm, Mat2C, Vec2C};
use crate::quad::GaussLegendre;
use crate::roots::roots_on_cylinder;
use crate::trig::{cis_turns, TrigPoly};

/// Floor applied to the argument of a logarithm that hits an exact zero.
pub const LOG_FLOOR: f64 = 1e-300;
/// Root heights below this count as lying on the real line.
pub const SINGULAR_TOL: f64 = 1e-9;

/// `(beta, D)` with `D` a 2x2 matrix of trigonometric polynomials,
/// optionally divided pointwise by a scalar trigonometric polynomial.
#[derive(Clone, Debug, PartialEq)]
pub struct Cocycle {
    pub freq: Frequency,
    pub entries: [TrigPoly; 4],
    pub divisor: Option<TrigPoly>,
}

impl Cocycle {
    /// Entries in row-major order `a11, a12, a21, a22`.
    pub fn new(freq: Frequency, entries: [TrigPoly; 4]) -> Self {
        Self { freq, entries, divisor: None }
    }

    pub fn constant(freq: Frequency, m: Mat2C) -> Self {
        Self::new(
            freq,
            [TrigPoly::constant(m.a11), TrigPoly::constant(m.a12), TrigPoly::constant(m.a21), TrigPoly::constant(m.a22)],
        )
    }

    /// The same cocycle with every entry divided by `d(x)`.
    pub fn with_divisor(mut self, d: TrigPoly) -> Self {
        self.divisor = Some(d);
        self
    }

    pub fn with_freq(&self, freq: Frequency) -> Self {
        Self { freq, ..self.clone() }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(TrigPoly::is_zero)
    }

    /// Numerator matrix and divisor value at `x + i eps`.
    #[inline]
    pub fn eval_parts(&self, x: f64, s: f64, s_inv: f64) -> (Mat2C, Complex64) {
        let u = cis_turns(x);
        let [a, b, c, d] = &self.entries;
        let m = Mat2C::new(a.eval_parts(u, s, s_inv), b.eval_parts(u, s, s_inv), c.eval_parts(u, s, s_inv), d.eval_parts(u, s, s_inv));
        let div = self.divisor.as_ref().map_or(Complex64::new(1.0, 0.0), |p| p.eval_parts(u, s, s_inv));
        (m, div)
    }

    /// `D(x + i eps)`.
    pub fn eval(&self, x: f64, eps: f64) -> Mat2C {
        let s = (-TAU * eps).exp();
        let (m, div) = self.eval_parts(x, s, 1.0 / s);
        if self.divisor.is_some() {
            m.scale(div.inv())
        } else {
            m
        }
    }

    /// `det` of the numerator matrix, as a trigonometric polynomial.
    pub fn det_poly(&self) -> TrigPoly {
        let [a, b, c, d] = &self.entries;
        &(a * d) - &(b * c)
    }

    /// True when the numerator determinant has a zero on the real line.
    pub fn is_singular(&self) -> bool {
        match roots_on_cylinder(&self.det_poly()) {
            Ok(r) => r.roots.iter().any(|z| z.eps.abs() < SINGULAR_TOL),
            Err(_) => true,
        }
    }
}

fn strip_scale(eps: f64) -> (f64, f64) {
    let s = (-TAU * eps).exp();
    (s, (TAU * eps).exp())
}

/// `D(x + (n-1) beta + i eps) ... D(x + i eps)`, newest factor on the left.
pub fn transfer_product(c: &Cocycle, x: f64, n: u64, eps: f64) -> Mat2C {
    let (s, s_inv) = strip_scale(eps);
    let mut p = Mat2C::identity();
    for k in 0..n {
        let (m, div) = c.eval_parts(c.freq.orbit(x, k), s, s_inv);
        let m = if c.divisor.is_some() { m.scale(div.inv()) } else { m };
        p = m * p;
    }
    p
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeEstimate {
    /// Phase-averaged `(1/n) log ||D^(n)||`, operator norm.
    pub estimate: f64,
    /// `(n_k, estimate at n_k)` for `n_k = 1, 2, 4, ...` and finally `n`.
    pub upper_sequence: Vec<(u64, f64)>,
    /// Sample standard deviation over phases at each entry of `upper_sequence`.
    pub sequence_noise: Vec<f64>,
    /// Per-phase estimates; `None` for flagged phases.
    pub per_phase: Vec<Option<f64>>,
    /// Phases excluded because a product or divisor hit an exact zero.
    pub flagged: usize,
    /// Sample standard deviation of the unflagged per-phase estimates.
    pub noise: f64,
}

struct PhaseRun {
    checkpoints: Vec<f64>,
    flagged: bool,
}

fn run_phase(c: &Cocycle, x0: f64, n: u64, s: f64, s_inv: f64, checks: &[u64]) -> PhaseRun {
    let mut p = Mat2C::identity();
    let mut log_acc = 0.0;
    let mut next = 0usize;
    let mut out = Vec::with_capacity(checks.len());
    let mut flagged = false;
    for k in 0..n {
        let (m, div) = c.eval_parts(c.freq.orbit(x0, k), s, s_inv);
        p = m * p;
        let r = p.op_norm();
        if !(r > 0.0) || !r.is_finite() {
            flagged = true;
            log_acc += LOG_FLOOR.ln();
            p = Mat2C::identity();
        } else {
            log_acc += r.ln();
            p *= 1.0 / r;
        }
        if c.divisor.is_some() {
            let dn = div.norm();
            if dn == 0.0 {
                flagged = true;
            }
            log_acc -= dn.max(LOG_FLOOR).ln();
        }
        if next < checks.len() && k + 1 == checks[next] {
            out.push(log_acc / (k + 1) as f64);
            next += 1;
        }
    }
    PhaseRun { checkpoints: out, flagged }
}

fn doubling_checkpoints(n: u64) -> Vec<u64> {
    let mut v = Vec::new();
    let mut k = 1;
    while k < n {
        v.push(k);
        k *= 2;
    }
    v.push(n);
    v
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (m, v.sqrt())
}

/// Iterative estimate of `L(beta, D_eps)` from `n`-step products started at
/// the phases `(j + 1/2) / phase_samples`.
pub fn le_iterative(c: &Cocycle, eps: f64, n: u64, phase_samples: usize) -> Result<LeEstimate> {
    if n == 0 || phase_samples == 0 {
        return Err(Error::InvalidInput("n and phase_samples must be at least 1".into()));
    }
    if c.is_zero() {
        return Err(Error::ZeroCocycle);
    }
    let (s, s_inv) = strip_scale(eps);
    let checks = doubling_checkpoints(n);
    let runs: Vec<PhaseRun> = (0..phase_samples)
        .into_par_iter()
        .map(|j| run_phase(c, (j as f64 + 0.5) / phase_samples as f64, n, s, s_inv, &checks))
        .collect();

    let good: Vec<&PhaseRun> = runs.iter().filter(|r| !r.flagged).collect();
    let flagged = runs.len() - good.len();
    if good.is_empty() {
        // every phase hit an exact zero; report the floored values
        let last: Vec<f64> = runs.iter().map(|r| *r.checkpoints.last().unwrap()).collect();
        let (m, sd) = mean_std(&last);
        return Ok(LeEstimate {
            estimate: m,
            upper_sequence: vec![(n, m)],
            sequence_noise: vec![sd],
            per_phase: vec![None; runs.len()],
            flagged,
            noise: sd,
        });
    }
    let (upper_sequence, sequence_noise): (Vec<(u64, f64)>, Vec<f64>) = checks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let at: Vec<f64> = good.iter().map(|r| r.checkpoints[i]).collect();
            let (m, sd) = mean_std(&at);
            ((k, m), sd)
        })
        .unzip();
    let finals: Vec<f64> = good.iter().map(|r| *r.checkpoints.last().unwrap()).collect();
    let (estimate, noise) = mean_std(&finals);
    let per_phase = runs.iter().map(|r| (!r.flagged).then(|| *r.checkpoints.last().unwrap())).collect();
    Ok(LeEstimate { estimate, upper_sequence, sequence_noise, per_phase, flagged, noise })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RationalLe {
    pub value: f64,
    /// Difference between the rule and the same rule on half as many panels.
    pub error_estimate: f64,
    /// Nodes at which `rho` vanished; they are left out of the sum.
    pub flagged: usize,
    pub nodes: usize,
}

const PANEL: usize = 8;

/// `(1/q) int_T log rho(D^(q)(x + i eps)) dx`, integrated over one period
/// `[0, 1/q)` of the integrand by composite Gauss-Legendre with about
/// `quad_points / q` nodes.
pub fn le_rational(c: &Cocycle, eps: f64, quad_points: usize) -> Result<f64> {
    le_rational_detailed(c, eps, quad_points).map(|r| r.value)
}

pub fn le_rational_detailed(c: &Cocycle, eps: f64, quad_points: usize) -> Result<RationalLe> {
    let q = match c.freq {
        Frequency::Rational { q, .. } => q,
        Frequency::Irrational { .. } => return Err(Error::NotRational),
    };
    if (quad_points as u64) < q {
        return Err(Error::InvalidInput(format!("quad_points = {quad_points} is below q = {q}")));
    }
    if c.is_zero() {
        return Err(Error::ZeroCocycle);
    }
    let (s, s_inv) = strip_scale(eps);
    let nodes = (quad_points as u64).div_ceil(q) as usize;
    let panels = nodes.div_ceil(PANEL).max(2);
    let panels = panels + panels % 2;
    let g = GaussLegendre::new(PANEL);
    let width = 1.0 / q as f64;

    let log_rho = |x: f64| -> Option<f64> {
        let mut p = Mat2C::identity();
        let mut log_scale = 0.0;
        for k in 0..q {
            let (m, div) = c.eval_parts(c.freq.orbit(x, k), s, s_inv);
            p = m * p;
            let r = p.norm();
            if !(r > 0.0) || !r.is_finite() {
                return None;
            }
            log_scale += r.ln();
            p *= 1.0 / r;
            if c.divisor.is_some() {
                let dn = div.norm();
                if dn == 0.0 {
                    return None;
                }
                log_scale -= dn.ln();
            }
        }
        let rho = p.spectral_radius();
        if rho > 0.0 {
            Some(rho.ln() + log_scale)
        } else {
            None
        }
    };

    let rule = |n_panels: usize| -> Vec<(f64, f64)> {
        let h = width / n_panels as f64;
        (0..n_panels).flat_map(|i| g.mapped(i as f64 * h, (i + 1) as f64 * h).collect::<Vec<_>>()).collect()
    };
    let fine = rule(panels);
    let coarse = rule(panels / 2);
    let fine_vals: Vec<Option<f64>> = fine.par_iter().map(|&(x, _)| log_rho(x)).collect();
    let coarse_vals: Vec<Option<f64>> = coarse.par_iter().map(|&(x, _)| log_rho(x)).collect();

    let sum = |pts: &[(f64, f64)], vals: &[Option<f64>]| -> (f64, usize) {
        let mut acc = 0.0;
        let mut bad = 0;
        for (&(_, w), v) in pts.iter().zip(vals) {
            match v {
                Some(v) => acc += w * v,
                None => bad += 1,
            }
        }
        // the mean over one period of length 1/q, then divided by q
        (acc / width / q as f64, bad)
    };
    let (value, flagged) = sum(&fine, &fine_vals);
    let (coarse_value, _) = sum(&coarse, &coarse_vals);
    Ok(RationalLe { value, error_estimate: (value - coarse_value).abs(), flagged, nodes: fine.len() })
}

/// Forward rate `(1/n) log ||D^(n)(x) w0||` and backward rate
/// `(1/n) log ||D^(-n)(x) w0||`, where `D^(-n)(x) = D^(n)(x - n beta)^{-1}`.
pub fn solution_growth(c: &Cocycle, x: f64, w0: Vec2C, n: u64) -> Result<(f64, Result<f64>)> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    if (vec_norm(&w0) - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput("initial vector must have unit norm".into()));
    }
    let (s, s_inv) = strip_scale(0.0);
    let step = |v: Vec2C, m: Mat2C, log_acc: &mut f64| -> Vec2C {
        let w = m.apply(&v);
        let r = vec_norm(&w).max(LOG_FLOOR);
        *log_acc += r.ln();
        [w[0] / r, w[1] / r]
    };
    let mut v = w0;
    let mut fwd = 0.0;
    for k in 0..n {
        let m = c.eval_parts(c.freq.orbit(x, k), s, s_inv);
        let m = if c.divisor.is_some() { m.0.scale(m.1.inv()) } else { m.0 };
        v = step(v, m, &mut fwd);
    }

    // D^(n)(x - n beta)^{-1} = D(x - n beta)^{-1} ... D(x - beta)^{-1}
    let backward = (|| {
        let mut v = w0;
        let mut bwd = 0.0;
        let beta = c.freq.value();
        for k in 1..=n {
            let xk = match c.freq {
                Frequency::Rational { q, .. } => c.freq.orbit(x, q - (k % q)),
                Frequency::Irrational { .. } => (x - (k as f64 * beta).rem_euclid(1.0)).rem_euclid(1.0),
            };
            let m = c.eval_parts(xk, s, s_inv);
            let m = if c.divisor.is_some() { m.0.scale(m.1.inv()) } else { m.0 };
            if m.det().norm() < 1e-12 {
                return Err(Error::SingularInverse { step: k });
            }
            let inv = m.inverse().ok_or(Error::SingularInverse { step: k })?;
            v = step(v, inv, &mut bwd);
        }
        Ok(bwd / n as f64)
    })();
    Ok((fwd / n as f64, backward))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn golden() -> Frequency {
        Frequency::golden()
    }

    #[test]
    fn identity_and_diagonal_products() {
        let id = Cocycle::constant(golden(), Mat2C::identity());
        assert_eq!(transfer_product(&id, 0.3, 10, 0.0), Mat2C::identity());
        let d = Cocycle::constant(golden(), Mat2C::diag(2.0, 1.0));
        assert_eq!(transfer_product(&d, 0.3, 5, 0.0), Mat2C::diag(32.0, 1.0));
    }

    #[test]
    fn diagonal_le_is_log_two() {
        let d = Cocycle::constant(golden(), Mat2C::diag(2.0, 1.0));
        for n in [1, 7, 100] {
            let est = le_iterative(&d, 0.0, n, 4).unwrap();
            // operator norm of diag(2^n, 1) is 2^n at every n
            assert_abs_diff_eq!(est.estimate, 2f64.ln(), epsilon = 1e-12);
        }
        let est = le_iterative(&d, 0.0, 10_000, 2).unwrap();
        assert_abs_diff_eq!(est.estimate, 2f64.ln(), epsilon = 1e-6);
    }

    #[test]
    fn zero_cocycle_is_an_error() {
        let z = Cocycle::constant(golden(), Mat2C::zero());
        assert_eq!(le_iterative(&z, 0.0, 10, 1), Err(Error::ZeroCocycle));
    }

    #[test]
    fn rank_one_row_cocycle_telescopes() {
        // rows ((c, 0), (0, 0)) with c = exp(2 pi i x); the product is diag(prod c, 0)
        let c = TrigPoly::from_harmonics([(1, 1.0)]);
        let cyc = Cocycle::new(golden(), [c.clone(), TrigPoly::zero(), TrigPoly::zero(), TrigPoly::zero()]);
        for n in [1u64, 2, 16, 1024] {
            let est = le_iterative(&cyc, 0.0, n, 3).unwrap();
            // brute force: the product of |c| over the orbit
            let brute: f64 = (0..3)
                .map(|j| {
                    let x0 = (j as f64 + 0.5) / 3.0;
                    (0..n).map(|k| c.eval_strip(golden().orbit(x0, k), 0.0).norm().ln()).sum::<f64>() / n as f64
                })
                .sum::<f64>()
                / 3.0;
            assert_abs_diff_eq!(est.estimate, brute, epsilon = 1e-12);
            assert_abs_diff_eq!(est.estimate, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rational_constant_examples() {
        let id = Cocycle::constant(Frequency::rational(1, 3).unwrap(), Mat2C::identity());
        assert_abs_diff_eq!(le_rational(&id, 0.0, 64).unwrap(), 0.0, epsilon = 1e-15);
        let m = Mat2C::from_real(3.0, 1.0, 0.0, 1.0 / 3.0);
        let c = Cocycle::constant(Frequency::rational(1, 2).unwrap(), m);
        assert_abs_diff_eq!(le_rational(&c, 0.0, 64).unwrap(), 3f64.ln(), epsilon = 1e-13);
        let irr = Cocycle::constant(golden(), m);
        assert_eq!(le_rational(&irr, 0.0, 64), Err(Error::NotRational));
    }

    #[test]
    fn diagonal_solution_growth() {
        let d = Cocycle::constant(golden(), Mat2C::diag(2.0, 0.5));
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let (f, b) = solution_growth(&d, 0.1, [one, zero], 50).unwrap();
        assert_abs_diff_eq!(f, 2f64.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(b.unwrap(), -(2f64.ln()), epsilon = 1e-14);
        let (f, _) = solution_growth(&d, 0.1, [zero, one], 50).unwrap();
        assert_abs_diff_eq!(f, -(2f64.ln()), epsilon = 1e-14);
        let sing = Cocycle::constant(golden(), Mat2C::diag(2.0, 0.0));
        let (_, b) = solution_growth(&sing, 0.1, [one, zero], 5).unwrap();
        assert_eq!(b, Err(Error::SingularInverse { step: 1 }));
        assert!(solution_growth(&d, 0.1, [one, one], 5).is_err());
    }

    #[test]
    fn product_order_splits() {
        let c = Cocycle::new(
            golden(),
            [
                TrigPoly::cosine(1, 2.0),
                TrigPoly::constant(-1.0),
                TrigPoly::from_harmonics([(1, 0.3), (0, 1.0)]),
                TrigPoly::zero(),
            ],
        );
        let (m, n) = (7u64, 5u64);
        let x = 0.27;
        let whole = transfer_product(&c, x, m + n, 0.05);
        let split = transfer_product(&c, golden().orbit(x, n), m, 0.05) * transfer_product(&c, x, n, 0.05);
        let diff = Mat2C::new(whole.a11 - split.a11, whole.a12 - split.a12, whole.a21 - split.a21, whole.a22 - split.a22);
        assert!(diff.norm() <= 1e-12 * whole.norm());
    }
}
