//! Approximations of the spectrum of the extended Harper operator
//! `(H psi)_k = v(theta + k beta) psi_k + c(theta + k beta) psi_{k+1} + cbar(theta + (k-1) beta) psi_{k-1}`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frequency::Frequency;
use crate::harper::{potential, Coupling};
use crate::trig::TrigPoly;

/// Off-diagonal moduli below this are treated as vanishing.
pub const GAUGE_TOL: f64 = 1e-8;
const THETA_NUDGE: f64 = 1e-6;
/// Smallest per-phase eigenvalue group kept as part of the spectrum.
pub const MIN_CLUSTER: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Method {
    Truncation,
    Floquet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SpectrumParams {
    /// Half-size `N` of the finite section, or the period `q`.
    pub size: u64,
    pub theta_samples: usize,
    /// Phases left out (Floquet) or nudged (truncation) because `|c|` nearly vanished.
    pub skipped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumApprox {
    pub points: Vec<f64>,
    pub merged_intervals: Vec<(f64, f64)>,
    /// Number of points inside each merged interval.
    pub interval_counts: Vec<usize>,
    pub method: Method,
    pub params: SpectrumParams,
}

/// `2 + 2 (l1 + l2 + l3)`.
pub fn norm_bound(lambda: &Coupling) -> f64 {
    2.0 + 2.0 * (lambda.l1 + lambda.l2 + lambda.l3)
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `d` and
/// off-diagonal `e` (`e[i]` couples `i` and `i + 1`), by implicit QL with
/// Wilkinson shifts. Returned sorted.
pub fn tridiagonal_eigenvalues(d: &[f64], e: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut d = d.to_vec();
    let mut e: Vec<f64> = e.iter().copied().chain(std::iter::repeat(0.0)).take(n).collect();
    if n > 0 {
        e[n - 1] = 0.0;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 64 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = (g * g + 1.0).sqrt();
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = (f * f + g * g).sqrt();
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    d
}

fn median_spacing(sorted: &[f64]) -> f64 {
    let mut gaps: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    if gaps.is_empty() {
        return 0.0;
    }
    gaps.sort_by(f64::total_cmp);
    gaps[gaps.len() / 2]
}

/// Groups sorted points into clusters whose internal gaps are at most `tol`.
fn cluster(sorted: &[f64], tol: f64) -> Vec<(f64, f64, usize)> {
    let mut out: Vec<(f64, f64, usize)> = Vec::new();
    for &x in sorted {
        match out.last_mut() {
            Some((_, hi, n)) if x - *hi <= tol => {
                *hi = x;
                *n += 1;
            }
            _ => out.push((x, x, 1)),
        }
    }
    out
}

/// Union of closed intervals, sorted and pairwise disjoint.
pub fn union_intervals(mut iv: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in iv {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

/// Finite-section spectrum: the union over `theta = (j + 1/2) / theta_samples`
/// of the eigenvalues of the `(2N + 1)`-site truncation with zero boundary
/// conditions, gauged to real nonnegative off-diagonals `|c|`.
///
/// Each phase's eigenvalues are grouped with a gap tolerance of twice that
/// phase's median spacing, keeping groups of at least [`MIN_CLUSTER`] points.
/// Points with at least `max(2, theta_samples / 4)` neighbours from all phases
/// within the median tolerance are grouped the same way. Both kinds of group
/// are united into `merged_intervals`. Boundary states of the finite section
/// are isolated in their own phase and wander with `theta`, so they pass
/// neither test.
pub fn spectrum_truncation(lambda: &Coupling, beta: &Frequency, theta_samples: usize, n: usize) -> Result<SpectrumApprox> {
    lambda.check()?;
    if n < 50 || theta_samples < 1 {
        return Err(Error::InvalidInput("need N >= 50 and at least one phase".into()));
    }
    let c = lambda.c_poly(beta.value());
    let v = potential();
    let size = 2 * n + 1;
    let runs: Vec<(Vec<f64>, bool)> = (0..theta_samples)
        .into_par_iter()
        .map(|j| {
            let theta = (j as f64 + 0.5) / theta_samples as f64;
            let build = |theta: f64| -> (Vec<f64>, Vec<f64>, bool) {
                let mut d = Vec::with_capacity(size);
                let mut e = Vec::with_capacity(size);
                let mut tiny = false;
                for k in 0..size {
                    let x = site_phase(beta, theta, k as i64 - n as i64);
                    d.push(v.eval_strip(x, 0.0).re);
                    let a = c.eval_strip(x, 0.0).norm();
                    if k + 1 < size && a < GAUGE_TOL {
                        tiny = true;
                    }
                    e.push(a);
                }
                (d, e, tiny)
            };
            let (mut d, mut e, tiny) = build(theta);
            if tiny {
                (d, e, _) = build(theta + THETA_NUDGE);
            }
            (tridiagonal_eigenvalues(&d, &e[..size - 1]), tiny)
        })
        .collect();
    let skipped = runs.iter().filter(|r| r.1).count();
    let mut bands: Vec<(f64, f64)> = Vec::new();
    let mut spacings = Vec::with_capacity(runs.len());
    for (ev, _) in &runs {
        let s = median_spacing(ev);
        spacings.push(s);
        bands.extend(cluster(ev, 2.0 * s).into_iter().filter(|c| c.2 >= MIN_CLUSTER).map(|c| (c.0, c.1)));
    }
    let mut points: Vec<f64> = runs.into_iter().flat_map(|r| r.0).collect();
    points.sort_by(f64::total_cmp);

    // points shared by many phases, with the typical single-phase tolerance
    spacings.sort_by(f64::total_cmp);
    let tol = 2.0 * spacings[spacings.len() / 2];
    let min_count = (theta_samples / 4).max(2);
    let dense: Vec<f64> = points
        .iter()
        .copied()
        .filter(|&x| points.partition_point(|&y| y <= x + tol) - points.partition_point(|&y| y < x - tol) >= min_count)
        .collect();
    bands.extend(cluster(&dense, tol).into_iter().map(|c| (c.0, c.1)));
    let merged = union_intervals(bands);
    let counts = merged
        .iter()
        .map(|&(lo, hi)| points.partition_point(|&x| x <= hi) - points.partition_point(|&x| x < lo))
        .collect();
    Ok(SpectrumApprox {
        merged_intervals: merged,
        interval_counts: counts,
        points,
        method: Method::Truncation,
        params: SpectrumParams { size: n as u64, theta_samples, skipped },
    })
}

fn site_phase(beta: &Frequency, theta: f64, k: i64) -> f64 {
    if k >= 0 {
        beta.orbit(theta, k as u64)
    } else {
        match beta {
            Frequency::Rational { q, .. } => beta.orbit(theta, (*q - (k.unsigned_abs() % *q)) % *q),
            Frequency::Irrational { value, .. } => (theta - (k.unsigned_abs() as f64 * value).rem_euclid(1.0)).rem_euclid(1.0),
        }
    }
}

struct Periodic {
    v: Vec<f64>,
    a: Vec<f64>,
}

impl Periodic {
    fn new(c: &TrigPoly, vpot: &TrigPoly, beta: &Frequency, theta: f64, q: u64) -> Self {
        let mut v = Vec::with_capacity(q as usize);
        let mut a = Vec::with_capacity(q as usize);
        for k in 0..q {
            let x = beta.orbit(theta, k);
            v.push(vpot.eval_strip(x, 0.0).re);
            a.push(c.eval_strip(x, 0.0).norm());
        }
        Self { v, a }
    }

    /// Trace of the q-step transfer matrix of `a_k psi_{k+1} = (E - v_k) psi_k - a_{k-1} psi_{k-1}`.
    fn discriminant(&self, e: f64) -> f64 {
        let q = self.v.len();
        let (mut p11, mut p12, mut p21, mut p22) = (1.0f64, 0.0f64, 0.0f64, 1.0f64);
        let mut log_scale = 0.0;
        for k in 0..q {
            let ak = self.a[k];
            let aprev = self.a[(k + q - 1) % q];
            let t11 = (e - self.v[k]) / ak;
            let t12 = -aprev / ak;
            (p11, p12, p21, p22) = (t11 * p11 + t12 * p21, t11 * p12 + t12 * p22, p11, p12);
            let r = p11.abs().max(p12.abs()).max(p21.abs()).max(p22.abs());
            if r > 1e100 {
                p11 /= r;
                p12 /= r;
                p21 /= r;
                p22 /= r;
                log_scale += r.ln();
            }
        }
        let tr = p11 + p22;
        if log_scale == 0.0 {
            tr
        } else if log_scale > 700.0 {
            tr.signum() * f64::INFINITY
        } else {
            tr * log_scale.exp()
        }
    }

    /// Eigenvalues of the sites `1..q-1` with the bonds to site 0 removed.
    fn dirichlet(&self) -> Vec<f64> {
        let q = self.v.len();
        if q < 2 {
            return Vec::new();
        }
        tridiagonal_eigenvalues(&self.v[1..], &self.a[1..q - 1])
    }
}

/// Root of `f` on `[lo, hi]` given values of opposite sign (or zero) at the ends.
fn illinois(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    let mut side = 0i8;
    for _ in 0..200 {
        let width = hi - lo;
        if width <= 1e-14 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        let mut x = if flo.is_finite() && fhi.is_finite() { (lo * fhi - hi * flo) / (fhi - flo) } else { 0.5 * (lo + hi) };
        // keep the secant step well inside the bracket
        if !(x > lo + 0.01 * width && x < hi - 0.01 * width) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx == 0.0 {
            return Some(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    Some(0.5 * (lo + hi))
}

/// The point where `|disc|` reaches 2 between `outer` (where `|disc| >= 2`)
/// and `inner` (inside the band). A touch of `+-2` exactly at `outer` with
/// `|disc| > 2` just inside belongs to the neighbouring band and is skipped.
fn band_edge(disc: impl Fn(f64) -> f64, outer: f64, inner: f64) -> f64 {
    let target = 2.0 * disc(outer).signum();
    let f = |e: f64| disc(e) - target;
    let mut from = outer;
    if f(outer) == 0.0 {
        let nudged = outer + (inner - outer) * 1e-9;
        if f(nudged).signum() == f(inner).signum() {
            return outer;
        }
        from = nudged;
    }
    let (a, b) = if from < inner { (from, inner) } else { (inner, from) };
    illinois(f, a, b).unwrap_or(inner)
}

/// Floquet bands of the `q`-periodic operator at `beta = p/q`, united over
/// `theta = (j + 1/2) / (q theta_samples)` in `[0, 1/q)`.
///
/// Each Dirichlet interval holds exactly one band; its edges are the roots of
/// `disc(E) = 2` and `disc(E) = -2` there.
pub fn spectrum_floquet(lambda: &Coupling, p: i64, q: u64, theta_samples: usize) -> Result<SpectrumApprox> {
    lambda.check()?;
    if q == 0 || theta_samples == 0 {
        return Err(Error::InvalidInput("need q >= 1 and at least one phase".into()));
    }
    let g = {
        let (mut a, mut b) = (p.unsigned_abs(), q);
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    };
    if g != 1 {
        return Err(Error::InvalidInput(format!("{p}/{q} is not in lowest terms")));
    }
    let beta = Frequency::rational(p, q)?;
    let c = lambda.c_poly(beta.value());
    let vpot = potential();
    let bound = norm_bound(lambda) + 1.0;

    let per_theta: Vec<Option<Vec<(f64, f64)>>> = (0..theta_samples)
        .into_par_iter()
        .map(|j| {
            let theta = (j as f64 + 0.5) / (theta_samples as f64 * q as f64);
            let per = Periodic::new(&c, &vpot, &beta, theta, q);
            if per.a.iter().any(|&a| a < GAUGE_TOL) {
                return None;
            }
            let mut cuts = vec![-bound];
            cuts.extend(per.dirichlet());
            cuts.push(bound);
            let mut bands = Vec::with_capacity(q as usize);
            for w in cuts.windows(2) {
                // disc runs monotonically from +-2 to -+2 across the band, so
                // its zero is inside; the edges are found outward from there
                let (lo, hi) = (w[0], w[1]);
                let disc = |e: f64| per.discriminant(e);
                let Some(z) = illinois(disc, lo, hi) else { continue };
                if disc(z).abs() >= 2.0 {
                    // band narrower than the resolution in E
                    bands.push((z, z));
                    continue;
                }
                let left = band_edge(disc, lo, z);
                let right = band_edge(disc, hi, z);
                bands.push((left.min(right), left.max(right)));
            }
            Some(bands)
        })
        .collect();
    let skipped = per_theta.iter().filter(|b| b.is_none()).count();
    if skipped == theta_samples {
        return Err(Error::SingularGauge { skipped });
    }
    let bands: Vec<(f64, f64)> = per_theta.into_iter().flatten().flatten().collect();
    let mut points: Vec<f64> = bands.iter().flat_map(|&(a, b)| [a, b]).collect();
    points.sort_by(f64::total_cmp);
    let merged = union_intervals(bands);
    let counts = merged
        .iter()
        .map(|&(lo, hi)| points.partition_point(|&x| x <= hi) - points.partition_point(|&x| x < lo))
        .collect();
    Ok(SpectrumApprox {
        points,
        merged_intervals: merged,
        interval_counts: counts,
        method: Method::Floquet,
        params: SpectrumParams { size: q, theta_samples, skipped },
    })
}

fn dist_to_union(x: f64, iv: &[(f64, f64)]) -> f64 {
    let i = iv.partition_point(|&(lo, _)| lo <= x);
    let mut best = f64::INFINITY;
    if i > 0 {
        let (lo, hi) = iv[i - 1];
        best = if x <= hi { 0.0 } else { x - hi };
        let _ = lo;
    }
    if i < iv.len() {
        best = best.min(iv[i].0 - x);
    }
    best
}

/// `sup_{x in a} dist(x, b)` for unions of closed intervals.
fn directed(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut best = 0.0f64;
    for &(lo, hi) in a {
        best = best.max(dist_to_union(lo, b)).max(dist_to_union(hi, b));
        // inside [lo, hi] the distance peaks at the midpoints of gaps of b
        for w in b.windows(2) {
            let m = 0.5 * (w[0].1 + w[1].0);
            if m > lo && m < hi {
                best = best.max(dist_to_union(m, b));
            }
        }
    }
    best
}

/// Symmetric Hausdorff distance between the merged intervals of `a` and `b`.
pub fn hausdorff(a: &SpectrumApprox, b: &SpectrumApprox) -> Result<f64> {
    hausdorff_intervals(&a.merged_intervals, &b.merged_intervals)
}

pub fn hausdorff_intervals(a: &[(f64, f64)], b: &[(f64, f64)]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(directed(a, b).max(directed(b, a)))
}

impl SpectrumApprox {
    pub fn from_points(points: Vec<f64>) -> Self {
        let mut points = points;
        points.sort_by(f64::total_cmp);
        Self {
            merged_intervals: points.iter().map(|&x| (x, x)).collect(),
            interval_counts: vec![1; points.len()],
            points,
            method: Method::Truncation,
            params: SpectrumParams { size: 0, theta_samples: 0, skipped: 0 },
        }
    }

    pub fn measure(&self) -> f64 {
        self.merged_intervals.iter().map(|(a, b)| b - a).sum()
    }

    /// Energies in the middle of the `count` most populated merged intervals:
    /// the median point inside the interval (truncation) or its midpoint
    /// (Floquet). Sorted ascending.
    pub fn sample_energies(&self, count: usize) -> Vec<f64> {
        let mut order: Vec<usize> = (0..self.merged_intervals.len()).collect();
        order.sort_by(|&i, &j| {
            let (a, b) = (self.merged_intervals[i], self.merged_intervals[j]);
            self.interval_counts[j]
                .cmp(&self.interval_counts[i])
                .then((b.1 - b.0).total_cmp(&(a.1 - a.0)))
                .then(i.cmp(&j))
        });
        let mut out: Vec<f64> = order
            .into_iter()
            .take(count)
            .map(|i| {
                let (lo, hi) = self.merged_intervals[i];
                match self.method {
                    Method::Floquet => 0.5 * (lo + hi),
                    Method::Truncation => {
                        let a = self.points.partition_point(|&x| x < lo);
                        let b = self.points.partition_point(|&x| x <= hi);
                        self.points[(a + b - 1) / 2]
                    }
                }
            })
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }
}
