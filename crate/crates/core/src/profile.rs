//! Sweeps in the complexification parameter and acceleration estimates.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use crate::cocycle::{le_iterative, le_rational_detailed, Cocycle};
use crate::error::{Error, Result};

/// Window size, in grid points, for slope fits.
pub const SLOPE_WINDOW: usize = 5;
/// Slope change (in units of `2 pi`) that marks a kink.
pub const SLOPE_KINK_TOL: f64 = 0.15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Backend {
    Iterative { n: u64, phase_samples: usize },
    Rational { quad_points: usize },
}

impl Default for Backend {
    fn default() -> Self {
        Backend::Iterative { n: 10_000, phase_samples: 8 }
    }
}

impl Backend {
    /// `(estimate, noise)` at one height.
    pub fn le(&self, c: &Cocycle, eps: f64) -> Result<(f64, f64)> {
        match *self {
            Backend::Iterative { n, phase_samples } => {
                let r = le_iterative(c, eps, n, phase_samples)?;
                Ok((r.estimate, r.noise))
            }
            Backend::Rational { quad_points } => {
                let r = le_rational_detailed(c, eps, quad_points)?;
                Ok((r.value, r.error_estimate))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Kink {
    pub eps: f64,
    /// Fitted slope / 2pi just below the kink.
    pub left_omega: f64,
    /// Fitted slope / 2pi just above the kink.
    pub right_omega: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LEProfile {
    pub eps_grid: Vec<f64>,
    pub le_values: Vec<f64>,
    /// Right-window least-squares slope / 2pi at each grid point.
    pub slopes: Vec<f64>,
    pub kinks: Vec<Kink>,
    pub noise: Vec<f64>,
    /// Largest per-point noise estimate; the convexity tolerance is three times this.
    pub noise_floor: f64,
}

fn lsq_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn lsq_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let m = lsq_slope(x, y);
    let n = x.len() as f64;
    let b = (y.iter().sum::<f64>() - m * x.iter().sum::<f64>()) / n;
    (m, b)
}

impl LEProfile {
    /// Builds slopes and kinks from sampled values.
    pub fn from_samples(eps_grid: Vec<f64>, le_values: Vec<f64>, noise: Vec<f64>) -> Self {
        let n = eps_grid.len();
        let w = SLOPE_WINDOW.min(n);
        let right = |i: usize| {
            let lo = i.min(n - w);
            lsq_slope(&eps_grid[lo..lo + w], &le_values[lo..lo + w]) / TAU
        };
        let slopes: Vec<f64> = (0..n).map(right).collect();

        // compare the windows ending and starting at each interior point
        let mut jumps = vec![0.0; n];
        let mut flagged = vec![false; n];
        for i in 0..n {
            if i + 1 < w || i + w > n {
                continue;
            }
            let left = lsq_slope(&eps_grid[i + 1 - w..=i], &le_values[i + 1 - w..=i]) / TAU;
            let j = right(i) - left;
            jumps[i] = j;
            flagged[i] = j.abs() > SLOPE_KINK_TOL;
        }
        let mut kinks = Vec::new();
        let mut i = 0;
        while i < n {
            if !flagged[i] {
                i += 1;
                continue;
            }
            let start = i;
            while i < n && flagged[i] {
                i += 1;
            }
            let best = (start..i).max_by(|&a, &b| jumps[a].abs().total_cmp(&jumps[b].abs())).unwrap();
            // lines fitted on clean windows either side of the flagged run
            let lo_end = (start + 1).max(w).min(n);
            let hi_start = (i - 1).min(n - w);
            let lwin = lo_end - w..lo_end;
            let rwin = hi_start..hi_start + w;
            let (ml, bl) = lsq_line(&eps_grid[lwin.clone()], &le_values[lwin]);
            let (mr, br) = lsq_line(&eps_grid[rwin.clone()], &le_values[rwin]);
            let mut at = if (mr - ml).abs() > 1e-12 { (bl - br) / (mr - ml) } else { eps_grid[best] };
            let (a, b) = (eps_grid[start.saturating_sub(w - 1)], eps_grid[(i - 1 + w - 1).min(n - 1)]);
            if !(a..=b).contains(&at) {
                at = eps_grid[best];
            }
            kinks.push(Kink { eps: at, left_omega: ml / TAU, right_omega: mr / TAU });
        }
        let noise_floor = noise.iter().cloned().fold(0.0, f64::max);
        Self { eps_grid, le_values, slopes, kinks, noise, noise_floor }
    }

    pub fn grid_step(&self) -> f64 {
        let n = self.eps_grid.len();
        (self.eps_grid[n - 1] - self.eps_grid[0]) / (n - 1) as f64
    }

    /// Smallest discrete second difference, normalised as a difference of
    /// values (not divided by the squared step).
    pub fn min_second_difference(&self) -> f64 {
        self.le_values.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).fold(f64::INFINITY, f64::min)
    }

    /// Second differences are at least `-(3 noise_floor)` (with a rounding allowance).
    pub fn is_convex(&self) -> bool {
        self.min_second_difference() >= -(3.0 * self.noise_floor + 1e-12)
    }

    /// Slopes of the fitted lines between kinks, in order.
    pub fn segment_omegas(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.kinks.iter().map(|k| k.left_omega).collect();
        if let Some(k) = self.kinks.last() {
            v.push(k.right_omega);
        } else if let Some(&s) = self.slopes.first() {
            v.push(s);
        }
        v
    }
}

pub fn uniform_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect()
}

/// Samples `L(beta, D_eps)` on `steps` evenly spaced heights in `[eps_min, eps_max]`.
pub fn epsilon_sweep(c: &Cocycle, eps_min: f64, eps_max: f64, steps: usize, backend: Backend) -> Result<LEProfile> {
    if steps < 3 {
        return Err(Error::InvalidInput("epsilon_sweep needs at least 3 steps".into()));
    }
    if !(eps_min < eps_max) {
        return Err(Error::InvalidInput("eps_min must be below eps_max".into()));
    }
    let grid = uniform_grid(eps_min, eps_max, steps);
    let vals: Vec<(f64, f64)> = grid.par_iter().map(|&e| backend.le(c, e)).collect::<Result<_>>()?;
    let (le, noise) = vals.into_iter().unzip();
    Ok(LEProfile::from_samples(grid, le, noise))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Acceleration {
    pub omega: f64,
    pub nearest_int: i64,
    pub residual: f64,
}

/// Right-sided slope / 2pi at `eps`, fitted on up to five grid points
/// starting at the first point at or above `eps` and stopping short of the
/// next kink. Falls back to a left-sided window near the top of the grid.
pub fn acceleration_at(profile: &LEProfile, eps: f64) -> Result<Acceleration> {
    let g = &profile.eps_grid;
    let n = g.len();
    if !(eps > g[0] && eps < g[n - 1]) {
        return Err(Error::InvalidInput(format!("eps = {eps} is not strictly inside the profile grid")));
    }
    let h = profile.grid_step();
    for k in &profile.kinks {
        if (eps - k.eps).abs() <= h {
            return Err(Error::AtKink { eps, kink: k.eps });
        }
    }
    let next_kink = profile.kinks.iter().map(|k| k.eps).filter(|&k| k > eps).fold(f64::INFINITY, f64::min);
    let prev_kink = profile.kinks.iter().map(|k| k.eps).filter(|&k| k < eps).fold(f64::NEG_INFINITY, f64::max);
    let start = g.partition_point(|&x| x < eps - 1e-12 * h.max(1.0));
    let mut end = start;
    while end < n && end - start < SLOPE_WINDOW && g[end] < next_kink {
        end += 1;
    }
    let (lo, hi) = if end - start >= 2 {
        (start, end)
    } else {
        let hi = start.min(n);
        let mut lo = hi;
        while lo > 0 && hi - lo < SLOPE_WINDOW && g[lo - 1] > prev_kink {
            lo -= 1;
        }
        (lo, hi)
    };
    if hi - lo < 2 {
        return Err(Error::InvalidInput("not enough clean grid points to fit a slope".into()));
    }
    let omega = lsq_slope(&g[lo..hi], &profile.le_values[lo..hi]) / TAU;
    let nearest = omega.round();
    Ok(Acceleration { omega, nearest_int: nearest as i64, residual: (omega - nearest).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frequency::Frequency;
    use crate::mat2::Mat2C;
    use approx::assert_abs_diff_eq;

    fn synthetic(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> LEProfile {
        let grid = uniform_grid(lo, hi, steps);
        let vals = grid.iter().map(|&e| f(e)).collect();
        LEProfile::from_samples(grid, vals, vec![0.0; steps])
    }

    #[test]
    fn v_shape_has_one_kink() {
        let p = synthetic(|e| 2f64.ln() + TAU * e.abs(), -0.5, 0.5, 41);
        assert_eq!(p.kinks.len(), 1);
        let k = p.kinks[0];
        assert_abs_diff_eq!(k.eps, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(k.left_omega, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(k.right_omega, 1.0, epsilon = 1e-12);
        assert!(p.is_convex());
        let a = acceleration_at(&p, 0.2).unwrap();
        assert_eq!(a.nearest_int, 1);
        assert!(a.residual < 1e-12);
        let a = acceleration_at(&p, -0.2).unwrap();
        assert_eq!(a.nearest_int, -1);
        assert!(matches!(acceleration_at(&p, 0.01), Err(Error::AtKink { .. })));
    }

    #[test]
    fn off_grid_kink_is_located() {
        let p = synthetic(|e| (TAU * 2.0 * (e - 0.113)).max(0.0), -0.5, 0.5, 41);
        assert_eq!(p.kinks.len(), 1);
        assert_abs_diff_eq!(p.kinks[0].eps, 0.113, epsilon = 1e-9);
        assert_eq!(p.segment_omegas().len(), 2);
    }

    #[test]
    fn constant_cocycle_is_flat() {
        let c = Cocycle::constant(Frequency::golden(), Mat2C::diag(3.0, 0.5));
        let p = epsilon_sweep(&c, -1.0, 1.0, 9, Backend::Iterative { n: 64, phase_samples: 2 }).unwrap();
        assert!(p.kinks.is_empty());
        for s in &p.slopes {
            assert_abs_diff_eq!(*s, 0.0, epsilon = 1e-12);
        }
        let a = acceleration_at(&p, 0.3).unwrap();
        assert!(a.residual < 0.05);
        assert_eq!(a.nearest_int, 0);
    }

    #[test]
    fn sweep_preconditions() {
        let c = Cocycle::constant(Frequency::golden(), Mat2C::identity());
        assert!(epsilon_sweep(&c, 0.0, 1.0, 2, Backend::default()).is_err());
        assert!(epsilon_sweep(&c, 1.0, 0.0, 5, Backend::default()).is_err());
    }
}
