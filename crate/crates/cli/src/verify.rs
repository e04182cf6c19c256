//! Verification panels: each check compares a computed value with a target.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use harper_core::cocycle::le_rational_detailed;
use harper_core::harper::{
    build_cocycle, duality_le_identity_check, harper_i_eps_closed, l_m, thouless_le,
};
use harper_core::{
    acceleration_at, epsilon_sweep, hausdorff, i_eps_exact, i_eps_quadrature, le_iterative, spectrum_floquet,
    spectrum_truncation, Backend, Coupling, Frequency, JensenProfile, TrigPoly, Which,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map};

use crate::report::{num, ReportRecord, Table};
use crate::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Panel {
    Thouless,
    Duality,
    Jensen,
    Quantization,
    Asymptotics,
    Continuity,
}

pub struct Settings {
    pub n: u64,
    pub phases: usize,
    pub size: usize,
    pub thetas: usize,
    pub energies: usize,
    pub seed: u64,
    pub tol: Option<f64>,
}

#[derive(Clone, Copy)]
enum Relation {
    /// `|computed - target| < tolerance`
    Within,
    /// `computed < target`
    Below,
    /// `computed >= target`
    AtLeast,
}

struct Check {
    name: String,
    target: f64,
    computed: f64,
    tolerance: f64,
    relation: Relation,
}

impl Check {
    fn within(name: String, target: f64, computed: f64, tolerance: f64) -> Self {
        Check { name, target, computed, tolerance, relation: Relation::Within }
    }

    fn pass(&self) -> bool {
        match self.relation {
            Relation::Within => (self.computed - self.target).abs() < self.tolerance,
            Relation::Below => self.computed < self.target,
            Relation::AtLeast => self.computed >= self.target,
        }
    }
}

fn cp(l1: f64, l2: f64, l3: f64) -> Coupling {
    Coupling::new(l1, l2, l3).expect("panel couplings are admissible")
}

fn region_one() -> [Coupling; 3] {
    [cp(0.25, 0.25, 0.25), cp(0.5, 0.2, 0.2), cp(0.1, 0.7, 0.3)]
}

struct Ctx<'a> {
    s: &'a Settings,
    energies: BTreeMap<String, Vec<f64>>,
}

impl Ctx<'_> {
    fn energies(&mut self, lam: &Coupling, beta: &Frequency) -> Result<Vec<f64>, Failure> {
        let key = format!("{lam}@{beta}");
        if let Some(v) = self.energies.get(&key) {
            return Ok(v.clone());
        }
        let v = spectrum_truncation(lam, beta, self.s.thetas, self.s.size)?.sample_energies(self.s.energies);
        if v.is_empty() {
            return Err(Failure::Runtime(format!("no spectral band found for ({lam})")));
        }
        self.energies.insert(key, v.clone());
        Ok(v)
    }

    /// First, middle and last sampled energies.
    fn spread(&mut self, lam: &Coupling, beta: &Frequency) -> Result<Vec<f64>, Failure> {
        let es = self.energies(lam, beta)?;
        let mut v = vec![es[0], es[es.len() / 2], es[es.len() - 1]];
        v.dedup();
        Ok(v)
    }

    fn le(&self, lam: &Coupling, beta: &Frequency, e: f64, which: Which, eps: f64) -> Result<f64, Failure> {
        Ok(le_iterative(&build_cocycle(lam, beta, e, which)?, eps, self.s.n, self.s.phases)?.estimate)
    }

    fn tol(&self, default: f64) -> f64 {
        self.s.tol.unwrap_or(default)
    }
}

fn thouless(ctx: &mut Ctx) -> Result<Vec<Check>, Failure> {
    let beta = Frequency::golden();
    let mut panel = vec![cp(0.0, 0.5, 0.0)];
    panel.extend(region_one());
    panel.extend([cp(0.2, 2.0, 0.3), cp(1.0, 0.5, 0.5), cp(0.8, 0.5, 0.7)]);
    let mut out = Vec::new();
    for lam in &panel {
        let target = thouless_le(lam)?;
        for e in ctx.energies(lam, &beta)? {
            let l = ctx.le(lam, &beta, e, Which::B, 0.0)?;
            out.push(Check::within(format!("L(B) lambda=({lam}) E={e:.6}"), target, l, ctx.tol(0.02)));
        }
    }
    Ok(out)
}

fn duality(ctx: &mut Ctx) -> Result<Vec<Check>, Failure> {
    let beta = Frequency::golden();
    let mut out = Vec::new();
    for lam in [cp(0.0, 0.5, 0.0), cp(0.25, 0.25, 0.25), cp(0.3, 0.9, 0.2)] {
        for e in ctx.spread(&lam, &beta)? {
            let d = duality_le_identity_check(&lam, &beta, e, ctx.s.n, ctx.s.phases)?;
            out.push(Check::within(format!("identity residual lambda=({lam}) E={e:.6}"), 0.0, d.residual, ctx.tol(0.03)));
        }
    }
    Ok(out)
}

fn random_poly(rng: &mut ChaCha8Rng) -> TrigPoly {
    let n = rng.random_range(0..=6i64);
    TrigPoly::from_harmonics(
        (-n..=n).map(|k| (k, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))),
    )
}

/// Largest gap between stored integer slopes and slopes read off the values.
fn slope_defect(p: &JensenProfile) -> f64 {
    p.segments
        .iter()
        .map(|s| {
            let (lo, hi) = match (s.lo.is_finite(), s.hi.is_finite()) {
                (true, true) => (s.lo, s.hi),
                (true, false) => (s.lo, s.lo + 1.0),
                (false, true) => (s.hi - 1.0, s.hi),
                (false, false) => (-1.0, 1.0),
            };
            let (a, b) = (lo + 0.25 * (hi - lo), lo + 0.75 * (hi - lo));
            ((p.eval(b) - p.eval(a)) / (TAU * (b - a)) - s.slope_2pi as f64).abs()
        })
        .fold(0.0, f64::max)
}

fn jensen(ctx: &mut Ctx) -> Result<Vec<Check>, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.s.seed);
    let tol = ctx.tol(1e-6);
    let mut out = Vec::new();
    let mut defect = 0.0f64;
    let mut k = 0;
    while k < 100 {
        let p = random_poly(&mut rng);
        if p.max_abs_coeff() < 1e-3 {
            continue;
        }
        let exact = i_eps_exact(&p)?;
        defect = defect.max(slope_defect(&exact));
        let eps = loop {
            let e: f64 = rng.random_range(-1.0..1.0);
            if exact.kink_eps.iter().all(|x| (x - e).abs() >= 1e-3) {
                break e;
            }
        };
        let q = i_eps_quadrature(&p, eps, 1e-10)?;
        out.push(Check::within(format!("random polynomial {k} (degree {}) eps={eps:.4}", p.degree()), exact.eval(eps), q, tol));
        k += 1;
    }
    for k in 0..100 {
        let lam = loop {
            let (a, b, c) = (rng.random_range(0.0..2.0), rng.random_range(0.0..2.0), rng.random_range(0.0..2.0));
            if a + b + c > 1e-3 {
                break cp(a, b, c);
            }
        };
        let eps: f64 = rng.random_range(-1.0..1.0);
        let c = lam.c_poly(Frequency::golden().value());
        let exact = i_eps_exact(&c)?;
        defect = defect.max(slope_defect(&exact));
        let closed = harper_i_eps_closed(&lam, eps)?;
        let q = i_eps_quadrature(&c, eps, 1e-10)?;
        let name = format!("harper {k} lambda=({lam}) eps={eps:.4}");
        out.push(Check::within(format!("{name} quadrature"), closed, q, tol));
        out.push(Check::within(format!("{name} root data"), closed, exact.eval(eps), tol));
    }
    out.push(Check::within("slopes are integers in units of 2 pi".into(), 0.0, defect, tol));
    Ok(out)
}

fn quantization(ctx: &mut Ctx) -> Result<Vec<Check>, Failure> {
    let beta = Frequency::golden();
    let mut panel = vec![cp(0.0, 0.5, 0.0)];
    panel.extend(region_one());
    let backend = Backend::Iterative { n: ctx.s.n, phase_samples: ctx.s.phases };
    let mut out = Vec::new();
    for lam in panel.iter().filter(|l| l.in_r()) {
        for e in ctx.spread(lam, &beta)? {
            let a = build_cocycle(lam, &beta, e, Which::A)?;
            let p = epsilon_sweep(&a, -0.5, 0.5, 41, backend)?;
            let tag = format!("lambda=({lam}) E={e:.6}");
            for &x in &p.eps_grid[1..p.eps_grid.len() - 1] {
                if let Ok(acc) = acceleration_at(&p, x) {
                    out.push(Check::within(
                        format!("acceleration {tag} eps={x:.3}"),
                        acc.nearest_int as f64,
                        acc.omega,
                        ctx.tol(0.05),
                    ));
                }
            }
            out.push(Check {
                name: format!("second differences {tag}"),
                target: -3.0 * p.noise_floor - 1e-12,
                computed: p.min_second_difference(),
                tolerance: 0.0,
                relation: Relation::AtLeast,
            });
            let omegas = p.segment_omegas();
            for (i, w) in omegas.windows(2).enumerate() {
                out.push(Check {
                    name: format!("slope order {tag} segment {i}"),
                    target: w[0] - ctx.tol(0.05),
                    computed: w[1],
                    tolerance: 0.0,
                    relation: Relation::AtLeast,
                });
            }
        }
    }
    Ok(out)
}

fn asymptotics(ctx: &mut Ctx) -> Result<Vec<Check>, Failure> {
    let beta = Frequency::golden();
    let mut panel = region_one().to_vec();
    panel.push(cp(1.0, 0.5, 0.0));
    let mut out = Vec::new();
    for lam in &panel {
        let es = ctx.energies(lam, &beta)?;
        for e in [es[0], es[es.len() / 2]] {
            for eps in [-2.0f64, 2.0] {
                let l = ctx.le(lam, &beta, e, Which::A, eps)?;
                out.push(Check::within(
                    format!("L(A) lambda=({lam}) E={e:.6} eps={eps}"),
                    TAU * eps.abs() + l_m(lam),
                    l,
                    ctx.tol(5e-3),
                ));
            }
        }
    }
    Ok(out)
}

fn continuity(ctx: &mut Ctx) -> Result<Vec<Check>, Failure> {
    let golden = Frequency::golden();
    let approximants: Vec<(u64, u64)> = golden.convergents().into_iter().filter(|c| c.1 >= 21 && c.1 <= 377).collect();
    let mut out = Vec::new();
    for lam in [cp(0.25, 0.25, 0.25), cp(0.5, 0.2, 0.2)] {
        let es = ctx.energies(&lam, &golden)?;
        let e = es[es.len() / 2];
        let mut seq = Vec::new();
        for &(p, q) in &approximants {
            let a = build_cocycle(&lam, &Frequency::rational(p as i64, q)?, e, Which::A)?;
            seq.push(le_rational_detailed(&a, 0.1, 100_000)?.value);
        }
        let k = seq.len();
        let (p0, q0) = approximants[k - 2];
        let (p1, q1) = approximants[k - 1];
        out.push(Check::within(
            format!("rational L gap {p0}/{q0} -> {p1}/{q1} lambda=({lam}) E={e:.6} eps=0.1"),
            0.0,
            (seq[k - 1] - seq[k - 2]).abs(),
            ctx.tol(0.01),
        ));
    }
    let amo = cp(0.0, 0.5, 0.0);
    let specs = approximants
        .iter()
        .map(|&(p, q)| spectrum_floquet(&amo, p as i64, q, 64))
        .collect::<Result<Vec<_>, _>>()?;
    let dists = specs.windows(2).map(|w| hausdorff(&w[0], &w[1])).collect::<Result<Vec<_>, _>>()?;
    for (i, w) in dists.windows(2).enumerate() {
        let (_, qa) = approximants[i + 1];
        let (_, qb) = approximants[i + 2];
        out.push(Check {
            name: format!("Hausdorff step q={qa}->{qb} below the previous step"),
            target: w[0],
            computed: w[1],
            tolerance: 0.0,
            relation: Relation::Below,
        });
    }
    Ok(out)
}

pub fn run(panel: Panel, s: &Settings, dry: bool) -> Result<(ReportRecord, bool), Failure> {
    if s.n == 0 || s.phases == 0 {
        return Err(Failure::Input("--n and --phases must be at least 1".into()));
    }
    if s.size < 50 || s.thetas == 0 || s.energies == 0 {
        return Err(Failure::Input("--N must be at least 50 and --thetas, --energies at least 1".into()));
    }
    if let Some(t) = s.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Failure::Input("--tol must be positive and finite".into()));
        }
    }
    let name = format!("{panel:?}").to_lowercase();
    let mut inputs = Map::new();
    inputs.insert("panel".into(), json!(name));
    inputs.insert("n".into(), json!(s.n));
    inputs.insert("phases".into(), json!(s.phases));
    inputs.insert("N".into(), json!(s.size));
    inputs.insert("thetas".into(), json!(s.thetas));
    inputs.insert("energies".into(), json!(s.energies));
    inputs.insert("seed".into(), json!(s.seed));
    if let Some(t) = s.tol {
        inputs.insert("tol".into(), num(t));
    }
    let mut rec = ReportRecord::new("verify", inputs);
    if dry {
        return Ok((rec, true));
    }
    let mut ctx = Ctx { s, energies: BTreeMap::new() };
    let checks = match panel {
        Panel::Thouless => thouless(&mut ctx)?,
        Panel::Duality => duality(&mut ctx)?,
        Panel::Jensen => jensen(&mut ctx)?,
        Panel::Quantization => quantization(&mut ctx)?,
        Panel::Asymptotics => asymptotics(&mut ctx)?,
        Panel::Continuity => continuity(&mut ctx)?,
    };
    let mut t = Table::new(&["check", "target", "computed", "tolerance", "relation", "status"]);
    let mut failures = 0usize;
    for c in &checks {
        let ok = c.pass();
        failures += usize::from(!ok);
        let rel = match c.relation {
            Relation::Within => "within",
            Relation::Below => "below",
            Relation::AtLeast => "at_least",
        };
        t.push(vec![
            json!(c.name),
            num(c.target),
            num(c.computed),
            num(c.tolerance),
            json!(rel),
            json!(if ok { "PASS" } else { "FAIL" }),
        ]);
    }
    rec.out("checks", checks.len());
    rec.out("failures", failures);
    rec.out("passed", failures == 0);
    rec.diag("spectra_computed", ctx.energies.len());
    rec.table = Some(t);
    Ok((rec, failures == 0))
}
