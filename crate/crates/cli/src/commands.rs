use std::path::Path;

use harper_core::cocycle::le_rational_detailed;
use harper_core::harper::{
    build_cocycle, criticality, duality as dual_of, duality_le_identity_check, i_lambda, region as region_of,
};
use harper_core::spectrum::norm_bound;
use harper_core::{
    acceleration_at, epsilon_sweep, le_iterative, spectrum_floquet, spectrum_truncation, Backend, Cocycle, Coupling,
    Frequency, LEProfile, TrigPoly, Which,
};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::report::{num, nums, ReportRecord, Table};
use crate::{BackendArgs, BackendKind, CocycleArgs, CouplingArgs, EnergyArgs, Failure, MethodArg, SweepArgs, WhichArg};

/// How many mid-band energies `--E auto` samples; the median one is used.
const AUTO_ENERGIES: usize = 7;

fn input(msg: impl Into<String>) -> Failure {
    Failure::Input(msg.into())
}

pub fn coupling(args: &CouplingArgs) -> Result<Coupling, Failure> {
    if args.model != "harper" {
        return Err(input(format!("unknown model '{}': the built-in model is 'harper', use --matrix otherwise", args.model)));
    }
    let s = args.lambda.as_deref().ok_or_else(|| input("--lambda is required for the harper model"))?;
    Ok(s.parse()?)
}

pub fn frequency(s: &str) -> Result<Frequency, Failure> {
    Ok(s.parse()?)
}

fn check_spectrum_size(size: usize, thetas: usize) -> Result<(), Failure> {
    if size < 50 {
        return Err(input(format!("--N must be at least 50 (got {size})")));
    }
    if thetas == 0 {
        return Err(input("--thetas must be at least 1"));
    }
    Ok(())
}

enum Energy {
    Auto,
    Value(f64),
}

fn energy_spec(args: &EnergyArgs) -> Result<Energy, Failure> {
    if args.energy == "auto" {
        check_spectrum_size(args.size, args.thetas)?;
        return Ok(Energy::Auto);
    }
    match args.energy.parse::<f64>() {
        Ok(e) if e.is_finite() => Ok(Energy::Value(e)),
        _ => Err(input(format!("--E must be a finite number or 'auto' (got '{}')", args.energy))),
    }
}

fn echo_energy(inputs: &mut Map<String, Value>, args: &EnergyArgs, spec: &Energy) {
    match spec {
        Energy::Auto => {
            inputs.insert("E".into(), json!("auto"));
            inputs.insert("N".into(), json!(args.size));
            inputs.insert("thetas".into(), json!(args.thetas));
        }
        Energy::Value(e) => {
            inputs.insert("E".into(), num(*e));
        }
    }
}

fn resolve_energy(
    lam: &Coupling,
    beta: &Frequency,
    args: &EnergyArgs,
    spec: &Energy,
    rec: &mut ReportRecord,
) -> Result<f64, Failure> {
    let e = match spec {
        Energy::Value(e) => {
            rec.diag("energy_source", "given");
            *e
        }
        Energy::Auto => {
            let s = spectrum_truncation(lam, beta, args.thetas, args.size)?;
            let es = s.sample_energies(AUTO_ENERGIES);
            if es.is_empty() {
                return Err(Failure::Runtime("no spectral band found for --E auto".into()));
            }
            rec.diag(
                "energy_source",
                format!(
                    "median of {} mid-band energies, finite section N = {}, {} phases",
                    es.len(),
                    args.size,
                    args.thetas
                ),
            );
            es[es.len() / 2]
        }
    };
    rec.out("energy", num(e));
    Ok(e)
}

#[derive(Deserialize)]
struct MatrixFile {
    entries: [TrigPoly; 4],
    #[serde(default)]
    divisor: Option<TrigPoly>,
}

fn load_matrix(path: &Path, beta: Frequency) -> Result<Cocycle, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| input(format!("cannot read matrix {}: {e}", path.display())))?;
    let m: MatrixFile =
        serde_json::from_str(&text).map_err(|e| input(format!("matrix {}: {e}", path.display())))?;
    let c = Cocycle::new(beta, m.entries);
    Ok(match m.divisor {
        Some(d) if d.is_zero() => return Err(input("matrix divisor is identically zero")),
        Some(d) => c.with_divisor(d),
        None => c,
    })
}

enum Source {
    Harper { lam: Coupling, which: Which, energy: Energy },
    Matrix(Cocycle),
}

/// Validates the cocycle flags and echoes them.
fn source(
    args: &CocycleArgs,
    default_which: Which,
    inputs: &mut Map<String, Value>,
) -> Result<(Source, Frequency), Failure> {
    let beta = frequency(&args.coupling.beta)?;
    if let Some(path) = &args.matrix {
        if args.coupling.lambda.is_some() {
            return Err(input("give either --lambda or --matrix, not both"));
        }
        inputs.insert("matrix".into(), json!(path.display().to_string()));
        inputs.insert("beta".into(), json!(beta.to_string()));
        return Ok((Source::Matrix(load_matrix(path, beta.clone())?), beta));
    }
    let lam = coupling(&args.coupling)?;
    let which = match args.which {
        Some(WhichArg::A) => Which::A,
        Some(WhichArg::B) => Which::B,
        None => default_which,
    };
    let energy = energy_spec(&args.energy)?;
    inputs.insert("model".into(), json!(args.coupling.model));
    inputs.insert("lambda".into(), json!(lam.to_string()));
    inputs.insert("beta".into(), json!(beta.to_string()));
    echo_energy(inputs, &args.energy, &energy);
    inputs.insert("which".into(), json!(if which == Which::A { "a" } else { "b" }));
    Ok((Source::Harper { lam, which, energy }, beta))
}

fn build(src: Source, beta: &Frequency, args: &CocycleArgs, rec: &mut ReportRecord) -> Result<Cocycle, Failure> {
    match src {
        Source::Matrix(c) => Ok(c),
        Source::Harper { lam, which, energy } => {
            let e = resolve_energy(&lam, beta, &args.energy, &energy, rec)?;
            Ok(build_cocycle(&lam, beta, e, which)?)
        }
    }
}

fn backend(args: &BackendArgs, inputs: &mut Map<String, Value>) -> Result<Backend, Failure> {
    match args.backend {
        BackendKind::Iterative => {
            if args.n == 0 {
                return Err(input("--n must be at least 1"));
            }
            if args.phases == 0 {
                return Err(input("--phases must be at least 1"));
            }
            inputs.insert("backend".into(), json!("iterative"));
            inputs.insert("n".into(), json!(args.n));
            inputs.insert("phases".into(), json!(args.phases));
            Ok(Backend::Iterative { n: args.n, phase_samples: args.phases })
        }
        BackendKind::Rational => {
            if args.quad_points < 4 {
                return Err(input("--quad-points must be at least 4"));
            }
            inputs.insert("backend".into(), json!("rational"));
            inputs.insert("quad-points".into(), json!(args.quad_points));
            Ok(Backend::Rational { quad_points: args.quad_points })
        }
    }
}

fn finite(name: &str, x: f64) -> Result<f64, Failure> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(input(format!("--{name} must be finite")))
    }
}

pub fn le(args: &CocycleArgs, b: &BackendArgs, eps: f64, dry: bool) -> Result<ReportRecord, Failure> {
    let mut inputs = Map::new();
    let (src, beta) = source(args, Which::B, &mut inputs)?;
    let be = backend(b, &mut inputs)?;
    if matches!(be, Backend::Rational { .. }) && !beta.is_rational() {
        return Err(input("the rational backend needs --beta p/q"));
    }
    inputs.insert("eps".into(), num(finite("eps", eps)?));
    let mut rec = ReportRecord::new("le", inputs);
    if dry {
        return Ok(rec);
    }
    let c = build(src, &beta, args, &mut rec)?;
    match be {
        Backend::Iterative { n, phase_samples } => {
            let r = le_iterative(&c, eps, n, phase_samples)?;
            rec.out("estimate", num(r.estimate));
            rec.out("noise", num(r.noise));
            rec.out("backend", "iterative");
            let mut t = Table::new(&["n", "upper_estimate", "noise"]);
            for ((k, v), s) in r.upper_sequence.iter().zip(&r.sequence_noise) {
                t.push(vec![json!(k), num(*v), num(*s)]);
            }
            rec.table = Some(t);
            rec.diag("flagged", r.flagged);
            rec.diag("noise_floor", num(r.noise));
        }
        Backend::Rational { quad_points } => {
            let r = le_rational_detailed(&c, eps, quad_points)?;
            rec.out("estimate", num(r.value));
            rec.out("error_estimate", num(r.error_estimate));
            rec.out("backend", "rational");
            rec.diag("flagged", r.flagged);
            rec.diag("nodes", r.nodes);
            rec.diag("noise_floor", num(r.error_estimate));
        }
    }
    Ok(rec)
}

fn kinks_json(p: &LEProfile) -> Value {
    Value::Array(
        p.kinks
            .iter()
            .map(|k| json!({"eps": num(k.eps), "left_omega": num(k.left_omega), "right_omega": num(k.right_omega)}))
            .collect(),
    )
}

/// `sweep`, or `accel` when `at` is given.
pub fn sweep(
    args: &CocycleArgs,
    b: &BackendArgs,
    s: &SweepArgs,
    at: Option<f64>,
    dry: bool,
) -> Result<ReportRecord, Failure> {
    let mut inputs = Map::new();
    let (src, beta) = source(args, Which::A, &mut inputs)?;
    let be = backend(b, &mut inputs)?;
    if matches!(be, Backend::Rational { .. }) && !beta.is_rational() {
        return Err(input("the rational backend needs --beta p/q"));
    }
    let (lo, hi) = (finite("eps-min", s.eps_min)?, finite("eps-max", s.eps_max)?);
    if lo >= hi {
        return Err(input("--eps-min must be below --eps-max"));
    }
    if s.steps < 3 {
        return Err(input("--steps must be at least 3"));
    }
    inputs.insert("eps-min".into(), num(lo));
    inputs.insert("eps-max".into(), num(hi));
    inputs.insert("steps".into(), json!(s.steps));
    if let Some(x) = at {
        if !(finite("at", x)? > lo && x < hi) {
            return Err(input("--at must lie strictly inside (eps-min, eps-max)"));
        }
        inputs.insert("at".into(), num(x));
    }
    let mut rec = ReportRecord::new(if at.is_some() { "accel" } else { "sweep" }, inputs);
    if dry {
        return Ok(rec);
    }
    let c = build(src, &beta, args, &mut rec)?;
    let p = epsilon_sweep(&c, lo, hi, s.steps, be)?;
    rec.out("kinks", kinks_json(&p));
    rec.diag("noise_floor", num(p.noise_floor));
    rec.diag("min_second_difference", num(p.min_second_difference()));
    rec.diag("convex", p.is_convex());
    match at {
        Some(x) => {
            let a = acceleration_at(&p, x)?;
            rec.out("omega", num(a.omega));
            rec.out("nearest_int", a.nearest_int);
            rec.out("residual", num(a.residual));
        }
        None => {
            rec.out("segment_omegas", nums(&p.segment_omegas()));
            let h = p.grid_step();
            let mut t = Table::new(&["eps", "L", "omega", "noise", "kink"]);
            for i in 0..p.eps_grid.len() {
                let x = p.eps_grid[i];
                let near = p.kinks.iter().any(|k| (k.eps - x).abs() <= 0.5 * h);
                t.push(vec![num(x), num(p.le_values[i]), num(p.slopes[i]), num(p.noise[i]), json!(near)]);
            }
            rec.table = Some(t);
        }
    }
    Ok(rec)
}

pub fn spectrum(
    args: &CouplingArgs,
    method: MethodArg,
    size: usize,
    thetas: usize,
    energies: usize,
    dry: bool,
) -> Result<ReportRecord, Failure> {
    let lam = coupling(args)?;
    let beta = frequency(&args.beta)?;
    let mut inputs = Map::new();
    inputs.insert("model".into(), json!(args.model));
    inputs.insert("lambda".into(), json!(lam.to_string()));
    inputs.insert("beta".into(), json!(beta.to_string()));
    let pq = match method {
        MethodArg::Truncation => {
            check_spectrum_size(size, thetas)?;
            inputs.insert("method".into(), json!("truncation"));
            inputs.insert("N".into(), json!(size));
            None
        }
        MethodArg::Floquet => {
            let harper_core::Frequency::Rational { p, q } = beta else {
                return Err(input("the floquet method needs --beta p/q"));
            };
            if thetas == 0 {
                return Err(input("--thetas must be at least 1"));
            }
            inputs.insert("method".into(), json!("floquet"));
            Some((p, q))
        }
    };
    inputs.insert("thetas".into(), json!(thetas));
    inputs.insert("energies".into(), json!(energies));
    let mut rec = ReportRecord::new("spectrum", inputs);
    if dry {
        return Ok(rec);
    }
    let s = match pq {
        None => spectrum_truncation(&lam, &beta, thetas, size)?,
        Some((p, q)) => spectrum_floquet(&lam, p as i64, q, thetas)?,
    };
    rec.out("measure", num(s.measure()));
    rec.out("intervals", s.merged_intervals.len());
    rec.out("norm_bound", num(norm_bound(&lam)));
    rec.out("sample_energies", nums(&s.sample_energies(energies)));
    rec.diag("skipped_phases", s.params.skipped);
    rec.diag("points", s.points.len());
    let mut t = Table::new(&["lo", "hi", "count"]);
    for (&(a, b), &n) in s.merged_intervals.iter().zip(&s.interval_counts) {
        t.push(vec![num(a), num(b), json!(n)]);
    }
    rec.table = Some(t);
    Ok(rec)
}

fn names<T: std::fmt::Debug>(xs: &[T]) -> Value {
    Value::Array(xs.iter().map(|x| json!(format!("{x:?}"))).collect())
}

pub fn region(args: &CouplingArgs) -> Result<ReportRecord, Failure> {
    let lam = coupling(args)?;
    let mut inputs = Map::new();
    inputs.insert("model".into(), json!(args.model));
    inputs.insert("lambda".into(), json!(lam.to_string()));
    let mut rec = ReportRecord::new("region", inputs);
    let tag = region_of(&lam)?;
    let v = criticality(&lam)?;
    rec.out("region", tag.tag.to_string());
    rec.out("member_of", Value::Array(tag.member_of.iter().map(|r| json!(r.to_string())).collect()));
    rec.out("on_boundary", names(&tag.on_boundary));
    rec.out("in_r", lam.in_r());
    rec.out("c_has_real_zeros", lam.c_has_real_zeros());
    rec.out("le_on_spectrum", num(v.le_on_spectrum));
    rec.out("i_lambda", num(i_lambda(&lam)?));
    rec.out("l_m", num(v.l_m));
    rec.out("delta", num(v.delta));
    rec.out("criticality", format!("{:?}", v.criticality).to_lowercase());
    Ok(rec)
}

pub fn duality(
    args: &CouplingArgs,
    energy: &EnergyArgs,
    n: u64,
    phases: usize,
    check: bool,
    dry: bool,
) -> Result<ReportRecord, Failure> {
    let lam = coupling(args)?;
    let mut inputs = Map::new();
    inputs.insert("model".into(), json!(args.model));
    inputs.insert("lambda".into(), json!(lam.to_string()));
    let mut plan = None;
    if check {
        let beta = frequency(&args.beta)?;
        let spec = energy_spec(energy)?;
        if n == 0 || phases == 0 {
            return Err(input("--n and --phases must be at least 1"));
        }
        inputs.insert("check".into(), json!(true));
        inputs.insert("beta".into(), json!(beta.to_string()));
        echo_energy(&mut inputs, energy, &spec);
        inputs.insert("n".into(), json!(n));
        inputs.insert("phases".into(), json!(phases));
        plan = Some((beta, spec));
    }
    let mut rec = ReportRecord::new("duality", inputs);
    if dry {
        return Ok(rec);
    }
    let sigma = dual_of(&lam)?;
    rec.out("dual", sigma.to_string());
    rec.out("region", region_of(&lam)?.tag.to_string());
    rec.out("dual_region", region_of(&sigma)?.tag.to_string());
    if let Some((beta, spec)) = plan {
        let e = resolve_energy(&lam, &beta, energy, &spec, &mut rec)?;
        let d = duality_le_identity_check(&lam, &beta, e, n, phases)?;
        rec.out("le_b", num(d.le_b));
        rec.out("jensen_term", num(d.jensen_term));
        rec.out("le_b_dual", num(d.le_b_dual));
        rec.out("residual", num(d.residual));
    }
    Ok(rec)
}
