use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod report;
mod verify;

use report::Format;

const AFTER_HELP: &str = "\
All Lyapunov exponents, strip averages and accelerations are in natural-log \
units (nats); accelerations are slopes divided by 2 pi.

Exit codes: 0 ok, 1 a verify check failed, 2 bad input, 3 runtime error.";

#[derive(Parser)]
#[command(name = "harper-le", version, about = "Lyapunov exponents of quasi-periodic cocycles and the extended Harper model")]
#[command(after_help = AFTER_HELP)]
struct Cli {
    /// Report format: one JSON object per line, or CSV with a header row
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// TOML file with the same keys as the flags; flags win
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: machine parallelism); results do not depend on it
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Record wall-clock runtimes in the diagnostics (reports are no longer bit-reproducible)
    #[arg(long, global = true)]
    timings: bool,
    /// Print the resolved configuration as TOML and exit
    #[arg(long = "dump-config", global = true)]
    dump_config: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WhichArg {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    Iterative,
    Rational,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Truncation,
    Floquet,
}

#[derive(Args, Clone, Debug)]
pub struct CouplingArgs {
    /// Model family; `harper` is the only built-in model
    #[arg(long, default_value = "harper")]
    pub model: String,
    /// Couplings l1,l2,l3 (non-negative, not all zero)
    #[arg(long)]
    pub lambda: Option<String>,
    /// Frequency: p/q, golden, sqrt2m1 or a decimal literal
    #[arg(long, default_value = "golden")]
    pub beta: String,
}

#[derive(Args, Clone, Debug)]
pub struct EnergyArgs {
    /// Energy, or `auto` for the median of seven mid-band energies of a finite section
    #[arg(long = "E", default_value = "auto", allow_hyphen_values = true)]
    pub energy: String,
    /// Half-size of the finite section used for spectra and `--E auto`
    #[arg(long = "N", default_value_t = 1000)]
    pub size: usize,
    /// Phase samples for spectra
    #[arg(long, default_value_t = 32)]
    pub thetas: usize,
}

#[derive(Args, Clone, Debug)]
pub struct CocycleArgs {
    #[command(flatten)]
    pub coupling: CouplingArgs,
    #[command(flatten)]
    pub energy: EnergyArgs,
    /// JSON cocycle {"entries": [a11, a12, a21, a22], "divisor": d}, each {"coeffs": [[k, re, im], ...]}
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Harper cocycle A, or B = A / c (default: B for `le`, A for `sweep` and `accel`)
    #[arg(long, value_enum)]
    pub which: Option<WhichArg>,
}

#[derive(Args, Clone, Debug)]
pub struct BackendArgs {
    /// Estimator: long products averaged over phases, or the exact rational-frequency integral
    #[arg(long, value_enum, default_value_t = BackendKind::Iterative)]
    pub backend: BackendKind,
    /// Product length for the iterative estimator
    #[arg(long, default_value_t = 10_000)]
    pub n: u64,
    /// Phase samples for the iterative estimator
    #[arg(long, default_value_t = 8)]
    pub phases: usize,
    /// Quadrature nodes for the rational backend
    #[arg(long = "quad-points", default_value_t = 20_000)]
    pub quad_points: usize,
}

#[derive(Args, Clone, Debug)]
pub struct SweepArgs {
    #[arg(long = "eps-min", default_value_t = -1.0, allow_hyphen_values = true)]
    pub eps_min: f64,
    #[arg(long = "eps-max", default_value_t = 1.0, allow_hyphen_values = true)]
    pub eps_max: f64,
    /// Grid points in [eps-min, eps-max]
    #[arg(long, default_value_t = 41)]
    pub steps: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Lyapunov exponent of one cocycle at one height
    Le {
        #[command(flatten)]
        cocycle: CocycleArgs,
        #[command(flatten)]
        backend: BackendArgs,
        /// Imaginary shift of the phase
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        eps: f64,
    },
    /// L(eps) on a grid with fitted slopes and kinks
    Sweep {
        #[command(flatten)]
        cocycle: CocycleArgs,
        #[command(flatten)]
        backend: BackendArgs,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Acceleration (slope / 2 pi) at one height, from a sweep
    Accel {
        #[command(flatten)]
        cocycle: CocycleArgs,
        #[command(flatten)]
        backend: BackendArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        /// Height at which to read off the slope
        #[arg(long, allow_hyphen_values = true)]
        at: f64,
    },
    /// Spectrum approximation as merged intervals
    Spectrum {
        #[command(flatten)]
        coupling: CouplingArgs,
        #[arg(long, value_enum, default_value_t = MethodArg::Truncation)]
        method: MethodArg,
        /// Half-size of the finite section (truncation)
        #[arg(long = "N", default_value_t = 1000)]
        size: usize,
        #[arg(long, default_value_t = 32)]
        thetas: usize,
        /// Number of mid-band sample energies to report
        #[arg(long, default_value_t = 7)]
        energies: usize,
    },
    /// Region, closed-form exponent and criticality of a coupling
    Region {
        #[command(flatten)]
        coupling: CouplingArgs,
    },
    /// Dual coupling and, with --check, the exponent identity at one energy
    Duality {
        #[command(flatten)]
        coupling: CouplingArgs,
        #[command(flatten)]
        energy: EnergyArgs,
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        #[arg(long, default_value_t = 8)]
        phases: usize,
        /// Evaluate L(B) - jensen term - L(B dual) numerically
        #[arg(long)]
        check: bool,
    },
    /// Run a verification panel; exits 1 if any check fails
    Verify {
        #[arg(value_enum)]
        panel: verify::Panel,
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        #[arg(long, default_value_t = 8)]
        phases: usize,
        #[arg(long = "N", default_value_t = 1000)]
        size: usize,
        #[arg(long, default_value_t = 32)]
        thetas: usize,
        /// Mid-band energies per coupling
        #[arg(long, default_value_t = 7)]
        energies: usize,
        /// Seed for the random polynomials of the jensen panel
        #[arg(long, default_value_t = 20_240_611)]
        seed: u64,
        /// Replace every tolerance of the panel
        #[arg(long)]
        tol: Option<f64>,
    },
}

#[derive(Debug)]
pub enum Failure {
    Input(String),
    Runtime(String),
}

impl From<harper_core::Error> for Failure {
    fn from(e: harper_core::Error) -> Self {
        use harper_core::Error::*;
        match e {
            InvalidInput(_) | InadmissibleCoupling(_) | NotRational | ZeroLambda2 => Failure::Input(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn parse_args() -> Result<Cli, Failure> {
    let raw: Vec<OsString> = std::env::args_os().collect();
    let cmd = Cli::command();
    let top = cmd.clone().try_get_matches_from(&raw).unwrap_or_else(|e| e.exit());
    let argv = match top.get_one::<PathBuf>("config") {
        Some(path) => config::merge(&cmd, &top, raw, &config::load(path)?)?,
        None => raw,
    };
    let m = cmd.try_get_matches_from(argv).unwrap_or_else(|e| e.exit());
    Ok(Cli::from_arg_matches(&m).unwrap_or_else(|e| e.exit()))
}

fn run(cli: &Cli) -> Result<(report::ReportRecord, bool), Failure> {
    let started = Instant::now();
    let (mut rec, ok) = match &cli.command {
        Cmd::Le { cocycle, backend, eps } => (commands::le(cocycle, backend, *eps, cli.dump_config)?, true),
        Cmd::Sweep { cocycle, backend, sweep } => (commands::sweep(cocycle, backend, sweep, None, cli.dump_config)?, true),
        Cmd::Accel { cocycle, backend, sweep, at } => {
            (commands::sweep(cocycle, backend, sweep, Some(*at), cli.dump_config)?, true)
        }
        Cmd::Spectrum { coupling, method, size, thetas, energies } => {
            (commands::spectrum(coupling, *method, *size, *thetas, *energies, cli.dump_config)?, true)
        }
        Cmd::Region { coupling } => (commands::region(coupling)?, true),
        Cmd::Duality { coupling, energy, n, phases, check } => {
            (commands::duality(coupling, energy, *n, *phases, *check, cli.dump_config)?, true)
        }
        Cmd::Verify { panel, n, phases, size, thetas, energies, seed, tol } => {
            let s = verify::Settings {
                n: *n,
                phases: *phases,
                size: *size,
                thetas: *thetas,
                energies: *energies,
                seed: *seed,
                tol: *tol,
            };
            verify::run(*panel, &s, cli.dump_config)?
        }
    };
    if cli.timings {
        rec.diag("runtime_ms", report::num(started.elapsed().as_secs_f64() * 1e3));
    }
    Ok((rec, ok))
}

fn main() -> ExitCode {
    let outcome = parse_args().and_then(|cli| {
        if cli.threads == Some(0) {
            return Err(Failure::Input("--threads must be at least 1".into()));
        }
        if let Some(t) = cli.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .map_err(|e| Failure::Runtime(format!("thread pool: {e}")))?;
        }
        let (rec, ok) = run(&cli)?;
        let mut sink: Box<dyn Write> = match &cli.output {
            Some(p) => Box::new(
                std::fs::File::create(p)
                    .map_err(|e| Failure::Input(format!("cannot create {}: {e}", p.display())))?,
            ),
            None => Box::new(std::io::stdout().lock()),
        };
        if cli.dump_config {
            sink.write_all(config::emit(&rec.inputs).as_bytes())
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            return Ok(true);
        }
        rec.write(cli.format, &mut *sink)?;
        Ok(ok)
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
