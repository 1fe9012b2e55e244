//! `stellar`: solves, sweeps, verification and demonstrators for polytropic stars.

mod verify;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use stellar_core::format::sig;
use stellar_core::scaling::{self, geometric_masses, write_sweep_csv};
use stellar_core::shooting::{beta_of_mass, solve_star};
use stellar_core::{io as docs, radial, varmin, Density, Eos, Error, ShootingOptions};

const EXIT_VALIDATION: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "stellar", version, about = "Equilibria of self-gravitating polytropic stars")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one star and write it as JSON (or its profile as CSV).
    Solve(SolveArgs),
    /// Solve a geometric range of masses and write the scaling CSV.
    Sweep(SweepArgs),
    /// Run the identity suite for each adiabatic index and print a PASS/FAIL table.
    Verify(VerifyArgs),
    /// Rescale a stored solution to a new mass.
    Scale(ScaleArgs),
    /// Print the mutual energy m1*m2/D of two separated spheres.
    TwoBody(TwoBodyArgs),
    /// Print the uniform-ball energy family over a list of radii.
    CollapseDemo(CollapseArgs),
}

#[derive(Args, Debug, Clone, Copy)]
struct Numerics {
    /// Relative ODE tolerance, in (0, 1e-2].
    #[arg(long, default_value_t = 1e-10, value_parser = parse_tol)]
    tol: f64,
    /// Output grid size.
    #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u32).range(8..))]
    grid: u32,
}

impl Numerics {
    fn options(&self) -> ShootingOptions<f64> {
        ShootingOptions {
            rtol: self.tol,
            atol: self.tol * 1e-2,
            grid_points: self.grid as usize,
            ..ShootingOptions::default()
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("size").required(true).args(["beta", "mass"])))]
struct SolveArgs {
    #[arg(long)]
    gamma: f64,
    #[arg(long = "K")]
    k: f64,
    /// Central value of Θ.
    #[arg(long)]
    beta: Option<f64>,
    /// Total mass.
    #[arg(long)]
    mass: Option<f64>,
    #[command(flatten)]
    numerics: Numerics,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    gamma: f64,
    #[arg(long = "K", default_value_t = 1.0)]
    k: f64,
    #[arg(long)]
    mass_min: f64,
    #[arg(long)]
    mass_max: f64,
    #[arg(long, default_value_t = 10)]
    points: usize,
    #[command(flatten)]
    numerics: Numerics,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Comma-separated adiabatic indices.
    #[arg(long, value_delimiter = ',', required = true)]
    gamma_list: Vec<f64>,
    #[arg(long = "K", default_value_t = 1.0)]
    k: f64,
    /// Seed for the randomized gradient profiles.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    numerics: Numerics,
}

#[derive(Args, Debug)]
struct ScaleArgs {
    /// Solution JSON written by `solve`.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    mass: f64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TwoBodyArgs {
    #[arg(long)]
    m1: f64,
    #[arg(long)]
    m2: f64,
    #[arg(long = "D")]
    separation: f64,
    /// Radius of each model sphere; defaults to 0.4 D.
    #[arg(long)]
    radius: Option<f64>,
}

#[derive(Args, Debug)]
struct CollapseArgs {
    #[arg(long)]
    gamma: f64,
    #[arg(long = "K", default_value_t = 1.0)]
    k: f64,
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    /// Comma-separated ball radii.
    #[arg(long, value_delimiter = ',', default_value = "1e-1,1e-2,1e-3,1e-4,1e-5,1e-6,1e-7")]
    deltas: Vec<f64>,
}

fn parse_tol(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1e-2 {
        Ok(v)
    } else {
        Err(format!("tolerance must lie in (0, 1e-2], got {v}"))
    }
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("STELLAR_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Domain(format!("STELLAR_THREADS must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}

fn solve(args: &SolveArgs) -> Result<()> {
    let eos = Eos::polytropic(args.k, args.gamma)?;
    let opts = args.numerics.options();
    let beta = match (args.beta, args.mass) {
        (Some(b), _) => b,
        (None, Some(m)) => beta_of_mass(&eos, m, None, &opts)?,
        (None, None) => unreachable!("clap enforces one of --beta/--mass"),
    };
    let sol = solve_star(&eos, beta, &opts)?;
    let mut out = sink(&args.out)?;
    match args.format {
        Format::Json => docs::write_solution(&sol, &mut out)?,
        Format::Csv => sol.density.write_csv(&mut out)?,
    }
    out.flush()?;
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let eos = Eos::polytropic(args.k, args.gamma)?;
    let opts = args.numerics.options();
    let masses = geometric_masses(args.mass_min, args.mass_max, args.points)?;
    let rows = thread_pool()?.install(|| {
        masses
            .par_iter()
            .map(|&m| scaling::sweep_row(&eos, m, &opts))
            .collect::<stellar_core::Result<Vec<_>>>()
    })?;
    let mut out = sink(&args.out)?;
    write_sweep_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

fn scale(args: &ScaleArgs) -> Result<()> {
    let sol = docs::read_solution_path::<f64>(&args.input)
        .with_context(|| format!("cannot load {}", args.input.display()))?;
    let out_sol = scaling::rescale_solution(&sol, args.mass)?;
    let mut out = sink(&args.out)?;
    docs::write_solution(&out_sol, &mut out)?;
    out.flush()?;
    Ok(())
}

fn two_body(args: &TwoBodyArgs) -> Result<()> {
    let d = args.separation;
    if !(args.m1 > 0.0 && args.m2 > 0.0 && d > 0.0) {
        return Err(Error::Domain("masses and separation must be positive".into()).into());
    }
    let radius = args.radius.unwrap_or(0.4 * d);
    let a = Density::uniform_ball(args.m1, radius, 801)?;
    let b = Density::uniform_ball(args.m2, radius, 801)?;
    let series = radial::mutual_energy_quadrature(&a, &b, d, 4)?;
    let exact = args.m1 * args.m2 / d;
    println!("{exact:?}");
    eprintln!(
        "quadrature cross-check: {} (relative gap {:.1e}, l=1..4 terms {:?})",
        series.total,
        (series.total - exact).abs() / exact,
        &series.terms[1..]
    );
    Ok(())
}

fn collapse_demo(args: &CollapseArgs) -> Result<()> {
    let mut out = sink(&None)?;
    writeln!(out, "delta,energy")?;
    for &delta in &args.deltas {
        let e = varmin::collapse_family_energy(args.gamma, args.k, args.m, delta)?;
        writeln!(out, "{},{}", sig(delta, 12), sig(e, 12))?;
    }
    out.flush()?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Domain(_) | Error::SingularExponent | Error::Parse(_) | Error::Io(_)) => EXIT_VALIDATION,
        Some(_) => EXIT_NUMERIC,
        None if err.chain().any(|e| e.is::<io::Error>()) => EXIT_VALIDATION,
        None => EXIT_NUMERIC,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Sweep(a) => sweep(a),
        Command::Verify(a) => match verify::run(a) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(EXIT_VALIDATION),
            Err(e) => Err(e),
        },
        Command::Scale(a) => scale(a),
        Command::TwoBody(a) => two_body(a),
        Command::CollapseDemo(a) => collapse_demo(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
