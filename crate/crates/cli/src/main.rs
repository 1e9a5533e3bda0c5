//! `edgewatch`: band structure, Dirichlet spectra and band-edge resonances
//! of truncated periodic Jacobi operators, as CSV or JSON.

mod commands;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use edgewatch_core::PeriodicPotential;
use serde::Deserialize;

use crate::table::Table;

#[derive(Parser, Debug)]
#[command(name = "edgewatch", version, about = "Band-edge resonances of truncated periodic potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bands of the periodic operator: lo, hi, closed gaps.
    Bands(BasicArgs),
    /// Band edges with their genericity class for each residue j.
    Edges(EdgesArgs),
    /// Dirichlet eigenvalues and boundary weights of H_L.
    Spectrum(SpectrumArgs),
    /// Resonances attached to the eigenvalues next to one band edge.
    Resonances(ResonanceArgs),
    /// Checks that no resonance lies in [E0-eps, E0] - i[0, eps^5].
    FreeRegion(FreeRegionArgs),
    /// Runs the property checks on one configuration.
    Verify(VerifyArgs),
    /// Log-log fits of the near-edge laws.
    Scaling(ResonanceArgs),
    /// Width of a fixed and a proportional resonance as L grows.
    LScaling(LScalingArgs),
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct PotentialSource {
    /// Values on one period, comma separated; the period is their count.
    #[arg(long, allow_hyphen_values = true, value_name = "V0,V1,...")]
    potential: Option<String>,
    /// JSON file {"period": p, "values": [...]}.
    #[arg(long, value_name = "PATH")]
    potential_file: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to this file instead of standard output.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BasicArgs {
    #[command(flatten)]
    source: PotentialSource,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct EdgesArgs {
    #[command(flatten)]
    source: PotentialSource,
    /// Residue j = L mod p; all residues when omitted.
    #[arg(long)]
    j: Option<usize>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[command(flatten)]
    source: PotentialSource,
    /// Length of the Dirichlet section [0, L].
    #[arg(long = "L", visible_alias = "l")]
    l: usize,
    /// Seed for the inverse-iteration starting vectors.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 0.2)]
    eps: f64,
    #[arg(long = "c0", visible_alias = "C0", default_value_t = 50.0)]
    c0: f64,
    #[arg(long = "c1", visible_alias = "C1", default_value_t = 10.0)]
    c1: f64,
    /// Newton stopping tolerance on |f|.
    #[arg(long, default_value_t = 1e-11)]
    tol: f64,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
}

#[derive(Args, Debug)]
pub struct ResonanceArgs {
    #[command(flatten)]
    source: PotentialSource,
    #[arg(long = "L", visible_alias = "l")]
    l: usize,
    /// Band edge energy, matched to the nearest computed edge within 1e-6.
    #[arg(long, allow_negative_numbers = true)]
    edge: f64,
    #[command(flatten)]
    sweep: SweepArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct FreeRegionArgs {
    #[command(flatten)]
    source: PotentialSource,
    #[arg(long = "L", visible_alias = "l")]
    l: usize,
    #[arg(long, allow_negative_numbers = true)]
    edge: f64,
    #[arg(long, default_value_t = 0.2)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Defaults to 0,3.
    #[arg(long, allow_hyphen_values = true, value_name = "V0,V1,...", conflicts_with = "potential_file")]
    potential: Option<String>,
    #[arg(long, value_name = "PATH")]
    potential_file: Option<PathBuf>,
    #[arg(long = "L", visible_alias = "l", default_value_t = 400)]
    l: usize,
    /// Defaults to the lowest band edge inside (-2, 2).
    #[arg(long, allow_negative_numbers = true)]
    edge: Option<f64>,
    #[command(flatten)]
    sweep: SweepArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct LScalingArgs {
    #[command(flatten)]
    source: PotentialSource,
    /// Section lengths, all with the same residue mod p.
    #[arg(long = "Ls", visible_alias = "ls", value_delimiter = ',', default_value = "250,500,1000,2000")]
    ls: Vec<usize>,
    #[arg(long, allow_negative_numbers = true)]
    edge: f64,
    /// Index of the fixed-n track.
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// The proportional track uses n = floor(fraction · L).
    #[arg(long, default_value_t = 0.02)]
    fraction: f64,
    #[command(flatten)]
    sweep: SweepArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
}

/// Exit status and one-line diagnostic.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub const EXIT_VERIFY: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

impl Failure {
    pub fn usage(flag: &str, msg: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_USAGE,
            message: format!("{msg} (flag {flag})"),
        }
    }

    /// Library errors: argument problems are usage errors, the rest numerical.
    pub fn from_core(flag: &str, e: edgewatch_core::Error) -> Self {
        if e.is_usage() {
            Self::usage(flag, e)
        } else {
            Self {
                code: EXIT_NUMERIC,
                message: e.to_string(),
            }
        }
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;

#[derive(Deserialize)]
struct PotentialFile {
    period: usize,
    values: Vec<f64>,
}

pub fn load_potential(inline: Option<&str>, file: Option<&PathBuf>) -> Outcome<PeriodicPotential> {
    if let Some(text) = inline {
        let values = text
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Failure::usage("--potential", format!("cannot parse '{text}': {e}")))?;
        return PeriodicPotential::new(values).map_err(|e| Failure::usage("--potential", e));
    }
    let path = file.ok_or_else(|| Failure::usage("--potential", "no potential given"))?;
    let raw = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage("--potential-file", format!("{}: {e}", path.display())))?;
    let pf: PotentialFile = serde_json::from_str(&raw)
        .map_err(|e| Failure::usage("--potential-file", format!("{}: {e}", path.display())))?;
    PeriodicPotential::with_period(pf.period, pf.values).map_err(|e| Failure::usage("--potential-file", e))
}

impl PotentialSource {
    pub fn load(&self) -> Outcome<PeriodicPotential> {
        load_potential(self.potential.as_deref(), self.potential_file.as_ref())
    }
}

impl SweepArgs {
    pub fn config(&self) -> Outcome<edgewatch_core::SweepConfig> {
        for (flag, v) in [("--eps", self.eps), ("--c0", self.c0), ("--c1", self.c1), ("--tol", self.tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Failure::usage(flag, format!("must be positive, got {v}")));
            }
        }
        if self.max_iter == 0 {
            return Err(Failure::usage("--max-iter", "must be positive"));
        }
        Ok(edgewatch_core::SweepConfig {
            eps: self.eps,
            c0: self.c0,
            c1: self.c1,
            tol: self.tol,
            max_iter: self.max_iter,
        })
    }
}

/// Writes the table and returns the status it should exit with.
pub fn emit(table: &Table, out: &OutputArgs) -> Outcome<()> {
    let text = match out.format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    };
    match &out.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::usage("--output", format!("{}: {e}", path.display()))),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Failure::usage("--output", e))
        }
    }
}

fn configure_threads() -> Outcome<()> {
    let Ok(raw) = std::env::var("EDGEWATCH_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::usage("EDGEWATCH_THREADS", format!("must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::usage("EDGEWATCH_THREADS", e))
}

fn run(cli: Cli) -> Outcome<()> {
    configure_threads()?;
    match cli.command {
        Command::Bands(a) => commands::bands(&a),
        Command::Edges(a) => commands::edges(&a),
        Command::Spectrum(a) => commands::spectrum(&a),
        Command::Resonances(a) => commands::resonances(&a),
        Command::FreeRegion(a) => commands::free_region(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Scaling(a) => commands::scaling(&a),
        Command::LScaling(a) => commands::l_scaling(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let rendered = e.to_string();
            let line = rendered.lines().next().unwrap_or("error: invalid arguments");
            eprintln!("{line}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
