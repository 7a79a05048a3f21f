use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use herald_cli::config::{self, Figure, Point};
use herald_cli::report;
use herald_cli::sweep::run_sweep;
use herald_cli::validate::{self, DEFAULT_SEED};
use herald_cli::{CliError, Result};
use herald_core::metrics::RNG_ALGORITHM;
use herald_core::Execution;

#[derive(Parser)]
#[command(
    name = "herald",
    version,
    about = "Heralded parity-projection experiments"
)]
struct Cli {
    /// Evaluate on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the accepted resource state for one parameter point.
    Resource(PointArgs),
    /// Print the parity projection branch table for one parameter point.
    Ppp(PointArgs),
    /// Resource and parity projection report for one parameter point.
    Describe(PointArgs),
    /// Evaluate a parameter grid and write CSV.
    Sweep(SweepArgs),
    /// Check the simulation against its closed forms.
    Validate {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Args)]
struct PointArgs {
    /// Absorption probability of both arms.
    #[arg(long, conflicts_with_all = ["a1", "a2"])]
    p_abs: Option<f64>,
    #[arg(long)]
    a1: Option<f64>,
    #[arg(long)]
    a2: Option<f64>,
    /// Path phase difference.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    delta: f64,
    /// Detector efficiency; setting this or --dark enables detectors.
    #[arg(long)]
    eta: Option<f64>,
    /// Dark count probability.
    #[arg(long)]
    dark: Option<f64>,
    /// Probability the source emits no photon.
    #[arg(long, default_value_t = 0.0)]
    p0: f64,
    /// Probability the source emits two photons.
    #[arg(long, default_value_t = 0.0)]
    p2: f64,
    /// Treat two-photon emissions as distinguishable.
    #[arg(long)]
    distinguishable: bool,
}

impl PointArgs {
    fn point(&self) -> Point {
        let base = Point::default();
        let (a1, a2) = match self.p_abs {
            Some(a) => (a, a),
            None => (self.a1.unwrap_or(base.a1), self.a2.unwrap_or(base.a2)),
        };
        Point {
            a1,
            a2,
            delta: self.delta,
            eta: self.eta.unwrap_or(base.eta),
            dark: self.dark.unwrap_or(base.dark),
            p0: self.p0,
            p2: self.p2,
            detectors: self.eta.is_some() || self.dark.is_some(),
            indistinguishable: !self.distinguishable,
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    /// 2, 3, 4 or custom; may instead come from the config file.
    #[arg(long)]
    figure: Option<Figure>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; stdout when neither this nor `output` is set.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Extra `key=value` assignment, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn sweep(args: &SweepArgs, exec: Execution) -> Result<()> {
    let mut entries = match &args.config {
        Some(path) => config::parse_entries(&read(path)?)?,
        None => Vec::new(),
    };
    for s in &args.set {
        entries.push(config::parse_override(s)?);
    }
    if let Some(seed) = args.seed {
        entries.push(config::parse_override(&format!("seed={seed}"))?);
    }
    if let Some(n) = args.samples {
        entries.push(config::parse_override(&format!("samples={n}"))?);
    }
    if let Some(f) = args.figure {
        entries.push(config::parse_override(&format!("figure={f}"))?);
    }
    let figure = config::figure_of(&entries)?
        .ok_or_else(|| CliError::Config("no figure given (use --figure or `figure =`)".into()))?;
    let mut cfg = config::build(figure, &entries)?;
    if let Some(out) = &args.out {
        cfg.output = Some(out.clone());
    }

    eprintln!(
        "sweep {}: {} points, rng {}, seed {}",
        cfg.figure,
        cfg.points(),
        RNG_ALGORITHM,
        cfg.seed
    );
    let csv = run_sweep(&cfg, exec)?;
    match &cfg.output {
        Some(path) => fs::write(path, csv).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => std::io::stdout()
            .write_all(csv.as_bytes())
            .map_err(|source| CliError::Io {
                path: "stdout".into(),
                source,
            }),
    }
}

fn print(report: herald_core::Result<String>) -> Result<()> {
    print!("{}", report?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let outcome = match &cli.command {
        Command::Resource(p) => print(report::resource_report(&p.point())),
        Command::Ppp(p) => print(report::ppp_report(&p.point())),
        Command::Describe(p) => print(report::describe(&p.point())),
        Command::Sweep(args) => sweep(args, exec),
        Command::Validate { seed } => {
            let report = validate::validate(*seed, exec);
            print!("{report}");
            return if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
