use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use trapmode_cli::config::Geometry;
use trapmode_cli::reproduce::{reproduce, Target};
use trapmode_cli::{run::run, Artifact, CliError, Experiment, ExperimentConfig, Format};

#[derive(Parser)]
#[command(name = "trapmode", version, about = "Trapped modes in finite branched waveguides")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args)]
struct Flags {
    /// TOML experiment config.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for output files (stdout only when absent).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Mesh size.
    #[arg(long, global = true, value_name = "REAL")]
    h: Option<f64>,
    /// Truncation N of trace and DtN sums.
    #[arg(long, global = true, value_name = "INT")]
    modes: Option<usize>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, value_name = "INT")]
    jobs: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Domain as `name(p1,p2,…)`, overriding the config geometry.
    #[arg(long, global = true, value_name = "DOMAIN")]
    domain: Option<String>,
    /// Number of eigenvalues.
    #[arg(long, global = true, value_name = "INT")]
    k: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the sufficient trapping condition for the built-in trial function.
    Condition,
    /// Lowest eigenvalues of the full domain.
    Spectrum,
    /// Eigenvalues along a parameter range.
    Sweep,
    /// Reduced DtN problem: μ₁(π²), fixed point, monotonicity.
    Reduced,
    /// Bent-strip coefficients over an α grid.
    BentCoeffs,
    /// Branch energy profiles of trapped modes.
    Decay,
    /// Branch length at which λ₁ reaches π².
    Amin,
    /// Re-run a canned figure or table and compare with reference values.
    Reproduce {
        #[arg(value_enum)]
        target: Target,
    },
}

impl Command {
    fn experiment(&self) -> Option<Experiment> {
        Some(match self {
            Command::Condition => Experiment::Condition,
            Command::Spectrum => Experiment::Spectrum,
            Command::Sweep => Experiment::Sweep,
            Command::Reduced => Experiment::Reduced,
            Command::BentCoeffs => Experiment::BentCoeffs,
            Command::Decay => Experiment::Decay,
            Command::Amin => Experiment::Amin,
            Command::Reproduce { .. } => return None,
        })
    }
}

fn configure(flags: &Flags) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &flags.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(d) = &flags.domain {
        cfg.geometry = Some(Geometry::parse(d)?);
    }
    if flags.h.is_some() {
        cfg.solver.h = flags.h;
    }
    if let Some(m) = flags.modes {
        cfg.solver.modes = m;
    }
    if let Some(k) = flags.k {
        cfg.solver.k = k;
    }
    if flags.format.is_some() {
        cfg.output.format = flags.format;
    }
    if flags.out.is_some() {
        cfg.output.dir = flags.out.clone();
    }
    if flags.jobs.is_some() {
        cfg.output.jobs = flags.jobs;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = configure(&cli.flags)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.output.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::validation(format!("worker pool: {e}")))?;
    let (artifact, format): (Artifact, Format) = match (&cli.command, cli.command.experiment()) {
        (_, Some(kind)) => (pool.install(|| run(kind, &cfg))?, cfg.format(kind)),
        (Command::Reproduce { target }, None) => {
            if cfg.experiment.is_some() {
                return Err(CliError::validation("reproduce takes no `experiment` key".to_string()));
            }
            (pool.install(|| reproduce(*target, &cfg))?, cfg.output.format.unwrap_or(Format::Csv))
        }
        _ => unreachable!("every other command maps to an experiment"),
    };
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(artifact.render(format).as_bytes())?;
    if let Some(dir) = &cfg.output.dir {
        artifact.write(dir, format)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
