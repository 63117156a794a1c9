use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qcqmc::{cmd_ed, cmd_nsi, cmd_qmc, cmd_sweep, cmd_vqe, CliError, ExperimentConfig};
use qcqmc_core::matelem::Backend;

#[derive(Parser)]
#[command(name = "qcqmc", version, about = "Walker Monte Carlo in circuit-rotated bases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Override the matrix element backend.
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendArg>,
    /// Walk in the computational basis.
    #[arg(long, global = true)]
    identity_basis: bool,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// More log output; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Exact ground energy in the reference's particle sector.
    Ed { config: PathBuf },
    /// Optimize the ansatz and write the circuit.
    Vqe { config: PathBuf },
    /// Sign-problem indicators in the identity and circuit bases.
    Nsi { config: PathBuf },
    /// Walker Monte Carlo run.
    Qmc { config: PathBuf },
    /// VQE, indicators and Monte Carlo over a list of depths.
    Sweep { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Exact,
    Sampled,
}

fn load(cli: &Cli, path: &Path) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = &cli.output_dir {
        cfg.output.dir = d.clone();
    }
    match cli.backend {
        Some(BackendArg::Exact) if !cfg.backend.is_exact() => cfg.backend = Backend::exact(),
        Some(BackendArg::Sampled) if cfg.backend.is_exact() => cfg.backend = Backend::sampled(1_000_000, 10_000),
        _ => {}
    }
    if cli.identity_basis {
        cfg.qmc.identity_basis = true;
    }
    cfg.qmc.run.seed = cfg.seed;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Other(e.to_string()))?;
    }
    match &cli.command {
        Command::Ed { config } => cmd_ed(&load(cli, config)?).map(|r| println!("{:.12}", r.ground_energy)),
        Command::Vqe { config } => cmd_vqe(&load(cli, config)?).map(|r| println!("{:.12}", r.energy)),
        Command::Nsi { config } => cmd_nsi(&load(cli, config)?)
            .map(|r| println!("{:.6e} {:.6e}", r.identity.s_thermal, r.transformed.s_thermal)),
        Command::Qmc { config } => cmd_qmc(&load(cli, config)?)
            .map(|r| println!("{:.10} {:.3e}", r.summary.energy.mean, r.summary.energy.std_error)),
        Command::Sweep { config } => cmd_sweep(&load(cli, config)?).map(|r| {
            let failed = r.rows.iter().filter(|row| row.error.is_some()).count();
            println!("{} points, {failed} failed", r.rows.len());
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
