use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vacuumq_cli::{run, write_outputs, CliError, Command, Overrides, RunConfig, EXIT_NOT_CONVERGED};

#[derive(Parser)]
#[command(
    name = "vacuumq",
    version,
    about = "Phonon JCM dynamics, vacuum-measurement Q scans and tomography"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Simulation Fock truncation N.
    #[arg(long, global = true)]
    truncation: Option<usize>,
    #[arg(long = "out-dir", global = true)]
    output_dir: Option<PathBuf>,
    /// Shots per grid point.
    #[arg(long, global = true)]
    shots: Option<u64>,
    #[arg(long, global = true)]
    noise_profile: Option<String>,
    #[arg(long, global = true)]
    detector_profile: Option<String>,
    /// Snapshot times in units of t_rev, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    /// Counter-diabatic amplitude of the transfer sweep.
    #[arg(long, global = true)]
    beta_cd: Option<f64>,
    /// Transfer sweep duration in seconds.
    #[arg(long, global = true)]
    sweep_duration: Option<f64>,
    #[arg(long, global = true)]
    max_radius: Option<f64>,
    /// Reconstruction dimension N_rec.
    #[arg(long, global = true)]
    rec_truncation: Option<usize>,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Sub {
    /// P(up)(t) from the master equation and from the closed-form signal.
    Dynamics,
    /// Exact and simulated Q grids at the configured times.
    Qscan,
    /// Forward evolution for t_rev/2, then the phase-flipped reverse.
    Echo,
    /// Density matrix and Wigner grid from a Q-sample CSV.
    Reconstruct {
        #[arg(long)]
        input: PathBuf,
        /// Matrix JSON (or a qscan state file) to compute the fidelity against.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Transfer probability for n = 1..n_max.
    TransferScan {
        #[arg(long)]
        n_max: Option<usize>,
    },
}

fn resolve(cli: &Cli) -> Result<(Command, RunConfig), CliError> {
    let c = &cli.common;
    let mut config = RunConfig::load(c.config.as_deref())?;
    let mut overrides = Overrides {
        seed: c.seed,
        truncation: c.truncation,
        output_dir: c.output_dir.clone(),
        shots: c.shots,
        noise_profile: c.noise_profile.clone(),
        detector_profile: c.detector_profile.clone(),
        times: c.times.clone(),
        beta_cd: c.beta_cd,
        sweep_duration: c.sweep_duration,
        max_radius: c.max_radius,
        reconstruction_truncation: c.rec_truncation,
        n_max: None,
    };
    let command = match &cli.command {
        Sub::Dynamics => Command::Dynamics,
        Sub::Qscan => Command::Qscan,
        Sub::Echo => Command::Echo,
        Sub::Reconstruct { input, reference } => Command::Reconstruct {
            input: input.clone(),
            reference: reference.clone(),
        },
        Sub::TransferScan { n_max } => {
            overrides.n_max = *n_max;
            Command::TransferScan
        }
    };
    config.apply(&overrides);
    Ok((command, config))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = resolve(&cli).and_then(|(command, config)| {
        if cli.common.print_config {
            let text = toml::to_string(&config).map_err(|e| CliError::Validation(e.to_string()))?;
            print!("{text}");
            return Ok(0);
        }
        let outcome = run(&command, &config)?;
        let written = write_outputs(&config.output_dir, &outcome.files)?;
        for path in &written {
            println!("wrote {}", path.display());
        }
        println!("{}: {}", command.name(), outcome.summary);
        Ok(if outcome.converged { 0 } else { EXIT_NOT_CONVERGED })
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
