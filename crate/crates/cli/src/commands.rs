use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use vacuumq::detector::{build_schedule, simulate_q_experiment, transfer_probability, RNG_ID};
use vacuumq::dynamics::{
    echo_reverse_run, evolve_unitary, rabi_signal, revival_time, EchoSchedule, JointState, LindbladIntegrator,
};
use vacuumq::fock::DensityMatrix;
use vacuumq::io::{
    read_density_json, read_q_samples_csv, write_q_samples_csv, write_table, write_wigner_csv, MatrixJson,
    ReconstructionDocument,
};
use vacuumq::phase_space::{q_grid, PhaseSpaceGrid, Q_CONVENTION, WIGNER_CONVENTION};
use vacuumq::reconstruction::{reconstruct_density, report, InitialGuess, ReconstructionConfig};

use crate::{CliError, RunConfig};

#[derive(Clone, Debug)]
pub enum Command {
    Dynamics,
    Qscan,
    Echo,
    Reconstruct {
        input: PathBuf,
        reference: Option<PathBuf>,
    },
    TransferScan,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Dynamics => "dynamics",
            Command::Qscan => "qscan",
            Command::Echo => "echo",
            Command::Reconstruct { .. } => "reconstruct",
            Command::TransferScan => "transfer-scan",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub files: Vec<OutputFile>,
    /// False only when the reconstruction solver hit its iteration cap.
    pub converged: bool,
    pub summary: String,
}

const MODEL_CHOICES: [&str; 4] = [
    "simulation truncation is a modelling choice (default 64)",
    "noise profile rates are calibrated to the echo fidelity, not measured",
    "reconstruction dimension, tolerance and iteration cap are defaults, not measured settings",
    "polar grids list the origin once, carrying n_phases measurement settings",
];

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn provenance(command: &Command, config: &RunConfig, extra: Value) -> Result<Value, CliError> {
    let snapshot = serde_json::to_value(config).map_err(vacuumq::Error::from)?;
    let canonical = serde_json::to_string(&snapshot).map_err(vacuumq::Error::from)?;
    Ok(json!({
        "tool": "vacuumq-cli",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command.name(),
        "config": snapshot,
        "config_sha256": sha256_hex(canonical.as_bytes()),
        "rng": RNG_ID,
        "seed": config.seed,
        "truncation": config.truncation,
        "conventions": {
            "q": Q_CONVENTION,
            "wigner": WIGNER_CONVENTION,
            "basis": "qubit-major (down,0..N-1),(up,0..N-1)",
            "units": "hbar = 1; rates in rad/s; times in s",
        },
        "model_choices": MODEL_CHOICES,
        "run": extra,
    }))
}

fn time_label(f: f64) -> String {
    format!("t{f}")
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn in_file(path: &Path, err: vacuumq::Error) -> CliError {
    match err {
        vacuumq::Error::Io(e) => CliError::Io(format!("{}: {e}", path.display())),
        other => CliError::Validation(format!("{}: {other}", path.display())),
    }
}

/// Validates `config` and runs one command, returning files without touching the disk.
pub fn run(command: &Command, config: &RunConfig) -> Result<Outcome, CliError> {
    config.validate()?;
    match command {
        Command::Dynamics => dynamics(command, config),
        Command::Qscan => qscan(command, config),
        Command::Echo => echo(command, config),
        Command::Reconstruct { input, reference } => {
            reconstruct(command, config, input, reference.as_deref())
        }
        Command::TransferScan => transfer_scan(command, config),
    }
}

fn dynamics(command: &Command, config: &RunConfig) -> Result<Outcome, CliError> {
    let space = config.space()?;
    let params = config.coupling;
    let beta = config.beta();
    let noise = config.noise()?;
    let t_rev = revival_time(beta, &params)?;
    let d = &config.dynamics;
    let times: Vec<f64> = (0..d.points)
        .map(|k| d.t_max * t_rev * k as f64 / (d.points - 1) as f64)
        .collect();
    let rho0 = JointState::down_coherent(beta, space)?.density();
    let mut integrator = LindbladIntegrator::new(&params, &noise, space)?;
    let states = integrator.series(&rho0, &times, t_rev / d.steps_per_revival as f64)?;
    let closed = rabi_signal(beta, &params, noise.empirical_gamma, &times);
    let rows = times
        .iter()
        .zip(&states)
        .zip(&closed)
        .map(|((t, rho), c)| Ok(vec![*t, t / t_rev, rho.up_population()?, *c]))
        .collect::<Result<Vec<_>, vacuumq::Error>>()?;
    let header = provenance(
        command,
        config,
        json!({"t_rev": t_rev, "gamma": noise.empirical_gamma, "max_trace_defect": integrator.max_trace_defect}),
    )?;
    let csv = write_table(
        &header,
        &["t", "t_over_trev", "p_up_lindblad", "p_up_closed_form"],
        &rows,
    )?;
    let max_gap = rows.iter().map(|r| (r[2] - r[3]).abs()).fold(0.0, f64::max);
    Ok(Outcome {
        files: vec![OutputFile {
            name: "dynamics.csv".into(),
            contents: csv,
        }],
        converged: true,
        summary: format!(
            "{} time points up to {:.1} us; max |lindblad - closed form| = {max_gap:.4}",
            rows.len(),
            times[times.len() - 1] * 1e6
        ),
    })
}

/// Phonon states at `fractions · t_rev`, in input order.
fn phonon_snapshots(config: &RunConfig, fractions: &[f64]) -> Result<Vec<DensityMatrix>, CliError> {
    let space = config.space()?;
    let params = config.coupling;
    let beta = config.beta();
    let noise = config.noise()?;
    let t_rev = revival_time(beta, &params)?;
    let psi0 = JointState::down_coherent(beta, space)?;
    if noise.is_noiseless() {
        return fractions
            .iter()
            .map(|f| Ok(evolve_unitary(&psi0, &params, f * t_rev)?.phonon_state()))
            .collect();
    }
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| fractions[a].total_cmp(&fractions[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| fractions[i] * t_rev).collect();
    let mut integrator = LindbladIntegrator::new(&params, &noise, space)?;
    let dt = t_rev / config.dynamics.steps_per_revival as f64;
    let states = integrator.series(&psi0.density(), &sorted, dt)?;
    let mut out = vec![None; fractions.len()];
    for (slot, state) in order.into_iter().zip(states) {
        out[slot] = Some(state.partial_trace_internal()?);
    }
    Ok(out.into_iter().map(|s| s.expect("every slot filled")).collect())
}

fn qscan(command: &Command, config: &RunConfig) -> Result<Outcome, CliError> {
    let grid = config.grid()?;
    let detector = config.detector()?;
    let t_rev = revival_time(config.beta(), &config.coupling)?;
    let states = phonon_snapshots(config, &config.times)?;
    let mut files = Vec::new();
    let mut purities = Vec::new();
    for (i, (f, rho)) in config.times.iter().zip(&states).enumerate() {
        let sample_seed = config.seed.wrapping_add(i as u64);
        let run =
            json!({"t_over_trev": f, "t": f * t_rev, "sample_seed": sample_seed, "purity": rho.purity()});
        let exact = q_grid(rho, &grid)?;
        let simulated = simulate_q_experiment(rho, &grid, &detector, config.shots, sample_seed)?;
        let label = time_label(*f);
        files.push(OutputFile {
            name: format!("qscan_{label}_exact.csv"),
            contents: write_q_samples_csv(&exact, provenance(command, config, run.clone())?)?,
        });
        files.push(OutputFile {
            name: format!("qscan_{label}_sim.csv"),
            contents: write_q_samples_csv(&simulated, provenance(command, config, run.clone())?)?,
        });
        let state =
            json!({"provenance": provenance(command, config, run)?, "rho": MatrixJson::from(rho.matrix())});
        files.push(OutputFile {
            name: format!("qscan_{label}_state.json"),
            contents: serde_json::to_string_pretty(&state).map_err(vacuumq::Error::from)? + "\n",
        });
        purities.push(format!("{f}: purity {:.4}", rho.purity()));
    }
    Ok(Outcome {
        files,
        converged: true,
        summary: purities.join("; "),
    })
}

fn echo(command: &Command, config: &RunConfig) -> Result<Outcome, CliError> {
    let space = config.space()?;
    let beta = config.beta();
    let noise = config.noise()?;
    let mut schedule = EchoSchedule::half_revival(beta, &config.coupling)?;
    schedule.dt = revival_time(beta, &config.coupling)? / config.dynamics.steps_per_revival as f64;
    let outcome = echo_reverse_run(beta, &config.coupling, Some(&noise), space, &schedule)?;
    let run = json!({
        "forward": schedule.forward,
        "reverse": schedule.reverse,
        "fidelity": outcome.fidelity,
        "purity": outcome.phonon.purity(),
    });
    let q = q_grid(&outcome.phonon, &config.grid()?)?;
    let report = json!({
        "provenance": provenance(command, config, run.clone())?,
        "fidelity": outcome.fidelity,
        "purity": outcome.phonon.purity(),
        "rho": MatrixJson::from(outcome.phonon.matrix()),
    });
    Ok(Outcome {
        files: vec![
            OutputFile {
                name: "echo.json".into(),
                contents: serde_json::to_string_pretty(&report).map_err(vacuumq::Error::from)? + "\n",
            },
            OutputFile {
                name: "echo_q.csv".into(),
                contents: write_q_samples_csv(&q, provenance(command, config, run)?)?,
            },
        ],
        converged: true,
        summary: format!("echo fidelity {:.4}", outcome.fidelity),
    })
}

/// Accepts a bare matrix JSON or any object with a `rho` field (as written by `qscan`).
fn read_state(path: &Path) -> Result<DensityMatrix, CliError> {
    let text = read_text(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| in_file(path, e.into()))?;
    let matrix = value.get("rho").cloned().unwrap_or(value);
    read_density_json(&matrix.to_string()).map_err(|e| in_file(path, e))
}

fn reconstruct(
    command: &Command,
    config: &RunConfig,
    input: &Path,
    reference: Option<&Path>,
) -> Result<Outcome, CliError> {
    let text = read_text(input)?;
    let samples = read_q_samples_csv(&text).map_err(|e| in_file(input, e))?;
    let section = &config.reconstruction;
    let initial_guess = match &section.initial_guess {
        Some(p) => InitialGuess::Supplied(read_state(p)?),
        None => InitialGuess::MaximallyMixed,
    };
    let reference = reference.map(read_state).transpose()?;
    let rc = ReconstructionConfig {
        truncation: section.truncation,
        max_radius: section.max_radius,
        max_iterations: section.max_iterations,
        convergence_tol: section.convergence_tol,
        initial_guess,
    };
    let mut result = reconstruct_density(&samples, &rc)?;
    if let Some(r) = &reference {
        result = result.with_reference(r)?;
    }
    let wigner_grid = PhaseSpaceGrid::from_layout(&section.wigner_grid)?;
    let rep = report(&result, None, &wigner_grid)?;
    let run = json!({
        "input": input.display().to_string(),
        "input_sha256": sha256_hex(text.as_bytes()),
        "reference": reference.as_ref().map(|_| true),
        "wigner_min": rep.wigner_min,
        "wigner_negative": rep.negative,
    });
    let doc = ReconstructionDocument::new(&result, provenance(command, config, run.clone())?);
    let mut summary = format!(
        "purity {:.4}, residual {:.3e}, {} iterations{}",
        result.purity,
        result.residual,
        result.iterations,
        if result.converged { "" } else { " (not converged)" }
    );
    if let Some(f) = result.fidelity_vs_reference {
        summary.push_str(&format!(", fidelity {f:.4}"));
    }
    if rep.negative {
        summary.push_str(&format!(", Wigner negative (min {:.4})", rep.wigner_min));
    }
    Ok(Outcome {
        files: vec![
            OutputFile {
                name: "reconstruction.json".into(),
                contents: doc.to_json()?,
            },
            OutputFile {
                name: "wigner.csv".into(),
                contents: write_wigner_csv(&rep.wigner, provenance(command, config, run)?)?,
            },
        ],
        converged: result.converged,
        summary,
    })
}

fn transfer_scan(command: &Command, config: &RunConfig) -> Result<Outcome, CliError> {
    let schedule = build_schedule(&config.sweep)?;
    let rows = (1..=config.transfer.n_max)
        .map(|n| Ok(vec![n as f64, transfer_probability(n, &schedule)?]))
        .collect::<Result<Vec<_>, vacuumq::Error>>()?;
    let min = rows.iter().map(|r| r[1]).fold(f64::INFINITY, f64::min);
    let max = rows.iter().map(|r| r[1]).fold(0.0, f64::max);
    let header = provenance(command, config, json!({"min": min, "max": max}))?;
    Ok(Outcome {
        files: vec![OutputFile {
            name: "transfer.csv".into(),
            contents: write_table(&header, &["n", "p_transfer"], &rows)?,
        }],
        converged: true,
        summary: format!("min {min:.4}, max {max:.4}, spread {:.4}", max - min),
    })
}
