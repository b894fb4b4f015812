//! Run configuration: TOML file, then command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vacuumq::detector::{DetectorFile, DetectorModel, SweepParams};
use vacuumq::dynamics::{CouplingParams, NoiseParams, DEFAULT_STEPS_PER_REVIVAL};
use vacuumq::fock::FockSpace;
use vacuumq::phase_space::{GridLayout, PhaseSpaceGrid};
use vacuumq::C64;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    /// End of the time axis in units of `t_rev`.
    pub t_max: f64,
    pub points: usize,
    pub steps_per_revival: usize,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            t_max: 1.5,
            points: 301,
            steps_per_revival: DEFAULT_STEPS_PER_REVIVAL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructionSection {
    pub truncation: usize,
    pub max_radius: f64,
    pub max_iterations: usize,
    pub convergence_tol: f64,
    /// Matrix JSON used as the starting point instead of the maximally mixed state.
    pub initial_guess: Option<PathBuf>,
    pub wigner_grid: GridLayout,
}

impl Default for ReconstructionSection {
    fn default() -> Self {
        Self {
            truncation: 12,
            max_radius: 3.0,
            max_iterations: 5000,
            convergence_tol: 1e-8,
            initial_guess: None,
            wigner_grid: GridLayout::Cartesian {
                x_min: -3.0,
                x_max: 3.0,
                y_min: -3.0,
                y_max: 3.0,
                step: 0.1,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferSection {
    pub n_max: usize,
}

impl Default for TransferSection {
    fn default() -> Self {
        Self { n_max: 25 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub truncation: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Initial coherent amplitude `[re, im]`.
    pub beta: [f64; 2],
    pub coupling: CouplingParams,
    pub noise_profile: String,
    /// Explicit rates; replaces the named profile when present.
    pub noise: Option<NoiseParams>,
    pub sweep: SweepParams,
    pub detector_profile: String,
    /// Versioned detector JSON; replaces the named profile when present.
    pub detector_file: Option<PathBuf>,
    pub grid: GridLayout,
    pub shots: u64,
    /// Snapshot times in units of `t_rev`.
    pub times: Vec<f64>,
    pub dynamics: DynamicsConfig,
    pub reconstruction: ReconstructionSection,
    pub transfer: TransferSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            truncation: 64,
            seed: 2016,
            output_dir: PathBuf::from("out"),
            beta: [1.62, 0.0],
            coupling: CouplingParams::default(),
            noise_profile: "noiseless".into(),
            noise: None,
            sweep: SweepParams::paper_2016(),
            detector_profile: "ideal".into(),
            detector_file: None,
            grid: PhaseSpaceGrid::paper_scan().layout().clone(),
            shots: 100,
            times: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            dynamics: DynamicsConfig::default(),
            reconstruction: ReconstructionSection::default(),
            transfer: TransferSection::default(),
        }
    }
}

/// Values given on the command line; `None` leaves the file value alone.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub truncation: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub shots: Option<u64>,
    pub noise_profile: Option<String>,
    pub detector_profile: Option<String>,
    pub times: Option<Vec<f64>>,
    pub beta_cd: Option<f64>,
    pub sweep_duration: Option<f64>,
    pub max_radius: Option<f64>,
    pub reconstruction_truncation: Option<usize>,
    pub n_max: Option<usize>,
}

impl RunConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("{}: {e}", origin.display())))
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text =
                    std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                Self::from_toml(&text, p)
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.truncation {
            self.truncation = v;
        }
        if let Some(v) = &o.output_dir {
            self.output_dir = v.clone();
        }
        if let Some(v) = o.shots {
            self.shots = v;
        }
        if let Some(v) = &o.noise_profile {
            self.noise_profile = v.clone();
            self.noise = None;
        }
        if let Some(v) = &o.detector_profile {
            self.detector_profile = v.clone();
            self.detector_file = None;
        }
        if let Some(v) = &o.times {
            self.times = v.clone();
        }
        if let Some(v) = o.beta_cd {
            self.sweep.beta_cd = v;
        }
        if let Some(v) = o.sweep_duration {
            self.sweep.duration = v;
        }
        if let Some(v) = o.max_radius {
            self.reconstruction.max_radius = v;
        }
        if let Some(v) = o.reconstruction_truncation {
            self.reconstruction.truncation = v;
        }
        if let Some(v) = o.n_max {
            self.transfer.n_max = v;
        }
    }

    pub fn space(&self) -> Result<FockSpace, CliError> {
        Ok(FockSpace::new(self.truncation)?)
    }

    pub fn beta(&self) -> C64 {
        C64::new(self.beta[0], self.beta[1])
    }

    pub fn noise(&self) -> Result<NoiseParams, CliError> {
        let noise = match self.noise {
            Some(n) => n,
            None => NoiseParams::profile(&self.noise_profile).ok_or_else(|| {
                CliError::Validation(format!(
                    "unknown noise profile `{}` (known: {})",
                    self.noise_profile,
                    NoiseParams::PROFILES.join(", ")
                ))
            })?,
        };
        noise.validate()?;
        Ok(noise)
    }

    pub fn detector(&self) -> Result<DetectorModel, CliError> {
        let model = match &self.detector_file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                let file: DetectorFile = serde_json::from_str(&text)
                    .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
                file.into_model()?
            }
            None => DetectorModel::profile(&self.detector_profile, &self.sweep, self.truncation)?,
        };
        if model.truncation() < self.truncation {
            return Err(CliError::Validation(format!(
                "detector table covers {} levels, simulation needs {}",
                model.truncation(),
                self.truncation
            )));
        }
        Ok(model)
    }

    pub fn grid(&self) -> Result<PhaseSpaceGrid, CliError> {
        Ok(PhaseSpaceGrid::from_layout(&self.grid)?)
    }

    /// Checks everything that can be checked without running a command.
    pub fn validate(&self) -> Result<(), CliError> {
        let space = self.space()?;
        space.check_amplitude(self.beta())?;
        self.coupling.validate()?;
        self.noise()?;
        self.sweep.validate()?;
        if self.detector_file.is_none() && !DetectorModel::PROFILES.contains(&self.detector_profile.as_str())
        {
            return Err(CliError::Validation(format!(
                "unknown detector profile `{}` (known: {})",
                self.detector_profile,
                DetectorModel::PROFILES.join(", ")
            )));
        }
        let grid = self.grid()?;
        for a in grid.alphas() {
            space.check_amplitude(a)?;
        }
        if self.shots == 0 {
            return Err(CliError::Validation("shots must be at least 1".into()));
        }
        if self.times.is_empty() || self.times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(CliError::Validation(
                "times must be a non-empty list of values >= 0".into(),
            ));
        }
        let d = &self.dynamics;
        if !(d.t_max > 0.0 && d.t_max.is_finite()) || d.points < 2 || d.steps_per_revival == 0 {
            return Err(CliError::Validation(
                "dynamics needs t_max > 0, points >= 2, steps_per_revival >= 1".into(),
            ));
        }
        let r = &self.reconstruction;
        if r.truncation < 2 || r.truncation > self.truncation {
            return Err(CliError::Validation(format!(
                "reconstruction.truncation must lie in [2, {}], got {}",
                self.truncation, r.truncation
            )));
        }
        PhaseSpaceGrid::from_layout(&r.wigner_grid)?;
        if self.transfer.n_max == 0 {
            return Err(CliError::Validation("transfer.n_max must be at least 1".into()));
        }
        Ok(())
    }
}
