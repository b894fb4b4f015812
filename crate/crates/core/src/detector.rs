//! Vacuum detector: counter-diabatic uniform transfer `|↓,n⟩ → |↑,n−1⟩` and shot sampling.
//!
//! The sweep is `Δ(t) = Δ_ut cos(πt/T)`, `Ω(t) = Ω_ut [sin(πt/T) + iβ]`. Each pair
//! `{|↓,n⟩, |↑,n−1⟩}` is driven by the two-level Hamiltonian
//! `H_n = ½[Δσ_z + √n Re Ω σ_x + √n Im Ω σ_y]`. After the sweep every `n ≥ 1` reads
//! bright, so a dark outcome flags the vacuum.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::fock::{DensityMatrix, Displacer, FockSpace, Space};
use crate::phase_space::{PhaseSpaceGrid, QSample, QSamples};
use crate::{Error, Result, C64};

/// Identifies the sampling scheme; recorded in every output header.
pub const RNG_ID: &str =
    "chacha20(rand_chacha 0.9) seed_from_u64, stream = point index; binomial(rand_distr 0.5)";

pub const DETECTOR_FORMAT_VERSION: u32 = 1;

/// Aggregate vacuum-detection efficiency targeted by the `paper-2016` detector profile.
pub const PAPER_EFFICIENCY: f64 = 0.985;

/// Phonon levels over which the aggregate efficiency is averaged.
pub const EFFICIENCY_LEVELS: std::ops::RangeInclusive<usize> = 1..=25;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    /// Peak Rabi rate Ω_ut (rad/s).
    pub omega_ut: f64,
    /// Counter-diabatic amplitude β relative to Ω_ut.
    pub beta_cd: f64,
    /// Detuning amplitude Δ_ut (rad/s).
    pub delta_ut: f64,
    /// Sweep duration T_ut (s).
    pub duration: f64,
    pub steps: usize,
}

impl SweepParams {
    pub fn paper_2016() -> Self {
        let omega_ut = 2.0 * PI * 22.7e3;
        Self {
            omega_ut,
            beta_cd: 0.075,
            delta_ut: 1.9 * omega_ut,
            duration: 198.2e-6,
            steps: 8000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega_ut", self.omega_ut),
            ("delta_ut", self.delta_ut),
            ("duration", self.duration),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.beta_cd >= 0.0 && self.beta_cd.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta_cd must be >= 0, got {}",
                self.beta_cd
            )));
        }
        if self.steps < 100 {
            return Err(Error::InvalidParameter(format!(
                "steps must be >= 100, got {}",
                self.steps
            )));
        }
        Ok(())
    }
}

impl Default for SweepParams {
    fn default() -> Self {
        Self::paper_2016()
    }
}

/// Sampled sweep; [`PulseSchedule::at`] evaluates the closed forms between samples.
#[derive(Clone, Debug)]
pub struct PulseSchedule {
    pub params: SweepParams,
    pub times: Vec<f64>,
    pub detuning: Vec<f64>,
    pub rabi: Vec<C64>,
}

impl PulseSchedule {
    /// `(Δ(t), Ω(t))`.
    pub fn at(&self, t: f64) -> (f64, C64) {
        let p = &self.params;
        let phase = PI * t / p.duration;
        (
            p.delta_ut * phase.cos(),
            C64::new(p.omega_ut * phase.sin(), p.omega_ut * p.beta_cd),
        )
    }
}

pub fn build_schedule(params: &SweepParams) -> Result<PulseSchedule> {
    params.validate()?;
    let n = params.steps;
    let mut schedule = PulseSchedule {
        params: *params,
        times: Vec::with_capacity(n),
        detuning: Vec::with_capacity(n),
        rabi: Vec::with_capacity(n),
    };
    for k in 0..n {
        let t = if k + 1 == n {
            params.duration
        } else {
            params.duration * k as f64 / (n - 1) as f64
        };
        let (d, o) = schedule.at(t);
        schedule.times.push(t);
        schedule.detuning.push(d);
        schedule.rabi.push(o);
    }
    // cos(π) rounds to exactly −1, sin(π) does not vanish exactly.
    if let Some(last) = schedule.rabi.last_mut() {
        last.re = 0.0;
    }
    Ok(schedule)
}

/// Final population of `|↑, n−1⟩` after the sweep starting from `|↓, n⟩`.
pub fn transfer_probability(n: usize, schedule: &PulseSchedule) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "|↓,0⟩ has no transfer partner; the vacuum stays dark".into(),
        ));
    }
    let root_n = (n as f64).sqrt();
    // State (c_up, c_down) with σ_z = diag(1, −1); dψ/dt = −iHψ.
    let deriv = |t: f64, psi: [C64; 2]| -> [C64; 2] {
        let (delta, omega) = schedule.at(t);
        let z = 0.5 * delta;
        // ½√n(Re Ω σ_x + Im Ω σ_y): off-diagonal ⟨↑|H|↓⟩ = ½√n(Re Ω − i Im Ω)
        let off = 0.5 * root_n * C64::new(omega.re, -omega.im);
        let h_up = psi[0] * z + off * psi[1];
        let h_down = off.conj() * psi[0] - psi[1] * z;
        [-C64::I * h_up, -C64::I * h_down]
    };
    let steps = schedule.params.steps;
    let h = schedule.params.duration / steps as f64;
    let mut psi = [C64::ZERO, C64::ONE];
    let add = |a: [C64; 2], b: [C64; 2], s: f64| [a[0] + b[0] * s, a[1] + b[1] * s];
    for k in 0..steps {
        let t = k as f64 * h;
        let k1 = deriv(t, psi);
        let k2 = deriv(t + 0.5 * h, add(psi, k1, 0.5 * h));
        let k3 = deriv(t + 0.5 * h, add(psi, k2, 0.5 * h));
        let k4 = deriv(t + h, add(psi, k3, h));
        for i in 0..2 {
            psi[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
        }
    }
    let norm = psi[0].norm_sqr() + psi[1].norm_sqr();
    Ok((psi[0].norm_sqr() / norm).clamp(0.0, 1.0))
}

/// Per-level transfer table and readout fidelities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    /// `p_transfer[n]` for `n = 0…N−1`; entry 0 is unused and kept at 0.
    pub p_transfer: Vec<f64>,
    /// Probability that a true `|↓⟩` reads dark.
    pub dark_fidelity: f64,
    /// Probability that a true `|↑⟩` reads bright.
    pub bright_fidelity: f64,
}

impl DetectorModel {
    pub const PROFILES: [&'static str; 2] = ["ideal", "paper-2016"];

    pub fn ideal(truncation: usize) -> Self {
        let mut p_transfer = vec![1.0; truncation];
        p_transfer[0] = 0.0;
        Self {
            p_transfer,
            dark_fidelity: 1.0,
            bright_fidelity: 1.0,
        }
    }

    pub fn from_sweep(params: &SweepParams, truncation: usize) -> Result<Self> {
        let schedule = build_schedule(params)?;
        let mut p_transfer = vec![0.0; truncation];
        for (n, p) in p_transfer.iter_mut().enumerate().skip(1) {
            *p = transfer_probability(n, &schedule)?;
        }
        Ok(Self {
            p_transfer,
            dark_fidelity: 1.0,
            bright_fidelity: 1.0,
        })
    }

    /// The simulated sweep, rescaled so its aggregate efficiency is 0.985.
    pub fn paper_2016(params: &SweepParams, truncation: usize) -> Result<Self> {
        let mut model = Self::from_sweep(params, truncation)?;
        let scale = PAPER_EFFICIENCY / model.aggregate_efficiency();
        for p in model.p_transfer.iter_mut().skip(1) {
            *p = (*p * scale).min(1.0);
        }
        Ok(model)
    }

    pub fn profile(name: &str, params: &SweepParams, truncation: usize) -> Result<Self> {
        match name {
            "ideal" => Ok(Self::ideal(truncation)),
            "paper-2016" => Self::paper_2016(params, truncation),
            other => Err(Error::InvalidParameter(format!(
                "unknown detector profile `{other}` (known: {})",
                Self::PROFILES.join(", ")
            ))),
        }
    }

    pub fn truncation(&self) -> usize {
        self.p_transfer.len()
    }

    /// Mean transfer probability over `n = 1…25` (or as many levels as exist).
    pub fn aggregate_efficiency(&self) -> f64 {
        let levels: Vec<f64> = EFFICIENCY_LEVELS
            .filter_map(|n| self.p_transfer.get(n).copied())
            .collect();
        levels.iter().sum::<f64>() / levels.len() as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_transfer.len() < 2 {
            return Err(Error::InvalidParameter("detector table needs >= 2 levels".into()));
        }
        let all = self
            .p_transfer
            .iter()
            .chain([&self.dark_fidelity, &self.bright_fidelity]);
        for &p in all {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Dark-outcome probability given phonon populations `ρ_nn` of the state at readout.
    pub fn dark_probability(&self, populations: &[f64]) -> Result<f64> {
        if populations.len() > self.p_transfer.len() {
            return Err(Error::DimensionMismatch {
                left: populations.len(),
                right: self.p_transfer.len(),
            });
        }
        let dark = self.dark_fidelity;
        let false_dark = 1.0 - self.bright_fidelity;
        let mut p = populations.first().copied().unwrap_or(0.0) * dark;
        for (n, &pop) in populations.iter().enumerate().skip(1) {
            let moved = self.p_transfer[n];
            p += pop * ((1.0 - moved) * dark + moved * false_dark);
        }
        Ok(p.clamp(0.0, 1.0))
    }
}

/// On-disk detector profile.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetectorFile {
    pub version: u32,
    #[serde(flatten)]
    pub model: DetectorModel,
}

impl DetectorFile {
    pub fn into_model(self) -> Result<DetectorModel> {
        if self.version != DETECTOR_FORMAT_VERSION {
            return Err(Error::InvalidParameter(format!(
                "detector file version {} unsupported (expected {DETECTOR_FORMAT_VERSION})",
                self.version
            )));
        }
        self.model.validate()?;
        Ok(self.model)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VacuumCounts {
    pub dark_counts: u64,
    pub shots: u64,
}

fn populations(rho: &DensityMatrix) -> Vec<f64> {
    (0..rho.dim()).map(|n| rho.matrix()[(n, n)].re.max(0.0)).collect()
}

fn draw(p_dark: f64, shots: u64, rng: &mut impl Rng) -> Result<u64> {
    let dist = Binomial::new(shots, p_dark.clamp(0.0, 1.0))
        .map_err(|e| Error::InvalidParameter(format!("binomial: {e}")))?;
    Ok(dist.sample(rng))
}

fn point_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Binary vacuum readout of `ρ`, repeated `shots` times.
pub fn measure_vacuum(
    rho: &DensityMatrix,
    detector: &DetectorModel,
    shots: u64,
    seed: u64,
) -> Result<VacuumCounts> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be >= 1".into()));
    }
    if rho.space() != Space::Phonon {
        return Err(Error::SpaceMismatch {
            expected: "phonon",
            found: "joint",
        });
    }
    let p = detector.dark_probability(&populations(rho))?;
    let dark_counts = draw(p, shots, &mut point_rng(seed, 0))?;
    Ok(VacuumCounts { dark_counts, shots })
}

/// Dark probability at every grid point, after applying `D†(α)` to ρ.
pub fn dark_probabilities(
    rho: &DensityMatrix,
    grid: &PhaseSpaceGrid,
    detector: &DetectorModel,
) -> Result<Vec<f64>> {
    if rho.space() != Space::Phonon {
        return Err(Error::SpaceMismatch {
            expected: "phonon",
            found: "joint",
        });
    }
    let displacer = Displacer::new(FockSpace::new(rho.dim())?);
    grid.alphas()
        .map(|alpha| {
            let d = displacer.displacement(alpha)?;
            let rd = rho.matrix() * &d;
            let pops: Vec<f64> = (0..rho.dim())
                .map(|n| d.column(n).dotc(&rd.column(n)).re.max(0.0))
                .collect();
            detector.dark_probability(&pops)
        })
        .collect()
}

/// Emulates the displaced-vacuum scan: `shots_per_point × multiplicity` readouts per point.
///
/// Point `i` draws from its own ChaCha20 stream `i`, so results do not depend on
/// evaluation order.
pub fn simulate_q_experiment(
    rho: &DensityMatrix,
    grid: &PhaseSpaceGrid,
    detector: &DetectorModel,
    shots_per_point: u64,
    seed: u64,
) -> Result<QSamples> {
    if shots_per_point == 0 {
        return Err(Error::InvalidParameter("shots must be >= 1".into()));
    }
    let probs = dark_probabilities(rho, grid, detector)?;
    let samples = grid
        .points()
        .iter()
        .zip(probs)
        .enumerate()
        .map(|(i, (point, p))| {
            let shots = shots_per_point * point.multiplicity as u64;
            let dark = draw(p, shots, &mut point_rng(seed, i as u64))?;
            Ok(QSample::counted(point.alpha, dark, shots))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QSamples {
        layout: grid.layout().clone(),
        truncation: rho.dim(),
        samples,
    })
}
