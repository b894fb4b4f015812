//! Density-matrix recovery from Q samples.
//!
//! The objective is the weighted least-squares misfit
//! `L(ρ) = Σ_k w_k (⟨α_k|ρ|α_k⟩/π − q_k)²` over density matrices of dimension
//! `N_rec`. It is minimised by accelerated projected gradient descent with a
//! backtracking step and a function-value restart, so accepted iterates never
//! increase `L` and every iterate is the Frobenius projection of a Hermitian matrix
//! onto `{ρ ⪰ 0, Tr ρ = 1}`.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::fock::{coherent_amplitudes, fidelity, hermitian_eigen, spectral_assemble, DensityMatrix, Space};
use crate::phase_space::{wigner_grid, PhaseSpaceGrid, QSamples, WignerGrid};
use crate::{CMatrix, Error, Result, C64};

pub const DEFAULT_RECONSTRUCTION_DIM: usize = 12;

/// `min W` below this marks a state as nonclassical.
pub const NEGATIVITY_THRESHOLD: f64 = -0.01 * 2.0 / PI;

#[derive(Clone, Debug)]
pub enum InitialGuess {
    MaximallyMixed,
    Supplied(DensityMatrix),
}

#[derive(Clone, Debug)]
pub struct ReconstructionConfig {
    pub truncation: usize,
    /// Only samples with `|α| ≤ max_radius` enter the fit.
    pub max_radius: f64,
    pub max_iterations: usize,
    /// Stop when `(L_prev − L) ≤ convergence_tol · L_prev`.
    pub convergence_tol: f64,
    pub initial_guess: InitialGuess,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self {
            truncation: DEFAULT_RECONSTRUCTION_DIM,
            max_radius: 3.0,
            max_iterations: 5000,
            convergence_tol: 1e-8,
            initial_guess: InitialGuess::MaximallyMixed,
        }
    }
}

impl ReconstructionConfig {
    pub fn with_truncation(truncation: usize) -> Self {
        Self {
            truncation,
            ..Self::default()
        }
    }

    /// Checks the config against the truncation the samples came from (0 = unknown).
    pub fn validate(&self, source_truncation: usize) -> Result<()> {
        if self.truncation < 2 {
            return Err(Error::InvalidParameter(format!(
                "reconstruction truncation must be at least 2, got {}",
                self.truncation
            )));
        }
        if source_truncation != 0 && self.truncation > source_truncation {
            return Err(Error::InvalidParameter(format!(
                "reconstruction truncation {} exceeds sample truncation {source_truncation}",
                self.truncation
            )));
        }
        if self.max_radius.is_nan() || self.max_radius <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "max_radius must be positive, got {}",
                self.max_radius
            )));
        }
        if self.convergence_tol.is_nan() || self.convergence_tol <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "convergence_tol must be positive, got {}",
                self.convergence_tol
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be positive".into()));
        }
        if let InitialGuess::Supplied(rho) = &self.initial_guess {
            if rho.space() != Space::Phonon {
                return Err(Error::SpaceMismatch {
                    expected: "phonon",
                    found: rho.space().name(),
                });
            }
            if rho.dim() != self.truncation {
                return Err(Error::DimensionMismatch {
                    left: self.truncation,
                    right: rho.dim(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReconstructionWarning {
    /// Fewer than `N_rec²` points survived the radius filter.
    InsufficientData {
        used: usize,
        required: usize,
    },
    NotConverged {
        iterations: usize,
    },
}

/// Per-run solver health checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `L` at the initial guess and after every accepted iteration.
    pub objective_history: Vec<f64>,
    /// Number of momentum restarts.
    pub restarts: usize,
    /// Largest `|Tr ρ − 1|` over all iterates.
    pub max_trace_defect: f64,
    /// Largest `‖ρ − ρ†‖_max` over all iterates.
    pub max_hermiticity_defect: f64,
    /// Smallest projected eigenvalue over all iterates.
    pub min_eigenvalue: f64,
}

impl Diagnostics {
    pub fn is_monotone(&self) -> bool {
        self.objective_history.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn is_feasible(&self) -> bool {
        self.max_trace_defect < 1e-9 && self.max_hermiticity_defect < 1e-9 && self.min_eigenvalue >= 0.0
    }
}

#[derive(Clone, Debug)]
pub struct ReconstructionResult {
    pub rho: DensityMatrix,
    /// RMS of model minus estimate over the used points.
    pub residual: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub purity: f64,
    pub fidelity_vs_reference: Option<f64>,
    pub used_points: usize,
    pub warnings: Vec<ReconstructionWarning>,
    pub diagnostics: Diagnostics,
}

impl ReconstructionResult {
    pub fn with_reference(mut self, reference: &DensityMatrix) -> Result<Self> {
        self.fidelity_vs_reference = Some(fidelity_across(&self.rho, reference)?);
        Ok(self)
    }
}

/// Fidelity between phonon states of different truncations (the smaller is zero-padded).
pub fn fidelity_across(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    let dim = a.dim().max(b.dim());
    fidelity(&a.embed(dim)?, &b.embed(dim)?)
}

/// Euclidean projection of `v` onto the probability simplex.
pub fn simplex_projection(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (i + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Nearest density matrix in Frobenius norm to the Hermitian part of `h`.
pub fn spectrum_projection(h: &CMatrix) -> DensityMatrix {
    project(h).0
}

fn project(h: &CMatrix) -> (DensityMatrix, f64) {
    let sym = (h + h.adjoint()) * C64::from(0.5);
    let (vals, vecs) = hermitian_eigen(&sym);
    let spectrum = simplex_projection(vals.as_slice());
    let min = spectrum.iter().copied().fold(f64::INFINITY, f64::min);
    let m = spectral_assemble(&vecs, spectrum.iter().map(|&p| C64::from(p)));
    let m = (&m + m.adjoint()) * C64::from(0.5);
    (DensityMatrix::from_trusted(m, Space::Phonon), min)
}

/// Linear forward model `ρ ↦ (⟨α_k|ρ|α_k⟩/π)_k` restricted to the used samples.
struct Forward {
    /// Column `k` is the truncated coherent vector at `α_k`.
    coherent: CMatrix,
    weights: DVector<f64>,
    targets: DVector<f64>,
}

impl Forward {
    fn new(samples: &QSamples, dim: usize, max_radius: f64) -> Self {
        let used: Vec<_> = samples
            .samples
            .iter()
            .filter(|s| s.alpha.norm() <= max_radius + 1e-12)
            .collect();
        let mut coherent = CMatrix::zeros(dim, used.len());
        for (k, s) in used.iter().enumerate() {
            coherent.set_column(k, &coherent_amplitudes(s.alpha, dim));
        }
        Self {
            coherent,
            weights: DVector::from_iterator(used.len(), used.iter().map(|s| s.weight())),
            targets: DVector::from_iterator(used.len(), used.iter().map(|s| s.q_estimate)),
        }
    }

    fn len(&self) -> usize {
        self.targets.len()
    }

    fn model(&self, rho: &CMatrix) -> DVector<f64> {
        let rc = rho * &self.coherent;
        DVector::from_iterator(
            self.len(),
            (0..self.len()).map(|k| self.coherent.column(k).dotc(&rc.column(k)).re / PI),
        )
    }

    fn objective(&self, rho: &CMatrix) -> f64 {
        let r = self.model(rho) - &self.targets;
        r.iter().zip(self.weights.iter()).map(|(r, w)| w * r * r).sum()
    }

    /// `Σ_k d_k |α_k⟩⟨α_k|`.
    fn adjoint(&self, d: &DVector<f64>) -> CMatrix {
        let mut scaled = self.coherent.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= C64::from(d[k]);
        }
        &scaled * self.coherent.adjoint()
    }

    fn gradient(&self, rho: &CMatrix) -> (f64, CMatrix) {
        let r = self.model(rho) - &self.targets;
        let value = r.iter().zip(self.weights.iter()).map(|(r, w)| w * r * r).sum();
        let d = r.component_mul(&self.weights) * (2.0 / PI);
        (value, self.adjoint(&d))
    }

    /// Power-iteration estimate of the gradient's Lipschitz constant.
    fn lipschitz(&self, dim: usize) -> f64 {
        let mut v = CMatrix::from_fn(dim, dim, |i, j| {
            C64::new(1.0 + ((i * 7 + j * 3) % 5) as f64, 0.0) / (1.0 + (i + j) as f64)
        });
        v = (&v + v.adjoint()) * C64::from(0.5);
        let mut estimate = 0.0;
        for _ in 0..30 {
            let norm = v.norm();
            if norm == 0.0 {
                break;
            }
            v /= C64::from(norm);
            let d = self.model(&v).component_mul(&self.weights) * (2.0 / PI);
            v = self.adjoint(&d);
            estimate = v.norm();
        }
        estimate
    }
}

fn real_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

struct Tracker {
    diagnostics: Diagnostics,
}

impl Tracker {
    fn observe(&mut self, rho: &DensityMatrix, min_eigenvalue: f64) {
        let m = rho.matrix();
        let d = &mut self.diagnostics;
        d.max_trace_defect = d.max_trace_defect.max((m.trace().re - 1.0).abs());
        d.max_hermiticity_defect = d
            .max_hermiticity_defect
            .max((m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max));
        d.min_eigenvalue = d.min_eigenvalue.min(min_eigenvalue);
    }
}

/// Weighted least-squares reconstruction of the phonon density matrix.
pub fn reconstruct_density(
    samples: &QSamples,
    config: &ReconstructionConfig,
) -> Result<ReconstructionResult> {
    config.validate(samples.truncation)?;
    let dim = config.truncation;
    let forward = Forward::new(samples, dim, config.max_radius);
    if forward.len() == 0 {
        return Err(Error::InvalidParameter(format!(
            "no samples within max_radius {}",
            config.max_radius
        )));
    }
    let mut warnings = Vec::new();
    let required = dim * dim;
    if forward.len() < required {
        log::warn!(
            "only {} sample points for {required} real parameters",
            forward.len()
        );
        warnings.push(ReconstructionWarning::InsufficientData {
            used: forward.len(),
            required,
        });
    }

    let start = match &config.initial_guess {
        InitialGuess::MaximallyMixed => DensityMatrix::maximally_mixed(dim),
        InitialGuess::Supplied(rho) => rho.clone(),
    };
    let (mut x, min0) = project(start.matrix());
    let mut tracker = Tracker {
        diagnostics: Diagnostics {
            objective_history: Vec::new(),
            restarts: 0,
            max_trace_defect: 0.0,
            max_hermiticity_defect: 0.0,
            min_eigenvalue: f64::INFINITY,
        },
    };
    tracker.observe(&x, min0);
    let mut fx = forward.objective(x.matrix());
    tracker.diagnostics.objective_history.push(fx);

    let lipschitz = forward.lipschitz(dim);
    let mut step = if lipschitz > 0.0 { 1.0 / lipschitz } else { 1.0 };
    let mut previous = x.matrix().clone();
    let mut momentum = 1.0_f64;
    let mut converged = false;
    let mut iterations = 0;

    // One backtracked projected-gradient step from `y`.
    let pg_step = |y: &CMatrix, step: &mut f64, tracker: &mut Tracker| -> (DensityMatrix, f64) {
        let (fy, grad) = forward.gradient(y);
        loop {
            let (z, min) = project(&(y - &grad * C64::from(*step)));
            tracker.observe(&z, min);
            let fz = forward.objective(z.matrix());
            let diff = z.matrix() - y;
            let bound = fy + real_inner(&grad, &diff) + diff.norm_squared() / (2.0 * *step);
            if fz <= bound + 1e-15 * fy.abs().max(1e-300) || *step < 1e-300 {
                return (z, fz);
            }
            *step *= 0.5;
        }
    };

    while iterations < config.max_iterations {
        iterations += 1;
        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / next_momentum;
        let current = x.matrix().clone();
        let y = &current + (&current - &previous) * C64::from(beta);
        let (mut z, mut fz) = pg_step(&y, &mut step, &mut tracker);
        if fz > fx {
            tracker.diagnostics.restarts += 1;
            momentum = 1.0;
            let (z2, fz2) = pg_step(&current, &mut step, &mut tracker);
            z = z2;
            fz = fz2;
        } else {
            momentum = next_momentum;
        }
        if fz > fx {
            // No descent even from the current point: stationary to rounding.
            converged = true;
            break;
        }
        let improvement = fx - fz;
        previous = current;
        x = z;
        let stalled = improvement <= config.convergence_tol * fx;
        fx = fz;
        tracker.diagnostics.objective_history.push(fx);
        if stalled || fx == 0.0 {
            converged = true;
            break;
        }
        step *= 1.1;
    }
    if !converged {
        log::warn!(
            "reconstruction stopped at max_iterations = {}",
            config.max_iterations
        );
        warnings.push(ReconstructionWarning::NotConverged { iterations });
    }

    let model = forward.model(x.matrix());
    let residual = ((&model - &forward.targets).norm_squared() / forward.len() as f64).sqrt();
    Ok(ReconstructionResult {
        purity: x.purity(),
        rho: x,
        residual,
        objective: fx,
        iterations,
        converged,
        fidelity_vs_reference: None,
        used_points: forward.len(),
        warnings,
        diagnostics: tracker.diagnostics,
    })
}

#[derive(Clone, Debug)]
pub struct ReconstructionReport {
    pub purity: f64,
    pub fidelity: Option<f64>,
    pub wigner: WignerGrid,
    pub wigner_min: f64,
    /// `min W < NEGATIVITY_THRESHOLD`.
    pub negative: bool,
}

pub fn report(
    result: &ReconstructionResult,
    reference: Option<&DensityMatrix>,
    grid: &PhaseSpaceGrid,
) -> Result<ReconstructionReport> {
    let fidelity = match reference {
        Some(r) => Some(fidelity_across(&result.rho, r)?),
        None => result.fidelity_vs_reference,
    };
    let wigner = wigner_grid(&result.rho, grid)?;
    let wigner_min = wigner.min();
    Ok(ReconstructionReport {
        purity: result.purity,
        fidelity,
        negative: wigner_min < NEGATIVITY_THRESHOLD,
        wigner_min,
        wigner,
    })
}
