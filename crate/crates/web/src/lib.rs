//! Browser bindings: phase-space snapshots of the sideband evolution and the transfer curve.

use vacuumq::detector::{build_schedule, transfer_probability, SweepParams};
use vacuumq::dynamics::{revival_time, CouplingParams, JointState, UnitaryEvolution};
use vacuumq::fock::{DensityMatrix, FockSpace};
use vacuumq::phase_space::{q_function, wigner_function};
use vacuumq::C64;
use wasm_bindgen::prelude::*;

fn js(e: vacuumq::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Evolution of `|↓⟩|β⟩`, diagonalised once so that time scrubbing is cheap.
#[wasm_bindgen]
pub struct Explorer {
    evolution: UnitaryEvolution,
    initial: JointState,
    t_rev: f64,
    phonon: DensityMatrix,
    up: f64,
}

#[wasm_bindgen]
impl Explorer {
    #[wasm_bindgen(constructor)]
    pub fn new(beta_re: f64, beta_im: f64, truncation: usize) -> Result<Explorer, JsError> {
        Self::build(C64::new(beta_re, beta_im), truncation).map_err(js)
    }

    /// Revival time in microseconds.
    pub fn t_rev_us(&self) -> f64 {
        self.t_rev * 1e6
    }

    /// Moves to `t = fraction · t_rev`.
    pub fn set_time(&mut self, fraction: f64) -> Result<(), JsError> {
        self.seek(fraction).map_err(js)
    }

    pub fn up_population(&self) -> f64 {
        self.up
    }

    pub fn purity(&self) -> f64 {
        self.phonon.purity()
    }

    /// Q on a `size × size` square of half-width `extent`, rows from `Im α = −extent` up.
    pub fn q_grid(&self, size: usize, extent: f64) -> Result<Vec<f64>, JsError> {
        self.sample(size, extent, q_function).map_err(js)
    }

    pub fn wigner_grid(&self, size: usize, extent: f64) -> Result<Vec<f64>, JsError> {
        self.sample(size, extent, wigner_function).map_err(js)
    }
}

impl Explorer {
    fn build(beta: C64, truncation: usize) -> vacuumq::Result<Self> {
        let space = FockSpace::new(truncation)?;
        let params = CouplingParams::default();
        let initial = JointState::down_coherent(beta, space)?;
        let mut explorer = Self {
            evolution: UnitaryEvolution::new(&params, space),
            t_rev: revival_time(beta, &params)?,
            phonon: initial.phonon_state(),
            up: 0.0,
            initial,
        };
        explorer.seek(0.0)?;
        Ok(explorer)
    }

    fn seek(&mut self, fraction: f64) -> vacuumq::Result<()> {
        let state = self.evolution.evolve(&self.initial, fraction * self.t_rev)?;
        self.phonon = state.phonon_state();
        self.up = state.up_population();
        Ok(())
    }

    fn sample(
        &self,
        size: usize,
        extent: f64,
        f: fn(&DensityMatrix, C64) -> vacuumq::Result<f64>,
    ) -> vacuumq::Result<Vec<f64>> {
        if size < 2 || extent.is_nan() || extent <= 0.0 {
            return Err(vacuumq::Error::InvalidParameter(
                "grid needs size >= 2 and extent > 0".into(),
            ));
        }
        let step = 2.0 * extent / (size - 1) as f64;
        let mut out = Vec::with_capacity(size * size);
        for iy in 0..size {
            for ix in 0..size {
                let alpha = C64::new(-extent + ix as f64 * step, -extent + iy as f64 * step);
                out.push(f(&self.phonon, alpha)?);
            }
        }
        Ok(out)
    }
}

/// `P_transfer(n)` for `n = 1..=n_max` under the default sweep with the given CD amplitude and duration.
#[wasm_bindgen]
pub fn transfer_curve(beta_cd: f64, duration_us: f64, n_max: usize) -> Result<Vec<f64>, JsError> {
    curve(beta_cd, duration_us, n_max).map_err(js)
}

fn curve(beta_cd: f64, duration_us: f64, n_max: usize) -> vacuumq::Result<Vec<f64>> {
    let params = SweepParams {
        beta_cd,
        duration: duration_us * 1e-6,
        ..SweepParams::paper_2016()
    };
    let schedule = build_schedule(&params)?;
    (1..=n_max).map(|n| transfer_probability(n, &schedule)).collect()
}
