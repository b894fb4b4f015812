//! Qubit-oscillator dynamics under the (anti-)Jaynes-Cummings sideband coupling.
//!
//! ```text
//! H_JC(φ)  = (ηΩ/2)(a σ₊ e^{iφ} + a† σ₋ e^{−iφ})
//! H_aJC(φ) = (ηΩ/2)(a† σ₊ e^{iφ} + a σ₋ e^{−iφ})
//! ```
//!
//! with ħ = 1, `σ₊ = |↑⟩⟨↓|`, energies in rad/s.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::fock::{
    coherent_state, fidelity, hermitian_function, joint_product, ladder_operators, poisson_weights,
    DensityMatrix, FockSpace, Qubit, Space, SpectralPropagator,
};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Sideband Rabi rate ηΩ recovered from |β| = 1.62 and t_rev = 108.8 μs.
pub const DEFAULT_ETA_OMEGA: f64 = 2.0 * PI * 29.78e3;

/// Trap frequency ω_X of the ion (setup context only).
pub const TRAP_FREQUENCY: f64 = 2.0 * PI * 2.8e6;

/// Qubit hyperfine splitting ω_HF (setup context only).
pub const HYPERFINE_FREQUENCY: f64 = 2.0 * PI * 12.6428e9;

/// Default Lindblad step as a fraction of the revival time.
pub const DEFAULT_STEPS_PER_REVIVAL: usize = 4096;

const TRACE_DEFECT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingKind {
    Jc,
    AntiJc,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    /// Sideband Rabi rate ηΩ in rad/s.
    pub eta_omega: f64,
    /// Raman phase φ in radians.
    pub phi: f64,
    pub kind: CouplingKind,
}

impl CouplingParams {
    pub fn new(eta_omega: f64, phi: f64, kind: CouplingKind) -> Result<Self> {
        let params = Self { eta_omega, phi, kind };
        params.validate()?;
        Ok(params)
    }

    pub fn anti_jc(eta_omega: f64) -> Self {
        Self {
            eta_omega,
            phi: 0.0,
            kind: CouplingKind::AntiJc,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta_omega > 0.0 && self.eta_omega.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eta_omega must be positive, got {}",
                self.eta_omega
            )));
        }
        if !self.phi.is_finite() {
            return Err(Error::InvalidParameter("phi must be finite".into()));
        }
        Ok(())
    }

    pub fn with_phase(self, phi: f64) -> Self {
        Self { phi, ..self }
    }

    /// Sideband coupling of `|↓, n⟩` to its partner, `√(n+1)ηΩ` (anti-JC) or `√n ηΩ` (JC).
    pub fn sideband_rate(&self, n: usize) -> f64 {
        let k = match self.kind {
            CouplingKind::AntiJc => n + 1,
            CouplingKind::Jc => n,
        };
        (k as f64).sqrt() * self.eta_omega
    }
}

impl Default for CouplingParams {
    fn default() -> Self {
        Self::anti_jc(DEFAULT_ETA_OMEGA)
    }
}

/// Nonzero entries `(row, col, value)` of the Hamiltonian in the joint basis.
fn hamiltonian_entries(params: &CouplingParams, space: FockSpace) -> Vec<(usize, usize, C64)> {
    let n_max = space.dim();
    let g = 0.5 * params.eta_omega;
    let phase = C64::from_polar(1.0, params.phi);
    let mut entries = Vec::new();
    for n in 0..n_max {
        // σ₊ raises the qubit; the phonon partner depends on the sideband.
        let partner = match params.kind {
            CouplingKind::AntiJc => (n + 1 < n_max).then_some(n + 1),
            CouplingKind::Jc => n.checked_sub(1),
        };
        let Some(m) = partner else { continue };
        let amp = g * (n.max(m) as f64).sqrt() * phase;
        let up = space.joint_index(Qubit::Up, m);
        let down = space.joint_index(Qubit::Down, n);
        entries.push((up, down, amp));
        entries.push((down, up, amp.conj()));
    }
    entries
}

pub fn hamiltonian(params: &CouplingParams, space: FockSpace) -> CMatrix {
    let d = space.joint_dim();
    let mut h = CMatrix::zeros(d, d);
    for (r, c, v) in hamiltonian_entries(params, space) {
        h[(r, c)] += v;
    }
    h
}

/// Normalised qubit ⊗ phonon pure state.
#[derive(Clone, Debug)]
pub struct JointState {
    space: FockSpace,
    amplitudes: CVector,
}

impl JointState {
    pub fn new(space: FockSpace, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != space.joint_dim() {
            return Err(Error::DimensionMismatch {
                left: amplitudes.len(),
                right: space.joint_dim(),
            });
        }
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidParameter("state has zero norm".into()));
        }
        Ok(Self {
            space,
            amplitudes: amplitudes.unscale(norm),
        })
    }

    pub fn product(qubit: [C64; 2], phonon: &CVector, space: FockSpace) -> Result<Self> {
        if phonon.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                left: phonon.len(),
                right: space.dim(),
            });
        }
        Self::new(space, joint_product(&qubit, phonon))
    }

    /// `|↓⟩ ⊗ |β⟩`.
    pub fn down_coherent(beta: C64, space: FockSpace) -> Result<Self> {
        let psi = coherent_state(beta, space)?.amplitudes;
        Self::product([C64::ONE, C64::ZERO], &psi, space)
    }

    pub fn basis(space: FockSpace, qubit: Qubit, n: usize) -> Result<Self> {
        if n >= space.dim() {
            return Err(Error::Truncation(format!("level {n} outside truncation")));
        }
        let mut v = CVector::zeros(space.joint_dim());
        v[space.joint_index(qubit, n)] = C64::ONE;
        Self::new(space, v)
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn up_population(&self) -> f64 {
        let n = self.space.dim();
        self.amplitudes.rows(n, n).norm_squared()
    }

    pub fn density(&self) -> DensityMatrix {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix::from_trusted(m, Space::Joint)
    }

    pub fn phonon_state(&self) -> DensityMatrix {
        let n = self.space.dim();
        let down = self.amplitudes.rows(0, n);
        let up = self.amplitudes.rows(n, n);
        let m = down * down.adjoint() + up * up.adjoint();
        DensityMatrix::from_trusted(m, Space::Phonon)
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap(&self, other: &JointState) -> f64 {
        self.amplitudes.dotc(&other.amplitudes).norm_sqr()
    }

    pub fn expectation(&self, op: &CMatrix) -> C64 {
        self.amplitudes.dotc(&(op * &self.amplitudes))
    }
}

/// Unitary evolution under one fixed coupling, diagonalised once.
pub struct UnitaryEvolution {
    space: FockSpace,
    propagator: SpectralPropagator,
}

impl UnitaryEvolution {
    pub fn new(params: &CouplingParams, space: FockSpace) -> Self {
        Self {
            space,
            propagator: SpectralPropagator::new(&hamiltonian(params, space)),
        }
    }

    pub fn unitary(&self, t: f64) -> CMatrix {
        self.propagator.unitary(t)
    }

    pub fn evolve(&self, state: &JointState, t: f64) -> Result<JointState> {
        if state.space != self.space {
            return Err(Error::DimensionMismatch {
                left: state.space.dim(),
                right: self.space.dim(),
            });
        }
        if t.is_nan() || t < 0.0 {
            return Err(Error::InvalidParameter(format!("evolution time {t} < 0")));
        }
        Ok(JointState {
            space: self.space,
            amplitudes: self.propagator.apply(&state.amplitudes, t),
        })
    }
}

/// `exp(−iHt)|ψ⟩`.
pub fn evolve_unitary(state: &JointState, params: &CouplingParams, t: f64) -> Result<JointState> {
    UnitaryEvolution::new(params, state.space).evolve(state, t)
}

/// Decoherence channels for the master equation.
///
/// Jump operators: `√heating·a†`, `√cooling·a`, `√(dephasing/2)·σ_z` (so qubit
/// coherences decay as `e^{−dephasing·t}`). `empirical_gamma` is the envelope decay
/// used by the closed-form Rabi signal only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub heating_rate: f64,
    pub cooling_rate: f64,
    pub qubit_dephasing_rate: f64,
    pub empirical_gamma: f64,
}

impl NoiseParams {
    pub const PROFILES: [&'static str; 2] = ["noiseless", "paper-2016"];

    pub fn noiseless() -> Self {
        Self {
            heating_rate: 0.0,
            cooling_rate: 0.0,
            qubit_dephasing_rate: 0.0,
            empirical_gamma: 0.0,
        }
    }

    /// Calibrated so the echo of `|↓⟩|1.62⟩` at `t_rev/2` returns with fidelity ≈ 0.914.
    pub fn paper_2016() -> Self {
        Self {
            heating_rate: 515.0,
            cooling_rate: 0.0,
            qubit_dephasing_rate: 0.0,
            empirical_gamma: 2110.0,
        }
    }

    pub fn profile(name: &str) -> Option<Self> {
        match name {
            "noiseless" => Some(Self::noiseless()),
            "paper-2016" => Some(Self::paper_2016()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("heating_rate", self.heating_rate),
            ("cooling_rate", self.cooling_rate),
            ("qubit_dephasing_rate", self.qubit_dephasing_rate),
            ("empirical_gamma", self.empirical_gamma),
        ];
        for (name, r) in rates {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {r}")));
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.heating_rate == 0.0 && self.cooling_rate == 0.0 && self.qubit_dephasing_rate == 0.0
    }
}

/// COO sparse operator; each physical operator here has O(dim) nonzeros.
#[derive(Clone, Debug, Default)]
struct Sparse {
    entries: Vec<(usize, usize, C64)>,
}

impl Sparse {
    fn scaled(entries: impl IntoIterator<Item = (usize, usize, C64)>, scale: f64) -> Self {
        Self {
            entries: entries
                .into_iter()
                .filter(|e| e.2 != C64::ZERO)
                .map(|(r, c, v)| (r, c, v * scale))
                .collect(),
        }
    }

    /// `out += coeff · S ρ`.
    fn left_mul_add(&self, rho: &CMatrix, coeff: C64, out: &mut CMatrix) {
        for j in 0..rho.ncols() {
            let src = rho.column(j);
            let mut dst = out.column_mut(j);
            for &(r, c, v) in &self.entries {
                dst[r] += coeff * v * src[c];
            }
        }
    }

    /// `out += coeff · ρ S†`.
    fn right_adj_mul_add(&self, rho: &CMatrix, coeff: C64, out: &mut CMatrix) {
        // (ρ S†)[:, r] = Σ_c ρ[:, c] conj(S[r, c])
        for &(r, c, v) in &self.entries {
            let w = coeff * v.conj();
            let (src, mut dst) = (rho.column(c), out.column_mut(r));
            for i in 0..src.len() {
                dst[i] += w * src[i];
            }
        }
    }
}

/// Right-hand side of the Lindblad master equation, `dρ/dt = L(ρ)`.
struct Liouvillian {
    /// `H_eff = H − (i/2) Σ L†L`.
    effective: Sparse,
    jumps: Vec<Sparse>,
    dim: usize,
}

impl Liouvillian {
    fn new(params: &CouplingParams, noise: &NoiseParams, space: FockSpace) -> Self {
        let n_max = space.dim();
        let dim = space.joint_dim();
        let mut effective = hamiltonian_entries(params, space);
        let mut jumps = Vec::new();
        let mut decay = vec![0.0; dim];

        let phonon_op = |shift_up: bool| {
            let mut e = Vec::new();
            for q in [Qubit::Down, Qubit::Up] {
                for n in 0..n_max {
                    // a†|n⟩ = √(n+1)|n+1⟩, a|n⟩ = √n|n−1⟩
                    let target = if shift_up { n + 1 } else { n.wrapping_sub(1) };
                    if target >= n_max {
                        continue;
                    }
                    let amp = (n.max(target) as f64).sqrt();
                    e.push((
                        space.joint_index(q, target),
                        space.joint_index(q, n),
                        C64::from(amp),
                    ));
                }
            }
            e
        };

        if noise.heating_rate > 0.0 {
            let op = Sparse::scaled(phonon_op(true), noise.heating_rate.sqrt());
            jumps.push(op);
        }
        if noise.cooling_rate > 0.0 {
            let op = Sparse::scaled(phonon_op(false), noise.cooling_rate.sqrt());
            jumps.push(op);
        }
        if noise.qubit_dephasing_rate > 0.0 {
            let sz = (0..dim).map(|i| {
                let s = if i < n_max { -1.0 } else { 1.0 };
                (i, i, C64::from(s))
            });
            jumps.push(Sparse::scaled(sz, (0.5 * noise.qubit_dephasing_rate).sqrt()));
        }
        // Every jump operator here maps basis states to basis states, so L†L is diagonal.
        for op in &jumps {
            for &(_, c, v) in &op.entries {
                decay[c] += v.norm_sqr();
            }
        }
        for (i, &g) in decay.iter().enumerate() {
            if g != 0.0 {
                effective.push((i, i, C64::new(0.0, -0.5 * g)));
            }
        }
        Self {
            effective: Sparse { entries: effective },
            jumps,
            dim,
        }
    }

    fn apply(&self, rho: &CMatrix, out: &mut CMatrix, scratch: &mut CMatrix) {
        out.fill(C64::ZERO);
        // −i H_eff ρ + i ρ H_eff†
        self.effective.left_mul_add(rho, -C64::I, out);
        self.effective.right_adj_mul_add(rho, C64::I, out);
        for op in &self.jumps {
            scratch.fill(C64::ZERO);
            op.left_mul_add(rho, C64::ONE, scratch);
            op.right_adj_mul_add(scratch, C64::ONE, out);
        }
    }
}

/// Fixed-step RK4 integrator for the master equation.
pub struct LindbladIntegrator {
    liouvillian: Liouvillian,
    space: FockSpace,
    /// Largest trace defect seen before renormalisation.
    pub max_trace_defect: f64,
    steps_taken: usize,
}

impl LindbladIntegrator {
    pub fn new(params: &CouplingParams, noise: &NoiseParams, space: FockSpace) -> Result<Self> {
        params.validate()?;
        noise.validate()?;
        Ok(Self {
            liouvillian: Liouvillian::new(params, noise, space),
            space,
            max_trace_defect: 0.0,
            steps_taken: 0,
        })
    }

    fn check(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.space() != Space::Joint {
            return Err(Error::SpaceMismatch {
                expected: "joint",
                found: "phonon",
            });
        }
        if rho.dim() != self.liouvillian.dim {
            return Err(Error::DimensionMismatch {
                left: rho.dim(),
                right: self.space.joint_dim(),
            });
        }
        Ok(())
    }

    /// Integrates for `t` using `ceil(t/dt)` equal steps.
    pub fn evolve(&mut self, rho: &DensityMatrix, t: f64, dt: f64) -> Result<DensityMatrix> {
        self.check(rho)?;
        if dt.is_nan() || dt <= 0.0 || t.is_nan() || t < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "need dt > 0 and t >= 0, got dt = {dt}, t = {t}"
            )));
        }
        if t == 0.0 {
            return Ok(rho.clone());
        }
        let steps = (t / dt - 1e-9).ceil().max(1.0) as usize;
        let h = t / steps as f64;
        let d = self.liouvillian.dim;
        let mut state = rho.matrix().clone();
        let mut k = [
            CMatrix::zeros(d, d),
            CMatrix::zeros(d, d),
            CMatrix::zeros(d, d),
            CMatrix::zeros(d, d),
        ];
        let mut stage = CMatrix::zeros(d, d);
        let mut scratch = CMatrix::zeros(d, d);
        let half = C64::from(0.5 * h);
        let full = C64::from(h);
        for _ in 0..steps {
            self.liouvillian.apply(&state, &mut k[0], &mut scratch);
            stage.copy_from(&state);
            add_scaled(&mut stage, half, &k[0]);
            self.liouvillian.apply(&stage, &mut k[1], &mut scratch);
            stage.copy_from(&state);
            add_scaled(&mut stage, half, &k[1]);
            self.liouvillian.apply(&stage, &mut k[2], &mut scratch);
            stage.copy_from(&state);
            add_scaled(&mut stage, full, &k[2]);
            self.liouvillian.apply(&stage, &mut k[3], &mut scratch);
            let sixth = C64::from(h / 6.0);
            add_scaled(&mut state, sixth, &k[0]);
            add_scaled(&mut state, sixth * 2.0, &k[1]);
            add_scaled(&mut state, sixth * 2.0, &k[2]);
            add_scaled(&mut state, sixth, &k[3]);

            self.steps_taken += 1;
            let tr = state.trace();
            let defect = (tr - C64::ONE).norm();
            self.max_trace_defect = self.max_trace_defect.max(defect);
            if defect > TRACE_DEFECT_TOL || !defect.is_finite() {
                return Err(Error::StepSize {
                    defect,
                    step: self.steps_taken,
                });
            }
            let adj = state.adjoint();
            state += adj;
            state.unscale_mut(2.0 * tr.re);
        }
        log::debug!(
            "lindblad: {steps} steps of {h:.3e} s, max trace defect {:.2e}",
            self.max_trace_defect
        );
        Ok(DensityMatrix::from_trusted(state, Space::Joint))
    }

    /// States at each of the ascending `times`, stepping with at most `dt`.
    pub fn series(&mut self, rho: &DensityMatrix, times: &[f64], dt: f64) -> Result<Vec<DensityMatrix>> {
        let mut out = Vec::with_capacity(times.len());
        let mut current = rho.clone();
        let mut now = 0.0;
        for &t in times {
            if t < now {
                return Err(Error::InvalidParameter("times must be ascending and >= 0".into()));
            }
            current = self.evolve(&current, t - now, dt)?;
            now = t;
            out.push(current.clone());
        }
        Ok(out)
    }
}

fn add_scaled(dst: &mut CMatrix, coeff: C64, src: &CMatrix) {
    dst.zip_apply(src, |d, s| *d += coeff * s);
}

/// Integrates the master equation for time `t` with RK4 steps of at most `dt`.
pub fn evolve_lindblad(
    rho: &DensityMatrix,
    params: &CouplingParams,
    noise: &NoiseParams,
    t: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    if dt > t && t > 0.0 {
        return Err(Error::InvalidParameter(format!("dt = {dt} exceeds t = {t}")));
    }
    let space = FockSpace::new(rho.truncation())?;
    LindbladIntegrator::new(params, noise, space)?.evolve(rho, t, dt)
}

/// `t_rev = 4π|α|/ηΩ`.
pub fn revival_time(alpha: C64, params: &CouplingParams) -> Result<f64> {
    let r = alpha.norm();
    if r == 0.0 {
        return Err(Error::ZeroAmplitude);
    }
    params.validate()?;
    Ok(4.0 * PI * r / params.eta_omega)
}

/// Closed-form `P(↑)(t) = Σₙ pₙ ½[1 − e^{−γt} cos(Ωₙ t)]` for `|↓⟩|β⟩`.
///
/// `pₙ` are the Poisson weights of `|β⟩` and `Ωₙ` the sideband rate of `|↓, n⟩`.
pub fn rabi_signal(beta: C64, params: &CouplingParams, gamma: f64, times: &[f64]) -> Vec<f64> {
    let mean = beta.norm_sqr();
    // Enough terms that the dropped Poisson tail is below 1e-16.
    let len = ((mean + 12.0 * mean.sqrt() + 40.0).ceil() as usize).max(64);
    let weights = poisson_weights(mean, len);
    times
        .iter()
        .map(|&t| {
            let envelope = (-gamma * t).exp();
            weights
                .iter()
                .enumerate()
                .map(|(n, p)| p * 0.5 * (1.0 - envelope * (params.sideband_rate(n) * t).cos()))
                .sum()
        })
        .collect()
}

/// The two factorised branches of the large-amplitude approximation.
#[derive(Clone, Debug)]
pub struct BranchStates {
    pub atom_plus: [C64; 2],
    pub atom_minus: [C64; 2],
    pub phonon_plus: CVector,
    pub phonon_minus: CVector,
    pub time: f64,
}

impl BranchStates {
    /// `(|Ψ_A⁺⟩|Ψ_P⁺⟩ + |Ψ_A⁻⟩|Ψ_P⁻⟩)/√2`, equal to `|↓⟩|α⟩` at `t = 0`.
    pub fn superposition(&self, space: FockSpace) -> Result<JointState> {
        let minus = joint_product(&self.atom_minus, &self.phonon_minus);
        let plus = joint_product(&self.atom_plus, &self.phonon_plus);
        let v = (minus + plus) * C64::from(FRAC_1_SQRT_2);
        JointState::new(space, v)
    }
}

/// Branches of `|↓⟩|α⟩` under `H` at time `t`: each phonon factor is the coherent
/// state advanced by `exp(∓i t ηΩ √n̂′ / 2)` (`n̂′ = n̂ + 1` for anti-JC, `n̂` for JC) and
/// each atomic factor turns by `±π t / t_rev`.
pub fn branch_states(t: f64, alpha: C64, params: &CouplingParams, space: FockSpace) -> Result<BranchStates> {
    params.validate()?;
    let t_rev = revival_time(alpha, params)?;
    let angle = PI * t / t_rev;
    let h = C64::from(FRAC_1_SQRT_2);
    let (raising, turn, shift) = match params.kind {
        CouplingKind::AntiJc => (params.phi - alpha.arg(), angle, 1.0),
        CouplingKind::Jc => (params.phi + alpha.arg(), -angle, 0.0),
    };
    // Basis order [↓, ↑].
    let atom = |sign: f64| [h, C64::from_polar(sign, raising + sign * turn) * h];
    let number = ladder_operators(space).number;
    let root_n = hermitian_function(&number, |n| (n + shift).max(0.0).sqrt());
    let kick = SpectralPropagator::new(&(root_n * C64::from(0.5 * params.eta_omega)));
    let label = coherent_state(alpha, space)?.amplitudes;
    Ok(BranchStates {
        atom_plus: atom(1.0),
        atom_minus: atom(-1.0),
        phonon_plus: kick.unitary(t) * &label,
        phonon_minus: kick.unitary(-t) * &label,
        time: t,
    })
}

/// Durations of the phase-flip echo.
#[derive(Clone, Copy, Debug)]
pub struct EchoSchedule {
    pub forward: f64,
    pub reverse: f64,
    /// Lindblad step; ignored for noiseless runs.
    pub dt: f64,
}

impl EchoSchedule {
    /// `t_rev/2` forward then `t_rev/2` with φ → φ + π.
    pub fn half_revival(alpha: C64, params: &CouplingParams) -> Result<Self> {
        let t_rev = revival_time(alpha, params)?;
        Ok(Self {
            forward: 0.5 * t_rev,
            reverse: 0.5 * t_rev,
            dt: t_rev / DEFAULT_STEPS_PER_REVIVAL as f64,
        })
    }
}

#[derive(Clone, Debug)]
pub struct EchoOutcome {
    /// Phonon state after the echo.
    pub phonon: DensityMatrix,
    /// Fidelity of `phonon` with the initial `|α⟩⟨α|`.
    pub fidelity: f64,
}

/// Prepares `|↓⟩|α⟩`, evolves under `H(φ)` then `H(φ + π) = −H(φ)`.
pub fn echo_reverse_run(
    alpha: C64,
    params: &CouplingParams,
    noise: Option<&NoiseParams>,
    space: FockSpace,
    schedule: &EchoSchedule,
) -> Result<EchoOutcome> {
    let initial = JointState::down_coherent(alpha, space)?;
    let reversed = params.with_phase(params.phi + PI);
    let phonon = match noise.filter(|n| !n.is_noiseless()) {
        None => {
            let forward = evolve_unitary(&initial, params, schedule.forward)?;
            evolve_unitary(&forward, &reversed, schedule.reverse)?.phonon_state()
        }
        Some(noise) => {
            let rho = initial.density();
            let mid =
                LindbladIntegrator::new(params, noise, space)?.evolve(&rho, schedule.forward, schedule.dt)?;
            LindbladIntegrator::new(&reversed, noise, space)?
                .evolve(&mid, schedule.reverse, schedule.dt)?
                .partial_trace_internal()?
        }
    };
    let target = DensityMatrix::from_pure(&coherent_state(alpha, space)?.amplitudes, Space::Phonon)?;
    let fidelity = fidelity(&phonon, &target)?;
    Ok(EchoOutcome { phonon, fidelity })
}

/// `n̂ − |↑⟩⟨↑|` (anti-JC) or `n̂ + |↑⟩⟨↑|` (JC), conserved by the matching Hamiltonian.
pub fn excitation_operator(kind: CouplingKind, space: FockSpace) -> CMatrix {
    let n = space.dim();
    let sign = match kind {
        CouplingKind::AntiJc => -1.0,
        CouplingKind::Jc => 1.0,
    };
    CMatrix::from_fn(2 * n, 2 * n, |r, c| {
        if r != c {
            return C64::ZERO;
        }
        let up = if r >= n { sign } else { 0.0 };
        C64::from((r % n) as f64 + up)
    })
}
