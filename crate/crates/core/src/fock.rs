//! Truncated Fock space of a single bosonic mode, optionally tensored with a qubit.

use nalgebra::{DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::{CMatrix, CVector, Error, Result, C64};

/// Default number of retained Fock levels.
pub const DEFAULT_TRUNCATION: usize = 64;

/// Coherent-state leakage past the top level above which we refuse to truncate.
pub const MAX_LEAKAGE: f64 = 1e-6;

const UNITARITY_TOL: f64 = 1e-8;

/// Number of retained Fock levels, indices `0..N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct FockSpace {
    truncation: usize,
}

impl FockSpace {
    pub fn new(truncation: usize) -> Result<Self> {
        if truncation < 2 {
            return Err(Error::InvalidTruncation(truncation));
        }
        Ok(Self { truncation })
    }

    /// Phonon-only dimension `N`.
    pub fn dim(&self) -> usize {
        self.truncation
    }

    /// Qubit ⊗ phonon dimension `2N`.
    pub fn joint_dim(&self) -> usize {
        2 * self.truncation
    }

    /// Largest displacement `0.5·√N` that still keeps the displaced vacuum inside the space.
    pub fn max_amplitude(&self) -> f64 {
        0.5 * (self.truncation as f64).sqrt()
    }

    pub fn check_amplitude(&self, alpha: C64) -> Result<()> {
        if !alpha.re.is_finite() || !alpha.im.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite amplitude {alpha}")));
        }
        let bound = self.max_amplitude();
        if alpha.norm() > bound {
            return Err(Error::Truncation(format!(
                "|α| = {:.4} exceeds 0.5·√N = {bound:.4} for N = {}",
                alpha.norm(),
                self.truncation
            )));
        }
        Ok(())
    }

    /// Index of `|q, n⟩` in the qubit-major joint basis.
    pub fn joint_index(&self, qubit: Qubit, n: usize) -> usize {
        debug_assert!(n < self.truncation);
        qubit.block() * self.truncation + n
    }
}

impl Default for FockSpace {
    fn default() -> Self {
        Self {
            truncation: DEFAULT_TRUNCATION,
        }
    }
}

impl TryFrom<usize> for FockSpace {
    type Error = Error;

    fn try_from(n: usize) -> Result<Self> {
        Self::new(n)
    }
}

impl From<FockSpace> for usize {
    fn from(space: FockSpace) -> usize {
        space.truncation
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Qubit {
    Down,
    Up,
}

impl Qubit {
    fn block(self) -> usize {
        match self {
            Qubit::Down => 0,
            Qubit::Up => 1,
        }
    }
}

pub struct Ladder {
    pub annihilation: CMatrix,
    pub creation: CMatrix,
    pub number: CMatrix,
}

pub fn ladder_operators(space: FockSpace) -> Ladder {
    let n = space.dim();
    let annihilation = CMatrix::from_fn(n, n, |r, c| {
        if c == r + 1 {
            C64::from((c as f64).sqrt())
        } else {
            C64::ZERO
        }
    });
    let creation = annihilation.adjoint();
    let number = &creation * &annihilation;
    Ladder {
        annihilation,
        creation,
        number,
    }
}

/// `e^{−|β|²/2} βⁿ/√n!` for `n < len`, without renormalisation.
///
/// These are the exact leading amplitudes of the untruncated coherent state, so
/// `c†ρc` is the exact overlap `⟨β|ρ|β⟩` for any ρ supported on the first `len` levels.
pub fn coherent_amplitudes(beta: C64, len: usize) -> CVector {
    let mut out = CVector::zeros(len);
    let mut c = C64::from((-0.5 * beta.norm_sqr()).exp());
    for n in 0..len {
        if n > 0 {
            c *= beta / (n as f64).sqrt();
        }
        out[n] = c;
    }
    out
}

pub struct CoherentState {
    pub amplitudes: CVector,
    /// `1 − Σ|cₙ|²` of the truncated amplitudes before renormalisation.
    pub leakage: f64,
}

pub fn coherent_state(beta: C64, space: FockSpace) -> Result<CoherentState> {
    space.check_amplitude(beta)?;
    let mut amplitudes = coherent_amplitudes(beta, space.dim());
    let kept = amplitudes.norm_squared();
    let leakage = (1.0 - kept).max(0.0);
    if leakage > MAX_LEAKAGE {
        return Err(Error::Truncation(format!(
            "coherent state |{beta}⟩ leaks {leakage:.3e} past level {}",
            space.dim() - 1
        )));
    }
    amplitudes.unscale_mut(kept.sqrt());
    Ok(CoherentState { amplitudes, leakage })
}

pub fn fock_state(n: usize, space: FockSpace) -> Result<CVector> {
    if n >= space.dim() {
        return Err(Error::Truncation(format!(
            "Fock level {n} outside truncation {}",
            space.dim()
        )));
    }
    let mut v = CVector::zeros(space.dim());
    v[n] = C64::ONE;
    Ok(v)
}

/// Eigendecomposition of a Hermitian matrix (input is Hermitised first).
pub fn hermitian_eigen(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let h = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(h);
    (eig.eigenvalues, eig.eigenvectors)
}

/// `f(H)` by spectral calculus.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    spectral_assemble(&vecs, vals.iter().map(|&l| C64::from(f(l))))
}

pub(crate) fn spectral_assemble(vecs: &CMatrix, weights: impl Iterator<Item = C64>) -> CMatrix {
    let mut scaled = vecs.clone();
    for (mut col, w) in scaled.column_iter_mut().zip(weights) {
        col *= w;
    }
    scaled * vecs.adjoint()
}

/// `exp(−iHt)` for Hermitian `H` from a stored eigendecomposition.
#[derive(Clone)]
pub struct SpectralPropagator {
    energies: DVector<f64>,
    vectors: CMatrix,
}

impl SpectralPropagator {
    pub fn new(hamiltonian: &CMatrix) -> Self {
        let (energies, vectors) = hermitian_eigen(hamiltonian);
        Self { energies, vectors }
    }

    pub fn unitary(&self, t: f64) -> CMatrix {
        spectral_assemble(
            &self.vectors,
            self.energies.iter().map(|&e| C64::from_polar(1.0, -e * t)),
        )
    }

    pub fn apply(&self, state: &CVector, t: f64) -> CVector {
        let mut coeffs = self.vectors.ad_mul(state);
        for (c, &e) in coeffs.iter_mut().zip(self.energies.iter()) {
            *c *= C64::from_polar(1.0, -e * t);
        }
        &self.vectors * coeffs
    }
}

/// Displacement operators on one space, sharing one diagonalisation of `a† − a`.
///
/// `D(r e^{iθ}) = R(θ) exp(r(a† − a)) R(θ)†` with `R(θ) = e^{iθn̂}`.
pub struct Displacer {
    space: FockSpace,
    propagator: SpectralPropagator,
}

impl Displacer {
    pub fn new(space: FockSpace) -> Self {
        let ladder = ladder_operators(space);
        // i(a† − a) is Hermitian; exp(r(a† − a)) = exp(−i·r·[i(a† − a)]).
        let generator = (&ladder.creation - &ladder.annihilation) * C64::I;
        Self {
            space,
            propagator: SpectralPropagator::new(&generator),
        }
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn displacement(&self, alpha: C64) -> Result<CMatrix> {
        self.space.check_amplitude(alpha)?;
        let (r, theta) = alpha.to_polar();
        let mut d = self.propagator.unitary(r);
        let n = self.space.dim();
        for row in 0..n {
            for col in 0..n {
                d[(row, col)] *= C64::from_polar(1.0, theta * (row as f64 - col as f64));
            }
        }
        let defect = unitarity_defect(&d);
        if defect > UNITARITY_TOL {
            return Err(Error::Truncation(format!(
                "D({alpha}) unitarity defect {defect:.3e}"
            )));
        }
        Ok(d)
    }
}

pub fn displacement_operator(alpha: C64, space: FockSpace) -> Result<CMatrix> {
    Displacer::new(space).displacement(alpha)
}

/// `‖U†U − I‖_max`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let p = u.ad_mul(u);
    let n = p.nrows();
    let mut worst = 0.0_f64;
    for r in 0..n {
        for c in 0..n {
            let target = if r == c { C64::ONE } else { C64::ZERO };
            worst = worst.max((p[(r, c)] - target).norm());
        }
    }
    worst
}

/// Which Hilbert space a density matrix lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Phonon,
    Joint,
}

impl Space {
    pub fn name(self) -> &'static str {
        match self {
            Space::Phonon => "phonon",
            Space::Joint => "joint",
        }
    }
}

const HERMITIAN_TOL: f64 = 1e-9;
const TRACE_TOL: f64 = 1e-9;
const PSD_SLACK: f64 = -1e-8;

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: CMatrix,
    space: Space,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix, space: Space) -> Result<Self> {
        let n = matrix.nrows();
        if n != matrix.ncols() || n == 0 {
            return Err(Error::InvalidDensityMatrix(format!(
                "shape {}x{} is not square",
                n,
                matrix.ncols()
            )));
        }
        if space == Space::Joint && (!n.is_multiple_of(2) || n < 4) {
            return Err(Error::InvalidDensityMatrix(format!(
                "joint matrix dimension {n} is not 2N with N >= 2"
            )));
        }
        for r in 0..n {
            for c in r..n {
                let d = (matrix[(r, c)] - matrix[(c, r)].conj()).norm();
                if d > HERMITIAN_TOL {
                    return Err(Error::InvalidDensityMatrix(format!(
                        "Hermiticity defect {d:.3e} at ({r}, {c})"
                    )));
                }
            }
        }
        let trace = matrix.trace();
        if (trace - C64::ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {trace}")));
        }
        let (vals, _) = hermitian_eigen(&matrix);
        let min = vals.min();
        if min < PSD_SLACK {
            return Err(Error::InvalidDensityMatrix(format!(
                "minimum eigenvalue {min:.3e}"
            )));
        }
        Ok(Self { matrix, space })
    }

    /// Callers guarantee the invariants (used after exact projections).
    pub(crate) fn from_trusted(matrix: CMatrix, space: Space) -> Self {
        Self { matrix, space }
    }

    pub fn from_pure(state: &CVector, space: Space) -> Result<Self> {
        let norm = state.norm();
        if norm == 0.0 {
            return Err(Error::InvalidDensityMatrix("zero state vector".into()));
        }
        let psi = state.unscale(norm);
        Self::new(&psi * psi.adjoint(), space)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_trusted(CMatrix::identity(dim, dim).unscale(dim as f64), Space::Phonon)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Phonon truncation `N` (half the dimension for joint matrices).
    pub fn truncation(&self) -> usize {
        match self.space {
            Space::Phonon => self.dim(),
            Space::Joint => self.dim() / 2,
        }
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        hermitian_eigen(&self.matrix).0
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ.
        self.matrix.norm_squared()
    }

    pub fn expectation(&self, op: &CMatrix) -> C64 {
        (&self.matrix * op).trace()
    }

    /// Zero-pads a phonon matrix to a larger truncation.
    pub fn embed(&self, dim: usize) -> Result<Self> {
        self.require(Space::Phonon)?;
        if dim < self.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: dim,
            });
        }
        let mut m = CMatrix::zeros(dim, dim);
        m.view_mut((0, 0), (self.dim(), self.dim()))
            .copy_from(&self.matrix);
        Ok(Self::from_trusted(m, Space::Phonon))
    }

    /// `(ρ_ph)_{mn} = ρ_{(↓m),(↓n)} + ρ_{(↑m),(↑n)}`.
    pub fn partial_trace_internal(&self) -> Result<Self> {
        self.require(Space::Joint)?;
        let n = self.truncation();
        let down = self.matrix.view((0, 0), (n, n));
        let up = self.matrix.view((n, n), (n, n));
        Ok(Self::from_trusted(down + up, Space::Phonon))
    }

    /// Population of the qubit `|↑⟩` for a joint matrix.
    pub fn up_population(&self) -> Result<f64> {
        self.require(Space::Joint)?;
        let n = self.truncation();
        Ok((n..2 * n).map(|i| self.matrix[(i, i)].re).sum())
    }

    fn require(&self, space: Space) -> Result<()> {
        if self.space != space {
            return Err(Error::SpaceMismatch {
                expected: space.name(),
                found: self.space.name(),
            });
        }
        Ok(())
    }

    /// The state vector if ρ is numerically rank one.
    fn pure_vector(&self) -> Option<CVector> {
        let (vals, vecs) = hermitian_eigen(&self.matrix);
        let (idx, &max) = vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
        (max > 1.0 - 1e-12).then(|| vecs.column(idx).into_owned())
    }
}

/// Uhlmann fidelity `(Tr√(√ρ σ √ρ))²`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: sigma.dim(),
        });
    }
    if rho.space() != sigma.space() {
        return Err(Error::SpaceMismatch {
            expected: rho.space().name(),
            found: sigma.space().name(),
        });
    }
    let overlap = |psi: &CVector, other: &DensityMatrix| psi.dotc(&(other.matrix() * psi)).re.clamp(0.0, 1.0);
    if let Some(psi) = sigma.pure_vector() {
        return Ok(overlap(&psi, rho));
    }
    if let Some(psi) = rho.pure_vector() {
        return Ok(overlap(&psi, sigma));
    }
    let sqrt_rho = hermitian_function(rho.matrix(), |l| l.max(0.0).sqrt());
    let m = &sqrt_rho * sigma.matrix() * &sqrt_rho;
    let (vals, _) = hermitian_eigen(&m);
    let floor = 1e-14 * vals.max().max(0.0);
    let root_trace: f64 = vals.iter().filter(|&&l| l > floor).map(|l| l.sqrt()).sum();
    Ok((root_trace * root_trace).clamp(0.0, 1.0))
}

pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}

/// Poisson weights `e^{−λ} λⁿ/n!` for `n < len`.
pub fn poisson_weights(mean: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut p = (-mean).exp();
    for n in 0..len {
        if n > 0 {
            p *= mean / n as f64;
        }
        out.push(p);
    }
    out
}

/// Tensor product `|q⟩ ⊗ ψ` in the qubit-major joint basis.
pub fn joint_product(qubit: &[C64; 2], phonon: &CVector) -> CVector {
    let n = phonon.len();
    CVector::from_fn(2 * n, |i, _| qubit[i / n] * phonon[i % n])
}
