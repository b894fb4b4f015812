//! Husimi Q and Wigner quasiprobabilities.
//!
//! Conventions, with `∫ d²α = ∫ dRe α dIm α`:
//!
//! * `Q(α) = (1/π)⟨α|ρ|α⟩`, so `0 ≤ Q ≤ 1/π` and `∫Q d²α = 1`.
//! * `W(α) = (2/π) Tr[ρ D(α) (−1)^n̂ D†(α)]`, so `W(0) = 2/π` for the vacuum and `∫W d²α = 1`.
//!
//! Both are evaluated from exact matrix elements on the support of ρ, so they do not
//! need any truncation headroom beyond the dimension of ρ itself.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::fock::{coherent_amplitudes, DensityMatrix, Space};
use crate::{Error, Result, C64};

pub const Q_CONVENTION: &str = "Q(a) = (1/pi) <a|rho|a>";
pub const WIGNER_CONVENTION: &str = "W(a) = (2/pi) Tr[rho D(a) (-1)^n D(a)^dag], int W = 1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GridLayout {
    /// Origin plus `round(r_max/r_step)` rings of `n_phases` points each.
    Polar {
        r_max: f64,
        r_step: f64,
        n_phases: usize,
    },
    Cartesian {
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        step: f64,
    },
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint {
    pub alpha: C64,
    /// Number of nominal measurement settings this point stands for.
    pub multiplicity: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceGrid {
    layout: GridLayout,
    points: Vec<GridPoint>,
}

impl PhaseSpaceGrid {
    /// Polar scan: the origin (carrying `n_phases` settings) then rings `k·r_step`, `k = 1…K`,
    /// at phases `2πj/n_phases`. `polar(3.0, 0.2, 24)` gives 361 points, 384 settings.
    pub fn polar(r_max: f64, r_step: f64, n_phases: usize) -> Result<Self> {
        if !(r_step > 0.0 && r_max >= r_step && r_max.is_finite()) || n_phases == 0 {
            return Err(Error::InvalidParameter(format!(
                "polar grid needs 0 < r_step <= r_max and n_phases > 0, got ({r_max}, {r_step}, {n_phases})"
            )));
        }
        let rings = (r_max / r_step).round() as usize;
        let mut points = Vec::with_capacity(1 + rings * n_phases);
        points.push(GridPoint {
            alpha: C64::ZERO,
            multiplicity: n_phases as u32,
        });
        for k in 1..=rings {
            let r = k as f64 * r_step;
            for j in 0..n_phases {
                points.push(GridPoint {
                    alpha: C64::from_polar(r, 2.0 * PI * j as f64 / n_phases as f64),
                    multiplicity: 1,
                });
            }
        }
        Ok(Self {
            layout: GridLayout::Polar {
                r_max,
                r_step,
                n_phases,
            },
            points,
        })
    }

    /// The 0…3.0 × 24-phase scan used for every Q-function snapshot.
    pub fn paper_scan() -> Self {
        Self::polar(3.0, 0.2, 24).expect("valid constant grid")
    }

    pub fn cartesian(x: (f64, f64), y: (f64, f64), step: f64) -> Result<Self> {
        if step.is_nan() || step <= 0.0 || x.1 < x.0 || y.1 < y.0 {
            return Err(Error::InvalidParameter("bad cartesian grid bounds".into()));
        }
        let nx = ((x.1 - x.0) / step + 1e-9).floor() as usize + 1;
        let ny = ((y.1 - y.0) / step + 1e-9).floor() as usize + 1;
        let mut points = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                points.push(GridPoint {
                    alpha: C64::new(x.0 + ix as f64 * step, y.0 + iy as f64 * step),
                    multiplicity: 1,
                });
            }
        }
        Ok(Self {
            layout: GridLayout::Cartesian {
                x_min: x.0,
                x_max: x.1,
                y_min: y.0,
                y_max: y.1,
                step,
            },
            points,
        })
    }

    pub fn custom(alphas: impl IntoIterator<Item = C64>) -> Self {
        Self {
            layout: GridLayout::Custom,
            points: alphas
                .into_iter()
                .map(|alpha| GridPoint {
                    alpha,
                    multiplicity: 1,
                })
                .collect(),
        }
    }

    /// Rebuilds a grid from its layout descriptor.
    pub fn from_layout(layout: &GridLayout) -> Result<Self> {
        match *layout {
            GridLayout::Polar {
                r_max,
                r_step,
                n_phases,
            } => Self::polar(r_max, r_step, n_phases),
            GridLayout::Cartesian {
                x_min,
                x_max,
                y_min,
                y_max,
                step,
            } => Self::cartesian((x_min, x_max), (y_min, y_max), step),
            GridLayout::Custom => Err(Error::InvalidParameter(
                "custom layouts carry no generator".into(),
            )),
        }
    }

    pub fn layout(&self) -> &GridLayout {
        &self.layout
    }

    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn alphas(&self) -> impl Iterator<Item = C64> + '_ {
        self.points.iter().map(|p| p.alpha)
    }

    pub fn measurement_settings(&self) -> u32 {
        self.points.iter().map(|p| p.multiplicity).sum()
    }

    /// Indices of points no smaller than any polar neighbour (ring ±1, phase ±1).
    ///
    /// Only defined for polar layouts; other layouts return `None`.
    pub fn polar_local_maxima(&self, values: &[f64]) -> Option<Vec<usize>> {
        let GridLayout::Polar { n_phases, .. } = self.layout else {
            return None;
        };
        assert_eq!(values.len(), self.points.len());
        let rings = (self.points.len() - 1) / n_phases;
        let idx = |ring: usize, j: usize| 1 + (ring - 1) * n_phases + j % n_phases;
        let mut out = Vec::new();
        if (1..values.len()).all(|i| i > n_phases || values[0] >= values[i]) {
            out.push(0);
        }
        for ring in 1..=rings {
            for j in 0..n_phases {
                let here = values[idx(ring, j)];
                let mut neighbours = Vec::with_capacity(8);
                for dj in [n_phases - 1, 0, 1] {
                    if dj != 0 {
                        neighbours.push(idx(ring, j + dj));
                    }
                    if ring > 1 {
                        neighbours.push(idx(ring - 1, j + dj));
                    }
                    if ring < rings {
                        neighbours.push(idx(ring + 1, j + dj));
                    }
                }
                if ring == 1 {
                    neighbours.push(0);
                }
                if neighbours.iter().all(|&k| here >= values[k]) {
                    out.push(idx(ring, j));
                }
            }
        }
        Some(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QSample {
    pub alpha: C64,
    /// Estimated `Q(α)`, including the `1/π`.
    pub q_estimate: f64,
    /// `None` for exact (noise-free) values.
    pub shots: Option<u64>,
    pub dark_counts: Option<u64>,
}

impl QSample {
    pub fn exact(alpha: C64, q: f64) -> Self {
        Self {
            alpha,
            q_estimate: q,
            shots: None,
            dark_counts: None,
        }
    }

    pub fn counted(alpha: C64, dark_counts: u64, shots: u64) -> Self {
        Self {
            alpha,
            q_estimate: dark_counts as f64 / (PI * shots as f64),
            shots: Some(shots),
            dark_counts: Some(dark_counts),
        }
    }

    /// Least-squares weight: the shot count, or one for exact samples.
    pub fn weight(&self) -> f64 {
        self.shots.map_or(1.0, |s| s as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QSamples {
    pub layout: GridLayout,
    /// Truncation of the state the samples were generated from (0 if unknown).
    pub truncation: usize,
    pub samples: Vec<QSample>,
}

impl QSamples {
    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.q_estimate).collect()
    }

    pub fn is_exact(&self) -> bool {
        self.samples.iter().all(|s| s.shots.is_none())
    }
}

fn require_phonon(rho: &DensityMatrix) -> Result<()> {
    if rho.space() != Space::Phonon {
        return Err(Error::SpaceMismatch {
            expected: "phonon",
            found: "joint",
        });
    }
    Ok(())
}

fn check_finite(alpha: C64) -> Result<()> {
    if alpha.re.is_finite() && alpha.im.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("non-finite amplitude {alpha}")))
    }
}

/// `Q(α) = (1/π)⟨α|ρ|α⟩`.
pub fn q_function(rho: &DensityMatrix, alpha: C64) -> Result<f64> {
    require_phonon(rho)?;
    check_finite(alpha)?;
    let c = coherent_amplitudes(alpha, rho.dim());
    let v = c.dotc(&(rho.matrix() * &c)).re;
    Ok(v.max(0.0) / PI)
}

pub fn q_grid(rho: &DensityMatrix, grid: &PhaseSpaceGrid) -> Result<QSamples> {
    let samples = grid
        .alphas()
        .map(|a| q_function(rho, a).map(|q| QSample::exact(a, q)))
        .collect::<Result<Vec<_>>>()?;
    Ok(QSamples {
        layout: grid.layout.clone(),
        truncation: rho.dim(),
        samples,
    })
}

/// Generalised Laguerre table `L[k][m] = L_m^{(k)}(x)` for `m + k < n`.
fn laguerre_table(n: usize, x: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|k| {
            let len = n - k;
            let kf = k as f64;
            let mut col = Vec::with_capacity(len);
            col.push(1.0);
            if len > 1 {
                col.push(1.0 + kf - x);
            }
            for j in 1..len.saturating_sub(1) {
                let jf = j as f64;
                let next = ((2.0 * jf + 1.0 + kf - x) * col[j] - (jf + kf) * col[j - 1]) / (jf + 1.0);
                col.push(next);
            }
            col
        })
        .collect()
}

/// `W(α)` from the Laguerre form of the displaced-parity matrix elements.
pub fn wigner_function(rho: &DensityMatrix, alpha: C64) -> Result<f64> {
    require_phonon(rho)?;
    check_finite(alpha)?;
    let n = rho.dim();
    let m_rho = rho.matrix();
    let x = 4.0 * alpha.norm_sqr();
    let lag = laguerre_table(n, x);
    let two_alpha = 2.0 * alpha;
    let mut acc = 0.0;
    for m in 0..n {
        let parity = if m % 2 == 0 { 1.0 } else { -1.0 };
        acc += parity * m_rho[(m, m)].re * lag[0][m];
        // (2α)^k √(m!/(m+k)!)
        let mut factor = C64::ONE;
        for k in 1..n - m {
            factor *= two_alpha / ((m + k) as f64).sqrt();
            acc += 2.0 * parity * (m_rho[(m, m + k)] * factor).re * lag[k][m];
        }
    }
    Ok(2.0 / PI * (-2.0 * alpha.norm_sqr()).exp() * acc)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WignerGrid {
    pub layout: GridLayout,
    pub points: Vec<C64>,
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn wigner_grid(rho: &DensityMatrix, grid: &PhaseSpaceGrid) -> Result<WignerGrid> {
    let values = grid
        .alphas()
        .map(|a| wigner_function(rho, a))
        .collect::<Result<Vec<_>>>()?;
    Ok(WignerGrid {
        layout: grid.layout.clone(),
        points: grid.alphas().collect(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, fock_state, Displacer, FockSpace};
    use crate::{CMatrix, CVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pure(v: &CVector) -> DensityMatrix {
        DensityMatrix::from_pure(v, Space::Phonon).unwrap()
    }

    fn space(n: usize) -> FockSpace {
        FockSpace::new(n).unwrap()
    }

    fn random_low_rank(rng: &mut ChaCha8Rng, dim: usize, rank: usize, decay: f64) -> DensityMatrix {
        let mut m = CMatrix::zeros(dim, dim);
        for _ in 0..rank {
            let v = CVector::from_fn(dim, |i, _| {
                let s = (-decay * i as f64).exp();
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * s
            });
            m += &v * v.adjoint() * C64::from(rng.random_range(0.1..1.0));
        }
        let tr = m.trace().re;
        DensityMatrix::new(m.unscale(tr), Space::Phonon).unwrap()
    }

    /// Independent route: displace ρ with the matrix exponential and read off parity.
    fn wigner_by_displacement(rho: &DensityMatrix, alpha: C64, disp: &Displacer) -> f64 {
        let d = disp.displacement(alpha).unwrap();
        let shifted = d.adjoint() * rho.matrix() * d;
        (0..shifted.nrows())
            .map(|n| if n % 2 == 0 { 1.0 } else { -1.0 } * shifted[(n, n)].re)
            .sum::<f64>()
            * 2.0
            / PI
    }

    fn cat(beta: C64, sign: f64, s: FockSpace) -> DensityMatrix {
        let plus = coherent_state(beta, s).unwrap().amplitudes;
        let minus = coherent_state(-beta, s).unwrap().amplitudes;
        pure(&(plus + minus * C64::from(sign)))
    }

    /// Closed-form Wigner function of `N(|β⟩ + s|−β⟩)`.
    fn cat_wigner(alpha: C64, beta: C64, sign: f64) -> f64 {
        let norm2 = 1.0 / (2.0 * (1.0 + sign * (-2.0 * beta.norm_sqr()).exp()));
        let g = |z: C64| (-2.0 * z.norm_sqr()).exp();
        let fringe = 2.0 * sign * g(alpha) * (4.0 * (alpha.conj() * beta).im).cos();
        2.0 / PI * norm2 * (g(alpha - beta) + g(alpha + beta) + fringe)
    }

    #[test]
    fn polar_scan_has_384_settings() {
        let g = PhaseSpaceGrid::paper_scan();
        assert_eq!(g.len(), 361);
        assert_eq!(g.measurement_settings(), 384);
        assert_eq!(g.points()[0].alpha, C64::ZERO);
        assert!((g.points()[360].alpha.norm() - 3.0).abs() < 1e-12);
        assert!(PhaseSpaceGrid::polar(1.0, 0.0, 4).is_err());
    }

    #[test]
    fn q_of_vacuum_and_coherent() {
        let s = space(32);
        let vac = pure(&fock_state(0, s).unwrap());
        assert!((q_function(&vac, C64::ZERO).unwrap() - 1.0 / PI).abs() < 1e-15);
        let beta = C64::new(1.62, -0.4);
        let rho = pure(&coherent_state(beta, s).unwrap().amplitudes);
        for alpha in [C64::ZERO, C64::new(1.0, 0.5), C64::new(-0.7, 2.0)] {
            let expected = (-(alpha - beta).norm_sqr()).exp() / PI;
            assert!((q_function(&rho, alpha).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn q_of_fock_one() {
        let s = space(16);
        let one = pure(&fock_state(1, s).unwrap());
        let q = q_function(&one, C64::new(0.0, 1.0)).unwrap();
        assert!((q - (-1.0f64).exp() / PI).abs() < 1e-14);
        assert!((q - 0.117).abs() < 1e-3);
    }

    #[test]
    fn q_rejects_joint_input() {
        let m = CMatrix::identity(4, 4).unscale(4.0);
        let rho = DensityMatrix::new(m, Space::Joint).unwrap();
        assert!(q_function(&rho, C64::ZERO).is_err());
    }

    #[test]
    fn vacuum_q_grid_decreases_radially() {
        let s = space(16);
        let vac = pure(&fock_state(0, s).unwrap());
        let grid = PhaseSpaceGrid::paper_scan();
        let q = q_grid(&vac, &grid).unwrap().values();
        assert_eq!(grid.polar_local_maxima(&q).unwrap(), vec![0]);
        for ring in 1..15 {
            assert!(q[1 + ring * 24] < q[1 + (ring - 1) * 24]);
        }
    }

    #[test]
    fn q_normalises() {
        let s = space(64);
        let rho = pure(&coherent_state(C64::new(1.62, 0.0), s).unwrap().amplitudes);
        let grid = PhaseSpaceGrid::cartesian((-6.0, 6.0), (-6.0, 6.0), 0.1).unwrap();
        let total: f64 = q_grid(&rho, &grid).unwrap().values().iter().sum::<f64>() * 0.01;
        assert!((total - 1.0).abs() < 0.02, "{total}");
    }

    #[test]
    fn wigner_point_values() {
        let s = space(24);
        let vac = pure(&fock_state(0, s).unwrap());
        let one = pure(&fock_state(1, s).unwrap());
        assert!((wigner_function(&vac, C64::ZERO).unwrap() - 2.0 / PI).abs() < 1e-14);
        assert!((wigner_function(&one, C64::ZERO).unwrap() + 2.0 / PI).abs() < 1e-14);
        let beta = C64::new(1.1, -0.6);
        let coh = pure(&coherent_state(beta, space(48)).unwrap().amplitudes);
        for alpha in [C64::ZERO, C64::new(1.0, -0.5), C64::new(-0.4, 0.9), beta] {
            let w = wigner_function(&coh, alpha).unwrap();
            let expected = 2.0 / PI * (-2.0 * (alpha - beta).norm_sqr()).exp();
            assert!(w > 0.0);
            assert!((w - expected).abs() < 1e-10, "{alpha}: {w} vs {expected}");
        }
    }

    #[test]
    fn wigner_matches_displacement_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = space(64);
        let disp = Displacer::new(s);
        for _ in 0..4 {
            let small = random_low_rank(&mut rng, 12, 2, 0.1);
            let rho = small.embed(64).unwrap();
            for _ in 0..5 {
                let alpha = C64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
                let a = wigner_function(&small, alpha).unwrap();
                let b = wigner_by_displacement(&rho, alpha, &disp);
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn cat_state_wigner() {
        let s = space(48);
        let beta = C64::new(1.62, 0.0);
        let even = cat(beta, 1.0, s);
        let odd = cat(beta, -1.0, s);
        assert!(wigner_function(&even, C64::ZERO).unwrap() > 0.0);
        assert!(wigner_function(&odd, C64::ZERO).unwrap() < 0.0);
        let mut signs = Vec::new();
        for k in 0..=30 {
            let alpha = C64::new(0.0, -1.5 + 0.1 * k as f64);
            let w = wigner_function(&even, alpha).unwrap();
            assert!((w - cat_wigner(alpha, beta, 1.0)).abs() < 1e-9);
            signs.push(w > 0.0);
        }
        // Interference fringes change sign along the axis perpendicular to ±β.
        assert!(signs.windows(2).filter(|w| w[0] != w[1]).count() >= 4);
        for alpha in [C64::new(1.0, 0.3), C64::new(-1.62, 0.0), C64::new(0.2, -0.8)] {
            let w = wigner_function(&odd, alpha).unwrap();
            assert!((w - cat_wigner(alpha, beta, -1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn wigner_normalises() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let grid = PhaseSpaceGrid::cartesian((-6.0, 6.0), (-6.0, 6.0), 0.1).unwrap();
        let states = [
            cat(C64::new(1.62, 0.0), 1.0, space(40)),
            random_low_rank(&mut rng, 16, 3, 0.0),
        ];
        for rho in states {
            let total: f64 = wigner_grid(&rho, &grid).unwrap().values.iter().sum::<f64>() * 0.01;
            assert!((total - 1.0).abs() < 0.02, "{total}");
        }
    }

    #[test]
    fn q_is_gaussian_smoothed_wigner() {
        // Q(α) = ∫ W(γ) (2/π) e^{−2|α−γ|²} d²γ
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 0.1;
        let wgrid = PhaseSpaceGrid::cartesian((-5.5, 5.5), (-5.5, 5.5), h).unwrap();
        let targets = PhaseSpaceGrid::polar(2.0, 0.25, 12).unwrap();
        for _ in 0..5 {
            let rank = rng.random_range(1..=3);
            let rho = random_low_rank(&mut rng, 16, rank, 0.15);
            let w = wigner_grid(&rho, &wgrid).unwrap();
            let q = q_grid(&rho, &targets).unwrap().values();
            let qmax = q.iter().copied().fold(0.0, f64::max);
            for (alpha, q_exact) in targets.alphas().zip(&q) {
                let conv: f64 = w
                    .points
                    .iter()
                    .zip(&w.values)
                    .map(|(g, wv)| wv * 2.0 / PI * (-2.0 * (alpha - g).norm_sqr()).exp())
                    .sum::<f64>()
                    * h
                    * h;
                assert!(
                    (conv - q_exact).abs() < 0.01 * qmax,
                    "{alpha}: {conv} vs {q_exact}"
                );
            }
        }
    }

    #[test]
    fn q_bounds_on_random_mixtures() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let rho = random_low_rank(&mut rng, 10, 3, 0.0);
            let alpha = C64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let q = q_function(&rho, alpha).unwrap();
            assert!((0.0..=1.0 / PI + 1e-15).contains(&q));
        }
    }

    #[test]
    fn phase_conjugation_is_a_rotation() {
        // R ρ R† with R = diag(e^{iθn}) rotates phase space: Q'(α) = Q(α e^{−iθ}).
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let rho = random_low_rank(&mut rng, 12, 2, 0.1);
        let theta = 0.7;
        let r = CMatrix::from_fn(12, 12, |i, j| {
            if i == j {
                C64::from_polar(1.0, theta * i as f64)
            } else {
                C64::ZERO
            }
        });
        let rotated = DensityMatrix::new(&r * rho.matrix() * r.adjoint(), Space::Phonon).unwrap();
        let back = C64::from_polar(1.0, -theta);
        for alpha in [C64::new(0.3, 0.2), C64::new(-1.1, 0.8), C64::new(2.0, -0.1)] {
            let a = q_function(&rotated, alpha).unwrap();
            let b = q_function(&rho, alpha * back).unwrap();
            assert!((a - b).abs() < 1e-9);
            let a = wigner_function(&rotated, alpha).unwrap();
            let b = wigner_function(&rho, alpha * back).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }
}
