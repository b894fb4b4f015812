//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use vacuumq::detector::{
    build_schedule, simulate_q_experiment, transfer_probability, DetectorModel, SweepParams,
};
use vacuumq::dynamics::{
    echo_reverse_run, evolve_unitary, excitation_operator, revival_time, CouplingParams, EchoSchedule,
    JointState, LindbladIntegrator, NoiseParams,
};
use vacuumq::fock::{coherent_state, fock_state, DensityMatrix, FockSpace, Space};
use vacuumq::phase_space::{q_function, q_grid, wigner_function, PhaseSpaceGrid, QSamples};
use vacuumq::reconstruction::{
    reconstruct_density, report, ReconstructionConfig, ReconstructionResult, NEGATIVITY_THRESHOLD,
};
use vacuumq::{Result, C64};
use vacuumq_cli::{run, Command, RunConfig};

const BETA: f64 = 1.62;
const N: usize = 64;
const N_REC: usize = 12;

// Criterion tolerances.
const T_REV_EXPECTED: f64 = 108.8e-6;
const T_REV_TOL: f64 = 0.1e-6;
const FOCK_Q_TOL: f64 = 1e-8;
const SPLIT_TOL: f64 = 0.3;
const MERGE_TOL: f64 = 0.4;
/// A local maximum counts as a peak when at least this fraction of the grid maximum.
const PEAK_FLOOR: f64 = 0.25;
const ECHO_NOISELESS_MIN: f64 = 0.999;
const ECHO_NOISY: (f64, f64) = (0.864, 0.964);
const TRANSFER_MIN: f64 = 0.97;
const TRANSFER_SPREAD: f64 = 0.03;
const ROUND_TRIP_MIN: f64 = 0.99;
const SHOT_SEEDS: u64 = 20;
const SHOT_MEDIAN_MIN: f64 = 0.90;
const SHOTS: u64 = 100;
const PURITY_WINDOW: (f64, f64) = (0.72, 0.92);
const PURITY_SEEDS: u64 = 10;
const CONVOLUTION_TOL: f64 = 0.01;
const CONSERVATION_TOL: f64 = 1e-8;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { pass, detail })
}

type Check = fn(&mut Context) -> Result<Verdict>;

struct Context {
    space: FockSpace,
    params: CouplingParams,
    alpha: C64,
    t_rev: f64,
    psi0: JointState,
    /// Every solver run in the suite, for the monotonicity and feasibility audit.
    solver_runs: Vec<(bool, bool)>,
}

impl Context {
    fn new() -> Result<Self> {
        let space = FockSpace::new(N)?;
        let params = CouplingParams::default();
        let alpha = C64::new(BETA, 0.0);
        Ok(Self {
            space,
            params,
            alpha,
            t_rev: revival_time(alpha, &params)?,
            psi0: JointState::down_coherent(alpha, space)?,
            solver_runs: Vec::new(),
        })
    }

    fn phonon_at(&self, fraction: f64) -> Result<DensityMatrix> {
        Ok(evolve_unitary(&self.psi0, &self.params, fraction * self.t_rev)?.phonon_state())
    }

    fn reconstruct(
        &mut self,
        samples: &QSamples,
        config: &ReconstructionConfig,
    ) -> Result<ReconstructionResult> {
        let r = reconstruct_density(samples, config)?;
        self.solver_runs
            .push((r.diagnostics.is_monotone(), r.diagnostics.is_feasible()));
        Ok(r)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn wrap(phase: f64) -> f64 {
    (phase + PI).rem_euclid(2.0 * PI) - PI
}

fn criterion_1(ctx: &mut Context) -> Result<Verdict> {
    let t = ctx.t_rev;
    verdict(
        (t - T_REV_EXPECTED).abs() <= T_REV_TOL,
        format!("t_rev = {:.4} us (want 108.8 ± 0.1)", t * 1e6),
    )
}

fn criterion_2(ctx: &mut Context) -> Result<Verdict> {
    let mut worst: f64 = 0.0;
    for n in 0..3usize {
        let rho = DensityMatrix::from_pure(&fock_state(n, ctx.space)?, Space::Phonon)?;
        let factorial = (1..=n).product::<usize>() as f64;
        for k in 0..=30 {
            let r = 0.1 * k as f64;
            for phase in [0.0, 1.1, -2.5] {
                let q = q_function(&rho, C64::from_polar(r, phase))?;
                let oracle = r.powi(2 * n as i32) * (-r * r).exp() / (PI * factorial);
                worst = worst.max((q - oracle).abs());
            }
        }
    }
    verdict(
        worst <= FOCK_Q_TOL,
        format!("max |Q − closed form| = {worst:.2e} (tol {FOCK_Q_TOL:e})"),
    )
}

/// Local maxima above `PEAK_FLOOR · max`, as (value, alpha), strongest first.
fn peaks(grid: &PhaseSpaceGrid, values: &[f64]) -> Vec<(f64, C64)> {
    let top = values.iter().copied().fold(0.0, f64::max);
    let alphas: Vec<C64> = grid.alphas().collect();
    let mut out: Vec<(f64, C64)> = grid
        .polar_local_maxima(values)
        .expect("polar grid")
        .into_iter()
        .filter(|&i| values[i] >= PEAK_FLOOR * top)
        .map(|i| (values[i], alphas[i]))
        .collect();
    out.sort_by(|a, b| b.0.total_cmp(&a.0));
    out
}

fn criterion_3(ctx: &mut Context) -> Result<Verdict> {
    let grid = PhaseSpaceGrid::paper_scan();
    let q_at = |f: f64| -> Result<Vec<f64>> { Ok(q_grid(&ctx.phonon_at(f)?, &grid)?.values()) };
    let initial = ctx.alpha.arg();

    let q0 = q_at(0.0)?;
    let raw0 = grid.polar_local_maxima(&q0).expect("polar grid").len();
    let start_ok = raw0 == 1;

    let half = peaks(&grid, &q_at(0.5)?);
    let (split_ok, separation) = match half.as_slice() {
        [a, b] => {
            let sep = wrap(a.1.arg() - b.1.arg()).abs();
            ((sep - PI).abs() <= SPLIT_TOL, sep)
        }
        _ => (false, f64::NAN),
    };

    let full = peaks(&grid, &q_at(1.0)?);
    let offset = full.first().map_or(f64::NAN, |p| wrap(p.1.arg() - initial).abs());
    let merge_ok = (offset - PI).abs() <= MERGE_TOL;

    let half_phases: Vec<String> = half.iter().map(|p| format!("{:+.3}", p.1.arg())).collect();
    verdict(
        start_ok && split_ok && merge_ok,
        format!(
            "t=0: {raw0} local max [{}]; t_rev/2: {} peaks at phases [{}], separation {separation:.3} rad \
             (want π ± {SPLIT_TOL}) [{}]; t_rev: dominant peak at {offset:.3} rad from start (want π ± {MERGE_TOL}) [{}]",
            ok(start_ok),
            half.len(),
            half_phases.join(", "),
            ok(split_ok),
            ok(merge_ok)
        ),
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "miss"
    }
}

fn criterion_4(ctx: &mut Context) -> Result<Verdict> {
    let schedule = EchoSchedule::half_revival(ctx.alpha, &ctx.params)?;
    let clean = echo_reverse_run(ctx.alpha, &ctx.params, None, ctx.space, &schedule)?.fidelity;
    let noisy = echo_reverse_run(
        ctx.alpha,
        &ctx.params,
        Some(&NoiseParams::paper_2016()),
        ctx.space,
        &schedule,
    )?
    .fidelity;
    verdict(
        clean > ECHO_NOISELESS_MIN && noisy >= ECHO_NOISY.0 && noisy <= ECHO_NOISY.1,
        format!(
            "noiseless {clean:.6} (want > {ECHO_NOISELESS_MIN}); paper-2016 {noisy:.4} (want [{}, {}])",
            ECHO_NOISY.0, ECHO_NOISY.1
        ),
    )
}

fn criterion_5(_: &mut Context) -> Result<Verdict> {
    let schedule = build_schedule(&SweepParams::paper_2016())?;
    let p: Vec<f64> = (1..=25)
        .map(|n| transfer_probability(n, &schedule))
        .collect::<Result<_>>()?;
    let min = p.iter().copied().fold(f64::INFINITY, f64::min);
    let max = p.iter().copied().fold(0.0, f64::max);
    verdict(
        min >= TRANSFER_MIN && max - min <= TRANSFER_SPREAD,
        format!(
            "min {min:.4} (want ≥ {TRANSFER_MIN}), spread {:.4} (want ≤ {TRANSFER_SPREAD})",
            max - min
        ),
    )
}

fn criterion_6(ctx: &mut Context) -> Result<Verdict> {
    let grid = PhaseSpaceGrid::paper_scan();
    let states = [
        (
            "vacuum",
            DensityMatrix::from_pure(&fock_state(0, ctx.space)?, Space::Phonon)?,
        ),
        (
            "|1.62⟩",
            DensityMatrix::from_pure(&coherent_state(ctx.alpha, ctx.space)?.amplitudes, Space::Phonon)?,
        ),
        ("t_rev/2", ctx.phonon_at(0.5)?),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, truth) in states {
        let start = Instant::now();
        let samples = q_grid(&truth, &grid)?;
        let r = ctx
            .reconstruct(&samples, &ReconstructionConfig::with_truncation(N_REC))?
            .with_reference(&truth)?;
        let f = r.fidelity_vs_reference.expect("reference set");
        pass &= f >= ROUND_TRIP_MIN;
        parts.push(format!("{name} {f:.4} ({:.1} s)", start.elapsed().as_secs_f64()));
    }
    verdict(
        pass,
        format!("fidelities {} (want ≥ {ROUND_TRIP_MIN})", parts.join(", ")),
    )
}

fn cartesian_wigner_grid() -> Result<PhaseSpaceGrid> {
    PhaseSpaceGrid::cartesian((-3.0, 3.0), (-3.0, 3.0), 0.1)
}

fn criterion_7(ctx: &mut Context) -> Result<Verdict> {
    let grid = PhaseSpaceGrid::paper_scan();
    let detector = DetectorModel::ideal(N);
    let config = ReconstructionConfig::with_truncation(N_REC);
    let wgrid = cartesian_wigner_grid()?;
    let half = ctx.phonon_at(0.5)?;
    let mut fidelities = Vec::new();
    for seed in 0..SHOT_SEEDS {
        let samples = simulate_q_experiment(&half, &grid, &detector, SHOTS, seed)?;
        let r = ctx.reconstruct(&samples, &config)?.with_reference(&half)?;
        fidelities.push(r.fidelity_vs_reference.expect("reference set"));
    }
    let med = median(fidelities);
    let mut negative = true;
    let mut mins = Vec::new();
    for f in [0.25, 0.5, 0.75] {
        let samples = simulate_q_experiment(&ctx.phonon_at(f)?, &grid, &detector, SHOTS, 0)?;
        let r = ctx.reconstruct(&samples, &config)?;
        let rep = report(&r, None, &wgrid)?;
        negative &= rep.negative;
        mins.push(format!("{f}: {:.3}", rep.wigner_min));
    }
    verdict(
        med >= SHOT_MEDIAN_MIN && negative,
        format!(
            "median fidelity over {SHOT_SEEDS} seeds {med:.4} (want ≥ {SHOT_MEDIAN_MIN}); min W [{}] (want < {:.4})",
            mins.join(", "),
            NEGATIVITY_THRESHOLD
        ),
    )
}

fn criterion_8(ctx: &mut Context) -> Result<Verdict> {
    let noiseless = ctx.phonon_at(0.5)?.purity();
    let noise = NoiseParams::paper_2016();
    let mut integrator = LindbladIntegrator::new(&ctx.params, &noise, ctx.space)?;
    let rho = integrator
        .evolve(&ctx.psi0.density(), 0.5 * ctx.t_rev, ctx.t_rev / 4096.0)?
        .partial_trace_internal()?;
    let detector = DetectorModel::paper_2016(&SweepParams::paper_2016(), N)?;
    let pipeline = RunConfig::default().reconstruction;
    let config = ReconstructionConfig {
        truncation: pipeline.truncation,
        max_radius: pipeline.max_radius,
        ..ReconstructionConfig::default()
    };
    let grid = PhaseSpaceGrid::paper_scan();
    let mut purities = Vec::new();
    for seed in 0..PURITY_SEEDS {
        let samples = simulate_q_experiment(&rho, &grid, &detector, SHOTS, seed)?;
        purities.push(ctx.reconstruct(&samples, &config)?.purity);
    }
    let med = median(purities);
    verdict(
        med >= PURITY_WINDOW.0 && med <= PURITY_WINDOW.1 && med < noiseless,
        format!(
            "median reconstructed purity over {PURITY_SEEDS} seeds {med:.4} (want [{}, {}]); simulated noisy {:.4}; \
             noiseless reference {noiseless:.4}",
            PURITY_WINDOW.0,
            PURITY_WINDOW.1,
            rho.purity()
        ),
    )
}

/// `max |Q − W ⊛ (2/π)e^{−2|·|²}|` relative to `max Q`, by quadrature on a square grid.
fn convolution_gap(rho: &DensityMatrix) -> Result<f64> {
    let h = 0.1;
    let half_width = 5.0;
    let k = (half_width / h) as i32;
    let mut w = Vec::new();
    for iy in -k..=k {
        for ix in -k..=k {
            let a = C64::new(ix as f64 * h, iy as f64 * h);
            w.push((a, wigner_function(rho, a)?));
        }
    }
    let probes: Vec<C64> = (0..5)
        .flat_map(|i| (0..5).map(move |j| C64::new(-2.0 + i as f64, -2.0 + j as f64)))
        .collect();
    let mut gap: f64 = 0.0;
    let mut top: f64 = 0.0;
    for beta in probes {
        let smoothed: f64 = w
            .iter()
            .map(|(a, wv)| wv * 2.0 / PI * (-2.0 * (a - beta).norm_sqr()).exp())
            .sum::<f64>()
            * h
            * h;
        let q = q_function(rho, beta)?;
        gap = gap.max((q - smoothed).abs());
        top = top.max(q);
    }
    Ok(gap / top)
}

fn criterion_9(ctx: &mut Context) -> Result<Verdict> {
    let small = FockSpace::new(16)?;
    let cat = {
        let b = C64::new(1.1, 0.3);
        let v = coherent_state(b, small)?.amplitudes + coherent_state(-b, small)?.amplitudes;
        DensityMatrix::from_pure(&v, Space::Phonon)?
    };
    let states = [
        DensityMatrix::from_pure(
            &coherent_state(C64::new(0.8, -0.5), small)?.amplitudes,
            Space::Phonon,
        )?,
        DensityMatrix::from_pure(&fock_state(2, small)?, Space::Phonon)?,
        cat,
        DensityMatrix::maximally_mixed(5).embed(16)?,
    ];
    let mut conv: f64 = 0.0;
    for s in &states {
        conv = conv.max(convolution_gap(s)?);
    }
    let conv_ok = conv <= CONVOLUTION_TOL;

    let op = excitation_operator(ctx.params.kind, ctx.space);
    let before = ctx.psi0.expectation(&op).re;
    let mut drift: f64 = 0.0;
    for f in [0.1, 0.37, 0.5, 0.83, 1.0, 1.4] {
        let state = evolve_unitary(&ctx.psi0, &ctx.params, f * ctx.t_rev)?;
        drift = drift.max((state.expectation(&op).re - before).abs());
    }
    let conserve_ok = drift <= CONSERVATION_TOL;

    let runs = ctx.solver_runs.len();
    let solver_ok = runs > 0 && ctx.solver_runs.iter().all(|&(m, f)| m && f);

    let config = RunConfig {
        times: vec![0.5],
        detector_profile: "paper-2016".into(),
        noise_profile: "paper-2016".into(),
        ..RunConfig::default()
    };
    let first = run(&Command::Qscan, &config).map_err(|e| vacuumq::Error::InvalidParameter(e.to_string()))?;
    let second =
        run(&Command::Qscan, &config).map_err(|e| vacuumq::Error::InvalidParameter(e.to_string()))?;
    let determinism_ok = first.files == second.files;

    verdict(
        conv_ok && conserve_ok && solver_ok && determinism_ok,
        format!(
            "Q–W convolution gap {:.1e} of max Q (tol {CONVOLUTION_TOL}) [{}]; excitation drift {drift:.1e} [{}]; {runs} solver runs \
             monotone and feasible [{}]; seeded qscan byte-identical [{}]",
            conv,
            ok(conv_ok),
            ok(conserve_ok),
            ok(solver_ok),
            ok(determinism_ok)
        ),
    )
}

fn main() {
    let mut ctx = Context::new().expect("context");
    let criteria: [(&str, Check); 9] = [
        ("revival time", criterion_1),
        ("Fock-state Q curves", criterion_2),
        ("bifurcation and merge", criterion_3),
        ("echo reversal", criterion_4),
        ("transfer uniformity", criterion_5),
        ("noiseless reconstruction round trip", criterion_6),
        ("reconstruction under shot noise", criterion_7),
        ("purity at half revival", criterion_8),
        ("property suites", criterion_9),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check(&mut ctx).unwrap_or_else(|e| Verdict {
            pass: false,
            detail: format!("error: {e}"),
        });
        if !v.pass {
            failures += 1;
        }
        println!(
            "{} criterion {} ({name}): {} [{:.1} s]",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
