//! Acceptance gate: one pass/fail line per criterion; exits nonzero if any fails.

use gpbec::bogoliubov::*;
use gpbec::cli::{execute, Cli, Command, RunConfig};
use gpbec::fock::{assemble, Couplings, FockBasis, OperatorTag, DEFAULT_DIM_CAP};
use gpbec::lattice::{build_momentum_set, MomentumSet, PotentialSpec, TWO_PI};
use gpbec::linalg::{SparseMatrix, Symmetry};
use gpbec::scattering::*;
use gpbec::spectra::*;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

const ORACLE_TOL: f64 = 1e-7;
const BORN_ODE_TOL: f64 = 1e-6;
const SLOPE_BAND: (f64, f64) = (-1.3, -0.7);
const BACKEND_TOL: f64 = 1e-9;
const CLOSED_FORM_TOL: f64 = 1e-12;
const ALGEBRA_TOL: f64 = 1e-13;
const IDENTITY_TOL: f64 = 1e-10;
const DOUBLING_SLACK: f64 = 1e-12;
const EIGEN_TOL: f64 = 1e-9;
const CONDENSATE_FRACTION: f64 = 0.9;
const UNITARY_TOL: f64 = 1e-10;
const GROWTH_STABILITY: f64 = 0.05;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn desk_set() -> Arc<MomentumSet> {
    Arc::new(build_momentum_set(TWO_PI))
}

fn solve(v: &PotentialSpec, n: usize, s: &Arc<MomentumSet>) -> ScatteringSolution {
    solve_lattice_scattering(v, n, s.clone(), &SolverOptions { tol: 1e-12, ..Default::default() }).unwrap()
}

fn criterion_1() -> Outcome {
    let ode = ode_scattering_length(&PotentialSpec::unit_ball(2.0));
    let exact = 1.0 - 1f64.tanh();
    let weak = PotentialSpec::unit_ball(0.2);
    let born = born_scattering_length(&weak, &RadialDiscretization::default()).unwrap();
    let gap = (born - ode_scattering_length(&weak)).abs();
    let err = (ode - exact).abs();
    outcome(
        err <= ORACLE_TOL && gap <= BORN_ODE_TOL,
        format!("|a_ode(κ=2) - (1 - tanh 1)| = {err:.2e} (tol {ORACLE_TOL:e}); |a_born - a_ode|(κ=0.2) = {gap:.2e} (tol {BORN_ODE_TOL:e})"),
    )
}

fn criterion_2() -> Outcome {
    let v = PotentialSpec::unit_ball(0.1);
    let study = convergence_study(&v, &[8, 16, 32], CutoffRule { factor: 4.0 }, &SolverOptions::default()).unwrap();
    let errs: Vec<String> = study.rows.iter().map(|r| format!("N={} err={:.3e}", r.n, r.abs_err)).collect();
    let slope = study.slope.unwrap_or(f64::NAN);
    outcome(
        slope >= SLOPE_BAND.0 && slope <= SLOPE_BAND.1,
        format!("log-log slope {slope:.4} (band [{}, {}]); {}", SLOPE_BAND.0, SLOPE_BAND.1, errs.join(", ")),
    )
}

fn criterion_3() -> Outcome {
    let v = PotentialSpec::unit_ball(0.1);
    let s = Arc::new(build_momentum_set(6.0 * TWO_PI));
    let dense = solve_lattice_scattering(&v, 10, s.clone(), &SolverOptions { backend: Backend::Dense, ..Default::default() }).unwrap();
    let fft = solve_lattice_scattering(&v, 10, s.clone(), &SolverOptions { backend: Backend::FftCg, ..Default::default() }).unwrap();
    let backend_gap = max_diff(&dense.phi, &fft.phi);

    // Two modes ±p: p² φ + (κ/2N)(V̂(0) + V̂(2p/N)) φ = −(κ/2) V̂(p/N).
    let strong = PotentialSpec::unit_ball(1.5);
    let pair = Arc::new(MomentumSet::from_points(vec![[2, 1, 0], [-2, -1, 0]]).unwrap());
    let n = 7;
    let k = TWO_PI * 5f64.sqrt() / n as f64;
    let p2 = TWO_PI * TWO_PI * 5.0;
    let phi = -0.5 * strong.kappa * strong.fourier_radial(k)
        / (p2 + strong.kappa / (2.0 * n as f64) * (strong.fourier_radial(0.0) + strong.fourier_radial(2.0 * k)));
    let two = solve_lattice_scattering(&strong, n, pair, &SolverOptions::default()).unwrap();
    let closed_gap = max_diff(&two.phi, &[phi, phi]);
    outcome(
        backend_gap <= BACKEND_TOL && closed_gap <= CLOSED_FORM_TOL,
        format!(
            "dense vs FFT-CG ℓ∞ = {backend_gap:.2e} on {} momenta (tol {BACKEND_TOL:e}); two-mode closed form {closed_gap:.2e} (tol {CLOSED_FORM_TOL:e})",
            s.len()
        ),
    )
}

fn criterion_4() -> Outcome {
    let s = Arc::new(build_momentum_set(3f64.sqrt() * TWO_PI));
    let modes = s.len() + 1;
    let v = PotentialSpec::unit_ball(0.5);
    let c = Couplings::new(v, 6, 0.8);
    // Assembly errors out if any term leaves the P = 0 sector.
    let basis = FockBasis::with_range(s.clone(), 0..=6, Some([0; 3]), DEFAULT_DIM_CAP).unwrap();
    let h = assemble(OperatorTag::Hmu, &basis, &c).unwrap();
    let number: Vec<f64> = (0..basis.dim()).map(|i| basis.particle_number(i) as f64).collect();
    let hn = h.commutator(&SparseMatrix::from_diagonal(&number)).max_abs();
    let mut sum = SparseMatrix::zeros(basis.dim(), Symmetry::Symmetric);
    for tag in [OperatorTag::H0, OperatorTag::H1, OperatorTag::H2, OperatorTag::Q2, OperatorTag::Q3, OperatorTag::Q4] {
        sum = sum.add_scaled(&assemble(tag, &basis, &c).unwrap(), 1.0);
    }
    let scale = h.max_abs().max(1.0);
    let defect = sum.add_scaled(&h, -1.0).max_abs();
    let n0 = assemble(OperatorTag::Nzero, &basis, &c).unwrap();
    let np = assemble(OperatorTag::Nplus, &basis, &c).unwrap();
    let nt = assemble(OperatorTag::Ntotal, &basis, &c).unwrap();
    let split = n0.add_scaled(&np, 1.0).add_scaled(&nt, -1.0).max_abs();

    // [H, P] needs states of different momenta: unconstrained basis on the same modes.
    let free = FockBasis::with_range(s.clone(), 0..=3, None, DEFAULT_DIM_CAP).unwrap();
    let hf = assemble(OperatorTag::Hmu, &free, &c).unwrap();
    let hp = (0..3)
        .map(|axis| {
            let p: Vec<f64> = (0..free.dim()).map(|i| TWO_PI * free.state_momentum(i)[axis] as f64).collect();
            hf.commutator(&SparseMatrix::from_diagonal(&p)).max_abs()
        })
        .fold(0.0, f64::max);
    outcome(
        hn <= ALGEBRA_TOL && hp <= ALGEBRA_TOL && defect <= ALGEBRA_TOL * scale && split == 0.0,
        format!(
            "{modes} modes, n ≤ 6, P = 0, dim {}: ‖[H,𝒩]‖ = {hn:.1e}; ‖[H,P]‖ = {hp:.1e} (unconstrained n ≤ 3, dim {}); \
             decomposition defect {defect:.2e} = {:.2e}·max|H| (tol {ALGEBRA_TOL:e} relative); 𝒩₀+𝒩₊-𝒩 = {split}",
            basis.dim(),
            free.dim(),
            defect / scale
        ),
    )
}

fn criterion_5() -> Outcome {
    // Two-mode instance with φ from the closed form.
    let pair = Arc::new(MomentumSet::from_points(vec![[1, 0, 0], [-1, 0, 0]]).unwrap());
    let v = PotentialSpec::unit_ball(0.8);
    let n_gp = 2;
    let k = TWO_PI / n_gp as f64;
    let phi = -0.5 * v.kappa * v.fourier_radial(k)
        / (TWO_PI * TWO_PI + v.kappa / (2.0 * n_gp as f64) * (v.fourier_radial(0.0) + v.fourier_radial(2.0 * k)));
    let basis = FockBasis::new(pair.clone(), 2, Some([0; 3])).unwrap();
    let (_, two) = commutator_identity_residual(&basis, &v, n_gp, &[phi, phi], half_cutoff_radius_sq(&pair)).unwrap();
    let (r0, _) = commutator_identity_residual(&basis, &v.with_kappa(0.0), n_gp, &[0.0, 0.0], 1).unwrap();
    let zero = r0.max_abs();

    // Cutoff doubling 2·2π → 4·2π at fixed Π (|n|² ≤ 1), sector n = 3, P = (1,0,0).
    let mut restricted = Vec::new();
    let mut dims = Vec::new();
    for factor in [2.0, 4.0] {
        let s = Arc::new(build_momentum_set(factor * TWO_PI));
        let b = FockBasis::new(s.clone(), 3, Some([1, 0, 0])).unwrap();
        let sol = solve(&v, 3, &s);
        let (_, rep) = commutator_identity_residual(&b, &v, 3, &sol.phi, 1).unwrap();
        restricted.push(rep.restricted_norm);
        dims.push(b.dim());
    }
    let non_increasing = restricted[1] <= restricted[0] + DOUBLING_SLACK;
    outcome(
        two.restricted_norm <= IDENTITY_TOL && two.norm <= IDENTITY_TOL && non_increasing && zero == 0.0,
        format!(
            "two-mode ‖ΠRΠ‖ = {:.1e}, full ‖R‖ = {:.1e} (tol {IDENTITY_TOL:e}); doubling dims {:?}: ‖ΠRΠ‖ {:.1e} → {:.1e} (slack {DOUBLING_SLACK:e}); κ = 0: max|R| = {zero}",
            two.restricted_norm, two.norm, dims, restricted[0], restricted[1]
        ),
    )
}

fn criterion_6() -> Outcome {
    let opts = EigenOptions::default();
    let mut worst_random = 0.0f64;
    for seed in 0..3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(500, 500, |_, _| rng.random::<f64>() - 0.5);
        let m = SparseMatrix::from_dense(&((&a + a.transpose()) * 0.5), Symmetry::Symmetric);
        let d = dense_ground_state(&m).unwrap().energy;
        let l = lanczos_ground_state(&m, &opts).unwrap().energy;
        worst_random = worst_random.max((d - l).abs());
    }
    let mut worst_sector = 0.0f64;
    let mut sectors = 0;
    let v = PotentialSpec::unit_ball(0.3);
    let families: [(f64, usize, &[[i32; 3]]); 3] = [
        (1.0, 12, &[[0, 0, 0], [1, 0, 0], [1, 1, 0]]),
        (2f64.sqrt(), 5, &[[0, 0, 0], [1, 0, 0]]),
        (3f64.sqrt(), 4, &[[0, 0, 0]]),
    ];
    for (radius, n_max, momenta) in families {
        let s = Arc::new(build_momentum_set(radius * TWO_PI));
        for &p in momenta {
            for n in 1..=n_max {
                let Ok(basis) = FockBasis::with_range(s.clone(), n..=n, Some(p), 2000) else { continue };
                if basis.dim() == 0 {
                    continue;
                }
                let h = assemble(OperatorTag::Hmu, &basis, &Couplings::new(v, 4, 0.5)).unwrap();
                let d = dense_ground_state(&h).unwrap().energy;
                let l = lanczos_ground_state(&h, &opts).unwrap().energy;
                worst_sector = worst_sector.max((d - l).abs());
                sectors += 1;
            }
        }
    }
    outcome(
        worst_random <= EIGEN_TOL && worst_sector <= EIGEN_TOL,
        format!("random dim 500: max |ΔE| = {worst_random:.1e}; {sectors} sectors with dim ≤ 2000: max |ΔE| = {worst_sector:.1e} (tol {EIGEN_TOL:e})"),
    )
}

fn criterion_7() -> Outcome {
    let s = desk_set();
    let eigen = EigenOptions::default();
    let mut all_variational = true;
    let mut instances = 0;
    let mut gaps = Vec::new();
    for kappa in [0.2, 0.1, 0.05] {
        let v = PotentialSpec::unit_ball(kappa);
        let (mu, _) = resolve_mu(&v, 6, &s, MuMode::EightPiA).unwrap();
        let r = trial_energy(&v, 6, &s, mu, &solve(&v, 6, &s), &eigen, UNITARY_TOL, DEFAULT_DIM_CAP).unwrap();
        gaps.push(r.trial_energy - r.exact_energy);
        all_variational &= r.trial_energy >= r.exact_energy;
        instances += 1;
    }
    let wide = Arc::new(build_momentum_set(2f64.sqrt() * TWO_PI));
    for (set, n) in [(&s, 4), (&s, 9), (&wide, 3), (&wide, 5)] {
        for kappa in [0.5, 0.1] {
            let v = PotentialSpec::unit_ball(kappa);
            let (mu, _) = resolve_mu(&v, n, set, MuMode::EightPiA).unwrap();
            let r = trial_energy(&v, n, set, mu, &solve(&v, n, set), &eigen, UNITARY_TOL, DEFAULT_DIM_CAP).unwrap();
            all_variational &= r.trial_energy >= r.exact_energy;
            instances += 1;
        }
    }
    let free = PotentialSpec::unit_ball(0.0);
    let mu = 0.9;
    let r0 = trial_energy(&free, 6, &s, mu, &solve(&free, 6, &s), &eigen, UNITARY_TOL, DEFAULT_DIM_CAP).unwrap();
    let exact_at_zero = r0.trial_energy == -mu * 6.0 && r0.exact_energy == -mu * 6.0;
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    outcome(
        all_variational && exact_at_zero && decreasing,
        format!(
            "trial ≥ exact on {instances} instances: {all_variational}; κ = 0: trial {} exact {} (−μN = {}); gaps κ = 0.2, 0.1, 0.05: {:.3e}, {:.3e}, {:.3e}",
            r0.trial_energy,
            r0.exact_energy,
            -mu * 6.0,
            gaps[0],
            gaps[1],
            gaps[2]
        ),
    )
}

fn criterion_8() -> Outcome {
    let s = desk_set();
    let mut depletion = Vec::new();
    let mut occupation = 0.0;
    for kappa in [0.05, 0.1, 0.2] {
        let v = PotentialSpec::unit_ball(kappa);
        let (mu, _) = resolve_mu(&v, 6, &s, MuMode::EightPiA).unwrap();
        let r = sector_ground_state(&v, 6, &s, 6, [0; 3], mu, &EigenOptions::default(), DEFAULT_DIM_CAP).unwrap();
        if kappa == 0.05 {
            occupation = r.condensate_occupation;
        }
        depletion.push(r.depletion);
    }
    let increasing = depletion.windows(2).all(|w| w[1] > w[0]);
    outcome(
        occupation > CONDENSATE_FRACTION * 6.0 && increasing,
        format!(
            "{} excited modes, N = n = 6: condensate occupation {occupation:.6} (> {:.1}); depletion κ = 0.05, 0.1, 0.2: {:.3e}, {:.3e}, {:.3e}",
            s.len(),
            CONDENSATE_FRACTION * 6.0,
            depletion[0],
            depletion[1],
            depletion[2]
        ),
    )
}

fn criterion_9() -> Outcome {
    let s = desk_set();
    let v = PotentialSpec::unit_ball(0.1);
    let basis = FockBasis::new(s.clone(), 6, Some([0; 3])).unwrap();
    let b = generator(&basis, &v, 6, &solve(&v, 6, &s).phi).unwrap();
    let grid = symmetric_t_grid(21);
    let small = nplus_growth_check(&basis, &b, &grid, 200, 2024, UNITARY_TOL).unwrap();
    let large = nplus_growth_check(&basis, &b, &grid, 400, 2024, UNITARY_TOL).unwrap();
    let drift = small.max_norm_drift.max(large.max_norm_drift);
    let changes: Vec<f64> = (0..3).map(|k| (large.max_ratio[k] - small.max_ratio[k]).abs() / small.max_ratio[k]).collect();
    let stable = changes.iter().all(|&c| c < GROWTH_STABILITY) && large.max_ratio.iter().all(|r| r.is_finite());
    outcome(
        drift <= UNITARY_TOL && stable,
        format!(
            "norm drift {drift:.1e} (tol {UNITARY_TOL:e}); max ratios k=1,2,3 at 200: {:.5?}, at 400: {:.5?}; relative changes [{}] (tol {GROWTH_STABILITY})",
            small.max_ratio,
            large.max_ratio,
            changes.iter().map(|c| format!("{c:.2e}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("reference.toml");
    std::fs::write(
        &config,
        "rng_seed = 42\npotential.profile = \"uniform_ball\"\npotential.radius = 1.0\npotential.height = 1.0\n\
         potential.kappa = 0.1\ngp.N = 16\ngp.cutoff_factor = 4.0\nsector.n_min = 4\nsector.n_max = 8\n\
         growth.trials = 50\n",
    )
    .unwrap();
    let mut identical = true;
    let mut embeds = true;
    let mut compared = Vec::new();
    for command in [Command::Scattering, Command::Ed, Command::Identity] {
        let runs: Vec<_> = ["a", "b"]
            .iter()
            .map(|tag| {
                let out = dir.path().join(format!("{}_{tag}", command.name()));
                let cli = Cli { command, config: Some(config.clone()), out: Some(out.clone()), seed: Some(7) };
                execute(&cli).unwrap();
                out
            })
            .collect();
        for entry in std::fs::read_dir(&runs[0]).unwrap() {
            let name = entry.unwrap().file_name().to_string_lossy().into_owned();
            if name.ends_with(".csv") {
                identical &= std::fs::read(runs[0].join(&name)).unwrap() == std::fs::read(runs[1].join(&name)).unwrap();
                compared.push(name);
            }
        }
        let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(runs[0].join("manifest.json")).unwrap()).unwrap();
        let mut resolved = RunConfig::load(&config).unwrap();
        resolved.rng_seed = 7;
        resolved.output.dir = runs[0].clone();
        embeds &= manifest["config"] == serde_json::to_value(&resolved).unwrap();
    }
    compared.sort();
    outcome(
        identical && embeds && !compared.is_empty(),
        format!("byte-identical CSVs {compared:?}: {identical}; manifest embeds resolved config: {embeds}"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("scattering-length oracle triangle", criterion_1),
        ("convergence rate of a_N", criterion_2),
        ("solver backend equivalence", criterion_3),
        ("operator algebra suite", criterion_4),
        ("commutator identity", criterion_5),
        ("eigensolver correctness", criterion_6),
        ("variational dominance and κ → 0 limit", criterion_7),
        ("condensation at desk scale", criterion_8),
        ("unitarity and 𝒩₊ growth", criterion_9),
        ("reproducibility", criterion_10),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} [{tag}] {name}: {} ({:.1}s)", i + 1, o.detail, start.elapsed().as_secs_f64());
        if !o.pass {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
