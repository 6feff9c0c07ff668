use gpbec::lattice::{build_momentum_set, MomentumSet, PotentialSpec, Profile, TWO_PI};
use gpbec::scattering::*;
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

#[test]
fn ball_transform_at_zero_and_pi() {
    let v = PotentialSpec::unit_ball(1.0);
    assert!((v.fourier_coefficient([0.0; 3]) - 4.0 * PI / 3.0).abs() < 1e-14);
    assert!((v.fourier_coefficient([PI, 0.0, 0.0]) - 4.0 / PI).abs() < 1e-14);
    assert!((v.scaled_fourier_coefficient([0.0; 3], 10) - 4.0 * PI / 30.0).abs() < 1e-15);
}

fn quadrature_transform(v: &PotentialSpec, k: f64) -> f64 {
    // V̂(k) = 4π ∫ V(r) r sin(kr)/k dr, composite Simpson.
    let n = 20_000;
    let h = v.radius / n as f64;
    let f = |r: f64| {
        let s = if k == 0.0 { r } else { (k * r).sin() / k };
        4.0 * PI * v.value(r.min(v.radius * (1.0 - 1e-15))) * r * s
    };
    let mut sum = f(0.0) + f(v.radius);
    for i in 1..n {
        sum += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

proptest! {
    #[test]
    fn transform_matches_quadrature(k in 0.0f64..30.0, soft in any::<bool>(), r in 0.5f64..2.0) {
        let profile = if soft { Profile::SoftRadial } else { Profile::UniformBall };
        let v = PotentialSpec::new(profile, r, 1.3, 1.0).unwrap();
        let exact = quadrature_transform(&v, k);
        prop_assert!((v.fourier_radial(k) - exact).abs() < 1e-8 * (1.0 + exact.abs()));
    }

    #[test]
    fn transform_is_even_and_rotation_invariant(x in -9.0f64..9.0, y in -9.0f64..9.0, z in -9.0f64..9.0) {
        let v = PotentialSpec::unit_ball(1.0);
        let a = v.fourier_coefficient([x, y, z]);
        prop_assert_eq!(a, v.fourier_coefficient([-x, -y, -z]));
        prop_assert!((a - v.fourier_coefficient([z, x, y])).abs() < 1e-13);
    }

    #[test]
    fn momentum_sets_are_symmetric(c in 0.5f64..4.5) {
        let s = build_momentum_set(c * TWO_PI);
        prop_assert!(s.is_reflection_closed());
        for i in 0..s.len() {
            let p = s.point(i);
            prop_assert_eq!(s.point(s.negated(i)), [-p[0], -p[1], -p[2]]);
            prop_assert_eq!(s.index_of(p), Some(i));
        }
    }
}

#[test]
fn ode_closed_form_for_the_ball() {
    // Inside the ball u'' = (κ/2) u, so a = R − tanh(γR)/γ with γ = √(κ/2).
    for kappa in [0.02, 0.5, 2.0, 8.0] {
        let g = (kappa / 2.0f64).sqrt();
        let expect = 1.0 - g.tanh() / g;
        let a = ode_scattering_length(&PotentialSpec::unit_ball(kappa));
        assert!((a - expect).abs() < 1e-9, "κ = {kappa}: {a} vs {expect}");
    }
}

#[test]
fn born_and_ode_agree_below_divergence() {
    for kappa in [0.05, 0.2, 1.0] {
        for profile in [Profile::UniformBall, Profile::SoftRadial] {
            let v = PotentialSpec::new(profile, 1.0, 1.0, kappa).unwrap();
            let born = born_scattering_length(&v, &RadialDiscretization::default()).unwrap();
            assert!((born - ode_scattering_length(&v)).abs() < 1e-8);
        }
    }
}

#[test]
fn first_born_term_is_kappa_integral_over_eight_pi() {
    let v = PotentialSpec::unit_ball(0.3);
    // Partial sums use a single grid, so O(h²) discretization error remains.
    let sums = born_partial_sums(&v, &RadialDiscretization::default(), 2);
    assert!((sums[0] - 0.3 * v.integral() / (8.0 * PI)).abs() < 1e-8);
    assert!((sums[1] - (0.3 / 6.0 - 0.09 / 30.0)).abs() < 1e-8);
}

#[test]
fn born_series_diverges_at_strong_coupling() {
    let v = PotentialSpec::unit_ball(6.0);
    assert!(matches!(
        born_scattering_length(&v, &RadialDiscretization::default()),
        Err(ScatteringError::BornDivergence { .. })
    ));
    // The ODE has no such restriction.
    assert!(ode_scattering_length(&v) > 0.0);
}

fn two_mode_phi(v: &PotentialSpec, n: usize, p: [i32; 3]) -> f64 {
    let nf = n as f64;
    let k = [TWO_PI * p[0] as f64 / nf, TWO_PI * p[1] as f64 / nf, TWO_PI * p[2] as f64 / nf];
    let p2 = TWO_PI * TWO_PI * (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) as f64;
    let diag = v.fourier_coefficient([0.0; 3]) + v.fourier_coefficient([2.0 * k[0], 2.0 * k[1], 2.0 * k[2]]);
    -0.5 * v.kappa * v.fourier_coefficient(k) / (p2 + v.kappa * diag / (2.0 * nf))
}

#[test]
fn two_mode_instance_matches_closed_form() {
    let v = PotentialSpec::unit_ball(1.7);
    let s = Arc::new(MomentumSet::from_points(vec![[1, 2, 0], [-1, -2, 0]]).unwrap());
    for n in [1, 3, 10] {
        let sol = solve_lattice_scattering(&v, n, s.clone(), &SolverOptions::default()).unwrap();
        let expect = two_mode_phi(&v, n, [1, 2, 0]);
        for f in &sol.phi {
            assert!((f - expect).abs() < 1e-12);
        }
        let nf = n as f64;
        let k = TWO_PI * 5f64.sqrt() / nf;
        let a = v.kappa / (8.0 * PI) * (v.fourier_radial(0.0) + 2.0 * v.fourier_radial(k) * expect / nf);
        assert!((sol.scattering_length() - a).abs() < 1e-14);
    }
}

#[test]
fn backends_agree_and_residual_is_honest() {
    let v = PotentialSpec::unit_ball(0.4);
    let s = Arc::new(build_momentum_set(3.0 * TWO_PI));
    let dense = solve_lattice_scattering(&v, 6, s.clone(), &SolverOptions { backend: Backend::Dense, ..Default::default() }).unwrap();
    let fft = solve_lattice_scattering(&v, 6, s.clone(), &SolverOptions { backend: Backend::FftCg, ..Default::default() }).unwrap();
    let diff = dense.phi.iter().zip(&fft.phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-10, "{diff}");
    for sol in [&dense, &fft] {
        assert!(explicit_residual(&v, 6, &s, &sol.phi) <= 1e-10);
    }
}

#[test]
fn zero_coupling_is_trivial() {
    let v = PotentialSpec::unit_ball(0.0);
    let s = Arc::new(build_momentum_set(2.0 * TWO_PI));
    let sol = solve_lattice_scattering(&v, 4, s, &SolverOptions::default()).unwrap();
    assert!(sol.phi.iter().all(|&f| f == 0.0));
    assert_eq!(sol.scattering_length(), 0.0);
    assert_eq!(ode_scattering_length(&v), 0.0);
    assert_eq!(born_scattering_length(&v, &RadialDiscretization::default()).unwrap(), 0.0);
}

#[test]
fn phi_is_negative_near_the_origin_and_norms_scale_with_kappa() {
    let s = Arc::new(build_momentum_set(2.0 * TWO_PI));
    let mut per_kappa = Vec::new();
    for kappa in [0.01, 0.02] {
        let v = PotentialSpec::unit_ball(kappa);
        let sol = solve_lattice_scattering(&v, 8, s.clone(), &SolverOptions::default()).unwrap();
        assert_eq!(sol.sign_violations, 0);
        per_kappa.push(phi_norm_report(&sol).per_kappa());
    }
    // Linear response: norms divided by κ barely move when κ doubles.
    for (a, b) in per_kappa[0].iter().zip(&per_kappa[1]) {
        assert!((a - b).abs() < 0.05 * a.abs());
    }
}

#[test]
fn position_space_matches_momentum_solve() {
    let v = PotentialSpec::unit_ball(0.3);
    let s = Arc::new(build_momentum_set(2.0 * TWO_PI));
    let lattice = solve_lattice_scattering(&v, 6, s.clone(), &SolverOptions { tol: 1e-12, ..Default::default() }).unwrap();
    let pos = solve_position_space(&v, 6, s, 9, &SolverOptions { tol: 1e-12, ..Default::default() }).unwrap();
    let diff = lattice.phi.iter().zip(&pos.phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-10, "{diff}");
}

#[test]
fn convergence_errors_shrink_with_n() {
    let v = PotentialSpec::unit_ball(0.1);
    let study = convergence_study(&v, &[2, 4, 8], CutoffRule { factor: 2.0 }, &SolverOptions::default()).unwrap();
    let errs: Vec<f64> = study.rows.iter().map(|r| r.abs_err).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(study.slope.unwrap() < -0.5);
}

#[test]
fn rejects_bad_input() {
    let v = PotentialSpec::unit_ball(0.1);
    let empty = Arc::new(MomentumSet::from_points(vec![]).unwrap());
    assert!(solve_lattice_scattering(&v, 4, empty, &SolverOptions::default()).is_err());
    let s = Arc::new(build_momentum_set(TWO_PI));
    assert!(solve_lattice_scattering(&v, 4, s, &SolverOptions { tol: -1.0, ..Default::default() }).is_err());
    assert!(PotentialSpec::new(Profile::UniformBall, -1.0, 1.0, 0.1).is_err());
}
