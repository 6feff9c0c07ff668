use super::config::{Format, RunConfig};
use super::output::{fmt_f64, Check, OutputDir, Table};
use super::{CliError, Command};
use crate::bogoliubov::{
    commutator_identity_residual, generator, half_cutoff_radius_sq, nplus_commutator_check, nplus_growth_check,
    symmetric_t_grid, trial_energy, GrowthReport,
};
use crate::fock::{FockBasis, FockError};
use crate::lattice::{build_momentum_set, MomentumSet, PotentialSpec, TWO_PI};
use crate::scattering::{
    born_scattering_length, convergence_study, fit_loglog_slope, ode_scattering_length, phi_norm_report,
    solve_lattice_scattering, CutoffRule, RadialDiscretization, ScatteringSolution, SolverOptions,
};
use crate::spectra::{grand_canonical_scan, resolve_mu, EigenOptions};
use serde_json::{json, Value};
use std::sync::Arc;

/// Tolerance for the commutator-identity and `[𝒩₊, ℬ]` checks.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Slack for "non-increasing" comparisons between roundoff-level residuals.
pub const DOUBLING_SLACK: f64 = 1e-12;
/// The cutoff-doubling comparison is skipped above this basis dimension.
pub const DOUBLING_DIM_LIMIT: usize = 20_000;
/// Allowed relative change of the growth maxima when the trial count doubles.
pub const GROWTH_STABILITY: f64 = 0.05;

pub(super) fn run(command: Command, config: &RunConfig) -> Result<Vec<String>, CliError> {
    let mut out = OutputDir::new(config.output.dir.clone());
    let result = match command {
        Command::Scattering => scattering(config, &mut out),
        Command::Convergence => convergence(config, &mut out),
        Command::Ed => ed(config, &mut out),
        Command::Trial => trial(config, &mut out),
        Command::Identity => identity(config, &mut out),
    };
    let status = match &result {
        Ok(()) => json!("ok"),
        Err(e) => json!({ "failed": e.to_string() }),
    };
    let manifest = json!({
        "artifact": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command.name(),
        "status": status,
        "seed": config.rng_seed,
        "tolerances": {
            "linear": config.solver.tol_linear,
            "eigen": config.solver.tol_eigen,
            "unitary": config.solver.tol_unitary,
            "identity": IDENTITY_TOL,
            "doubling_slack": DOUBLING_SLACK,
            "growth_stability": GROWTH_STABILITY,
        },
        "config": config,
        "outputs": out.written(),
    });
    out.write_json("manifest.json", &manifest)?;
    result.map(|()| out.written().to_vec())
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

fn solver_options(config: &RunConfig) -> SolverOptions {
    SolverOptions { tol: config.solver.tol_linear, backend: config.solver.backend, max_iter: None }
}

fn eigen_options(config: &RunConfig) -> EigenOptions {
    EigenOptions { tol: config.solver.tol_eigen, seed: config.rng_seed, ..EigenOptions::default() }
}

fn fock_momenta(config: &RunConfig, factor: f64) -> Arc<MomentumSet> {
    Arc::new(build_momentum_set(factor * config.sector.mode_cutoff * TWO_PI))
}

fn born_or_null(v: &PotentialSpec) -> (Value, Value) {
    match born_scattering_length(v, &RadialDiscretization::default()) {
        Ok(a) => (json!(a), Value::Null),
        Err(e) => (Value::Null, json!(e.to_string())),
    }
}

fn scattering(config: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let v = config.potential();
    let n = config.n();
    let cutoff = CutoffRule { factor: config.gp.cutoff_factor }.cutoff(n);
    let momenta = Arc::new(build_momentum_set(cutoff));
    let a_ode = ode_scattering_length(&v);
    let (a_born, born_error) = born_or_null(&v);
    let sol = match solve_lattice_scattering(&v, n, momenta.clone(), &solver_options(config)) {
        Ok(sol) => sol,
        Err(e) => {
            if config.wants(Format::Json) {
                out.write_json(
                    "scattering.json",
                    &json!({ "partial": true, "error": e.to_string(), "N": n, "cutoff": cutoff,
                             "a_ode": a_ode, "a_born": a_born, "born_error": born_error }),
                )?;
            }
            return Err(numerical(e));
        }
    };
    if config.wants(Format::Csv) {
        let mut t = Table::new(&["px", "py", "pz", "phi"]);
        for (p, f) in momenta.points().iter().zip(&sol.phi) {
            t.row([p[0].to_string(), p[1].to_string(), p[2].to_string(), fmt_f64(*f)]);
        }
        out.write("phi.csv", &t.into_bytes())?;
    }
    if config.wants(Format::Json) {
        let residual_ok = sol.residual_norm <= config.solver.tol_linear;
        let checks = vec![Check {
            check_name: "linear_residual".into(),
            parameters: json!({ "N": n, "cutoff": cutoff }),
            residual_or_ratio: sol.residual_norm,
            tolerance: config.solver.tol_linear,
            pass_flag: residual_ok,
            seed: config.rng_seed,
        }];
        out.write_json(
            "scattering.json",
            &json!({
                "partial": false,
                "N": n,
                "cutoff": cutoff,
                "momenta": momenta.len(),
                "a_lattice": sol.scattering_length(),
                "a_born": a_born,
                "born_error": born_error,
                "a_ode": a_ode,
                "residual_norm": sol.residual_norm,
                "iterations": sol.iterations,
                "backend": sol.backend,
                "sign_violations": sol.sign_violations,
                "phi_norms": phi_norm_report(&sol),
                "checks": checks,
            }),
        )?;
    }
    Ok(())
}

fn convergence(config: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let v = config.potential();
    let rule = CutoffRule { factor: config.gp.cutoff_factor };
    let opts = solver_options(config);
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for n in config.n_list() {
        match convergence_study(&v, &[n], rule, &opts) {
            Ok(study) => rows.extend(study.rows),
            Err(e) => {
                log::warn!("N = {n}: {e}");
                failures.push(json!({ "N": n, "error": e.to_string() }));
            }
        }
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.abs_err).collect();
    let slope = fit_loglog_slope(&xs, &ys);
    if config.wants(Format::Csv) {
        let mut t = Table::new(&["N", "cutoff", "a_lattice", "a_ode", "abs_err"]);
        for r in &rows {
            t.row([r.n.to_string(), fmt_f64(r.cutoff), fmt_f64(r.a_lattice), fmt_f64(r.a_ode), fmt_f64(r.abs_err)]);
        }
        out.write("convergence.csv", &t.into_bytes())?;
    }
    if config.wants(Format::Json) {
        let checks: Vec<Check> = slope
            .map(|s| Check {
                check_name: "loglog_slope".into(),
                parameters: json!({ "N_list": config.n_list(), "cutoff_factor": rule.factor, "expected": -1.0 }),
                residual_or_ratio: s,
                tolerance: 0.3,
                pass_flag: (s + 1.0).abs() <= 0.3,
                seed: config.rng_seed,
            })
            .into_iter()
            .collect();
        out.write_json("convergence.json", &json!({ "rows": rows, "failures": failures, "slope": slope, "checks": checks }))?;
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("{} of {} solves failed", failures.len(), config.n_list().len())))
    }
}

fn ed(config: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let v = config.potential();
    let momenta = fock_momenta(config, 1.0);
    let (lo, hi) = config.n_range();
    let eigen = eigen_options(config);
    let scan = grand_canonical_scan(
        &v,
        config.n(),
        config.mu_mode(),
        &momenta,
        lo..=hi,
        config.sector.total_momentum,
        &eigen,
        config.solver.dim_cap,
    )
    .map_err(numerical)?;
    if config.wants(Format::Csv) {
        let mut t = Table::new(&[
            "n",
            "energy",
            "depletion",
            "condensate_occupation",
            "dim",
            "solver_iters",
            "residual",
            "status",
        ]);
        for n in lo..=hi {
            if let Some(r) = scan.reports.iter().find(|r| r.n == n) {
                t.row([
                    n.to_string(),
                    fmt_f64(r.energy),
                    fmt_f64(r.depletion),
                    fmt_f64(r.condensate_occupation),
                    r.dim.to_string(),
                    r.solver_iters.to_string(),
                    fmt_f64(r.residual),
                    "ok".to_string(),
                ]);
            } else {
                let blank = String::new;
                t.row([n.to_string(), blank(), blank(), blank(), blank(), blank(), blank(), "over_dim_cap".into()]);
            }
        }
        out.write("scan.csv", &t.into_bytes())?;
    }
    if config.wants(Format::Json) {
        let checks: Vec<Check> = scan
            .reports
            .iter()
            .map(|r| {
                let tol = config.solver.tol_eigen * r.energy.abs().max(1.0);
                Check {
                    check_name: format!("eigen_residual_n{}", r.n),
                    parameters: json!({ "n": r.n, "dim": r.dim }),
                    residual_or_ratio: r.residual,
                    tolerance: tol,
                    pass_flag: r.residual <= tol,
                    seed: config.rng_seed,
                }
            })
            .collect();
        out.write_json(
            "ed.json",
            &json!({
                "modes": momenta.len() + 1,
                "mu": scan.mu,
                "a_lattice": scan.a_lattice,
                "argmin": scan.argmin,
                "fit_vertex": scan.fit_vertex,
                "predicted_vertex": scan.predicted_vertex,
                "skipped": scan.skipped,
                "reports": scan.reports,
                "checks": checks,
            }),
        )?;
    }
    Ok(())
}

fn phi_on(v: &PotentialSpec, n: usize, momenta: &Arc<MomentumSet>, config: &RunConfig) -> Result<ScatteringSolution, CliError> {
    solve_lattice_scattering(v, n, momenta.clone(), &SolverOptions { tol: config.solver.tol_linear.min(1e-12), ..solver_options(config) })
        .map_err(numerical)
}

fn trial(config: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let momenta = fock_momenta(config, 1.0);
    let eigen = eigen_options(config);
    let mut reports = Vec::new();
    for n in config.n_list() {
        for kappa in config.kappa_list() {
            let v = config.potential().with_kappa(kappa);
            let (mu, _) = resolve_mu(&v, n, &momenta, config.mu_mode()).map_err(numerical)?;
            let sol = phi_on(&v, n, &momenta, config)?;
            let r = trial_energy(&v, n, &momenta, mu, &sol, &eigen, config.solver.tol_unitary, config.solver.dim_cap)
                .map_err(numerical)?;
            reports.push((kappa, r));
        }
    }
    if config.wants(Format::Csv) {
        let mut t = Table::new(&[
            "N",
            "kappa",
            "mu",
            "trial_energy",
            "exact_energy",
            "gap",
            "condensate_energy",
            "norm_drift",
            "dim",
        ]);
        for (kappa, r) in &reports {
            t.row([
                r.n.to_string(),
                fmt_f64(*kappa),
                fmt_f64(r.mu),
                fmt_f64(r.trial_energy),
                fmt_f64(r.exact_energy),
                fmt_f64(r.trial_energy - r.exact_energy),
                fmt_f64(r.condensate_energy),
                fmt_f64(r.norm_drift),
                r.dim.to_string(),
            ]);
        }
        out.write("trial.csv", &t.into_bytes())?;
    }
    if config.wants(Format::Json) {
        let mut checks = Vec::new();
        for (kappa, r) in &reports {
            let slack = config.solver.tol_eigen * r.exact_energy.abs().max(1.0);
            checks.push(Check {
                check_name: "variational".into(),
                parameters: json!({ "N": r.n, "kappa": kappa }),
                residual_or_ratio: r.trial_energy - r.exact_energy,
                tolerance: slack,
                pass_flag: r.trial_energy - r.exact_energy >= -slack,
                seed: config.rng_seed,
            });
            checks.push(Check {
                check_name: "unitarity".into(),
                parameters: json!({ "N": r.n, "kappa": kappa }),
                residual_or_ratio: r.norm_drift,
                tolerance: config.solver.tol_unitary,
                pass_flag: r.norm_drift <= config.solver.tol_unitary,
                seed: config.rng_seed,
            });
        }
        let rows: Vec<Value> = reports.iter().map(|(k, r)| json!({ "kappa": k, "report": r })).collect();
        out.write_json("trial.json", &json!({ "rows": rows, "checks": checks }))?;
    }
    Ok(())
}

fn identity(config: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let v = config.potential();
    let n = config.n();
    let (lo, hi) = config.n_range();
    let p = Some(config.sector.total_momentum);
    let seed = config.rng_seed;
    let momenta = fock_momenta(config, 1.0);
    let sol = phi_on(&v, n, &momenta, config)?;
    let basis = FockBasis::with_range(momenta.clone(), lo..=hi, p, config.solver.dim_cap).map_err(numerical)?;
    let radius_sq = half_cutoff_radius_sq(&momenta);
    let (_, base) = commutator_identity_residual(&basis, &v, n, &sol.phi, radius_sq).map_err(numerical)?;

    let doubled_momenta = fock_momenta(config, 2.0);
    let doubled = match FockBasis::with_range(doubled_momenta.clone(), lo..=hi, p, DOUBLING_DIM_LIMIT) {
        Ok(b) => {
            let sol2 = phi_on(&v, n, &doubled_momenta, config)?;
            Some(commutator_identity_residual(&b, &v, n, &sol2.phi, radius_sq).map_err(numerical)?.1)
        }
        Err(FockError::DimensionOverflow { .. }) => None,
        Err(e) => return Err(numerical(e)),
    };

    let nplus = nplus_commutator_check(&basis, &v, n, &sol.phi).map_err(numerical)?;
    let b = generator(&basis, &v, n, &sol.phi).map_err(numerical)?;
    let grid = symmetric_t_grid(config.growth.t_points);
    let trials = config.growth.trials;
    let growth = nplus_growth_check(&basis, &b, &grid, trials, seed, config.solver.tol_unitary).map_err(numerical)?;
    let growth2 = nplus_growth_check(&basis, &b, &grid, 2 * trials, seed, config.solver.tol_unitary).map_err(numerical)?;

    if config.wants(Format::Csv) {
        let mut t = Table::new(&["k", "trials", "max_ratio"]);
        for g in [&growth, &growth2] {
            for (k, r) in g.max_ratio.iter().enumerate() {
                t.row([(k + 1).to_string(), g.trials.to_string(), fmt_f64(*r)]);
            }
        }
        out.write("growth.csv", &t.into_bytes())?;
    }
    if config.wants(Format::Json) {
        let params = json!({ "N": n, "n_min": lo, "n_max": hi, "modes": momenta.len() + 1, "dim": basis.dim(),
                             "inner_radius_sq": radius_sq, "inner_dim": base.inner_dim });
        let check = |name: &str, parameters: Value, value: f64, tolerance: f64, pass: bool| Check {
            check_name: name.into(),
            parameters,
            residual_or_ratio: value,
            tolerance,
            pass_flag: pass,
            seed,
        };
        let mut checks = vec![
            check("commutator_identity_inner", params.clone(), base.restricted_norm, IDENTITY_TOL, base.restricted_norm <= IDENTITY_TOL),
            check("commutator_identity_full", params.clone(), base.norm, IDENTITY_TOL, base.norm <= IDENTITY_TOL),
            check(
                "nplus_commutator",
                params.clone(),
                nplus.deviation_full,
                IDENTITY_TOL,
                nplus.deviation_full <= IDENTITY_TOL,
            ),
            check(
                "unitarity",
                json!({ "t_points": grid.len(), "trials": 2 * trials }),
                growth.max_norm_drift.max(growth2.max_norm_drift),
                config.solver.tol_unitary,
                growth.max_norm_drift.max(growth2.max_norm_drift) <= config.solver.tol_unitary,
            ),
        ];
        if let Some(d) = &doubled {
            let increase = d.restricted_norm - base.restricted_norm;
            checks.push(check(
                "commutator_identity_doubling",
                json!({ "base_dim": base.dim, "doubled_dim": d.dim, "inner_radius_sq": radius_sq }),
                increase,
                DOUBLING_SLACK,
                increase <= DOUBLING_SLACK,
            ));
        }
        for k in 0..3 {
            let change = relative_change(&growth, &growth2, k);
            checks.push(check(
                &format!("nplus_growth_k{}", k + 1),
                json!({ "trials": [trials, 2 * trials], "max_ratio": [growth.max_ratio[k], growth2.max_ratio[k]] }),
                change,
                GROWTH_STABILITY,
                growth2.max_ratio[k].is_finite() && change < GROWTH_STABILITY,
            ));
        }
        out.write_json(
            "identity.json",
            &json!({
                "commutator": base,
                "commutator_doubled": doubled,
                "nplus_commutator": nplus,
                "growth": [growth, growth2],
                "checks": checks,
            }),
        )?;
    }
    Ok(())
}

fn relative_change(a: &GrowthReport, b: &GrowthReport, k: usize) -> f64 {
    (b.max_ratio[k] - a.max_ratio[k]).abs() / a.max_ratio[k].abs().max(f64::MIN_POSITIVE)
}
