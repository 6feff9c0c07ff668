//! Sector ground states, grand-canonical scans over the particle number and the
//! condensate observables.

mod eigen;

pub use eigen::{dense_ground_state, ground_state, lanczos_ground_state, EigenMethod, EigenOptions, Eigenpair};

use crate::fock::{assemble, expected_n_plus, one_particle_density_matrix, Couplings, FockBasis, FockError, OperatorTag};
use crate::lattice::{LatticePoint, MomentumSet, PotentialSpec};
use crate::linalg::{dot, LinearOperator};
use crate::scattering::{lattice_scattering_length, solve_lattice_scattering, ScatteringError, SolverOptions};
use nalgebra::SymmetricEigen;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::ops::RangeInclusive;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectraError {
    #[error("operator has dimension zero")]
    EmptyOperator,
    #[error("eigensolver did not converge (best energy {energy}, residual {residual:e})")]
    NoConvergence { energy: f64, residual: f64, vector: Vec<f64> },
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Scattering(#[from] ScatteringError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum MuMode {
    /// `μ = 8π a_N` with `a_N` computed on the same momenta and `N`.
    EightPiA,
    Explicit(f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundStateReport {
    pub n: usize,
    pub total_momentum: LatticePoint,
    pub energy: f64,
    pub depletion: f64,
    pub condensate_occupation: f64,
    pub dim: usize,
    pub solver_iters: usize,
    pub residual: f64,
    /// `⟨Ω, H_μ Ω⟩` for the pure condensate, when it lies in the sector.
    pub condensate_energy: Option<f64>,
}

/// `(⟨𝒩₊⟩, largest eigenvalue of γ_ψ)`.
pub fn depletion_and_condensate(state: &[f64], basis: &FockBasis) -> (f64, f64) {
    let gamma = one_particle_density_matrix(state, basis);
    let top = SymmetricEigen::new(gamma).eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (expected_n_plus(state, basis), top)
}

/// Ground state of `H_μ` in the `(n, P)` sector.
pub fn sector_ground_state(
    v: &PotentialSpec,
    n_gp: usize,
    momenta: &Arc<MomentumSet>,
    n: usize,
    total_momentum: LatticePoint,
    mu: f64,
    eigen: &EigenOptions,
    dim_cap: usize,
) -> Result<GroundStateReport, SpectraError> {
    let basis = FockBasis::with_range(momenta.clone(), n..=n, Some(total_momentum), dim_cap)?;
    let h = assemble(OperatorTag::Hmu, &basis, &Couplings::new(*v, n_gp, mu))?;
    let pair = ground_state(&h, eigen)?;
    let (depletion, condensate_occupation) = depletion_and_condensate(&pair.vector, &basis);
    let condensate_energy = basis.condensate_index(n).filter(|_| total_momentum == [0; 3]).map(|i| h.get(i, i));
    Ok(GroundStateReport {
        n,
        total_momentum,
        energy: pair.energy,
        depletion,
        condensate_occupation,
        dim: basis.dim(),
        solver_iters: pair.iterations,
        residual: pair.residual,
        condensate_energy,
    })
}

/// `μ` for the given mode, together with the `a_N` it was derived from.
pub fn resolve_mu(
    v: &PotentialSpec,
    n_gp: usize,
    momenta: &Arc<MomentumSet>,
    mode: MuMode,
) -> Result<(f64, Option<f64>), SpectraError> {
    match mode {
        MuMode::Explicit(mu) => Ok((mu, None)),
        MuMode::EightPiA => {
            let a = if momenta.is_empty() || v.kappa == 0.0 {
                lattice_scattering_length(v, n_gp, momenta, &vec![0.0; momenta.len()])
            } else {
                solve_lattice_scattering(v, n_gp, momenta.clone(), &SolverOptions { tol: 1e-12, ..Default::default() })?
                    .scattering_length()
            };
            Ok((8.0 * PI * a, Some(a)))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanResult {
    pub mu: f64,
    pub a_lattice: Option<f64>,
    pub reports: Vec<GroundStateReport>,
    /// Sectors whose basis exceeded the dimension cap.
    pub skipped: Vec<usize>,
    /// Particle number of the lowest sector energy.
    pub argmin: Option<usize>,
    /// Vertex of the least-squares parabola through `(n, E_n)`.
    pub fit_vertex: Option<f64>,
    /// `N μ / (8π a_N)`.
    pub predicted_vertex: Option<f64>,
}

/// One ground state per `n ∈ n_range` in the sector of total momentum `total_momentum`.
pub fn grand_canonical_scan(
    v: &PotentialSpec,
    n_gp: usize,
    mu_mode: MuMode,
    momenta: &Arc<MomentumSet>,
    n_range: RangeInclusive<usize>,
    total_momentum: LatticePoint,
    eigen: &EigenOptions,
    dim_cap: usize,
) -> Result<ScanResult, SpectraError> {
    let (mu, a_lattice) = resolve_mu(v, n_gp, momenta, mu_mode)?;
    let outcomes: Vec<(usize, Result<GroundStateReport, SpectraError>)> = n_range
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| (n, sector_ground_state(v, n_gp, momenta, n, total_momentum, mu, eigen, dim_cap)))
        .collect();
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for (n, outcome) in outcomes {
        match outcome {
            Ok(r) => reports.push(r),
            Err(SpectraError::Fock(FockError::DimensionOverflow { .. })) => {
                log::warn!("sector n = {n} exceeds the dimension cap; skipped");
                skipped.push(n);
            }
            Err(e) => return Err(e),
        }
    }
    let argmin = reports.iter().min_by(|a, b| a.energy.total_cmp(&b.energy)).map(|r| r.n);
    let points: Vec<(f64, f64)> = reports.iter().map(|r| (r.n as f64, r.energy)).collect();
    let fit_vertex = quadratic_fit(&points).and_then(|[_, c1, c2]| (c2 > 0.0).then(|| -c1 / (2.0 * c2)));
    let predicted_vertex = a_lattice.filter(|&a| a > 0.0).map(|a| n_gp as f64 * mu / (8.0 * PI * a));
    Ok(ScanResult { mu, a_lattice, reports, skipped, argmin, fit_vertex, predicted_vertex })
}

/// Least-squares coefficients `[c0, c1, c2]` of `c0 + c1 x + c2 x²`.
pub fn quadratic_fit(points: &[(f64, f64)]) -> Option<[f64; 3]> {
    if points.len() < 3 {
        return None;
    }
    let shift = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;
    let a = nalgebra::DMatrix::from_fn(points.len(), 3, |i, j| (points[i].0 - shift).powi(j as i32));
    let b = nalgebra::DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let c = a.clone().svd(true, true).solve(&b, 1e-12).ok()?;
    // Undo the shift x -> x - s.
    let (d0, d1, d2) = (c[0], c[1], c[2]);
    Some([d0 - d1 * shift + d2 * shift * shift, d1 - 2.0 * d2 * shift, d2])
}

#[derive(Debug, Clone, Serialize)]
pub struct PositivityReport {
    pub mu: f64,
    pub a_lattice: f64,
    pub energies: Vec<(usize, f64)>,
    pub min_energy: f64,
    pub min_n: usize,
    pub all_nonnegative: bool,
    /// Whether `E` increases with `n` from the minimizing sector onwards.
    pub monotone_beyond_minimizer: bool,
    /// `4π a_N N ((n/N) − 1)² − 4π a_N N` at the smallest scanned `n`.
    pub model_at_start: f64,
    /// Positivity is asserted only when the quadratic model predicts it.
    pub model_predicts_positive: bool,
}

/// `4π a N ((n/N) − 1)² − 4π a N`.
pub fn quadratic_energy_model(a: f64, n_gp: usize, n: usize) -> f64 {
    let nf = n_gp as f64;
    4.0 * PI * a * nf * ((n as f64 / nf) - 1.0).powi(2) - 4.0 * PI * a * nf
}

/// Sector ground energies for `n ∈ n_range` at `μ = 8π a_N` (or an explicit `μ`).
pub fn sector_positivity_check(
    v: &PotentialSpec,
    n_gp: usize,
    momenta: &Arc<MomentumSet>,
    n_range: RangeInclusive<usize>,
    mu_mode: MuMode,
    eigen: &EigenOptions,
    dim_cap: usize,
) -> Result<PositivityReport, SpectraError> {
    let start = *n_range.start();
    let scan = grand_canonical_scan(v, n_gp, mu_mode, momenta, n_range, [0; 3], eigen, dim_cap)?;
    if let Some(&n) = scan.skipped.first() {
        log::warn!("positivity scan skipped sector {n}");
        return Err(SpectraError::Fock(FockError::DimensionOverflow { cap: dim_cap }));
    }
    let (_, a_ref) = resolve_mu(v, n_gp, momenta, MuMode::EightPiA)?;
    let a = a_ref.unwrap_or(0.0);
    let energies: Vec<(usize, f64)> = scan.reports.iter().map(|r| (r.n, r.energy)).collect();
    let (min_n, min_energy) = energies.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap_or((start, f64::NAN));
    let tail: Vec<f64> = energies.iter().filter(|e| e.0 >= min_n).map(|e| e.1).collect();
    let model_at_start = quadratic_energy_model(a, n_gp, start);
    Ok(PositivityReport {
        mu: scan.mu,
        a_lattice: a,
        all_nonnegative: energies.iter().all(|e| e.1 >= 0.0),
        monotone_beyond_minimizer: tail.windows(2).all(|w| w[1] > w[0]),
        energies,
        min_energy,
        min_n,
        model_predicts_positive: a > 0.0 && matches!(mu_mode, MuMode::EightPiA) && model_at_start > 0.0,
        model_at_start,
    })
}

/// `⟨x, H x⟩ / ⟨x, x⟩`.
pub fn rayleigh_quotient(op: &dyn LinearOperator, x: &[f64]) -> f64 {
    dot(x, &op.apply_vec(x)) / dot(x, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_momentum_set, TWO_PI};

    #[test]
    fn free_gas_scan_is_linear_in_n() {
        let s = Arc::new(build_momentum_set(TWO_PI));
        let scan = grand_canonical_scan(
            &PotentialSpec::unit_ball(0.0),
            4,
            MuMode::Explicit(2.0),
            &s,
            0..=5,
            [0; 3],
            &EigenOptions::default(),
            1 << 20,
        )
        .unwrap();
        for r in &scan.reports {
            assert_eq!(r.energy, -2.0 * r.n as f64);
        }
        assert_eq!(scan.argmin, Some(5));
    }

    #[test]
    fn quadratic_fit_recovers_coefficients() {
        let pts: Vec<(f64, f64)> = (0..7).map(|n| (n as f64, 2.0 - 3.0 * n as f64 + 0.5 * (n * n) as f64)).collect();
        let c = quadratic_fit(&pts).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-10 && (c[1] + 3.0).abs() < 1e-10 && (c[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn model_at_five_n() {
        let a = 0.013;
        let n = 7;
        assert!((quadratic_energy_model(a, n, 5 * n) - 4.0 * PI * a * n as f64 * 15.0).abs() < 1e-12);
    }
}
