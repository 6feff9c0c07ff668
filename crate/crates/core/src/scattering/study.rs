//! Convergence of `a_N` towards the continuum value and norms of `φ`.

use super::{ode_scattering_length, solve_lattice_scattering, Backend, ScatteringError, ScatteringSolution, SolverOptions};
use crate::lattice::{build_momentum_set, norm_sq, PotentialSpec, TWO_PI};
use serde::Serialize;
use std::sync::Arc;

/// Momentum cutoff as a function of `N`: `factor · N · 2π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffRule {
    pub factor: f64,
}

impl Default for CutoffRule {
    fn default() -> Self {
        Self { factor: 4.0 }
    }
}

impl CutoffRule {
    pub fn cutoff(&self, n: usize) -> f64 {
        self.factor * n as f64 * TWO_PI
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub cutoff: f64,
    pub momenta: usize,
    pub a_lattice: f64,
    pub a_ode: f64,
    pub abs_err: f64,
    pub residual: f64,
    pub iterations: usize,
    pub backend: Backend,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log |a_N − a|` against `log N`; absent when an error vanishes.
    pub slope: Option<f64>,
}

/// Solves at each `N` (cutoff from `rule`) and compares `a_N` with the ODE value.
pub fn convergence_study(
    v: &PotentialSpec,
    n_list: &[usize],
    rule: CutoffRule,
    opts: &SolverOptions,
) -> Result<ConvergenceStudy, ScatteringError> {
    let a_ode = ode_scattering_length(v);
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let cutoff = rule.cutoff(n);
        let momenta = Arc::new(build_momentum_set(cutoff));
        let (a_lattice, residual, iterations, backend) = if v.kappa == 0.0 || momenta.is_empty() {
            let a = super::lattice_scattering_length(v, n, &momenta, &vec![0.0; momenta.len()]);
            (a, 0.0, 0, Backend::Dense)
        } else {
            let sol = solve_lattice_scattering(v, n, momenta.clone(), opts)?;
            (sol.scattering_length(), sol.residual_norm, sol.iterations, sol.backend)
        };
        log::info!("N = {n}: a_N = {a_lattice:.12e}, |a_N - a| = {:.3e}", (a_lattice - a_ode).abs());
        rows.push(ConvergenceRow {
            n,
            cutoff,
            momenta: momenta.len(),
            a_lattice,
            a_ode,
            abs_err: (a_lattice - a_ode).abs(),
            residual,
            iterations,
            backend,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.abs_err).collect();
    Ok(ConvergenceStudy { slope: fit_loglog_slope(&xs, &ys), rows })
}

/// Least-squares slope of `log y` against `log x`. `None` for fewer than two points or
/// non-positive data.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 || xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiNormReport {
    pub sup: f64,
    pub l2: f64,
    /// `(1/N) Σ_p |V̂(p/N) φ_p|`.
    pub weighted_l1: f64,
    pub sup_p2: f64,
    pub kappa: f64,
}

impl PhiNormReport {
    /// The four norms divided by `κ` (zero when `κ = 0`).
    pub fn per_kappa(&self) -> [f64; 4] {
        let k = if self.kappa > 0.0 { self.kappa } else { return [0.0; 4] };
        [self.sup / k, self.l2 / k, self.weighted_l1 / k, self.sup_p2 / k]
    }
}

pub fn phi_norm_report(sol: &ScatteringSolution) -> PhiNormReport {
    let nf = sol.n as f64;
    let mut report = PhiNormReport { sup: 0.0, l2: 0.0, weighted_l1: 0.0, sup_p2: 0.0, kappa: sol.potential.kappa };
    for (p, &f) in sol.momenta.points().iter().zip(&sol.phi) {
        let k = TWO_PI * (norm_sq(*p) as f64).sqrt();
        report.sup = report.sup.max(f.abs());
        report.l2 += f * f;
        report.weighted_l1 += (sol.potential.fourier_radial(k / nf) * f).abs();
        report.sup_p2 = report.sup_p2.max(k * k * f.abs());
    }
    report.l2 = report.l2.sqrt();
    report.weighted_l1 /= nf;
    report
}
