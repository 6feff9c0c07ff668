//! Lattice scattering equation, its continuum oracles and the convergence study.
//!
//! The unknowns `φ_p`, `p ∈ S`, solve
//! `p² φ_p + (κ/2N) Σ_q V̂((p−q)/N) φ_q = −(κ/2) V̂(p/N)` with `p` measured in units of
//! `2π`. The matrix is SPD because `V ≥ 0` makes `V̂` a positive-definite kernel.

mod continuum;
mod convolution;
mod position;
mod study;

pub use continuum::{
    born_partial_sums, born_scattering_length, born_spectral_radius, ode_scattering_length,
    RadialDiscretization,
};
pub use position::{solve_position_space, PositionSolution};
pub use study::{
    convergence_study, fit_loglog_slope, phi_norm_report, ConvergenceRow, ConvergenceStudy,
    CutoffRule, PhiNormReport,
};

use crate::lattice::{norm_sq, sub, LatticeError, LatticePoint, MomentumSet, PotentialSpec, TWO_PI};
use crate::linalg::conjugate_gradient;
use convolution::KernelConvolution;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;
use thiserror::Error;

/// Hard limit for the dense backend.
pub const DENSE_LIMIT: usize = 5000;
/// `Backend::Auto` picks the dense factorization up to this many momenta.
pub const AUTO_DENSE_LIMIT: usize = 1500;

#[derive(Debug, Error)]
pub enum ScatteringError {
    #[error("momentum set is empty")]
    EmptyMomenta,
    #[error("invalid solver option: {0}")]
    InvalidOption(String),
    #[error("dense backend limited to {DENSE_LIMIT} momenta, got {0}")]
    DenseTooLarge(usize),
    #[error("iterative solve stalled after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("Born series diverges: spectral radius {spectral_radius} >= 1")]
    BornDivergence { spectral_radius: f64 },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Auto,
    Dense,
    FftCg,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Target for the ℓ² norm of the residual.
    pub tol: f64,
    pub backend: Backend,
    /// Overrides the iteration cap derived from the condition estimate.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, backend: Backend::Auto, max_iter: None }
    }
}

#[derive(Debug, Clone)]
pub struct ScatteringSolution {
    pub momenta: Arc<MomentumSet>,
    /// `φ_p` in the order of `momenta.points()`.
    pub phi: Vec<f64>,
    /// ℓ² norm of the residual of the returned vector.
    pub residual_norm: f64,
    pub tol: f64,
    pub n: usize,
    pub potential: PotentialSpec,
    /// Backend that actually ran.
    pub backend: Backend,
    pub iterations: usize,
    /// Number of momenta with `φ_p ≥ 0` for `κ > 0`; the kernel oscillates, so this
    /// can be nonzero far out in momentum space.
    pub sign_violations: usize,
}

impl ScatteringSolution {
    pub fn phi_at(&self, p: LatticePoint) -> Option<f64> {
        self.momenta.index_of(p).map(|i| self.phi[i])
    }

    pub fn scattering_length(&self) -> f64 {
        lattice_scattering_length(&self.potential, self.n, &self.momenta, &self.phi)
    }
}

/// `a_N = (κ/8π) (V̂(0) + (1/N) Σ_p V̂(p/N) φ_p)`.
pub fn lattice_scattering_length(v: &PotentialSpec, n: usize, momenta: &MomentumSet, phi: &[f64]) -> f64 {
    let nf = n as f64;
    let sum: f64 = momenta
        .points()
        .iter()
        .zip(phi)
        .map(|(p, f)| v.fourier_radial(momentum_norm(*p) / nf) * f)
        .sum();
    v.kappa / (8.0 * PI) * (v.fourier_radial(0.0) + sum / nf)
}

fn momentum_norm(p: LatticePoint) -> f64 {
    TWO_PI * (norm_sq(p) as f64).sqrt()
}

fn right_hand_side(v: &PotentialSpec, n: usize, p: LatticePoint) -> f64 {
    -0.5 * v.kappa * v.fourier_radial(momentum_norm(p) / n as f64)
}

/// ℓ² residual of `phi` computed by an explicit `O(|S|²)` sum.
pub fn explicit_residual(v: &PotentialSpec, n: usize, momenta: &MomentumSet, phi: &[f64]) -> f64 {
    let coupling = v.kappa / (2.0 * n as f64);
    let pts = momenta.points();
    pts.iter()
        .enumerate()
        .map(|(i, &p)| {
            let conv: f64 = pts
                .iter()
                .zip(phi)
                .map(|(&q, f)| v.fourier_radial(momentum_norm(sub(p, q)) / n as f64) * f)
                .sum();
            let r = momentum_norm(p).powi(2) * phi[i] + coupling * conv - right_hand_side(v, n, p);
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

/// Solves the lattice scattering equation on `momenta`.
pub fn solve_lattice_scattering(
    v: &PotentialSpec,
    n: usize,
    momenta: Arc<MomentumSet>,
    opts: &SolverOptions,
) -> Result<ScatteringSolution, ScatteringError> {
    v.validate()?;
    if momenta.is_empty() {
        return Err(ScatteringError::EmptyMomenta);
    }
    if n == 0 {
        return Err(ScatteringError::InvalidOption("N must be positive".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(ScatteringError::InvalidOption(format!("tolerance {} must be positive", opts.tol)));
    }
    let backend = match opts.backend {
        Backend::Auto if momenta.len() <= AUTO_DENSE_LIMIT => Backend::Dense,
        Backend::Auto => Backend::FftCg,
        b => b,
    };
    let (phi, residual_norm, iterations) = match backend {
        Backend::Dense => solve_dense(v, n, &momenta)?,
        _ => solve_fft_cg(v, n, &momenta, opts)?,
    };
    let sign_violations = if v.kappa > 0.0 { phi.iter().filter(|&&f| f >= 0.0).count() } else { 0 };
    if sign_violations > 0 {
        log::debug!("{sign_violations} momenta with non-negative φ_p");
    }
    Ok(ScatteringSolution {
        momenta,
        phi,
        residual_norm,
        tol: opts.tol,
        n,
        potential: *v,
        backend,
        iterations,
        sign_violations,
    })
}

fn solve_dense(v: &PotentialSpec, n: usize, momenta: &MomentumSet) -> Result<(Vec<f64>, f64, usize), ScatteringError> {
    let m = momenta.len();
    if m > DENSE_LIMIT {
        return Err(ScatteringError::DenseTooLarge(m));
    }
    let pts = momenta.points();
    let coupling = v.kappa / (2.0 * n as f64);
    let mut kernel_cache = std::collections::HashMap::<i64, f64>::new();
    let mut a = nalgebra::DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let d2 = norm_sq(sub(pts[i], pts[j]));
            let k = *kernel_cache
                .entry(d2)
                .or_insert_with(|| v.fourier_radial(TWO_PI * (d2 as f64).sqrt() / n as f64));
            a[(i, j)] = coupling * k;
            a[(j, i)] = coupling * k;
        }
        a[(i, i)] += momentum_norm(pts[i]).powi(2);
    }
    let b = nalgebra::DVector::from_iterator(m, pts.iter().map(|&p| right_hand_side(v, n, p)));
    let x = match a.clone().cholesky() {
        Some(ch) => ch.solve(&b),
        None => a.clone().lu().solve(&b).ok_or(ScatteringError::NonConvergence { iterations: 0, residual: f64::NAN })?,
    };
    let raw: Vec<f64> = x.iter().copied().collect();
    let phi: Vec<f64> = (0..m).map(|i| 0.5 * (raw[i] + raw[momenta.negated(i)])).collect();
    let xv = nalgebra::DVector::from_column_slice(&phi);
    let residual = (&a * xv - b).norm();
    Ok((phi, residual, 0))
}

fn solve_fft_cg(
    v: &PotentialSpec,
    n: usize,
    momenta: &MomentumSet,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, f64, usize), ScatteringError> {
    let (space, conv) = KernelConvolution::new(v, n, momenta);
    let coupling = v.kappa / (2.0 * n as f64);
    let p2: Vec<f64> = space.points.iter().map(|&p| momentum_norm(p).powi(2)).collect();
    let b: Vec<f64> = space.points.iter().map(|&p| right_hand_side(v, n, p)).collect();
    let apply = |x: &[f64], out: &mut [f64]| {
        conv.apply(x, out);
        for i in 0..x.len() {
            out[i] = p2[i] * x[i] + coupling * out[i];
        }
    };
    let precondition = |r: &[f64], z: &mut [f64]| {
        for i in 0..r.len() {
            z[i] = r[i] / p2[i];
        }
    };
    let dot = |a: &[f64], b: &[f64]| space.dot(a, b);

    let min_p2 = p2.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = 1.0 + coupling * conv.spectral_bound() / min_p2;
    let cap = opts.max_iter.unwrap_or_else(|| 100.max((10.0 * cond.sqrt()).ceil() as usize));
    log::debug!("fft-cg: {} unknowns, condition estimate {cond:.3}, cap {cap}", p2.len());

    let mut x = vec![0.0; b.len()];
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    // The recursive residual drifts from the true one; restart a few times if needed.
    for _ in 0..4 {
        let out = conjugate_gradient(apply, precondition, dot, &b, &mut x, 0.5 * opts.tol, cap - iterations.min(cap));
        iterations += out.iterations;
        let mut ax = vec![0.0; b.len()];
        apply(&x, &mut ax);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        residual = dot(&r, &r).sqrt();
        if residual <= opts.tol || iterations >= cap {
            break;
        }
    }
    if !(residual <= opts.tol) {
        return Err(ScatteringError::NonConvergence { iterations, residual });
    }
    Ok((space.expand(&x), residual, iterations))
}
