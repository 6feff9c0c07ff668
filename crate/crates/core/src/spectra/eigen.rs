//! Lowest eigenpair of a real symmetric operator.

use super::SpectraError;
use crate::linalg::{dot, norm2, LinearOperator, SparseMatrix};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Relative residual target: `‖Hψ − Eψ‖ ≤ tol · max(1, |E|)`.
    pub tol: f64,
    /// Dimensions up to this use the dense solver.
    pub dense_limit: usize,
    pub krylov_dim: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-10, dense_limit: 2000, krylov_dim: 200, max_restarts: 60, seed: 0x5eed }
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub energy: f64,
    /// Unit-norm eigenvector.
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub method: EigenMethod,
}

fn residual_norm(op: &dyn LinearOperator, energy: f64, v: &[f64]) -> f64 {
    let hv = op.apply_vec(v);
    hv.iter().zip(v).map(|(h, x)| (h - energy * x).powi(2)).sum::<f64>().sqrt()
}

/// Dense diagonalization; `op` must be symmetric.
pub fn dense_ground_state(op: &SparseMatrix) -> Result<Eigenpair, SpectraError> {
    if op.dim() == 0 {
        return Err(SpectraError::EmptyOperator);
    }
    if op.is_diagonal() {
        // Exact; QR sweeps would perturb the entries by an ulp.
        let diag = op.diagonal();
        let (k, &energy) = diag.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty");
        let mut vector = vec![0.0; op.dim()];
        vector[k] = 1.0;
        return Ok(Eigenpair { energy, vector, residual: 0.0, iterations: 0, method: EigenMethod::Dense });
    }
    let eig = SymmetricEigen::new(op.to_dense());
    let (k, &energy) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    let mut vector: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
    fix_sign(&mut vector);
    let residual = residual_norm(op, energy, &vector);
    Ok(Eigenpair { energy, vector, residual, iterations: 0, method: EigenMethod::Dense })
}

/// Makes the largest-magnitude component positive so outputs are reproducible.
fn fix_sign(v: &mut [f64]) {
    let pivot = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Lanczos with full reorthogonalization and explicit restarts from the current Ritz vector.
pub fn lanczos_ground_state(op: &dyn LinearOperator, opts: &EigenOptions) -> Result<Eigenpair, SpectraError> {
    let dim = op.dim();
    if dim == 0 {
        return Err(SpectraError::EmptyOperator);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
    let m_max = opts.krylov_dim.min(dim).max(1);
    let mut best: Option<Eigenpair> = None;
    let mut iterations = 0;
    for _ in 0..=opts.max_restarts {
        let s = norm2(&start);
        start.iter_mut().for_each(|x| *x /= s);
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut w = vec![0.0; dim];
        for j in 0..m_max {
            op.apply(&basis[j], &mut w);
            iterations += 1;
            let a = dot(&w, &basis[j]);
            alpha.push(a);
            // Classical Gram-Schmidt against the full basis, twice.
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(&w, q);
                    w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let b = norm2(&w);
            if j + 1 == m_max || b <= 1e-14 * a.abs().max(1.0) {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
        let m = alpha.len();
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let (k, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        let y = eig.eigenvectors.column(k);
        let mut ritz = vec![0.0; dim];
        for (q, &c) in basis.iter().zip(y.iter()) {
            ritz.iter_mut().zip(q).for_each(|(r, x)| *r += c * x);
        }
        let s = norm2(&ritz);
        ritz.iter_mut().for_each(|x| *x /= s);
        fix_sign(&mut ritz);
        let residual = residual_norm(op, theta, &ritz);
        iterations += 1;
        let pair = Eigenpair { energy: theta, vector: ritz.clone(), residual, iterations, method: EigenMethod::Lanczos };
        if residual <= opts.tol * theta.abs().max(1.0) {
            return Ok(pair);
        }
        if best.as_ref().is_none_or(|b| residual < b.residual) {
            best = Some(pair);
        }
        start = ritz;
    }
    let best = best.expect("at least one restart");
    Err(SpectraError::NoConvergence { energy: best.energy, residual: best.residual, vector: best.vector })
}

/// Dense for small dimensions, Lanczos otherwise.
pub fn ground_state(op: &SparseMatrix, opts: &EigenOptions) -> Result<Eigenpair, SpectraError> {
    if op.dim() <= opts.dense_limit {
        dense_ground_state(op)
    } else {
        lanczos_ground_state(op, opts)
    }
}
