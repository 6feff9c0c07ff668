//! The pair generator `ℬ`, its unitary `e^{tℬ}`, the trial state `e^ℬ Ω` and the two
//! operator facts checked on truncated sectors: the commutator identity and the growth
//! bound for `𝒩₊`.

use crate::fock::{assemble, pair_operator, Couplings, FockBasis, FockError, OperatorTag};
use crate::lattice::{norm_sq, MomentumSet, PotentialSpec, TWO_PI};
use crate::linalg::{dot, norm2, LinearOperator, SparseMatrix};
use crate::scattering::ScatteringSolution;
use crate::spectra::{ground_state, EigenOptions, SpectraError};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BogoliubovError {
    #[error("Krylov exponential stalled (achieved residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("φ was solved on a different momentum set than the basis")]
    MomentaMismatch,
    #[error("generator must be antisymmetric")]
    NotAntisymmetric,
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

/// Above this dimension `ExpMethod::Auto` switches from Taylor to Krylov.
pub const TAYLOR_DIM_LIMIT: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpMethod {
    Auto,
    TaylorScaled,
    Krylov,
}

/// `e^{tℬ}` for an antisymmetric sparse generator.
pub struct UnitaryApplication<'a> {
    generator: &'a SparseMatrix,
    method: ExpMethod,
    tol: f64,
    one_norm: f64,
}

#[derive(Debug, Clone)]
pub struct ExpResult {
    pub vector: Vec<f64>,
    /// `|‖e^{tℬ}x‖ − ‖x‖|`.
    pub norm_drift: f64,
}

impl<'a> UnitaryApplication<'a> {
    pub fn new(generator: &'a SparseMatrix, method: ExpMethod, tol: f64) -> Self {
        let method = match method {
            ExpMethod::Auto if generator.dim() <= TAYLOR_DIM_LIMIT => ExpMethod::TaylorScaled,
            ExpMethod::Auto => ExpMethod::Krylov,
            m => m,
        };
        Self { generator, method, tol, one_norm: generator.one_norm() }
    }

    pub fn method(&self) -> ExpMethod {
        self.method
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn apply(&self, t: f64, x: &[f64]) -> Result<ExpResult, BogoliubovError> {
        let vector = match self.method {
            ExpMethod::Krylov => self.krylov(t, x)?,
            _ => self.taylor(t, x),
        };
        let norm_drift = (norm2(&vector) - norm2(x)).abs();
        Ok(ExpResult { vector, norm_drift })
    }

    fn taylor(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let scaled = (t.abs() * self.one_norm).ceil().max(1.0);
        let steps = scaled as usize;
        let h = t / scaled;
        let mut y = x.to_vec();
        let mut term = vec![0.0; x.len()];
        for _ in 0..steps {
            let mut acc = y.clone();
            let mut current = y.clone();
            for k in 1..60 {
                self.generator.apply(&current, &mut term);
                let f = h / k as f64;
                current.iter_mut().zip(&term).for_each(|(c, t)| *c = f * t);
                acc.iter_mut().zip(&current).for_each(|(a, c)| *a += c);
                if norm2(&current) <= 1e-17 * norm2(&acc) {
                    break;
                }
            }
            y = acc;
        }
        y
    }

    fn krylov(&self, t: f64, x: &[f64]) -> Result<Vec<f64>, BogoliubovError> {
        let m_max = 30.min(x.len()).max(1);
        // Sub-steps with |τ| ‖ℬ‖ ≤ 4 keep the truncated Krylov series far below tol.
        let steps = ((t.abs() * self.one_norm) / 4.0).ceil().max(1.0) as usize;
        let tau = t / steps as f64;
        let mut y = x.to_vec();
        for _ in 0..steps {
            let beta = norm2(&y);
            if beta == 0.0 {
                return Ok(y);
            }
            let mut basis = vec![y.iter().map(|v| v / beta).collect::<Vec<f64>>()];
            let mut h = DMatrix::<f64>::zeros(m_max + 1, m_max);
            let mut w = vec![0.0; y.len()];
            let mut m = m_max;
            for j in 0..m_max {
                self.generator.apply(&basis[j], &mut w);
                for _ in 0..2 {
                    for (i, q) in basis.iter().enumerate() {
                        let c = dot(&w, q);
                        h[(i, j)] += c;
                        w.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
                    }
                }
                let nw = norm2(&w);
                h[(j + 1, j)] = nw;
                if nw <= 1e-14 * self.one_norm.max(1.0) {
                    m = j + 1;
                    break;
                }
                basis.push(w.iter().map(|v| v / nw).collect());
            }
            let hm = h.view((0, 0), (m, m)).clone_owned() * tau;
            let e = hm.exp();
            let coeffs = e.column(0) * beta;
            if m == m_max {
                // A posteriori estimate from the next Krylov direction.
                let estimate = (h[(m, m - 1)] * tau * coeffs[m - 1]).abs();
                if !(estimate <= self.tol.max(1e-12) * beta) {
                    return Err(BogoliubovError::NoConvergence { residual: estimate });
                }
            }
            let mut next = vec![0.0; y.len()];
            for (q, &c) in basis.iter().zip(coeffs.iter()) {
                next.iter_mut().zip(q).for_each(|(a, b)| *a += c * b);
            }
            y = next;
        }
        Ok(y)
    }
}

/// `φ` restricted to the basis momenta, checking that both live on the same set.
pub fn phi_for_basis<'a>(basis: &FockBasis, sol: &'a ScatteringSolution) -> Result<&'a [f64], BogoliubovError> {
    if sol.momenta.as_ref() != basis.momenta().as_ref() {
        return Err(BogoliubovError::MomentaMismatch);
    }
    Ok(&sol.phi)
}

/// Assembles `ℬ = (1/2N) Σ_p φ_p (a_p† a_{-p}† a_0 a_0 − h.c.)`.
pub fn generator(basis: &FockBasis, v: &PotentialSpec, n_gp: usize, phi: &[f64]) -> Result<SparseMatrix, BogoliubovError> {
    Ok(assemble(OperatorTag::Bgen, basis, &Couplings::new(*v, n_gp, 0.0).with_phi(phi))?)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialReport {
    pub n: usize,
    pub dim: usize,
    pub mu: f64,
    /// `⟨e^ℬΩ, H_μ e^ℬΩ⟩`.
    pub trial_energy: f64,
    /// `⟨Ω, H_μ Ω⟩`.
    pub condensate_energy: f64,
    /// Sector ground energy.
    pub exact_energy: f64,
    pub norm_drift: f64,
}

/// Trial energy of `e^ℬ Ω`, `Ω` the pure condensate with `N` particles at zero momentum.
pub fn trial_energy(
    v: &PotentialSpec,
    n_gp: usize,
    momenta: &Arc<MomentumSet>,
    mu: f64,
    sol: &ScatteringSolution,
    eigen: &EigenOptions,
    unitary_tol: f64,
    dim_cap: usize,
) -> Result<TrialReport, BogoliubovError> {
    let basis = FockBasis::with_range(momenta.clone(), n_gp..=n_gp, Some([0; 3]), dim_cap)?;
    let phi = phi_for_basis(&basis, sol)?;
    let h = assemble(OperatorTag::Hmu, &basis, &Couplings::new(*v, n_gp, mu))?;
    let b = generator(&basis, v, n_gp, phi)?;
    let mut omega = vec![0.0; basis.dim()];
    let c = basis.condensate_index(n_gp).expect("zero-momentum sector contains the condensate");
    omega[c] = 1.0;
    let rotated = UnitaryApplication::new(&b, ExpMethod::Auto, unitary_tol).apply(1.0, &omega)?;
    let psi = &rotated.vector;
    let trial = dot(psi, &h.apply_vec(psi)) / dot(psi, psi);
    let exact = ground_state(&h, eigen)?.energy;
    Ok(TrialReport {
        n: n_gp,
        dim: basis.dim(),
        mu,
        trial_energy: trial,
        condensate_energy: h.get(c, c),
        exact_energy: exact,
        norm_drift: rotated.norm_drift,
    })
}

/// Largest `|eigenvalue|` of a symmetric sparse matrix: dense for small dimensions,
/// otherwise power iteration on `R²`.
pub fn symmetric_spectral_norm(r: &SparseMatrix) -> f64 {
    let dim = r.dim();
    if dim == 0 || r.nnz() == 0 {
        return 0.0;
    }
    if dim <= 2000 {
        return SymmetricEigen::new(r.to_dense()).eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    }
    let mut x: Vec<f64> = (0..dim).map(|i| 1.0 + ((i * 7919) % 13) as f64 * 0.01).collect();
    let mut estimate = 0.0;
    for _ in 0..500 {
        let s = norm2(&x);
        x.iter_mut().for_each(|v| *v /= s);
        let y = r.apply_vec(&r.apply_vec(&x));
        let next = norm2(&y).sqrt();
        x = y;
        if (next - estimate).abs() <= 1e-12 * next {
            return next;
        }
        estimate = next;
    }
    estimate
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutatorReport {
    pub dim: usize,
    pub inner_dim: usize,
    /// `‖R‖` with `R = [H₁+Q₄, ℬ] + Q₂ − Γ₁ − Γ₂`.
    pub norm: f64,
    /// `‖Π R Π‖`.
    pub restricted_norm: f64,
    pub frobenius: f64,
}

/// `R = [H₁ + Q₄, ℬ] + Q₂ − Γ₁ − Γ₂` on `basis`, with `Π` onto states whose occupied
/// excited momenta satisfy `|n|² ≤ inner_radius_sq` (`p = 2πn`).
pub fn commutator_identity_residual(
    basis: &FockBasis,
    v: &PotentialSpec,
    n_gp: usize,
    phi: &[f64],
    inner_radius_sq: i64,
) -> Result<(SparseMatrix, CommutatorReport), BogoliubovError> {
    let c = Couplings::new(*v, n_gp, 0.0).with_phi(phi);
    let h1 = assemble(OperatorTag::H1, basis, &c)?;
    let q4 = assemble(OperatorTag::Q4, basis, &c)?;
    let b = assemble(OperatorTag::Bgen, basis, &c)?;
    let q2 = assemble(OperatorTag::Q2, basis, &c)?;
    let g1 = assemble(OperatorTag::Gamma1, basis, &c)?;
    let g2 = assemble(OperatorTag::Gamma2, basis, &c)?;
    let r = h1
        .add_scaled(&q4, 1.0)
        .commutator(&b)
        .add_scaled(&q2, 1.0)
        .add_scaled(&g1, -1.0)
        .add_scaled(&g2, -1.0)
        .with_symmetry(crate::linalg::Symmetry::Symmetric);
    let inner = basis.inner_states(inner_radius_sq);
    let restricted = r.restrict(&inner);
    let report = CommutatorReport {
        dim: basis.dim(),
        inner_dim: inner.len(),
        norm: symmetric_spectral_norm(&r),
        restricted_norm: symmetric_spectral_norm(&restricted),
        frobenius: r.frobenius_norm(),
    };
    Ok((r, report))
}

/// Largest `|n|²` with `2π|n| ≤ cutoff/2`.
pub fn half_cutoff_radius_sq(momenta: &MomentumSet) -> i64 {
    let half = 0.5 * momenta.cutoff() / TWO_PI;
    let bound = half * half * (1.0 + 1e-12);
    momenta.points().iter().map(|&p| norm_sq(p)).filter(|&s| (s as f64) <= bound).max().unwrap_or(0)
}

#[derive(Debug, Clone, Serialize)]
pub struct NplusCommutatorCheck {
    /// `max |[𝒩₊, ℬ] − (1/N) Σ φ (a†a†a₀a₀ + h.c.)|`.
    pub deviation_full: f64,
    /// Same, against the prefactor `1/2N`.
    pub deviation_half: f64,
    pub max_entry: f64,
}

/// Compares the matrix commutator `[𝒩₊, ℬ]` with the pair-operator formula.
pub fn nplus_commutator_check(
    basis: &FockBasis,
    v: &PotentialSpec,
    n_gp: usize,
    phi: &[f64],
) -> Result<NplusCommutatorCheck, BogoliubovError> {
    let c = Couplings::new(*v, n_gp, 0.0).with_phi(phi);
    let nplus = assemble(OperatorTag::Nplus, basis, &c)?;
    let b = assemble(OperatorTag::Bgen, basis, &c)?;
    let direct = nplus.commutator(&b);
    let nf = n_gp as f64;
    let full = pair_operator(basis, &phi.iter().map(|f| f / nf).collect::<Vec<_>>(), 1.0)?;
    let half = pair_operator(basis, &phi.iter().map(|f| f / (2.0 * nf)).collect::<Vec<_>>(), 1.0)?;
    Ok(NplusCommutatorCheck {
        deviation_full: direct.add_scaled(&full, -1.0).max_abs(),
        deviation_half: direct.add_scaled(&half, -1.0).max_abs(),
        max_entry: direct.max_abs(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    /// Max over trials and `t` of `⟨e^{tℬ}x, (𝒩₊+1)^k e^{tℬ}x⟩ / ⟨x, (𝒩₊+1)^k x⟩`, `k = 1, 2, 3`.
    pub max_ratio: [f64; 3],
    pub trials: usize,
    pub t_grid: Vec<f64>,
    pub max_norm_drift: f64,
    pub seed: u64,
}

/// Uniform grid of `points` values in `[−1, 1]`.
pub fn symmetric_t_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points).map(|i| -1.0 + 2.0 * i as f64 / (points - 1) as f64).collect(),
    }
}

/// Random normalized states, one ChaCha stream per trial so that the first `k` trials
/// coincide for every total count.
pub fn nplus_growth_check(
    basis: &FockBasis,
    b: &SparseMatrix,
    t_grid: &[f64],
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<GrowthReport, BogoliubovError> {
    let u = UnitaryApplication::new(b, ExpMethod::Auto, tol);
    let weight: Vec<f64> = (0..basis.dim()).map(|i| basis.n_plus(i) as f64 + 1.0).collect();
    let moment = |x: &[f64], k: i32| -> f64 { x.iter().zip(&weight).map(|(v, w)| v * v * w.powi(k)).sum() };
    let per_trial: Vec<([f64; 3], f64)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let mut x: Vec<f64> = (0..basis.dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
            let s = norm2(&x);
            x.iter_mut().for_each(|v| *v /= s);
            let base = [moment(&x, 1), moment(&x, 2), moment(&x, 3)];
            let mut best = [0.0f64; 3];
            let mut drift = 0.0f64;
            for &t in t_grid {
                let y = u.apply(t, &x)?;
                drift = drift.max(y.norm_drift);
                for k in 0..3 {
                    best[k] = best[k].max(moment(&y.vector, k as i32 + 1) / base[k]);
                }
            }
            Ok((best, drift))
        })
        .collect::<Result<_, BogoliubovError>>()?;
    let mut max_ratio = [0.0f64; 3];
    let mut max_norm_drift = 0.0f64;
    for (best, drift) in per_trial {
        for k in 0..3 {
            max_ratio[k] = max_ratio[k].max(best[k]);
        }
        max_norm_drift = max_norm_drift.max(drift);
    }
    Ok(GrowthReport { max_ratio, trials, t_grid: t_grid.to_vec(), max_norm_drift, seed })
}

/// Dense `e^{tB} x` for small generators, used as a reference in tests.
pub fn dense_exp_apply(b: &SparseMatrix, t: f64, x: &[f64]) -> Vec<f64> {
    let e = (b.to_dense() * t).exp();
    (e * DVector::from_column_slice(x)).iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Symmetry;

    fn rotation(theta: f64) -> SparseMatrix {
        SparseMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[0.0, theta, -theta, 0.0]), Symmetry::Antisymmetric)
    }

    #[test]
    fn planar_rotation() {
        let theta = 0.83;
        let b = rotation(theta);
        for method in [ExpMethod::TaylorScaled, ExpMethod::Krylov] {
            let u = UnitaryApplication::new(&b, method, 1e-12);
            let y = u.apply(1.0, &[1.0, 0.0]).unwrap();
            assert!((y.vector[0] - theta.cos()).abs() < 1e-13, "{method:?}");
            assert!((y.vector[1] + theta.sin()).abs() < 1e-13, "{method:?}");
            assert!(y.norm_drift < 1e-13);
        }
    }

    #[test]
    fn zero_generator_is_identity() {
        let b = SparseMatrix::zeros(3, Symmetry::Antisymmetric);
        for method in [ExpMethod::TaylorScaled, ExpMethod::Krylov] {
            let y = UnitaryApplication::new(&b, method, 1e-12).apply(0.7, &[0.1, -2.0, 3.0]).unwrap();
            for (a, b) in y.vector.iter().zip([0.1, -2.0, 3.0]) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn methods_agree_with_dense_exponential() {
        let n = 40;
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..i {
                if (i * 31 + j * 17) % 5 == 0 {
                    let v = ((i * j) as f64 * 0.37).sin();
                    t.push((i as u32, j as u32, v));
                    t.push((j as u32, i as u32, -v));
                }
            }
        }
        let b = SparseMatrix::from_triplets(n, t, Symmetry::Antisymmetric);
        let x: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let reference = dense_exp_apply(&b, 0.9, &x);
        for method in [ExpMethod::TaylorScaled, ExpMethod::Krylov] {
            let y = UnitaryApplication::new(&b, method, 1e-12).apply(0.9, &x).unwrap();
            let err = y.vector.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-11, "{method:?}: {err}");
        }
    }

    #[test]
    fn t_grid_endpoints() {
        assert_eq!(symmetric_t_grid(3), vec![-1.0, 0.0, 1.0]);
        assert_eq!(symmetric_t_grid(1), vec![0.0]);
    }
}
