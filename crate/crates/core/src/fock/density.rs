//! One-particle density matrix `γ_{qp} = ⟨ψ, a_q† a_p ψ⟩` over all modes.

use super::FockBasis;
use nalgebra::DMatrix;

pub fn one_particle_density_matrix(state: &[f64], basis: &FockBasis) -> DMatrix<f64> {
    assert_eq!(state.len(), basis.dim());
    let modes = basis.modes();
    let mut gamma = DMatrix::zeros(modes, modes);
    let mut target = vec![0u8; modes];
    for (j, &xj) in state.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        let occ = basis.state(j);
        for p in (0..modes).filter(|&p| occ[p] > 0) {
            gamma[(p, p)] += xj * xj * occ[p] as f64;
            for q in (0..modes).filter(|&q| q != p) {
                target.copy_from_slice(occ);
                let amp = (target[p] as f64).sqrt();
                target[p] -= 1;
                target[q] += 1;
                let amp = amp * (target[q] as f64).sqrt();
                // Targets outside the basis have no overlap with ψ.
                if let Some(i) = basis.index_of(&target) {
                    gamma[(q, p)] += state[i] * amp * xj;
                }
            }
        }
    }
    gamma
}

/// `⟨ψ, 𝒩₊ ψ⟩`.
pub fn expected_n_plus(state: &[f64], basis: &FockBasis) -> f64 {
    state.iter().enumerate().map(|(i, x)| x * x * basis.n_plus(i) as f64).sum()
}
