//! Position-space form of the scattering equation on the periodic box `[-N/2, N/2]³`.
//!
//! With `φ̌(x) = N⁻³ Σ_p e^{i p·x/N} φ_p` and `Ṽ(x) = N⁻³ Σ_d e^{i d·x/N} V̂(d/N)` the
//! lattice system becomes `P(-Δ + κṼ/2)P φ̌ = -(κ/2N²) P Ṽ`, with `P` the projection
//! onto the modes of the momentum set. The sum defining `Ṽ` runs over the cube of
//! differences `[-2L, 2L]³`; on a grid of `G ≥ 4L + 1` points per side the result
//! reproduces the momentum-space solution exactly, coarser grids alias.

use super::{ScatteringError, SolverOptions};
use crate::lattice::{norm_sq, MomentumSet, PotentialSpec, TWO_PI};
use crate::linalg::{conjugate_gradient, Fft3};
use rustfft::num_complex::Complex64;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct PositionSolution {
    pub momenta: Arc<MomentumSet>,
    /// `φ_p` recovered as `N³` times the grid Fourier coefficients.
    pub phi: Vec<f64>,
    pub grid: usize,
    pub iterations: usize,
    pub residual_norm: f64,
}

/// Solves on a grid of `grid³` points; `grid` must resolve the momentum set (`≥ 2L + 1`).
pub fn solve_position_space(
    v: &PotentialSpec,
    n: usize,
    momenta: Arc<MomentumSet>,
    grid: usize,
    opts: &SolverOptions,
) -> Result<PositionSolution, ScatteringError> {
    v.validate()?;
    if momenta.is_empty() {
        return Err(ScatteringError::EmptyMomenta);
    }
    let l = momenta.half_width() as usize;
    if grid < 2 * l + 1 {
        return Err(ScatteringError::InvalidOption(format!(
            "grid {grid} cannot resolve momenta up to {l} (need at least {})",
            2 * l + 1
        )));
    }
    let nf = n as f64;
    let g3 = (grid * grid * grid) as f64;
    let fft = Fft3::new(grid);
    let wrap = |x: i64| x.rem_euclid(grid as i64) as usize;
    let slot = |p: [i32; 3]| (wrap(p[0] as i64) * grid + wrap(p[1] as i64)) * grid + wrap(p[2] as i64);

    // Ṽ on the grid: x_j = j N / G, so e^{i d·x/N} = e^{2πi d·j/G}.
    let mut v_grid = vec![Complex64::default(); grid * grid * grid];
    let reach = 2 * l as i64;
    for a in -reach..=reach {
        for b in -reach..=reach {
            for c in -reach..=reach {
                let k = TWO_PI * ((a * a + b * b + c * c) as f64).sqrt() / nf;
                let s = (wrap(a) * grid + wrap(b)) * grid + wrap(c);
                v_grid[s] += Complex64::new(v.fourier_radial(k) / nf.powi(3), 0.0);
            }
        }
    }
    fft.inverse(&mut v_grid);
    let v_grid: Vec<f64> = v_grid.iter().map(|z| z.re).collect();

    let slots: Vec<usize> = momenta.points().iter().map(|&p| slot(p)).collect();
    // Fourier coefficients of a grid function: FFT / G³.
    let coefficients = |values: &[f64]| -> Vec<f64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        fft.forward(&mut buf);
        slots.iter().map(|&s| buf[s].re / g3).collect()
    };
    let synthesize = |c: &[f64]| -> Vec<f64> {
        let mut buf = vec![Complex64::default(); grid * grid * grid];
        for (&s, &ci) in slots.iter().zip(c) {
            buf[s] = Complex64::new(ci, 0.0);
        }
        fft.inverse(&mut buf);
        buf.iter().map(|z| z.re).collect()
    };

    let k2: Vec<f64> = momenta.points().iter().map(|&p| TWO_PI * TWO_PI * norm_sq(p) as f64 / (nf * nf)).collect();
    let b: Vec<f64> = coefficients(&v_grid).iter().map(|c| -v.kappa / (2.0 * nf * nf) * c).collect();
    let apply = |c: &[f64], out: &mut [f64]| {
        let u = synthesize(c);
        let vu: Vec<f64> = u.iter().zip(&v_grid).map(|(u, w)| u * w).collect();
        let vc = coefficients(&vu);
        for i in 0..c.len() {
            out[i] = k2[i] * c[i] + 0.5 * v.kappa * vc[i];
        }
    };
    let precondition = |r: &[f64], z: &mut [f64]| {
        for i in 0..r.len() {
            z[i] = r[i] / k2[i];
        }
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    // The coefficient system is the lattice system scaled by N⁻⁵.
    let tol = opts.tol / nf.powi(5);
    let cap = opts.max_iter.unwrap_or(2000);
    let mut c = vec![0.0; b.len()];
    let out = conjugate_gradient(apply, precondition, dot, &b, &mut c, tol, cap);
    if !out.converged {
        return Err(ScatteringError::NonConvergence { iterations: out.iterations, residual: out.residual });
    }
    let phi = c.iter().map(|x| x * nf.powi(3)).collect();
    Ok(PositionSolution { momenta, phi, grid, iterations: out.iterations, residual_norm: out.residual * nf.powi(5) })
}
