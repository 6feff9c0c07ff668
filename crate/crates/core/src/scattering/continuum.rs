//! Continuum scattering length of the radial potential `κV/2`, by two independent
//! routes: the Born resolvent on `[0, R]` and a shooting ODE.
//!
//! With `u = r f` the zero-energy problem is `-u'' + v u = 0`, `v = κV/2`, and
//! `a = ∫ v r (r - u_B) dr` where `-u_B'' + v u_B = v r`, `u_B(0) = 0`, `u_B'(R) = 0`.

use super::ScatteringError;
use crate::lattice::PotentialSpec;

#[derive(Debug, Clone, Copy)]
pub struct RadialDiscretization {
    /// Finite-difference intervals on `[0, R]`.
    pub intervals: usize,
    /// Combine `n` and `2n` intervals to cancel the `O(h²)` term.
    pub richardson: bool,
}

impl Default for RadialDiscretization {
    fn default() -> Self {
        Self { intervals: 4000, richardson: true }
    }
}

struct RadialGrid {
    h: f64,
    r: Vec<f64>,
    v: Vec<f64>,
}

impl RadialGrid {
    /// Nodes `r_1..r_n`; `r_0 = 0` carries the Dirichlet condition.
    fn new(pot: &PotentialSpec, n: usize) -> Self {
        let big_r = pot.support();
        let h = big_r / n as f64;
        let r: Vec<f64> = (1..=n).map(|i| i as f64 * h).collect();
        // Evaluate just inside the edge so a discontinuous profile keeps its interior value.
        let v = r.iter().map(|&x| 0.5 * pot.kappa * pot.value(x.min(big_r * (1.0 - 1e-14)))).collect();
        Self { h, r, v }
    }

    /// Solves `(-d² + shift·v) u = f` with `u(0) = 0`, `u'(R) = 0` (ghost-point Neumann row).
    fn solve(&self, shift: f64, f: &[f64]) -> Vec<f64> {
        let n = self.r.len();
        let h2 = self.h * self.h;
        let diag: Vec<f64> = self.v.iter().map(|v| 2.0 / h2 + shift * v).collect();
        let lower = |i: usize| if i == n - 1 { -2.0 / h2 } else { -1.0 / h2 };
        let upper = -1.0 / h2;
        // Thomas algorithm.
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        c[0] = upper / diag[0];
        d[0] = f[0] / diag[0];
        for i in 1..n {
            let m = diag[i] - lower(i) * c[i - 1];
            c[i] = if i + 1 < n { upper / m } else { 0.0 };
            d[i] = (f[i] - lower(i) * d[i - 1]) / m;
        }
        let mut u = d;
        for i in (0..n - 1).rev() {
            u[i] -= c[i] * u[i + 1];
        }
        u
    }

    /// Trapezoid rule over `[0, R]` for samples at `r_1..r_n` (the integrand vanishes at 0).
    fn integrate(&self, f: &[f64]) -> f64 {
        let n = f.len();
        self.h * (f[..n - 1].iter().sum::<f64>() + 0.5 * f[n - 1])
    }
}

fn born_on_grid(pot: &PotentialSpec, n: usize) -> f64 {
    let g = RadialGrid::new(pot, n);
    let vr: Vec<f64> = g.v.iter().zip(&g.r).map(|(v, r)| v * r).collect();
    let u = g.solve(1.0, &vr);
    let integrand: Vec<f64> = vr.iter().zip(&g.r).zip(&u).map(|((vr, r), u)| vr * (r - u)).collect();
    g.integrate(&integrand)
}

/// Spectral radius of `√v (-d²)⁻¹ √v`, the Born-series ratio.
pub fn born_spectral_radius(pot: &PotentialSpec, disc: &RadialDiscretization) -> f64 {
    let g = RadialGrid::new(pot, disc.intervals);
    let sqrt_v: Vec<f64> = g.v.iter().map(|v| v.max(0.0).sqrt()).collect();
    let mut x: Vec<f64> = sqrt_v.iter().map(|s| s + 1e-3).collect();
    let mut rho = 0.0;
    for _ in 0..500 {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let f: Vec<f64> = x.iter().zip(&sqrt_v).map(|(x, s)| x * s / norm).collect();
        let u = g.solve(0.0, &f);
        let y: Vec<f64> = u.iter().zip(&sqrt_v).map(|(u, s)| u * s).collect();
        let next = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        x = y;
        if (next - rho).abs() <= 1e-13 * next {
            return next;
        }
        rho = next;
    }
    rho
}

/// Continuum scattering length from the Born resolvent.
///
/// Fails with [`ScatteringError::BornDivergence`] when the Born series does not converge.
pub fn born_scattering_length(pot: &PotentialSpec, disc: &RadialDiscretization) -> Result<f64, ScatteringError> {
    pot.validate()?;
    let rho = born_spectral_radius(pot, disc);
    if rho >= 1.0 {
        return Err(ScatteringError::BornDivergence { spectral_radius: rho });
    }
    let coarse = born_on_grid(pot, disc.intervals);
    if !disc.richardson {
        return Ok(coarse);
    }
    let fine = born_on_grid(pot, 2 * disc.intervals);
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Partial sums of the Born series: entry `k` holds all terms through order `κ^{k+1}`.
pub fn born_partial_sums(pot: &PotentialSpec, disc: &RadialDiscretization, max_order: usize) -> Vec<f64> {
    let g = RadialGrid::new(pot, disc.intervals);
    let vr: Vec<f64> = g.v.iter().zip(&g.r).map(|(v, r)| v * r).collect();
    let mut sums = Vec::with_capacity(max_order);
    let mut acc = g.integrate(&vr.iter().zip(&g.r).map(|(a, r)| a * r).collect::<Vec<_>>());
    sums.push(acc);
    // w_k = (-L⁻¹ v)^k L⁻¹(v r); order-(k+2) term is -∫ v r w_k.
    let mut w = g.solve(0.0, &vr);
    for k in 0..max_order.saturating_sub(1) {
        let term = -g.integrate(&vr.iter().zip(&w).map(|(a, b)| a * b).collect::<Vec<_>>());
        acc += term;
        sums.push(acc);
        if k + 2 < max_order {
            let vw: Vec<f64> = g.v.iter().zip(&w).map(|(v, w)| -v * w).collect();
            w = g.solve(0.0, &vw);
        }
    }
    sums
}

/// Scattering length from RK4 shooting of `u'' = (κ/2) V u`, `u(0) = 0`, `u'(0) = 1`:
/// `a = R - u(R)/u'(R)`.
pub fn ode_scattering_length(pot: &PotentialSpec) -> f64 {
    if pot.kappa == 0.0 {
        return 0.0;
    }
    let big_r = pot.support();
    let gamma = (0.5 * pot.kappa * pot.height).max(0.0).sqrt();
    let steps = 20_000usize.max((1000.0 * gamma * big_r).ceil() as usize);
    ode_scattering_length_with_steps(pot, steps)
}

pub(crate) fn ode_scattering_length_with_steps(pot: &PotentialSpec, steps: usize) -> f64 {
    let big_r = pot.support();
    let h = big_r / steps as f64;
    // Keep the last stage inside the support for the discontinuous profile.
    let v = |r: f64| 0.5 * pot.kappa * pot.value(r.min(big_r * (1.0 - 1e-14)));
    let (mut u, mut du) = (0.0f64, 1.0f64);
    // Rescale periodically so strong couplings do not overflow.
    for i in 0..steps {
        let r = i as f64 * h;
        let k1 = (du, v(r) * u);
        let k2 = (du + 0.5 * h * k1.1, v(r + 0.5 * h) * (u + 0.5 * h * k1.0));
        let k3 = (du + 0.5 * h * k2.1, v(r + 0.5 * h) * (u + 0.5 * h * k2.0));
        let k4 = (du + h * k3.1, v(r + h) * (u + h * k3.0));
        u += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        du += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        let scale = u.abs().max(du.abs());
        if scale > 1e100 {
            u /= scale;
            du /= scale;
        }
    }
    big_r - u / du
}
