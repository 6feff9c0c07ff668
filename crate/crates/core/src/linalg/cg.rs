//! Preconditioned conjugate gradients with a caller-supplied inner product.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    /// Norm of the recursively updated residual at exit.
    pub residual: f64,
    pub converged: bool,
}

/// Solves `A x = b` for SPD `A` (with respect to `dot`), starting from the given `x`.
///
/// `apply(v, out)` computes `A v`, `precondition(r, out)` computes `M⁻¹ r`.
pub fn conjugate_gradient<A, P, D>(
    apply: A,
    precondition: P,
    dot: D,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> CgOutcome
where
    A: Fn(&[f64], &mut [f64]),
    P: Fn(&[f64], &mut [f64]),
    D: Fn(&[f64], &[f64]) -> f64,
{
    let n = b.len();
    let mut r = vec![0.0; n];
    let mut ap = vec![0.0; n];
    apply(x, &mut ap);
    for i in 0..n {
        r[i] = b[i] - ap[i];
    }
    let mut res = dot(&r, &r).sqrt();
    if res <= tol {
        return CgOutcome { iterations: 0, residual: res, converged: true };
    }
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return CgOutcome { iterations: it, residual: res, converged: false };
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = dot(&r, &r).sqrt();
        if res <= tol {
            return CgOutcome { iterations: it, residual: res, converged: true };
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    CgOutcome { iterations: max_iter, residual: res, converged: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_tridiagonal_system() {
        let n = 50;
        let apply = |v: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let left = if i > 0 { v[i - 1] } else { 0.0 };
                let right = if i + 1 < n { v[i + 1] } else { 0.0 };
                out[i] = (2.0 + i as f64) * v[i] - left - right;
            }
        };
        let b: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let mut x = vec![0.0; n];
        let diag = |r: &[f64], z: &mut [f64]| {
            for i in 0..n {
                z[i] = r[i] / (2.0 + i as f64);
            }
        };
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let out = conjugate_gradient(apply, diag, dot, &b, &mut x, 1e-13, 200);
        assert!(out.converged);
        let mut ax = vec![0.0; n];
        apply(&x, &mut ax);
        let err: f64 = ax.iter().zip(&b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err < 1e-12);
    }
}
