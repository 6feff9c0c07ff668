//! FFT application of the truncated kernel sum `Σ_q V̂((p−q)/N) x_q`.
//!
//! Sets closed under coordinate reflections are handled on one octant with cosine
//! transforms (8× less memory than the full grid); other sets use a complex FFT of
//! side `4L + 2`, which is alias-free for differences up to `2L` per axis.

use crate::lattice::{LatticePoint, MomentumSet, PotentialSpec, TWO_PI};
use crate::linalg::{CosineTransform3, Fft3};
use rustfft::num_complex::Complex64;

/// The reduced unknowns a solver iterates on, with the weights that make the
/// reduced inner product equal the full ℓ² product.
pub(crate) struct ReducedSpace {
    /// Representative lattice points.
    pub points: Vec<LatticePoint>,
    pub weights: Vec<f64>,
    /// For each point of the full set, its representative.
    pub representative: Vec<u32>,
}

impl ReducedSpace {
    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).zip(&self.weights).map(|((x, y), w)| w * x * y).sum()
    }

    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        self.representative.iter().map(|&r| reduced[r as usize]).collect()
    }
}

pub(crate) enum KernelConvolution {
    Cosine { transform: CosineTransform3, kernel_hat: Vec<f64>, slots: Vec<usize> },
    Fourier { fft: Fft3, kernel_hat: Vec<Complex64>, slots: Vec<usize> },
}

impl KernelConvolution {
    /// Builds the reduced space and the convolution for `momenta` with kernel `V̂(·/N)`.
    pub fn new(v: &PotentialSpec, n_gp: usize, momenta: &MomentumSet) -> (ReducedSpace, Self) {
        let l = momenta.half_width().max(1) as usize;
        let scale = TWO_PI / n_gp as f64;
        let kernel = |d: [i64; 3]| {
            let r2 = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) as f64;
            v.fourier_radial(scale * r2.sqrt())
        };
        if momenta.is_reflection_closed() {
            let points_per_axis = 2 * l + 1;
            let transform = CosineTransform3::new(points_per_axis);
            let mut kernel_hat = vec![0.0; points_per_axis.pow(3)];
            for a in 0..points_per_axis {
                for b in 0..points_per_axis {
                    for c in 0..points_per_axis {
                        kernel_hat[(a * points_per_axis + b) * points_per_axis + c] =
                            kernel([a as i64, b as i64, c as i64]);
                    }
                }
            }
            transform.apply(&mut kernel_hat);
            let norm = (transform.period() as f64).powi(3);
            kernel_hat.iter_mut().for_each(|x| *x /= norm);

            let mut points = Vec::new();
            let mut weights = Vec::new();
            let mut slots = Vec::new();
            let mut representative = vec![u32::MAX; momenta.len()];
            for (i, p) in momenta.points().iter().enumerate() {
                if p.iter().all(|&c| c >= 0) {
                    let o = points.len() as u32;
                    points.push(*p);
                    weights.push(2f64.powi(p.iter().filter(|&&c| c != 0).count() as i32));
                    slots.push(
                        (p[0] as usize * points_per_axis + p[1] as usize) * points_per_axis + p[2] as usize,
                    );
                    representative[i] = o;
                }
            }
            for (i, p) in momenta.points().iter().enumerate() {
                if representative[i] == u32::MAX {
                    let q = [p[0].abs(), p[1].abs(), p[2].abs()];
                    let j = momenta.index_of(q).expect("reflection-closed set");
                    representative[i] = representative[j];
                }
            }
            let space = ReducedSpace { points, weights, representative };
            (space, KernelConvolution::Cosine { transform, kernel_hat, slots })
        } else {
            let side = 4 * l + 2;
            let fft = Fft3::new(side);
            let wrap = |x: i64| x.rem_euclid(side as i64) as usize;
            let mut kernel_hat = vec![Complex64::default(); side.pow(3)];
            let reach = 2 * l as i64;
            for a in -reach..=reach {
                for b in -reach..=reach {
                    for c in -reach..=reach {
                        kernel_hat[(wrap(a) * side + wrap(b)) * side + wrap(c)] =
                            Complex64::new(kernel([a, b, c]), 0.0);
                    }
                }
            }
            fft.forward(&mut kernel_hat);
            let norm = (side as f64).powi(3);
            kernel_hat.iter_mut().for_each(|x| *x /= norm);
            let slots = momenta
                .points()
                .iter()
                .map(|p| (wrap(p[0] as i64) * side + wrap(p[1] as i64)) * side + wrap(p[2] as i64))
                .collect();
            let space = ReducedSpace {
                points: momenta.points().to_vec(),
                weights: vec![1.0; momenta.len()],
                representative: (0..momenta.len() as u32).collect(),
            };
            (space, KernelConvolution::Fourier { fft, kernel_hat, slots })
        }
    }

    /// `out_p = Σ_q V̂((p−q)/N) x_q` on reduced vectors.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        match self {
            KernelConvolution::Cosine { transform, kernel_hat, slots } => {
                let mut grid = vec![0.0; kernel_hat.len()];
                for (&s, &xi) in slots.iter().zip(x) {
                    grid[s] = xi;
                }
                transform.apply(&mut grid);
                grid.iter_mut().zip(kernel_hat).for_each(|(g, k)| *g *= k);
                transform.apply(&mut grid);
                for (o, &s) in out.iter_mut().zip(slots) {
                    *o = grid[s];
                }
            }
            KernelConvolution::Fourier { fft, kernel_hat, slots } => {
                let mut grid = vec![Complex64::default(); kernel_hat.len()];
                for (&s, &xi) in slots.iter().zip(x) {
                    grid[s] = Complex64::new(xi, 0.0);
                }
                fft.forward(&mut grid);
                grid.iter_mut().zip(kernel_hat).for_each(|(g, k)| *g *= k);
                fft.inverse(&mut grid);
                for (o, &s) in out.iter_mut().zip(slots) {
                    *o = grid[s].re;
                }
            }
        }
    }

    /// Upper bound on the spectral radius of the truncated kernel matrix: it is a
    /// compression of the circulant whose eigenvalues are the transformed kernel.
    pub fn spectral_bound(&self) -> f64 {
        match self {
            KernelConvolution::Cosine { transform, kernel_hat, .. } => {
                let norm = (transform.period() as f64).powi(3);
                kernel_hat.iter().fold(0.0f64, |m, k| m.max(k.abs())) * norm
            }
            KernelConvolution::Fourier { fft, kernel_hat, .. } => {
                let norm = (fft.size() as f64).powi(3);
                kernel_hat.iter().fold(0.0f64, |m, k| m.max(k.norm())) * norm
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_momentum_set, sub};

    fn direct(v: &PotentialSpec, n: usize, s: &MomentumSet, x: &[f64]) -> Vec<f64> {
        s.points()
            .iter()
            .map(|&p| {
                s.points()
                    .iter()
                    .zip(x)
                    .map(|(&q, xq)| {
                        let d = sub(p, q);
                        let k = TWO_PI * (crate::lattice::norm_sq(d) as f64).sqrt() / n as f64;
                        v.fourier_radial(k) * xq
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn cosine_path_matches_direct_sum_on_symmetric_vectors() {
        let v = PotentialSpec::unit_ball(1.0);
        let s = build_momentum_set(2.5 * TWO_PI);
        let (space, conv) = KernelConvolution::new(&v, 3, &s);
        assert!(matches!(conv, KernelConvolution::Cosine { .. }));
        let reduced: Vec<f64> = space.points.iter().map(|p| 1.0 / (1.0 + crate::lattice::norm_sq(*p) as f64)).collect();
        let mut out = vec![0.0; reduced.len()];
        conv.apply(&reduced, &mut out);
        let full = space.expand(&reduced);
        let expect = direct(&v, 3, &s, &full);
        for (o, p) in out.iter().zip(&space.points) {
            let e = expect[s.index_of(*p).unwrap()];
            assert!((o - e).abs() < 1e-12 * e.abs().max(1.0), "{p:?}: {o} vs {e}");
        }
    }

    #[test]
    fn fourier_path_matches_direct_sum() {
        let v = PotentialSpec::new(crate::lattice::Profile::SoftRadial, 1.0, 1.0, 1.0).unwrap();
        let s = MomentumSet::from_points(vec![[1, 2, 0], [-1, -2, 0], [0, 1, 1], [0, -1, -1], [2, 0, -1], [-2, 0, 1]])
            .unwrap();
        let (space, conv) = KernelConvolution::new(&v, 2, &s);
        assert!(matches!(conv, KernelConvolution::Fourier { .. }));
        let x: Vec<f64> = (0..s.len()).map(|i| (i as f64 * 1.7).sin()).collect();
        let mut out = vec![0.0; x.len()];
        conv.apply(&x, &mut out);
        let expect = direct(&v, 2, &s, &x);
        assert_eq!(space.points.len(), s.len());
        for (o, e) in out.iter().zip(&expect) {
            assert!((o - e).abs() < 1e-12 * e.abs().max(1.0));
        }
    }
}
