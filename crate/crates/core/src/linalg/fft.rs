//! Three-dimensional transforms on cubic grids.
//!
//! [`CosineTransform3`] is the DFT of a sequence that is even in every coordinate,
//! stored on one octant `[0, K]³` of the period-`2K` grid (a DCT-I along each axis).
//! [`Fft3`] is a plain complex DFT on a cubic grid.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Unnormalized DCT-I along all three axes of an `(K+1)³` array.
///
/// Applying it twice multiplies by `(2K)³`.
pub struct CosineTransform3 {
    points: usize,
    fft: Option<Arc<dyn Fft<f64>>>,
}

impl CosineTransform3 {
    pub fn new(points: usize) -> Self {
        assert!(points >= 1);
        let fft = (points > 1).then(|| FftPlanner::new().plan_fft_forward(2 * (points - 1)));
        Self { points, fft }
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Period `2K` of the even extension.
    pub fn period(&self) -> usize {
        2 * (self.points - 1)
    }

    pub fn apply(&self, data: &mut [f64]) {
        let n = self.points;
        assert_eq!(data.len(), n * n * n);
        let Some(fft) = &self.fft else { return };
        let period = 2 * (n - 1);
        let mut buf = vec![Complex64::default(); period];
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];

        // Transforms the lines `lines[k]` (gathered/scattered by the closures) pairwise.
        let mut run = |count: usize,
                       gather: &mut dyn FnMut(usize, &mut [f64]),
                       scatter: &mut dyn FnMut(usize, &[f64])| {
            let mut k = 0;
            while k < count {
                gather(k, &mut a);
                let paired = k + 1 < count;
                if paired {
                    gather(k + 1, &mut b);
                } else {
                    b.iter_mut().for_each(|v| *v = 0.0);
                }
                for m in 0..n {
                    buf[m] = Complex64::new(a[m], b[m]);
                }
                for m in 1..n - 1 {
                    buf[period - m] = buf[m];
                }
                fft.process_with_scratch(&mut buf, &mut scratch);
                for m in 0..n {
                    a[m] = buf[m].re;
                    b[m] = buf[m].im;
                }
                scatter(k, &a);
                if paired {
                    scatter(k + 1, &b);
                }
                k += 2;
            }
        };

        // Axis 2: contiguous lines.
        {
            let cell = std::cell::RefCell::new(&mut *data);
            run(
                n * n,
                &mut |k, out| out.copy_from_slice(&cell.borrow()[k * n..(k + 1) * n]),
                &mut |k, v| cell.borrow_mut()[k * n..(k + 1) * n].copy_from_slice(v),
            );
        }
        // Axis 1: lines of stride n inside each plane.
        for plane in data.chunks_mut(n * n) {
            let cell = std::cell::RefCell::new(plane);
            run(
                n,
                &mut |k, out| {
                    let p = cell.borrow();
                    for (j, o) in out.iter_mut().enumerate() {
                        *o = p[j * n + k];
                    }
                },
                &mut |k, v| {
                    let mut p = cell.borrow_mut();
                    for (j, &x) in v.iter().enumerate() {
                        p[j * n + k] = x;
                    }
                },
            );
        }
        // Axis 0: gather one (i, k) slab per j.
        let mut slab = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                let src = (i * n + j) * n;
                slab[i * n..(i + 1) * n].copy_from_slice(&data[src..src + n]);
            }
            {
                let cell = std::cell::RefCell::new(&mut slab);
                run(
                    n,
                    &mut |k, out| {
                        let s = cell.borrow();
                        for (i, o) in out.iter_mut().enumerate() {
                            *o = s[i * n + k];
                        }
                    },
                    &mut |k, v| {
                        let mut s = cell.borrow_mut();
                        for (i, &x) in v.iter().enumerate() {
                            s[i * n + k] = x;
                        }
                    },
                );
            }
            for i in 0..n {
                let dst = (i * n + j) * n;
                data[dst..dst + n].copy_from_slice(&slab[i * n..(i + 1) * n]);
            }
        }
    }
}

/// Complex DFT on an `n³` grid, index `(i, j, k) -> (i n + j) n + k`.
pub struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// `X[k] = Σ_j x[j] e^{-2πi j·k/n}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(&self.forward, data);
    }

    /// `x[j] = Σ_k X[k] e^{+2πi j·k/n}` (no `1/n³`).
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(&self.inverse, data);
    }

    fn run(&self, fft: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n);
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        for line in data.chunks_mut(n) {
            fft.process_with_scratch(line, &mut scratch);
        }
        let mut line = vec![Complex64::default(); n];
        for plane in data.chunks_mut(n * n) {
            for k in 0..n {
                for j in 0..n {
                    line[j] = plane[j * n + k];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for j in 0..n {
                    plane[j * n + k] = line[j];
                }
            }
        }
        for j in 0..n {
            for k in 0..n {
                for i in 0..n {
                    line[i] = data[(i * n + j) * n + k];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for i in 0..n {
                    data[(i * n + j) * n + k] = line[i];
                }
            }
        }
    }
}
