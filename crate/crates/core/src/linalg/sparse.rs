//! Compressed sparse row storage for real operators on truncated Fock sectors.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

/// Something that can be applied to a vector.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    Symmetric,
    Antisymmetric,
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    symmetry: Symmetry,
}

impl SparseMatrix {
    pub fn zeros(dim: usize, symmetry: Symmetry) -> Self {
        Self { dim, row_ptr: vec![0; dim + 1], cols: Vec::new(), vals: Vec::new(), symmetry }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed and exact zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(u32, u32, f64)>, symmetry: Symmetry) -> Self {
        triplets.par_sort_unstable_by_key(|&(r, c, _)| ((r as u64) << 32) | c as u64);
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if let (Some(&lr), Some(&lc)) = (rows.last(), cols.last()) {
                if lr == r && lc == c {
                    *vals.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            cols.push(c);
            vals.push(v);
        }
        let mut keep_cols = Vec::with_capacity(cols.len());
        let mut keep_vals = Vec::with_capacity(vals.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v != 0.0 {
                row_ptr[r as usize + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { dim, row_ptr, cols: keep_cols, vals: keep_vals, symmetry }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let triplets = diag
            .iter()
            .enumerate()
            .map(|(i, &v)| (i as u32, i as u32, v))
            .collect();
        Self::from_triplets(diag.len(), triplets, Symmetry::Symmetric)
    }

    pub fn from_dense(m: &DMatrix<f64>, symmetry: Symmetry) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    t.push((i as u32, j as u32, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), t, symmetry)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn with_symmetry(mut self, symmetry: Symmetry) -> Self {
        self.symmetry = symmetry;
        self
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()].iter().zip(&self.vals[range]).map(|(&c, &v)| (c as usize, v))
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&(j as u32)) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries().all(|(i, j, _)| i == j)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.vals.iter().map(|v| v * v).sum::<f64>().sqrt() + 0.0
    }

    /// Largest absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let mut col = vec![0.0; self.dim];
        for (_, j, v) in self.entries() {
            col[j] += v.abs();
        }
        col.into_iter().fold(0.0, f64::max)
    }

    pub fn transpose(&self) -> Self {
        let t = self.entries().map(|(i, j, v)| (j as u32, i as u32, v)).collect();
        Self::from_triplets(self.dim, t, self.symmetry)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, other: &Self, alpha: f64) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut t: Vec<_> = self.entries().map(|(i, j, v)| (i as u32, j as u32, v)).collect();
        t.extend(other.entries().map(|(i, j, v)| (i as u32, j as u32, alpha * v)));
        let symmetry = if self.symmetry == other.symmetry { self.symmetry } else { Symmetry::General };
        Self::from_triplets(self.dim, t, symmetry)
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let rows: Vec<Vec<(u32, u32, f64)>> = (0..self.dim)
            .into_par_iter()
            .map_init(
                || (vec![0.0f64; other.dim], vec![false; other.dim], Vec::new()),
                |(acc, seen, touched), i| {
                    for (k, a) in self.row(i) {
                        for (j, b) in other.row(k) {
                            if !seen[j] {
                                seen[j] = true;
                                touched.push(j);
                            }
                            acc[j] += a * b;
                        }
                    }
                    let mut out = Vec::with_capacity(touched.len());
                    for &j in touched.iter() {
                        out.push((i as u32, j as u32, acc[j]));
                        acc[j] = 0.0;
                        seen[j] = false;
                    }
                    touched.clear();
                    out
                },
            )
            .collect();
        Self::from_triplets(self.dim, rows.into_iter().flatten().collect(), Symmetry::General)
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other).add_scaled(&other.matmul(self), -1.0)
    }

    /// Largest violation of the declared (anti)symmetry.
    pub fn symmetry_defect(&self) -> f64 {
        let sign = match self.symmetry {
            Symmetry::Symmetric => 1.0,
            Symmetry::Antisymmetric => -1.0,
            Symmetry::General => return 0.0,
        };
        self.entries()
            .map(|(i, j, v)| (v - sign * self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// Principal submatrix on the given (sorted) indices.
    pub fn restrict(&self, indices: &[usize]) -> Self {
        let mut position = vec![u32::MAX; self.dim];
        for (k, &i) in indices.iter().enumerate() {
            position[i] = k as u32;
        }
        let mut t = Vec::new();
        for (k, &i) in indices.iter().enumerate() {
            for (j, v) in self.row(i) {
                if position[j] != u32::MAX {
                    t.push((k as u32, position[j], v));
                }
            }
        }
        Self::from_triplets(indices.len(), t, self.symmetry)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, j, v) in self.entries() {
            m[(i, j)] = v;
        }
        m
    }

    /// Writes `row col value` lines in row-major order.
    pub fn write_coo<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (i, j, v) in self.entries() {
            writeln!(w, "{i} {j} {v:.16e}")?;
        }
        Ok(())
    }
}

impl LinearOperator for SparseMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        });
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
