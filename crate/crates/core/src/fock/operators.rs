//! Second-quantized operators as sparse matrices on a [`FockBasis`].
//!
//! Every interaction sum uses closed truncation: a term is kept only when each
//! operator momentum lies in the basis modes, i.e. in `momenta ∪ {0}`. Momenta are
//! integer vectors `n` standing for `p = 2πn`.

use super::{FockBasis, FockError};
use crate::lattice::{add, neg, norm_sq, sub, PotentialSpec, TWO_PI};
use crate::linalg::{LinearOperator, SparseMatrix, Symmetry};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorTag {
    H0,
    H1,
    H2,
    Q2,
    Q3,
    Q4,
    Hmu,
    Nplus,
    Nzero,
    Ntotal,
    Bgen,
    Gamma1,
    Gamma2,
}

impl OperatorTag {
    pub const ALL: [OperatorTag; 13] = [
        OperatorTag::H0,
        OperatorTag::H1,
        OperatorTag::H2,
        OperatorTag::Q2,
        OperatorTag::Q3,
        OperatorTag::Q4,
        OperatorTag::Hmu,
        OperatorTag::Nplus,
        OperatorTag::Nzero,
        OperatorTag::Ntotal,
        OperatorTag::Bgen,
        OperatorTag::Gamma1,
        OperatorTag::Gamma2,
    ];

    pub fn needs_phi(self) -> bool {
        matches!(self, OperatorTag::Bgen | OperatorTag::Gamma1 | OperatorTag::Gamma2)
    }

    pub fn symmetry(self) -> Symmetry {
        if self == OperatorTag::Bgen {
            Symmetry::Antisymmetric
        } else {
            Symmetry::Symmetric
        }
    }

    pub fn is_diagonal(self) -> bool {
        matches!(
            self,
            OperatorTag::H0 | OperatorTag::H1 | OperatorTag::H2 | OperatorTag::Nplus | OperatorTag::Nzero | OperatorTag::Ntotal
        )
    }
}

impl fmt::Display for OperatorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Physical parameters shared by all operator tags.
#[derive(Debug, Clone, Copy)]
pub struct Couplings<'a> {
    pub potential: PotentialSpec,
    /// GP parameter `N`.
    pub n: usize,
    pub mu: f64,
    /// `φ_p` in the order of the basis momenta; required for `Bgen`, `Gamma1`, `Gamma2`.
    pub phi: Option<&'a [f64]>,
}

impl<'a> Couplings<'a> {
    pub fn new(potential: PotentialSpec, n: usize, mu: f64) -> Self {
        Self { potential, n, mu, phi: None }
    }

    pub fn with_phi(self, phi: &'a [f64]) -> Self {
        Self { phi: Some(phi), ..self }
    }
}

#[derive(Clone, Copy)]
enum Ladder {
    Create(usize),
    Annihilate(usize),
}
use Ladder::{Annihilate as A, Create as C};

/// Mode-level view of the couplings used while generating columns.
pub(crate) struct Generator<'a> {
    basis: &'a FockBasis,
    tag: OperatorTag,
    kappa_over_n: f64,
    vhat0: f64,
    mu: f64,
    nf: f64,
    /// `V̂(2π√k / N)` for `k = 0..=max |difference|²`.
    vhat_table: Vec<f64>,
    /// `φ` by mode (index 0 unused).
    phi: Vec<f64>,
    p2: Vec<f64>,
}

impl<'a> Generator<'a> {
    pub fn new(tag: OperatorTag, basis: &'a FockBasis, c: &Couplings) -> Result<Self, FockError> {
        c.potential.validate().map_err(|e| FockError::InvalidBasis(e.to_string()))?;
        if c.n == 0 {
            return Err(FockError::InvalidBasis("N must be positive".into()));
        }
        let m = basis.momenta().len();
        let phi = if tag.needs_phi() {
            let phi = c.phi.ok_or(FockError::MissingPhi(tag))?;
            if phi.len() != m {
                return Err(FockError::PhiMismatch { expected: m, got: phi.len() });
            }
            std::iter::once(0.0).chain(phi.iter().copied()).collect()
        } else {
            Vec::new()
        };
        let nf = c.n as f64;
        let l = basis.momenta().half_width() as i64;
        let max_sq = 3 * (4 * l) * (4 * l);
        let vhat_table = (0..=max_sq).map(|k| c.potential.fourier_radial(TWO_PI * (k as f64).sqrt() / nf)).collect();
        let p2 = (0..basis.modes()).map(|i| TWO_PI * TWO_PI * norm_sq(basis.mode_momentum(i)) as f64).collect();
        Ok(Self {
            basis,
            tag,
            kappa_over_n: c.potential.kappa / nf,
            vhat0: c.potential.fourier_radial(0.0),
            mu: c.mu,
            nf,
            vhat_table,
            phi,
            p2,
        })
    }

    fn vhat(&self, d: [i32; 3]) -> f64 {
        self.vhat_table[norm_sq(d) as usize]
    }

    fn momentum(&self, mode: usize) -> [i32; 3] {
        self.basis.mode_momentum(mode)
    }

    /// Excited mode carrying momentum `p` (never the zero mode).
    fn excited(&self, p: [i32; 3]) -> Option<usize> {
        if p == [0; 3] {
            None
        } else {
            self.basis.mode_of(p)
        }
    }

    fn diagonal(&self, occ: &[u8]) -> f64 {
        let n: f64 = occ.iter().map(|&x| x as f64).sum();
        let n0 = occ[0] as f64;
        let np = n - n0;
        let half = 0.5 * self.kappa_over_n * self.vhat0;
        match self.tag {
            OperatorTag::H0 => half * n * (n - 1.0) - self.mu * n,
            OperatorTag::H1 => occ.iter().zip(&self.p2).map(|(&x, p2)| x as f64 * p2).sum(),
            OperatorTag::H2 => {
                let direct: f64 = occ[1..]
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| x as f64 * self.vhat(self.momentum(i + 1)))
                    .sum();
                self.kappa_over_n * direct * n0 - half * np * (np - 1.0)
            }
            OperatorTag::Nplus => np,
            OperatorTag::Nzero => n0,
            OperatorTag::Ntotal => n,
            OperatorTag::Hmu => {
                // −μ𝒩 as one product keeps the free-gas energy exactly −μn.
                let kinetic: f64 = occ.iter().zip(&self.p2).map(|(&x, p2)| x as f64 * p2).sum();
                kinetic - self.mu * n
            }
            _ => 0.0,
        }
    }

    /// Applies `op` to the basis state `occ`, reporting each target occupation vector
    /// with its amplitude (targets may repeat).
    pub fn column(&self, occ: &[u8], emit: &mut dyn FnMut(&[u8], f64)) {
        let diag = self.diagonal(occ);
        if diag != 0.0 {
            emit(occ, diag);
        }
        if self.tag.is_diagonal() {
            return;
        }
        let mut scratch = occ.to_vec();
        let mut word = |ops: &[Ladder], coef: f64| {
            if coef == 0.0 {
                return;
            }
            scratch.copy_from_slice(occ);
            let mut amp = coef;
            for op in ops {
                match *op {
                    A(m) => {
                        if scratch[m] == 0 {
                            return;
                        }
                        amp *= (scratch[m] as f64).sqrt();
                        scratch[m] -= 1;
                    }
                    C(m) => {
                        scratch[m] += 1;
                        amp *= (scratch[m] as f64).sqrt();
                    }
                }
            }
            emit(&scratch, amp);
        };
        let occupied: Vec<usize> = (1..occ.len()).filter(|&m| occ[m] > 0).collect();
        let all_occupied: Vec<usize> = (0..occ.len()).filter(|&m| occ[m] > 0).collect();
        let modes = occ.len();
        let k = self.kappa_over_n;
        match self.tag {
            OperatorTag::Q2 | OperatorTag::Bgen => {
                // Σ_p c_p [a_p† a_{-p}† a_0 a_0 ± h.c.]
                let (coef, sign): (Box<dyn Fn(usize) -> f64>, f64) = if self.tag == OperatorTag::Q2 {
                    (Box::new(|e| 0.5 * k * self.vhat(self.momentum(e))), 1.0)
                } else {
                    (Box::new(|e| self.phi[e] / (2.0 * self.nf)), -1.0)
                };
                if occ[0] >= 2 {
                    for e in 1..modes {
                        let me = self.basis.mode_of(neg(self.momentum(e))).unwrap();
                        word(&[A(0), A(0), C(me), C(e)], coef(e));
                    }
                }
                for &e in &occupied {
                    let me = self.basis.mode_of(neg(self.momentum(e))).unwrap();
                    word(&[A(e), A(me), C(0), C(0)], sign * coef(e));
                }
            }
            OperatorTag::Q3 => {
                // (κ/N) Σ_{q,r,q+r≠0} V̂(r/N) [a_{q+r}† a_{-r}† a_q a_0 + a_0† a_q† a_{-r} a_{q+r}]
                if occ[0] >= 1 {
                    for &q in &occupied {
                        // t carries -r.
                        for t in 1..modes {
                            let pt = self.momentum(t);
                            if let Some(s) = self.excited(sub(self.momentum(q), pt)) {
                                word(&[A(0), A(q), C(t), C(s)], k * self.vhat(pt));
                            }
                        }
                    }
                }
                for &s in &occupied {
                    for &t in &occupied {
                        if let Some(q) = self.excited(add(self.momentum(s), self.momentum(t))) {
                            word(&[A(s), A(t), C(q), C(0)], k * self.vhat(self.momentum(t)));
                        }
                    }
                }
            }
            OperatorTag::Q4 => {
                // (κ/2N) Σ V̂(r/N) a_{p+r}† a_q† a_p a_{q+r}, all four momenta nonzero.
                for &x in &occupied {
                    for &y in &occupied {
                        for k1 in 1..modes {
                            let r = sub(self.momentum(k1), self.momentum(x));
                            if let Some(q) = self.excited(sub(self.momentum(y), r)) {
                                word(&[A(y), A(x), C(q), C(k1)], 0.5 * k * self.vhat(r));
                            }
                        }
                    }
                }
            }
            OperatorTag::Hmu => {
                // (κ/2N) Σ_{k1+k2=k3+k4} V̂((k1-k3)/N) a_{k1}† a_{k2}† a_{k3} a_{k4}, zero mode included.
                for &x in &all_occupied {
                    for &y in &all_occupied {
                        let total = add(self.momentum(x), self.momentum(y));
                        for k1 in 0..modes {
                            if let Some(k2) = self.basis.mode_of(sub(total, self.momentum(k1))) {
                                let r = sub(self.momentum(k1), self.momentum(x));
                                word(&[A(y), A(x), C(k2), C(k1)], 0.5 * k * self.vhat(r));
                            }
                        }
                    }
                }
            }
            OperatorTag::Gamma1 => {
                // (κ/2N²) Σ V̂(r/N) φ_p [a_{p+r}† a_q† a_{-p}† a_{q+r} a_0 a_0 + h.c.]
                let c = 0.5 * k / self.nf;
                if occ[0] >= 2 {
                    for &y in &occupied {
                        for x in 1..modes {
                            let mx = self.basis.mode_of(neg(self.momentum(x))).unwrap();
                            for k1 in 1..modes {
                                let r = sub(self.momentum(k1), self.momentum(x));
                                if let Some(q) = self.excited(sub(self.momentum(y), r)) {
                                    word(&[A(0), A(0), A(y), C(mx), C(q), C(k1)], c * self.vhat(r) * self.phi[x]);
                                }
                            }
                        }
                    }
                }
                // h.c.: a_0† a_0† a_{q+r}† a_{-p} a_q a_{p+r}
                for &k1 in &occupied {
                    for &q in &occupied {
                        for &m in &occupied {
                            let r = add(self.momentum(k1), self.momentum(m));
                            if let Some(y) = self.excited(add(self.momentum(q), r)) {
                                let p = self.basis.mode_of(neg(self.momentum(m))).unwrap();
                                word(&[A(k1), A(q), A(m), C(y), C(0), C(0)], c * self.vhat(r) * self.phi[p]);
                            }
                        }
                    }
                }
            }
            OperatorTag::Gamma2 => {
                // (κ/2N²) Σ V̂(r/N) φ_{q+r} [a_{p+r}† a_q† a_{-q-r}† a_p a_0 a_0 + h.c.]
                let c = 0.5 * k / self.nf;
                if occ[0] >= 2 {
                    for &x in &occupied {
                        for k1 in 1..modes {
                            let r = sub(self.momentum(k1), self.momentum(x));
                            for q in 1..modes {
                                if let Some(qr) = self.excited(add(self.momentum(q), r)) {
                                    let mqr = self.basis.mode_of(neg(self.momentum(qr))).unwrap();
                                    word(&[A(0), A(0), A(x), C(mqr), C(q), C(k1)], c * self.vhat(r) * self.phi[qr]);
                                }
                            }
                        }
                    }
                }
                // h.c.: a_0† a_0† a_p† a_{-q-r} a_q a_{p+r}
                for &k1 in &occupied {
                    for &q in &occupied {
                        for &m in &occupied {
                            let r = neg(add(self.momentum(m), self.momentum(q)));
                            if let Some(p) = self.excited(sub(self.momentum(k1), r)) {
                                let qr = self.basis.mode_of(neg(self.momentum(m))).unwrap();
                                word(&[A(k1), A(q), A(m), C(p), C(0), C(0)], c * self.vhat(r) * self.phi[qr]);
                            }
                        }
                    }
                }
            }
            _ => {}
        }
    }

    /// Column `j` as (row, value) pairs with duplicates merged.
    fn indexed_column(&self, j: usize, out: &mut Vec<(u32, f64)>) -> Result<(), FockError> {
        out.clear();
        let mut leak = None;
        self.column(self.basis.state(j), &mut |target, amp| match self.basis.index_of(target) {
            Some(i) => out.push((i as u32, amp)),
            None => {
                leak.get_or_insert_with(|| target.to_vec());
            }
        });
        if let Some(state) = leak {
            return Err(FockError::BasisLeak { tag: self.tag, state });
        }
        out.sort_unstable_by_key(|e| e.0);
        out.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        out.retain(|e| e.1 != 0.0);
        Ok(())
    }
}

/// Assembles `tag` on `basis` as a stored sparse matrix.
pub fn assemble(tag: OperatorTag, basis: &FockBasis, couplings: &Couplings) -> Result<SparseMatrix, FockError> {
    let generator = Generator::new(tag, basis, couplings)?;
    let columns: Vec<Vec<(u32, f64)>> = (0..basis.dim())
        .into_par_iter()
        .map_init(Vec::new, |buf, j| generator.indexed_column(j, buf).map(|_| buf.clone()))
        .collect::<Result<_, _>>()?;
    let triplets: Vec<(u32, u32, f64)> = columns
        .into_iter()
        .enumerate()
        .flat_map(|(j, col)| col.into_iter().map(move |(i, v)| (i, j as u32, v)))
        .collect();
    Ok(SparseMatrix::from_triplets(basis.dim(), triplets, tag.symmetry()))
}

/// `Σ_p c_p (a_p† a_{-p}† a_0 a_0 + sign · h.c.)`, assembled directly from its pair form.
pub fn pair_operator(basis: &FockBasis, coefficients: &[f64], sign: f64) -> Result<SparseMatrix, FockError> {
    if coefficients.len() != basis.momenta().len() {
        return Err(FockError::PhiMismatch { expected: basis.momenta().len(), got: coefficients.len() });
    }
    let mut triplets = Vec::new();
    let mut target = vec![0u8; basis.modes()];
    for j in 0..basis.dim() {
        let occ = basis.state(j);
        if occ[0] < 2 {
            continue;
        }
        let amp0 = ((occ[0] as f64) * (occ[0] as f64 - 1.0)).sqrt();
        for (i, &c) in coefficients.iter().enumerate() {
            let e = i + 1;
            let me = basis.mode_of(neg(basis.mode_momentum(e))).unwrap();
            target.copy_from_slice(occ);
            target[0] -= 2;
            target[me] += 1;
            let mut amp = amp0 * (target[me] as f64).sqrt();
            target[e] += 1;
            amp *= (target[e] as f64).sqrt();
            let row = basis.index_of(&target).ok_or_else(|| FockError::BasisLeak { tag: OperatorTag::Q2, state: target.clone() })?;
            triplets.push((row as u32, j as u32, c * amp));
            triplets.push((j as u32, row as u32, sign * c * amp));
        }
    }
    let symmetry = if sign == 1.0 {
        Symmetry::Symmetric
    } else if sign == -1.0 {
        Symmetry::Antisymmetric
    } else {
        Symmetry::General
    };
    Ok(SparseMatrix::from_triplets(basis.dim(), triplets, symmetry))
}

/// Matvec-only form of a symmetric or antisymmetric tag; rows are regenerated on the fly.
pub struct MatrixFreeOperator<'a> {
    generator: Generator<'a>,
    sign: f64,
}

impl<'a> MatrixFreeOperator<'a> {
    pub fn new(tag: OperatorTag, basis: &'a FockBasis, couplings: &Couplings) -> Result<Self, FockError> {
        let generator = Generator::new(tag, basis, couplings)?;
        // Row i equals column i (up to sign) for (anti)symmetric operators.
        let sign = if tag.symmetry() == Symmetry::Antisymmetric { -1.0 } else { 1.0 };
        Ok(Self { generator, sign })
    }
}

impl LinearOperator for MatrixFreeOperator<'_> {
    fn dim(&self) -> usize {
        self.generator.basis.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each_init(Vec::new, |buf, (i, yi)| {
            self.generator.indexed_column(i, buf).expect("operator leaves the basis");
            *yi = self.sign * buf.iter().map(|&(j, v)| v * x[j as usize]).sum::<f64>();
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::MomentumSet;
    use std::sync::Arc;

    fn pair_basis() -> FockBasis {
        let s = Arc::new(MomentumSet::from_points(vec![[1, 0, 0], [-1, 0, 0]]).unwrap());
        FockBasis::new(s, 2, Some([0; 3])).unwrap()
    }

    #[test]
    fn kinetic_energy_of_a_pair() {
        let b = pair_basis();
        let h1 = assemble(OperatorTag::H1, &b, &Couplings::new(PotentialSpec::unit_ball(1.0), 4, 0.0)).unwrap();
        assert!((h1.get(1, 1) - 2.0 * TWO_PI * TWO_PI).abs() < 1e-12);
        assert_eq!(h1.get(0, 0), 0.0);
    }

    #[test]
    fn q2_two_state_element() {
        let b = pair_basis();
        let v = PotentialSpec::unit_ball(0.8);
        let n = 5;
        let q2 = assemble(OperatorTag::Q2, &b, &Couplings::new(v, n, 0.0)).unwrap();
        let expect = v.kappa / n as f64 * v.fourier_radial(TWO_PI / n as f64) * 2f64.sqrt();
        assert!((q2.get(1, 0) - expect).abs() < 1e-14);
        assert!((q2.get(0, 1) - expect).abs() < 1e-14);
        assert_eq!(q2.get(0, 0), 0.0);
    }

    #[test]
    fn free_gas_is_diagonal() {
        let s = Arc::new(crate::lattice::build_momentum_set(TWO_PI * 1.5));
        let b = FockBasis::with_range(s, 0..=3, Some([0; 3]), 1 << 20).unwrap();
        let h = assemble(OperatorTag::Hmu, &b, &Couplings::new(PotentialSpec::unit_ball(0.0), 3, 1.5)).unwrap();
        assert!(h.is_diagonal());
    }

    #[test]
    fn missing_phi_is_reported() {
        let b = pair_basis();
        let r = assemble(OperatorTag::Bgen, &b, &Couplings::new(PotentialSpec::unit_ball(1.0), 2, 0.0));
        assert!(matches!(r, Err(FockError::MissingPhi(OperatorTag::Bgen))));
    }

    #[test]
    fn matrix_free_matches_stored() {
        let s = Arc::new(crate::lattice::build_momentum_set(TWO_PI * 1.5));
        let b = FockBasis::with_range(s.clone(), 2..=3, Some([0; 3]), 1 << 20).unwrap();
        let phi: Vec<f64> = (0..s.len()).map(|i| -0.01 * (1.0 + (i % 3) as f64)).collect();
        let phi: Vec<f64> = (0..s.len()).map(|i| 0.5 * (phi[i] + phi[s.negated(i)])).collect();
        let c = Couplings::new(PotentialSpec::unit_ball(0.4), 3, 0.7).with_phi(&phi);
        let x: Vec<f64> = (0..b.dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        for tag in OperatorTag::ALL {
            let stored = assemble(tag, &b, &c).unwrap();
            let free = MatrixFreeOperator::new(tag, &b, &c).unwrap();
            let (a, f) = (stored.apply_vec(&x), free.apply_vec(&x));
            let err = a.iter().zip(&f).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(err < 1e-12, "{tag}: {err}");
        }
    }
}
