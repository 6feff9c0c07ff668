//! Occupation-number bases of fixed particle number and (optionally) total momentum.
//!
//! Mode 0 is the zero-momentum mode; mode `i ≥ 1` is `momenta.point(i - 1)`. Within each
//! particle-number block the states are in descending lexicographic order of their
//! occupation vectors, so the pure condensate `(n; 0, …)` comes first.

use super::FockError;
use crate::lattice::{add, sub, LatticePoint, MomentumSet};
use std::ops::RangeInclusive;
use std::sync::Arc;

pub const DEFAULT_DIM_CAP: usize = 2_000_000;

#[derive(Debug, Clone)]
pub struct FockBasis {
    momenta: Arc<MomentumSet>,
    n_min: usize,
    n_max: usize,
    total_momentum: Option<LatticePoint>,
    modes: usize,
    occupations: Vec<u8>,
    /// `block_start[k]..block_start[k+1]` holds the states with `n_min + k` particles.
    block_start: Vec<usize>,
}

impl FockBasis {
    /// The sector with exactly `n` particles and total momentum `total_momentum`
    /// (`None` leaves the momentum unconstrained).
    pub fn new(momenta: Arc<MomentumSet>, n: usize, total_momentum: Option<LatticePoint>) -> Result<Self, FockError> {
        Self::with_range(momenta, n..=n, total_momentum, DEFAULT_DIM_CAP)
    }

    /// Direct sum of the sectors `n ∈ n_range`.
    pub fn with_range(
        momenta: Arc<MomentumSet>,
        n_range: RangeInclusive<usize>,
        total_momentum: Option<LatticePoint>,
        dim_cap: usize,
    ) -> Result<Self, FockError> {
        let (n_min, n_max) = (*n_range.start(), *n_range.end());
        if n_min > n_max {
            return Err(FockError::InvalidBasis(format!("empty particle-number range {n_min}..={n_max}")));
        }
        if n_max > u8::MAX as usize {
            return Err(FockError::InvalidBasis(format!("at most {} particles supported", u8::MAX)));
        }
        let modes = momenta.len() + 1;
        let mut mode_momenta = vec![[0; 3]];
        mode_momenta.extend_from_slice(momenta.points());
        let reach = momenta.half_width();
        let mut occupations = Vec::new();
        let mut block_start = vec![0];
        let mut enumerator = Enumerator {
            mode_momenta: &mode_momenta,
            reach,
            constrain: total_momentum.is_some(),
            current: vec![0u8; modes],
            out: &mut occupations,
            cap: dim_cap,
            count: 0,
        };
        for n in n_min..=n_max {
            enumerator.fill(0, n, total_momentum.unwrap_or([0; 3]))?;
            block_start.push(enumerator.count);
        }
        Ok(Self { momenta, n_min, n_max, total_momentum, modes, occupations, block_start })
    }

    pub fn momenta(&self) -> &Arc<MomentumSet> {
        &self.momenta
    }

    pub fn dim(&self) -> usize {
        self.occupations.len() / self.modes
    }

    /// Number of modes including the zero mode.
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn n_range(&self) -> RangeInclusive<usize> {
        self.n_min..=self.n_max
    }

    pub fn total_momentum(&self) -> Option<LatticePoint> {
        self.total_momentum
    }

    pub fn state(&self, i: usize) -> &[u8] {
        &self.occupations[i * self.modes..(i + 1) * self.modes]
    }

    pub fn states(&self) -> impl Iterator<Item = &[u8]> {
        self.occupations.chunks_exact(self.modes)
    }

    /// Index range of the states with exactly `n` particles.
    pub fn block(&self, n: usize) -> Option<std::ops::Range<usize>> {
        if n < self.n_min || n > self.n_max {
            return None;
        }
        let k = n - self.n_min;
        Some(self.block_start[k]..self.block_start[k + 1])
    }

    pub fn index_of(&self, occupation: &[u8]) -> Option<usize> {
        if occupation.len() != self.modes {
            return None;
        }
        let n: usize = occupation.iter().map(|&x| x as usize).sum();
        let range = self.block(n)?;
        let slice = &self.occupations[range.start * self.modes..range.end * self.modes];
        let count = range.len();
        // Descending order: probe before target iff probe > target.
        let (mut lo, mut hi) = (0, count);
        while lo < hi {
            let mid = (lo + hi) / 2;
            let probe = &slice[mid * self.modes..(mid + 1) * self.modes];
            match occupation.cmp(probe) {
                std::cmp::Ordering::Equal => return Some(range.start + mid),
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
            }
        }
        None
    }

    pub fn particle_number(&self, i: usize) -> usize {
        self.state(i).iter().map(|&x| x as usize).sum()
    }

    /// Occupation of the zero mode.
    pub fn n_zero(&self, i: usize) -> usize {
        self.state(i)[0] as usize
    }

    pub fn n_plus(&self, i: usize) -> usize {
        self.state(i)[1..].iter().map(|&x| x as usize).sum()
    }

    pub fn mode_momentum(&self, mode: usize) -> LatticePoint {
        if mode == 0 {
            [0; 3]
        } else {
            self.momenta.point(mode - 1)
        }
    }

    /// Mode carrying momentum `p`, if any.
    pub fn mode_of(&self, p: LatticePoint) -> Option<usize> {
        if p == [0; 3] {
            Some(0)
        } else {
            self.momenta.index_of(p).map(|i| i + 1)
        }
    }

    pub fn state_momentum(&self, i: usize) -> LatticePoint {
        self.state(i).iter().enumerate().fold([0; 3], |acc, (m, &nu)| {
            let p = self.mode_momentum(m);
            add(acc, [p[0] * nu as i32, p[1] * nu as i32, p[2] * nu as i32])
        })
    }

    /// Index of the pure condensate with `n` particles, when it lies in the basis.
    pub fn condensate_index(&self, n: usize) -> Option<usize> {
        let mut occ = vec![0u8; self.modes];
        occ[0] = u8::try_from(n).ok()?;
        self.index_of(&occ)
    }

    /// States whose occupied excited modes all satisfy `|p|² ≤ radius²` (in units of `2π`).
    pub fn inner_states(&self, radius_sq: i64) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| {
                self.state(i)[1..]
                    .iter()
                    .enumerate()
                    .all(|(m, &nu)| nu == 0 || crate::lattice::norm_sq(self.momenta.point(m)) <= radius_sq)
            })
            .collect()
    }
}

struct Enumerator<'a> {
    mode_momenta: &'a [LatticePoint],
    reach: i32,
    constrain: bool,
    current: Vec<u8>,
    out: &'a mut Vec<u8>,
    cap: usize,
    count: usize,
}

impl Enumerator<'_> {
    fn fill(&mut self, mode: usize, remaining: usize, target: LatticePoint) -> Result<(), FockError> {
        if mode == self.mode_momenta.len() {
            if remaining == 0 && (!self.constrain || target == [0; 3]) {
                self.count += 1;
                if self.count > self.cap {
                    return Err(FockError::DimensionOverflow { cap: self.cap });
                }
                self.out.extend_from_slice(&self.current);
            }
            return Ok(());
        }
        if self.constrain {
            // Every remaining particle moves each component by at most `reach`.
            let bound = remaining as i64 * self.reach as i64;
            if target.iter().any(|&c| (c as i64).abs() > bound) {
                return Ok(());
            }
        }
        if mode + 1 == self.mode_momenta.len() {
            // The last mode takes everything that is left.
            return self.place(mode, remaining, remaining, target);
        }
        for nu in (0..=remaining).rev() {
            self.place(mode, nu, remaining, target)?;
        }
        Ok(())
    }

    fn place(&mut self, mode: usize, nu: usize, remaining: usize, target: LatticePoint) -> Result<(), FockError> {
        let p = self.mode_momenta[mode];
        let shift = [p[0] * nu as i32, p[1] * nu as i32, p[2] * nu as i32];
        self.current[mode] = nu as u8;
        let r = self.fill(mode + 1, remaining - nu, sub(target, shift));
        self.current[mode] = 0;
        r
    }
}
