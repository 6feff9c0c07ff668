//! Interaction profiles, their Fourier transforms, and truncated momentum lattices.
//!
//! Momenta live on the dual lattice `2π Z³` of the unit torus. Points are stored as
//! integer coordinates `n` with the physical momentum `p = 2π n`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

pub const TWO_PI: f64 = 2.0 * PI;

/// Below this value of `|k| R` the closed-form transforms switch to their Taylor series.
const SERIES_THRESHOLD: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("invalid potential parameter: {0}")]
    InvalidPotential(String),
    #[error("momentum set is not symmetric under p -> -p (missing {0:?})")]
    NotSymmetric([i32; 3]),
    #[error("momentum set may not contain the zero mode")]
    ContainsZero,
    #[error("duplicate lattice point {0:?}")]
    Duplicate([i32; 3]),
    #[error("lattice point {0:?} is too far from the origin for the index table")]
    TooLarge([i32; 3]),
}

/// Radial shape of the interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `V(x) = h` for `|x| <= R`, zero outside.
    UniformBall,
    /// `V(x) = h (1 - |x|²/R²)` for `|x| <= R`, zero outside.
    SoftRadial,
}

/// A radially symmetric, compactly supported, nonnegative interaction `κ V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub profile: Profile,
    pub radius: f64,
    pub height: f64,
    pub kappa: f64,
}

impl PotentialSpec {
    pub fn new(profile: Profile, radius: f64, height: f64, kappa: f64) -> Result<Self, LatticeError> {
        let spec = Self { profile, radius, height, kappa };
        spec.validate()?;
        Ok(spec)
    }

    /// Unit ball of unit height, the reference profile.
    pub fn unit_ball(kappa: f64) -> Self {
        Self { profile: Profile::UniformBall, radius: 1.0, height: 1.0, kappa }
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(LatticeError::InvalidPotential(format!("radius must be > 0, got {}", self.radius)));
        }
        if !(self.height.is_finite() && self.height > 0.0) {
            return Err(LatticeError::InvalidPotential(format!("height must be > 0, got {}", self.height)));
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(LatticeError::InvalidPotential(format!("kappa must be >= 0, got {}", self.kappa)));
        }
        Ok(())
    }

    pub fn with_kappa(&self, kappa: f64) -> Self {
        Self { kappa, ..*self }
    }

    /// Position-space profile `V(r)` (without the coupling).
    pub fn value(&self, r: f64) -> f64 {
        if r > self.radius {
            return 0.0;
        }
        match self.profile {
            Profile::UniformBall => self.height,
            Profile::SoftRadial => {
                let s = r / self.radius;
                self.height * (1.0 - s * s)
            }
        }
    }

    /// Support radius of `V`.
    pub fn support(&self) -> f64 {
        self.radius
    }

    /// `∫ V(x) dx`, equal to `V̂(0)`.
    pub fn integral(&self) -> f64 {
        self.fourier_radial(0.0)
    }

    /// `V̂(k) = ∫ V(x) e^{-ik·x} dx` as a function of `|k|`.
    pub fn fourier_radial(&self, k: f64) -> f64 {
        let r = self.radius;
        let x = k.abs() * r;
        let r3 = r * r * r;
        match self.profile {
            Profile::UniformBall => {
                // 4πhR³ (sin x - x cos x) / x³
                let g = if x < SERIES_THRESHOLD {
                    // Σ (-1)^k 2(k+1) x^{2k} / (2k+3)!
                    power_series(x, 3, |k| 2.0 * (k + 1.0))
                } else {
                    (x.sin() - x * x.cos()) / (x * x * x)
                };
                4.0 * PI * self.height * r3 * g
            }
            Profile::SoftRadial => {
                // 8πhR³ (3 sin x - 3x cos x - x² sin x) / x⁵
                let g = if x < SERIES_THRESHOLD {
                    // Σ (-1)^k 4(k+1)(k+2) x^{2k} / (2k+5)!
                    power_series(x, 5, |k| 4.0 * (k + 1.0) * (k + 2.0))
                } else {
                    let (s, c) = x.sin_cos();
                    (3.0 * s - 3.0 * x * c - x * x * s) / x.powi(5)
                };
                8.0 * PI * self.height * r3 * g
            }
        }
    }

    pub fn fourier_coefficient(&self, k: [f64; 3]) -> f64 {
        self.fourier_radial(norm(k))
    }

    /// `(1/N) V̂(r/N)`, the transform of the GP-scaled potential `N² V(N x)`.
    pub fn scaled_fourier_coefficient(&self, r: [f64; 3], n: usize) -> f64 {
        let nf = n as f64;
        self.fourier_radial(norm(r) / nf) / nf
    }
}

/// `Σ_k (-1)^k c(k) x^{2k} / (2k+shift)!`, summed until the terms are negligible.
fn power_series(x: f64, shift: u32, c: impl Fn(f64) -> f64) -> f64 {
    let x2 = x * x;
    let mut inv_fact = 1.0 / (1..=shift).map(f64::from).product::<f64>();
    let mut pow = 1.0;
    let mut sum = 0.0;
    for k in 0..30 {
        let term = c(k as f64) * pow * inv_fact;
        sum += if k % 2 == 0 { term } else { -term };
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
        let m = f64::from(2 * k as u32 + shift);
        inv_fact /= (m + 1.0) * (m + 2.0);
        pow *= x2;
    }
    sum
}

fn norm(k: [f64; 3]) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
}

/// Integer lattice coordinates of a momentum `p = 2π n`.
pub type LatticePoint = [i32; 3];

pub fn add(a: LatticePoint, b: LatticePoint) -> LatticePoint {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: LatticePoint, b: LatticePoint) -> LatticePoint {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn neg(a: LatticePoint) -> LatticePoint {
    [-a[0], -a[1], -a[2]]
}

pub fn norm_sq(a: LatticePoint) -> i64 {
    a.iter().map(|&c| (c as i64) * (c as i64)).sum()
}

/// Physical momentum `2π n`.
pub fn momentum(a: LatticePoint) -> [f64; 3] {
    [TWO_PI * a[0] as f64, TWO_PI * a[1] as f64, TWO_PI * a[2] as f64]
}

/// Largest bounding cube (in points) for the dense index table.
const MAX_INDEX_CUBE: usize = 1 << 27;

/// Finite subset of `2π Z³ \ {0}`, closed under `p -> -p`, in lexicographic order.
#[derive(Debug, Clone)]
pub struct MomentumSet {
    cutoff: f64,
    points: Vec<LatticePoint>,
    half_width: i32,
    table: Vec<u32>,
}

impl PartialEq for MomentumSet {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points
    }
}

impl MomentumSet {
    /// Builds a set from explicit points. `cutoff` is set to the largest `|p|`.
    pub fn from_points(mut points: Vec<LatticePoint>) -> Result<Self, LatticeError> {
        points.sort_unstable();
        for w in points.windows(2) {
            if w[0] == w[1] {
                return Err(LatticeError::Duplicate(w[0]));
            }
        }
        if points.binary_search(&[0, 0, 0]).is_ok() {
            return Err(LatticeError::ContainsZero);
        }
        for p in &points {
            if points.binary_search(&neg(*p)).is_err() {
                return Err(LatticeError::NotSymmetric(neg(*p)));
            }
        }
        let cutoff = points
            .iter()
            .map(|&p| TWO_PI * (norm_sq(p) as f64).sqrt())
            .fold(0.0, f64::max);
        Self::with_cutoff(cutoff, points)
    }

    fn with_cutoff(cutoff: f64, points: Vec<LatticePoint>) -> Result<Self, LatticeError> {
        let half_width = points
            .iter()
            .flat_map(|p| p.iter().map(|c| c.abs()))
            .max()
            .unwrap_or(0);
        let side = (2 * half_width + 1) as usize;
        if side.saturating_pow(3) > MAX_INDEX_CUBE {
            return Err(LatticeError::TooLarge(points[0]));
        }
        let mut table = vec![u32::MAX; side * side * side];
        for (i, p) in points.iter().enumerate() {
            let slot = cube_slot(*p, half_width);
            table[slot] = i as u32;
        }
        Ok(Self { cutoff, points, half_width, table })
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn point(&self, i: usize) -> LatticePoint {
        self.points[i]
    }

    /// Largest `|n_i|` over all points and components.
    pub fn half_width(&self) -> i32 {
        self.half_width
    }

    pub fn index_of(&self, p: LatticePoint) -> Option<usize> {
        if p.iter().any(|c| c.abs() > self.half_width) {
            return None;
        }
        match self.table[cube_slot(p, self.half_width)] {
            u32::MAX => None,
            i => Some(i as usize),
        }
    }

    pub fn contains(&self, p: LatticePoint) -> bool {
        self.index_of(p).is_some()
    }

    /// Index of `-p` for the point at index `i`.
    pub fn negated(&self, i: usize) -> usize {
        self.index_of(neg(self.points[i])).expect("momentum sets are closed under negation")
    }

    /// `|p|²` of the point at index `i`.
    pub fn p_squared(&self, i: usize) -> f64 {
        TWO_PI * TWO_PI * norm_sq(self.points[i]) as f64
    }

    /// Whether the set is closed under flipping the sign of any single coordinate.
    pub fn is_reflection_closed(&self) -> bool {
        self.points.iter().all(|p| {
            (0..3).all(|axis| {
                let mut q = *p;
                q[axis] = -q[axis];
                self.contains(q)
            })
        })
    }
}

fn cube_slot(p: LatticePoint, half_width: i32) -> usize {
    let side = (2 * half_width + 1) as usize;
    let ix = (p[0] + half_width) as usize;
    let iy = (p[1] + half_width) as usize;
    let iz = (p[2] + half_width) as usize;
    (ix * side + iy) * side + iz
}

/// All `p ∈ 2πZ³` with `0 < |p| <= cutoff`, lexicographically ordered.
///
/// An empty set (cutoff below `2π`) is permitted and logged as a warning.
pub fn build_momentum_set(cutoff: f64) -> MomentumSet {
    let bound = (cutoff / TWO_PI).max(0.0);
    // Small slack so that cutoffs like 2π√3 keep the shell they name.
    let max_sq = bound * bound * (1.0 + 1e-12);
    let m = bound.floor() as i32;
    let mut points = Vec::new();
    for x in -m..=m {
        for y in -m..=m {
            for z in -m..=m {
                let p = [x, y, z];
                let r2 = norm_sq(p);
                if r2 > 0 && (r2 as f64) <= max_sq {
                    points.push(p);
                }
            }
        }
    }
    if points.is_empty() {
        log::warn!("momentum cutoff {cutoff} < 2π: the momentum set is empty");
    }
    MomentumSet::with_cutoff(cutoff, points).expect("ball sets fit the index table")
}
