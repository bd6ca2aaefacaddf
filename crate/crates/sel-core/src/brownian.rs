use crate::error::{Result, SelError};
use std::f64::consts::TAU;

/// splitmix64 finalizer. Used both for seed derivation and as the
/// counter-based generator behind Gaussian sampling, so every draw is a pure
/// function of (seed, counter).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// k-th raw draw of the stream identified by `seed` (splitmix64 sequence).
#[inline]
fn raw(seed: u64, k: u64) -> u64 {
    mix64(seed.wrapping_add(k.wrapping_add(1).wrapping_mul(GOLDEN)))
}

/// Maps a u64 to the open interval (0, 1); never returns 0 or 1.
#[inline]
fn unit_open(u: u64) -> f64 {
    ((u >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Standard normal draw j of stream `seed` (Box-Muller, cosine branch).
#[inline]
pub fn standard_normal(seed: u64, j: u64) -> f64 {
    let u1 = unit_open(raw(seed, 2 * j));
    let u2 = unit_open(raw(seed, 2 * j + 1));
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

/// Seeded Wiener increments at a fixed resolution.
///
/// `increments[k]` is W((k+1)dt) - W(k dt). Reproducible from
/// (seed, dt, count); `refine` halves dt via a Brownian-bridge split whose
/// pairwise sums reproduce the parent increments bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    pub seed: u64,
    pub dt: f64,
    pub increments: Vec<f64>,
}

/// Splits dw into two half-increments that sum back to dw bit-exactly.
/// `bridge` is the N(0, dt/4) bridge perturbation.
fn split_exact(dw: f64, bridge: f64) -> (f64, f64) {
    let mut d1 = 0.5 * dw + bridge;
    let mut d2 = dw - d1;
    // Nudge until the floating-point sum reproduces dw; converges in a step
    // or two because d1 + d2 is already within an ulp.
    for _ in 0..8 {
        let s = d1 + d2;
        if s == dw {
            return (d1, d2);
        }
        d2 -= s - dw;
    }
    if d1 + d2 != dw {
        d1 = 0.5 * dw;
        d2 = dw - d1;
        if d1 + d2 != dw {
            // dw/2 is exact in binary, so this is unreachable; keep a hard
            // fallback anyway.
            d1 = dw;
            d2 = 0.0;
        }
    }
    (d1, d2)
}

impl BrownianPath {
    /// Samples `count` increments of variance `dt`.
    pub fn sample(seed: u64, dt: f64, count: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(SelError::ParamDomain(format!("brownian dt must be > 0, got {dt}")));
        }
        let sd = dt.sqrt();
        let increments = (0..count as u64).map(|j| sd * standard_normal(seed, j)).collect();
        Ok(BrownianPath { seed, dt, increments })
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    /// Total time span covered by the path.
    pub fn t_end(&self) -> f64 {
        self.dt * self.len() as f64
    }

    /// Halves dt. Each parent increment (over dt) is split into two children
    /// (over dt/2) with a Brownian-bridge midpoint draw; children sum to the
    /// parent bit-exactly.
    pub fn refine(&self) -> BrownianPath {
        let child_seed = mix64(self.seed ^ 0x5EED_B00B_5EED_B00Bu64);
        // bridge sd: the midpoint deviates from dw/2 with variance dt/4
        let sd = 0.5 * self.dt.sqrt();
        let mut out = Vec::with_capacity(self.increments.len() * 2);
        for (k, &dw) in self.increments.iter().enumerate() {
            let bridge = sd * standard_normal(child_seed, k as u64);
            let (d1, d2) = split_exact(dw, bridge);
            out.push(d1);
            out.push(d2);
        }
        BrownianPath { seed: child_seed, dt: 0.5 * self.dt, increments: out }
    }

    /// Index of the first increment at or after time `t` (increments tile
    /// [0, t_end] at resolution dt). Times are snapped to the nearest grid
    /// index to keep window arithmetic robust.
    pub fn index_at(&self, t: f64) -> usize {
        ((t / self.dt).round().max(0.0)) as usize
    }

    /// The increments spanning [t0, t1]. Errors if the path is too short.
    pub fn slice(&self, t0: f64, t1: f64) -> Result<&[f64]> {
        let i0 = self.index_at(t0);
        let i1 = self.index_at(t1);
        if i1 > self.len() {
            return Err(SelError::PathExhausted { needed: t1, have: self.t_end() });
        }
        Ok(&self.increments[i0..i1])
    }
}
