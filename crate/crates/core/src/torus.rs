//! Circle and torus arithmetic.
//!
//! Coordinates live on T = ℝ/ℤ, stored as doubles in `[0, 1)`. Distances use
//! the shorter arc, `d(a,b) = min(|a−b|, 1−|a−b|) ≤ 1/2`. Vectors over the
//! product torus are split into a low-node block of length L and a hub block
//! of length M, measured by the split norm `‖·‖_p = ‖·‖_{p,ℝ^L} + ‖·‖_{p,ℝ^M}`.

use crate::error::Error;
use crate::rng::SplitMix64;
use crate::Result;

/// A point on the circle T = ℝ/ℤ; the stored value is always in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CirclePoint(f64);

impl CirclePoint {
    /// Wrap a finite real to `[0, 1)`. Rejects NaN and infinities.
    pub fn new(x: f64) -> Result<CirclePoint> {
        if !x.is_finite() {
            return Err(Error::invalid(format!("CirclePoint from non-finite {x}")));
        }
        Ok(wrap(x))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Reduce mod 1 via `x − floor(x)`, branch-free for negatives.
///
/// `x − floor(x)` can round to exactly 1.0 for tiny negative inputs, so that
/// case is clamped back to 0.0 to keep the `[0, 1)` invariant. The input must
/// be finite; validated entry points go through [`CirclePoint::new`].
#[inline]
pub fn wrap(x: f64) -> CirclePoint {
    debug_assert!(x.is_finite());
    let f = x - x.floor();
    CirclePoint(if f >= 1.0 { 0.0 } else { f })
}

/// Shorter-arc distance on the circle, in `[0, 1/2]`.
#[inline]
pub fn circle_dist(a: CirclePoint, b: CirclePoint) -> f64 {
    let d = (a.0 - b.0).abs();
    d.min(1.0 - d)
}

/// Exponent selector for the split p-norm; `p = ∞` is a distinguished case,
/// not a float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PNorm {
    Finite(f64),
    Infinity,
}

impl PNorm {
    pub fn validate(self) -> Result<PNorm> {
        match self {
            PNorm::Finite(p) if !(p >= 1.0) => {
                Err(Error::invalid(format!("p-norm exponent {p} < 1")))
            }
            other => Ok(other),
        }
    }

    /// Hölder conjugate `q` with `1/p + 1/q = 1`; `None` encodes `q = ∞`.
    pub fn conjugate(self) -> Option<f64> {
        match self {
            PNorm::Infinity => Some(1.0),
            PNorm::Finite(p) if p == 1.0 => None,
            PNorm::Finite(p) => Some(p / (p - 1.0)),
        }
    }
}

/// A real vector split into the low-node block (length L) and hub block
/// (length M) of the owning network.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitVector {
    pub low: Vec<f64>,
    pub hub: Vec<f64>,
}

impl SplitVector {
    pub fn new(low: Vec<f64>, hub: Vec<f64>) -> SplitVector {
        SplitVector { low, hub }
    }
}

fn block_p_norm(v: &[f64], p: PNorm) -> f64 {
    match p {
        PNorm::Infinity => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        PNorm::Finite(p) if p == 1.0 => v.iter().map(|x| x.abs()).sum(),
        PNorm::Finite(p) if p == 2.0 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        PNorm::Finite(p) => v
            .iter()
            .map(|x| x.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p),
    }
}

/// Split norm `‖v‖_p = ‖v_low‖_p + ‖v_hub‖_p`.
pub fn split_p_norm(v: &SplitVector, p: PNorm) -> Result<f64> {
    let p = p.validate()?;
    Ok(block_p_norm(&v.low, p) + block_p_norm(&v.hub, p))
}

/// `n` points sampled independently and uniformly (Lebesgue) on `[0, 1)`,
/// deterministic for a fixed seed.
pub fn sample_uniform(n: usize, seed: u64) -> Vec<CirclePoint> {
    let mut rng = SplitMix64::new(seed);
    (0..n).map(|_| CirclePoint(rng.next_f64())).collect()
}
