//! One-dimensional hub maps and their attractors.
//!
//! A hub with normalized in-degree `κ` under coupling `h` is approximated by
//! the reduced map
//!
//! ```text
//! g(y) = σ y + β ĥ(y)   mod 1,      β = α κ,   ĥ(y) = ∫ h(y, x) dm(x)
//! ```
//!
//! For the sine-type presets `ĥ(y) = −sin(2πy)`, so `g = T_β` with
//! `T_β(y) = σy − β sin(2πy)`. As `β` grows, `T_β` passes from uniform
//! expansion through an attracting fixed point at 0 to an attracting
//! symmetric period-2 orbit; [`classify`] decides the regime numerically with
//! a certified derivative bound for expansion and orbit detection otherwise.

use std::f64::consts::PI;

use crate::coupling::{CouplingSpec, MeanField};
use crate::error::Error;
use crate::torus::{circle_dist, wrap, CirclePoint};
use crate::Result;

/// Grid size used by the expansion certificate and critical-point scan.
const CERT_GRID: usize = 10_000;
/// Evenly spaced iteration seeds used by the attractor search.
const SEARCH_SEEDS: usize = 32;

/// Reduced hub map `g(y) = σy + β ĥ(y) mod 1`.
#[derive(Debug, Clone)]
pub struct ReducedMap {
    pub sigma: u32,
    /// Effective coupling `β = ακ`.
    pub beta: f64,
    pub mean_field: MeanField,
}

/// Build the reduced map of a hub with connectivity `κ ∈ (0, 1]`.
pub fn make_reduced(
    sigma: u32,
    alpha: f64,
    kappa: f64,
    coupling: &CouplingSpec,
) -> Result<ReducedMap> {
    if sigma < 2 {
        return Err(Error::invalid("sigma must be >= 2"));
    }
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::invalid(format!("kappa {kappa} outside (0, 1]")));
    }
    Ok(ReducedMap {
        sigma,
        beta: alpha * kappa,
        mean_field: coupling.mean_field(),
    })
}

impl ReducedMap {
    /// The family `T_β(y) = 2y − β sin(2πy)`.
    pub fn t_beta(beta: f64) -> ReducedMap {
        ReducedMap {
            sigma: 2,
            beta,
            mean_field: CouplingSpec::SineDiffusive.mean_field(),
        }
    }

    #[inline]
    pub fn eval(&self, y: CirclePoint) -> CirclePoint {
        wrap(self.eval_lift(y.value()))
    }

    /// The lift `σy + β ĥ(y)` without reduction mod 1 (used for finite
    /// differences, where the wrap jump would corrupt the quotient).
    #[inline]
    pub fn eval_lift(&self, y: f64) -> f64 {
        self.sigma as f64 * y + self.beta * self.mean_field.eval(y)
    }

    /// Analytic derivative `g'(y) = σ + β ĥ'(y)`.
    #[inline]
    pub fn deriv(&self, y: f64) -> f64 {
        self.sigma as f64 + self.beta * self.mean_field.deriv(y)
    }

    /// Lipschitz constant of `g'`: `|g''| ≤ |β| · sup|ĥ''|`.
    pub fn deriv_lipschitz(&self) -> f64 {
        self.beta.abs() * self.mean_field.second_deriv_bound()
    }
}

/// Numerically decided regime of a reduced map.
#[derive(Debug, Clone, PartialEq)]
pub enum AttractorReport {
    /// Certified `min |g'| > 1` over the whole circle (grid minimum minus
    /// the Lipschitz slack between grid points).
    Expanding { min_abs_derivative: f64 },
    /// A closed attracting orbit; `multiplier` is the derivative product
    /// around it (`|multiplier| < 1`).
    PeriodicAttractor {
        orbit: Vec<CirclePoint>,
        multiplier: f64,
    },
    /// Neither certificate succeeded (e.g. at a bifurcation point).
    Unresolved,
}

impl AttractorReport {
    pub fn period(&self) -> usize {
        match self {
            AttractorReport::PeriodicAttractor { orbit, .. } => orbit.len(),
            _ => 0,
        }
    }

    pub fn regime_name(&self) -> &'static str {
        match self {
            AttractorReport::Expanding { .. } => "Expanding",
            AttractorReport::PeriodicAttractor { orbit, .. } if orbit.len() == 1 => "FixedPoint",
            AttractorReport::PeriodicAttractor { .. } => "PeriodicAttractor",
            AttractorReport::Unresolved => "Unresolved",
        }
    }
}

/// Classify the attractor of `g`.
///
/// Expansion first: `|g'|` is evaluated on a uniform grid and the variation
/// between grid points bounded by the analytic Lipschitz constant of `g'`;
/// the map is declared expanding only if the certified minimum exceeds 1.
/// Otherwise orbits are hunted by iterating `burn_in` steps from every
/// critical point of `g` (bisected from sign changes of `g'`) and from a seed
/// grid, then detecting a first return within `tol` that persists for three
/// more cycles and has `|multiplier| < 1`.
pub fn classify(
    g: &ReducedMap,
    tol: f64,
    max_period: usize,
    burn_in: usize,
) -> Result<AttractorReport> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    if max_period == 0 {
        return Err(Error::invalid("max_period must be at least 1"));
    }

    // Certified expansion bound.
    let mut grid_min = f64::INFINITY;
    for k in 0..CERT_GRID {
        let y = k as f64 / CERT_GRID as f64;
        grid_min = grid_min.min(g.deriv(y).abs());
    }
    let slack = g.deriv_lipschitz() / (2.0 * CERT_GRID as f64);
    if grid_min - slack > 1.0 {
        return Ok(AttractorReport::Expanding {
            min_abs_derivative: grid_min - slack,
        });
    }

    // Attractor search from critical points and a coarse seed grid.
    let mut seeds = critical_points(g);
    for k in 0..SEARCH_SEEDS {
        seeds.push(wrap((k as f64 + 0.5) / SEARCH_SEEDS as f64));
    }
    let mut best: Option<(Vec<CirclePoint>, f64)> = None;
    for seed in seeds {
        if let Some((orbit, multiplier)) = settle_orbit(g, seed, tol, max_period, burn_in) {
            let replace = match &best {
                None => true,
                Some((current, _)) => orbit_min(&orbit) < orbit_min(current),
            };
            if replace {
                best = Some((orbit, multiplier));
            }
        }
    }
    Ok(match best {
        Some((orbit, multiplier)) => AttractorReport::PeriodicAttractor { orbit, multiplier },
        None => AttractorReport::Unresolved,
    })
}

fn orbit_min(orbit: &[CirclePoint]) -> f64 {
    orbit.iter().map(|p| p.value()).fold(f64::INFINITY, f64::min)
}

/// Zeros of `g'` located by bisection on sign changes over the grid.
fn critical_points(g: &ReducedMap) -> Vec<CirclePoint> {
    let mut out = Vec::new();
    let n = CERT_GRID;
    let mut prev = g.deriv(0.0);
    for k in 1..=n {
        let y = k as f64 / n as f64;
        let cur = g.deriv(y);
        if prev == 0.0 {
            out.push(wrap((k as f64 - 1.0) / n as f64));
        } else if prev.signum() != cur.signum() {
            let mut lo = (k as f64 - 1.0) / n as f64;
            let mut hi = y;
            let f_lo = prev;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let f_mid = g.deriv(mid);
                if f_mid == 0.0 {
                    lo = mid;
                    break;
                }
                if f_mid.signum() == f_lo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(wrap(0.5 * (lo + hi)));
        }
        prev = cur;
    }
    out
}

/// Iterate from `seed` and try to detect a closed attracting orbit.
fn settle_orbit(
    g: &ReducedMap,
    seed: CirclePoint,
    tol: f64,
    max_period: usize,
    burn_in: usize,
) -> Option<(Vec<CirclePoint>, f64)> {
    let mut y = seed;
    for _ in 0..burn_in {
        y = g.eval(y);
    }
    let anchor = y;
    let mut orbit = vec![anchor];
    let mut period = None;
    let mut cur = anchor;
    for k in 1..=max_period {
        cur = g.eval(cur);
        if circle_dist(cur, anchor) < tol {
            period = Some(k);
            break;
        }
        orbit.push(cur);
    }
    let period = period?;
    orbit.truncate(period);

    // Confirm the closure over three more cycles.
    let mut check = anchor;
    for cycle in 0..3 {
        for _ in 0..period {
            check = g.eval(check);
        }
        if circle_dist(check, anchor) > 10.0 * tol {
            let _ = cycle;
            return None;
        }
    }

    let multiplier: f64 = orbit.iter().map(|p| g.deriv(p.value())).product();
    if multiplier.abs() >= 1.0 {
        return None; // closed but not attracting (e.g. a repelling fixed point)
    }

    // Canonical phase: start the cyclic orbit at its smallest point.
    let start = orbit
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.value().partial_cmp(&b.1.value()).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    orbit.rotate_left(start);
    Some((orbit, multiplier))
}

/// Bifurcation-diagram column: kept post-transient samples at one `β`.
#[derive(Debug, Clone)]
pub struct BifurcationColumn {
    pub beta: f64,
    pub samples: Vec<CirclePoint>,
}

/// For each `β` in the grid, iterate the reduced map from `seed`, discard
/// `transient` steps and keep the next `keep` samples.
pub fn bifurcation_scan(
    sigma: u32,
    coupling: &CouplingSpec,
    beta_grid: &[f64],
    transient: usize,
    keep: usize,
    seed: CirclePoint,
) -> Result<Vec<BifurcationColumn>> {
    if beta_grid.is_empty() {
        return Err(Error::invalid("empty beta grid"));
    }
    let mean_field = coupling.mean_field();
    Ok(beta_grid
        .iter()
        .map(|&beta| {
            let g = ReducedMap {
                sigma,
                beta,
                mean_field: mean_field.clone(),
            };
            let mut y = seed;
            for _ in 0..transient {
                y = g.eval(y);
            }
            let mut samples = Vec::with_capacity(keep);
            for _ in 0..keep {
                samples.push(y);
                y = g.eval(y);
            }
            BifurcationColumn { beta, samples }
        })
        .collect())
}

/// Write a scan as `beta,sample_index,value` rows.
pub fn write_bifurcation_csv<W: std::io::Write>(
    columns: &[BifurcationColumn],
    out: &mut W,
) -> Result<()> {
    writeln!(out, "beta,sample_index,value")?;
    for col in columns {
        for (i, s) in col.samples.iter().enumerate() {
            writeln!(out, "{},{i},{:.16e}", col.beta, s.value())?;
        }
    }
    Ok(())
}

/// Predicted regime of `T_β` by parameter interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictedRegime {
    Expanding,
    FixedPoint,
    Period2,
    Unknown,
}

/// Interval prediction for the `T_β` family: expanding on `[0, 1/2π)`, an
/// attracting fixed point on `(1/2π, 3/2π)`, an attracting period-2 orbit on
/// `(3/2π, 4/2π]`; boundaries and larger `β` are `Unknown`.
pub fn regime_interval_check(beta: f64) -> PredictedRegime {
    let b1 = 1.0 / (2.0 * PI);
    let b2 = 3.0 / (2.0 * PI);
    let b3 = 4.0 / (2.0 * PI);
    if beta < 0.0 {
        PredictedRegime::Unknown
    } else if beta < b1 {
        PredictedRegime::Expanding
    } else if beta > b1 && beta < b2 {
        PredictedRegime::FixedPoint
    } else if beta > b2 && beta <= b3 {
        PredictedRegime::Period2
    } else {
        PredictedRegime::Unknown
    }
}

/// Lyapunov exponent estimate `(1/n) Σ log |g'(y_t)|` along the map's own
/// orbit from `y0` (after `burn` discarded steps).
pub fn lyapunov_map(g: &ReducedMap, y0: CirclePoint, n: usize, burn: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let mut y = y0;
    for _ in 0..burn {
        y = g.eval(y);
    }
    let mut acc = 0.0;
    for _ in 0..n {
        acc += g.deriv(y.value()).abs().ln();
        y = g.eval(y);
    }
    Ok(acc / n as f64)
}

/// Lyapunov estimate along a supplied trace, using the reduced derivative.
pub fn lyapunov_trace(g: &ReducedMap, trace: &[CirclePoint]) -> Result<f64> {
    if trace.is_empty() {
        return Err(Error::invalid("empty trace"));
    }
    let acc: f64 = trace.iter().map(|p| g.deriv(p.value()).abs().ln()).sum();
    Ok(acc / trace.len() as f64)
}

/// Result of a shadowing test of a hub trace against a periodic orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowReport {
    pub holds: bool,
    /// Smallest sup-distance over all phase alignments and both orbit
    /// representatives.
    pub sup_dist: f64,
    /// For the best alignment, the first `t ≥ t_start` exceeding `ξ`.
    pub first_violation_t: Option<usize>,
}

/// Check that `trace[t]` stays within `ξ` of the orbit for all `t ≥ t_start`
/// under some phase alignment, trying both `O` and its reflection `−O` (the
/// attractor of an odd map is such a pair or a symmetric orbit).
pub fn shadow_check(
    trace: &[CirclePoint],
    report: &AttractorReport,
    xi: f64,
    t_start: usize,
) -> Result<ShadowReport> {
    let orbit = match report {
        AttractorReport::PeriodicAttractor { orbit, .. } => orbit,
        _ => return Err(Error::invalid("shadow_check needs a periodic attractor")),
    };
    if trace.len() <= t_start {
        return Err(Error::invalid("trace shorter than t_start"));
    }
    let p = orbit.len();
    let reflected: Vec<CirclePoint> = orbit.iter().map(|z| wrap(-z.value())).collect();
    let mut best: Option<ShadowReport> = None;
    for rep in [orbit.as_slice(), reflected.as_slice()] {
        for phase in 0..p {
            let mut sup = 0.0f64;
            let mut first_violation = None;
            for (t, z) in trace.iter().enumerate().skip(t_start) {
                let target = rep[(t + phase) % p];
                let d = circle_dist(*z, target);
                if d > sup {
                    sup = d;
                }
                if d > xi && first_violation.is_none() {
                    first_violation = Some(t);
                }
            }
            let candidate = ShadowReport {
                holds: first_violation.is_none(),
                sup_dist: sup,
                first_violation_t: first_violation,
            };
            if best.as_ref().map_or(true, |b| candidate.sup_dist < b.sup_dist) {
                best = Some(candidate);
            }
        }
    }
    Ok(best.unwrap())
}
