//! Pairwise coupling functions `h: T × T → ℝ`.
//!
//! In the dynamics the first argument of `h` is the updating node ("self")
//! and the second the in-neighbor. Couplings come either as closed-form
//! presets or as a finite trigonometric product table
//!
//! ```text
//! h(self, nbr) = Σ_s c_s · θ_{s1}(nbr) · υ_{s2}(self)
//! ```
//!
//! with basis index convention `0 ↦ 1`, `+k ↦ cos(2πk·)`, `−k ↦ sin(2πk·)`.
//! The `s1` factor acts on the *neighbor* coordinate: that is the factor whose
//! empirical average over a hub's in-neighborhood concentrates, and the one
//! the truncated dynamics clamps. `θ̄_{s1} = ∫θ_{s1} dm` is 1 for `s1 = 0` and
//! 0 otherwise, so only `s1 = 0` terms survive in the mean field
//! `ĥ(y) = ∫ h(y, x) dm(x)`.

use std::f64::consts::{PI, TAU};

use crate::error::Error;
use crate::torus::{wrap, CirclePoint};
use crate::Result;

/// One product term `c · θ_{s1}(nbr) · υ_{s2}(self)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierTerm {
    /// Basis index acting on the neighbor coordinate.
    pub s1: i32,
    /// Basis index acting on the self (hub) coordinate.
    pub s2: i32,
    pub c: f64,
}

/// A pairwise coupling: closed-form presets or a finite Fourier table.
#[derive(Debug, Clone, PartialEq)]
pub enum CouplingSpec {
    /// `h(x, y) = −sin(2πx) + sin(2πy)`.
    SineDiffusive,
    /// `h(x, y) = sin(2π(y−x)) + sin(2πy) − sin(2πx)`.
    HuygensDiffusive,
    /// Pure shift coupling `h(x, y) = φ(y−x)` with odd
    /// `φ(u) = Σ_k b_k sin(2πku)`; entries are `(k, b_k)` with `k ≥ 1`.
    ShiftDiffusive(Vec<(u32, f64)>),
    FourierTable(Vec<FourierTerm>),
}

/// Trigonometric basis: `0 ↦ 1`, `+k ↦ cos(2πkx)`, `−k ↦ sin(2πkx)`.
#[inline]
pub fn basis(index: i32, x: f64) -> f64 {
    if index == 0 {
        1.0
    } else if index > 0 {
        (TAU * index as f64 * x).cos()
    } else {
        (TAU * (-index) as f64 * x).sin()
    }
}

/// Derivative of [`basis`] with respect to `x`.
#[inline]
pub fn basis_deriv(index: i32, x: f64) -> f64 {
    if index == 0 {
        0.0
    } else if index > 0 {
        let k = index as f64;
        -TAU * k * (TAU * k * x).sin()
    } else {
        let k = (-index) as f64;
        TAU * k * (TAU * k * x).cos()
    }
}

/// Lebesgue mean of a basis function over the circle.
#[inline]
pub fn basis_mean(index: i32) -> f64 {
    if index == 0 {
        1.0
    } else {
        0.0
    }
}

impl CouplingSpec {
    /// Evaluate `h(self, nbr)`.
    ///
    /// The floating-point expression per preset is fixed; the simulation's
    /// determinism contract relies on every caller producing bit-identical
    /// values for the same inputs.
    #[inline]
    pub fn eval(&self, x: CirclePoint, y: CirclePoint) -> f64 {
        let (x, y) = (x.value(), y.value());
        match self {
            CouplingSpec::SineDiffusive => -(TAU * x).sin() + (TAU * y).sin(),
            CouplingSpec::HuygensDiffusive => {
                (TAU * (y - x)).sin() + (TAU * y).sin() - (TAU * x).sin()
            }
            CouplingSpec::ShiftDiffusive(terms) => {
                let u = y - x;
                terms
                    .iter()
                    .fold(0.0, |acc, &(k, b)| acc + b * (TAU * k as f64 * u).sin())
            }
            CouplingSpec::FourierTable(terms) => terms
                .iter()
                .fold(0.0, |acc, t| acc + t.c * basis(t.s1, y) * basis(t.s2, x)),
        }
    }

    /// `∂h/∂(self)` evaluated at `(x, y)`.
    pub fn d_self(&self, x: f64, y: f64) -> f64 {
        match self {
            CouplingSpec::SineDiffusive => -TAU * (TAU * x).cos(),
            CouplingSpec::HuygensDiffusive => {
                -TAU * (TAU * (y - x)).cos() - TAU * (TAU * x).cos()
            }
            CouplingSpec::ShiftDiffusive(terms) => {
                let u = y - x;
                terms.iter().fold(0.0, |acc, &(k, b)| {
                    acc - b * TAU * k as f64 * (TAU * k as f64 * u).cos()
                })
            }
            CouplingSpec::FourierTable(terms) => terms
                .iter()
                .fold(0.0, |acc, t| acc + t.c * basis(t.s1, y) * basis_deriv(t.s2, x)),
        }
    }

    /// `∂h/∂(neighbor)` evaluated at `(x, y)`.
    pub fn d_nbr(&self, x: f64, y: f64) -> f64 {
        match self {
            CouplingSpec::SineDiffusive => TAU * (TAU * y).cos(),
            CouplingSpec::HuygensDiffusive => {
                TAU * (TAU * (y - x)).cos() + TAU * (TAU * y).cos()
            }
            CouplingSpec::ShiftDiffusive(terms) => {
                let u = y - x;
                terms.iter().fold(0.0, |acc, &(k, b)| {
                    acc + b * TAU * k as f64 * (TAU * k as f64 * u).cos()
                })
            }
            CouplingSpec::FourierTable(terms) => terms
                .iter()
                .fold(0.0, |acc, t| acc + t.c * basis_deriv(t.s1, y) * basis(t.s2, x)),
        }
    }

    /// Expand the coupling into its finite Fourier product table.
    pub fn to_fourier_table(&self) -> Vec<FourierTerm> {
        match self {
            // −sin(2πx) + sin(2πy) = θ₀(y)·(−sin)(x) + sin(y)·υ₀(x)
            CouplingSpec::SineDiffusive => vec![
                FourierTerm { s1: 0, s2: -1, c: -1.0 },
                FourierTerm { s1: -1, s2: 0, c: 1.0 },
            ],
            // sin(2π(y−x)) expands to sin(y)cos(x) − cos(y)sin(x).
            CouplingSpec::HuygensDiffusive => vec![
                FourierTerm { s1: -1, s2: 1, c: 1.0 },
                FourierTerm { s1: 1, s2: -1, c: -1.0 },
                FourierTerm { s1: -1, s2: 0, c: 1.0 },
                FourierTerm { s1: 0, s2: -1, c: -1.0 },
            ],
            CouplingSpec::ShiftDiffusive(terms) => {
                let mut out = Vec::with_capacity(terms.len() * 2);
                for &(k, b) in terms {
                    let k = k as i32;
                    out.push(FourierTerm { s1: -k, s2: k, c: b });
                    out.push(FourierTerm { s1: k, s2: -k, c: -b });
                }
                out
            }
            CouplingSpec::FourierTable(terms) => terms.clone(),
        }
    }

    /// Distinct nonzero neighbor-factor indices `s1` in the Fourier support;
    /// these index the bad-set components of the truncated system.
    pub fn s1_support(&self) -> Vec<i32> {
        let mut s: Vec<i32> = self
            .to_fourier_table()
            .iter()
            .map(|t| t.s1)
            .filter(|&s1| s1 != 0)
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Mean field `ĥ(y) = ∫ h(y, x) dm(x)`, exact (term-by-term, no
    /// quadrature): only neighbor-constant terms survive.
    pub fn mean_field(&self) -> MeanField {
        match self {
            CouplingSpec::SineDiffusive | CouplingSpec::HuygensDiffusive => MeanField {
                terms: vec![(-1, -1.0)],
            },
            // ∫ φ(y−x) dx = ∫ φ = 0 for odd φ.
            CouplingSpec::ShiftDiffusive(_) => MeanField { terms: Vec::new() },
            CouplingSpec::FourierTable(terms) => MeanField {
                terms: terms
                    .iter()
                    .filter(|t| t.s1 == 0)
                    .map(|t| (t.s2, t.c))
                    .collect(),
            },
        }
    }

    /// Analytic effective diffusion slope `φ'(0)` used by the
    /// master-stability thresholds `β_c = (σ∓1)/φ'(0)`.
    ///
    /// For a pure shift coupling this is literally `φ'(0)`. The sine preset
    /// exposes its slope at the synchronized fixed state, `2π`. The Huygens
    /// preset has a state-dependent slope `ω(s) = 2π(1 + cos 2πs)`; the value
    /// reported here, `(σ+1)π`, is the constant slope whose upper threshold
    /// `(σ+1)/φ'(0)` coincides with the orbit-averaged stability boundary of
    /// the transverse modes (the geometric mean of `|σ − β ω(s)|` over a
    /// uniform orbit equals `β ω₀ / 2` there, with `ω₀ = 2π`).
    ///
    /// Returns `None` for general tables; use [`Self::numeric_dphi0`] there.
    pub fn effective_dphi0(&self, sigma: u32) -> Option<f64> {
        match self {
            CouplingSpec::SineDiffusive => Some(TAU),
            CouplingSpec::HuygensDiffusive => Some((sigma as f64 + 1.0) * PI),
            CouplingSpec::ShiftDiffusive(terms) => Some(
                terms
                    .iter()
                    .fold(0.0, |acc, &(k, b)| acc + b * TAU * k as f64),
            ),
            CouplingSpec::FourierTable(_) => None,
        }
    }

    /// Numeric fallback for the diffusion slope: symmetric finite difference
    /// of `h` in its first argument on the diagonal, negated and averaged
    /// along a reference orbit `s(t+1) = σ s(t) mod 1`.
    pub fn numeric_dphi0(&self, sigma: u32, s0: CirclePoint, samples: usize) -> Result<f64> {
        if samples == 0 {
            return Err(Error::invalid("numeric_dphi0 needs at least one sample"));
        }
        let eps = 1e-6;
        let mut s = s0;
        let mut acc = 0.0;
        for _ in 0..samples {
            let v = s.value();
            let plus = self.eval(wrap(v + eps), s);
            let minus = self.eval(wrap(v - eps), s);
            acc += -(plus - minus) / (2.0 * eps);
            s = wrap(sigma as f64 * v);
        }
        Ok(acc / samples as f64)
    }

    /// Diffusive slope `ω(s) = ∂h/∂(neighbor)` on the diagonal, sampled along
    /// the reference orbit `s(t+1) = σ s(t) mod 1`. Constant for pure shift
    /// couplings.
    pub fn omega_trace(&self, sigma: u32, s0: CirclePoint, n: usize) -> Vec<f64> {
        let mut s = s0;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let v = s.value();
            out.push(self.d_nbr(v, v));
            s = wrap(sigma as f64 * v);
        }
        out
    }

    /// Numeric diffusivity check on an `n × n` grid:
    /// `h(z, z) = 0` and `h(x, y) = −h(y, x)` up to `tol`.
    pub fn is_diffusive_on_grid(&self, n: usize, tol: f64) -> bool {
        for i in 0..n {
            let x = wrap(i as f64 / n as f64);
            if self.eval(x, x).abs() > tol {
                return false;
            }
            for j in 0..n {
                let y = wrap(j as f64 / n as f64);
                if (self.eval(x, y) + self.eval(y, x)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Exact mean field `ĥ(y) = Σ c · υ_{s2}(y)` of a coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanField {
    /// `(s2, c)` pairs; evaluation sums `c · basis(s2, y)`.
    pub terms: Vec<(i32, f64)>,
}

impl MeanField {
    pub fn eval(&self, y: f64) -> f64 {
        self.terms
            .iter()
            .fold(0.0, |acc, &(s2, c)| acc + c * basis(s2, y))
    }

    pub fn deriv(&self, y: f64) -> f64 {
        self.terms
            .iter()
            .fold(0.0, |acc, &(s2, c)| acc + c * basis_deriv(s2, y))
    }

    /// Upper bound for `|ĥ''|` over the circle: `Σ |c| (2πk)²`.
    pub fn second_deriv_bound(&self) -> f64 {
        self.terms.iter().fold(0.0, |acc, &(s2, c)| {
            let k = s2.unsigned_abs() as f64;
            acc + c.abs() * (TAU * k) * (TAU * k)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn table_eval(terms: &[FourierTerm], x: f64, y: f64) -> f64 {
        terms
            .iter()
            .fold(0.0, |acc, t| acc + t.c * basis(t.s1, y) * basis(t.s2, x))
    }

    #[test]
    fn sine_preset_values() {
        let h = CouplingSpec::SineDiffusive;
        let z = wrap(0.37);
        assert_eq!(h.eval(z, z), 0.0);
        let v = h.eval(wrap(0.0), wrap(0.25));
        assert!((v - 1.0).abs() < 1e-15, "-sin 0 + sin(π/2) = 1, got {v}");
    }

    #[test]
    fn huygens_matches_its_fourier_table() {
        // Expand sin(2π(y−x)) into sin·cos − cos·sin products and tabulate;
        // the preset and its table must agree to 1e-12 on a 100×100 grid.
        let h = CouplingSpec::HuygensDiffusive;
        let table = h.to_fourier_table();
        for i in 0..100 {
            for j in 0..100 {
                let x = i as f64 / 100.0;
                let y = j as f64 / 100.0;
                let direct = h.eval(wrap(x), wrap(y));
                let tabled = table_eval(&table, x, y);
                assert!(
                    (direct - tabled).abs() < 1e-12,
                    "mismatch at ({x}, {y}): {direct} vs {tabled}"
                );
            }
        }
    }

    #[test]
    fn presets_are_diffusive() {
        assert!(CouplingSpec::SineDiffusive.is_diffusive_on_grid(64, 1e-12));
        assert!(CouplingSpec::HuygensDiffusive.is_diffusive_on_grid(64, 1e-12));
        assert!(CouplingSpec::ShiftDiffusive(vec![(1, 1.0), (3, -0.25)])
            .is_diffusive_on_grid(64, 1e-12));
    }

    #[test]
    fn table_conversions_agree_with_presets() {
        let mut rng = SplitMix64::new(8);
        for spec in [
            CouplingSpec::SineDiffusive,
            CouplingSpec::HuygensDiffusive,
            CouplingSpec::ShiftDiffusive(vec![(1, 0.7), (2, -0.2)]),
        ] {
            let table = spec.to_fourier_table();
            for _ in 0..2000 {
                let x = rng.next_f64();
                let y = rng.next_f64();
                let a = spec.eval(wrap(x), wrap(y));
                let b = table_eval(&table, x, y);
                assert!((a - b).abs() < 1e-12, "{spec:?} at ({x}, {y})");
            }
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let mut rng = SplitMix64::new(12);
        let specs = [
            CouplingSpec::SineDiffusive,
            CouplingSpec::HuygensDiffusive,
            CouplingSpec::ShiftDiffusive(vec![(2, 0.5)]),
            CouplingSpec::FourierTable(vec![
                FourierTerm { s1: -2, s2: 1, c: 0.3 },
                FourierTerm { s1: 1, s2: -1, c: -0.4 },
                FourierTerm { s1: 0, s2: 2, c: 0.1 },
            ]),
        ];
        let eps = 1e-6;
        for spec in &specs {
            for _ in 0..500 {
                let x = rng.next_f64();
                let y = rng.next_f64();
                let d1 = (spec.eval(wrap(x + eps), wrap(y)) - spec.eval(wrap(x - eps), wrap(y)))
                    / (2.0 * eps);
                let d2 = (spec.eval(wrap(x), wrap(y + eps)) - spec.eval(wrap(x), wrap(y - eps)))
                    / (2.0 * eps);
                assert!((d1 - spec.d_self(x, y)).abs() < 1e-5);
                assert!((d2 - spec.d_nbr(x, y)).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn mean_fields() {
        // Both sine-type presets average to −sin(2πy).
        for spec in [CouplingSpec::SineDiffusive, CouplingSpec::HuygensDiffusive] {
            let mf = spec.mean_field();
            for i in 0..32 {
                let y = i as f64 / 32.0;
                assert!((mf.eval(y) + (TAU * y).sin()).abs() < 1e-15);
            }
        }
        // Constant coupling h ≡ c has mean field ≡ c.
        let c = CouplingSpec::FourierTable(vec![FourierTerm { s1: 0, s2: 0, c: 0.75 }]);
        let mf = c.mean_field();
        assert_eq!(mf.eval(0.3), 0.75);
        // Pure shift couplings integrate to zero.
        assert!(CouplingSpec::ShiftDiffusive(vec![(1, 1.0)])
            .mean_field()
            .terms
            .is_empty());
    }

    #[test]
    fn mean_field_matches_quadrature() {
        // Cross-check the exact mean field against a trapezoid average of
        // h(y, ·) over the neighbor coordinate.
        let spec = CouplingSpec::FourierTable(vec![
            FourierTerm { s1: 0, s2: -1, c: -1.0 },
            FourierTerm { s1: -1, s2: 0, c: 1.0 },
            FourierTerm { s1: 2, s2: 1, c: 0.4 },
        ]);
        let mf = spec.mean_field();
        let n = 4096;
        for &y in &[0.0, 0.21, 0.5, 0.83] {
            let quad: f64 = (0..n)
                .map(|i| spec.eval(wrap(y), wrap(i as f64 / n as f64)))
                .sum::<f64>()
                / n as f64;
            assert!((quad - mf.eval(y)).abs() < 1e-10, "at y={y}");
        }
    }

    #[test]
    fn dphi0_values() {
        assert!((CouplingSpec::SineDiffusive.effective_dphi0(2).unwrap() - TAU).abs() < 1e-15);
        assert!(
            (CouplingSpec::HuygensDiffusive.effective_dphi0(2).unwrap() - 3.0 * PI).abs() < 1e-15
        );
        let shift = CouplingSpec::ShiftDiffusive(vec![(1, 1.0)]);
        assert!((shift.effective_dphi0(2).unwrap() - TAU).abs() < 1e-15);
        // Numeric fallback recovers φ'(0) for the shift preset.
        let num = shift.numeric_dphi0(2, wrap(0.123), 500).unwrap();
        assert!((num - TAU).abs() < 1e-4, "numeric {num}");
    }

    #[test]
    fn omega_trace_constant_for_shift_couplings() {
        let shift = CouplingSpec::ShiftDiffusive(vec![(1, 0.5), (2, 0.25)]);
        let expect = 0.5 * TAU + 0.25 * 2.0 * TAU;
        for w in shift.omega_trace(2, wrap(0.3), 64) {
            assert!((w - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn s1_support_sets() {
        assert_eq!(CouplingSpec::SineDiffusive.s1_support(), vec![-1]);
        assert_eq!(CouplingSpec::HuygensDiffusive.s1_support(), vec![-1, 1]);
    }
}
