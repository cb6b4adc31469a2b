//! Hub fluctuations and their concentration statistics.
//!
//! The fluctuation of hub `j` in state `z = (x, y)` is the deviation of its
//! coupling input from the mean-field value:
//!
//! ```text
//! ξ_j(z) = α [ (1/Δ) Σ_n A_jn h(y_j, z_n) − κ_j ĥ(y_j) ]
//! ```
//!
//! with `ĥ` evaluated analytically (never by quadrature), so `ξ` is exact to
//! rounding. For uniform low nodes each Fourier component of the neighbor
//! average concentrates: the bad set where `|(1/Δ) Σ A_ji θ_{s1}(x_i) −
//! κ_j θ̄_{s1}| > ε|s1|` has Lebesgue measure at most
//! `2 exp(−Δ ε² |s1|² / 2κ_j)`, and the union over hubs and `s1` at most
//! `4M e^{−Δε²/2} / (1 − e^{−Δε²/2})`. Survival experiments iterate the full
//! system and record the first time any hub's `ξ` exceeds a threshold.

use std::io::Write;

use rayon::prelude::*;

use crate::coupling::CouplingSpec;
use crate::dynamics::{hub_deviation, step, SimState, SystemConfig};
use crate::error::Error;
use crate::graph::NetworkGraph;
use crate::rng::SplitMix64;
use crate::torus::CirclePoint;
use crate::Result;

/// Fluctuation samples per hub per time, node-major like a trajectory.
#[derive(Debug, Clone)]
pub struct FluctuationTrace {
    pub hub_ids: Vec<u32>,
    pub times: Vec<u64>,
    pub xi: Vec<Vec<f64>>,
}

/// One bad-set component query: hub `hub`, Fourier index `s1 ≠ 0`, level `eps`.
#[derive(Debug, Clone, Copy)]
pub struct BadSetQuery {
    pub eps: f64,
    pub s1: i32,
    pub hub: usize,
}

impl BadSetQuery {
    pub fn validate(&self, graph: &NetworkGraph) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::invalid("bad-set level eps must be positive"));
        }
        if self.s1 == 0 {
            return Err(Error::invalid("bad-set component needs s1 != 0"));
        }
        if self.hub < graph.n_low() || self.hub >= graph.n_nodes() {
            return Err(Error::invalid(format!("node {} is not a hub", self.hub)));
        }
        Ok(())
    }
}

/// Fluctuation `ξ_j` of one hub in the given full state.
pub fn xi(state: &SimState, hub: usize, cfg: &SystemConfig) -> Result<f64> {
    if hub < cfg.graph.n_low() || hub >= cfg.graph.n_nodes() {
        return Err(Error::invalid(format!("node {hub} is not a hub")));
    }
    if state.z.len() != cfg.graph.n_nodes() {
        return Err(Error::invalid("state length does not match graph"));
    }
    let mean_field = cfg.coupling.mean_field();
    Ok(xi_inner(&state.z, hub, cfg, &mean_field))
}

fn xi_inner(z: &[CirclePoint], hub: usize, cfg: &SystemConfig, mean_field: &crate::coupling::MeanField) -> f64 {
    let y = z[hub];
    let mut sum = 0.0;
    for &nb in cfg.graph.in_neighbors(hub) {
        sum += cfg.coupling.eval(y, z[nb as usize]);
    }
    let delta = cfg.delta().max(1) as f64;
    cfg.alpha * (sum / delta - cfg.kappa(hub) * mean_field.eval(y.value()))
}

/// `ξ_j` for every hub, in hub-id order.
pub fn xi_all(state: &SimState, cfg: &SystemConfig) -> Result<Vec<f64>> {
    if state.z.len() != cfg.graph.n_nodes() {
        return Err(Error::invalid("state length does not match graph"));
    }
    let mean_field = cfg.coupling.mean_field();
    Ok((cfg.graph.n_low()..cfg.graph.n_nodes())
        .map(|j| xi_inner(&state.z, j, cfg, &mean_field))
        .collect())
}

/// Is a low-node configuration in the bad-set component `B_ε^{(s1,j)}`,
/// i.e. does the hub's empirical `θ_{s1}` average deviate from `κ_j θ̄_{s1}`
/// by more than `ε|s1|`?
pub fn bad_set_member(
    low_state: &[CirclePoint],
    query: &BadSetQuery,
    graph: &NetworkGraph,
    coupling: &CouplingSpec,
) -> Result<bool> {
    query.validate(graph)?;
    if low_state.len() < graph.n_low() {
        return Err(Error::invalid("low state shorter than the low block"));
    }
    if !coupling.s1_support().contains(&query.s1) {
        return Err(Error::invalid(format!(
            "s1={} outside the coupling's Fourier support",
            query.s1
        )));
    }
    let delta = max_in_degree(graph);
    let dev = hub_deviation(graph, delta, query.hub, query.s1, low_state);
    Ok(dev.abs() > query.eps * query.s1.unsigned_abs() as f64)
}

fn max_in_degree(graph: &NetworkGraph) -> usize {
    (0..graph.n_nodes())
        .map(|i| graph.in_degree(i))
        .max()
        .unwrap_or(0)
        .max(1)
}

/// Membership in `Q_ε`: no hub is bad for any `s1` in the coupling's support.
/// `true` for graphs without hubs.
pub fn in_q(
    low_state: &[CirclePoint],
    eps: f64,
    graph: &NetworkGraph,
    coupling: &CouplingSpec,
) -> Result<bool> {
    if !(eps > 0.0) {
        return Err(Error::invalid("eps must be positive"));
    }
    if low_state.len() < graph.n_low() {
        return Err(Error::invalid("low state shorter than the low block"));
    }
    let support = coupling.s1_support();
    let delta = max_in_degree(graph);
    for hub in graph.n_low()..graph.n_nodes() {
        for &s1 in &support {
            let dev = hub_deviation(graph, delta, hub, s1, low_state);
            if dev.abs() > eps * s1.unsigned_abs() as f64 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Concentration bound for one bad-set component:
/// `2 exp(−Δ ε² |s1|² / 2κ)`, capped at 1.
pub fn hoeffding_term_bound(delta: usize, eps: f64, kappa: f64, s1: i32) -> Result<f64> {
    if delta == 0 {
        return Err(Error::invalid("delta must be positive"));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid("eps must be positive"));
    }
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::invalid(format!("kappa {kappa} outside (0, 1]")));
    }
    if s1 == 0 {
        return Err(Error::invalid("s1 must be nonzero"));
    }
    let s = s1.unsigned_abs() as f64;
    let bound = 2.0 * (-(delta as f64) * eps * eps * s * s / (2.0 * kappa)).exp();
    Ok(bound.min(1.0))
}

/// Union bound over hubs and Fourier indices:
/// `4M e^{−Δε²/2} / (1 − e^{−Δε²/2})`, capped at 1; zero when `M = 0`.
pub fn hoeffding_union_bound(delta: usize, eps: f64, n_hubs: usize) -> Result<f64> {
    if delta == 0 {
        return Err(Error::invalid("delta must be positive"));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid("eps must be positive"));
    }
    if n_hubs == 0 {
        return Ok(0.0);
    }
    let x = (-(delta as f64) * eps * eps / 2.0).exp();
    if x >= 1.0 {
        return Ok(1.0);
    }
    Ok((4.0 * n_hubs as f64 * x / (1.0 - x)).min(1.0))
}

/// Outcome of a survival experiment.
#[derive(Debug, Clone)]
pub struct SurvivalReport {
    /// Per trial: first `t ≤ T` with `max_j |ξ_j(z(t))| > ε`, `None` if none.
    pub first_hits: Vec<Option<u64>>,
    pub surviving_fraction: f64,
}

/// Run `n_trials` independent uniform initial conditions of the full system
/// for `t_max` steps each, recording the first time any hub fluctuation
/// exceeds `eps` (time 0 included). Trials run in parallel, each on its own
/// RNG stream derived from `(seed, trial)`.
pub fn survival_experiment(
    cfg: &SystemConfig,
    eps: f64,
    t_max: u64,
    n_trials: usize,
    seed: u64,
) -> Result<SurvivalReport> {
    if !(eps > 0.0) {
        return Err(Error::invalid("eps must be positive"));
    }
    if n_trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    if t_max == 0 {
        return Err(Error::invalid("need at least one step"));
    }
    let n = cfg.graph.n_nodes();
    let mean_field = cfg.coupling.mean_field();
    let first_hits: Vec<Option<u64>> = (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = SplitMix64::derive(seed, trial as u64);
            let z: Vec<CirclePoint> =
                (0..n).map(|_| crate::torus::wrap(rng.next_f64())).collect();
            let mut state = SimState::new(z);
            for t in 0..=t_max {
                let worst = (cfg.graph.n_low()..n)
                    .map(|j| xi_inner(&state.z, j, cfg, &mean_field).abs())
                    .fold(0.0f64, f64::max);
                if worst > eps {
                    return Some(t);
                }
                if t < t_max {
                    state = step(&state, cfg).expect("validated config");
                }
            }
            None
        })
        .collect();
    let survivors = first_hits.iter().filter(|h| h.is_none()).count();
    Ok(SurvivalReport {
        surviving_fraction: survivors as f64 / n_trials as f64,
        first_hits,
    })
}

/// Record `ξ_j(z(t))` for the listed hubs at every step of a run.
pub fn fluctuation_trace(
    cfg: &SystemConfig,
    initial: &SimState,
    t_max: u64,
    hubs: &[u32],
) -> Result<FluctuationTrace> {
    for &j in hubs {
        if (j as usize) < cfg.graph.n_low() || (j as usize) >= cfg.graph.n_nodes() {
            return Err(Error::invalid(format!("node {j} is not a hub")));
        }
    }
    if initial.z.len() != cfg.graph.n_nodes() {
        return Err(Error::invalid("state length does not match graph"));
    }
    let mean_field = cfg.coupling.mean_field();
    let mut times = Vec::with_capacity(t_max as usize + 1);
    let mut xi: Vec<Vec<f64>> = vec![Vec::with_capacity(t_max as usize + 1); hubs.len()];
    let mut state = initial.clone();
    for t in 0..=t_max {
        times.push(t);
        for (k, &j) in hubs.iter().enumerate() {
            xi[k].push(xi_inner(&state.z, j as usize, cfg, &mean_field));
        }
        if t < t_max {
            state = step(&state, cfg)?;
        }
    }
    Ok(FluctuationTrace {
        hub_ids: hubs.to_vec(),
        times,
        xi,
    })
}

/// Write survival results as `trial,first_hit_t,survived` (hit time `inf`
/// for surviving trials).
pub fn write_survival_csv<W: Write>(report: &SurvivalReport, out: &mut W) -> Result<()> {
    writeln!(out, "trial,first_hit_t,survived")?;
    for (i, hit) in report.first_hits.iter().enumerate() {
        match hit {
            Some(t) => writeln!(out, "{i},{t},0")?,
            None => writeln!(out, "{i},inf,1")?,
        }
    }
    Ok(())
}

/// Write a fluctuation trace as `t,hub,xi` rows.
pub fn write_fluctuation_csv<W: Write>(trace: &FluctuationTrace, out: &mut W) -> Result<()> {
    writeln!(out, "t,hub,xi")?;
    for (s, &t) in trace.times.iter().enumerate() {
        for (k, &hub) in trace.hub_ids.iter().enumerate() {
            writeln!(out, "{t},{hub},{:.16e}", trace.xi[k][s])?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::step_truncated;
    use crate::graph::{make_layered, make_star, LayeredOptions, NetworkGraph};
    use crate::torus::{sample_uniform, wrap};
    use std::f64::consts::TAU;

    fn star_system(graph: &NetworkGraph, alpha: f64) -> SystemConfig<'_> {
        SystemConfig::new(2, alpha, graph, CouplingSpec::SineDiffusive).unwrap()
    }

    #[test]
    fn star_xi_matches_closed_form() {
        let l = 1000;
        let g = make_star(l).unwrap();
        let cfg = star_system(&g, 0.6);
        let state = SimState::random(l + 1, 9);
        let direct: f64 = state.z[..l]
            .iter()
            .map(|x| (TAU * x.value()).sin())
            .sum::<f64>()
            * 0.6
            / l as f64;
        let v = xi(&state, l, &cfg).unwrap();
        assert!((v - direct).abs() < 1e-12, "{v} vs {direct}");
    }

    #[test]
    fn lattice_neighbors_cancel() {
        // Low nodes on the lattice {k/d}: the sine sum vanishes.
        let d = 64;
        let g = make_star(d).unwrap();
        let cfg = star_system(&g, 0.7);
        let mut z: Vec<_> = (0..d).map(|k| wrap(k as f64 / d as f64)).collect();
        z.push(wrap(0.37));
        let v = xi(&SimState::new(z), d, &cfg).unwrap();
        assert!(v.abs() < 1e-12, "lattice xi = {v}");
    }

    #[test]
    fn xi_concentrates_at_root_degree_scale() {
        // |ξ| < 4α/√d in at least 99% of seeds.
        let l = 10_000;
        let g = make_star(l).unwrap();
        let alpha = 0.6;
        let cfg = star_system(&g, alpha);
        let mut ok = 0;
        let trials = 1000;
        for s in 0..trials {
            let state = SimState::random(l + 1, 3000 + s);
            let v = xi(&state, l, &cfg).unwrap();
            if v.abs() < 4.0 * alpha / (l as f64).sqrt() {
                ok += 1;
            }
        }
        assert!(ok * 100 >= trials * 99, "only {ok}/{trials} concentrated");
    }

    #[test]
    fn xi_all_zero_when_uncoupled() {
        let g = make_layered(2, 20, &[(1.0, 3)], 200, 5, LayeredOptions::default()).unwrap();
        let cfg = SystemConfig::new(2, 0.0, &g, CouplingSpec::SineDiffusive).unwrap();
        let state = SimState::random(g.n_nodes(), 3);
        for v in xi_all(&state, &cfg).unwrap() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn bad_set_examples() {
        let l = 200;
        let g = make_star(l).unwrap();
        let h = CouplingSpec::SineDiffusive;
        let q = BadSetQuery { eps: 0.05, s1: -1, hub: l };
        // All low nodes at the sine zero: deviation 0, not bad.
        let zeros = vec![wrap(0.0); l];
        assert!(!bad_set_member(&zeros, &q, &g, &h).unwrap());
        // All low nodes at 0.25: deviation κ = 1 > ε, bad.
        let quarter = vec![wrap(0.25); l];
        assert!(bad_set_member(&quarter, &q, &g, &h).unwrap());

        // Queries outside the support or with s1 = 0 are rejected.
        assert!(bad_set_member(&zeros, &BadSetQuery { eps: 0.05, s1: 0, hub: l }, &g, &h).is_err());
        assert!(bad_set_member(&zeros, &BadSetQuery { eps: 0.05, s1: 3, hub: l }, &g, &h).is_err());
        assert!(bad_set_member(&zeros, &BadSetQuery { eps: 0.05, s1: -1, hub: 0 }, &g, &h).is_err());
    }

    #[test]
    fn bad_set_frequency_below_hoeffding_bound() {
        let l = 500;
        let g = make_star(l).unwrap();
        let h = CouplingSpec::SineDiffusive;
        let eps = 0.1;
        let q = BadSetQuery { eps, s1: -1, hub: l };
        let samples = 10_000;
        let mut bad = 0;
        for s in 0..samples {
            let low = sample_uniform(l, 50_000 + s);
            if bad_set_member(&low, &q, &g, &h).unwrap() {
                bad += 1;
            }
        }
        let bound = hoeffding_term_bound(l, eps, 1.0, -1).unwrap();
        let empirical = bad as f64 / samples as f64;
        // One-sided check with 3σ Monte Carlo slack on the bound itself.
        let slack = 3.0 * (bound * (1.0 - bound) / samples as f64).sqrt();
        assert!(
            empirical <= bound + slack,
            "empirical {empirical} exceeds bound {bound}"
        );
    }

    #[test]
    fn in_q_cases() {
        let h = CouplingSpec::SineDiffusive;
        // No hubs: vacuously in Q.
        let empty = crate::graph::make_erdos_renyi(20, 0.2, 3).unwrap();
        let low = sample_uniform(20, 4);
        assert!(in_q(&low, 0.05, &empty, &h).unwrap());

        let l = 300;
        let g = make_star(l).unwrap();
        let quarter = vec![wrap(0.25); l];
        assert!(!in_q(&quarter, 0.1, &g, &h).unwrap());
        let zeros = vec![wrap(0.0); l];
        assert!(in_q(&zeros, 0.1, &g, &h).unwrap());
    }

    #[test]
    fn in_q_implies_bitwise_step_agreement() {
        let g = make_layered(3, 60, &[(1.0, 2), (0.5, 2)], 600, 17, LayeredOptions::default())
            .unwrap();
        let cfg = SystemConfig::new(2, 0.6, &g, CouplingSpec::SineDiffusive).unwrap();
        let eps = 0.12;
        let mut in_q_hits = 0;
        for s in 0..300 {
            let state = SimState::random(g.n_nodes(), 900 + s);
            let inside = in_q(&state.z, eps, &g, &cfg.coupling).unwrap();
            let full = step(&state, &cfg).unwrap();
            let trunc = step_truncated(&state, &cfg, eps).unwrap();
            if inside {
                in_q_hits += 1;
                assert_eq!(full.z, trunc.z, "seed {s}: in Q but steps differ");
            }
        }
        assert!(in_q_hits > 0, "no in-Q states sampled; weak test");
    }

    #[test]
    fn hoeffding_term_bound_values() {
        let b = hoeffding_term_bound(500, 0.1, 1.0, 1).unwrap();
        assert!((b - 0.16416999724779816).abs() < 1e-12, "{b}");
        // Vanishing eps caps at 1.
        assert_eq!(hoeffding_term_bound(500, 1e-12, 1.0, 1).unwrap(), 1.0);
        // |s1| = 2 squares the exponent factor by 4.
        let b1 = hoeffding_term_bound(500, 0.1, 1.0, 1).unwrap();
        let b2 = hoeffding_term_bound(500, 0.1, 1.0, 2).unwrap();
        assert!(((b2 / 2.0) - (b1 / 2.0).powi(4)).abs() < 1e-15);
        assert!(hoeffding_term_bound(0, 0.1, 1.0, 1).is_err());
        assert!(hoeffding_term_bound(10, 0.1, 0.0, 1).is_err());
        assert!(hoeffding_term_bound(10, 0.1, 1.0, 0).is_err());
    }

    #[test]
    fn hoeffding_union_bound_values() {
        assert_eq!(hoeffding_union_bound(500, 0.2, 0).unwrap(), 0.0);
        let b = hoeffding_union_bound(500, 0.2, 1).unwrap();
        assert!((b - 1.8160796365497525e-4).abs() < 1e-11, "{b}");
        // Large Δε²: essentially the first term of the geometric tail.
        let tail = hoeffding_union_bound(4000, 0.2, 3).unwrap();
        let first = 12.0 * (-4000.0 * 0.04 / 2.0_f64).exp();
        assert!((tail - first).abs() / first < 1e-8);
        // Tiny Δε² caps at 1.
        assert_eq!(hoeffding_union_bound(1, 1e-6, 5).unwrap(), 1.0);
    }

    #[test]
    fn hoeffding_monotonicity() {
        let mut rng = SplitMix64::new(21);
        for _ in 0..1000 {
            let delta = 50 + rng.next_index(2000);
            let eps = 0.02 + 0.2 * rng.next_f64();
            let kappa = 0.1 + 0.9 * rng.next_f64();
            let s1 = 1 + rng.next_index(4) as i32;
            let b = hoeffding_term_bound(delta, eps, kappa, s1).unwrap();
            assert!(b <= hoeffding_term_bound(delta, eps, kappa.min(1.0), s1).unwrap() + 1e-15);
            assert!(hoeffding_term_bound(delta * 2, eps, kappa, s1).unwrap() <= b + 1e-15);
            assert!(hoeffding_term_bound(delta, eps * 1.5, kappa, s1).unwrap() <= b + 1e-15);
            assert!(hoeffding_term_bound(delta, eps, kappa, s1 + 1).unwrap() <= b + 1e-15);
            let smaller_kappa = kappa * 0.5;
            assert!(hoeffding_term_bound(delta, eps, smaller_kappa, s1).unwrap() <= b + 1e-15);
        }
    }

    #[test]
    fn survival_trivial_cases() {
        let g = make_star(50).unwrap();
        let cfg = star_system(&g, 0.5);
        // eps beyond any possible |ξ| ≤ α(1 + max|ĥ|): everything survives.
        let report = survival_experiment(&cfg, 10.0, 50, 20, 7).unwrap();
        assert_eq!(report.surviving_fraction, 1.0);
        assert!(report.first_hits.iter().all(|h| h.is_none()));

        // eps = tiny: everything hits at t = 0 (generic states have ξ ≠ 0).
        let report = survival_experiment(&cfg, 1e-9, 10, 20, 7).unwrap();
        assert_eq!(report.surviving_fraction, 0.0);
        assert!(report.first_hits.iter().all(|h| *h == Some(0)));

        assert!(survival_experiment(&cfg, 0.1, 0, 5, 1).is_err());
        assert!(survival_experiment(&cfg, 0.1, 5, 0, 1).is_err());
    }

    #[test]
    fn survival_deterministic_and_parallel_safe() {
        let g = make_star(200).unwrap();
        let cfg = star_system(&g, 0.6);
        let a = survival_experiment(&cfg, 0.08, 60, 16, 123).unwrap();
        let b = survival_experiment(&cfg, 0.08, 60, 16, 123).unwrap();
        assert_eq!(a.first_hits, b.first_hits);
    }

    #[test]
    fn fluctuation_trace_contracts() {
        let g = make_star(300).unwrap();
        let cfg0 = star_system(&g, 0.0);
        let init = SimState::random(301, 2);
        let t = fluctuation_trace(&cfg0, &init, 20, &[300]).unwrap();
        assert!(t.xi[0].iter().all(|&v| v == 0.0));

        // Against an independent recomputation along the trajectory.
        let cfg = star_system(&g, 0.6);
        let trace = fluctuation_trace(&cfg, &init, 30, &[300]).unwrap();
        let mut state = init.clone();
        for s in 0..=30usize {
            let direct: f64 = state.z[..300]
                .iter()
                .map(|x| (TAU * x.value()).sin())
                .sum::<f64>()
                * 0.6
                / 300.0;
            assert!((trace.xi[0][s] - direct).abs() < 1e-12);
            if s < 30 {
                state = step(&state, &cfg).unwrap();
            }
        }
    }

    #[test]
    fn csv_writers() {
        let report = SurvivalReport {
            first_hits: vec![None, Some(3)],
            surviving_fraction: 0.5,
        };
        let mut buf = Vec::new();
        write_survival_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "trial,first_hit_t,survived\n0,inf,1\n1,3,0\n");

        let trace = FluctuationTrace {
            hub_ids: vec![7],
            times: vec![0, 1],
            xi: vec![vec![0.5, -0.25]],
        };
        let mut buf = Vec::new();
        write_fluctuation_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,hub,xi\n0,7,5.0000000000000000e-1\n"));
    }
}
