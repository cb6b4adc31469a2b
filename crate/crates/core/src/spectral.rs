//! Laplacian spectra and synchronizability of the diagonal.
//!
//! For an undirected graph the Laplacian is `L = D − A` (positive
//! semidefinite; row sums zero; `λ_1 = 0` along the all-ones direction).
//! Transverse perturbations of a synchronized orbit decouple into modes
//! `z(t+1) = [σ − β ω(s(t))] z(t)` with `β = (α/Δ) λ_i`, so with a diffusion
//! slope `φ'(0)` the damped window is `β ∈ (β_c¹, β_c²)`,
//! `β_c^{1,2} = (σ∓1)/φ'(0)`, and a common `α` exists for all modes iff
//!
//! ```text
//! λ_N / λ_2 < (σ+1)/(σ−1).
//! ```
//!
//! Spectra come from an in-repo cyclic Jacobi solver (dense, desk scale) or
//! from matrix-free Lanczos with full reorthogonalization when only the
//! extremes `λ_2, λ_N` are needed on larger graphs. Ring networks have the
//! closed-form circulant spectrum `λ_j = 2K + 1 − D_K(j−1)` with the
//! Dirichlet kernel `D_K(m) = sin((2K+1)πm/N)/sin(πm/N)`.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::io::Write;

use crate::dynamics::fit_log_slope;
use crate::error::Error;
use crate::graph::NetworkGraph;
use crate::rng::SplitMix64;
use crate::Result;

/// Largest matrix the dense Jacobi path accepts.
pub const DENSE_EIG_CAP: usize = 4000;

/// Dense symmetric Laplacian `L = D − A`.
#[derive(Debug, Clone)]
pub struct LaplacianMatrix {
    n: usize,
    data: Vec<f64>,
}

impl LaplacianMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Build from explicit entries (row-major, must be symmetric).
    pub fn from_dense(n: usize, data: Vec<f64>) -> Result<LaplacianMatrix> {
        if data.len() != n * n {
            return Err(Error::invalid("dense matrix size mismatch"));
        }
        let m = LaplacianMatrix { n, data };
        for i in 0..n {
            for j in (i + 1)..n {
                if (m.get(i, j) - m.get(j, i)).abs() > 1e-12 {
                    return Err(Error::invalid("matrix is not symmetric"));
                }
            }
        }
        Ok(m)
    }
}

/// `L = D − A` of an undirected graph.
pub fn laplacian(g: &NetworkGraph) -> Result<LaplacianMatrix> {
    if g.is_directed() {
        return Err(Error::invalid("Laplacian spectra are defined here for undirected graphs"));
    }
    let n = g.n_nodes();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        data[i * n + i] = g.in_degree(i) as f64;
        for &nb in g.in_neighbors(i) {
            data[i * n + nb as usize] = -1.0;
        }
    }
    Ok(LaplacianMatrix { n, data })
}

/// Full eigen-decomposition by cyclic Jacobi rotations. Returns unsorted
/// eigenvalues and the matching eigenvectors as rows of the second value.
pub fn jacobi_eigen(m: &LaplacianMatrix) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = m.n;
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    if n > DENSE_EIG_CAP {
        return Err(Error::invalid(format!(
            "dense solver capped at {DENSE_EIG_CAP} nodes; use laplacian_extremes"
        )));
    }
    let mut a = m.data.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let total_norm = m.frobenius().max(f64::MIN_POSITIVE);
    let max_sweeps = 100;
    for _sweep in 0..max_sweeps {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() <= 1e-12 * total_norm {
            let values: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
            let vectors: Vec<Vec<f64>> = (0..n)
                .map(|k| (0..n).map(|i| v[i * n + k]).collect())
                .collect();
            return Ok((values, vectors));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                // Stable tangent of the rotation angle.
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for i in 0..n {
                    if i != p && i != q {
                        let aip = a[i * n + p];
                        let aiq = a[i * n + q];
                        a[i * n + p] = aip - s * (aiq + tau * aip);
                        a[i * n + q] = aiq + s * (aip - tau * aiq);
                        a[p * n + i] = a[i * n + p];
                        a[q * n + i] = a[i * n + q];
                    }
                }
                for i in 0..n {
                    let vip = v[i * n + p];
                    let viq = v[i * n + q];
                    v[i * n + p] = vip - s * (viq + tau * vip);
                    v[i * n + q] = viq + s * (vip - tau * viq);
                }
            }
        }
    }
    Err(Error::numeric(format!(
        "Jacobi failed to converge in {max_sweeps} sweeps (n = {n})"
    )))
}

/// Full spectrum, sorted ascending.
pub fn eig_extremes(m: &LaplacianMatrix) -> Result<Vec<f64>> {
    let (mut values, _) = jacobi_eigen(m)?;
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(values)
}

/// Extremal nonzero Laplacian eigenvalues from matrix-free Lanczos.
#[derive(Debug, Clone, Copy)]
pub struct ExtremesReport {
    pub lambda2: f64,
    pub lambda_n: f64,
    /// Residual bounds `|β_m s_last|` for the two extremal Ritz pairs.
    pub residual2: f64,
    pub residual_n: f64,
    pub steps: usize,
}

fn laplacian_apply(g: &NetworkGraph, x: &[f64], y: &mut [f64]) {
    for i in 0..g.n_nodes() {
        let mut acc = g.in_degree(i) as f64 * x[i];
        for &nb in g.in_neighbors(i) {
            acc -= x[nb as usize];
        }
        y[i] = acc;
    }
}

/// `λ_2` and `λ_N` of an undirected graph's Laplacian by Lanczos with full
/// reorthogonalization on the complement of the kernel direction `1`.
/// Suitable beyond the dense cap; residual bounds come back in the report.
pub fn laplacian_extremes(g: &NetworkGraph, max_steps: usize, seed: u64) -> Result<ExtremesReport> {
    if g.is_directed() {
        return Err(Error::invalid("Laplacian spectra are defined here for undirected graphs"));
    }
    let n = g.n_nodes();
    if n < 2 {
        return Err(Error::invalid("need at least two nodes"));
    }
    let m = max_steps.min(n - 1).max(2);
    let ones = 1.0 / (n as f64).sqrt();

    let mut rng = SplitMix64::new(seed);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut alphas: Vec<f64> = Vec::with_capacity(m);
    let mut betas: Vec<f64> = Vec::with_capacity(m);

    let mut v: Vec<f64> = (0..n).map(|_| rng.next_f64() - 0.5).collect();
    project_out_ones(&mut v, ones);
    normalize(&mut v)?;
    basis.push(v);

    let mut w = vec![0.0; n];
    for step in 0..m {
        laplacian_apply(g, &basis[step], &mut w);
        let alpha = dot(&w, &basis[step]);
        alphas.push(alpha);
        for (wi, vi) in w.iter_mut().zip(&basis[step]) {
            *wi -= alpha * vi;
        }
        if step > 0 {
            let beta_prev = betas[step - 1];
            for (wi, vi) in w.iter_mut().zip(&basis[step - 1]) {
                *wi -= beta_prev * vi;
            }
        }
        // Full reorthogonalization, twice, plus the kernel direction.
        for _ in 0..2 {
            project_out_ones(&mut w, ones);
            for b in &basis {
                let c = dot(&w, b);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let beta = dot(&w, &w).sqrt();
        if beta < 1e-12 || step + 1 == m {
            betas.push(beta);
            break;
        }
        betas.push(beta);
        let mut next = w.clone();
        for x in next.iter_mut() {
            *x /= beta;
        }
        basis.push(next);
    }

    let k = alphas.len();
    // Dense tridiagonal eigenproblem for the Ritz values.
    let mut t = vec![0.0; k * k];
    for i in 0..k {
        t[i * k + i] = alphas[i];
        if i + 1 < k {
            t[i * k + i + 1] = betas[i];
            t[(i + 1) * k + i] = betas[i];
        }
    }
    let tm = LaplacianMatrix { n: k, data: t };
    let (values, vectors) = jacobi_eigen(&tm)?;
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let lo = idx[0];
    let hi = idx[k - 1];
    let beta_last = *betas.last().unwrap_or(&0.0);
    Ok(ExtremesReport {
        lambda2: values[lo].max(0.0),
        lambda_n: values[hi],
        residual2: (beta_last * vectors[lo][k - 1]).abs(),
        residual_n: (beta_last * vectors[hi][k - 1]).abs(),
        steps: k,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project_out_ones(v: &mut [f64], ones_entry: f64) {
    let c: f64 = v.iter().sum::<f64>() * ones_entry;
    for x in v.iter_mut() {
        *x -= c * ones_entry;
    }
}

fn normalize(v: &mut [f64]) -> Result<()> {
    let norm = dot(v, v).sqrt();
    if norm < 1e-300 {
        return Err(Error::numeric("degenerate start vector"));
    }
    for x in v.iter_mut() {
        *x /= norm;
    }
    Ok(())
}

/// Closed-form circulant spectrum of the 2K-ring, in mode order `j = 1..=N`:
/// `λ_1 = 0`, `λ_j = 2K + 1 − D_K(j−1)` with the Dirichlet kernel
/// `D_K(m) = sin((2K+1)πm/N) / sin(πm/N)`.
pub fn ring_eigs(n: usize, k: usize) -> Result<Vec<f64>> {
    if 2 * k >= n {
        return Err(Error::invalid(format!("ring spectrum needs 2K < N, got K={k}, N={n}")));
    }
    let kk = (2 * k + 1) as f64;
    Ok((0..n)
        .map(|m| {
            if m == 0 {
                0.0
            } else {
                let x = PI * m as f64 / n as f64;
                kk - (kk * x).sin() / x.sin()
            }
        })
        .collect())
}

/// Master-stability summary of a sorted spectrum.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub lambda2: f64,
    pub lambda_n: f64,
    pub ratio: f64,
    /// `(σ+1)/(σ−1)`.
    pub threshold: f64,
    pub synchronizable: bool,
    pub alpha_interval: Option<(f64, f64)>,
}

/// Ratio test `λ_N/λ_2 < (σ+1)/(σ−1)` for a connected graph's sorted
/// spectrum. Fails with an error when `λ_2` is numerically zero
/// (disconnected graph).
pub fn sync_report(spectrum: &[f64], sigma: u32) -> Result<SpectralReport> {
    if spectrum.len() < 2 {
        return Err(Error::invalid("need at least two eigenvalues"));
    }
    if sigma < 2 {
        return Err(Error::invalid("sigma must be >= 2"));
    }
    let lambda2 = spectrum[1];
    let lambda_n = *spectrum.last().unwrap();
    if lambda2 <= 1e-9 * lambda_n.max(1.0) {
        return Err(Error::numeric(format!(
            "lambda2 = {lambda2}: graph is disconnected (or numerically so)"
        )));
    }
    let ratio = lambda_n / lambda2;
    let threshold = (sigma as f64 + 1.0) / (sigma as f64 - 1.0);
    Ok(SpectralReport {
        lambda2,
        lambda_n,
        ratio,
        threshold,
        synchronizable: ratio < threshold,
        alpha_interval: None,
    })
}

/// The open interval of coupling strengths `α` with
/// `β_c¹ < (α/Δ) λ_2` and `(α/Δ) λ_N < β_c²`, where
/// `β_c^{1,2} = (σ∓1)/φ'(0)`; `None` when the ratio test fails.
pub fn alpha_interval(
    spectrum: &[f64],
    sigma: u32,
    dphi0: f64,
    delta: usize,
) -> Result<Option<(f64, f64)>> {
    if dphi0 == 0.0 || !dphi0.is_finite() {
        return Err(Error::invalid("dphi0 must be nonzero and finite"));
    }
    if delta == 0 {
        return Err(Error::invalid("delta must be positive"));
    }
    let report = sync_report(spectrum, sigma)?;
    let s = sigma as f64;
    let a = delta as f64 * (s - 1.0) / (dphi0 * report.lambda2);
    let b = delta as f64 * (s + 1.0) / (dphi0 * report.lambda_n);
    let (lo, hi) = if dphi0 > 0.0 { (a, b) } else { (b, a) };
    Ok(if lo < hi { Some((lo, hi)) } else { None })
}

/// One inequality of the spectral bounds audit.
#[derive(Debug, Clone)]
pub struct BoundCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub slack: f64,
}

/// Audit of the classical Laplacian eigenvalue bounds.
#[derive(Debug, Clone)]
pub struct BoundsAudit {
    /// Exact diameter at desk scale; a lower estimate from sampled sources
    /// above [`DENSE_EIG_CAP`] (see `diameter_exact`).
    pub diameter: usize,
    pub diameter_exact: bool,
    pub checks: Vec<BoundCheck>,
}

fn bfs_eccentricity(g: &NetworkGraph, source: usize, dist: &mut [i64]) -> Result<usize> {
    dist.iter_mut().for_each(|d| *d = -1);
    dist[source] = 0;
    let mut queue = VecDeque::new();
    queue.push_back(source);
    let mut ecc = 0usize;
    while let Some(u) = queue.pop_front() {
        for &nb in g.in_neighbors(u) {
            let v = nb as usize;
            if dist[v] < 0 {
                dist[v] = dist[u] + 1;
                ecc = ecc.max(dist[v] as usize);
                queue.push_back(v);
            }
        }
    }
    if dist.iter().any(|&d| d < 0) {
        return Err(Error::numeric("graph is disconnected: diameter undefined"));
    }
    Ok(ecc)
}

/// Check `λ_2 ≥ 4/(ND)`, `λ_2 ≤ N d_min/(N−1)`, `N d_max/(N−1) ≤ λ_N ≤ 2 d_max`
/// against a computed (sorted) spectrum. The diameter comes from BFS over
/// every source at desk scale; above the cap, sampled sources give a lower
/// estimate for reporting while the `4/(ND)` check conservatively uses the
/// upper bound `2·min_sampled_ecc ≥ D`.
pub fn spectral_bounds_audit(g: &NetworkGraph, spectrum: &[f64]) -> Result<BoundsAudit> {
    if g.is_directed() {
        return Err(Error::invalid("audit needs an undirected graph"));
    }
    let n = g.n_nodes();
    if spectrum.len() != n || n < 2 {
        return Err(Error::invalid("spectrum length must match the graph"));
    }
    let mut dist = vec![-1i64; n];
    let exact = n <= DENSE_EIG_CAP;
    let (diameter, diameter_for_bound) = if exact {
        let mut d = 0usize;
        for s in 0..n {
            d = d.max(bfs_eccentricity(g, s, &mut dist)?);
        }
        (d, d)
    } else {
        let samples = 64.min(n);
        let mut max_ecc = 0usize;
        let mut min_ecc = usize::MAX;
        for k in 0..samples {
            let s = k * n / samples;
            let e = bfs_eccentricity(g, s, &mut dist)?;
            max_ecc = max_ecc.max(e);
            min_ecc = min_ecc.min(e);
        }
        (max_ecc, 2 * min_ecc)
    };

    let lambda2 = spectrum[1];
    let lambda_n = *spectrum.last().unwrap();
    let d_min = (0..n).map(|i| g.in_degree(i)).min().unwrap() as f64;
    let d_max = (0..n).map(|i| g.in_degree(i)).max().unwrap() as f64;
    let nf = n as f64;
    let tol = 1e-8 * (1.0 + lambda_n.abs());

    let mut checks = Vec::with_capacity(4);
    let mut push = |name, lhs: f64, rhs: f64| {
        checks.push(BoundCheck {
            name,
            lhs,
            rhs,
            holds: lhs >= rhs - tol,
            slack: lhs - rhs,
        });
    };
    push("lambda2 >= 4/(N*D)", lambda2, 4.0 / (nf * diameter_for_bound as f64));
    push("N*d_min/(N-1) >= lambda2", nf * d_min / (nf - 1.0), lambda2);
    push("lambdaN >= N*d_max/(N-1)", lambda_n, nf * d_max / (nf - 1.0));
    push("2*d_max >= lambdaN", 2.0 * d_max, lambda_n);
    Ok(BoundsAudit {
        diameter,
        diameter_exact: exact,
        checks,
    })
}

/// Theorem-style concentration bracket for Erdős–Rényi Laplacian extremes:
/// `λ_2 > Np − f` and `λ_N < Np + f` with
/// `f = sqrt((3+ε)(1−p) p N log N)`.
pub fn er_concentration(n: usize, p: f64, eps_slack: f64) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::invalid("need at least two nodes"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p outside [0, 1]"));
    }
    let nf = n as f64;
    if p <= nf.ln() / nf {
        return Err(Error::invalid(format!(
            "bracket needs p > log N / N = {}",
            nf.ln() / nf
        )));
    }
    if eps_slack < 0.0 {
        return Err(Error::invalid("eps_slack must be nonnegative"));
    }
    let f = ((3.0 + eps_slack) * (1.0 - p) * p * nf * nf.ln()).sqrt();
    Ok((nf * p - f, nf * p + f))
}

/// `ν = sup_t |σ − β ω(s(t))|` over a sampled diffusion-slope trace.
pub fn nu_sup(sigma: u32, beta: f64, omega_trace: &[f64]) -> Result<f64> {
    if omega_trace.is_empty() {
        return Err(Error::invalid("empty omega trace"));
    }
    Ok(omega_trace
        .iter()
        .map(|&w| (sigma as f64 - beta * w).abs())
        .fold(0.0, f64::max))
}

/// Magnitudes of one transverse mode under the parametric evolution
/// `z(t+1) = [σ − β ω(s(t))] z(t)` (the slope trace is cycled if shorter
/// than `t_max`).
#[derive(Debug, Clone)]
pub struct ModeTrace {
    pub magnitudes: Vec<f64>,
    pub fitted_rate: f64,
}

pub fn mode_evolution(
    sigma: u32,
    beta: f64,
    omega_trace: &[f64],
    z0: f64,
    t_max: usize,
) -> Result<ModeTrace> {
    if omega_trace.is_empty() {
        return Err(Error::invalid("empty omega trace"));
    }
    if t_max == 0 {
        return Err(Error::invalid("need at least one step"));
    }
    let mut z = z0;
    let mut magnitudes = Vec::with_capacity(t_max + 1);
    magnitudes.push(z.abs());
    for t in 0..t_max {
        z *= sigma as f64 - beta * omega_trace[t % omega_trace.len()];
        magnitudes.push(z.abs());
    }
    let fitted_rate = fit_log_slope(&magnitudes);
    Ok(ModeTrace {
        magnitudes,
        fitted_rate,
    })
}

/// Write a sorted spectrum as `index,lambda` (1-based mode index).
pub fn write_spectrum_csv<W: Write>(spectrum: &[f64], out: &mut W) -> Result<()> {
    writeln!(out, "index,lambda")?;
    for (i, l) in spectrum.iter().enumerate() {
        writeln!(out, "{},{:.16e}", i + 1, l)?;
    }
    Ok(())
}

/// Write an audit as flat `key=value` lines.
pub fn write_audit_txt<W: Write>(audit: &BoundsAudit, out: &mut W) -> Result<()> {
    writeln!(out, "diameter={}", audit.diameter)?;
    writeln!(out, "diameter_exact={}", audit.diameter_exact)?;
    for c in &audit.checks {
        let key = c.name.replace(' ', "");
        writeln!(out, "{key}.holds={}", c.holds)?;
        writeln!(out, "{key}.slack={:.6e}", c.slack)?;
    }
    Ok(())
}
