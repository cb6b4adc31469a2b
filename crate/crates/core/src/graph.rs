//! Network construction and structural statistics.
//!
//! Nodes are indexed `0..N`; ids `0..L` are low-degree nodes and `L..N` are
//! hubs. Only in-neighborhoods matter for the dynamics, so the graph is stored
//! as a row-compressed in-adjacency structure: for each node, a sorted,
//! duplicate-free slice of in-neighbor ids. Undirected graphs keep the
//! structure symmetric.
//!
//! Generators: star, layered heterogeneous (prescribed in-degree sequence
//! `(d,…,d, κ_1Δ,…, κ_mΔ,…)`), Erdős–Rényi, Chung–Lu with a hub layer, and the
//! 2K-nearest-neighbor ring. The heterogeneity conditions
//!
//! ```text
//! H1 = Δ⁻¹ L^{1/p} δ^{1/q}   H2 = Δ^{−1/p} M^{2/p}
//! H3 = Δ⁻¹ M L^{1/p}         H4 = Δ⁻² L^{1+2/p} δ
//! ```
//!
//! quantify how far a `(L, M, Δ, δ)` profile is from the regime where hub
//! dynamics reduce to one-dimensional mean-field maps; `η = max(H1..H4)`.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use crate::error::Error;
use crate::rng::SplitMix64;
use crate::Result;

/// Sparse directed graph with the low/hub node split.
#[derive(Debug, Clone)]
pub struct NetworkGraph {
    n_low: usize,
    n_hubs: usize,
    directed: bool,
    in_offsets: Vec<usize>,
    in_neighbors: Vec<u32>,
}

impl NetworkGraph {
    /// Build from per-node in-neighbor lists. Lists are sorted and checked
    /// for self-loops, duplicates and out-of-range ids; undirected graphs
    /// must be symmetric.
    pub fn from_in_lists(
        n_low: usize,
        n_hubs: usize,
        mut lists: Vec<Vec<u32>>,
        directed: bool,
    ) -> Result<NetworkGraph> {
        let n = n_low + n_hubs;
        if lists.len() != n {
            return Err(Error::invalid(format!(
                "expected {n} in-neighbor lists, got {}",
                lists.len()
            )));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0usize);
        let mut flat = Vec::new();
        for (i, list) in lists.iter_mut().enumerate() {
            list.sort_unstable();
            for pair in list.windows(2) {
                if pair[0] == pair[1] {
                    return Err(Error::invalid(format!("duplicate in-neighbor at node {i}")));
                }
            }
            for &v in list.iter() {
                if v as usize >= n {
                    return Err(Error::invalid(format!("neighbor id {v} out of range")));
                }
                if v as usize == i {
                    return Err(Error::invalid(format!("self-loop at node {i}")));
                }
            }
            flat.extend_from_slice(list);
            offsets.push(flat.len());
        }
        let g = NetworkGraph {
            n_low,
            n_hubs,
            directed,
            in_offsets: offsets,
            in_neighbors: flat,
        };
        if !directed {
            g.check_symmetric()?;
        }
        Ok(g)
    }

    fn check_symmetric(&self) -> Result<()> {
        let mut seen: HashSet<(u32, u32)> = HashSet::new();
        for i in 0..self.n_nodes() {
            for &nb in self.in_neighbors(i) {
                seen.insert((nb, i as u32));
            }
        }
        for &(a, b) in &seen {
            if !seen.contains(&(b, a)) {
                return Err(Error::invalid(format!(
                    "undirected graph is not symmetric: edge {a}->{b} has no reverse"
                )));
            }
        }
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        self.n_low + self.n_hubs
    }

    pub fn n_low(&self) -> usize {
        self.n_low
    }

    pub fn n_hubs(&self) -> usize {
        self.n_hubs
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn is_hub(&self, node: usize) -> bool {
        node >= self.n_low
    }

    /// Sorted in-neighbor ids of `node`.
    #[inline]
    pub fn in_neighbors(&self, node: usize) -> &[u32] {
        &self.in_neighbors[self.in_offsets[node]..self.in_offsets[node + 1]]
    }

    #[inline]
    pub fn in_degree(&self, node: usize) -> usize {
        self.in_offsets[node + 1] - self.in_offsets[node]
    }

    /// Total number of stored directed edges (an undirected edge counts twice).
    pub fn n_edges(&self) -> usize {
        self.in_neighbors.len()
    }

    /// Full structural scan: id ranges, self-loops, sortedness, duplicates,
    /// and symmetry iff undirected.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_nodes();
        for i in 0..n {
            let row = self.in_neighbors(i);
            for w in row.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::invalid(format!("row {i} not sorted/unique")));
                }
            }
            for &v in row {
                if v as usize >= n || v as usize == i {
                    return Err(Error::invalid(format!("bad neighbor {v} at node {i}")));
                }
            }
        }
        if !self.directed {
            self.check_symmetric()?;
        }
        Ok(())
    }
}

/// In-degree statistics: `Δ` (global max), `δ` (max over low nodes) and the
/// normalized hub connectivities `κ_j = d_{L+j}/Δ`.
#[derive(Debug, Clone)]
pub struct DegreeProfile {
    pub in_degrees: Vec<u32>,
    pub delta_max: u32,
    pub delta_low: u32,
    pub kappas: Vec<f64>,
}

/// Values of the four heterogeneity conditions at a given exponent `p`.
#[derive(Debug, Clone, Copy)]
pub struct HeterogeneityReport {
    pub p: f64,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub h4: f64,
    pub eta: f64,
}

/// Where layered hub in-neighbors are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HubPool {
    /// Hubs wire only to low-degree nodes (the default; makes the mean-field
    /// term over low nodes exact).
    LowOnly,
    /// Hubs may also wire to other hubs.
    AllNodes,
}

/// Options for [`make_layered`].
#[derive(Debug, Clone, Copy)]
pub struct LayeredOptions {
    pub directed: bool,
    pub hub_pool: HubPool,
}

impl Default for LayeredOptions {
    fn default() -> Self {
        LayeredOptions {
            directed: true,
            hub_pool: HubPool::LowOnly,
        }
    }
}

/// Star with `n_low` leaves all pointing at one hub (id `n_low`). Directed:
/// the hub has in-degree `n_low`, every leaf has in-degree 0.
pub fn make_star(n_low: usize) -> Result<NetworkGraph> {
    if n_low == 0 {
        return Err(Error::invalid("star needs at least one low node"));
    }
    let mut lists = vec![Vec::new(); n_low + 1];
    lists[n_low] = (0..n_low as u32).collect();
    NetworkGraph::from_in_lists(n_low, 1, lists, true)
}

/// Draw `k` distinct ids from `0..pool` excluding `forbidden`, collision-free
/// by re-sampling. With `k` much smaller than the pool this terminates in
/// O(k) expected draws; for dense requests it falls back to a partial shuffle.
fn draw_distinct(rng: &mut SplitMix64, k: usize, pool: usize, forbidden: Option<u32>) -> Vec<u32> {
    let avail = pool - usize::from(forbidden.map_or(false, |f| (f as usize) < pool));
    assert!(k <= avail, "draw_distinct: k exceeds pool");
    if k * 3 >= avail {
        // Dense request: materialize and partially shuffle.
        let mut ids: Vec<u32> = (0..pool as u32)
            .filter(|&v| Some(v) != forbidden)
            .collect();
        for i in 0..k {
            let j = i + rng.next_index(ids.len() - i);
            ids.swap(i, j);
        }
        ids.truncate(k);
        return ids;
    }
    let mut chosen = HashSet::with_capacity(k * 2);
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let v = rng.next_below(pool as u64) as u32;
        if Some(v) == forbidden || !chosen.insert(v) {
            continue;
        }
        out.push(v);
    }
    out
}

/// Layered heterogeneous graph with in-degree sequence
/// `(d,…,d  | κ_1Δ,…  κ_2Δ,… )`: `n_low` low nodes of in-degree `d`, then one
/// hub block per `(κ_i, count_i)` layer with in-degree `round(κ_i Δ)`.
///
/// Low-node in-neighbors are drawn uniformly without replacement from all
/// other nodes; hub in-neighbors from the pool selected in `opts` (low nodes
/// only by default). Realized in-degrees equal the requested sequence exactly
/// when `opts.directed` is true; with `directed = false` the edge set is
/// symmetrized and low nodes pick up the reverse hub edges.
pub fn make_layered(
    d: usize,
    delta: usize,
    layers: &[(f64, usize)],
    n_low: usize,
    seed: u64,
    opts: LayeredOptions,
) -> Result<NetworkGraph> {
    if layers.is_empty() {
        return Err(Error::invalid("layered graph needs at least one hub layer"));
    }
    for w in layers.windows(2) {
        if w[1].0 >= w[0].0 {
            return Err(Error::invalid("layer kappas must be strictly decreasing"));
        }
    }
    let n_hubs: usize = layers.iter().map(|&(_, m)| m).sum();
    let n = n_low + n_hubs;
    if d > n_low {
        return Err(Error::invalid(format!("low in-degree d={d} exceeds L={n_low}")));
    }
    if d + 1 > n {
        return Err(Error::infeasible(format!("d={d} needs at least {} nodes", d + 1)));
    }
    let mut hub_degrees = Vec::with_capacity(n_hubs);
    for &(kappa, count) in layers {
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(Error::invalid(format!("kappa {kappa} outside (0, 1]")));
        }
        // Non-integer κΔ is rounded; the realized value is what the
        // degree profile reports.
        let deg = (kappa * delta as f64).round() as usize;
        let pool = match opts.hub_pool {
            HubPool::LowOnly => n_low,
            HubPool::AllNodes => n - 1,
        };
        if deg > pool {
            return Err(Error::infeasible(format!(
                "hub in-degree {deg} exceeds available pool {pool}"
            )));
        }
        for _ in 0..count {
            hub_degrees.push(deg);
        }
    }

    let mut rng = SplitMix64::new(seed);
    let mut lists: Vec<Vec<u32>> = Vec::with_capacity(n);
    for i in 0..n_low {
        lists.push(draw_distinct(&mut rng, d, n, Some(i as u32)));
    }
    for (j, &deg) in hub_degrees.iter().enumerate() {
        let hub_id = (n_low + j) as u32;
        let list = match opts.hub_pool {
            HubPool::LowOnly => draw_distinct(&mut rng, deg, n_low, None),
            HubPool::AllNodes => draw_distinct(&mut rng, deg, n, Some(hub_id)),
        };
        lists.push(list);
    }

    if !opts.directed {
        let mut sets: Vec<HashSet<u32>> = lists.iter().map(|l| l.iter().copied().collect()).collect();
        for i in 0..n {
            for &nb in &lists[i] {
                sets[nb as usize].insert(i as u32);
            }
        }
        lists = sets
            .into_iter()
            .map(|s| {
                let mut v: Vec<u32> = s.into_iter().collect();
                v.sort_unstable();
                v
            })
            .collect();
    }
    NetworkGraph::from_in_lists(n_low, n_hubs, lists, opts.directed)
}

/// Erdős–Rényi `G(n, p)`: undirected, every unordered pair present
/// independently with probability `p`. All nodes are classified as low.
pub fn make_erdos_renyi(n: usize, p: f64, seed: u64) -> Result<NetworkGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("edge probability {p} outside [0, 1]")));
    }
    let mut rng = SplitMix64::new(seed);
    let mut lists: Vec<Vec<u32>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.next_f64() < p {
                lists[i].push(j as u32);
                lists[j].push(i as u32);
            }
        }
    }
    NetworkGraph::from_in_lists(n, 0, lists, false)
}

/// Chung–Lu random graph with a hub layer: independent directed edges with
/// `P(n -> i) = w_i w_n ρ` when either endpoint is a low node (`ρ = 1/Σw`),
/// and constant probability `hub_p` between hubs.
///
/// `weights` must be positive and nondecreasing, with the admissibility
/// condition `w_N · w_L · ρ ≤ 1`; infeasible vectors are rejected.
pub fn make_chung_lu_hubs(
    weights: &[f64],
    n_hubs: usize,
    hub_p: f64,
    seed: u64,
) -> Result<NetworkGraph> {
    let n = weights.len();
    if n_hubs >= n && n > 0 {
        return Err(Error::invalid("need at least one low node"));
    }
    if n == 0 {
        return Err(Error::invalid("empty weight vector"));
    }
    if !(0.0..=1.0).contains(&hub_p) {
        return Err(Error::invalid(format!("hub probability {hub_p} outside [0, 1]")));
    }
    for w in weights.windows(2) {
        if w[1] < w[0] {
            return Err(Error::invalid("weights must be nondecreasing"));
        }
    }
    if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
        return Err(Error::invalid("weights must be positive and finite"));
    }
    let n_low = n - n_hubs;
    let rho = 1.0 / weights.iter().sum::<f64>();
    let w_top = weights[n - 1];
    let w_low_top = weights[n_low - 1];
    if w_top * w_low_top * rho > 1.0 {
        return Err(Error::infeasible(format!(
            "inadmissible weights: w_N*w_L*rho = {} > 1",
            w_top * w_low_top * rho
        )));
    }

    let mut rng = SplitMix64::new(seed);
    let mut lists: Vec<Vec<u32>> = vec![Vec::new(); n];
    for i in 0..n {
        for src in 0..n {
            if src == i {
                continue;
            }
            let p = if i < n_low || src < n_low {
                weights[i] * weights[src] * rho
            } else {
                hub_p
            };
            if rng.next_f64() < p {
                lists[i].push(src as u32);
            }
        }
    }
    NetworkGraph::from_in_lists(n_low, n_hubs, lists, true)
}

/// Ring of `n` nodes, each coupled to its `2K` nearest neighbors (undirected
/// circulant). Requires `2K < n`.
pub fn make_ring(n: usize, k: usize) -> Result<NetworkGraph> {
    if 2 * k >= n {
        return Err(Error::invalid(format!("ring needs 2K < N, got K={k}, N={n}")));
    }
    let mut lists: Vec<Vec<u32>> = vec![Vec::new(); n];
    for i in 0..n {
        for off in 1..=k {
            lists[i].push(((i + off) % n) as u32);
            lists[i].push(((i + n - off) % n) as u32);
        }
    }
    NetworkGraph::from_in_lists(n, 0, lists, false)
}

/// In-degree statistics of a graph; `κ_j` is computed against the realized
/// global maximum `Δ` (zero for hubs of an empty graph).
pub fn degree_profile(g: &NetworkGraph) -> DegreeProfile {
    let n = g.n_nodes();
    let in_degrees: Vec<u32> = (0..n).map(|i| g.in_degree(i) as u32).collect();
    let delta_max = in_degrees.iter().copied().max().unwrap_or(0);
    let delta_low = in_degrees[..g.n_low()].iter().copied().max().unwrap_or(0);
    let kappas = in_degrees[g.n_low()..]
        .iter()
        .map(|&d| {
            if delta_max == 0 {
                0.0
            } else {
                d as f64 / delta_max as f64
            }
        })
        .collect();
    DegreeProfile {
        in_degrees,
        delta_max,
        delta_low,
        kappas,
    }
}

/// Evaluate the four heterogeneity conditions at exponent `p ≥ 1`
/// (`q` is the Hölder conjugate; terms containing `δ` vanish when `δ = 0`).
pub fn heterogeneity_eta(
    profile: &DegreeProfile,
    n_low: usize,
    n_hubs: usize,
    p: f64,
) -> Result<HeterogeneityReport> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::invalid(format!("exponent p={p} must be finite and >= 1")));
    }
    let delta = profile.delta_max as f64;
    if delta <= 0.0 {
        return Err(Error::invalid("heterogeneity undefined for an edgeless graph"));
    }
    let small_delta = profile.delta_low as f64;
    let l = n_low as f64;
    let m = n_hubs as f64;

    let delta_pow_q = if small_delta == 0.0 {
        0.0
    } else if p == 1.0 {
        1.0 // q = ∞: δ^{1/q} = δ^0
    } else {
        let q = p / (p - 1.0);
        small_delta.powf(1.0 / q)
    };
    let h1 = l.powf(1.0 / p) * delta_pow_q / delta;
    let h2 = delta.powf(-1.0 / p) * m.powf(2.0 / p);
    let h3 = m * l.powf(1.0 / p) / delta;
    let h4 = l.powf(1.0 + 2.0 / p) * small_delta / (delta * delta);
    let eta = h1.max(h2).max(h3).max(h4);
    Ok(HeterogeneityReport {
        p,
        h1,
        h2,
        h3,
        h4,
        eta,
    })
}

/// Minimize `η` over a grid of exponents; returns the best `p` and its report.
pub fn eta_search(
    profile: &DegreeProfile,
    n_low: usize,
    n_hubs: usize,
    p_grid: &[f64],
) -> Result<(f64, HeterogeneityReport)> {
    if p_grid.is_empty() {
        return Err(Error::invalid("empty exponent grid"));
    }
    let mut best: Option<(f64, HeterogeneityReport)> = None;
    for &p in p_grid {
        let rep = heterogeneity_eta(profile, n_low, n_hubs, p)?;
        if best.as_ref().map_or(true, |(_, b)| rep.eta < b.eta) {
            best = Some((p, rep));
        }
    }
    Ok(best.unwrap())
}

/// Write the edge-list text format: a header
/// `# directed|undirected N=<n> L=<l> M=<m>` followed by one `src dst` pair
/// per line (`src dst` is a directed edge pointing at `dst`; undirected edges
/// are written once with `src < dst`).
pub fn write_edge_list<W: Write>(g: &NetworkGraph, out: &mut W) -> Result<()> {
    let kind = if g.is_directed() { "directed" } else { "undirected" };
    writeln!(out, "# {kind} N={} L={} M={}", g.n_nodes(), g.n_low(), g.n_hubs())?;
    for i in 0..g.n_nodes() {
        for &src in g.in_neighbors(i) {
            if !g.is_directed() && src as usize > i {
                continue;
            }
            writeln!(out, "{src} {i}")?;
        }
    }
    Ok(())
}

/// Parse the edge-list text format produced by [`write_edge_list`].
pub fn read_edge_list<R: BufRead>(input: R) -> Result<NetworkGraph> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty edge-list file".into()))??;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("#") {
        return Err(Error::Parse("missing '#' header".into()));
    }
    let directed = match parts.next() {
        Some("directed") => true,
        Some("undirected") => false,
        other => return Err(Error::Parse(format!("bad direction flag {other:?}"))),
    };
    let mut n = None;
    let mut l = None;
    let mut m = None;
    for kv in parts {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad header field {kv}")))?;
        let value: usize = value
            .parse()
            .map_err(|_| Error::Parse(format!("bad header value {kv}")))?;
        match key {
            "N" => n = Some(value),
            "L" => l = Some(value),
            "M" => m = Some(value),
            _ => return Err(Error::Parse(format!("unknown header key {key}"))),
        }
    }
    let (n, l, m) = match (n, l, m) {
        (Some(n), Some(l), Some(m)) if l + m == n => (n, l, m),
        _ => return Err(Error::Parse("header must carry N, L, M with N = L + M".into())),
    };
    let mut lists: Vec<Vec<u32>> = vec![Vec::new(); n];
    for line in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut it = trimmed.split_whitespace();
        let src: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad edge line: {line}")))?;
        let dst: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad edge line: {line}")))?;
        if src >= n || dst >= n {
            return Err(Error::Parse(format!("edge {src} {dst} out of range")));
        }
        lists[dst].push(src as u32);
        if !directed {
            lists[src].push(dst as u32);
        }
    }
    NetworkGraph::from_in_lists(l, m, lists, directed)
}
