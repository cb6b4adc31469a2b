//! Chaotic circle maps coupled on heterogeneous networks.
//!
//! The crate simulates systems of the form
//!
//! ```text
//! z_i(t+1) = σ z_i(t) + (α/Δ) Σ_n A_in h(z_i(t), z_n(t))   mod 1
//! ```
//!
//! where `A` is the in-adjacency matrix of a (possibly directed) graph, `Δ` its
//! maximum in-degree and `h` a pairwise coupling. Around that core it provides:
//!
//! * [`graph`] — generators for star, layered heterogeneous, Erdős–Rényi,
//!   Chung–Lu-with-hubs and 2K-ring networks, degree statistics and the
//!   η-heterogeneity conditions;
//! * [`dynamics`] — the synchronous stepper, its truncated variant with
//!   clamped mean-field fluctuations, trajectory recording and
//!   synchronization probes;
//! * [`reduced`] — the one-dimensional hub maps `g(y) = σy + ακ ĥ(y)`,
//!   attractor classification and bifurcation scans;
//! * [`fluctuations`] — hub fluctuation traces, bad-set membership and the
//!   Hoeffding concentration bounds they are measured against;
//! * [`spectral`] — graph Laplacian spectra (dense Jacobi and matrix-free
//!   Lanczos extremes), the master-stability ratio and synchronizability
//!   verdicts.
//!
//! Everything is deterministic: randomness comes from an in-repo
//! [`rng::SplitMix64`] stream so fixed seeds reproduce bit-identical runs.

pub mod coupling;
pub mod dynamics;
pub mod error;
pub mod fluctuations;
pub mod graph;
pub mod reduced;
pub mod rng;
pub mod spectral;
pub mod torus;

pub use coupling::{CouplingSpec, FourierTerm, MeanField};
pub use dynamics::{SimState, SystemConfig, Trajectory};
pub use error::Error;
pub use graph::{DegreeProfile, HeterogeneityReport, NetworkGraph};
pub use reduced::{AttractorReport, ReducedMap};
pub use fluctuations::{BadSetQuery, FluctuationTrace};
pub use spectral::{LaplacianMatrix, SpectralReport};
pub use torus::{CirclePoint, PNorm, SplitVector};

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
