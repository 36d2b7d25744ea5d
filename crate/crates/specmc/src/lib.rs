//! # specmc
//!
//! Monte Carlo estimation of the spectrum of kernel integral operators from
//! Markov chain samples.
//!
//! Given a symmetric kernel `h` on (0,1) and a probability measure `π`, the
//! integral operator `f ↦ ∫ h(·,y) f(y) π(dy)` on `L₂(π)` is Hilbert–Schmidt
//! and has a square-summable real spectrum. This crate estimates that spectrum
//! from a single Markov chain trajectory targeting `π`, by forming the
//! empirical matrices `(1/n) h(X_i, X_j)` (with or without the diagonal) and
//! computing their eigenvalues. Estimation error is measured in the `δ₂`
//! matching metric: the minimum ℓ₂ distance between eigenvalue sequences over
//! all pairings, with finite spectra padded by zeros.
//!
//! The pieces:
//!
//! * [`chain`] — built-in chains on (0,1) with known stationary law, exact
//!   Nummelin split-chain simulation, regeneration times and excursion blocks.
//! * [`kernel`] — built-in symmetric kernels, tensor-product majorants, Mercer
//!   expansions and feature maps, reference (true) spectra.
//! * [`spectral`] — empirical Gram matrices, the `δ₂` metric, Hilbert–Schmidt
//!   distance, spectrum estimates.
//! * [`eigen`] — dense symmetric eigensolvers backing [`spectral`].
//! * [`ustat`] — degree-2 U-statistics of a trajectory and block-level kernels.
//! * [`experiments`] — seeded, replicated experiment drivers: spectral
//!   convergence curves, exceedance tail studies, the diverging diagonal-kernel
//!   configuration, and the drift-condition `τ` calculator.
//! * [`config`] / [`report`] — run configuration, CSV/report emission.
//!
//! All randomness flows from a single 64-bit master seed through documented
//! per-replicate derivation (see [`rng`]), so every experiment is reproducible
//! bit for bit.

pub mod chain;
pub mod config;
pub mod eigen;
pub mod experiments;
pub mod kernel;
pub mod matrix;
pub mod quad;
pub mod report;
pub mod rng;
pub mod runner;
pub mod spectral;
pub mod ustat;

pub use chain::{ChainSpec, RegenerationTrace, Start};
pub use kernel::{FeatureMap, Kernel};
pub use matrix::SymMatrix;
pub use spectral::{build_gram, delta2, hs_distance, EmpiricalGram, GramVariant, SpectrumEstimate};
pub use ustat::{u_stat, UStatResult};
