//! Exact simulation and numerical verification lab for the occupation field
//! of a Poisson system of independent simple random walks on Z.
//!
//! The field starts from i.i.d. Poisson(lambda) particle counts; every
//! particle performs an independent simple symmetric random walk. The crate
//! evaluates, exactly simulates, and statistically confronts three families
//! of observables:
//!
//! * the cumulative occupation of a finite site set over a time horizon,
//! * the number of distinct particles visiting that set,
//! * polynomial functionals of the field read along an independent
//!   nearest-neighbour sampling walk (drifted or symmetric).
//!
//! Module map:
//!
//! * [`kernels`] - walk transition kernels, local-CLT gaps, lattice norms,
//!   hitting-mass dynamic programming;
//! * [`charlier`] - monic Charlier polynomials, Poisson moments, chaos
//!   coefficients and rank of a polynomial observable;
//! * [`correlations`] - path-averaged kernel correlations, certified tail
//!   sums, and the limiting variance constant under drifted sampling;
//! * [`variance`] - exact finite-horizon variance formulas and their
//!   asymptotic regimes for all three observables;
//! * [`fieldsim`] - exact Monte-Carlo simulation by count-level binomial
//!   splitting, with reproducible parallel batches;
//! * [`stats`] - empirical Wasserstein/Kolmogorov distances to the standard
//!   Gaussian and log-log rate regression;
//! * [`experiments`] - declarative experiment runner emitting CSV, JSON, and
//!   SVG bundles.
//!
//! Monte-Carlo batches are embarrassingly parallel; the `parallel` feature
//! (on by default) runs them on rayon. Results are bit-identical for any
//! worker count, or with the feature disabled.

pub mod charlier;
pub mod correlations;
pub mod error;
pub mod experiments;
pub mod fieldsim;
pub mod kernels;
pub mod parallel;
pub mod rng;
pub mod stats;
pub mod variance;

pub use error::{Error, Result};
pub use kernels::{FiniteSiteSet, StepLaw};
