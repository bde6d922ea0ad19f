//! Laboratory for extreme-eigenvalue tails of sparse Gaussian weighted
//! networks.
//!
//! The model: start from an Erdos-Renyi graph `G(n, d/n)` with constant
//! expected degree `d`, put i.i.d. standard Gaussian weights on its edges,
//! and look at the largest eigenvalue `lambda_1` of the resulting symmetric
//! weighted adjacency matrix. The typical scale of `lambda_1` is
//! `sqrt(2 log n)`; this crate is about the large-deviation behaviour around
//! that scale:
//!
//! * [`rate`] evaluates the exact upper-tail rate function, its minimizing
//!   clique sizes, and the transition ladder where the optimal size jumps.
//! * [`graph`] holds weighted graphs, exact spectral and clique machinery at
//!   laboratory scale, and the quadratic-form identities the theory leans on.
//! * [`sampler`] draws networks (plain, truncated, planted) reproducibly.
//! * [`tails`] turns analytic bounds and Monte Carlo runs into comparable
//!   tail estimates with honest confidence intervals.
//! * [`structure`] examines conditioned samples for the predicted
//!   near-clique geometry of the top eigenvector.

pub mod graph;
pub mod rate;
pub mod sampler;
pub mod structure;
pub mod tails;
