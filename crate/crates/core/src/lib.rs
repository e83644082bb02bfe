//! Conditional first-passage-time (FPT) statistics for mortal diffusive searchers.
//!
//! A diffusing searcher with FPT `τ` to a target is "mortal": an independent
//! gamma-distributed inactivation clock `σ` (rate `λ`, shape `β`) may fire
//! first, and only runs with `τ < σ` count. In the fast-inactivation limit the
//! conditional moments collapse onto a universal law,
//!
//! ```text
//! E[τ^m | τ < σ]  ~  (C / λ)^(m/2),        C = L² / (4D),
//! ```
//!
//! where `L` is the geodesic distance from the searcher's starting support to
//! the target (obstacle-avoiding, diffusivity-weighted) and `D` the reference
//! diffusivity. This crate computes those conditional moments four independent
//! ways and cross-validates them:
//!
//! * [`analytic`] — closed forms for the 1D partially-absorbing (Robin) target,
//!   the asymptotic predictors, and the supporting special functions;
//! * [`quadrature`] — the exact ratio-of-integrals identity evaluated from any
//!   CDF by adaptive, underflow-proof quadrature;
//! * [`simulate`] — Euler–Maruyama Monte Carlo with survival weighting, which
//!   stays usable when `P(τ < σ)` is astronomically small;
//! * [`geodesic`] — Euclidean and Riemannian shortest-path lengths on grids
//!   (fast marching for isotropic metrics, wide-stencil Dijkstra otherwise).
//!
//! [`experiments`] orchestrates parameter sweeps across the engines and
//! [`cli`] provides the `condfpt` command-line front end.

pub mod analytic;
pub mod cli;
pub mod experiments;
pub mod geodesic;
pub mod model;
pub mod quadrature;
pub mod simulate;
mod special;

pub use model::{
    ConditionalMomentEstimate, DomainGeometry, DynamicsSpec, InactivationLaw,
    InitialDistribution, Method, ProblemSpec, Reactivity, Shape, TargetSpec,
};
