//! Dynamics of a predator-prey system with handling and searching predators.
//!
//! The full model tracks prey `N` together with searching (`P_S`) and
//! handling (`P_H`) predators. When the handling/searching exchange is fast
//! (`rho = chi/eps`, `gamma = 1/eps`, `eps -> 0`) its solutions converge to
//! the Rosenzweig-MacArthur model with a Holling type II functional response.
//! This crate provides:
//!
//! - [`model`]: parameter/state records, vector fields, and Jacobians for the
//!   full, scaled, reduced, and exponent-generalized models;
//! - [`analysis`]: closed-form equilibria, assumption checks, Routh-Hurwitz
//!   and eigenvalue stability classification, dissipativity constants, and
//!   Lyapunov machinery for the extinction regime;
//! - [`integrator`]: an adaptive Dormand-Prince 5(4) integrator with PI step
//!   control and dense output, robust down to exchange scales `eps = 1e-4`;
//! - [`experiments`]: numerical reproduction of the dynamical claims
//!   (singular-limit convergence, extinction, persistence, limit cycles);
//! - [`fitting`]: least-squares estimation of reduced-model parameters
//!   against the 1900-1920 Hudson Bay hare-lynx record;
//! - [`sampling`]: random parameter/state generation for numerical studies.

pub mod analysis;
pub mod baselines;
pub mod error;
pub mod experiments;
pub mod fitting;
pub mod integrator;
pub mod model;
pub mod sampling;

pub use error::{Error, Result};
