//! Trapped modes in finite branched waveguides.
//!
//! A waveguide D is a basic domain Ω with unit-width rectangular branches
//! attached along straight interface segments Γ_i. A Dirichlet eigenmode of D
//! is trapped when its eigenvalue lies below the branch cut-off ν₁ = π².
//! The crate provides a variational sufficient condition for trapping, a P1
//! finite element eigensolver for the full domain, and the reduced
//! Dirichlet-to-Neumann eigenproblem on Ω alone.

pub mod bentstrip;
pub mod condition;
pub mod eigensolver;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod mesh;
pub mod optimize;
pub mod quadrature;
pub mod reduced;
pub mod sparse;
pub mod special;
pub mod transverse;

pub use error::{Error, Result};
pub use geometry::{build_domain, parse_domain, BasicDomainSpec, BranchSpec, Side, WaveguideSpec};
pub use mesh::{generate_mesh, Mesh, Region};

/// The branch cut-off ν₁ = π² for unit width.
pub const CUTOFF: f64 = std::f64::consts::PI * std::f64::consts::PI;
