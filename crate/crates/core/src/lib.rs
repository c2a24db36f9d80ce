//! Two-dimensional finite elements for quasi-static Biot poroelasticity with
//! frictionless unilateral (Signorini) contact on part of the boundary.
//!
//! The flow problem is discretized with lowest-order Raviart-Thomas fluxes and
//! piecewise-constant pressures, the mechanics problem with vector P1
//! displacements subject to nodal contact constraints. Within each backward
//! Euler time step the two subproblems are coupled by a stabilized
//! fixed-stress iteration: a regularized mixed flow solve followed by a
//! variational-inequality mechanics solve. The iteration contracts the
//! volumetric mean total stress with a computable factor, and the library
//! monitors that contraction on every run.
//!
//! Entry points:
//! - [`mesh::build_rect_mesh`] / [`mesh::read_mesh`] for meshes,
//! - [`fixed_stress::Simulator`] for time stepping,
//! - [`oracle::MonolithicSolver`] for the fully implicit reference solve,
//! - [`validate`] for manufactured-solution and consolidation benchmarks,
//! - [`cli::run_cli`] for the command-line front end.
//!
//! The `examples/` directory of this crate has one runnable program per major
//! capability; start with `cargo run --example contraction_demo`.

pub mod assembly;
pub mod cli;
pub mod config;
pub mod contact;
pub mod error;
pub mod expr;
pub mod fespace;
pub mod fixed_stress;
pub mod flow;
pub mod linalg;
pub mod mesh;
pub mod norms;
pub mod oracle;
pub mod output;
pub mod validate;

pub use error::Error;
pub use mesh::{build_rect_mesh, read_mesh, write_mesh, BoundaryTag, Mesh, Rect, SideTags};

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
