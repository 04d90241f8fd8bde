//! Simulation and variational toolkit for a boundary-driven symmetric exclusion
//! process with tunable nearest-order interaction.
//!
//! The crate has three layers that cross-validate each other:
//!
//! * microscopic: lattice geometry, jump rates, an exact-in-distribution
//!   kinetic Monte Carlo engine, and a dense-generator reference for tiny
//!   systems ([`lattice`], [`kmc`], [`oracle`]);
//! * macroscopic: cell-centered finite-volume solvers for the hydrostatic
//!   (elliptic) and hydrodynamic (parabolic) equations of the density
//!   ([`mesh`], [`pde`]);
//! * variational: path-space energy, dissipation, and rate functionals, and
//!   upper bounds for the quasi-potential built from interpolation and
//!   time-reversal paths ([`functionals`], [`quasipotential`]).

pub mod boundary;
pub mod error;
pub mod functionals;
pub mod kmc;
pub mod lattice;
pub mod mesh;
pub mod operators;
pub mod oracle;
pub mod params;
pub mod pde;
pub mod quasipotential;
pub mod solver;
pub mod transport;

pub use boundary::{BoundaryProfile, Face, FaceValues};
pub use error::Error;
pub use mesh::{DensityField, Mesh, Trajectory};
pub use params::ModelParams;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// Version of this library, for embedding in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
