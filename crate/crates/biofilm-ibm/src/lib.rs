//! Immersed-boundary simulation of biofilm deformation and detachment in
//! tube flow.
//!
//! The fluid is an incompressible Navier-Stokes system with spatially
//! varying density and viscosity, discretized with centered differences on
//! a uniform colocated grid and advanced by a projection method whose
//! implicit systems are solved with geometric multigrid. The biofilm is a
//! set of Lagrangian nodes at bacterial cell positions joined by breakable
//! Hookean springs; regularized delta kernels scaled by the cell radius
//! spread force, density, and viscosity onto the grid, and mesh-scaled
//! kernels interpolate velocity back.

pub mod coupling;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod kernels;
pub mod springs;

pub use error::{Result, SimError};
pub mod cli;
pub mod scenario;
pub mod multigrid;
pub mod momentum;
pub mod pressure;
pub mod projection;
pub mod validation;
pub mod output;
