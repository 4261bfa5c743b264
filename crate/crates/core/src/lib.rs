//! Complex-time singularities of Lax equations: ODE continuation, finite
//! Toeplitz sections and elliptic lattices.

pub mod elliptic;
pub mod error;
pub mod flowint;
pub mod laxcore;
pub mod linalg;
pub mod numeric;
mod ode;
pub mod singlattice;
pub mod surfaces;
pub mod toeplitz;
pub mod verify;

pub use error::{Error, Result};
pub use flowint::{PathSpec, PoleEstimate};
pub use laxcore::{LaurentMatrixPoly, LaxConfig, P0Weights};
pub use numeric::{Lattice, Window};
