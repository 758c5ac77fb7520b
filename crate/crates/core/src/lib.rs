//! Finite-horizon transboundary pollution control on a line.
//!
//! A planner chooses an abatement control `u = p·τ` to minimise the discounted
//! quadratic cost of pollution `p` and abatement, plus a weighted terminal
//! damage, while pollution diffuses in space. The crate provides
//!
//! * the a-spatial linear-quadratic solution ([`aspatial`]),
//! * closed-form local and global solutions on a bounded Neumann interval
//!   ([`spectral`]) and on the real line ([`greens`]),
//! * an independent finite-difference oracle, including a forward-backward
//!   sweep for the coupled optimality system ([`oracle`]),
//! * cost evaluation and checks of the qualitative results ([`analysis`]).
//!
//! Point evaluation of every solution is pure; sampling a solution on a grid
//! is data-parallel when the `parallel` feature is enabled.

pub mod analysis;
pub mod aspatial;
pub mod error;
pub mod grid;
pub mod greens;
pub mod matexp;
pub mod model;
pub mod oracle;
pub mod par;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{make_grid, Grid, PointSolution, Provenance, SolutionField};
pub use matexp::{xi, Mat2, MatExp2};
pub use model::{InitialProfile, ModelParams, SpatialDomain};
pub use par::Execution;
