//! Variable-exponent Sobolev spaces on uniform grids and a mountain-pass
//! solver for nonsmooth `p(x)`-Laplacian problems.

pub mod audit;
pub mod discretization;
pub mod error;
pub mod exec;
pub mod exponent;
pub mod expr;
pub mod grid;
pub mod modular;
pub mod mountain_pass;
pub mod pipeline;
pub mod potential;
pub mod problem;
pub mod rayleigh;
pub mod sampling;
pub mod selftest;

pub use error::{Error, Result};
pub use exec::ExecPolicy;
pub use exponent::{ExponentField, Exponents};
pub use grid::{Grid, GridFunction, Location, NodalField, Sampled};
