//! Mountain-pass machinery: the energy and its minimal subgradient, the
//! geometry certificate (a sphere where the energy stays above both path
//! endpoints), and a path-deformation solver for the minimax level.

mod energy;
mod geometry;
pub mod precond;
mod solver;

pub use energy::{Aggregation, ClampRule, Energy, InclusionReport, Residual};
pub use geometry::{
    certify_geometry, sphere_bound_constants, GeometryCertificate, GeometryConfig, GeometryFailure,
    SphereBound, SphereMinimum,
};
pub use solver::{
    solve_mountain_pass, HistoryEntry, PathProfile, SolveError, SolveOutcome, SolverConfig,
};
