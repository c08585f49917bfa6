//! Spatially homogeneous Einstein-Maxwell-Boltzmann system with a massive
//! scalar field on flat FLRW spacetime.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod collision;
pub mod config;
pub mod cosmo;
pub(crate) mod interp;
pub mod phase_space;
pub mod solver;
pub mod sphere;
pub mod trajectory;
pub mod transport;
pub mod verify;

pub use cli::{execute, run, Outcome};
pub use collision::{BuiltinKernel, CollisionConfig, CollisionError, Kernel};
pub use config::{load_config, ConfigError, RunConfig};
pub use cosmo::{CosmoError, CosmoState, Moments, PhysParams};
pub use interp::tricubic;
pub use phase_space::{make_grid, GridError, GridFunction, MomentumGrid, SobolevParams, Vec3};
pub use solver::{SolveConfig, SolverError};
pub use sphere::SphereQuadrature;
pub use trajectory::{SolveStatus, Trajectory};
