//! Lie-bracket control of driftless systems by time-division multiplexing.
//!
//! - [`vectorfield`]: vector fields, Jacobians, Lie brackets, span rank.
//! - [`multiplexer`]: the four-leg input cycle realizing `a₁f + a₂g + a₃[f,g]`.
//! - [`simulator`]: fixed-step integration, trajectories and metrics.
//! - [`dubins`]: first/second-order Dubins cars and their controllers.

pub mod dubins;
pub mod error;
pub mod multiplexer;
pub mod simulator;
pub mod vectorfield;

pub use error::{Error, Result};
pub use multiplexer::{cycle_params, BracketCommand, CycleParams, MuxState, MuxTick};
pub use simulator::{mean_velocity, simulate, tracking_error, Actuation, Component, Method, SimConfig, Trajectory};
pub use vectorfield::{jacobi_residual, jacobian_at, lie_bracket, lie_span_rank, JacobianEstimate, VectorField};
