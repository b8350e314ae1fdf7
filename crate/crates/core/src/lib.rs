//! Randomized gossip opinion dynamics with stubborn agents.
//!
//! The crate covers the synchronous Friedkin–Johnsen model and its gossip
//! counterpart, their expected dynamics and fixed points, the parameter
//! mapping between the two, and Monte Carlo checks that time-averaged
//! gossip opinions converge in mean square to the expected fixed point.
//!
//! Modules, bottom-up:
//!
//! - [`linalg`]: dense matrices, linear solves, spectral radius, substochastic stability
//! - [`graph`]: directed social network with self-loops
//! - [`dynamics`]: the two models, expected dynamics and the FJ→gossip mapping
//! - [`sim`]: seeded trajectories and ensembles
//! - [`io`]: model files, result tables and the command implementations

pub mod dynamics;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod sim;
