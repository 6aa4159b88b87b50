//! Simulation of a system coupled to a harmonic lattice heat bath, its
//! generalized Langevin reduction and the Markovian Langevin limit.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod bath;
pub mod ensemble;
pub mod error;
pub mod gle;
pub mod io;
pub mod kernel;
pub mod langevin;
pub mod noise;
pub mod potential;
pub mod quadrature;
pub mod rng;
pub mod surfaces;
pub mod trajectory;

pub use error::{Error, Result};
pub use rng::{SeedSequence, TrajectoryRng};
pub use trajectory::Trajectory;
