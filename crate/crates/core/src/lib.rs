//! Location-aware beam alignment for a line-of-sight link between two
//! uniform linear arrays.
//!
//! The receiver position, estimated by anchor trilateration, predicts the
//! steering angle on both sides; only the beams next to the predicted index
//! are then measured. The crate simulates that search next to a full
//! exhaustive sweep, with a latency model for both.
//!
//! Module map:
//! - [`array`]: steering vectors, beam patterns, codebooks, beamwidth
//! - [`channel`]: rank-one LoS channel, impairments, RSS measurement
//! - [`positioning`]: ranging and trilateration
//! - [`geometry`]: position → angle → beam index → search window
//! - [`alignment`]: exhaustive and location-aware sweeps, latency model
//! - [`mobility`]: receiver trajectories
//! - [`scenario`]: configuration, tracking and misalignment runs, CSV output
//!
//! Data-parallel loops go through [`exec::Execution`]; disable the default
//! `parallel` feature to build without rayon.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alignment;
pub mod array;
pub mod channel;
pub mod cli;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod mobility;
pub mod positioning;
pub mod scenario;

pub use error::{Error, Result};
pub use exec::Execution;
